"""Windowed Monte-Carlo simulation of tournament routing.

A window has two phases. *Preparation* draws link capacities, picks the S-D
pair(s) and finds their edge-disjoint paths on the feasible subgraph; none of
that depends on the bias ``gamma``. *Routing* then serves the requests for a
given ``gamma`` and load. Sweeps prepare each window once and route it for every
grid point, so all grid points share the same random numbers (common random
numbers), and the routing uniforms themselves are keyed to the window so that
``gamma`` only moves the left/right thresholds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import rng as rngmod
from .channel import ChannelParams, sample_capacities
from .errors import ParameterError
from .netgraph import DEFAULT_MAX_PATHS, Network, PathSet, disjoint_paths_avoiding, generate_rgg
from .tournament import build_tree

GAMMA_GRID = tuple(round(float(g), 10) for g in np.linspace(0.02, 0.98, 13))
SERVE_ORDERS = ("round_robin", "sequential")


@dataclass(frozen=True)
class ExperimentConfig:
    n_nodes: int = 500
    radius: float = 0.105
    alpha: float = 1.0
    c0: int = 5
    p_swap: float = 0.95
    f_r: int = 20
    windows: int = 1000
    gammas: tuple[float, ...] = GAMMA_GRID
    pairs: int = 1
    max_paths: int = DEFAULT_MAX_PATHS
    seed: int = 0
    n_topologies: int = 1
    serve_order: str = "round_robin"

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        for name in ("n_nodes", "f_r", "windows", "pairs", "max_paths", "n_topologies"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n_nodes < 2:
            raise ParameterError("n_nodes must be at least 2")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ParameterError(f"radius must be positive, got {self.radius!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not self.gammas:
            raise ParameterError("gammas must not be empty")
        for g in self.gammas:
            if not 0.0 <= g <= 1.0:
                raise ParameterError(f"gammas must lie in [0, 1], got {g!r}")
        if self.serve_order not in SERVE_ORDERS:
            raise ParameterError(f"serve_order must be one of {SERVE_ORDERS}, got {self.serve_order!r}")
        self.channel  # validates alpha, c0, p_swap

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(self.alpha, self.c0, self.p_swap)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gammas"] = list(self.gammas)
        return d

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class PreparedWindow:
    """Everything about a window that does not depend on gamma or the load."""

    index: int
    net: Network
    pairs: tuple[tuple[int, int], ...]
    capacity: np.ndarray
    pathsets: tuple[PathSet, ...]
    path_edge_ids: tuple[tuple[tuple[int, ...], ...], ...]
    routing_seed: np.random.SeedSequence
    depth_cap: int

    @property
    def n_paths(self) -> tuple[int, ...]:
        return tuple(len(ps) for ps in self.pathsets)

    @property
    def hops(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(ps.hops) for ps in self.pathsets)

    def pair_distance(self, j: int = 0) -> float:
        return self.net.distance(*self.pairs[j])


@dataclass(frozen=True)
class WindowResult:
    n_paths: tuple[int, ...]
    served: tuple[tuple[int, ...], ...]
    hops: tuple[tuple[int, ...], ...]
    pair_throughput: tuple[float, ...]
    throughput: float
    initial_capacity: np.ndarray | None = None
    residual_capacity: np.ndarray | None = None
    # (pair, path rank, accepted, residual capacities on the path before the decision)
    events: tuple | None = None

    @property
    def n_t(self) -> int:
        return self.n_paths[0]

    @property
    def u(self) -> tuple[int, ...]:
        return self.served[0]

    @property
    def served_total(self) -> int:
        return sum(sum(s) for s in self.served)


def _depth_cap(max_paths: int) -> int:
    return max(1, math.ceil(math.log2(max_paths))) if max_paths > 1 else 1


def prepare_window(
    net: Network,
    pairs: Sequence[tuple[int, int]],
    channel: ChannelParams,
    seed: rngmod.SeedLike,
    max_paths: int = DEFAULT_MAX_PATHS,
    index: int = 0,
) -> PreparedWindow:
    """Sample capacities and compute every pair's path set on the feasible subgraph."""
    if not pairs:
        raise ParameterError("at least one S-D pair is required")
    cap_seed, routing_seed = rngmod.split_seeds(seed, 2)
    caps = sample_capacities(net, channel, np.random.default_rng(cap_seed)).counts
    # zero-capacity edges are excluded, which is the feasible subgraph
    blocked = {net.edges[e] for e in np.flatnonzero(caps < 1)}
    pathsets = []
    edge_ids = []
    for src, dst in pairs:
        ps = disjoint_paths_avoiding(net, int(src), int(dst), max_paths, blocked)
        pathsets.append(ps)
        edge_ids.append(tuple(tuple(p.edge_ids(net)) for p in ps.paths))
    return PreparedWindow(
        index=index,
        net=net,
        pairs=tuple((int(s), int(d)) for s, d in pairs),
        capacity=caps.astype(np.int16),
        pathsets=tuple(pathsets),
        path_edge_ids=tuple(edge_ids),
        routing_seed=routing_seed,
        depth_cap=_depth_cap(max_paths),
    )


def route_window(
    prep: PreparedWindow,
    gamma: float,
    f_r: int,
    p_swap: float,
    n_pairs: int | None = None,
    serve_order: str = "round_robin",
    keep_state: bool = False,
) -> WindowResult:
    """Serve ``f_r`` requests per pair through the tournament on one prepared window.

    A request whose selected path lacks a pair on any edge is dropped. Every
    pair draws its walk uniforms from its own stream, so a pair's choices do not
    depend on how many other pairs share the window.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma!r}")
    if f_r < 0:
        raise ParameterError("f_r must be non-negative")
    R = len(prep.pairs) if n_pairs is None else int(n_pairs)
    if not 1 <= R <= len(prep.pairs):
        raise ParameterError(f"n_pairs must lie in [1, {len(prep.pairs)}]")
    edge_ids = prep.path_edge_ids[:R]
    used = {e for paths in edge_ids for p in paths for e in p}
    caps = {e: int(prep.capacity[e]) for e in used}

    trees = [build_tree(len(paths)) if paths else None for paths in edge_ids]
    uniforms = [
        np.random.default_rng(rngmod.child_seed(prep.routing_seed, j)).random((f_r, prep.depth_cap)).tolist()
        for j in range(R)
    ]
    served = [[0] * len(paths) for paths in edge_ids]
    events = [] if keep_state else None

    if serve_order == "round_robin":
        schedule = ((j, s) for s in range(f_r) for j in range(R))
    elif serve_order == "sequential":
        schedule = ((j, s) for j in range(R) for s in range(f_r))
    else:
        raise ParameterError(f"unknown serve_order {serve_order!r}")

    for j, s in schedule:
        tree = trees[j]
        if tree is None:
            continue
        i = tree.walk(gamma, uniforms[j][s])
        path = edge_ids[j][i]
        ok = all(caps[e] >= 1 for e in path)
        if events is not None:
            events.append((j, i, ok, tuple(caps[e] for e in path)))
        if ok:
            for e in path:
                caps[e] -= 1
            served[j][i] += 1

    hops = prep.hops[:R]
    weights = [[p_swap ** (h - 1) for h in hs] for hs in hops]
    pair_tr = tuple(math.fsum(u * w for u, w in zip(sv, ws)) for sv, ws in zip(served, weights))
    initial = residual = None
    if keep_state:
        initial = prep.capacity.astype(np.int64)
        residual = initial.copy()
        for e, c in caps.items():
            residual[e] = c
    return WindowResult(
        n_paths=prep.n_paths[:R],
        served=tuple(tuple(s) for s in served),
        hops=hops,
        pair_throughput=pair_tr,
        throughput=math.fsum(pair_tr),
        initial_capacity=initial,
        residual_capacity=residual,
        events=tuple(events) if events is not None else None,
    )


def run_window(net: Network, src: int, dst: int, gamma: float, config: ExperimentConfig, seed) -> WindowResult:
    """One window for a single S-D pair."""
    if src == dst:
        raise ParameterError("source and destination must differ")
    prep = prepare_window(net, [(src, dst)], config.channel, seed, config.max_paths)
    return route_window(prep, gamma, config.f_r, config.p_swap, keep_state=True)


def run_multi_pair_window(
    net: Network, pairs: Sequence[tuple[int, int]], gamma: float, config: ExperimentConfig, seed
) -> WindowResult:
    """One window with several S-D pairs drawing on one shared capacity pool.

    Each pair keeps its own path set and tournament, computed at window start.
    """
    for s, d in pairs:
        if s == d:
            raise ParameterError(f"pair ({s}, {d}) has identical endpoints")
    prep = prepare_window(net, pairs, config.channel, seed, config.max_paths)
    return route_window(prep, gamma, config.f_r, config.p_swap, serve_order=config.serve_order, keep_state=True)


# --- ensembles and sweeps -------------------------------------------------


@lru_cache(maxsize=64)
def topology(n_nodes: int, radius: float, seed: int, k: int = 0) -> Network:
    """The ``k``-th topology of a run; cached so adjacency is built once."""
    return generate_rgg(n_nodes, radius, rngmod.derive_rng(seed, rngmod.TOPOLOGY, k))


def draw_pairs(n_nodes: int, count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    pairs = []
    for _ in range(count):
        s, d = rng.choice(n_nodes, size=2, replace=False)
        pairs.append((int(s), int(d)))
    return pairs


def iter_windows(
    config: ExperimentConfig, n_windows: int | None = None, n_pairs: int | None = None, start: int = 0
) -> Iterator[PreparedWindow]:
    """Yield windows ``start .. start + n_windows - 1`` of a run one at a time.

    Window ``t`` uses topology ``t mod n_topologies`` and seeds keyed on ``t``
    alone, so any sub-range reproduces the same windows as the full run.
    """
    n_windows = config.windows if n_windows is None else n_windows
    n_pairs = config.pairs if n_pairs is None else n_pairs
    for t in range(start, start + n_windows):
        net = topology(config.n_nodes, config.radius, config.seed, t % config.n_topologies)
        pairs = draw_pairs(net.n_nodes, n_pairs, rngmod.derive_rng(config.seed, rngmod.PAIRS, t))
        seed = rngmod.derive_seed(config.seed, rngmod.CAPACITY, t)
        yield prepare_window(net, pairs, config.channel, seed, config.max_paths, index=t)


def prepare_ensemble(
    config: ExperimentConfig, n_windows: int | None = None, n_pairs: int | None = None, start: int = 0
) -> list[PreparedWindow]:
    """All windows of :func:`iter_windows` as a list."""
    return list(iter_windows(config, n_windows, n_pairs, start))


@dataclass
class SweepSummary:
    """Per-window throughput for every grid point; row ``g`` belongs to ``gammas[g]``."""

    gammas: tuple[float, ...]
    throughput: np.ndarray
    n_paths: np.ndarray
    served: list[list[tuple[int, ...]]]
    f_r: int
    n_pairs: int = 1
    pair_distance: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def windows(self) -> int:
        return self.throughput.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.throughput.mean(axis=1)

    @property
    def std(self) -> np.ndarray:
        if self.windows < 2:
            return np.zeros(len(self.gammas))
        return self.throughput.std(axis=1, ddof=1)

    @property
    def sem(self) -> np.ndarray:
        return self.std / math.sqrt(self.windows)

    @property
    def served_total(self) -> np.ndarray:
        return np.array([[sum(u) for u in row] for row in self.served], dtype=int)

    def argmax(self) -> int:
        return int(np.argmax(self.mean))

    def row(self, gamma: float) -> int:
        for g, value in enumerate(self.gammas):
            if abs(value - gamma) < 1e-12:
                return g
        raise KeyError(gamma)


def sweep_ensemble(
    windows: Sequence[PreparedWindow],
    gammas: Sequence[float],
    f_r: int,
    p_swap: float,
    n_pairs: int = 1,
    serve_order: str = "round_robin",
) -> SweepSummary:
    gammas = tuple(float(g) for g in gammas)
    T = len(windows)
    tr = np.zeros((len(gammas), T))
    served: list[list[tuple[int, ...]]] = []
    for g, gamma in enumerate(gammas):
        row = []
        for t, prep in enumerate(windows):
            res = route_window(prep, gamma, f_r, p_swap, n_pairs=n_pairs, serve_order=serve_order)
            tr[g, t] = res.throughput
            row.append(res.served[0] if n_pairs == 1 else tuple(x for s in res.served for x in s))
        served.append(row)
    n_paths = np.array([sum(w.n_paths[:n_pairs]) for w in windows], dtype=int)
    dist = np.array([w.pair_distance(0) for w in windows])
    return SweepSummary(gammas, tr, n_paths, served, f_r, n_pairs, dist)


def run_sweep(config: ExperimentConfig, windows: Sequence[PreparedWindow] | None = None) -> SweepSummary:
    """Mean throughput over ``config.windows`` random single-pair windows for each gamma."""
    if windows is None:
        windows = prepare_ensemble(config, n_pairs=1)
    return sweep_ensemble(windows, config.gammas, config.f_r, config.p_swap, 1)


def run_multipair_sweep(
    config: ExperimentConfig,
    pair_counts: Sequence[int],
    windows: Sequence[PreparedWindow] | None = None,
) -> dict[int, SweepSummary]:
    """Sweep gamma for each number of concurrent pairs ``R``.

    Windows are prepared once with ``max(pair_counts)`` pairs; a run with ``R``
    pairs serves the first ``R`` of them.
    """
    r_max = max(pair_counts)
    if windows is None:
        windows = prepare_ensemble(config, n_pairs=r_max)
    return {
        R: sweep_ensemble(windows, config.gammas, config.f_r, config.p_swap, R, config.serve_order)
        for R in pair_counts
    }


@dataclass
class DistanceTable:
    gammas: tuple[float, ...]
    bin_edges: np.ndarray
    mean: np.ndarray  # (gamma, bin); NaN where the bin is empty
    counts: np.ndarray

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def occupied(self, min_count: int = 1) -> np.ndarray:
        return self.counts >= min_count


def bin_by_distance(summary: SweepSummary, n_bins: int = 12) -> DistanceTable:
    """Average per-window throughput in equal-width bins of S-D separation."""
    if n_bins < 2:
        raise ParameterError("n_bins must be at least 2")
    d = summary.pair_distance
    lo, hi = float(d.min()), float(d.max())
    if hi - lo < 1e-12:
        hi = lo + 1e-9
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    mean = np.full((len(summary.gammas), n_bins), np.nan)
    for b in np.flatnonzero(counts):
        mean[:, b] = summary.throughput[:, idx == b].mean(axis=1)
    return DistanceTable(summary.gammas, edges, mean, counts)


def run_distance_sweep(
    config: ExperimentConfig, n_bins: int = 12, windows: Sequence[PreparedWindow] | None = None
) -> DistanceTable:
    return bin_by_distance(run_sweep(config, windows), n_bins)
