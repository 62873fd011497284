"""Random geometric graph topologies and edge-disjoint path discovery."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError
from .rng import SeedLike, as_generator

Edge = tuple[int, int]

MAX_RADIUS = math.sqrt(2.0)
DEFAULT_MAX_PATHS = 16


def _canon(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Network:
    """Static undirected topology on the unit square.

    ``edges`` holds canonical ``(i, j)`` pairs with ``i < j``; ``lengths[e]`` is
    the Euclidean length of ``edges[e]``. Edge ids are positions in ``edges``.
    """

    positions: np.ndarray
    edges: tuple[Edge, ...]
    lengths: np.ndarray
    radius: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "edges", tuple(_canon(int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "lengths", np.asarray(self.lengths, dtype=float).reshape(-1))
        if len(self.lengths) != len(self.edges):
            raise ParameterError("lengths and edges differ in size")
        n = len(pos)
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ParameterError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ParameterError(f"edge ({u}, {v}) references a missing node")
            if (u, v) in seen:
                raise ParameterError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, positions, edges: Iterable[Sequence[int]], radius: float) -> "Network":
        """Build a network whose lengths are taken from the positions."""
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        edges = [_canon(int(u), int(v)) for u, v in edges]
        if edges:
            idx = np.asarray(edges)
            lengths = np.hypot(*(pos[idx[:, 0]] - pos[idx[:, 1]]).T)
        else:
            lengths = np.zeros(0)
        if np.any(lengths > radius):
            raise ParameterError("an edge is longer than the connection radius")
        return cls(pos, tuple(edges), lengths, float(radius))

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Neighbour lists in ascending node-id order."""
        nbrs: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency])

    def distance(self, u: int, v: int) -> float:
        return float(np.hypot(*(self.positions[u] - self.positions[v])))

    def to_dict(self) -> dict:
        return {
            "nodes": self.positions.tolist(),
            "edges": [list(e) for e in self.edges],
            "radius": self.radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        return cls.from_edges(data["nodes"], data["edges"], data["radius"])

    def save(self, path) -> None:
        FsPath(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_dict(json.loads(FsPath(path).read_text()))


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]
    length: float = 0.0

    @property
    def hops(self) -> int:
        return len(self.edges)

    @classmethod
    def from_nodes(cls, net: Network, nodes: Sequence[int]) -> "Path":
        nodes = tuple(int(v) for v in nodes)
        edges = tuple(_canon(u, v) for u, v in zip(nodes, nodes[1:]))
        index = net.edge_index
        missing = [e for e in edges if e not in index]
        if missing:
            raise ParameterError(f"path uses edges not in the network: {missing}")
        if len(set(edges)) != len(edges):
            raise ParameterError("path repeats an edge")
        length = float(sum(net.lengths[index[e]] for e in edges))
        return cls(nodes, edges, length)

    def edge_ids(self, net: Network) -> list[int]:
        index = net.edge_index
        return [index[e] for e in self.edges]


@dataclass(frozen=True)
class PathSet:
    source: int
    destination: int
    paths: tuple[Path, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def hops(self) -> list[int]:
        return [p.hops for p in self.paths]


def generate_rgg(n_nodes: int, radius: float, seed: SeedLike) -> Network:
    """Uniform random geometric graph on the unit square.

    A radius above sqrt(2) is clamped to sqrt(2); at that value every pair of
    points in the square is already within range.
    """
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise ParameterError(f"n_nodes must be an integer >= 2, got {n_nodes!r}")
    if not (math.isfinite(radius) and radius > 0):
        raise ParameterError(f"radius must be positive and finite, got {radius!r}")
    radius = min(float(radius), MAX_RADIUS)
    rng = as_generator(seed)
    pos = rng.random((int(n_nodes), 2))
    # slightly inflated query, then exact filter on our own length computation
    pairs = cKDTree(pos).query_pairs(radius * (1 + 1e-9), output_type="ndarray")
    if len(pairs):
        pairs = np.sort(pairs, axis=1)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        lengths = np.hypot(*(pos[pairs[:, 0]] - pos[pairs[:, 1]]).T)
        keep = lengths <= radius
        pairs, lengths = pairs[keep], lengths[keep]
    else:
        pairs, lengths = np.zeros((0, 2), dtype=int), np.zeros(0)
    edges = tuple((int(u), int(v)) for u, v in pairs)
    return Network(pos, edges, lengths, radius)


def connectivity_threshold(n_nodes: int) -> float:
    """Radius above which an RGG on the unit square is connected w.h.p."""
    return math.sqrt(math.log(n_nodes) / (math.pi * n_nodes))


def is_connected(net: Network) -> bool:
    n = net.n_nodes
    if n == 0:
        return True
    adj = net.adjacency
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def _bfs_path(adj, blocked: set, src: int, dst: int) -> list[int] | None:
    """Shortest hop path avoiding ``blocked`` edges; neighbours scanned in id order."""
    parent = {src: src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v in parent:
                continue
            if ((u, v) if u < v else (v, u)) in blocked:
                continue
            parent[v] = u
            if v == dst:
                nodes = [v]
                while v != src:
                    v = parent[v]
                    nodes.append(v)
                nodes.reverse()
                return nodes
            queue.append(v)
    return None


def _sort_key(p: Path):
    return (p.hops, p.length, p.nodes)


def disjoint_paths_avoiding(
    net: Network,
    src: int,
    dst: int,
    max_paths: int = DEFAULT_MAX_PATHS,
    blocked: Iterable[Edge] = (),
) -> PathSet:
    """Greedy successive shortest paths, treating ``blocked`` edges as absent.

    Each round takes a BFS shortest path on the residual graph and removes its
    edges. This can return fewer paths than a max-flow decomposition would.
    """
    n = net.n_nodes
    if not (0 <= src < n and 0 <= dst < n):
        raise ParameterError(f"node ids must lie in [0, {n}), got {src}, {dst}")
    if src == dst:
        raise ParameterError("source and destination must differ")
    if max_paths < 1:
        raise ParameterError("max_paths must be positive")
    removed = set(blocked)
    adj = net.adjacency
    found: list[Path] = []
    while len(found) < max_paths:
        nodes = _bfs_path(adj, removed, src, dst)
        if nodes is None:
            break
        path = Path.from_nodes(net, nodes)
        removed.update(path.edges)
        found.append(path)
    found.sort(key=_sort_key)
    return PathSet(src, dst, tuple(found))


def edge_disjoint_paths(net: Network, src: int, dst: int, max_paths: int = DEFAULT_MAX_PATHS) -> PathSet:
    """Edge-disjoint ``src``-``dst`` paths ordered by hop count.

    Ties on hop count break by total Euclidean length, then by node sequence.
    An unreachable destination gives an empty set.
    """
    return disjoint_paths_avoiding(net, src, dst, max_paths)


def feasible_subgraph(net: Network, caps) -> Network:
    """Keep only the edges holding at least one entangled pair."""
    counts = np.asarray(getattr(caps, "counts", caps))
    if counts.shape != (net.n_edges,):
        raise ParameterError(f"capacity vector has shape {counts.shape}, network has {net.n_edges} edges")
    keep = np.flatnonzero(counts >= 1)
    return Network(net.positions, tuple(net.edges[i] for i in keep), net.lengths[keep], net.radius)
