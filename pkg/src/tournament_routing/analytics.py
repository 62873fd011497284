"""Closed-form expected throughput of tournament routing and its bounds.

The model is a mixture of *scenarios*. A scenario is a probability together
with an ordered list of candidate paths, each carrying a swap weight and the
pmf of its effective capacity (the minimum pair count over its hops). Two
constructors build scenarios:

* ``ThroughputModel.averaged`` uses one scenario per path count ``n`` with
  weight ``Pi_n``, hop counts from a rank profile and one scalar hop success
  probability for every link;
* ``ThroughputModel.exact`` takes the per-edge success probabilities of a
  fixed set of disjoint paths and enumerates which of them survive into the
  feasible subgraph (a path survives when each of its edges holds a pair).

All quantities for a scenario reduce to the per-path function
``F(p) = E[min(N, C_eff)]`` with ``N ~ Binomial(f_r, p)``, written as
``sum_l P(N >= l) P(C_eff >= l)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, xlog1py, xlogy

from .errors import BoundViolationError, ConvergenceError, ParameterError
from .tournament import TournamentTree, build_tree, gamma_star_bounds, selection_probabilities


# --- binomial building blocks ---------------------------------------------


def binomial_pmf(n: int, p) -> np.ndarray:
    """Binomial pmf over ``0..n``, evaluated in log space.

    ``p`` may be a scalar or a 1-D array; the result then has shape
    ``(len(p), n + 1)``.
    """
    if n < 0:
        raise ParameterError("n must be non-negative")
    p = np.asarray(p, dtype=float)
    k = np.arange(n + 1, dtype=float)
    log_comb = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    pp = p[..., None]
    return np.exp(log_comb + xlogy(k, pp) + xlog1py(n - k, -pp))


def binomial_tails(n: int, p) -> np.ndarray:
    """``P(X >= c)`` for ``c = 0..n+1`` with ``X ~ Binomial(n, p)``.

    Summed from the upper end so small tails keep their relative accuracy.
    """
    pmf = binomial_pmf(n, p)
    tails = np.flip(np.cumsum(np.flip(pmf, -1), -1), -1)
    tails = np.minimum(tails, 1.0)
    tails[..., 0] = 1.0
    zero = np.zeros(pmf.shape[:-1] + (1,))
    return np.concatenate([tails, zero], axis=-1)


def binomial_tail(c: int, c0: int, p: float) -> float:
    """``P(Binomial(c0, p) >= c)`` with ``Q(0) = 1`` and ``Q(c0 + 1) = 0``."""
    if not 0 <= c <= c0 + 1:
        raise ParameterError(f"c must lie in [0, {c0 + 1}], got {c}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    return float(binomial_tails(c0, p)[c])


def ceff_pmf(hop_probs: Sequence[float], c0: int) -> np.ndarray:
    """pmf of the minimum of independent ``Binomial(c0, p_j)`` hop capacities."""
    hop_probs = list(hop_probs)
    if not hop_probs:
        raise ParameterError("a path needs at least one hop")
    joint = np.prod(binomial_tails(c0, np.asarray(hop_probs)), axis=0)
    return joint[:-1] - joint[1:]


def tail_sum_S(f_r: int, p_sel: float, c: int) -> float:
    """``E[min(N, c)]`` for ``N ~ Binomial(f_r, p_sel)``."""
    if f_r < 0 or c < 0:
        raise ParameterError("f_r and c must be non-negative")
    if c == 0 or f_r == 0:
        return 0.0
    tails = binomial_tails(f_r, p_sel)
    return float(math.fsum(tails[1 : min(c, f_r) + 1]))


# --- model inputs -----------------------------------------------------------


@dataclass(frozen=True)
class HopProfile:
    """Hop count per path rank (rank 1 first) plus the link and swap success.

    Weights use the hop counts as given, which may be fitted reals; capacity
    tails need an integral number of hops and use the rounded value (at least 1).
    """

    hops: tuple[float, ...]
    p: float
    p_swap: float

    def __post_init__(self):
        object.__setattr__(self, "hops", tuple(float(h) for h in self.hops))
        if not self.hops:
            raise ParameterError("profile needs at least one rank")
        if any(h <= 0 for h in self.hops):
            raise ParameterError("hop counts must be positive")
        if any(b < a - 1e-12 for a, b in zip(self.hops, self.hops[1:])):
            raise ParameterError("hop counts must be nondecreasing in rank")
        if not 0.0 < self.p <= 1.0:
            raise ParameterError(f"hop success must lie in (0, 1], got {self.p}")
        if not 0.0 <= self.p_swap <= 1.0:
            raise ParameterError(f"p_swap must lie in [0, 1], got {self.p_swap}")

    @property
    def weights(self) -> np.ndarray:
        return self.p_swap ** (np.asarray(self.hops) - 1.0)

    @property
    def structural_hops(self) -> tuple[int, ...]:
        return tuple(max(1, int(round(h))) for h in self.hops)

    @classmethod
    def from_fit(cls, h1: float, c: float, beta: float, n_ranks: int, p: float, p_swap: float) -> "HopProfile":
        i = np.arange(1, n_ranks + 1, dtype=float)
        hops = h1 + c * i**beta
        hops[0] = h1
        return cls(tuple(np.maximum.accumulate(hops)), p, p_swap)


@dataclass(frozen=True)
class PathCountDistribution:
    """Distribution of the number of disjoint paths per window."""

    probs: Mapping[int, float]

    def __post_init__(self):
        probs = {int(n): float(v) for n, v in self.probs.items() if v != 0}
        if any(n < 0 for n in probs) or any(v < 0 for v in probs.values()):
            raise ParameterError("path counts and probabilities must be non-negative")
        if abs(math.fsum(probs.values()) - 1.0) > 1e-12:
            raise ParameterError("path-count probabilities must sum to 1")
        object.__setattr__(self, "probs", dict(sorted(probs.items())))

    @classmethod
    def from_counts(cls, n_paths: Sequence[int], max_paths: int | None = None) -> "PathCountDistribution":
        n_paths = np.asarray(n_paths, dtype=int)
        if max_paths is not None:
            n_paths = np.minimum(n_paths, max_paths)
        hist = np.bincount(n_paths)
        total = hist.sum()
        probs = {n: c / total for n, c in enumerate(hist) if c}
        # renormalise with fsum so the 1e-12 check is not at the mercy of rounding
        s = math.fsum(probs.values())
        return cls({n: v / s for n, v in probs.items()})

    @classmethod
    def point(cls, n: int) -> "PathCountDistribution":
        return cls({n: 1.0})

    @property
    def max_n(self) -> int:
        return max(self.probs)


@dataclass(frozen=True)
class PathModel:
    weight: float
    ceff: np.ndarray

    @property
    def survival(self) -> np.ndarray:
        """``P(C_eff >= l)`` for ``l = 1..c0``."""
        return np.flip(np.cumsum(np.flip(self.ceff)))[1:]

    @property
    def mean_capacity(self) -> float:
        return float(math.fsum(self.survival))


@dataclass(frozen=True)
class Scenario:
    prob: float
    paths: tuple[PathModel, ...]
    tree: TournamentTree | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.paths and self.tree is None:
            object.__setattr__(self, "tree", build_tree(len(self.paths)))


@dataclass(frozen=True)
class GammaOptimum:
    gamma: float
    method: str
    iterations: int
    residual: float


# --- the model --------------------------------------------------------------


class ThroughputModel:
    """Expected swap-weighted throughput as a function of the tournament bias."""

    def __init__(self, scenarios: Sequence[Scenario], c0: int):
        self.scenarios = tuple(s for s in scenarios if s.prob > 0)
        self.c0 = int(c0)
        total = math.fsum(s.prob for s in self.scenarios)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"scenario probabilities sum to {total}, expected 1")
        self._active = [s for s in self.scenarios if s.paths]
        self._packed = [
            (
                s.prob,
                np.array([pm.weight for pm in s.paths]),
                np.array([pm.survival for pm in s.paths]),
                np.array(s.tree.depths, dtype=float),
                np.array(s.tree.lefts, dtype=float),
                s.tree,
            )
            for s in self._active
        ]

    @classmethod
    def averaged(cls, Pi: PathCountDistribution, profile: HopProfile, c0: int) -> "ThroughputModel":
        if Pi.max_n > len(profile.hops):
            raise ParameterError(f"profile covers {len(profile.hops)} ranks but Pi reaches n={Pi.max_n}")
        weights = profile.weights
        models = [
            PathModel(float(w), ceff_pmf([profile.p] * h, c0))
            for w, h in zip(weights, profile.structural_hops)
        ]
        return cls([Scenario(prob, tuple(models[:n])) for n, prob in Pi.probs.items()], c0)

    @classmethod
    def exact(
        cls,
        path_edge_probs: Sequence[Sequence[float]],
        p_swap: float,
        c0: int,
        condition_on_feasible: bool = True,
    ) -> "ThroughputModel":
        """Exact model for a fixed, ordered family of edge-disjoint paths.

        With ``condition_on_feasible`` the family is thinned window by window to
        the paths whose every edge holds a pair, as the simulator does when it
        searches the feasible subgraph; this matches the simulator whenever the
        family is the complete set of S-D routes (e.g. parallel chains).
        """
        pmfs = [ceff_pmf(probs, c0) for probs in path_edge_probs]
        weights = [p_swap ** (len(probs) - 1) for probs in path_edge_probs]
        if not condition_on_feasible:
            paths = tuple(PathModel(w, f) for w, f in zip(weights, pmfs))
            return cls([Scenario(1.0, paths)], c0)
        alive = [1.0 - f[0] for f in pmfs]
        conditional = []
        for f, a in zip(pmfs, alive):
            g = f.copy()
            g[0] = 0.0
            conditional.append(g / a if a > 0 else g)
        scenarios = []
        n = len(pmfs)
        for mask in itertools.product((True, False), repeat=n):
            prob = math.prod(a if keep else 1.0 - a for keep, a in zip(mask, alive))
            if prob == 0:
                continue
            paths = tuple(PathModel(weights[i], conditional[i]) for i in range(n) if mask[i])
            scenarios.append(Scenario(prob, paths))
        return cls(scenarios, c0)

    # per-scenario kernels

    @staticmethod
    def _probs(depths, lefts, gamma):
        return np.exp(xlogy(lefts, gamma) + xlog1py(depths - lefts, -gamma))

    def _F(self, survival, p, f_r):
        L = min(self.c0, f_r)
        if L == 0:
            return np.zeros(len(p))
        tails = binomial_tails(f_r, p)[:, 1 : L + 1]
        return np.sum(tails * survival[:, :L], axis=1)

    def _dF(self, survival, p, f_r):
        L = min(self.c0, f_r)
        if L == 0:
            return np.zeros(len(p))
        pmf = binomial_pmf(f_r - 1, p)[:, :L]
        return f_r * np.sum(pmf * survival[:, :L], axis=1)

    def _marginal_gains(self, gamma, f_r):
        for prob, w, surv, k, m, _ in self._packed:
            p = self._probs(k, m, gamma)
            yield prob, w * self._dF(surv, p, f_r) * p, k, m

    # public quantities

    def conditional(self, scenario: Scenario, gamma: float, f_r: int) -> float:
        if not scenario.paths:
            return 0.0
        p = selection_probabilities(scenario.tree, gamma)
        w = np.array([pm.weight for pm in scenario.paths])
        surv = np.array([pm.survival for pm in scenario.paths])
        return float(np.dot(w, self._F(surv, p, f_r)))

    def expected(self, gamma: float, f_r: int) -> float:
        _check_gamma(gamma)
        _check_load(f_r)
        total = 0.0
        for prob, w, surv, k, m, _ in self._packed:
            total += prob * float(np.dot(w, self._F(surv, self._probs(k, m, gamma), f_r)))
        return total

    def derivative(self, gamma: float, f_r: int) -> float:
        if not 0.0 < gamma < 1.0:
            raise ParameterError("the derivative is defined only for 0 < gamma < 1")
        _check_load(f_r)
        total = 0.0
        for prob, a, k, m in self._marginal_gains(gamma, f_r):
            total += prob * float(np.sum(a * (m / gamma - (k - m) / (1.0 - gamma))))
        return total

    def fixed_point_map(self, gamma: float, f_r: int) -> float | None:
        """Right-hand side of the stationarity condition; None when every gain vanishes."""
        num = den = 0.0
        for prob, a, k, m in self._marginal_gains(gamma, f_r):
            num += prob * float(np.dot(a, m))
            den += prob * float(np.dot(a, k))
        if den <= 0:
            return None
        return num / den

    def optimize(
        self,
        f_r: int,
        tol: float = 1e-9,
        damping: float = 0.5,
        max_iter: int = 500,
        eps: float = 1e-6,
        fallback: bool = True,
        grid_points: int = 41,
    ) -> GammaOptimum:
        """Damped fixed-point iteration for the optimal bias.

        A converged fixed point is accepted only if no point of a coarse grid
        beats it; otherwise (or on non-convergence) a bounded scalar
        maximisation of ``expected`` takes over, bracketed by that grid.
        """
        if tol <= 0:
            raise ParameterError("tol must be positive")
        _check_load(f_r)
        lo, hi = eps, 1.0 - eps
        g = 0.5
        converged = False
        residual = math.inf
        it = 0
        for it in range(1, max_iter + 1):
            target = self.fixed_point_map(g, f_r)
            if target is None:
                # flat objective: every bias is optimal
                return GammaOptimum(0.5, "flat", it, 0.0)
            residual = abs(target - g)
            if residual < tol:
                converged = True
                break
            g = min(hi, max(lo, (1.0 - damping) * g + damping * target))

        grid = np.linspace(lo, hi, grid_points)
        values = np.array([self.expected(float(x), f_r) for x in grid])
        scale = max(1.0, float(np.max(np.abs(values))))
        if converged and self.expected(g, f_r) >= values.max() - 1e-9 * scale:
            return GammaOptimum(g, "fixed_point", it, residual)
        if not fallback:
            raise ConvergenceError("fixed-point iteration did not reach a maximiser", g)
        j = int(np.argmax(values))
        a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid_points - 1)]
        res = minimize_scalar(
            lambda x: -self.expected(float(x), f_r), bounds=(a, b), method="bounded", options={"xatol": tol}
        )
        best = float(res.x) if -res.fun >= values[j] else float(grid[j])
        target = self.fixed_point_map(best, f_r)
        return GammaOptimum(best, "bounded_search", it, abs(target - best) if target is not None else 0.0)

    def optimal_gamma(self, f_r: int, tol: float = 1e-9, **kwargs) -> float:
        return self.optimize(f_r, tol, **kwargs).gamma

    def capacity_ceiling(self) -> float:
        return math.fsum(s.prob * sum(pm.weight * pm.mean_capacity for pm in s.paths) for s in self.scenarios)

    def upper_bound(self, f_r: int) -> float:
        _check_load(f_r)
        total = 0.0
        for s in self._active:
            cap = sum(pm.weight * pm.mean_capacity for pm in s.paths)
            wmax = max(pm.weight for pm in s.paths)
            total += s.prob * min(wmax * f_r, cap)
        return total

    def envelope(self, gamma: float, f_r: int) -> float:
        _check_gamma(gamma)
        _check_load(f_r)
        total = 0.0
        for s in self._active:
            p = selection_probabilities(s.tree, gamma)
            total += s.prob * sum(
                pm.weight * min(f_r * pi, pm.mean_capacity) for pm, pi in zip(s.paths, p)
            )
        return total

    def gamma_bounds(self) -> tuple[float, float]:
        """Union of the per-tree enclosures over scenarios with at least two paths."""
        bounds = [gamma_star_bounds(s.tree) for s in self._active if len(s.paths) >= 2]
        if not bounds:
            return 0.0, 1.0
        return min(b[0] for b in bounds), max(b[1] for b in bounds)


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma!r}")


def _check_load(f_r: int) -> None:
    if f_r < 0 or int(f_r) != f_r:
        raise ParameterError(f"f_r must be a non-negative integer, got {f_r!r}")


# --- functional interface ---------------------------------------------------


def expected_throughput_conditional(n: int, profile: HopProfile, c0: int, gamma: float, f_r: int) -> float:
    if n < 1:
        raise ParameterError("n must be at least 1")
    if n > len(profile.hops):
        raise ParameterError(f"profile covers {len(profile.hops)} ranks, need {n}")
    return ThroughputModel.averaged(PathCountDistribution.point(n), profile, c0).expected(gamma, f_r)


def expected_throughput(gamma: float, Pi: PathCountDistribution, profile: HopProfile, c0: int, f_r: int) -> float:
    return ThroughputModel.averaged(Pi, profile, c0).expected(gamma, f_r)


def throughput_derivative(gamma: float, Pi: PathCountDistribution, profile: HopProfile, c0: int, f_r: int) -> float:
    return ThroughputModel.averaged(Pi, profile, c0).derivative(gamma, f_r)


def optimal_gamma(Pi: PathCountDistribution, profile: HopProfile, c0: int, f_r: int, tol: float = 1e-9) -> float:
    return ThroughputModel.averaged(Pi, profile, c0).optimal_gamma(f_r, tol)


def capacity_ceiling(profile: HopProfile, Pi: PathCountDistribution, c0: int) -> float:
    return ThroughputModel.averaged(Pi, profile, c0).capacity_ceiling()


def upper_bound_fr(f_r: int, profile: HopProfile, Pi: PathCountDistribution, c0: int) -> float:
    return ThroughputModel.averaged(Pi, profile, c0).upper_bound(f_r)


def gamma_envelope(gamma: float, f_r: int, profile: HopProfile, Pi: PathCountDistribution, c0: int) -> float:
    return ThroughputModel.averaged(Pi, profile, c0).envelope(gamma, f_r)


def efficiency(measured: float, bound: float) -> float:
    """Fraction of the bound achieved; a measurement above the bound is an error."""
    if not bound > 0:
        raise ParameterError("bound must be positive")
    if measured < 0:
        raise ParameterError("measured throughput must be non-negative")
    if measured > bound * (1 + 1e-12):
        raise BoundViolationError(f"measured throughput {measured} exceeds bound {bound}")
    return measured / bound
