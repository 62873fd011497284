"""Ordered recursive-bisection tournament over ranked paths.

Leaves are indexed from 0 in path-rank order. Leaf ``i`` sits at depth
``depths[i]`` and its root-to-leaf trace has ``lefts[i]`` left turns, so it is
selected with probability ``gamma**lefts[i] * (1 - gamma)**(depths[i] - lefts[i])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import xlog1py, xlogy

from .errors import ParameterError
from .rng import SeedLike, as_generator


@dataclass(frozen=True)
class TournamentTree:
    depths: tuple[int, ...]
    lefts: tuple[int, ...]

    def __post_init__(self):
        if len(self.depths) != len(self.lefts) or not self.depths:
            raise ParameterError("a tree needs one (depth, lefts) pair per leaf")
        for k, m in zip(self.depths, self.lefts):
            if k < 0 or not 0 <= m <= k:
                raise ParameterError(f"invalid leaf trace k={k}, m={m}")
        if self.kraft_sum() > 1 + 1e-12:
            raise ParameterError("leaf depths violate Kraft's inequality")

    @property
    def n(self) -> int:
        return len(self.depths)

    @property
    def max_depth(self) -> int:
        return max(self.depths)

    def kraft_sum(self) -> float:
        return math.fsum(2.0 ** -k for k in self.depths)

    def walk(self, gamma: float, uniforms) -> int:
        """Descend from the root, going left when the next uniform is below ``gamma``.

        ``uniforms`` must provide at least ``max_depth`` values.
        """
        lo, hi = 0, self.n
        level = 0
        while hi - lo > 1:
            mid = lo + (hi - lo + 1) // 2
            if uniforms[level] < gamma:
                hi = mid
            else:
                lo = mid
            level += 1
        return lo


@lru_cache(maxsize=None)
def build_tree(n: int) -> TournamentTree:
    """Bisect ranks ``[0, n)``: the left block takes the first ``ceil(m/2)`` of ``m``."""
    if int(n) != n or n < 1:
        raise ParameterError(f"tree needs at least one leaf, got {n!r}")
    depths = [0] * n
    lefts = [0] * n

    def split(lo: int, hi: int, depth: int, nleft: int) -> None:
        if hi - lo == 1:
            depths[lo] = depth
            lefts[lo] = nleft
            return
        mid = lo + (hi - lo + 1) // 2
        split(lo, mid, depth + 1, nleft + 1)
        split(mid, hi, depth + 1, nleft)

    split(0, int(n), 0, 0)
    return TournamentTree(tuple(depths), tuple(lefts))


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma!r}")


def log_selection_probabilities(tree: TournamentTree, gamma: float) -> np.ndarray:
    _check_gamma(gamma)
    k = np.asarray(tree.depths, dtype=float)
    m = np.asarray(tree.lefts, dtype=float)
    # xlogy(0, 0) == 0, so pure-left / pure-right traces stay finite at the extremes
    return xlogy(m, gamma) + xlog1py(k - m, -gamma)


def selection_probabilities(tree: TournamentTree, gamma: float) -> np.ndarray:
    return np.exp(log_selection_probabilities(tree, gamma))


def sample_selection(tree: TournamentTree, gamma: float, seed: SeedLike) -> int:
    """Draw one leaf index by walking the tree with a Bernoulli(gamma) per level."""
    _check_gamma(gamma)
    rng = as_generator(seed)
    return tree.walk(gamma, rng.random(max(tree.max_depth, 1)))


def gamma_star_bounds(tree: TournamentTree) -> tuple[float, float]:
    """Enclosure of any stationary bias: the range of per-leaf ratios ``m_i / k_i``.

    When every leaf mixes left and right turns (``1 <= m_i <= k_i - 1``) the
    depth-capped window ``[1/k_max, 1 - 1/k_max]`` also applies and is intersected in.
    """
    if tree.n < 2:
        raise ParameterError("bounds need at least two leaves")
    ratios = [m / k for k, m in zip(tree.depths, tree.lefts)]
    lo, hi = min(ratios), max(ratios)
    if all(1 <= m <= k - 1 for k, m in zip(tree.depths, tree.lefts)):
        kmax = tree.max_depth
        lo, hi = max(lo, 1.0 / kmax), min(hi, 1.0 - 1.0 / kmax)
    return lo, hi


def min_depth_cap(n: int) -> int:
    """Smallest feasible maximum leaf depth for ``n`` leaves."""
    return math.ceil(math.log2(n)) if n > 1 else 0
