"""Post-processing of simulation output: fairness, fits and optimum intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import EmptyInputError, FitDomainError, InsufficientDataError, ParameterError


def window_jain(served: Sequence[int], n_t: int) -> float | None:
    """Jain index of one window over its ``n_t`` available paths; None without service."""
    u = np.asarray(served, dtype=float)
    total = u.sum()
    if total <= 0 or n_t < 1:
        return None
    return float(total * total / (n_t * np.dot(u, u)))


@dataclass(frozen=True)
class FairnessEntry:
    mean_j: float
    n_windows: int


def jain_index(served: Sequence[Sequence[int]], n_t: Sequence[int]) -> FairnessEntry:
    """Mean Jain index over the windows that served at least one request."""
    if len(served) != len(n_t):
        raise ParameterError("served and n_t must have one entry per window")
    values = [j for u, n in zip(served, n_t) if (j := window_jain(u, n)) is not None]
    if not values:
        raise EmptyInputError("no window served any request")
    return FairnessEntry(float(np.mean(values)), len(values))


@dataclass(frozen=True)
class HopFit:
    h1: float
    c: float
    beta: float
    r2: float
    rmse: float
    c_ci: tuple[float, float]
    beta_ci: tuple[float, float]
    ranks: np.ndarray
    mean_h: np.ndarray
    std_h: np.ndarray
    counts: np.ndarray

    def predict(self, i) -> np.ndarray:
        i = np.asarray(i, dtype=float)
        return np.where(i > 1, self.h1 + self.c * i**self.beta, self.h1)


def rank_statistics(samples: Sequence[Sequence[float]], min_count: int = 30):
    """Mean, std and sample count per rank, truncated at the first rank with fewer than ``min_count`` samples."""
    longest = max((len(s) for s in samples), default=0)
    ranks, means, stds, counts = [], [], [], []
    for i in range(longest):
        v = np.array([s[i] for s in samples if len(s) > i], dtype=float)
        if len(v) < min_count:
            break
        ranks.append(i + 1)
        means.append(v.mean())
        stds.append(v.std(ddof=1) if len(v) > 1 else 0.0)
        counts.append(len(v))
    return np.array(ranks), np.array(means), np.array(stds), np.array(counts)


def fit_hop_profile(samples: Sequence[Sequence[float]], min_count: int = 30, level: float = 0.95) -> HopFit:
    """Fit ``mean(h_i) = h1 + c * i**beta`` for ``i > 1`` with ``h1`` pinned to the rank-1 mean.

    ``samples`` holds one rank-ordered hop list per path set. The offset
    power law is linear in ``log i`` once ``h1`` is fixed, so ``c`` and
    ``beta`` come from an ordinary least-squares line; R^2 and RMSE are then
    reported on the original scale over ranks ``i > 1``.
    """
    ranks, mean_h, std_h, counts = rank_statistics(samples, min_count)
    if len(ranks) < 3:
        raise InsufficientDataError(f"need at least 3 ranks with >= {min_count} samples, got {len(ranks)}")
    h1 = float(mean_h[0])
    excess = mean_h[1:] - h1
    if np.any(excess <= 0):
        raise FitDomainError("mean hop count at some rank > 1 does not exceed the rank-1 mean")
    x = np.log(ranks[1:].astype(float))
    y = np.log(excess)
    reg = sps.linregress(x, y)
    beta = float(reg.slope)
    c = float(math.exp(reg.intercept))
    pred = h1 + c * ranks[1:] ** beta
    resid = mean_h[1:] - pred
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.sum((mean_h[1:] - mean_h[1:].mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    rmse = math.sqrt(ss_res / len(resid))
    dof = len(x) - 2
    if dof > 0 and np.isfinite(reg.stderr):
        t = float(sps.t.ppf(0.5 + level / 2, dof))
        beta_ci = (beta - t * reg.stderr, beta + t * reg.stderr)
        c_ci = (math.exp(reg.intercept - t * reg.intercept_stderr), math.exp(reg.intercept + t * reg.intercept_stderr))
    else:
        beta_ci, c_ci = (beta, beta), (c, c)
    return HopFit(h1, c, beta, r2, rmse, c_ci, beta_ci, ranks, mean_h, std_h, counts)


@dataclass(frozen=True)
class DecayFit:
    A: float
    kappa: float
    r2: float
    fit_range: tuple[float, float]
    n_bins: int


def fit_exponential_decay(bins: Sequence[tuple[float, float]]) -> DecayFit:
    """Least-squares line through ``log(T)`` against distance over bins with ``T > 0``."""
    pts = [(float(L), float(T)) for L, T in bins if T is not None and np.isfinite(T) and T > 0]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 bins with positive throughput, got {len(pts)}")
    L = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(L) == 0:
        raise InsufficientDataError("all bins sit at the same distance")
    slope, intercept = np.polyfit(L, y, 1)
    resid = y - (intercept + slope * L)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.dot(resid, resid)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(math.exp(intercept)), float(-slope), r2, (float(L.min()), float(L.max())), len(pts))


def z_value(level: float) -> float:
    """Two-sided normal quantile rounded to table precision (1.96 at 95%)."""
    if not 0 < level < 1:
        raise ParameterError("level must lie in (0, 1)")
    return round(float(sps.norm.ppf(0.5 + level / 2)), 2)


def indistinguishable_interval(raw, gammas: Sequence[float], level: float = 0.95) -> list[float]:
    """Grid points whose throughput is statistically tied with the best one.

    ``raw[g]`` is the per-window series for ``gammas[g]``; all series must come
    from the same windows so that differences are paired.
    """
    raw = [np.asarray(r, dtype=float) for r in raw]
    if len(raw) != len(gammas):
        raise ParameterError("one series per grid point is required")
    T = len(raw[0])
    if T < 2 or any(len(r) != T for r in raw):
        raise ParameterError("series must share a window count of at least 2")
    z = z_value(level)
    best = int(np.argmax([r.mean() for r in raw]))
    keep = []
    for g, r in enumerate(raw):
        d = raw[best] - r
        s = float(np.std(d, ddof=1))
        if d.mean() <= z * s / math.sqrt(T):
            keep.append(float(gammas[g]))
    return keep
