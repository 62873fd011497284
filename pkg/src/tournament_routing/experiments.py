"""Experiment pipelines that combine simulation, analytics and statistics.

Each function returns plain rows (lists of dicts) so the CLI can write them as
CSV and tests can assert on them directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

from . import analytics, stats
from . import rng as rngmod
from .channel import mean_hop_success
from .config import RunConfig
from .errors import InsufficientDataError, ParameterError
from .netgraph import generate_rgg
from .simengine import (
    ExperimentConfig,
    PreparedWindow,
    SweepSummary,
    bin_by_distance,
    draw_pairs,
    prepare_ensemble,
    prepare_window,
    run_multipair_sweep,
    sweep_ensemble,
    topology,
)


class WindowCache:
    """Prepared single-pair windows of one run, extended on demand.

    Windows are keyed by index, so asking for more windows later returns the
    same first ones.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._windows: list[PreparedWindow] = []

    def get(self, n: int) -> list[PreparedWindow]:
        if n > len(self._windows):
            self._windows += prepare_ensemble(self.config, n - len(self._windows), 1, start=len(self._windows))
        return self._windows[:n]


@dataclass
class AnalyticInputs:
    fit: stats.HopFit
    Pi: analytics.PathCountDistribution
    p: float
    profile: analytics.HopProfile
    model: analytics.ThroughputModel


def geometry_mean_success(config: ExperimentConfig, alpha: float | None = None) -> float:
    alpha = config.alpha if alpha is None else alpha
    nets = [topology(config.n_nodes, config.radius, config.seed, k) for k in range(config.n_topologies)]
    lengths = np.concatenate([n.lengths for n in nets])
    if len(lengths) == 0:
        return mean_hop_success(nets[0], alpha)
    return float(np.mean(np.exp(-alpha * lengths)))


def analytic_inputs(
    config: ExperimentConfig,
    windows: Sequence[PreparedWindow],
    min_rank_count: int = 30,
    alpha: float | None = None,
    p_swap: float | None = None,
) -> AnalyticInputs:
    """Fit the rank hop profile and path-count distribution on an ensemble of windows."""
    hops = [w.hops[0] for w in windows]
    fit = stats.fit_hop_profile(hops, min_count=min_rank_count)
    Pi = analytics.PathCountDistribution.from_counts([w.n_paths[0] for w in windows], config.max_paths)
    p = geometry_mean_success(config, alpha)
    p_swap = config.p_swap if p_swap is None else p_swap
    n_ranks = max(config.max_paths, Pi.max_n)
    profile = analytics.HopProfile.from_fit(fit.h1, fit.c, fit.beta, n_ranks, p, p_swap)
    return AnalyticInputs(fit, Pi, p, profile, analytics.ThroughputModel.averaged(Pi, profile, config.c0))


def hop_ensemble(
    config: ExperimentConfig,
    n_samples: int,
    min_ranks: int = 0,
    pairs_per_topology: int = 10,
    max_windows: int | None = None,
) -> tuple[list[tuple[int, ...]], int]:
    """Rank-ordered hop lists for random pairs on independently drawn topologies.

    Topology ``k`` and its pairs come from their own seed stream, disjoint from
    the simulated windows. With ``min_ranks > 0`` only path sets that reach that
    many ranks are kept, so every sample contributes to every fitted rank.
    Returns the samples and the number of windows examined.
    """
    if n_samples < 1 or pairs_per_topology < 1:
        raise ParameterError("n_samples and pairs_per_topology must be positive")
    max_windows = 50 * n_samples if max_windows is None else max_windows
    samples: list[tuple[int, ...]] = []
    seen = 0
    k = 0
    while len(samples) < n_samples and seen < max_windows:
        stream = rngmod.ANALYTIC_ENSEMBLE
        net = generate_rgg(config.n_nodes, config.radius, rngmod.derive_rng(config.seed, stream, k, 0))
        for j in range(pairs_per_topology):
            pairs = draw_pairs(net.n_nodes, 1, rngmod.derive_rng(config.seed, stream, k, 1, j))
            seed = rngmod.derive_seed(config.seed, stream, k, 2, j)
            hops = prepare_window(net, pairs, config.channel, seed, config.max_paths).hops[0]
            seen += 1
            if len(hops) >= min_ranks:
                samples.append(hops)
                if len(samples) == n_samples:
                    break
        k += 1
    if len(samples) < n_samples:
        raise InsufficientDataError(
            f"only {len(samples)} of {seen} windows reached {min_ranks} ranks; wanted {n_samples}"
        )
    return samples, seen


def summary_rows(summary: SweepSummary) -> list[dict]:
    return [
        {"gamma": g, "mean_Tr": m, "std_Tr": s, "sem": e}
        for g, m, s, e in zip(summary.gammas, summary.mean, summary.std, summary.sem)
    ]


def window_rows(summary: SweepSummary) -> list[dict]:
    totals = summary.served_total
    rows = []
    for gi, g in enumerate(summary.gammas):
        for t in range(summary.windows):
            rows.append(
                {
                    "gamma": g,
                    "window": t,
                    "n_t": int(summary.n_paths[t]),
                    "T_r": summary.throughput[gi, t],
                    "served_total": int(totals[gi, t]),
                }
            )
    return rows


def analytic_rows(model: analytics.ThroughputModel, gammas: Sequence[float], f_r: int) -> list[dict]:
    ub = model.upper_bound(f_r)
    rows = []
    for g in gammas:
        deriv = model.derivative(g, f_r) if 0 < g < 1 else math.nan
        rows.append(
            {
                "gamma": g,
                "E_Tr": model.expected(g, f_r),
                "derivative": deriv,
                "envelope": model.envelope(g, f_r),
                "bound": ub,
            }
        )
    return rows


def sweep_gamma(cfg: RunConfig, cache: WindowCache | None = None):
    exp = cfg.experiment
    cache = cache or WindowCache(exp)
    summary = sweep_ensemble(cache.get(exp.windows), exp.gammas, exp.f_r, exp.p_swap)
    inputs = analytic_inputs(exp, cache.get(cfg.study.ensemble), cfg.study.min_rank_count)
    return summary, analytic_rows(inputs.model, exp.gammas, exp.f_r), inputs


def optimal_gamma_tables(cfg: RunConfig, cache: WindowCache | None = None) -> tuple[list[dict], list[dict]]:
    """Numerical and analytic optimum per load, plus grid membership of the tie interval."""
    exp = cfg.experiment
    cache = cache or WindowCache(exp)
    inputs = analytic_inputs(exp, cache.get(cfg.study.ensemble), cfg.study.min_rank_count)
    rows, membership = [], []
    for f_r in cfg.study.f_r_list:
        s = sweep_ensemble(cache.get(exp.windows), exp.gammas, f_r, exp.p_swap)
        interval = stats.indistinguishable_interval(s.throughput, s.gammas, cfg.study.level)
        membership += [{"f_r": f_r, "gamma": g, "in_interval": g in interval} for g in s.gammas]
        rows.append(
            {
                "f_r": f_r,
                "gamma_star_num": s.gammas[s.argmax()],
                "gamma_star_an": inputs.model.optimal_gamma(f_r),
                "interval_lo": min(interval),
                "interval_hi": max(interval),
            }
        )
    return rows, membership


def optimal_gamma_rows(cfg: RunConfig, cache: WindowCache | None = None) -> list[dict]:
    return optimal_gamma_tables(cfg, cache)[0]


def _heat_axes(cfg: RunConfig):
    st = cfg.study
    n = st.heatmap_resolution
    return np.linspace(st.alpha_min, st.alpha_max, n), np.linspace(st.p_swap_min, st.p_swap_max, n)


def heatmap_rows(cfg: RunConfig, cache: WindowCache | None = None) -> list[dict]:
    """Optimal bias over an (alpha, p_swap) grid for every load in ``f_r_list``.

    Analytic mode reuses one path ensemble (path structure is fitted at the
    configured alpha) and re-evaluates link success and swap weights per cell.
    Simulation mode prepares a window ensemble per alpha; routing does not
    depend on ``p_swap``, so each p_swap column reweights the same served counts.
    """
    exp = cfg.experiment
    alphas, pswaps = _heat_axes(cfg)
    rows = []
    if cfg.study.heatmap_method == "analytic":
        cache = cache or WindowCache(exp)
        base = analytic_inputs(exp, cache.get(cfg.study.ensemble), cfg.study.min_rank_count)
        fit, n_ranks = base.fit, len(base.profile.hops)
        for a in alphas:
            p = geometry_mean_success(exp, float(a))
            for ps in pswaps:
                profile = analytics.HopProfile.from_fit(fit.h1, fit.c, fit.beta, n_ranks, p, float(ps))
                model = analytics.ThroughputModel.averaged(base.Pi, profile, exp.c0)
                for f_r in cfg.study.f_r_list:
                    rows.append({"alpha": float(a), "p_swap": float(ps), "f_r": f_r, "gamma_star": model.optimal_gamma(f_r)})
        return rows
    for a in alphas:
        sub = exp.replace(alpha=float(a))
        windows = prepare_ensemble(sub, n_pairs=1)
        hops = [np.asarray(w.hops[0], dtype=float) for w in windows]
        for f_r in cfg.study.f_r_list:
            served = [sweep_ensemble(windows, [g], f_r, 1.0).served[0] for g in exp.gammas]
            for ps in pswaps:
                means = [
                    np.mean([float(np.dot(u, ps ** (h - 1))) if len(u) else 0.0 for u, h in zip(row, hops)])
                    for row in served
                ]
                rows.append(
                    {"alpha": float(a), "p_swap": float(ps), "f_r": f_r, "gamma_star": exp.gammas[int(np.argmax(means))]}
                )
    return rows


def distance_tables(cfg: RunConfig, cache: WindowCache | None = None):
    exp = cfg.experiment
    cache = cache or WindowCache(exp)
    summary = sweep_ensemble(cache.get(exp.windows), exp.gammas, exp.f_r, exp.p_swap)
    table = bin_by_distance(summary, cfg.study.n_bins)
    occupied = table.occupied(cfg.study.min_bin_count)
    bin_rows = []
    fits = {}
    for gi, g in enumerate(table.gammas):
        for b in np.flatnonzero(occupied):
            bin_rows.append(
                {"gamma": g, "bin_center_L": table.bin_centers[b], "mean_Tr": table.mean[gi, b], "n_samples": int(table.counts[b])}
            )
        fits[g] = stats.fit_exponential_decay(list(zip(table.bin_centers[occupied], table.mean[gi, occupied])))
    decay_rows = [{"gamma": g, "A": f.A, "kappa": f.kappa, "r2": f.r2} for g, f in fits.items()]
    return bin_rows, decay_rows, fits


def multipair_tables(cfg: RunConfig):
    exp = cfg.experiment
    results = run_multipair_sweep(exp, cfg.study.pair_counts)
    rows = []
    for R, s in results.items():
        for g, m, sd, se in zip(s.gammas, s.mean, s.std, s.sem):
            rows.append({"R": R, "gamma": g, "mean_Tr": m, "std_Tr": sd, "sem": se})
    slope_rows = []
    Rs = np.array(sorted(results), dtype=float)
    for gi, g in enumerate(exp.gammas):
        means = np.array([results[int(R)].mean[gi] for R in Rs])
        if len(Rs) >= 2:
            lr = sps.linregress(Rs, means)
            slope, r2 = float(lr.slope), float(lr.rvalue**2)
        else:
            slope, r2 = math.nan, math.nan
        slope_rows.append({"gamma": g, "slope": slope, "r2": r2})
    return rows, slope_rows, results


def fairness_rows(cfg: RunConfig, cache: WindowCache | None = None) -> list[dict]:
    exp = cfg.experiment
    cache = cache or WindowCache(exp)
    windows = cache.get(exp.windows)
    rows = []
    for f_r in cfg.study.f_r_list:
        s = sweep_ensemble(windows, exp.gammas, f_r, exp.p_swap)
        for gi, g in enumerate(s.gammas):
            entry = stats.jain_index(s.served[gi], s.n_paths)
            rows.append({"f_r": f_r, "gamma": g, "mean_J": entry.mean_j, "n_windows": entry.n_windows})
    return rows


def bounds_rows(cfg: RunConfig, cache: WindowCache | None = None) -> list[dict]:
    exp = cfg.experiment
    cache = cache or WindowCache(exp)
    inputs = analytic_inputs(exp, cache.get(cfg.study.ensemble), cfg.study.min_rank_count)
    rows = []
    for f_r in cfg.study.f_r_list:
        s = sweep_ensemble(cache.get(exp.windows), exp.gammas, f_r, exp.p_swap)
        best = s.argmax()
        ub = inputs.model.upper_bound(f_r)
        measured = float(s.mean[best])
        rows.append(
            {
                "f_r": f_r,
                "gamma_star": s.gammas[best],
                "mean_Tr": measured,
                "sem": float(s.sem[best]),
                "UB": ub,
                "ceiling": inputs.model.capacity_ceiling(),
                # ratio written even when the bound is violated so the table shows it
                "eta": measured / ub if ub > 0 else math.nan,
            }
        )
    return rows


def hopfit_tables(cfg: RunConfig, cache: WindowCache | None = None):
    """Rank hop profile over an RGG ensemble, or over the run's own windows."""
    exp, st = cfg.experiment, cfg.study
    if st.hopfit_ensemble == "topologies":
        samples, examined = hop_ensemble(exp, st.ensemble, st.hopfit_min_ranks)
    else:
        cache = cache or WindowCache(exp)
        samples = [h for h in (w.hops[0] for w in cache.get(st.ensemble)) if len(h) >= st.hopfit_min_ranks]
        examined = st.ensemble
    fit = stats.fit_hop_profile(samples, st.min_rank_count)
    rows = [
        {"rank": int(r), "mean_h": m, "std_h": s, "n_samples": int(n)}
        for r, m, s, n in zip(fit.ranks, fit.mean_h, fit.std_h, fit.counts)
    ]
    params = {
        "h1": fit.h1,
        "c": fit.c,
        "beta": fit.beta,
        "c_ci": list(fit.c_ci),
        "beta_ci": list(fit.beta_ci),
        "r2": fit.r2,
        "rmse": fit.rmse,
        "n_samples": len(samples),
        "n_windows_examined": examined,
        "ensemble": st.hopfit_ensemble,
        "min_ranks": st.hopfit_min_ranks,
    }
    return rows, params, fit
