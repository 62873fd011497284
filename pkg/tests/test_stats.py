import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tournament_routing import stats
from tournament_routing.errors import EmptyInputError, FitDomainError, InsufficientDataError, ParameterError


# --- fairness --------------------------------------------------------------


def test_jain_examples():
    assert stats.window_jain([3, 3, 3], 3) == pytest.approx(1.0)
    assert stats.window_jain([7, 0, 0, 0], 4) == pytest.approx(0.25)
    assert stats.window_jain([2, 1, 1], 3) == pytest.approx(8 / 9, abs=1e-15)
    assert stats.window_jain([0, 0], 2) is None


def test_jain_mean_skips_idle_windows():
    entry = stats.jain_index([[3, 3], [0, 0], [4, 0]], [2, 2, 2])
    assert entry.n_windows == 2
    assert entry.mean_j == pytest.approx(0.75)
    with pytest.raises(EmptyInputError):
        stats.jain_index([[0], [0, 0]], [1, 2])
    with pytest.raises(ParameterError):
        stats.jain_index([[1]], [1, 2])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=16))
def test_jain_bounds(u):
    j = stats.window_jain(u, len(u))
    if sum(u) == 0:
        assert j is None
    else:
        assert 1 / len(u) - 1e-12 <= j <= 1 + 1e-12


# --- hop profile -----------------------------------------------------------


def replicate(means, copies=40):
    """Rank-ordered samples whose per-rank means are exactly ``means``."""
    return [list(means) for _ in range(copies)]


def test_hop_fit_exact_power_law():
    # h_i = 5 + 2 i for i > 1 with the anchor h1 = 5 at rank 1
    ranks = np.arange(1, 17)
    means = 5.0 + 2.0 * ranks
    means[0] = 5.0
    fit = stats.fit_hop_profile(replicate(means))
    assert fit.h1 == 5.0
    assert fit.c == pytest.approx(2.0, rel=1e-9)
    assert fit.beta == pytest.approx(1.0, rel=1e-9)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.rmse == pytest.approx(0.0, abs=1e-9)


def test_hop_fit_linear_ranks():
    # h_i = 5 + 2 i with h1 = 7: the excess 2 (i - 1) is not a pure power law,
    # but the fit must still be well defined and close
    means = 5.0 + 2.0 * np.arange(1, 17)
    fit = stats.fit_hop_profile(replicate(means))
    assert fit.h1 == 7.0
    assert fit.r2 > 0.99


@pytest.mark.parametrize("c,beta", [(0.168, 1.1422), (0.5, 0.8), (1.3, 1.6)])
def test_hop_fit_noiseless_round_trip(c, beta):
    i = np.arange(1, 17, dtype=float)
    means = 5.677 + c * i**beta
    means[0] = 5.677
    fit = stats.fit_hop_profile(replicate(means))
    assert abs(fit.c / c - 1) < 1e-9
    assert abs(fit.beta / beta - 1) < 1e-9
    assert np.allclose(fit.predict(i), means, rtol=1e-9)


def test_hop_fit_noisy_round_trip():
    rng = np.random.default_rng(7)
    i = np.arange(1, 17, dtype=float)
    truth = 5.677 + 0.168 * i**1.1422
    truth[0] = 5.677
    samples = [list(truth + rng.normal(0, 0.5, size=16)) for _ in range(15000)]
    fit = stats.fit_hop_profile(samples)
    assert abs(fit.c / 0.168 - 1) < 0.05
    assert abs(fit.beta / 1.1422 - 1) < 0.05
    assert fit.c_ci[0] < fit.c < fit.c_ci[1]
    assert fit.beta_ci[0] < fit.beta < fit.beta_ci[1]


def test_hop_fit_truncates_sparse_ranks():
    samples = [[3, 4, 5, 6, 7]] * 40 + [[3, 4, 5, 6, 7, 8, 9]] * 10
    fit = stats.fit_hop_profile(samples, min_count=30)
    assert list(fit.ranks) == [1, 2, 3, 4, 5]
    assert list(fit.counts) == [50] * 5


def test_hop_fit_errors():
    with pytest.raises(FitDomainError):
        stats.fit_hop_profile(replicate([4.0, 4.0, 5.0, 6.0]))
    with pytest.raises(InsufficientDataError):
        stats.fit_hop_profile(replicate([4.0, 5.0]))
    with pytest.raises(InsufficientDataError):
        stats.fit_hop_profile(replicate([4.0, 5.0, 6.0], copies=10))


# --- distance decay --------------------------------------------------------


def test_decay_exact_recovery():
    L = np.linspace(0.1, 1.2, 9)
    fit = stats.fit_exponential_decay(list(zip(L, 2.0 * np.exp(-3.0 * L))))
    assert abs(fit.A / 2.0 - 1) < 1e-9
    assert abs(fit.kappa / 3.0 - 1) < 1e-9
    assert fit.r2 == pytest.approx(1.0)
    assert fit.fit_range == (pytest.approx(0.1), pytest.approx(1.2))


def test_decay_constant_data():
    fit = stats.fit_exponential_decay([(x, 4.0) for x in (0.1, 0.2, 0.5, 0.9)])
    assert fit.kappa == pytest.approx(0.0, abs=1e-12)
    assert fit.A == pytest.approx(4.0)


def test_decay_ignores_empty_bins():
    bins = [(0.1, 1.0), (0.2, 0.0), (0.3, math.nan), (0.4, 0.5), (0.6, 0.25)]
    fit = stats.fit_exponential_decay(bins)
    assert fit.n_bins == 3
    with pytest.raises(InsufficientDataError):
        stats.fit_exponential_decay([(0.1, 1.0), (0.2, 0.0), (0.3, 2.0)])


# --- indistinguishable interval --------------------------------------------


def test_z_value():
    assert stats.z_value(0.95) == 1.96
    with pytest.raises(ParameterError):
        stats.z_value(1.0)


def test_identical_series_both_included():
    rng = np.random.default_rng(0)
    x = rng.random(50)
    assert stats.indistinguishable_interval([x, x.copy()], [0.3, 0.7]) == [0.3, 0.7]


def test_clearly_worse_series_excluded():
    rng = np.random.default_rng(1)
    T = 400
    best = rng.normal(10, 1, T)
    noise = rng.normal(0, 1, T)
    noise -= noise.mean()
    # D = shift + noise has mean exactly 10 standard errors
    shift = 10 * noise.std(ddof=1) / math.sqrt(T)
    worse = best - shift - noise
    assert stats.indistinguishable_interval([best, worse], [0.5, 0.9]) == [0.5]


def test_interval_contains_argmax_and_validates():
    rng = np.random.default_rng(2)
    raw = rng.normal(size=(5, 30)) + np.array([[0], [1], [3], [1], [0]])
    interval = stats.indistinguishable_interval(raw, [0.1, 0.3, 0.5, 0.7, 0.9])
    assert 0.5 in interval
    with pytest.raises(ParameterError):
        stats.indistinguishable_interval([np.ones(3), np.ones(4)], [0.1, 0.2])
    with pytest.raises(ParameterError):
        stats.indistinguishable_interval([np.ones(3)], [0.1, 0.2])
    with pytest.raises(ParameterError):
        stats.indistinguishable_interval([np.ones(1)], [0.1])
