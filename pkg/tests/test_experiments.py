import numpy as np
import pytest

from tournament_routing.errors import InsufficientDataError
from tournament_routing.experiments import WindowCache, analytic_inputs, hop_ensemble
from tournament_routing.simengine import ExperimentConfig, prepare_ensemble

CFG = ExperimentConfig(n_nodes=80, radius=0.25, windows=60, seed=3)


def test_hop_ensemble_is_deterministic_and_filtered():
    a, seen_a = hop_ensemble(CFG, 40, min_ranks=3, pairs_per_topology=4)
    b, seen_b = hop_ensemble(CFG, 40, min_ranks=3, pairs_per_topology=4)
    assert a == b and seen_a == seen_b >= 40
    assert all(len(h) >= 3 for h in a)
    assert all(list(h) == sorted(h) for h in a)


def test_hop_ensemble_gives_up_when_ranks_unreachable():
    with pytest.raises(InsufficientDataError):
        hop_ensemble(CFG, 5, min_ranks=CFG.max_paths + 1, max_windows=30)


def test_window_cache_extends_consistently():
    cache = WindowCache(CFG)
    first = cache.get(10)
    more = cache.get(25)
    assert more[:10] == first
    fresh = prepare_ensemble(CFG, 25, 1)
    assert [w.hops for w in more] == [w.hops for w in fresh]


def test_analytic_inputs_tracks_simulated_network():
    windows = WindowCache(CFG).get(300)
    inputs = analytic_inputs(CFG, windows, min_rank_count=20)
    counts = np.bincount([w.n_paths[0] for w in windows]) / 300
    for n, p in inputs.Pi.probs.items():
        assert p == pytest.approx(counts[n])
    assert inputs.profile.hops[0] == pytest.approx(inputs.fit.h1)
    assert 0 < inputs.p <= 1
