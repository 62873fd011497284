"""Lossy links and per-window entangled-pair generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, ParameterError
from .netgraph import Network
from .rng import SeedLike, as_generator


@dataclass(frozen=True)
class ChannelParams:
    """Attenuation ``alpha`` (per unit-square length), buffer size ``c0`` and BSM success ``p_swap``."""

    alpha: float = 1.0
    c0: int = 5
    p_swap: float = 0.95

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ParameterError(f"alpha must be >= 0, got {self.alpha!r}")
        if int(self.c0) != self.c0 or self.c0 < 1:
            raise ParameterError(f"c0 must be an integer >= 1, got {self.c0!r}")
        if not 0.0 <= self.p_swap <= 1.0:
            raise ParameterError(f"p_swap must lie in [0, 1], got {self.p_swap!r}")
        object.__setattr__(self, "c0", int(self.c0))


@dataclass
class CapacityState:
    """Remaining entangled pairs per edge in the current window."""

    counts: np.ndarray
    c0: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0) or np.any(self.counts > self.c0):
            raise ParameterError("capacities must lie in [0, c0]")

    def copy(self) -> "CapacityState":
        return CapacityState(self.counts.copy(), self.c0)

    def can_serve(self, edge_ids) -> bool:
        return bool(np.all(self.counts[edge_ids] >= 1))

    def consume(self, edge_ids) -> None:
        if not self.can_serve(edge_ids):
            raise ParameterError("cannot consume from an exhausted edge")
        self.counts[edge_ids] -= 1


def link_transmissivity(length: float, alpha: float) -> float:
    if length < 0 or alpha < 0:
        raise ParameterError("length and alpha must be non-negative")
    return math.exp(-alpha * length)


def edge_success_probabilities(net: Network, alpha: float) -> np.ndarray:
    if alpha < 0:
        raise ParameterError("alpha must be non-negative")
    return np.exp(-alpha * net.lengths)


def sample_capacities(net: Network, params: ChannelParams, seed: SeedLike) -> CapacityState:
    """Draw ``Binomial(c0, exp(-alpha L_e))`` pairs on every edge independently.

    numpy's binomial sampler is exact (inversion / BTPE), no normal approximation.
    """
    rng = as_generator(seed)
    p = edge_success_probabilities(net, params.alpha)
    return CapacityState(rng.binomial(params.c0, p), params.c0)


def mean_hop_success(net: Network, alpha: float) -> float:
    """Edge-averaged transmissivity, used as the scalar hop success in averaged mode."""
    if net.n_edges == 0:
        raise EmptyInputError("network has no edges")
    return float(np.mean(edge_success_probabilities(net, alpha)))
