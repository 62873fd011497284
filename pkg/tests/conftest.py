import sys

import numpy as np
import pytest

from tournament_routing.netgraph import Network


def chain_network() -> Network:
    """Eight nodes: source 0 and destination 7 joined by three internally
    disjoint chains of 2, 3 and 4 hops and nothing else."""
    pos = [
        (0.1, 0.5),   # 0 source
        (0.5, 0.5),   # 1 chain A
        (0.35, 0.75), # 2 chain B
        (0.65, 0.75), # 3 chain B
        (0.3, 0.2),   # 4 chain C
        (0.5, 0.15),  # 5 chain C
        (0.7, 0.2),   # 6 chain C
        (0.9, 0.5),   # 7 destination
    ]
    edges = [(0, 1), (1, 7), (0, 2), (2, 3), (3, 7), (0, 4), (4, 5), (5, 6), (6, 7)]
    return Network.from_edges(pos, edges, radius=0.6)


CHAIN_ROUTES = [(0, 1, 7), (0, 2, 3, 7), (0, 4, 5, 6, 7)]
CHAIN_ALPHA = 3.0


def chain_edge_probs(net: Network, alpha: float = CHAIN_ALPHA):
    probs = []
    for route in CHAIN_ROUTES:
        ids = [net.edge_index[tuple(sorted(e))] for e in zip(route, route[1:])]
        probs.append([float(np.exp(-alpha * net.lengths[i])) for i in ids])
    return probs


@pytest.fixture
def chain():
    return chain_network()


def cycle4() -> Network:
    pos = [(0.2, 0.2), (0.8, 0.2), (0.8, 0.8), (0.2, 0.8)]
    return Network.from_edges(pos, [(0, 1), (1, 2), (2, 3), (3, 0)], radius=0.7)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.report_lines():
        terminalreporter.write_line(line)
