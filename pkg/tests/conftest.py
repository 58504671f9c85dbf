import json

import numpy as np
import pytest

from markov_io import FlowNetwork, NodeRef, build_network


def nodes_for(n, economy="E"):
    return tuple(NodeRef(economy, f"I{k}") for k in range(n))


def random_weights(n, rng, density=0.5):
    """Random nonnegative flows whose chain is irreducible and aperiodic.

    A ring guarantees strong connectivity and a positive diagonal rules out
    periodicity; the rest is sparse lognormal noise.
    """
    w = rng.lognormal(0.0, 1.0, (n, n)) * (rng.random((n, n)) < density)
    ring = np.roll(np.arange(n), 1)
    w[np.arange(n), ring] += rng.uniform(0.5, 2.0, n)
    w[np.arange(n), np.arange(n)] += rng.uniform(0.1, 1.0, n)
    return w


def random_network(n, seed, year=2011, density=0.5):
    rng = np.random.default_rng(seed)
    return FlowNetwork(year, nodes_for(n), random_weights(n, rng, density))


def balanced_weights(n, rng, cycles=6):
    """Superpose weighted directed cycles; every node's inflow equals its outflow."""
    w = np.zeros((n, n))
    for _ in range(cycles):
        order = rng.permutation(n)
        weight = rng.uniform(0.5, 3.0)
        w[np.roll(order, -1), order] += weight
    w[np.arange(n), np.arange(n)] += rng.uniform(0.1, 1.0, n)
    return w


CLOSED_NODES = (
    NodeRef("E1", "I1"),
    NodeRef("E1", "GOV"),
    NodeRef("E2", "I1"),
    NodeRef("E2", "GOV"),
)


def closed_edges():
    e1i, e1g, e2i, e2g = CLOSED_NODES
    return [
        (e1i, e1i, 2.0),
        (e2i, e2i, 2.0),
        (e1i, e1g, 3.0),
        (e1g, e1i, 3.0),
        (e2i, e2g, 3.0),
        (e2g, e2i, 3.0),
        (e1i, e2i, 1.0),
        (e2i, e1i, 1.0),
    ]


@pytest.fixture
def closed_economy():
    return build_network(2011, CLOSED_NODES, closed_edges())


@pytest.fixture
def two_uniform():
    return FlowNetwork(2011, nodes_for(2), np.ones((2, 2)))


def write_panel(directory, networks, gdp=None):
    """Write networks (and optional ``{(year, economy): value}`` GDP) plus a manifest; return its path."""
    from markov_io import write_flow_csv

    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for net in networks:
        name = f"flows_{net.year}.csv"
        write_flow_csv(net, directory / name)
        entries.append({"year": net.year, "flows": name})
    manifest = {"years": entries}
    if gdp is not None:
        lines = ["year,economy,gdp"] + [f"{y},{eco},{value!r}" for (y, eco), value in sorted(gdp.items())]
        (directory / "gdp.csv").write_text("\n".join(lines) + "\n")
        manifest["gdp"] = "gdp.csv"
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def two_economy_network(year, cross=1.0, n_sectors=2):
    """Two economies with identical internal structure joined by ``cross`` flows."""
    nodes = tuple(NodeRef(eco, f"c{k}") for eco in ("AAA", "BBB") for k in range(1, n_sectors + 1))
    n = len(nodes)
    w = np.zeros((n, n))
    for block in (slice(0, n_sectors), slice(n_sectors, n)):
        w[block, block] = 4.0
    w[:n_sectors, n_sectors:] = cross
    w[n_sectors:, :n_sectors] = cross
    return FlowNetwork(year, nodes, w)


ACCEPTANCE_RESULTS = {}


@pytest.fixture
def criterion():
    """Record ``(number, status, detail)`` for the acceptance summary."""

    def record(number, passed, detail, status=None):
        ACCEPTANCE_RESULTS[number] = (status or ("PASS" if passed else "FAIL"), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status:<13} {detail}")
