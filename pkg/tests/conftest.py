import json

import networkx as nx
import numpy as np
import pytest

from Engine.config import reset_settings
from Engine.constructions import complete, cycle, ladder, star
from Engine.graph_core import Graph, k_sum, make_graph
from Engine.memo import minor_memo
from Engine.timing import run_tracker
from Engine.violations import violation_collector


@pytest.fixture(autouse=True)
def clean_state():
    reset_settings()
    violation_collector.clear()
    minor_memo.clear()
    run_tracker.reset()
    yield
    reset_settings()
    violation_collector.clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def c4() -> Graph:
    return cycle(4)


@pytest.fixture
def k4() -> Graph:
    return complete(4)


@pytest.fixture
def ladder6() -> Graph:
    return ladder(6)


@pytest.fixture
def star5() -> Graph:
    return star(5)


@pytest.fixture
def c4c4() -> Graph:
    """Two 4-cycles 0-1-2-3 and 0-4-5-6 sharing vertex 0."""
    return k_sum(cycle(4), cycle(4), [0], [0])


@pytest.fixture
def graph_file(tmp_path):
    def write(g: Graph, name: str = "graph.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(g.to_payload()))
        return str(path)
    return write


def random_graph(rng, n: int, p: float) -> Graph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return make_graph(n, edges)


def as_networkx(g: Graph) -> nx.Graph:
    out = nx.Graph()
    out.add_nodes_from(range(g.n))
    out.add_edges_from(g.edges())
    return out
