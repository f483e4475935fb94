import logging

import pytest

from Engine.constructions import (
    Family,
    FamilySpec,
    attach_pendants,
    complete_bipartite,
    cycle,
    edge_rotation,
    family,
    g1,
    g2,
    g2_to_star,
    h_case,
    h_case_attached,
    ladder,
    path,
    q_graph,
    quad_book,
    quadrangulation,
    rewire,
    star,
)
from Engine.graph_core import CapExceeded, GraphError, bipartition, canonical_code, is_connected
from Engine.recognition import is_maximal_2conn_structural, is_outerplanar, is_star


def same(a, b) -> bool:
    return canonical_code(a) == canonical_code(b)


class TestBasicFamilies:
    @pytest.mark.parametrize("g, n, m", [
        (star(5), 5, 4),
        (path(4), 4, 3),
        (cycle(6), 6, 6),
        (ladder(8), 8, 10),
        (complete_bipartite(2, 3), 5, 6),
    ])
    def test_sizes(self, g, n, m):
        assert (g.n, g.m) == (n, m)

    @pytest.mark.parametrize("build", [lambda: star(0), lambda: path(0), lambda: cycle(2), lambda: ladder(5)])
    def test_rejects(self, build):
        with pytest.raises(GraphError):
            build()

    def test_ladder_is_quadrangulated(self):
        for n in (4, 6, 8, 12):
            assert is_maximal_2conn_structural(ladder(n))


class TestBooks:
    @pytest.mark.parametrize("s", [1, 2, 3, 5, 8])
    def test_quad_book_size(self, s):
        g = quad_book(s)
        assert (g.n, g.m) == (2 * s + 2, 3 * s + 1)
        assert bipartition(g) is not None

    def test_quad_book_outerplanarity(self):
        assert is_outerplanar(quad_book(2))
        assert not is_outerplanar(quad_book(3))

    def test_quad_book_cap(self):
        with pytest.raises(CapExceeded):
            quad_book(32)

    def test_g1(self):
        g = g1(36, 4)
        assert (g.n, g.m) == (36, 39)
        assert g.degree(0) == 4 + 1 + 26

    def test_g1_minimal(self):
        assert same(g1(4, 1), cycle(4))

    @pytest.mark.parametrize("n, s", [(36, 5), (36, 0), (9, 4)])
    def test_g1_rejects(self, n, s):
        with pytest.raises(GraphError):
            g1(n, s)

    def test_g1_unchecked(self):
        assert g1(14, 6, unchecked=True).m == 19

    def test_g2(self):
        g = g2(12, 5)
        assert (g.n, g.m) == (12, 15)
        assert g.degree(0) == 10
        assert g.degree(1) == 5

    def test_g2_small_is_path(self):
        assert same(g2(4, 1), path(4))

    @pytest.mark.parametrize("n, s", [(12, 9), (4, 3), (12, 0)])
    def test_g2_rejects(self, n, s):
        with pytest.raises(GraphError):
            g2(n, s)

    def test_g2_to_star(self):
        out = g2_to_star(12, 5)
        assert is_star(out)
        assert same(out, star(12))


class TestHCases:
    def test_first_is_ladder(self):
        assert same(h_case(1), ladder(10))

    @pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
    def test_shape(self, i):
        h = h_case(i)
        assert (h.n, h.m) == (10, 13)
        assert is_connected(h)
        assert bipartition(h) is not None
        assert is_outerplanar(h)

    def test_hub_degree(self):
        assert h_case(5).degree(3) == 5

    def test_rejects_index(self):
        with pytest.raises(GraphError):
            h_case(6)

    def test_attached(self):
        g = h_case_attached(5, 3, 26)
        assert (g.n, g.m) == (36, 39)
        assert g.degree(3) == 31


def test_q_graph():
    q = q_graph()
    assert (q.n, q.m) == (8, 10)
    assert q.degree(0) == 4 and q.degree(1) == 4
    assert same(q, quad_book(3))


class TestPendants:
    def test_attach(self, c4):
        g = attach_pendants(c4, 1, 3)
        assert (g.n, g.m) == (7, 7)
        assert g.neighbors(1) == [0, 2, 4, 5, 6]

    def test_zero_is_identity(self, c4):
        assert attach_pendants(c4, 0, 0) is c4

    @pytest.mark.parametrize("root, eps", [(4, 1), (-1, 1), (0, -1)])
    def test_rejects(self, c4, root, eps):
        with pytest.raises(GraphError):
            attach_pendants(c4, root, eps)

    def test_cap(self, c4):
        with pytest.raises(CapExceeded):
            attach_pendants(c4, 0, 61)


class TestRotation:
    def test_moves_edges(self):
        g = g2(12, 5)
        out = edge_rotation(g, 0, 2, [1])
        assert out.m == g.m
        assert out.has_edge(0, 1)
        assert not out.has_edge(2, 1)
        assert is_connected(out)

    def test_path_to_star(self):
        out = edge_rotation(path(4), 1, 2, [3])
        assert same(out, star(4))

    def test_disconnecting_rotation(self):
        with pytest.raises(GraphError, match="disconnects"):
            edge_rotation(path(5), 4, 1, [0, 2])

    @pytest.mark.parametrize("u, v, targets", [
        (0, 0, [1]),
        (0, 1, []),
        (0, 1, [3]),
        (0, 2, [1]),
    ])
    def test_rejects(self, c4, u, v, targets):
        with pytest.raises(GraphError):
            edge_rotation(c4, u, v, targets)

    def test_rewire(self, c4):
        out = rewire(c4, [(0, 1)], [(0, 2)])
        assert out.has_edge(0, 2) and not out.has_edge(0, 1)
        with pytest.raises(GraphError):
            rewire(c4, [(0, 2)], [])
        with pytest.raises(GraphError):
            rewire(c4, [], [(0, 1)])


class TestQuadrangulation:
    def test_ladder_plan(self):
        assert same(quadrangulation(6, [(0, 3)]), ladder(6))

    def test_octagon(self):
        g = quadrangulation(8, [(0, 3), (4, 7)])
        assert g.m == 10
        assert is_maximal_2conn_structural(g)

    @pytest.mark.parametrize("n, plan", [
        (7, []),
        (6, [(0, 1)]),
        (6, [(0, 5)]),
        (6, []),
        (8, [(0, 3), (1, 6)]),
        (8, [(0, 2)]),
        (6, [(0, 9)]),
    ])
    def test_rejects(self, n, plan):
        with pytest.raises(GraphError):
            quadrangulation(n, plan)


class TestFamilyDispatch:
    def test_g1(self):
        g = family(FamilySpec(family=Family.G1, n=36, s=4))
        assert g.m == 39

    def test_string_family(self):
        assert family(FamilySpec(family="star", n=6)).m == 5

    def test_h_case_with_pendants(self):
        spec = FamilySpec(family="h_case", extra={"index": 5, "root": 3, "eps": 26})
        assert family(spec).n == 36

    def test_quadrangulation(self):
        spec = FamilySpec(family="quadrangulation", n=8, extra={"chords": [[0, 3], [4, 7]]})
        assert family(spec).m == 10

    def test_q(self):
        assert family(FamilySpec(family="q")).n == 8

    def test_missing_parameter(self):
        with pytest.raises(GraphError, match="'n'"):
            family(FamilySpec(family="ladder"))

    def test_unchecked_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            g = family(FamilySpec(family="g2", n=14, s=10, unchecked=True))
        assert g.m == 22
        assert "unchecked" in caplog.text
