import networkx as nx
import pytest

from Engine.config import apply_overrides
from Engine.constructions import (
    attach_pendants,
    complete_bipartite,
    cycle,
    g1,
    ladder,
    path,
    q_graph,
    quad_book,
    star,
)
from Engine.enumeration import orderly_connected
from Engine.graph_core import CapExceeded, GraphError, canonical_code, make_graph
from Engine.graph_io import from_networkx
from Engine.memo import minor_memo
from Engine.recognition import (
    MinorTarget,
    StructureKind,
    count_hamilton_cycles,
    degree_two_contributions,
    ebo_adjacent,
    ebo_pairs,
    edge_bound,
    edge_equality_holds,
    has_minor,
    is_edge_most,
    is_maximal_2conn_structural,
    is_maximal_bip_outerplanar,
    is_outerplanar,
    is_outerplanar_by_minors,
    is_outerplanar_by_peeling,
    is_star,
    structural_decompose,
    verdict,
)
from tests.conftest import as_networkx


def apex_planar(g: nx.Graph) -> bool:
    h = g.copy()
    h.add_node("apex")
    h.add_edges_from(("apex", v) for v in g.nodes())
    return nx.check_planarity(h)[0]


def atlas(max_n: int):
    return [a for a in nx.graph_atlas_g() if 1 <= a.number_of_nodes() <= max_n]


class TestMinors:
    def test_k4_in_k4(self, k4):
        assert has_minor(k4, MinorTarget.K4)
        assert not has_minor(k4, MinorTarget.K23)

    def test_k23_in_k23(self):
        assert has_minor(complete_bipartite(2, 3), "K23")
        assert not has_minor(complete_bipartite(2, 3), "K4")

    @pytest.mark.parametrize("g", [q_graph(), quad_book(3)])
    def test_book_of_three_quads(self, g):
        assert has_minor(g, MinorTarget.K23)
        assert not is_outerplanar_by_minors(g)

    def test_subdivided_k4(self):
        edges = [(0, 1), (0, 2), (0, 3), (1, 2), (2, 4), (4, 3), (1, 5), (5, 3)]
        assert has_minor(make_graph(6, edges), MinorTarget.K4)

    @pytest.mark.parametrize("g", [cycle(8), ladder(8), path(6), star(7)])
    def test_outerplanar_hosts_have_none(self, g):
        assert not has_minor(g, MinorTarget.K4)
        assert not has_minor(g, MinorTarget.K23)

    def test_unsupported_target(self, c4):
        with pytest.raises(GraphError, match="Unsupported"):
            has_minor(c4, "K5")

    def test_cap(self):
        with pytest.raises(CapExceeded):
            has_minor(path(13), MinorTarget.K4)

    def test_memo_used(self):
        has_minor(ladder(10), MinorTarget.K23)
        assert minor_memo.get_stats()["entries"] > 0


class TestOuterplanarity:
    def test_examples(self, c4, k4, ladder6):
        assert is_outerplanar(c4)
        assert is_outerplanar(ladder6)
        assert not is_outerplanar(k4)
        assert not is_outerplanar(complete_bipartite(2, 3))

    def test_disconnected(self):
        assert is_outerplanar(make_graph(5, [(0, 1), (2, 3)]))

    def test_large_book(self):
        assert not is_outerplanar_by_peeling(g1(36, 4))

    def test_small_books(self):
        assert is_outerplanar_by_peeling(quad_book(2))
        assert not is_outerplanar_by_peeling(quad_book(3))

    def test_atlas_up_to_six(self):
        for a in atlas(6):
            g = from_networkx(a)
            expected = apex_planar(a)
            assert is_outerplanar_by_peeling(g) == expected
            assert is_outerplanar_by_minors(g) == expected

    @pytest.mark.slow
    def test_atlas_seven(self):
        for a in nx.graph_atlas_g():
            if a.number_of_nodes() != 7:
                continue
            g = from_networkx(a)
            assert is_outerplanar(g) == apex_planar(a)

    @pytest.mark.slow
    def test_order_eight_against_planarity_oracle(self):
        # outerplanar classes on 8 vertices and every graph one edge beyond them
        seen = set()
        for g in orderly_connected(8, bipartite=False).values():
            assert is_outerplanar(g)
            assert apex_planar(as_networkx(g))
            for e in g.non_edges():
                h = g.with_edge(*e)
                code = canonical_code(h)
                if code in seen:
                    continue
                seen.add(code)
                assert is_outerplanar(h) == apex_planar(as_networkx(h))
        assert seen

    def test_cross_check_off(self, k4):
        apply_overrides({"cross_check_recognizers": False})
        assert not is_outerplanar(k4)
        assert minor_memo.get_stats()["entries"] == 0


class TestMaximality:
    @pytest.mark.parametrize("g, expected", [
        (cycle(4), True),
        (ladder(6), True),
        (star(4), True),
        (path(3), True),
        (path(4), False),
        (cycle(6), False),
        (attach_pendants(cycle(4), 0, 2), True),
    ])
    def test_examples(self, g, expected):
        assert is_maximal_bip_outerplanar(g) is expected

    def test_two_cycles(self, c4c4):
        assert is_maximal_bip_outerplanar(c4c4)

    def test_rejects_non_bipartite(self, k4):
        with pytest.raises(GraphError, match="bipartite"):
            is_maximal_bip_outerplanar(k4)

    def test_rejects_non_outerplanar(self):
        with pytest.raises(GraphError, match="outerplanar"):
            is_maximal_bip_outerplanar(complete_bipartite(2, 3))

    def test_structural_agrees(self, c4, ladder6):
        assert is_maximal_2conn_structural(c4)
        assert is_maximal_2conn_structural(ladder6)
        assert not is_maximal_2conn_structural(cycle(6))

    def test_structural_needs_2connected(self, star5):
        with pytest.raises(GraphError):
            is_maximal_2conn_structural(star5)


class TestEbo:
    def test_cycle(self, c4):
        assert ebo_pairs(c4) == frozenset({(0, 1), (1, 2), (2, 3), (0, 3)})

    def test_ladder_chord(self, ladder6):
        assert not ebo_adjacent(ladder6, 2, 3)
        assert ebo_adjacent(ladder6, 1, 0)
        assert len(ebo_pairs(ladder6)) == 6

    def test_bridges(self, star5):
        assert ebo_adjacent(star5, 0, 3)

    def test_non_edge_rejected(self, c4):
        with pytest.raises(GraphError):
            ebo_adjacent(c4, 0, 2)


class TestStructure:
    def test_star(self, star5):
        s = structural_decompose(star5)
        assert s.kind == StructureKind.STAR
        assert s.cut_vertices == frozenset({0})
        assert s.blocks == ()

    def test_single_block(self, ladder6):
        s = structural_decompose(ladder6)
        assert s.kind == StructureKind.SINGLE_BLOCK
        assert not s.cut_vertices
        assert s.pendant_roots == {}

    def test_two_cycles(self, c4c4):
        s = structural_decompose(c4c4)
        assert s.kind == StructureKind.COMPOSITE
        assert s.cut_vertices == frozenset({0})
        assert len(s.blocks) == 2

    def test_pendants(self):
        s = structural_decompose(attach_pendants(cycle(4), 0, 2))
        assert s.kind == StructureKind.COMPOSITE
        assert s.pendant_roots == {0: 2}
        assert not s.cut_vertices

    def test_payload(self, c4c4):
        payload = structural_decompose(c4c4).to_payload()
        assert payload["kind"] == "composite"
        assert payload["cut_vertices"] == [0]

    def test_not_maximal(self):
        with pytest.raises(GraphError, match="maximal"):
            structural_decompose(path(5))

    def test_is_star(self, star5, c4):
        assert is_star(star5)
        assert is_star(make_graph(1, []))
        assert is_star(path(3))
        assert not is_star(path(4))
        assert not is_star(c4)


@pytest.mark.parametrize("n, bound", [(1, 0), (2, 1), (3, 2), (4, 4), (5, 5), (6, 7), (7, 8), (10, 13)])
def test_edge_bound(n, bound):
    assert edge_bound(n) == bound


def test_edge_bound_rejects_zero():
    with pytest.raises(GraphError):
        edge_bound(0)


class TestEdgeEquality:
    @pytest.mark.parametrize("g, expected", [
        (ladder(6), True),
        (cycle(4), True),
        (cycle(6), False),
        (star(5), False),
        (path(3), True),
        (make_graph(1, []), True),
        (make_graph(2, [(0, 1)]), True),
        (attach_pendants(cycle(4), 0, 1), True),
        (attach_pendants(cycle(4), 0, 2), False),
    ])
    def test_examples(self, g, expected):
        assert edge_equality_holds(g) is expected
        assert is_edge_most(g) is expected

    def test_non_bipartite(self, k4):
        assert not edge_equality_holds(k4)
        assert not is_edge_most(k4)


def test_degree_two_contributions(ladder6, c4):
    assert degree_two_contributions(ladder6) == {0: 3, 1: 3, 4: 3, 5: 3}
    assert degree_two_contributions(c4) == {0: 2, 1: 2, 2: 2, 3: 2}
    with pytest.raises(GraphError):
        degree_two_contributions(path(4))


def test_count_hamilton_cycles(ladder6, c4):
    assert count_hamilton_cycles(ladder6) == 1
    assert count_hamilton_cycles(c4) == 1


class TestVerdict:
    def test_k4(self, k4):
        out = verdict(k4)
        assert out["outerplanar"] is False
        assert out["bipartite"] is False
        assert out["k4_minor"] is True
        assert out["maximal"] is False

    def test_ladder(self, ladder6):
        out = verdict(ladder6)
        assert out["maximal"] is True
        assert out["edge_most"] is True
        assert out["structure"]["kind"] == "single_block"
        assert out["maximal_2conn_structural"] is True
