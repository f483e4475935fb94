import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

from Engine.config import settings
from Engine.embedding import all_faces_quad, embed, hamilton_cycle, hamilton_cycles_exhaustive
from Engine.graph_core import (
    CapExceeded,
    Graph,
    GraphError,
    bipartition,
    block_tree,
    canonical_code,
    is_2connected,
)
from Engine.memo import minor_memo
from Engine.violations import hard_failure

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class MinorTarget(str, Enum):
    K4 = "K4"
    K23 = "K23"


class StructureKind(str, Enum):
    STAR = "star"
    SINGLE_BLOCK = "single_block"
    COMPOSITE = "composite"


# (order, size, vertices of degree >= 3) of each forbidden minor
_TARGET_SHAPE = {
    MinorTarget.K4: (4, 6, 4),
    MinorTarget.K23: (5, 6, 2),
}


@dataclass(frozen=True)
class MaximalStructure:
    kind: StructureKind
    blocks: Tuple[Graph, ...]
    block_vertices: Tuple[Tuple[int, ...], ...]
    cut_vertices: FrozenSet[int]
    pendant_roots: Dict[int, int]
    ebo_pairs: FrozenSet[Pair]

    def to_payload(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value,
            "blocks": [list(b) for b in self.block_vertices],
            "cut_vertices": sorted(self.cut_vertices),
            "pendant_roots": {str(k): v for k, v in sorted(self.pendant_roots.items())},
            "ebo_pairs": [list(p) for p in sorted(self.ebo_pairs)],
        }


def _parse_target(h: Union[MinorTarget, str]) -> MinorTarget:
    try:
        return MinorTarget(h)
    except ValueError:
        raise GraphError(f"Unsupported minor target {h!r}; expected one of K4, K23")


def _prune_low_degree(g: Graph) -> Optional[Graph]:
    # targets have minimum degree 2, so vertices of degree <= 1 never carry a branch set
    while True:
        low = [v for v in range(g.n) if g.degree(v) <= 1]
        if not low:
            return g
        if len(low) == g.n:
            return None
        g = g.induced(v for v in range(g.n) if g.degree(v) > 1)[0]


def _spans_target(g: Graph, target: MinorTarget) -> bool:
    if target == MinorTarget.K4:
        return g.m == 6
    full = (1 << g.n) - 1
    for a, b in combinations(range(g.n), 2):
        others = full & ~((1 << a) | (1 << b))
        if g.rows[a] & others == others and g.rows[b] & others == others:
            return True
    return False


def _search_minor(g: Graph, target: MinorTarget) -> bool:
    pruned = _prune_low_degree(g)
    if pruned is None:
        return False
    g = pruned

    order, size, branch = _TARGET_SHAPE[target]
    if g.n < order or g.m < size:
        return False
    comps = g.components()
    if len(comps) > 1:
        return any(
            _search_minor(g.induced(c)[0], target) for c in comps if len(c) >= order
        )
    if sum(1 for d in g.degrees() if d >= 3) < branch:
        return False
    if target == MinorTarget.K4 and g.m >= 2 * g.n - 2:
        return True
    if g.n == order:
        return _spans_target(g, target)

    key = (target.value, canonical_code(g))
    cached = minor_memo.get(key)
    if cached is not None:
        return cached

    degs = g.degrees()
    edges = sorted(g.edges(), key=lambda e: (degs[e[0]] + degs[e[1]], e))
    # connected host: every vertex outside the branch sets can be contracted into one
    result = any(_search_minor(g.contract(u, v), target) for u, v in edges)
    minor_memo.set(key, result)
    return result


def has_minor(g: Graph, h: Union[MinorTarget, str]) -> bool:
    target = _parse_target(h)
    if g.n > settings.minor_max_n:
        raise CapExceeded(f"Minor search capped at n <= {settings.minor_max_n}, got {g.n}")
    return _search_minor(g, target)


def is_outerplanar_by_minors(g: Graph) -> bool:
    return not has_minor(g, MinorTarget.K4) and not has_minor(g, MinorTarget.K23)


def is_outerplanar_by_peeling(g: Graph) -> bool:
    core = _prune_low_degree(g)
    if core is None:
        return True
    for comp in core.components():
        if len(comp) < 3:
            continue
        sub, _ = core.induced(comp)
        for block in block_tree(sub).blocks:
            if len(block) < 3:
                continue
            piece, _ = sub.induced(block)
            if hamilton_cycle(piece) is None:
                return False
    return True


def is_outerplanar(g: Graph) -> bool:
    peeled = is_outerplanar_by_peeling(g)
    if settings.cross_check_recognizers and g.n <= settings.minor_max_n:
        by_minors = is_outerplanar_by_minors(g)
        if by_minors != peeled:
            hard_failure(
                "recognizer-agreement",
                f"peeling says {peeled}, minor search says {by_minors}",
                g,
            )
    return peeled


def _require_bip_outerplanar(g: Graph, op: str):
    if bipartition(g) is None:
        raise GraphError(f"{op} requires a bipartite graph")
    if not is_outerplanar_by_peeling(g):
        raise GraphError(f"{op} requires an outerplanar graph")


def is_maximal_bip_outerplanar(g: Graph) -> bool:
    _require_bip_outerplanar(g, "is_maximal_bip_outerplanar")
    for u, v in g.non_edges():
        h = g.with_edge(u, v)
        if bipartition(h) is not None and is_outerplanar_by_peeling(h):
            return False
    return True


def is_maximal_2conn_structural(g: Graph) -> bool:
    if not is_2connected(g):
        raise GraphError("is_maximal_2conn_structural requires a 2-connected graph")
    _require_bip_outerplanar(g, "is_maximal_2conn_structural")
    return all_faces_quad(embed(g))


def _block_cycles(g: Graph) -> List[Tuple[FrozenSet[int], Optional[List[int]]]]:
    """Each block with its outer cycle in host labels (None for bridges)."""
    out = []
    for comp in g.components():
        sub, back = g.induced(comp)
        for block in block_tree(sub).blocks:
            host_block = frozenset(back[v] for v in block)
            if len(block) < 3:
                out.append((host_block, None))
                continue
            piece, piece_back = sub.induced(block)
            cycle = hamilton_cycle(piece)
            if cycle is None:
                raise GraphError("EBO-adjacency requires an outerplanar graph")
            out.append((host_block, [back[piece_back[v]] for v in cycle]))
    return out


def ebo_pairs(g: Graph) -> FrozenSet[Pair]:
    pairs: Set[Pair] = set()
    for block, cycle in _block_cycles(g):
        if cycle is None:
            if len(block) == 2:
                pairs.add(tuple(sorted(block)))
            continue
        for i in range(len(cycle)):
            pairs.add(tuple(sorted((cycle[i], cycle[(i + 1) % len(cycle)]))))
    return frozenset(pairs)


def ebo_adjacent(g: Graph, u: int, v: int) -> bool:
    if not (0 <= u < g.n and 0 <= v < g.n) or u == v or not g.has_edge(u, v):
        raise GraphError(f"ebo_adjacent requires an edge, ({u}, {v}) is not one")
    return (min(u, v), max(u, v)) in ebo_pairs(g)


def is_star(g: Graph) -> bool:
    if g.n == 1:
        return True
    if g.m != g.n - 1:
        return False
    return max(g.degrees()) == g.n - 1


def structural_decompose(g: Graph) -> MaximalStructure:
    if not is_maximal_bip_outerplanar(g):
        raise GraphError("structural_decompose requires a maximal bipartite outerplanar graph")

    ebo = ebo_pairs(g)
    if is_star(g):
        center = max(range(g.n), key=lambda v: (g.degree(v), -v))
        cuts = frozenset({center}) if g.n >= 3 else frozenset()
        return MaximalStructure(
            kind=StructureKind.STAR,
            blocks=(),
            block_vertices=(),
            cut_vertices=cuts,
            pendant_roots={},
            ebo_pairs=ebo,
        )

    tree = block_tree(g)
    big = [b for b in tree.blocks if len(b) >= 3]
    bridges = [tuple(sorted(b)) for b in tree.blocks if len(b) == 2]
    if not big:
        hard_failure("structure-blocks", "non-star maximal graph without a 2-connected block", g)

    h_vertices = set().union(*big)
    roots: Dict[int, int] = {}
    for a, b in bridges:
        leaf, root = (a, b) if g.degree(a) == 1 else (b, a)
        if g.degree(leaf) != 1 or root not in h_vertices:
            hard_failure("structure-pendants", f"bridge ({a}, {b}) is not a pendant edge on a block", g)
        roots[root] = roots.get(root, 0) + 1

    blocks = []
    for b in big:
        piece, _ = g.induced(b)
        if not is_maximal_2conn_structural(piece):
            hard_failure("structure-blocks", f"block {sorted(b)} has an inner face that is not a 4-cycle", g)
        blocks.append(piece)

    membership: Dict[int, int] = {}
    for b in big:
        for v in b:
            membership[v] = membership.get(v, 0) + 1
    cuts = frozenset(v for v, c in membership.items() if c >= 2)

    for a, b in combinations(sorted(cuts), 2):
        if (a, b) in ebo:
            hard_failure("structure-2.1", f"cut vertices {a} and {b} are EBO-adjacent", g)
    for r in sorted(roots):
        for c in sorted(cuts):
            if (min(r, c), max(r, c)) in ebo:
                hard_failure("structure-2.2", f"pendant root {r} is EBO-adjacent to cut vertex {c}", g)
    for a, b in combinations(sorted(roots), 2):
        if (a, b) in ebo:
            hard_failure("structure-roots", f"pendant roots {a} and {b} are EBO-adjacent", g)

    kind = StructureKind.SINGLE_BLOCK if len(big) == 1 and not roots else StructureKind.COMPOSITE
    return MaximalStructure(
        kind=kind,
        blocks=tuple(blocks),
        block_vertices=tuple(tuple(sorted(b)) for b in big),
        cut_vertices=cuts,
        pendant_roots=roots,
        ebo_pairs=ebo,
    )


def degree_two_contributions(g: Graph) -> Dict[int, int]:
    """deg(v1) + deg(v2) - 2 for every degree-2 vertex v with neighbours v1, v2."""
    if not is_2connected(g):
        raise GraphError("degree_two_contributions requires a 2-connected graph")
    _require_bip_outerplanar(g, "degree_two_contributions")
    out = {}
    for v in range(g.n):
        if g.degree(v) == 2:
            a, b = g.neighbors(v)
            out[v] = g.degree(a) + g.degree(b) - 2
    return out


def edge_bound(n: int) -> int:
    if n < 1:
        raise GraphError(f"edge_bound needs n >= 1, got {n}")
    if n == 1:
        return 0
    if n % 2 == 0:
        return 3 * n // 2 - 2
    return (3 * n - 5) // 2


def is_edge_most(g: Graph) -> bool:
    if bipartition(g) is None or not is_outerplanar_by_peeling(g):
        return False
    return g.m == edge_bound(g.n)


def edge_equality_holds(g: Graph) -> bool:
    """Structural side of the edge-count equality characterization."""
    if bipartition(g) is None or not is_outerplanar_by_peeling(g):
        return False
    if g.n == 1:
        return True
    if g.n == 2:
        return g.m == 1
    if len(g.components()) != 1:
        return False
    if g.n % 2 == 0:
        return is_2connected(g) and is_maximal_bip_outerplanar(g)

    blocks = block_tree(g).blocks
    if len(blocks) != 2:
        return False
    for b in blocks:
        if len(b) % 2:
            return False
        if len(b) > 2:
            piece, _ = g.induced(b)
            if not is_maximal_2conn_structural(piece):
                return False
    return True


def count_hamilton_cycles(g: Graph) -> int:
    return len(hamilton_cycles_exhaustive(g))


def verdict(g: Graph) -> Dict[str, object]:
    """Recognition summary used by the check command."""
    bip = bipartition(g) is not None
    outer = is_outerplanar(g)
    out: Dict[str, object] = {
        "n": g.n,
        "m": g.m,
        "connected": len(g.components()) == 1,
        "bipartite": bip,
        "outerplanar": outer,
        "maximal": False,
        "structure": None,
    }
    if g.n <= settings.minor_max_n:
        out["k4_minor"] = has_minor(g, MinorTarget.K4)
        out["k23_minor"] = has_minor(g, MinorTarget.K23)
    if bip and outer:
        out["edge_most"] = g.m == edge_bound(g.n)
        maximal = is_maximal_bip_outerplanar(g)
        out["maximal"] = maximal
        if maximal:
            out["structure"] = structural_decompose(g).to_payload()
        if is_2connected(g):
            out["maximal_2conn_structural"] = is_maximal_2conn_structural(g)
    return out
