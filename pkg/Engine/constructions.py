"""Constructors for the named graph families and the surgeries used on them.

Figure vertex numbering is 1-based; it is shifted to 0-based here and nowhere else.

quad_book(s), g1(n, s) and g2(n, s) contain a K2,3 minor once s >= 3 (contract
each quadrilateral's far edge, or read off K2,s directly), so they are bipartite
but not outerplanar in that range. Their spectral statements are still checked.
"""
import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from Engine.embedding import chords_cross, polygon_faces
from Engine.graph_core import (
    MAX_VERTICES,
    CapExceeded,
    Graph,
    GraphError,
    is_connected,
    make_graph,
)

logger = logging.getLogger(__name__)

G1_MAX_S = 4
G2_MAX_S = 8


class Family(str, Enum):
    STAR = "star"
    CYCLE = "cycle"
    PATH = "path"
    LADDER = "ladder"
    QUAD_BOOK = "quad_book"
    G1 = "g1"
    G2 = "g2"
    H_CASE = "h_case"
    Q = "q"
    QUADRANGULATION = "quadrangulation"


class FamilySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Family
    n: Optional[int] = None
    s: Optional[int] = None
    extra: Dict[str, Any] = {}
    unchecked: bool = False


# Fig. 4.3, 1-based as drawn
H_CASE_EDGES: Dict[int, List[Tuple[int, int]]] = {
    1: [(1, 3), (3, 5), (5, 7), (7, 9), (2, 4), (4, 6), (6, 8), (8, 10),
        (1, 2), (3, 4), (5, 6), (7, 8), (9, 10)],
    2: [(1, 2), (1, 3), (3, 5), (5, 7), (2, 4), (4, 6), (6, 8), (7, 8),
        (3, 4), (5, 6), (9, 10), (6, 9), (8, 10)],
    3: [(1, 2), (1, 3), (3, 5), (5, 7), (2, 4), (4, 6), (6, 8), (7, 8),
        (3, 4), (5, 6), (9, 10), (4, 9), (6, 10)],
    4: [(1, 3), (3, 5), (2, 4), (4, 6), (1, 2), (5, 6), (3, 4), (8, 9),
        (9, 10), (4, 8), (6, 7), (7, 10), (6, 9)],
    5: [(1, 2), (5, 6), (3, 4), (8, 7), (4, 8), (6, 7), (2, 4), (4, 6),
        (4, 10), (10, 9), (8, 9), (1, 3), (3, 5)],
}

# Fig. 3.6, i1..i8
Q_EDGES: List[Tuple[int, int]] = [
    (3, 4), (4, 1), (1, 2), (2, 3), (2, 5), (5, 6), (6, 1), (1, 8), (8, 7), (7, 2),
]


def _from_one_based(n: int, edges: Sequence[Tuple[int, int]]) -> Graph:
    return make_graph(n, [(u - 1, v - 1) for u, v in edges])


def star(n: int) -> Graph:
    if n < 1:
        raise GraphError(f"star needs n >= 1, got {n}")
    return make_graph(n, [(0, i) for i in range(1, n)])


def path(n: int) -> Graph:
    if n < 1:
        raise GraphError(f"path needs n >= 1, got {n}")
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3, got {n}")
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    return make_graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def complete_bipartite(a: int, b: int) -> Graph:
    return make_graph(a + b, [(u, a + v) for u in range(a) for v in range(b)])


def ladder(n: int) -> Graph:
    """2 x n/2 grid: rungs (2i, 2i+1), rails 2i - 2i+2 and 2i+1 - 2i+3."""
    if n < 4 or n % 2:
        raise GraphError(f"ladder needs even n >= 4, got {n}")
    k = n // 2
    edges = [(2 * i, 2 * i + 1) for i in range(k)]
    edges += [(2 * i, 2 * i + 2) for i in range(k - 1)]
    edges += [(2 * i + 1, 2 * i + 3) for i in range(k - 1)]
    return make_graph(n, edges)


def quad_book(s: int) -> Graph:
    """s quadrilaterals 0-1-a-b sharing the edge 01; m = 3s + 1."""
    if s < 1:
        raise GraphError(f"quad_book needs s >= 1, got {s}")
    if 2 * s + 2 > MAX_VERTICES:
        raise CapExceeded(f"quad_book({s}) exceeds {MAX_VERTICES} vertices")
    edges = [(0, 1)]
    for j in range(1, s + 1):
        a, b = 2 * j, 2 * j + 1
        edges += [(1, a), (a, b), (b, 0)]
    return make_graph(2 * s + 2, edges)


def attach_pendants(g: Graph, root: int, eps: int) -> Graph:
    if not 0 <= root < g.n:
        raise GraphError(f"Pendant root {root} outside 0..{g.n - 1}")
    if eps < 0:
        raise GraphError(f"Pendant count must be >= 0, got {eps}")
    if g.n + eps > MAX_VERTICES:
        raise CapExceeded(f"Attaching {eps} pendants to n={g.n} exceeds {MAX_VERTICES}")
    if eps == 0:
        return g
    edges = g.edges() + [(root, g.n + i) for i in range(eps)]
    return make_graph(g.n + eps, edges)


def g1(n: int, s: int, unchecked: bool = False) -> Graph:
    if s < 1 or (not unchecked and s > G1_MAX_S):
        raise GraphError(f"g1 needs 1 <= s <= {G1_MAX_S}, got s={s}")
    if n < 2 * s + 2:
        raise GraphError(f"g1 needs n >= 2s+2 = {2 * s + 2}, got n={n}")
    return attach_pendants(quad_book(s), 0, n - (2 * s + 2))


def g2(n: int, s: int, unchecked: bool = False) -> Graph:
    if s < 1 or (not unchecked and s > G2_MAX_S):
        raise GraphError(f"g2 needs 1 <= s <= {G2_MAX_S}, got s={s}")
    if n < s + 2:
        raise GraphError(f"g2 needs n >= s+2 = {s + 2}, got n={n}")
    if n > MAX_VERTICES:
        raise CapExceeded(f"g2 order {n} exceeds {MAX_VERTICES}")
    edges = []
    for i in range(2, s + 2):
        edges += [(0, i), (i, 1)]
    edges += [(0, i) for i in range(s + 2, n)]
    return make_graph(n, edges)


def h_case(i: int) -> Graph:
    if i not in H_CASE_EDGES:
        raise GraphError(f"h_case index must be in 1..5, got {i}")
    return _from_one_based(10, H_CASE_EDGES[i])


def h_case_attached(i: int, u: int, eps: int) -> Graph:
    return attach_pendants(h_case(i), u, eps)


def q_graph() -> Graph:
    return _from_one_based(8, Q_EDGES)


def edge_rotation(g: Graph, u: int, v: int, targets: Sequence[int]) -> Graph:
    """G - sum(v t) + sum(u t) over the targets."""
    if u == v or not (0 <= u < g.n and 0 <= v < g.n):
        raise GraphError(f"Rotation needs two distinct vertices, got ({u}, {v})")
    if not targets:
        raise GraphError("Rotation needs at least one target")
    if not is_connected(g):
        raise GraphError("Rotation requires a connected graph")
    for t in targets:
        if not g.has_edge(v, t) or t == u or g.has_edge(u, t):
            raise GraphError(f"Rotation target {t} is not in N({v}) minus N[{u}]")
    rows = list(g.rows)
    for t in set(targets):
        rows[v] &= ~(1 << t)
        rows[t] &= ~(1 << v)
        rows[u] |= 1 << t
        rows[t] |= 1 << u
    out = Graph(g.n, tuple(rows))
    if not is_connected(out):
        raise GraphError(f"Rotating {list(targets)} from {v} to {u} disconnects the graph")
    return out


def rewire(g: Graph, remove: Sequence[Tuple[int, int]], add: Sequence[Tuple[int, int]]) -> Graph:
    for u, v in remove:
        if not g.has_edge(u, v):
            raise GraphError(f"Cannot remove non-edge ({u}, {v})")
    for u, v in add:
        if g.has_edge(u, v):
            raise GraphError(f"Cannot add existing edge ({u}, {v})")
    out = g
    for u, v in remove:
        out = out.without_edge(u, v)
    for u, v in add:
        out = out.with_edge(u, v)
    return out


def g2_to_star(n: int, s: int) -> Graph:
    """Drop every edge from v2 into a path middle and join v2 to v1; the result is the star."""
    g = g2(n, s, unchecked=True)
    remove = [(i, 1) for i in range(2, s + 2)]
    return rewire(g, remove, [(0, 1)])


def quadrangulation(outer_n: int, chord_plan: Sequence[Tuple[int, int]]) -> Graph:
    """Polygon 0..outer_n-1 dissected by the chords; every inner face must be a 4-cycle."""
    if outer_n < 4 or outer_n % 2:
        raise GraphError(f"quadrangulation needs even outer_n >= 4, got {outer_n}")
    chords = set()
    for a, b in chord_plan:
        p, q = sorted((a, b))
        if not (0 <= p < q < outer_n):
            raise GraphError(f"Chord ({a}, {b}) outside the polygon")
        if q - p == 1 or (p == 0 and q == outer_n - 1):
            raise GraphError(f"Chord ({a}, {b}) is a polygon side")
        chords.add((p, q))
    ordered = sorted(chords)
    for i, c in enumerate(ordered):
        for d in ordered[i + 1:]:
            if chords_cross(c, d):
                raise GraphError(f"Chords {c} and {d} cross")
    for face in polygon_faces(outer_n, ordered):
        if len(face) != 4:
            raise GraphError(f"Plan leaves a non-quad face of length {len(face)}")
    edges = [(i, (i + 1) % outer_n) for i in range(outer_n)] + ordered
    return make_graph(outer_n, edges)


def family(spec: FamilySpec) -> Graph:
    extra = spec.extra

    def need(name: str, value: Optional[int]) -> int:
        if value is None:
            raise GraphError(f"Family {spec.family.value} needs parameter '{name}'")
        return value

    if spec.family == Family.STAR:
        g = star(need("n", spec.n))
    elif spec.family == Family.CYCLE:
        g = cycle(need("n", spec.n))
    elif spec.family == Family.PATH:
        g = path(need("n", spec.n))
    elif spec.family == Family.LADDER:
        g = ladder(need("n", spec.n))
    elif spec.family == Family.QUAD_BOOK:
        g = quad_book(need("s", spec.s))
    elif spec.family == Family.G1:
        g = g1(need("n", spec.n), need("s", spec.s), unchecked=spec.unchecked)
    elif spec.family == Family.G2:
        g = g2(need("n", spec.n), need("s", spec.s), unchecked=spec.unchecked)
    elif spec.family == Family.H_CASE:
        g = h_case(int(need("index", extra.get("index", spec.s))))
    elif spec.family == Family.Q:
        g = q_graph()
    else:
        plan = [tuple(c) for c in extra.get("chords", [])]
        g = quadrangulation(need("n", spec.n), plan)

    if "root" in extra or "eps" in extra:
        g = attach_pendants(g, int(extra.get("root", 0)), int(extra.get("eps", 0)))
    if spec.unchecked:
        logger.warning(f"Built {spec.family.value} with unchecked parameters (outside the stated ranges)")
    return g
