import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from Engine.config import settings

logger = logging.getLogger(__name__)

MAX_VERTICES = 64


class GraphError(ValueError):
    pass


class CapExceeded(GraphError):
    pass


def _bits(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph; rows[v] is the neighbour bitset of v."""

    n: int
    rows: Tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VERTICES:
            raise GraphError(f"Vertex count {self.n} outside 1..{MAX_VERTICES}")
        if len(self.rows) != self.n:
            raise GraphError(f"Expected {self.n} adjacency rows, got {len(self.rows)}")
        full = (1 << self.n) - 1
        for v, row in enumerate(self.rows):
            if row & ~full:
                raise GraphError(f"Row {v} references a vertex outside 0..{self.n - 1}")
            if (row >> v) & 1:
                raise GraphError(f"Loop at vertex {v}")
            for u in _bits(row):
                if not (self.rows[u] >> v) & 1:
                    raise GraphError(f"Adjacency not symmetric at ({v}, {u})")

    @property
    def m(self) -> int:
        return sum(row.bit_count() for row in self.rows) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.rows[u] >> v) & 1)

    def degree(self, v: int) -> int:
        return self.rows[v].bit_count()

    def degrees(self) -> List[int]:
        return [row.bit_count() for row in self.rows]

    def neighbors(self, v: int) -> List[int]:
        return _bits(self.rows[v])

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in _bits(self.rows[u]) if u < v]

    def non_edges(self) -> List[Tuple[int, int]]:
        return [
            (u, v) for u in range(self.n) for v in range(u + 1, self.n)
            if not (self.rows[u] >> v) & 1
        ]

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=float)
        for u, v in self.edges():
            a[u, v] = a[v, u] = 1.0
        return a

    def with_edge(self, u: int, v: int) -> "Graph":
        self._check_pair(u, v)
        rows = list(self.rows)
        rows[u] |= 1 << v
        rows[v] |= 1 << u
        return Graph(self.n, tuple(rows))

    def without_edge(self, u: int, v: int) -> "Graph":
        self._check_pair(u, v)
        rows = list(self.rows)
        rows[u] &= ~(1 << v)
        rows[v] &= ~(1 << u)
        return Graph(self.n, tuple(rows))

    def with_vertices(self, count: int) -> "Graph":
        if self.n + count > MAX_VERTICES:
            raise CapExceeded(f"Adding {count} vertices exceeds {MAX_VERTICES}")
        return Graph(self.n + count, self.rows + (0,) * count)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """perm[old] = new."""
        if sorted(perm) != list(range(self.n)):
            raise GraphError("Relabeling must be a permutation of the vertices")
        rows = [0] * self.n
        for u, v in self.edges():
            a, b = perm[u], perm[v]
            rows[a] |= 1 << b
            rows[b] |= 1 << a
        return Graph(self.n, tuple(rows))

    def induced(self, vertices: Iterable[int]) -> Tuple["Graph", List[int]]:
        """Induced subgraph plus the map new index -> old vertex."""
        keep = sorted(set(vertices))
        if not keep:
            raise GraphError("Induced subgraph needs at least one vertex")
        index = {v: i for i, v in enumerate(keep)}
        rows = []
        for v in keep:
            row = 0
            for u in _bits(self.rows[v]):
                if u in index:
                    row |= 1 << index[u]
            rows.append(row)
        return Graph(len(keep), tuple(rows)), keep

    def delete_vertex(self, v: int) -> "Graph":
        return self.induced(u for u in range(self.n) if u != v)[0]

    def contract(self, u: int, v: int) -> "Graph":
        """Merge v into u along the edge uv and drop v."""
        if not self.has_edge(u, v):
            raise GraphError(f"Cannot contract non-edge ({u}, {v})")
        rows = list(self.rows)
        merged = (rows[u] | rows[v]) & ~((1 << u) | (1 << v))
        for w in _bits(rows[v]):
            rows[w] &= ~(1 << v)
        for w in _bits(merged):
            rows[w] |= 1 << u
        rows[u] = merged
        rows[v] = 0
        return Graph(self.n, tuple(rows)).delete_vertex(v)

    def components(self) -> List[List[int]]:
        seen = 0
        comps = []
        for s in range(self.n):
            if (seen >> s) & 1:
                continue
            comp = 1 << s
            frontier = 1 << s
            while frontier:
                nxt = 0
                for v in _bits(frontier):
                    nxt |= self.rows[v]
                frontier = nxt & ~comp
                comp |= frontier
            seen |= comp
            comps.append(_bits(comp))
        return comps

    def to_payload(self) -> Dict[str, object]:
        return {"n": self.n, "edges": [[u, v] for u, v in self.edges()]}

    def _check_pair(self, u: int, v: int):
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise GraphError(f"Vertex pair ({u}, {v}) outside 0..{self.n - 1}")
        if u == v:
            raise GraphError(f"Loop pair ({u}, {v}) not allowed")


@dataclass(frozen=True)
class BlockTree:
    blocks: Tuple[FrozenSet[int], ...]
    cut_vertices: FrozenSet[int]
    incidence: Dict[int, FrozenSet[int]]

    def bridges(self) -> List[Tuple[int, int]]:
        return [tuple(sorted(b)) for b in self.blocks if len(b) == 2]


@dataclass(frozen=True)
class Bipartition:
    side: Tuple[int, ...]

    def part(self, s: int) -> List[int]:
        return [v for v, x in enumerate(self.side) if x == s]


def make_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    if not isinstance(n, int) or not 1 <= n <= MAX_VERTICES:
        raise GraphError(f"Vertex count {n} outside 1..{MAX_VERTICES}")
    rows = [0] * n
    for pair in edges:
        if len(pair) != 2:
            raise GraphError(f"Edge {pair!r} is not a vertex pair")
        u, v = int(pair[0]), int(pair[1])
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"Edge ({u}, {v}) has a vertex outside 0..{n - 1}")
        if u == v:
            raise GraphError(f"Loop ({u}, {v}) not allowed in a simple graph")
        rows[u] |= 1 << v
        rows[v] |= 1 << u
    return Graph(n, tuple(rows))


def disjoint_union(g: Graph, h: Graph) -> Graph:
    if g.n + h.n > MAX_VERTICES:
        raise CapExceeded(f"Union order {g.n + h.n} exceeds {MAX_VERTICES}")
    rows = list(g.rows) + [row << g.n for row in h.rows]
    return Graph(g.n + h.n, tuple(rows))


def is_connected(g: Graph) -> bool:
    return len(g.components()) == 1


def bipartition(g: Graph) -> Optional[Bipartition]:
    side = [-1] * g.n
    for s in range(g.n):
        if side[s] != -1:
            continue
        side[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in g.neighbors(v):
                if side[u] == -1:
                    side[u] = 1 - side[v]
                    queue.append(u)
                elif side[u] == side[v]:
                    return None
    return Bipartition(tuple(side))


def block_tree(g: Graph) -> BlockTree:
    if not is_connected(g):
        raise GraphError("block_tree requires a connected graph")
    if g.n == 1:
        return BlockTree(blocks=(frozenset({0}),), cut_vertices=frozenset(), incidence={0: frozenset()})

    disc = [-1] * g.n
    low = [0] * g.n
    edge_stack: List[Tuple[int, int]] = []
    blocks: List[FrozenSet[int]] = []

    disc[0] = low[0] = 0
    timer = 1
    stack = [(0, -1, iter(g.neighbors(0)))]
    while stack:
        v, parent, it = stack[-1]
        descended = False
        for w in it:
            if disc[w] == -1:
                edge_stack.append((v, w))
                disc[w] = low[w] = timer
                timer += 1
                stack.append((w, v, iter(g.neighbors(w))))
                descended = True
                break
            if w != parent and disc[w] < disc[v]:
                edge_stack.append((v, w))
                low[v] = min(low[v], disc[w])
        if descended:
            continue
        stack.pop()
        if not stack:
            break
        p = stack[-1][0]
        low[p] = min(low[p], low[v])
        if low[v] >= disc[p]:
            comp = set()
            while True:
                a, b = edge_stack.pop()
                comp.update((a, b))
                if (a, b) == (p, v):
                    break
            blocks.append(frozenset(comp))

    blocks.sort(key=lambda b: sorted(b))
    membership: Dict[int, int] = {}
    for b in blocks:
        for v in b:
            membership[v] = membership.get(v, 0) + 1
    cuts = frozenset(v for v, c in membership.items() if c >= 2)
    incidence = {i: frozenset(b & cuts) for i, b in enumerate(blocks)}
    return BlockTree(blocks=tuple(blocks), cut_vertices=cuts, incidence=incidence)


def is_2connected(g: Graph) -> bool:
    if g.n < 3 or not is_connected(g):
        return False
    return not block_tree(g).cut_vertices


def k_sum(g: Graph, h: Graph, joint_g: Sequence[int], joint_h: Sequence[int]) -> Graph:
    """Glue h onto g by identifying joint_h[i] with joint_g[i]; joint edges are kept."""
    k = len(joint_g)
    if k != len(joint_h) or k == 0:
        raise GraphError(f"Joints must be non-empty and of equal size, got {k} and {len(joint_h)}")
    if len(set(joint_g)) != k or len(set(joint_h)) != k:
        raise GraphError("Joint vertices must be distinct")
    for graph, joint, name in ((g, joint_g, "g"), (h, joint_h, "h")):
        for v in joint:
            if not 0 <= v < graph.n:
                raise GraphError(f"Joint vertex {v} outside {name}")
        for i in range(k):
            for j in range(i + 1, k):
                if not graph.has_edge(joint[i], joint[j]):
                    raise GraphError(f"Joint of {name} is not a clique")

    if g.n + h.n - k > MAX_VERTICES:
        raise CapExceeded(f"k-sum order {g.n + h.n - k} exceeds {MAX_VERTICES}")

    mapping: Dict[int, int] = dict(zip(joint_h, joint_g))
    nxt = g.n
    for v in range(h.n):
        if v not in mapping:
            mapping[v] = nxt
            nxt += 1
    edges = g.edges() + [(mapping[u], mapping[v]) for u, v in h.edges()]
    return make_graph(nxt, edges)


def _cell_mask(cell: Sequence[int]) -> int:
    mask = 0
    for v in cell:
        mask |= 1 << v
    return mask


def _refine(rows: Sequence[int], cells: List[List[int]]) -> List[List[int]]:
    while True:
        masks = [_cell_mask(c) for c in cells]
        out: List[List[int]] = []
        split = False
        for cell in cells:
            if len(cell) == 1:
                out.append(cell)
                continue
            groups: Dict[Tuple[int, ...], List[int]] = {}
            for v in cell:
                key = tuple((rows[v] & mk).bit_count() for mk in masks)
                groups.setdefault(key, []).append(v)
            if len(groups) > 1:
                split = True
            for key in sorted(groups):
                out.append(groups[key])
        cells = out
        if not split:
            return cells


def _leaf_code(rows: Sequence[int], order: Sequence[int]) -> int:
    code = 0
    for p in range(1, len(order)):
        row = rows[order[p]]
        for q in range(p):
            code = (code << 1) | ((row >> order[q]) & 1)
    return code


def _twins(rows: Sequence[int], u: int, w: int) -> bool:
    return rows[u] & ~(1 << w) == rows[w] & ~(1 << u)


def _canonical_search(rows: Sequence[int], n: int) -> Tuple[int, List[int]]:
    best_code: Optional[int] = None
    best_order: List[int] = []
    stack = [[list(range(n))]]
    while stack:
        cells = _refine(rows, stack.pop())
        target = next((i for i, c in enumerate(cells) if len(c) > 1), None)
        if target is None:
            order = [c[0] for c in cells]
            code = _leaf_code(rows, order)
            if best_code is None or code < best_code:
                best_code, best_order = code, order
            continue
        cell = cells[target]
        reps: List[int] = []
        for v in cell:
            if not any(_twins(rows, r, v) for r in reps):
                reps.append(v)
        for v in reversed(reps):
            rest = [u for u in cell if u != v]
            stack.append(cells[:target] + [[v], rest] + cells[target + 1:])
    return best_code, best_order


def canonical_form(g: Graph) -> Tuple[bytes, List[int]]:
    """Exact canonical code and labeling (labeling[v] = canonical position of v)."""
    if g.n > settings.canonical_exact_max_n:
        raise CapExceeded(
            f"Exact canonical form capped at n <= {settings.canonical_exact_max_n}, got {g.n}"
        )
    code, order = _canonical_search(g.rows, g.n)
    width = (g.n * (g.n - 1) // 2 + 7) // 8
    labeling = [0] * g.n
    for pos, v in enumerate(order):
        labeling[v] = pos
    return bytes([g.n]) + code.to_bytes(width, "big"), labeling


def fingerprint(g: Graph) -> bytes:
    """Isomorphism invariant: degree sequence plus rounded spectrum.

    Equal fingerprints do not prove isomorphism (cospectral graphs with equal
    degree sequences collide); only used above the exact canonical cap.
    """
    from Engine.spectra import all_eigenvalues

    degs = sorted(g.degrees())
    spectrum = all_eigenvalues(g)
    digits = max(0, int(round(-np.log10(settings.comparison_slack))))
    # adding 0.0 turns -0.0 into 0.0
    rounded = [f"{round(float(x), digits) + 0.0:.{digits}f}" for x in spectrum]
    text = f"F{g.n}|{','.join(map(str, degs))}|{','.join(rounded)}"
    return text.encode("ascii")


def canonical_code(g: Graph) -> bytes:
    if g.n <= settings.canonical_exact_max_n:
        return canonical_form(g)[0]
    return fingerprint(g)
