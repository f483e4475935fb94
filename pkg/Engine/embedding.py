import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from Engine.config import settings
from Engine.graph_core import Graph, GraphError, is_2connected
from Engine.violations import hard_failure

logger = logging.getLogger(__name__)

Chord = Tuple[int, int]


@dataclass(frozen=True)
class OpEmbedding:
    """Outer Hamilton cycle, the chords inside it and the inner faces they cut out.

    Only inner faces are stored; the outer face is added back by euler_check.
    """

    outer: Tuple[int, ...]
    chords: Tuple[Chord, ...]
    faces: Tuple[Tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.outer)

    @property
    def m(self) -> int:
        return len(self.outer) + len(self.chords)

    @property
    def face_count(self) -> int:
        """Faces including the outer one."""
        return len(self.faces) + 1

    def position(self) -> Dict[int, int]:
        return {v: i for i, v in enumerate(self.outer)}

    def to_payload(self) -> Dict[str, object]:
        return {
            "outer": list(self.outer),
            "chords": [list(c) for c in self.chords],
            "faces": [list(f) for f in self.faces],
        }


def chords_cross(a: Chord, b: Chord) -> bool:
    """Chords given as positions on the outer cycle."""
    p, q = sorted(a)
    r, s = sorted(b)
    return p < r < q < s or r < p < s < q


def chords_non_crossing(chords: Iterable[Chord]) -> bool:
    chords = list(chords)
    return not any(chords_cross(a, b) for a, b in combinations(chords, 2))


def _is_hamilton_cycle(g: Graph, cycle: Sequence[int]) -> bool:
    if len(cycle) != g.n or len(set(cycle)) != g.n:
        return False
    return all(g.has_edge(cycle[i], cycle[(i + 1) % g.n]) for i in range(g.n))


def _cycle_chords(g: Graph, cycle: Sequence[int]) -> List[Chord]:
    pos = {v: i for i, v in enumerate(cycle)}
    out = []
    for u, v in g.edges():
        d = abs(pos[u] - pos[v])
        if d != 1 and d != g.n - 1:
            out.append(tuple(sorted((pos[u], pos[v]))))
    return out


def _outerplanar_cycle(g: Graph, cycle: Sequence[int]) -> bool:
    return _is_hamilton_cycle(g, cycle) and chords_non_crossing(_cycle_chords(g, cycle))


def _reduce_cycle(g: Graph) -> Optional[List[int]]:
    adj = {v: set(g.neighbors(v)) for v in range(g.n)}
    alive = set(range(g.n))
    removed: List[Tuple[int, int, int]] = []

    while len(alive) > 3:
        v = next((x for x in sorted(alive) if len(adj[x]) == 2), None)
        if v is None:
            return None
        a, b = sorted(adj[v])
        adj[a].discard(v)
        adj[b].discard(v)
        adj[a].add(b)
        adj[b].add(a)
        alive.discard(v)
        removed.append((v, a, b))

    if len(alive) != 3 or any(len(adj[x]) != 2 for x in alive):
        return None
    x, y, z = sorted(alive)
    cycle = [x, y, z]

    for v, a, b in reversed(removed):
        i, j = cycle.index(a), cycle.index(b)
        if (i + 1) % len(cycle) == j:
            cycle.insert(i + 1, v)
        elif (j + 1) % len(cycle) == i:
            cycle.insert(j + 1, v)
        else:
            return None
    return cycle


def hamilton_cycles_exhaustive(g: Graph, limit: Optional[int] = None) -> List[List[int]]:
    """All Hamilton cycles through vertex 0, one per rotation/reflection class."""
    if g.n > settings.hamilton_exhaustive_max_n:
        raise GraphError(
            f"Exhaustive Hamilton search capped at n <= {settings.hamilton_exhaustive_max_n}"
        )
    if g.n < 3:
        return []
    found: List[List[int]] = []
    path = [0]
    used = 1

    def extend(v: int, used: int):
        if limit is not None and len(found) >= limit:
            return
        if len(path) == g.n:
            if g.has_edge(v, 0) and path[1] < path[-1]:
                found.append(list(path))
            return
        for w in g.neighbors(v):
            if not (used >> w) & 1:
                path.append(w)
                extend(w, used | (1 << w))
                path.pop()

    extend(0, used)
    return found


def hamilton_cycle(g: Graph) -> Optional[List[int]]:
    """The outer cycle of a 2-connected outerplanar graph, or None if there is none."""
    if g.n < 3:
        return None
    cycle = _reduce_cycle(g)
    if cycle is not None and _outerplanar_cycle(g, cycle):
        return cycle
    if g.n <= settings.hamilton_exhaustive_max_n:
        for candidate in hamilton_cycles_exhaustive(g):
            if _outerplanar_cycle(g, candidate):
                logger.warning(f"Degree-2 reduction missed an outer cycle on n={g.n}; exhaustive search found one")
                return candidate
    return None


def normalize_cycle(cycle: Sequence[int]) -> Tuple[int, ...]:
    """Rotate to the lowest vertex and orient towards its smaller cycle neighbour."""
    k = len(cycle)
    i = cycle.index(min(cycle))
    rotated = list(cycle[i:]) + list(cycle[:i])
    if k > 2 and rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return tuple(rotated)


def polygon_faces(k: int, position_chords: Iterable[Chord]) -> List[List[int]]:
    """Inner faces as position lists, by chord-interval recursion from (0, k-1)."""
    jumps: Dict[int, List[int]] = {}
    for p, q in position_chords:
        jumps.setdefault(p, []).append(q)
    for targets in jumps.values():
        targets.sort(reverse=True)

    faces: List[List[int]] = []
    stack = [(0, k - 1)]
    while stack:
        i, j = stack.pop()
        face = [i]
        p = i
        while p != j:
            q = next((t for t in jumps.get(p, ()) if t <= j and (p, t) != (i, j)), None)
            if q is not None:
                stack.append((p, q))
                p = q
            else:
                p += 1
            face.append(p)
        faces.append(face)
    faces.sort()
    return faces


def embed(g: Graph) -> OpEmbedding:
    if g.n < 3 or not is_2connected(g):
        raise GraphError("embed requires a 2-connected graph on at least 3 vertices")
    cycle = hamilton_cycle(g)
    if cycle is None:
        raise GraphError("embed requires an outerplanar graph: no outer Hamilton cycle with non-crossing chords")

    outer = normalize_cycle(cycle)
    pos_chords = sorted(_cycle_chords(g, outer))
    chords = tuple(sorted(tuple(sorted((outer[p], outer[q]))) for p, q in pos_chords))
    faces = tuple(tuple(outer[p] for p in face) for face in polygon_faces(g.n, pos_chords))
    e = OpEmbedding(outer=outer, chords=chords, faces=faces)

    if not euler_check(e) or sum(len(f) for f in faces) != 2 * g.m - g.n:
        hard_failure("euler", f"Embedding of n={g.n}, m={g.m} has {len(faces)} inner faces", g)
    return e


def inner_faces(e: OpEmbedding) -> List[List[int]]:
    return [list(f) for f in e.faces]


def all_faces_quad(e: OpEmbedding) -> bool:
    return all(len(f) == 4 for f in e.faces)


def euler_check(e: OpEmbedding) -> bool:
    return e.n + e.face_count - e.m == 2
