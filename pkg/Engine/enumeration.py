import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, combinations_with_replacement
from typing import Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from Engine.config import settings
from Engine.constructions import quadrangulation, star
from Engine.graph_core import (
    CapExceeded,
    Graph,
    GraphError,
    bipartition,
    block_tree,
    canonical_code,
    canonical_form,
    is_connected,
    k_sum,
    make_graph,
)
from Engine.recognition import (
    ebo_pairs,
    edge_bound,
    edge_equality_holds,
    is_maximal_bip_outerplanar,
    is_outerplanar_by_peeling,
)
from Engine.spectra import bipartite_floor, least_eigenvalue, spectral_radius
from Engine.violations import TheoremViolation, hard_failure

logger = logging.getLogger(__name__)

Chord = Tuple[int, int]


class EnumFamily(str, Enum):
    ALL_CONNECTED_OUTERPLANAR = "all_connected_outerplanar"
    BIPARTITE_OUTERPLANAR = "bipartite_outerplanar"
    MAXIMAL_BIP_OUTERPLANAR = "maximal_bip_outerplanar"
    MAXIMAL_2CONN_BIP_OUTERPLANAR = "maximal_2conn_bip_outerplanar"


FAMILY_ALIASES = {
    "outerplanar": EnumFamily.ALL_CONNECTED_OUTERPLANAR,
    "bip-outerplanar": EnumFamily.BIPARTITE_OUTERPLANAR,
    "maximal": EnumFamily.MAXIMAL_BIP_OUTERPLANAR,
    "maximal2conn": EnumFamily.MAXIMAL_2CONN_BIP_OUTERPLANAR,
}


class Objective(str, Enum):
    MAX_RHO = "max_rho"
    MIN_LAMBDA = "min_lambda"


def parse_family(name: str) -> EnumFamily:
    if name in FAMILY_ALIASES:
        return FAMILY_ALIASES[name]
    try:
        return EnumFamily(name.replace("-", "_"))
    except ValueError:
        raise GraphError(f"Unknown family '{name}'")


class EnumSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    order: int
    family: EnumFamily
    iso_reduce: bool = True
    cap: Optional[int] = None
    override_cap: bool = False


@dataclass
class EnumResult:
    spec: EnumSpec
    graphs: List[Graph]
    truncated: bool = False

    def __iter__(self):
        return iter(self.graphs)

    def __len__(self) -> int:
        return len(self.graphs)


def _check_caps(spec: EnumSpec):
    if spec.order < 1:
        raise GraphError(f"Enumeration order must be >= 1, got {spec.order}")
    if spec.family == EnumFamily.MAXIMAL_2CONN_BIP_OUTERPLANAR:
        limit = settings.enum_max_n_maximal_2conn
    elif spec.iso_reduce:
        limit = settings.enum_max_n_general
    else:
        limit = settings.naive_max_n
    if spec.order > limit and not spec.override_cap:
        raise CapExceeded(
            f"{spec.family.value} enumeration capped at n <= {limit}, got {spec.order}; "
            f"pass the cap override to run it anyway"
        )


# ---------------------------------------------------------------------------
# orderly generation for the hereditary connected families


def _member(g: Graph, bipartite: bool) -> bool:
    if bipartite and bipartition(g) is None:
        return False
    return is_outerplanar_by_peeling(g)


def deletion_vertex(g: Graph, labeling: List[int]) -> int:
    """Canonical vertex to delete: a minimum-degree non-cut vertex, largest canonical label."""
    if g.n == 1:
        return 0
    cuts = block_tree(g).cut_vertices
    eligible = [v for v in range(g.n) if v not in cuts]
    low = min(g.degree(v) for v in eligible)
    return max((v for v in eligible if g.degree(v) == low), key=lambda v: labeling[v])


def _children(parent_code: bytes, parent: Graph, bipartite: bool) -> List[Tuple[bytes, Graph]]:
    found: Dict[bytes, Graph] = {}
    base = parent.with_vertices(1)
    new = parent.n
    subsets: Iterable[Tuple[int, ...]] = [
        c for k in (1, 2) for c in combinations(range(parent.n), k)
    ]
    for nbrs in subsets:
        rows = list(base.rows)
        for u in nbrs:
            rows[u] |= 1 << new
            rows[new] |= 1 << u
        child = Graph(base.n, tuple(rows))
        if not _member(child, bipartite):
            continue
        code, labeling = canonical_form(child)
        if code in found:
            continue
        w = deletion_vertex(child, labeling)
        if w != new and canonical_code(child.delete_vertex(w)) != parent_code:
            continue
        found[code] = child
    return sorted(found.items())


def _expand_chunk(items: List[Tuple[bytes, Graph]], bipartite: bool) -> List[Tuple[bytes, Graph]]:
    out: List[Tuple[bytes, Graph]] = []
    for code, g in items:
        out.extend(_children(code, g, bipartite))
    return out


async def _expand_parallel(chunks: List[List[Tuple[bytes, Graph]]], bipartite: bool) -> List[List[Tuple[bytes, Graph]]]:
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=settings.workers) as pool:
        tasks = [loop.run_in_executor(pool, _expand_chunk, chunk, bipartite) for chunk in chunks]
        return await asyncio.gather(*tasks)


def _merge(batches: Iterable[List[Tuple[bytes, Graph]]]) -> Dict[bytes, Graph]:
    merged: Dict[bytes, Graph] = {}
    for batch in batches:
        for code, g in batch:
            if code in merged:
                logger.warning(f"Duplicate class {code.hex()} reached from two parents")
                continue
            merged[code] = g
    return merged


def orderly_connected(n: int, bipartite: bool) -> Dict[bytes, Graph]:
    """One representative per isomorphism class of connected outerplanar graphs on n vertices."""
    k1 = make_graph(1, [])
    level: Dict[bytes, Graph] = {canonical_code(k1): k1}
    for size in range(2, n + 1):
        items = sorted(level.items())
        workers = max(1, settings.workers)
        if workers > 1 and len(items) >= 2 * workers:
            chunks = [items[i::workers] for i in range(workers)]
            level = _merge(asyncio.run(_expand_parallel(chunks, bipartite)))
        else:
            level = _merge([_expand_chunk(items, bipartite)])
        logger.debug(f"Orderly level n={size}: {len(level)} classes")
    return level


def naive_filter(n: int, family: EnumFamily, iso_reduce: bool = True) -> List[Graph]:
    """Exhaustive filter over every labeled graph on n vertices."""
    if n > settings.naive_max_n:
        raise CapExceeded(f"Naive filter capped at n <= {settings.naive_max_n}, got {n}")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    bipartite = family != EnumFamily.ALL_CONNECTED_OUTERPLANAR
    limit = 2 * n - 3 if n >= 2 else 0
    seen: Dict[bytes, Graph] = {}
    labeled: List[Graph] = []
    for mask in range(1 << len(pairs)):
        if mask.bit_count() > limit or mask.bit_count() < n - 1:
            continue
        g = make_graph(n, [pairs[i] for i in range(len(pairs)) if (mask >> i) & 1])
        if not is_connected(g) or not _member(g, bipartite):
            continue
        if family == EnumFamily.MAXIMAL_BIP_OUTERPLANAR and not is_maximal_bip_outerplanar(g):
            continue
        if family == EnumFamily.MAXIMAL_2CONN_BIP_OUTERPLANAR:
            if g.n < 4 or block_tree(g).cut_vertices or not is_maximal_bip_outerplanar(g):
                continue
        if iso_reduce:
            seen.setdefault(canonical_code(g), g)
        else:
            labeled.append(g)
    if iso_reduce:
        return [seen[c] for c in sorted(seen)]
    return labeled


# ---------------------------------------------------------------------------
# quadrangulations of a fixed polygon


def _dissections(i: int, j: int, memo: Dict[Tuple[int, int], List[Tuple[Chord, ...]]]) -> List[Tuple[Chord, ...]]:
    """All quadrangulations of the sub-polygon i..j closed by the side (i, j)."""
    if (i, j) in memo:
        return memo[(i, j)]
    if j - i == 1:
        memo[(i, j)] = [()]
        return memo[(i, j)]
    out: List[Tuple[Chord, ...]] = []
    # the quadrilateral on side (i, j) is i, a, b, j
    for a in range(i + 1, j - 1, 2):
        for b in range(a + 1, j, 2):
            own = tuple(c for c in ((i, a), (a, b), (b, j)) if c[1] - c[0] > 1)
            for left in _dissections(i, a, memo):
                for mid in _dissections(a, b, memo):
                    for right in _dissections(b, j, memo):
                        out.append(own + left + mid + right)
    memo[(i, j)] = out
    return out


def labeled_quadrangulations(n: int) -> List[Tuple[Chord, ...]]:
    if n < 4 or n % 2:
        return []
    return [tuple(sorted(c)) for c in _dissections(0, n - 1, {})]


def _dihedral_key(n: int, chords: Iterable[Chord]) -> Tuple[Chord, ...]:
    chords = list(chords)
    best: Optional[Tuple[Chord, ...]] = None
    for r in range(n):
        for flip in (False, True):
            mapped = []
            for p, q in chords:
                a, b = (p + r) % n, (q + r) % n
                if flip:
                    a, b = (-a) % n, (-b) % n
                mapped.append((min(a, b), max(a, b)))
            key = tuple(sorted(mapped))
            if best is None or key < best:
                best = key
    return best or ()


def quadrangulation_classes(n: int) -> List[Tuple[Chord, ...]]:
    """One chord set per isomorphism class; the outer cycle is unique, so dihedral moves suffice."""
    keys = {_dihedral_key(n, c) for c in labeled_quadrangulations(n)}
    return sorted(keys)


def maximal_2conn_graphs(n: int, iso_reduce: bool = True) -> List[Graph]:
    if n < 4 or n % 2:
        return []
    plans = quadrangulation_classes(n) if iso_reduce else labeled_quadrangulations(n)
    graphs = [quadrangulation(n, plan) for plan in plans]
    if iso_reduce:
        graphs.sort(key=canonical_code)
    return graphs


# ---------------------------------------------------------------------------
# structured generator for maximal graphs: blocks glued by 1-sums, then pendants


def _cut_vertices_of_blocks(g: Graph) -> frozenset:
    tree = block_tree(g)
    big = [b for b in tree.blocks if len(b) >= 3]
    membership: Dict[int, int] = {}
    for b in big:
        for v in b:
            membership[v] = membership.get(v, 0) + 1
    return frozenset(v for v, c in membership.items() if c >= 2)


def _cuts_not_ebo(g: Graph) -> bool:
    cuts = sorted(_cut_vertices_of_blocks(g))
    ebo = ebo_pairs(g)
    return not any((a, b) in ebo for a, b in combinations(cuts, 2))


def block_compositions(n: int) -> Dict[bytes, Graph]:
    """Connected 1-sums of maximal 2-connected blocks with order <= n and no EBO-adjacent cut vertices."""
    pieces = {k: maximal_2conn_graphs(k) for k in range(4, n + 1, 2)}
    found: Dict[bytes, Graph] = {}
    frontier: Dict[bytes, Graph] = {}
    for k, graphs in pieces.items():
        for b in graphs:
            frontier[canonical_code(b)] = b
    while frontier:
        found.update(frontier)
        nxt: Dict[bytes, Graph] = {}
        for h in frontier.values():
            for k, graphs in pieces.items():
                if h.n + k - 1 > n:
                    continue
                for b in graphs:
                    for x in range(h.n):
                        for y in range(b.n):
                            glued = k_sum(h, b, [x], [y])
                            if not _cuts_not_ebo(glued):
                                continue
                            code = canonical_code(glued)
                            if code not in found and code not in nxt:
                                nxt[code] = glued
        frontier = nxt
    return found


def _attach_pattern(h: Graph, counts: Dict[int, int]) -> Graph:
    edges = h.edges()
    nxt = h.n
    for root, c in sorted(counts.items()):
        for _ in range(c):
            edges.append((root, nxt))
            nxt += 1
    return make_graph(nxt, edges)


def maximal_structured(n: int) -> List[Graph]:
    """Maximal bipartite outerplanar graphs built from the structure theorem alone."""
    found: Dict[bytes, Graph] = {}
    s = star(n)
    found[canonical_code(s)] = s
    for h in block_compositions(n).values():
        eps = n - h.n
        cuts = _cut_vertices_of_blocks(h)
        ebo = ebo_pairs(h)
        roots = [
            r for r in range(h.n)
            if not any((min(r, c), max(r, c)) in ebo for c in cuts if c != r)
        ]
        if eps == 0:
            found.setdefault(canonical_code(h), h)
            continue
        for multiset in combinations_with_replacement(roots, eps):
            chosen = sorted(set(multiset))
            if any((a, b) in ebo for a, b in combinations(chosen, 2)):
                continue
            counts: Dict[int, int] = {}
            for r in multiset:
                counts[r] = counts.get(r, 0) + 1
            g = _attach_pattern(h, counts)
            found.setdefault(canonical_code(g), g)
    return [found[c] for c in sorted(found)]


# ---------------------------------------------------------------------------
# public entry points


def enumerate_graphs(spec: EnumSpec) -> EnumResult:
    _check_caps(spec)
    n = spec.order

    if spec.family == EnumFamily.MAXIMAL_2CONN_BIP_OUTERPLANAR:
        graphs = maximal_2conn_graphs(n, spec.iso_reduce)
    elif not spec.iso_reduce:
        graphs = naive_filter(n, spec.family, iso_reduce=False)
    else:
        bipartite = spec.family != EnumFamily.ALL_CONNECTED_OUTERPLANAR
        classes = orderly_connected(n, bipartite)
        graphs = [classes[c] for c in sorted(classes)]
        if spec.family == EnumFamily.MAXIMAL_BIP_OUTERPLANAR:
            graphs = [g for g in graphs if is_maximal_bip_outerplanar(g)]

    cap = spec.cap if spec.cap is not None else settings.enum_max_results
    truncated = len(graphs) > cap
    if truncated:
        logger.info(f"Enumeration of {spec.family.value} n={n} truncated to {cap} of {len(graphs)}")
        graphs = graphs[:cap]
    logger.info(f"Enumerated {len(graphs)} graphs for {spec.family.value} n={n}")
    return EnumResult(spec=spec, graphs=graphs, truncated=truncated)


def _objective_value(g: Graph, objective: Objective) -> float:
    if objective == Objective.MAX_RHO:
        return spectral_radius(g).value
    return least_eigenvalue(g).value


def _winner_profile(g: Graph, objective: Objective) -> Dict[str, object]:
    profile: Dict[str, object] = {
        "graph": g.to_payload(),
        "code": canonical_code(g).hex(),
        "m": g.m,
        "edge_most": bipartition(g) is not None and g.m == edge_bound(g.n),
    }
    if is_connected(g):
        cuts = sorted(block_tree(g).cut_vertices)
        x = spectral_radius(g).vector
        top = float(max(x))
        leaders = [v for v in range(g.n) if top - x[v] <= settings.comparison_slack]
        profile["cut_vertices"] = cuts
        profile["max_coordinate_vertices"] = leaders
        profile["max_coordinate_unique"] = len(leaders) == 1
        profile["max_coordinate_at_cut_vertex"] = len(leaders) == 1 and leaders[0] in cuts
    if objective == Objective.MIN_LAMBDA and g.n <= settings.floor_max_n and is_connected(g):
        sub, lam = bipartite_floor(g)
        profile["bipartite_floor"] = {"graph": sub.to_payload(), "lambda": lam}
    return profile


def extremal_scan(spec: EnumSpec, objective: Objective, table: bool = False) -> Dict[str, object]:
    result = enumerate_graphs(spec)
    scored = [(_objective_value(g, objective), canonical_code(g), g) for g in result.graphs]
    if not scored:
        return {
            "family": spec.family.value, "n": spec.order, "objective": objective.value,
            "value": None, "winners": [], "star_in_family": False, "star_attains": False,
            "count": 0, "truncated": result.truncated,
        }

    sign = -1.0 if objective == Objective.MAX_RHO else 1.0
    scored.sort(key=lambda t: (sign * t[0], t[1]))
    best = scored[0][0]
    winners = [g for value, _, g in scored if abs(value - best) <= settings.comparison_slack]

    s = star(spec.order)
    star_code = canonical_code(s)
    star_in_family = any(code == star_code for _, code, _ in scored)
    star_value = _objective_value(s, objective)

    report: Dict[str, object] = {
        "family": spec.family.value,
        "n": spec.order,
        "objective": objective.value,
        "value": round(best, 12),
        "count": len(scored),
        "truncated": result.truncated,
        "winners": [_winner_profile(g, objective) for g in winners],
        "star_in_family": star_in_family,
        "star_value": round(star_value, 12),
        "star_attains": star_in_family and abs(star_value - best) <= settings.comparison_slack,
    }
    if table:
        report["ranked"] = [
            {"code": code.hex(), "m": g.m, "value": round(value, 12)} for value, code, g in scored
        ]
    return report


def census_edge_counts(spec: EnumSpec) -> Dict[str, object]:
    if spec.family == EnumFamily.ALL_CONNECTED_OUTERPLANAR:
        raise GraphError("census_edge_counts needs a bipartite family")
    result = enumerate_graphs(spec)
    bound = edge_bound(spec.order)
    histogram: Dict[int, int] = {}
    over: List[str] = []
    mismatches: List[str] = []
    equality = 0
    for g in result.graphs:
        histogram[g.m] = histogram.get(g.m, 0) + 1
        if g.m > bound:
            over.append(canonical_code(g).hex())
            try:
                hard_failure("edge-bound", f"n={g.n} graph with m={g.m} exceeds the bound {bound}", g)
            except TheoremViolation:
                pass
        at_bound = g.m == bound
        equality += at_bound
        if at_bound != edge_equality_holds(g):
            mismatches.append(canonical_code(g).hex())
            try:
                hard_failure("edge-equality", f"m={g.m}, bound={bound}, structure disagrees", g)
            except TheoremViolation:
                pass
    return {
        "family": spec.family.value,
        "n": spec.order,
        "bound": bound,
        "histogram": {str(m): c for m, c in sorted(histogram.items())},
        "max_m": max(histogram) if histogram else None,
        "count": len(result.graphs),
        "equality_count": equality,
        "exceeding": over,
        "equality_mismatches": mismatches,
        "truncated": result.truncated,
    }
