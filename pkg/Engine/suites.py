"""Named theorem suites run by `verify-theorems`.

A suite sweeps a range of orders, checks its invariants per instance and
reports how many held. Enforced checks go through hard_failure, so a failing
instance lands in the violation collector; measured quantities are reported
without being asserted.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict

from Engine.config import settings
from Engine.constructions import (
    G2_MAX_S,
    attach_pendants,
    cycle,
    edge_rotation,
    g1,
    g2,
    g2_to_star,
    h_case,
    h_case_attached,
    quad_book,
    star,
)
from Engine.embedding import embed
from Engine.enumeration import (
    EnumFamily,
    EnumSpec,
    Objective,
    census_edge_counts,
    enumerate_graphs,
    extremal_scan,
    labeled_quadrangulations,
    maximal_2conn_graphs,
    maximal_structured,
)
from Engine.graph_core import (
    MAX_VERTICES,
    Graph,
    GraphError,
    bipartition,
    canonical_code,
    is_2connected,
    k_sum,
    make_graph,
)
from Engine.graph_io import from_networkx
from Engine.recognition import (
    is_maximal_2conn_structural,
    is_maximal_bip_outerplanar,
    structural_decompose,
)
from Engine.spectra import (
    BoundKind,
    Verdict,
    bipartite_floor,
    claim_pieces,
    closed_form_bounds,
    cubic_certificate,
    g2_closed_form,
    g2_strict_order,
    least_eigenvalue,
    monotonicity_check,
    pendant_row_sum_items,
    rotation_increases_rho,
    row_sums,
    spectral_radius,
    square_certificate,
)
from Engine.timing import run_tracker
from Engine.violations import TheoremViolation, hard_failure

logger = logging.getLogger(__name__)

EQUIVALENCE_FULL_MAX_N = 12


class SuiteParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    samples: int = 500
    scan_n: List[int] = [4, 5, 6, 7]
    eps: List[int] = [1, 2, 5, 12, 26]


@dataclass
class SuiteReport:
    name: str
    instances: int = 0
    passed: int = 0
    failed: int = 0
    measured: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def run(self, label: str, check: Callable[[], None]) -> bool:
        self.instances += 1
        try:
            check()
        except TheoremViolation as e:
            self.failed += 1
            self.notes.append(f"{label}: {e}")
            return False
        self.passed += 1
        return True

    def expect(self, ok: bool, check: str, message: str, g: Optional[Graph] = None):
        if not ok:
            hard_failure(check, message, g, source=f"suite:{self.name}")

    def to_payload(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "instances": self.instances,
            "passed": self.passed,
            "failed": self.failed,
            "measured": self.measured,
            "notes": self.notes,
        }


def _even(ns: List[int]) -> List[int]:
    return [n for n in ns if n >= 4 and n % 2 == 0]


def _connected_atlas(max_n: int) -> List[Graph]:
    """Every connected graph on 1..max_n vertices, one per isomorphism class (max_n <= 7)."""
    if max_n > 7:
        raise GraphError(f"The graph atlas covers n <= 7, got {max_n}")
    out = []
    for graph in nx.graph_atlas_g():
        k = graph.number_of_nodes()
        if 1 <= k <= max_n and nx.is_connected(graph):
            out.append(from_networkx(graph))
    return out


# ---------------------------------------------------------------------------


def suite_rowsum(report: SuiteReport, ns: List[int], params: SuiteParams):
    tight: Dict[str, bool] = {}
    for n in _even(ns):
        for g in maximal_2conn_graphs(n):
            def check(g=g):
                rs = row_sums(g)
                bad = {k: v for k, v in rs.failures.items() if v}
                report.expect(not bad, "row-sum", f"items failing at vertices {bad}", g)
            report.run(f"n={n} {canonical_code(g).hex()}", check)
        if n == 4:
            rs = row_sums(maximal_2conn_graphs(4)[0])
            tight["item1_c4"] = all(2 * s == n for s in rs.s1)
            tight["item2_c4"] = all(s == 3 * n // 2 - 2 for s in rs.s2)
    report.measured["tight_at_c4"] = tight


def suite_edgecount(report: SuiteReport, ns: List[int], params: SuiteParams):
    histograms = {}
    for n in ns:
        spec = EnumSpec(order=n, family=EnumFamily.BIPARTITE_OUTERPLANAR)
        census: Dict[str, Any] = {}

        def check(spec=spec):
            # census_edge_counts records its own violations
            census.update(census_edge_counts(spec))
            if census["exceeding"] or census["equality_mismatches"]:
                raise TheoremViolation("edge-bound", f"n={spec.order}: bound or equality failed")
        report.run(f"n={n}", check)
        if census:
            histograms[str(n)] = {
                "bound": census["bound"],
                "max_m": census["max_m"],
                "equality_count": census["equality_count"],
                "histogram": census["histogram"],
            }
    report.measured["censuses"] = histograms


def suite_g1g2(report: SuiteReport, ns: List[int], params: SuiteParams):
    for s in range(1, 9):
        def check_book(s=s):
            rho = spectral_radius(quad_book(s)).value
            report.expect(
                abs(rho - (1 + np.sqrt(s))) <= settings.comparison_slack,
                "quad-book", f"rho(quad_book({s})) = {rho:.12f}, expected 1+sqrt({s})",
            )
        report.run(f"quad_book s={s}", check_book)

    monotone: Dict[str, bool] = {}
    above: List[Dict[str, Any]] = []
    for n in ns:
        bound = np.sqrt(n - 1)
        if n >= 36:
            radii = []
            for s in range(1, 5):
                g = g1(n, s)
                rho = spectral_radius(g).value
                radii.append(rho)
                report.run(f"g1 n={n} s={s}", lambda g=g, rho=rho, s=s: report.expect(
                    rho < bound - settings.strict_margin, "g1-strict",
                    f"rho(g1({n},{s})) = {rho:.12f} not below sqrt({n - 1})", g,
                ))
            monotone[str(n)] = all(a > b for a, b in zip(radii, radii[1:]))
        if n >= 37:
            for s in range(1, G2_MAX_S + 1):
                g = g2(n, s)
                rho = spectral_radius(g).value
                closed = g2_closed_form(n, s)
                report.run(f"g2 n={n} s={s} closed form", lambda g=g, rho=rho, closed=closed, s=s: report.expect(
                    abs(rho - closed) <= settings.comparison_slack, "g2-closed-form",
                    f"rho(g2({n},{s})) = {rho:.12f}, quotient gives {closed:.12f}", g,
                ))
                if n < g2_strict_order(s):
                    above.append({"n": n, "s": s, "rho": round(rho, 12), "rho_squared": round(rho * rho, 9)})
                    continue
                report.run(f"g2 n={n} s={s}", lambda g=g, rho=rho, s=s: report.expect(
                    rho < bound - settings.strict_margin, "g2-strict",
                    f"rho(g2({n},{s})) = {rho:.12f} not below sqrt({n - 1})", g,
                ))
    report.measured["g1_decreasing_in_s"] = monotone
    # s >= 6 needs n >= s^2 + s + 2 before rho drops below sqrt(n - 1)
    report.measured["g2_not_below_sqrt"] = above
    if ns and max(ns) >= 36:
        n = max(ns)
        report.measured["claim_pieces"] = {
            str(s): {k: round(v, 12) for k, v in claim_pieces(n, s).items()} for s in range(1, 5)
        }
        report.measured["g2_to_star"] = {
            "n": n,
            "rho_g2_5": round(spectral_radius(g2(n, 5)).value, 12),
            "rho_rewired": round(spectral_radius(g2_to_star(n, 5)).value, 12),
        }


def suite_hcases(report: SuiteReport, ns: List[int], params: SuiteParams):
    rows = []
    for n in ns:
        eps = n - 10
        if eps < 1:
            report.notes.append(f"n={n} leaves no room for pendants")
            continue
        ceiling = max(spectral_radius(g1(n, 4)).value, spectral_radius(g2(n, 5)).value)
        for i in range(1, 6):
            for u in range(10):
                g = h_case_attached(i, u, eps)
                rho = spectral_radius(g).value

                def check(g=g, rho=rho, i=i, u=u):
                    report.expect(
                        rho <= ceiling + settings.comparison_slack, "h-case",
                        f"H{i} with {eps} pendants at {u}: rho {rho:.12f} > {ceiling:.12f}", g,
                    )
                report.run(f"n={n} H{i} u={u}", check)
                cert = cubic_certificate(g, n - 1)
                items = pendant_row_sum_items(h_case(i), u, eps)
                rows.append({
                    "n": n, "h": i, "root": u, "rho": round(rho, 12),
                    "below_sqrt": rho < np.sqrt(n - 1) - settings.strict_margin,
                    "cubic_verdict": cert.verdict.value,
                    "pendant_item_iii": items["item_iii"],
                })
                if cert.verdict == Verdict.FAIL:
                    logger.warning(f"Cubic certificate fails for H{i} root {u} at n={n} (measured only)")
    report.measured["instances"] = rows


def _random_connected(rng: np.random.Generator, n: int) -> Graph:
    order = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.add(tuple(sorted((int(order[i]), int(order[j])))))
    density = rng.uniform(0.0, 0.4)
    for u, v in combinations(range(n), 2):
        if rng.random() < density:
            edges.add((u, v))
    return make_graph(n, edges)


def _fixed_rotations() -> List[tuple]:
    c4c4 = k_sum(cycle(4), cycle(4), [0], [0])
    # first C4 is 0-1-2-3 with cut vertex 0; second is 0-4-5-6
    return [
        ("g2(12,5) v1<-v3", g2(12, 5), 0, 2, [1]),
        ("c4+c4 at the cut vertex", c4c4, 0, 4, [5]),
        ("c4+c4 symmetric", c4c4, 1, 4, [5]),
    ]


def suite_rotation(report: SuiteReport, ns: List[int], params: SuiteParams):
    for label, g, u, v, targets in _fixed_rotations():
        def check(g=g, u=u, v=v, targets=targets, label=label):
            verdict = rotation_increases_rho(g, u, v, targets)
            report.expect(verdict is not False, "rotation", label, g)
            if verdict is None:
                report.notes.append(f"{label}: hypothesis x_u >= x_v not met")
        report.run(label, check)

    rng = np.random.default_rng(params.seed)
    orders = [n for n in ns if 3 <= n <= 12] or [12]
    done = skipped = attempts = 0
    while done < params.samples and attempts < 50 * params.samples:
        attempts += 1
        n = int(rng.choice(orders))
        g = _random_connected(rng, n)
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        pool = [t for t in g.neighbors(v) if t != u and not g.has_edge(u, t)]
        if not pool:
            continue
        k = int(rng.integers(1, len(pool) + 1))
        targets = sorted(int(t) for t in rng.choice(pool, size=k, replace=False))
        x = spectral_radius(g).vector
        if x[u] < x[v] - settings.comparison_slack:
            u, v = v, u
            pool = [t for t in g.neighbors(v) if t != u and not g.has_edge(u, t)]
            if not pool:
                continue
            targets = pool[: max(1, len(pool) // 2)]
        try:
            edge_rotation(g, u, v, targets)
        except GraphError:
            skipped += 1
            continue

        def check(g=g, u=u, v=v, targets=targets):
            verdict = rotation_increases_rho(g, u, v, targets)
            report.expect(verdict is not False, "rotation", f"u={u} v={v} targets={targets}", g)
        report.run(f"random #{done}", check)
        done += 1
    report.measured["random_instances"] = done
    report.measured["disconnecting_skipped"] = skipped


def suite_floor(report: SuiteReport, ns: List[int], params: SuiteParams):
    max_n = max(ns) if ns else 6
    equal_cases = 0
    for g in _connected_atlas(max_n):
        def check(g=g):
            nonlocal equal_cases
            sub, lam_h = bipartite_floor(g)
            lam_g = least_eigenvalue(g).value
            report.expect(bipartition(sub) is not None and len(sub.components()) == 1,
                          "floor-shape", "floor subgraph is not connected bipartite", g)
            report.expect(lam_h <= lam_g + settings.strict_margin, "floor",
                          f"lambda(H) = {lam_h:.12f} above lambda(G) = {lam_g:.12f}", g)
            equal = abs(lam_h - lam_g) <= settings.comparison_slack
            equal_cases += equal
            report.expect(equal == (bipartition(g) is not None), "floor-equality",
                          f"equality {equal} but bipartite is {bipartition(g) is not None}", g)
        report.run(f"n={g.n} {canonical_code(g).hex()}", check)
    report.measured["equality_cases"] = equal_cases


def suite_star_extremal(report: SuiteReport, ns: List[int], params: SuiteParams):
    for n in ns:
        if n < 2:
            continue
        g = star(n)

        def check(g=g, n=n):
            rho = spectral_radius(g).value
            lam = least_eigenvalue(g).value
            target = np.sqrt(n - 1)
            report.expect(abs(rho - target) <= settings.comparison_slack, "star-rho",
                          f"rho(S_{n}) = {rho:.12f}", g)
            report.expect(abs(lam + target) <= settings.comparison_slack, "star-lambda",
                          f"lambda(S_{n}) = {lam:.12f}", g)
        report.run(f"star n={n}", check)

    scans = {}
    for n in params.scan_n:
        for objective in (Objective.MAX_RHO, Objective.MIN_LAMBDA):
            scan = extremal_scan(EnumSpec(order=n, family=EnumFamily.BIPARTITE_OUTERPLANAR), objective)
            scans[f"{objective.value}:{n}"] = {
                "value": scan["value"],
                "star_attains": scan["star_attains"],
                "winner_edge_most": [w["edge_most"] for w in scan["winners"]],
                "winner_cut_vertices": [len(w.get("cut_vertices", [])) for w in scan["winners"]],
            }
    report.measured["scans"] = scans


def suite_monotone(report: SuiteReport, ns: List[int], params: SuiteParams):
    max_n = max(ns) if ns else 6
    pairs = 0
    for g in _connected_atlas(max_n):
        for e in g.non_edges():
            pairs += 1
            report.run(f"{canonical_code(g).hex()} + {e}", lambda g=g, e=e: monotonicity_check(g, e))
    report.measured["non_edges"] = pairs


def _two_connected_by_chords(n: int) -> Dict[bytes, Graph]:
    """Every 2-connected bipartite outerplanar class on n vertices: chord subsets of the quadrangulations."""
    sides = [(i, (i + 1) % n) for i in range(n)]
    out: Dict[bytes, Graph] = {}
    for chords in labeled_quadrangulations(n):
        for k in range(len(chords) + 1):
            for chosen in combinations(chords, k):
                g = make_graph(n, sides + list(chosen))
                out.setdefault(canonical_code(g), g)
    return out


def suite_equivalence(report: SuiteReport, ns: List[int], params: SuiteParams):
    variants = 0
    for n in _even(ns):
        if n <= EQUIVALENCE_FULL_MAX_N:
            by_chords = _two_connected_by_chords(n)
            candidates = [by_chords[c] for c in sorted(by_chords)]
            if n <= settings.enum_max_n_general:
                spec = EnumSpec(order=n, family=EnumFamily.BIPARTITE_OUTERPLANAR)
                enumerated = {canonical_code(g) for g in enumerate_graphs(spec).graphs if is_2connected(g)}
                report.run(f"n={n} generators", lambda e=enumerated, c=set(by_chords), n=n: report.expect(
                    e == c, "two-connected-census",
                    f"n={n}: {len(e - c)} only enumerated, {len(c - e)} only from chord subsets"))
        else:
            candidates = []
            for g in maximal_2conn_graphs(n):
                candidates += [g] + [g.without_edge(u, v) for u, v in embed(g).chords]
        for h in candidates:
            variants += 1

            def check(h=h):
                structural = is_maximal_2conn_structural(h)
                oracle = is_maximal_bip_outerplanar(h)
                report.expect(structural == oracle, "face-equivalence",
                              f"all-quad faces {structural}, maximality oracle {oracle}", h)
            report.run(f"n={n} {canonical_code(h).hex()}", check)
    report.measured["graphs_checked"] = variants


def suite_census10(report: SuiteReport, ns: List[int], params: SuiteParams):
    fixtures = {canonical_code(h_case(i)) for i in range(1, 6)}
    labeled = len(labeled_quadrangulations(10))
    classes = {canonical_code(g) for g in maximal_2conn_graphs(10)}
    report.run("labeled dissections", lambda: report.expect(
        labeled == 55, "census10", f"{labeled} labeled dissections of the 10-gon"))
    report.run("classes", lambda: report.expect(
        len(classes) == 5, "census10", f"{len(classes)} classes at n=10"))
    report.run("fixtures", lambda: report.expect(
        classes == fixtures, "census10", "H fixtures differ from the census classes"))
    report.measured["labeled"] = labeled
    report.measured["classes"] = len(classes)


def suite_bound34(report: SuiteReport, ns: List[int], params: SuiteParams):
    counts = {}
    for n in _even(ns):
        if n < 16:
            report.notes.append(f"n={n} below the n >= 16 hypothesis")
            continue
        k = 3 * n / 4 + 2
        graphs = maximal_2conn_graphs(n)
        counts[str(n)] = len(graphs)
        for g in graphs:
            def check(g=g):
                cert = cubic_certificate(g, k)
                report.expect(cert.verdict != Verdict.FAIL, "bound34-certificate",
                              f"slack {cert.slack:.3e}", g)
                report.expect(cert.rho <= np.sqrt(k) + settings.comparison_slack, "bound34",
                              f"rho {cert.rho:.12f} > sqrt({k})", g)
            report.run(f"n={n} {canonical_code(g).hex()}", check)
    report.measured["census_sizes"] = counts


def suite_pendant(report: SuiteReport, ns: List[int], params: SuiteParams):
    item_failures = {"i": 0, "ii": 0, "iii": 0}
    for hn in _even(ns):
        for h in maximal_2conn_graphs(hn):
            for root in range(h.n):
                for eps in params.eps:
                    n = h.n + eps
                    r = (n + eps - 4) / 2

                    def check(h=h, root=root, eps=eps, r=r, n=n):
                        items = pendant_row_sum_items(h, root, eps)
                        g = attach_pendants(h, root, eps)
                        cert = square_certificate(g, r)
                        report.expect(items["square_certificate_holds"] and cert.verdict != Verdict.FAIL,
                                      "pendant-square", f"root {root}, eps {eps}", g)
                        bound = 1 + np.sqrt((n + eps - 2) / 2)
                        report.expect(cert.rho <= bound + settings.comparison_slack, "pendant-bound",
                                      f"rho {cert.rho:.12f} > {bound:.12f}", g)
                        for key in item_failures:
                            item_failures[key] += not items[f"item_{key}"]
                    report.run(f"H n={hn} root={root} eps={eps}", check)
    report.measured["measured_item_failures"] = item_failures
    _pendant_strict_range(report, ns, params)


def _pendant_strict_range(report: SuiteReport, ns: List[int], params: SuiteParams):
    """n >= 21 and n/2 <= eps <= n-12, i.e. n_H >= 12 and eps >= n_H: rho < sqrt(n-1) is enforced."""
    roots = 0
    third_item_failures: List[Dict[str, Any]] = []
    for hn in _even(ns):
        if hn < 12:
            continue
        for eps in sorted({hn} | {e for e in params.eps if e >= hn}):
            n = hn + eps
            if n > MAX_VERTICES:
                report.notes.append(f"n_H={hn} eps={eps} exceeds {MAX_VERTICES} vertices")
                continue
            bound = closed_form_bounds(BoundKind.PENDANT_STRICT, n, eps)
            for h in maximal_2conn_graphs(hn):
                code = canonical_code(h).hex()
                for root in range(hn):
                    roots += 1
                    g = attach_pendants(h, root, eps)

                    def check(g=g, root=root, eps=eps, n=n):
                        rho = spectral_radius(g).value
                        report.expect(rho < bound - settings.strict_margin, "pendant-strict",
                                      f"root {root}, eps {eps}: rho {rho:.12f} not below sqrt({n - 1})", g)
                    report.run(f"strict H n={hn} {code} root={root} eps={eps}", check)
                    if not pendant_row_sum_items(h, root, eps)["item_iii"]:
                        third_item_failures.append({"n_h": hn, "h": code, "root": root, "eps": eps})
    report.measured["strict_range_roots"] = roots
    report.measured["strict_range_item_iii_failures"] = third_item_failures


def suite_structure(report: SuiteReport, ns: List[int], params: SuiteParams):
    sizes = {}
    for n in ns:
        structured = {canonical_code(g) for g in maximal_structured(n)}
        filtered = enumerate_graphs(EnumSpec(order=n, family=EnumFamily.MAXIMAL_BIP_OUTERPLANAR))
        by_filter = {canonical_code(g) for g in filtered}
        sizes[str(n)] = len(by_filter)
        report.run(f"generators n={n}", lambda s=structured, f=by_filter, n=n: report.expect(
            s == f, "generator-agreement",
            f"n={n}: {len(s - f)} only structured, {len(f - s)} only filtered"))
        for g in filtered:
            report.run(f"decompose n={n} {canonical_code(g).hex()}", lambda g=g: structural_decompose(g))
    report.measured["maximal_classes"] = sizes


SUITES: Dict[str, Callable[[SuiteReport, List[int], SuiteParams], None]] = {
    "rowsum": suite_rowsum,
    "edgecount": suite_edgecount,
    "g1g2": suite_g1g2,
    "hcases": suite_hcases,
    "rotation": suite_rotation,
    "floor": suite_floor,
    "star-extremal": suite_star_extremal,
    "monotone": suite_monotone,
    "equivalence": suite_equivalence,
    "census10": suite_census10,
    "bound34": suite_bound34,
    "pendant": suite_pendant,
    "structure": suite_structure,
}

DEFAULT_RANGES: Dict[str, List[int]] = {
    "rowsum": list(range(4, 17, 2)),
    "edgecount": list(range(1, 9)),
    "g1g2": list(range(36, 61)),
    "hcases": [36],
    "rotation": list(range(4, 13)),
    "floor": [6],
    "star-extremal": list(range(2, 65)),
    "monotone": [6],
    "equivalence": list(range(4, 15, 2)),
    "census10": [10],
    "bound34": [16, 18, 20],
    "pendant": [4, 6, 8, 10, 12],
    "structure": list(range(1, 9)),
}


def run_suite(name: str, ns: Optional[List[int]] = None, params: Optional[SuiteParams] = None) -> Dict[str, Any]:
    if name not in SUITES:
        raise GraphError(f"Unknown suite '{name}'; expected one of {', '.join(sorted(SUITES))}")
    params = params or SuiteParams()
    report = SuiteReport(name=name)
    orders = list(ns) if ns else DEFAULT_RANGES[name]
    logger.info(f"Suite {name} starting over n={orders[0]}..{orders[-1]}")
    with run_tracker.track(f"suite:{name}"):
        SUITES[name](report, orders, params)
    logger.info(f"Suite {name}: {report.passed}/{report.instances} passed, {report.failed} failed")
    return report.to_payload()
