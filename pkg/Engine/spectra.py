import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from Engine.config import settings
from Engine.constructions import attach_pendants, edge_rotation, quad_book, star
from Engine.embedding import hamilton_cycle
from Engine.graph_core import (
    CapExceeded,
    Graph,
    GraphError,
    bipartition,
    is_2connected,
    is_connected,
)
from Engine.recognition import is_maximal_2conn_structural, is_outerplanar_by_peeling
from Engine.violations import hard_failure

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class Verdict(str, Enum):
    LOOSE = "loose"
    STRICT = "strict"
    FAIL = "fail"


class BoundKind(str, Enum):
    EDGE_MOST_EVEN = "edge_most_even"
    EDGE_MOST_ODD = "edge_most_odd"
    MAXIMAL_2CONN = "maximal_2conn"
    PENDANT = "pendant"
    PENDANT_STRICT = "pendant_strict"
    G1 = "g1"
    G2 = "g2"
    STAR_EXTREMAL = "star_extremal"


@dataclass
class SpectralResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    disconnected: bool = False

    def to_payload(self) -> Dict[str, object]:
        return {
            "value": round(float(self.value), 12),
            "vector": [round(float(x), 12) for x in self.vector],
            "residual": float(self.residual),
            "iterations": self.iterations,
            "disconnected": self.disconnected,
        }


@dataclass
class BoundCertificate:
    """Test data for f(A) y <= r y; coefficients run from the highest power down."""

    poly: List[float]
    y: List[float]
    r: float
    verdict: Optional[Verdict] = None
    slack: Optional[float] = None
    rho: Optional[float] = None
    f_rho: Optional[float] = None

    def to_payload(self) -> Dict[str, object]:
        return {
            "poly": list(self.poly),
            "r": self.r,
            "verdict": self.verdict.value if self.verdict else None,
            "slack": self.slack,
            "rho": self.rho,
            "f_rho": self.f_rho,
        }


@dataclass
class RowSumReport:
    s1: List[int]
    s2: List[int]
    s3: List[int]
    items: Optional[Dict[str, bool]] = None
    failures: Dict[str, List[int]] = field(default_factory=dict)

    def to_payload(self) -> Dict[str, object]:
        return {
            "s1": self.s1,
            "s2": self.s2,
            "s3": self.s3,
            "items": self.items,
            "failures": {k: v for k, v in sorted(self.failures.items())},
        }


# ---------------------------------------------------------------------------
# solvers


def jacobi_eigh(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    """Cyclic Jacobi rotations on a dense symmetric matrix; returns (values, vectors, sweeps)."""
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    off_tol = settings.residual_tol * 1e-3
    sweeps = 0
    for sweeps in range(1, settings.jacobi_max_sweeps + 1):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < off_tol:
            break
        # early sweeps only rotate the large entries
        threshold = 0.2 * off / (n * n) if sweeps <= 3 else 1e-300
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < threshold:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off >= off_tol:
            raise ConvergenceError(f"Jacobi did not converge in {settings.jacobi_max_sweeps} sweeps", off)

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order], sweeps


def _decompose(g: Graph) -> Tuple[np.ndarray, np.ndarray, int]:
    a = g.adjacency_matrix()
    values, vectors, sweeps = jacobi_eigh(a)
    residual = float(np.max(np.abs(a - vectors @ np.diag(values) @ vectors.T))) if g.n else 0.0
    if residual > settings.residual_tol:
        raise ConvergenceError("Jacobi reconstruction above tolerance", residual)
    return values, vectors, sweeps


def all_eigenvalues(g: Graph) -> np.ndarray:
    return _decompose(g)[0]


def _residual(a: np.ndarray, x: np.ndarray, value: float) -> float:
    return float(np.max(np.abs(a @ x - value * x)))


def _perron_connected(g: Graph) -> SpectralResult:
    a = g.adjacency_matrix()
    if g.n == 1:
        return SpectralResult(value=0.0, vector=np.ones(1), residual=0.0, iterations=0)

    # shift by I so the dominant eigenvalue of a bipartite graph is unique
    b = a + np.eye(g.n)
    x = np.ones(g.n) / np.sqrt(g.n)
    stop = settings.residual_tol * 1e-3
    iterations = 0
    for iterations in range(1, settings.power_max_iter + 1):
        y = b @ x
        y /= np.linalg.norm(y)
        if np.max(np.abs(y - x)) < stop:
            x = y
            break
        x = y
    rho = float(x @ a @ x)
    residual = _residual(a, x, rho)

    if residual > settings.residual_tol:
        logger.warning(f"Power iteration stalled at residual {residual:.2e} on n={g.n}; using Jacobi")
        values, vectors, sweeps = _decompose(g)
        x = np.abs(vectors[:, -1])
        x /= np.linalg.norm(x)
        rho = float(values[-1])
        residual = _residual(a, x, rho)
        iterations += sweeps
        if residual > settings.residual_tol:
            raise ConvergenceError("Principal eigenpair above tolerance", residual)

    return SpectralResult(value=rho, vector=x, residual=residual, iterations=iterations)


def spectral_radius(g: Graph) -> SpectralResult:
    comps = g.components()
    if len(comps) == 1:
        return _perron_connected(g)

    logger.warning(f"spectral_radius on a disconnected graph (n={g.n}, {len(comps)} components); taking the component maximum")
    best: Optional[SpectralResult] = None
    best_comp: List[int] = []
    total_iterations = 0
    for comp in comps:
        sub, _ = g.induced(comp)
        res = _perron_connected(sub)
        total_iterations += res.iterations
        if best is None or res.value > best.value:
            best, best_comp = res, comp
    vector = np.zeros(g.n)
    vector[best_comp] = best.vector
    return SpectralResult(
        value=best.value,
        vector=vector,
        residual=_residual(g.adjacency_matrix(), vector, best.value),
        iterations=total_iterations,
        disconnected=True,
    )


def least_eigenvalue(g: Graph) -> SpectralResult:
    """Bipartite connected graphs reuse the Perron pair: lambda = -rho, vector signed by side."""
    disconnected = not is_connected(g)
    sides = bipartition(g) if not disconnected and g.n > 1 else None
    if sides is not None:
        rho = _perron_connected(g)
        x = rho.vector.copy()
        x[sides.part(1)] *= -1
        residual = _residual(g.adjacency_matrix(), x, -rho.value)
        if residual <= settings.residual_tol:
            return SpectralResult(value=-rho.value, vector=x, residual=residual, iterations=rho.iterations)
        logger.warning(f"Signed Perron vector off by {residual:.2e} on n={g.n}; using Jacobi")
    if disconnected:
        logger.warning(f"least_eigenvalue on a disconnected graph (n={g.n}); taking the component minimum")
    values, vectors, sweeps = _decompose(g)
    x = vectors[:, 0]
    residual = _residual(g.adjacency_matrix(), x, float(values[0]))
    if residual > settings.residual_tol:
        raise ConvergenceError("Least eigenpair above tolerance", residual)
    return SpectralResult(
        value=float(values[0]), vector=x, residual=residual, iterations=sweeps, disconnected=disconnected
    )


def spectrum_report(g: Graph) -> Dict[str, object]:
    rho = spectral_radius(g)
    lam = least_eigenvalue(g)
    values = all_eigenvalues(g)
    return {
        "n": g.n,
        "m": g.m,
        "rho": round(rho.value, 12),
        "lambda": round(lam.value, 12),
        "eigenvalues": [round(float(x), 12) + 0.0 for x in values],
        "principal_vector": [round(float(x), 12) for x in rho.vector],
        "residual": max(rho.residual, lam.residual),
        "disconnected": rho.disconnected,
        "bipartite": bipartition(g) is not None,
    }


# ---------------------------------------------------------------------------
# monotonicity and rotation


def monotonicity_check(g: Graph, e: Tuple[int, int]) -> bool:
    u, v = e
    if not is_connected(g):
        raise GraphError("monotonicity_check requires a connected graph")
    if u == v or g.has_edge(u, v):
        raise GraphError(f"({u}, {v}) is not a non-edge")
    before = spectral_radius(g).value
    after = spectral_radius(g.with_edge(u, v)).value
    if after > before + settings.strict_margin:
        return True
    hard_failure("edge-monotonicity", f"rho {before:.12f} -> {after:.12f} after adding ({u}, {v})", g)


def rotation_increases_rho(g: Graph, u: int, v: int, targets: Sequence[int]) -> Optional[bool]:
    """None when the hypothesis x_u >= x_v does not hold."""
    before = spectral_radius(g)
    x = before.vector
    if x[u] < x[v] - settings.comparison_slack:
        return None
    rotated = edge_rotation(g, u, v, targets)
    after = spectral_radius(rotated).value
    if after > before.value + settings.strict_margin:
        return True
    hard_failure(
        "rotation",
        f"rho {before.value:.12f} -> {after:.12f} rotating {list(targets)} from {v} to {u}",
        g,
    )


# ---------------------------------------------------------------------------
# row sums and certificates


def _walk_counts(g: Graph, k_max: int) -> List[np.ndarray]:
    a = g.adjacency_matrix()
    w = np.ones(g.n)
    counts = []
    for _ in range(k_max):
        w = a @ w
        counts.append(np.rint(w).astype(int))
    return counts


def row_sum_items(g: Graph, s1: Sequence[int], s2: Sequence[int], s3: Sequence[int]) -> Tuple[Dict[str, bool], Dict[str, List[int]]]:
    """Four row-sum inequalities for a maximal 2-connected bipartite outerplanar graph."""
    n = g.n
    cycle = hamilton_cycle(g)
    pos = {v: i for i, v in enumerate(cycle)}
    failures: Dict[str, List[int]] = {"1": [], "2": [], "3": [], "4": []}
    for v in range(n):
        if 2 * s1[v] > n:
            failures["1"].append(v)
        if 2 * s2[v] > n + 4 * s1[v] - 4 or 2 * s1[v] > n:
            failures["2"].append(v)
        i = pos[v]
        for nxt in (cycle[(i + 1) % n], cycle[(i - 1) % n]):
            if s2[v] + s1[nxt] > n + s1[v] or 2 * s1[v] > n:
                failures["3"].append(v)
                break
        if 2 * s3[v] > 2 * s1[v] ** 2 + 6 * s1[v] + 3 * n - 12:
            failures["4"].append(v)
    items = {k: not bad for k, bad in failures.items()}
    return items, {k: bad for k, bad in failures.items() if bad}


def row_sums(g: Graph, k_max: int = 3) -> RowSumReport:
    if not 1 <= k_max <= 3:
        raise GraphError(f"row_sums supports k_max in 1..3, got {k_max}")
    counts = _walk_counts(g, 3)
    s1, s2, s3 = (c.tolist() for c in counts)
    report = RowSumReport(s1=s1, s2=s2 if k_max >= 2 else [], s3=s3 if k_max >= 3 else [])
    if (
        is_2connected(g)
        and bipartition(g) is not None
        and is_outerplanar_by_peeling(g)
        and is_maximal_2conn_structural(g)
    ):
        report.items, report.failures = row_sum_items(g, s1, s2, s3)
    return report


def pendant_row_sum_items(h: Graph, root: int, eps: int) -> Dict[str, object]:
    """Row-sum inequalities for h with eps pendants at root; vertices h.n.. are the pendants."""
    g = attach_pendants(h, root, eps)
    n = g.n
    s1, s2, s3 = (c.tolist() for c in _walk_counts(g, 3))
    rhs2 = [(n + eps - 4) / 2 + 2 * s1[v] for v in range(n)]
    item_two = [v for v in range(n) if s2[v] - 2 * s1[v] > (n + eps - 4) / 2 + 1e-12]
    root_bound = (s1[root] + 3) * s1[root] + (3 * n - 3 * eps) / 2 - 6
    failures_i = [root] if s3[root] > root_bound + 1e-12 else []
    failures_ii = []
    for t in range(h.n):
        if t == root:
            continue
        extra = (3 * n - eps) / 2 - 6 if g.has_edge(t, root) else (3 * n + eps) / 2 - 6
        if s3[t] > s1[t] ** 2 + 3 * s1[t] + extra + 1e-12:
            failures_ii.append(t)
    failures_iii = [z for z in range(h.n, n) if s3[z] > n - 2]
    return {
        "n": n,
        "eps": eps,
        "root": root,
        "square_certificate_holds": not item_two,
        "square_rhs_max": max(rhs2),
        "item_i": not failures_i,
        "item_ii": not failures_ii,
        "item_iii": not failures_iii,
        "failures": {"square": item_two, "i": failures_i, "ii": failures_ii, "iii": failures_iii},
        "pendant_s3": s3[h.n] if eps else None,
    }


def _apply_poly(a: np.ndarray, poly: Sequence[float], y: np.ndarray) -> np.ndarray:
    """Horner evaluation of f(A) y with matrix-vector products only."""
    out = np.zeros_like(y)
    for c in poly:
        out = a @ out + c * y
    return out


def certify_bound(g: Graph, cert: BoundCertificate) -> BoundCertificate:
    if not is_connected(g):
        raise GraphError("certify_bound requires a connected graph")
    y = np.asarray(cert.y if cert.y else np.ones(g.n), dtype=float)
    if y.shape != (g.n,):
        raise GraphError(f"Test vector has length {y.size}, graph has n={g.n}")
    if np.any(y < 0) or not np.any(y > 0):
        raise GraphError("Test vector must be nonnegative and nonzero")
    if not cert.poly:
        raise GraphError("Certificate polynomial has no coefficients")

    a = g.adjacency_matrix()
    lhs = _apply_poly(a, cert.poly, y)
    rhs = cert.r * y
    gap = rhs - lhs
    slack = float(np.min(gap))

    if slack < -settings.certificate_slack:
        verdict = Verdict.FAIL
    elif np.any(gap > settings.comparison_slack):
        verdict = Verdict.STRICT
    else:
        verdict = Verdict.LOOSE

    rho = spectral_radius(g).value
    f_rho = float(np.polyval(cert.poly, rho))
    out = BoundCertificate(
        poly=list(cert.poly), y=y.tolist(), r=cert.r, verdict=verdict, slack=slack, rho=rho, f_rho=f_rho
    )
    if verdict == Verdict.LOOSE and f_rho > cert.r + settings.comparison_slack:
        hard_failure("certificate", f"loose verdict but f(rho)={f_rho:.12f} > r={cert.r}", g)
    if verdict == Verdict.STRICT and f_rho >= cert.r - settings.strict_margin:
        hard_failure("certificate", f"strict verdict but f(rho)={f_rho:.12f} >= r={cert.r}", g)
    return out


def cubic_certificate(g: Graph, k: float) -> BoundCertificate:
    """f(x) = x^3 - k x, r = 0, y = 1."""
    return certify_bound(g, BoundCertificate(poly=[1.0, 0.0, -k, 0.0], y=[], r=0.0))


def square_certificate(g: Graph, r: float) -> BoundCertificate:
    """f(x) = x^2 - 2x, y = 1."""
    return certify_bound(g, BoundCertificate(poly=[1.0, -2.0, 0.0], y=[], r=r))


# ---------------------------------------------------------------------------
# closed forms


def closed_form_bounds(kind: BoundKind, n: int, eps: int = 0) -> float:
    kind = BoundKind(kind)

    def hypothesis(ok: bool, text: str):
        if not ok:
            raise GraphError(f"{kind.value} bound needs {text}; got n={n}, eps={eps}")

    if kind == BoundKind.EDGE_MOST_EVEN:
        hypothesis(n >= 4 and n % 2 == 0, "even n >= 4")
        return 1 + np.sqrt(n / 2 - 1)
    if kind == BoundKind.EDGE_MOST_ODD:
        hypothesis(n >= 3 and n % 2 == 1, "odd n >= 3")
        return 1 + np.sqrt(n / 2 - 0.5)
    if kind == BoundKind.MAXIMAL_2CONN:
        hypothesis(n >= 16 and n % 2 == 0, "even n >= 16")
        return float(np.sqrt(3 * n / 4 + 2))
    if kind == BoundKind.PENDANT:
        hypothesis(1 <= eps <= n - 4, "1 <= eps <= n-4")
        return 1 + np.sqrt((n + eps - 2) / 2)
    if kind == BoundKind.PENDANT_STRICT:
        hypothesis(n >= 21 and n / 2 <= eps <= n - 12, "n >= 21 and n/2 <= eps <= n-12")
        return float(np.sqrt(n - 1))
    if kind == BoundKind.G1:
        hypothesis(n >= 36, "n >= 36")
        return float(np.sqrt(n - 1))
    if kind == BoundKind.G2:
        hypothesis(n >= 37, "n >= 37")
        return float(np.sqrt(n - 1))
    hypothesis(n >= 55, "n >= 55")
    return float(np.sqrt(n - 1))


def claim_pieces(n: int, s: int) -> Dict[str, float]:
    """Spectral radii of the quad-book piece and the star piece of g1(n, s)."""
    book = spectral_radius(quad_book(s)).value
    rest = n - 2 * s - 1
    piece = spectral_radius(star(rest)).value if rest >= 1 else 0.0
    return {
        "book": book,
        "book_closed_form": 1 + float(np.sqrt(s)),
        "star_piece": piece,
        "star_piece_closed_form": float(np.sqrt(max(rest - 1, 0))),
    }


def g2_closed_form(n: int, s: int) -> float:
    """rho(g2(n, s)) from the 2x2 quotient on the two hubs."""
    return float(np.sqrt(((n - 2 + s) + np.sqrt((n - 2 - s) ** 2 + 4 * s * s)) / 2))


def g2_strict_order(s: int) -> int:
    """Smallest n with rho(g2(n, s)) < sqrt(n - 1); equality holds at n - 1."""
    return s * s + s + 2


# ---------------------------------------------------------------------------
# least-eigenvalue floor


def bipartite_floor(g: Graph) -> Tuple[Graph, float]:
    """Connected bipartite subgraph H with the smallest least eigenvalue, by exhaustive cuts."""
    if g.n > settings.floor_max_n:
        raise CapExceeded(f"bipartite_floor capped at n <= {settings.floor_max_n}, got {g.n}")
    if not is_connected(g):
        raise GraphError("bipartite_floor requires a connected graph")
    if g.n == 1:
        return g, 0.0

    best: Optional[Tuple[float, Graph]] = None
    edges = g.edges()
    for mask in range(1 << (g.n - 1)):
        side = [(mask >> v) & 1 for v in range(g.n - 1)] + [0]
        cut = [(u, v) for u, v in edges if side[u] != side[v]]
        if not cut:
            continue
        rows = [0] * g.n
        for u, v in cut:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        h = Graph(g.n, tuple(rows))
        for comp in h.components():
            if len(comp) < 2:
                continue
            sub, _ = h.induced(comp)
            lam = -spectral_radius(sub).value
            if best is None or lam < best[0] - settings.strict_margin:
                best = (lam, sub)
    return best[1], best[0]
