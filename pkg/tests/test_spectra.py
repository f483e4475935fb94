import logging
import time
from math import sqrt
from types import SimpleNamespace

import numpy as np
import pytest

from Engine.config import apply_overrides
from Engine.constructions import (
    attach_pendants,
    complete_bipartite,
    cycle,
    g1,
    g2,
    h_case,
    ladder,
    path,
    quad_book,
    quadrangulation,
    star,
)
import Engine.spectra as spectra
from Engine.graph_core import CapExceeded, GraphError, disjoint_union, make_graph
from Engine.spectra import (
    BoundCertificate,
    BoundKind,
    ConvergenceError,
    Verdict,
    all_eigenvalues,
    bipartite_floor,
    certify_bound,
    claim_pieces,
    closed_form_bounds,
    cubic_certificate,
    g2_closed_form,
    g2_strict_order,
    jacobi_eigh,
    least_eigenvalue,
    monotonicity_check,
    pendant_row_sum_items,
    rotation_increases_rho,
    row_sums,
    spectral_radius,
    spectrum_report,
    square_certificate,
)
from Engine.violations import TheoremViolation, violation_collector


class TestJacobi:
    def test_against_numpy(self, rng):
        for n in (1, 2, 5, 9):
            a = rng.normal(size=(n, n))
            a = a + a.T
            values, vectors, _ = jacobi_eigh(a)
            assert values == pytest.approx(np.linalg.eigvalsh(a), abs=1e-9)
            assert np.allclose(vectors @ np.diag(values) @ vectors.T, a, atol=1e-9)

    def test_sweep_cap(self):
        apply_overrides({"jacobi_max_sweeps": 1})
        with pytest.raises(ConvergenceError):
            jacobi_eigh(ladder(8).adjacency_matrix())

    @pytest.mark.parametrize("g, expected", [
        (cycle(4), [-2, 0, 0, 2]),
        (star(5), [-2, 0, 0, 0, 2]),
        (path(3), [-sqrt(2), 0, sqrt(2)]),
    ])
    def test_spectra(self, g, expected):
        assert all_eigenvalues(g) == pytest.approx(expected, abs=1e-9)


class TestExtremeEigenvalues:
    @pytest.mark.parametrize("g, rho", [
        (cycle(4), 2.0),
        (star(5), 2.0),
        (ladder(6), 1 + sqrt(2)),
        (complete_bipartite(2, 3), sqrt(6)),
        (quad_book(4), 3.0),
        (make_graph(1, []), 0.0),
    ])
    def test_spectral_radius(self, g, rho):
        res = spectral_radius(g)
        assert res.value == pytest.approx(rho, abs=1e-9)
        assert res.residual <= 1e-9
        assert np.all(res.vector >= -1e-12)
        assert np.linalg.norm(res.vector) == pytest.approx(1.0)

    def test_g1_below_threshold(self):
        assert spectral_radius(g1(36, 4)).value < sqrt(35)

    def test_star_value(self):
        assert spectral_radius(star(36)).value == pytest.approx(sqrt(35), abs=1e-9)

    @pytest.mark.parametrize("g, lam", [
        (cycle(4), -2.0),
        (star(5), -2.0),
        (path(3), -sqrt(2)),
        (cycle(6), -2.0),
        (cycle(5), -(1 + sqrt(5)) / 2),
        (complete_bipartite(2, 3).with_edge(0, 1), None),
    ])
    def test_least_eigenvalue(self, g, lam):
        res = least_eigenvalue(g)
        expected = np.linalg.eigvalsh(g.adjacency_matrix())[0] if lam is None else lam
        assert res.value == pytest.approx(expected, abs=1e-9)
        assert np.allclose(g.adjacency_matrix() @ res.vector, res.value * res.vector, atol=1e-9)

    def test_star_sweep_is_fast(self):
        start = time.perf_counter()
        for n in range(2, 65):
            assert spectral_radius(star(n)).value == pytest.approx(sqrt(n - 1), abs=1e-9)
            assert least_eigenvalue(star(n)).value == pytest.approx(-sqrt(n - 1), abs=1e-9)
        assert time.perf_counter() - start < 1.0

    def test_bipartite_symmetry(self, ladder6):
        assert least_eigenvalue(ladder6).value == pytest.approx(-spectral_radius(ladder6).value, abs=1e-9)

    def test_disconnected(self, caplog):
        g = disjoint_union(cycle(4), make_graph(2, [(0, 1)]))
        with caplog.at_level(logging.WARNING):
            res = spectral_radius(g)
        assert res.value == pytest.approx(2.0, abs=1e-9)
        assert res.disconnected
        assert np.all(res.vector[4:] == 0)
        assert "disconnected" in caplog.text

    def test_power_fallback(self, caplog, ladder6):
        apply_overrides({"power_max_iter": 1})
        with caplog.at_level(logging.WARNING):
            res = spectral_radius(ladder6)
        assert res.value == pytest.approx(1 + sqrt(2), abs=1e-9)
        assert "Jacobi" in caplog.text

    def test_report(self, c4):
        report = spectrum_report(c4)
        assert report["rho"] == pytest.approx(2.0)
        assert report["lambda"] == pytest.approx(-2.0)
        assert report["eigenvalues"] == pytest.approx([-2, 0, 0, 2], abs=1e-9)
        assert report["bipartite"]
        assert not report["disconnected"]


class TestMonotonicity:
    def test_adding_edge(self):
        assert monotonicity_check(path(4), (0, 3))
        assert monotonicity_check(star(5), (1, 2))

    def test_rejects_existing_edge(self, c4):
        with pytest.raises(GraphError):
            monotonicity_check(c4, (0, 1))

    def test_rejects_disconnected(self):
        with pytest.raises(GraphError):
            monotonicity_check(make_graph(3, [(0, 1)]), (0, 2))

    def test_rotation_increases(self):
        assert rotation_increases_rho(g2(12, 5), 0, 2, [1]) is True
        assert not violation_collector.fired

    def test_rotation_from_leaf_skipped(self):
        assert rotation_increases_rho(path(5), 0, 1, [2]) is None

    def test_rotation_on_glued_cycles(self, c4c4):
        # edge 4-5 of the second cycle moves onto the cut vertex
        assert rotation_increases_rho(c4c4, 0, 4, [5]) is True


class TestRowSums:
    def test_four_cycle(self, c4):
        report = row_sums(c4)
        assert report.s1 == [2, 2, 2, 2]
        assert report.s2 == [4, 4, 4, 4]
        assert report.s3 == [8, 8, 8, 8]
        assert report.items == {"1": True, "2": True, "3": True, "4": True}
        assert report.failures == {}

    def test_ladder(self, ladder6):
        report = row_sums(ladder6)
        assert report.s1 == [2, 2, 3, 3, 2, 2]
        assert report.s2 == [5, 5, 7, 7, 5, 5]
        assert all(report.items.values())

    @pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
    def test_h_cases(self, i):
        assert all(row_sums(h_case(i)).items.values())

    def test_items_need_maximal(self, star5):
        assert row_sums(star5).items is None
        assert row_sums(cycle(6)).items is None

    def test_truncated_walks(self, c4):
        report = row_sums(c4, k_max=1)
        assert report.s2 == [] and report.s3 == []

    def test_k_max_range(self, c4):
        with pytest.raises(GraphError):
            row_sums(c4, k_max=4)

    def test_payload(self, c4):
        assert row_sums(c4).to_payload()["items"]["4"] is True


class TestPendantItems:
    def test_ladder_root(self):
        out = pendant_row_sum_items(ladder(12), 0, 12)
        assert out["n"] == 24
        assert out["square_certificate_holds"]
        assert out["item_iii"]
        assert out["pendant_s3"] is not None

    def test_hub_breaks_third_item(self):
        out = pendant_row_sum_items(h_case(5), 3, 26)
        assert out["square_certificate_holds"]
        assert not out["item_iii"]
        assert out["failures"]["iii"] == list(range(10, 36))

    def test_fan_hub_breaks_third_item_in_strict_range(self):
        fan = quadrangulation(12, [(0, 3), (0, 5), (0, 7), (0, 9)])
        out = pendant_row_sum_items(fan, 0, 12)
        assert out["square_certificate_holds"]
        assert out["pendant_s3"] == 28
        assert out["failures"]["iii"] == list(range(12, 24))
        assert spectral_radius(attach_pendants(fan, 0, 12)).value < sqrt(23)

    def test_no_pendants(self, ladder6):
        out = pendant_row_sum_items(ladder6, 0, 0)
        assert out["pendant_s3"] is None
        assert out["item_iii"]


class TestCertificates:
    def test_cubic_strict(self, c4):
        cert = cubic_certificate(c4, 5)
        assert cert.verdict == Verdict.STRICT
        assert cert.slack == pytest.approx(2.0)
        assert cert.f_rho == pytest.approx(-2.0)

    def test_cubic_loose(self, c4):
        cert = cubic_certificate(c4, 4)
        assert cert.verdict == Verdict.LOOSE
        assert cert.slack == pytest.approx(0.0, abs=1e-12)

    def test_cubic_fail(self, star5):
        assert cubic_certificate(star5, 1).verdict == Verdict.FAIL

    def test_square(self, c4, ladder6):
        assert square_certificate(c4, 0).verdict == Verdict.LOOSE
        assert square_certificate(ladder6, 1).verdict == Verdict.LOOSE

    def test_custom_vector(self, c4):
        cert = certify_bound(c4, BoundCertificate(poly=[1.0, 0.0], y=[1, 2, 1, 2], r=4.0))
        assert cert.verdict == Verdict.STRICT
        assert cert.to_payload()["verdict"] == "strict"

    @pytest.mark.parametrize("cert", [
        BoundCertificate(poly=[1.0], y=[1, 1, 1], r=1.0),
        BoundCertificate(poly=[1.0], y=[1, -1, 1, 1], r=1.0),
        BoundCertificate(poly=[1.0], y=[0, 0, 0, 0], r=1.0),
        BoundCertificate(poly=[], y=[], r=1.0),
    ])
    def test_rejects_bad_input(self, c4, cert):
        with pytest.raises(GraphError):
            certify_bound(c4, cert)

    def test_rejects_disconnected(self):
        with pytest.raises(GraphError):
            certify_bound(make_graph(2, []), BoundCertificate(poly=[1.0], y=[], r=1.0))


class TestClosedForms:
    @pytest.mark.parametrize("kind, n, eps, value", [
        (BoundKind.EDGE_MOST_EVEN, 6, 0, 1 + sqrt(2)),
        (BoundKind.EDGE_MOST_ODD, 7, 0, 1 + sqrt(3)),
        (BoundKind.MAXIMAL_2CONN, 16, 0, sqrt(14)),
        (BoundKind.PENDANT, 36, 26, 1 + sqrt(30)),
        (BoundKind.PENDANT_STRICT, 24, 12, sqrt(23)),
        (BoundKind.G1, 36, 0, sqrt(35)),
        (BoundKind.G2, 37, 0, 6.0),
        (BoundKind.STAR_EXTREMAL, 55, 0, sqrt(54)),
    ])
    def test_values(self, kind, n, eps, value):
        assert closed_form_bounds(kind, n, eps) == pytest.approx(value)

    @pytest.mark.parametrize("kind, n, eps", [
        ("edge_most_even", 5, 0),
        ("edge_most_odd", 6, 0),
        ("maximal_2conn", 14, 0),
        ("pendant", 10, 7),
        ("pendant_strict", 24, 13),
        ("g1", 35, 0),
        ("g2", 36, 0),
        ("star_extremal", 54, 0),
    ])
    def test_hypotheses(self, kind, n, eps):
        with pytest.raises(GraphError):
            closed_form_bounds(kind, n, eps)

    def test_ladder_meets_even_bound(self):
        for n in (4, 6, 8, 10):
            assert spectral_radius(ladder(n)).value <= closed_form_bounds("edge_most_even", n) + 1e-9

    @pytest.mark.parametrize("n, s", [(10, 1), (37, 5), (37, 6), (40, 8), (57, 7), (60, 8)])
    def test_g2_closed_form(self, n, s):
        assert spectral_radius(g2(n, s)).value == pytest.approx(g2_closed_form(n, s), abs=1e-9)

    def test_g2_large_s_not_below_sqrt(self):
        assert spectral_radius(g2(40, 8)).value == pytest.approx(sqrt(40), abs=1e-9)
        assert g2_closed_form(57, 7) == pytest.approx(sqrt(56))
        assert spectral_radius(g2(37, 6)).value > 6.0

    def test_g2_strict_order(self):
        assert [g2_strict_order(s) for s in (5, 6, 7, 8)] == [32, 44, 58, 74]
        n = g2_strict_order(6)
        assert spectral_radius(g2(n, 6)).value < sqrt(n - 1)
        assert spectral_radius(g2(37, 5)).value < 6.0

    def test_claim_pieces(self):
        pieces = claim_pieces(36, 4)
        assert pieces["book"] == pytest.approx(pieces["book_closed_form"], abs=1e-9)
        assert pieces["star_piece"] == pytest.approx(pieces["star_piece_closed_form"], abs=1e-9)
        assert pieces["book_closed_form"] == pytest.approx(3.0)


class TestFloor:
    def test_k4(self, k4):
        sub, lam = bipartite_floor(k4)
        assert lam == pytest.approx(-2.0, abs=1e-9)
        assert sub.m == 4

    def test_bipartite_input_is_its_own_floor(self, c4):
        _, lam = bipartite_floor(c4)
        assert lam == pytest.approx(least_eigenvalue(c4).value, abs=1e-9)

    def test_floor_below_least(self):
        for g in (cycle(5), complete_bipartite(2, 3).with_edge(0, 1), ladder(6).with_edge(0, 3)):
            _, lam = bipartite_floor(g)
            assert lam <= least_eigenvalue(g).value + 1e-9

    def test_cap(self):
        with pytest.raises(CapExceeded):
            bipartite_floor(path(9))


def test_violation_raised_and_recorded(monkeypatch):
    monkeypatch.setattr(spectra, "spectral_radius", lambda g: SimpleNamespace(value=2.0))
    with pytest.raises(TheoremViolation):
        monotonicity_check(path(4), (0, 3))
    assert violation_collector.fired
    assert violation_collector.get_summary()["by_check"] == {"edge-monotonicity": 1}
