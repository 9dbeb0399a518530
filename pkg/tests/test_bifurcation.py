import math

import numpy as np
import pytest

from allee_plasticity.bifurcation import (
    det_at,
    hopf_crossing,
    hopf_verdict,
    hopf_window,
    parameter_sweep,
    scan_region,
    trace_at,
    trace_det_grid,
)
from allee_plasticity.dynamics import SIGMOID, ModelParams, NeuronState, jacobian_at
from allee_plasticity.errors import DomainError

FIG4 = ModelParams(A=1.0, K=2.0, u=2.0, m=5.0)


class TestTraceDet:
    def test_grid_matches_pointwise(self):
        xs = np.array([[0.1, 0.5], [0.9, 0.3]])
        ys = np.array([[0.2, 1.0], [2.5, 0.7]])
        tr, det = trace_det_grid(FIG4, SIGMOID, xs, ys)
        for i in range(2):
            for j in range(2):
                J = jacobian_at(FIG4, SIGMOID, NeuronState(xs[i, j], ys[i, j]))
                assert tr[i, j] == pytest.approx(np.trace(J), abs=1e-12)
                assert det[i, j] == pytest.approx(np.linalg.det(J), rel=1e-9, abs=1e-12)

    def test_scalar_helpers(self):
        s = NeuronState(0.4, 0.6)
        J = jacobian_at(FIG4, SIGMOID, s)
        assert trace_at(FIG4, SIGMOID, s) == pytest.approx(np.trace(J))
        assert det_at(FIG4, SIGMOID, s) == pytest.approx(np.linalg.det(J))


class TestRegionScan:
    @pytest.fixture(scope="class")
    @classmethod
    def scan(cls):
        return scan_region(FIG4, SIGMOID)

    def test_region_nonempty_and_bounded(self, scan):
        assert scan.hopf_cells.sum() > 0
        x0, x1, y0, y1 = scan.hopf_bounds()
        # the region hugs the small-x side, below x ~ 0.11
        assert x1 < 0.12
        assert 0.2 < y0 < y1 < 0.6

    def test_hopf_cells_have_positive_det(self, scan):
        i, j = np.argwhere(scan.hopf_cells)[0]
        assert (scan.det[i:i + 2, j:j + 2] > 0).all()
        t = scan.tr[i:i + 2, j:j + 2]
        assert t.min() < 0 < t.max()

    def test_no_threshold_means_no_region(self):
        assert not scan_region(FIG4.with_(A=0.0), SIGMOID).hopf_cells.any()

    def test_bad_ranges(self):
        with pytest.raises(DomainError):
            scan_region(FIG4, SIGMOID, y_range=(0.0, 3.0))
        with pytest.raises(DomainError):
            scan_region(FIG4, SIGMOID, x_range=(1.0, 0.5))
        with pytest.raises(DomainError):
            scan_region(FIG4, SIGMOID, resolution=1)


class TestHopfVerdict:
    def test_window_roots_solve_quadratic(self):
        lam, beta = -1.0, 10.0
        p1, p2 = hopf_window(lam, beta)
        for p in (p1, p2):
            assert -lam * p * p + beta * lam * p + 2 * beta == pytest.approx(0, abs=1e-12)

    def test_negative_discriminant(self):
        assert hopf_window(-0.1, 0.05) is None

    def test_threshold_points_never_hopf(self):
        for v in hopf_verdict(ModelParams(1.7, 0.4, 2.5, 0.01)):
            if v.branch == "allee":
                assert not v.hopf

    def test_no_threshold_forces_false(self):
        for v in hopf_verdict(FIG4.with_(A=0.0)):
            assert not v.hopf and v.case == "A=0"

    def test_quadratic_vanishes_when_true(self):
        rng = np.random.default_rng(3)
        found = 0
        for _ in range(200):
            p = ModelParams(*rng.uniform(0.1, 4.6, 4))
            for v in hopf_verdict(p):
                if v.hopf:
                    found += 1
                    assert abs(v.quadratic(v.p2)) < 1e-9 * max(1.0, v.beta * abs(v.lam))
        assert found > 0


class TestHopfCrossing:
    def test_no_sign_change_returns_none(self):
        assert hopf_crossing(ModelParams(1.7, 0.4, 2.5, 0.01), SIGMOID, "m", 0.01, 0.02) is None

    def test_crossing_eigenvalues_consistent(self):
        # search a bracket in m where the interaction-point trace changes sign
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(300):
            A, K, u = rng.uniform(0.1, 4.6, 3)
            base = ModelParams(A, K, u, 0.1)
            c = hopf_crossing(base, SIGMOID, "m", 0.1, 4.6)
            if c is None:
                continue
            checked += 1
            assert c.agrees
            if not c.verdict.hopf:
                # a real trace zero without a Hopf verdict sits at a saddle
                assert c.eigenvalues[0].imag == 0
        assert checked > 0

    def test_bad_parameter(self):
        with pytest.raises(DomainError):
            hopf_crossing(FIG4, SIGMOID, "tau_v", 0.5, 2.0)


class TestSweep:
    def test_stability_exchange_in_u(self):
        base = ModelParams(A=0.4, K=0.4, u=1.5, m=2.0)
        events = parameter_sweep(base, SIGMOID, "u", np.linspace(1.3, 1.7, 9))
        kinds = [e.kind for e in events]
        assert "transcritical" in kinds
        ev = events[kinds.index("transcritical")]
        # the two interior points pass through each other near u = 1.49
        assert ev.value == pytest.approx(1.4933, abs=1e-3)

    def test_no_events_on_flat_range(self):
        base = ModelParams(A=1.7, K=0.4, u=2.5, m=0.01)
        assert parameter_sweep(base, SIGMOID, "m", [0.01, 0.02, 0.03]) == []

    def test_non_monotone_rejected(self):
        with pytest.raises(DomainError):
            parameter_sweep(FIG4, SIGMOID, "u", [1.0, 2.0, 1.5])
