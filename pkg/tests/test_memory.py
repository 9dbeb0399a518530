import numpy as np
import pytest

from allee_plasticity.dynamics import SIGMOID, ModelParams, NeuronState
from allee_plasticity.errors import DomainError, NoFixedPointError
from allee_plasticity.memory import (
    FIG5_INITIALS,
    forgetting_curve,
    overlap,
    overlap_experiment,
    retention_curve,
    retrieval_target,
    sensitivity_sweep,
)

FIG5 = ModelParams(A=0.4, K=2.0, u=1.0, m=0.5)


class TestOverlap:
    def test_identity_and_clamp(self):
        t = NeuronState(0.6, 0.8)
        assert overlap(t, t) == 1.0
        assert overlap(NeuronState(0.0, 0.0), t) == 0.0
        assert overlap(NeuronState(10.0, 10.0), t) == 0.0

    def test_half_way(self):
        t = NeuronState(0.6, 0.8)
        assert overlap(NeuronState(0.3, 0.4), t) == pytest.approx(0.5)

    def test_origin_target(self):
        with pytest.raises(DomainError):
            overlap(NeuronState(1, 1), NeuronState(0, 0))


class TestRetrievalTarget:
    def test_fig5_target(self):
        t = retrieval_target(FIG5)
        assert t.branch == "interaction"
        assert t.point.x == pytest.approx(0.93166, abs=1e-5)
        assert t.point.y == pytest.approx(4.6083, abs=1e-4)

    def test_threshold_fallback(self):
        # interaction point is a saddle here, the threshold point is stable
        p = ModelParams(A=1.7, K=0.4, u=2.5, m=0.01)
        assert retrieval_target(p).branch == "allee"

    def test_no_stable_point(self, monkeypatch):
        import allee_plasticity.memory as mem
        monkeypatch.setattr(mem, "solve_fixed_points", lambda p, s: [])
        with pytest.raises(NoFixedPointError):
            retrieval_target(FIG5)


class TestOverlapExperiment:
    @pytest.fixture(scope="class")
    @classmethod
    def series(cls):
        return overlap_experiment(FIG5, SIGMOID, FIG5_INITIALS, t_end=20.0)

    def test_below_threshold_goes_extinct(self, series):
        for s in series:
            if s.initial.y < FIG5.A:
                assert s.extinct_at is not None
                assert s.overlap[-1] == 0.0
            else:
                assert s.extinct_at is None

    def test_above_threshold_approaches_target(self, series):
        for s in series:
            if s.initial.y >= FIG5.A:
                assert s.overlap[-1] > 0.95
                assert s.overlap[-1] >= s.overlap[len(s.overlap) // 2] - 1e-9

    def test_raw_overlap_kept(self, series):
        ext = [s for s in series if s.extinct_at is not None]
        assert all(s.raw_overlap[-1] > 0 for s in ext)

    def test_raw_mode(self):
        s = overlap_experiment(FIG5, SIGMOID, [(0.1, 0.2)], extinct_is_zero=False)[0]
        np.testing.assert_array_equal(s.overlap, s.raw_overlap)


class TestSensitivity:
    def test_extinction_monotone_in_A(self):
        res = sensitivity_sweep(FIG5, SIGMOID, "A")
        extinct = [t.extinct_at is not None for t in res.trajectories]
        assert res.extinct_count == 8
        assert extinct == sorted(extinct)
        times = [t.extinct_at for t in res.trajectories if t.extinct_at is not None]
        assert times == sorted(times, reverse=True)

    def test_companions_applied(self):
        res = sensitivity_sweep(FIG5, SIGMOID, "K", n=3)
        assert all(p.u == 0.5 and p.m == 1.0 and p.A == 0.4 for p in res.params)
        np.testing.assert_allclose([p.K for p in res.params], [0.1, 2.35, 4.6])

    def test_unknown_parameter(self):
        with pytest.raises(DomainError):
            sensitivity_sweep(FIG5, SIGMOID, "tau_v")


class TestReferenceCurves:
    def test_forgetting(self):
        assert forgetting_curve(0.8, 0.0) == 0.8
        assert forgetting_curve(0.8, 1.0) == pytest.approx(0.8 / np.e)

    def test_retention(self):
        assert retention_curve(0.2, 0.0) == pytest.approx(0.2)
        assert retention_curve(0.2, 50.0) == pytest.approx(1.0)
