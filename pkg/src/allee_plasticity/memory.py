"""Pattern overlap, sensitivity sweeps and forgetting/retention curves for
the single-neuron model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import (
    SIGMOID,
    FixedPointReport,
    GainSpec,
    ModelParams,
    NeuronState,
    Trajectory,
    integrate,
    solve_fixed_points,
)
from .errors import DomainError, NoFixedPointError

# Companion parameters held fixed while one parameter is varied.
SENSITIVITY_COMPANIONS = {
    "A": dict(m=1.0, u=0.5, K=1.0),
    "K": dict(m=1.0, u=0.5, A=0.4),
    "m": dict(u=0.5, A=0.4, K=1.0),
    "u": dict(m=1.0, A=0.4, K=1.0),
}

FIG5_INITIALS = [(0.1, 0.2), (0.3, 0.5), (0.6, 0.8), (0.9, 1.2),
                 (1.5, 1.8), (0.1, 4.0), (2.0, 0.1)]


def overlap(state: NeuronState, target: NeuronState) -> float:
    """``1 - |s - s*| / |s*|`` clamped to [0, 1]."""
    norm = math.hypot(target.x, target.y)
    if norm == 0:
        raise DomainError("overlap target must not be the origin")
    raw = 1.0 - math.hypot(state.x - target.x, state.y - target.y) / norm
    return min(1.0, max(0.0, raw))


def _overlap_array(xs, ys, target):
    norm = math.hypot(target.x, target.y)
    raw = 1.0 - np.hypot(xs - target.x, ys - target.y) / norm
    return np.clip(raw, 0.0, 1.0)


@dataclass(frozen=True)
class OverlapSeries:
    initial: NeuronState
    target: FixedPointReport
    times: np.ndarray
    overlap: np.ndarray
    raw_overlap: np.ndarray
    extinct_at: Optional[float] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)


def retrieval_target(params: ModelParams, spec: GainSpec = SIGMOID) -> FixedPointReport:
    """The stable interaction-branch point, else a stable threshold-branch
    point."""
    reports = solve_fixed_points(params, spec)
    for branch in ("interaction", "allee"):
        for rep in reports:
            if rep.branch == branch and rep.is_stable:
                return rep
    raise NoFixedPointError("no stable fixed point to use as retrieval target")


def overlap_experiment(params: ModelParams, spec: GainSpec,
                       initials: Sequence, t_end: float = 20.0, dt: float = 0.01,
                       extinct_is_zero: bool = True) -> list[OverlapSeries]:
    """Integrate each initial condition and score its overlap with the
    stable fixed point at every step.

    With ``extinct_is_zero`` the overlap is set to 0 from the extinction
    time on: an extinct weight cannot be driven back to the target.
    ``raw_overlap`` always holds the unmodified distance score.
    """
    target = retrieval_target(params, spec)
    out = []
    for s0 in initials:
        s0 = s0 if isinstance(s0, NeuronState) else NeuronState(*s0)
        traj = integrate(params, spec, s0, t_end, dt)
        raw = _overlap_array(traj.x, traj.y, target.point)
        ov = raw.copy()
        if extinct_is_zero and traj.extinct_at is not None:
            ov[traj.times >= traj.extinct_at] = 0.0
        out.append(OverlapSeries(s0, target, traj.times, ov, raw, traj.extinct_at, traj))
    return out


@dataclass(frozen=True)
class SensitivityResult:
    parameter: str
    values: np.ndarray
    params: list
    trajectories: list
    companions: dict

    @property
    def extinct_count(self) -> int:
        return sum(t.extinct_at is not None for t in self.trajectories)


def sensitivity_sweep(base: ModelParams, spec: GainSpec, vary: str,
                      lo: float = 0.1, hi: float = 4.6, n: int = 10,
                      s0: NeuronState = NeuronState(0.5, 0.5),
                      t_end: float = 20.0, dt: float = 0.01,
                      use_companions: bool = True) -> SensitivityResult:
    """Vary one parameter over ``n`` equidistant values and integrate.

    By default the other three parameters are taken from
    ``SENSITIVITY_COMPANIONS``; time scales come from ``base``.
    """
    if vary not in SENSITIVITY_COMPANIONS:
        raise DomainError(f"unknown sensitivity parameter {vary!r}")
    if n < 1:
        raise DomainError("n must be >= 1")
    companions = SENSITIVITY_COMPANIONS[vary] if use_companions else {}
    values = np.linspace(lo, hi, n)
    plist, trajs = [], []
    for v in values:
        p = base.with_(**companions, **{vary: float(v)})
        plist.append(p)
        trajs.append(integrate(p, spec, s0, t_end, dt))
    return SensitivityResult(vary, values, plist, trajs, dict(companions))


def forgetting_curve(x0: float, t):
    """Sub-threshold reference: ``x' = -x``."""
    return x0 * np.exp(-np.asarray(t, dtype=float))


def retention_curve(x0: float, t):
    """Saturated reference: ``x' = 1 - x``, i.e. ``1 + (x0 - 1) e^{-t}``."""
    return 1.0 + (x0 - 1.0) * np.exp(-np.asarray(t, dtype=float))
