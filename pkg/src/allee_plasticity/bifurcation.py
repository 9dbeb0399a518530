"""Hopf verdicts, trace/determinant region scans and parameter sweeps."""
from __future__ import annotations

import logging
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
    eigenvalues_of,
    gain_derivative,
    interaction_branch_roots,
    jacobian_at,
    solve_fixed_points,
)
from .errors import DomainError, NoFixedPointError

log = logging.getLogger(__name__)

SWEEP_TOL = 1e-6
SWEEPABLE = ("A", "K", "u", "m")


def trace_at(params: ModelParams, spec: GainSpec, s: NeuronState) -> float:
    j = jacobian_at(params, spec, s)
    return float(j[0, 0] + j[1, 1])


def det_at(params: ModelParams, spec: GainSpec, s: NeuronState) -> float:
    j = jacobian_at(params, spec, s)
    return float(j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0])


def trace_det_grid(params: ModelParams, spec: GainSpec, x, y):
    """Vectorised trace and determinant of the Jacobian over arrays x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("y must be > 0 on the whole grid")
    A, u, m = params.A, params.u, params.m
    inv_k = 0.0 if params.unbounded else 1.0 / params.K
    sy = np.sqrt(y)
    gp = gain_derivative(spec, u * sy + m * x)
    fac = 1.0 if A == 0 else 1.0 - A / y
    dfac = 0.0 if A == 0 else A / (y * y)
    fx = (-1.0 + m * gp) / params.tau_v
    fy = u / (2.0 * sy) * gp / params.tau_v
    gx = (u * sy - 2.0 * x * y * inv_k) * fac / params.tau_w
    gy = (x * (u / (2.0 * sy) - x * inv_k) * fac
          + x * (u * sy - x * y * inv_k) * dfac) / params.tau_w
    return fx + gy, fx * gy - fy * gx


# --------------------------------------------------------------------------
# closed-form Hopf verdict


@dataclass(frozen=True)
class HopfVerdict:
    branch: str
    point: NeuronState
    lam: float
    beta: float
    p2: Optional[float]
    hopf: bool
    case: str
    window_empty: bool = False
    trace: float = math.nan
    det: float = math.nan

    def quadratic(self, p: float) -> float:
        """``-lam p^2 + beta lam p + 2 beta``; vanishes at ``p2``."""
        return -self.lam * p * p + self.beta * self.lam * p + 2.0 * self.beta


def hopf_window(lam: float, beta: float):
    """Return ``(p1, p2)`` roots of ``-lam p^2 + beta lam p + 2 beta``, or
    ``None`` when the discriminant is negative."""
    disc = beta * beta / 4.0 + 2.0 * beta / lam
    if disc < 0:
        return None
    r = math.sqrt(disc)
    return beta / 2.0 - r, beta / 2.0 + r


def _verdict_at(params: ModelParams, spec: GainSpec, x: float) -> HopfVerdict:
    A, K, u, m = params.A, params.K, params.u, params.m
    y = (u * K / x) ** 2
    s = NeuronState(x, y)
    tr, det = trace_at(params, spec, s), det_at(params, spec, s)
    lam = 1.0 - A / y
    beta = (u * K) ** 2 / (2.0 * m) if m != 0 else math.inf
    if A == 0:
        return HopfVerdict("interaction", s, lam, beta, None, False, "A=0", trace=tr, det=det)
    if y == A:
        return HopfVerdict("interaction", s, lam, beta, None, False,
                           "y*=A impossible", trace=tr, det=det)
    window = hopf_window(lam, beta) if m > 0 else None
    if window is None:
        return HopfVerdict("interaction", s, lam, beta, None, False,
                           "discriminant-negative", trace=tr, det=det)
    p2 = window[1]
    root = math.sqrt(p2) if p2 > 0 else 0.0
    if y < A:
        tau_a = u * K / math.sqrt(A)
        empty = tau_a >= root
        if empty:
            log.debug("empty y*<A Hopf window: tau_A=%g >= sqrt(p2)=%g", tau_a, root)
        hopf = (not empty) and tau_a < x < root
        return HopfVerdict("interaction", s, lam, beta, p2, hopf, "y*<A window",
                           empty, tr, det)
    return HopfVerdict("interaction", s, lam, beta, p2, x > root, "y*>A tail",
                       trace=tr, det=det)


def hopf_verdict(params: ModelParams, spec: GainSpec = SIGMOID) -> list[HopfVerdict]:
    """Closed-form Hopf verdicts, one per fixed point.

    Fixed points on ``y = A`` never admit a Hopf bifurcation (``det < 0``
    whenever ``tr = 0`` there). For an interaction-branch point the verdict
    says whether ``det > 0`` would hold on the ``tr = 0`` locus; combine
    with :func:`hopf_crossing` to locate the actual crossing.
    """
    out = []
    for rep in solve_fixed_points(params, spec):
        if rep.branch == "allee":
            lam = 0.0
            beta = (params.u * params.K) ** 2 / (2.0 * params.m) if params.m else math.inf
            out.append(HopfVerdict("allee", rep.point, lam, beta, None, False,
                                   "y*=A impossible",
                                   trace=trace_at(params, spec, rep.point),
                                   det=det_at(params, spec, rep.point)))
    roots = interaction_branch_roots(params, spec)
    if len(roots) == 0:
        raise NoFixedPointError("interaction branch has no fixed point")
    out.extend(_verdict_at(params, spec, float(x)) for x in roots)
    return out


@dataclass(frozen=True)
class HopfCrossing:
    parameter: str
    value: float
    point: NeuronState
    eigenvalues: tuple
    verdict: HopfVerdict
    confirmed: bool  # eigenvalues form a pure-imaginary pair
    agrees: bool     # closed form and eigenvalue test agree


def _track_root(params, spec, x_ref):
    roots = interaction_branch_roots(params, spec)
    if len(roots) == 0:
        return None
    return float(roots[np.argmin(np.abs(roots - x_ref))])


def hopf_crossing(params: ModelParams, spec: GainSpec, vary: str, lo: float, hi: float,
                  x_ref: Optional[float] = None, tol: float = 1e-12,
                  re_tol: float = 1e-6) -> Optional[HopfCrossing]:
    """Bisect ``vary`` in ``[lo, hi]`` for a zero of the trace at the tracked
    interaction-branch fixed point and compare the eigenvalues there with the
    closed-form verdict.

    Returns ``None`` if the trace does not change sign over the bracket.
    Closed-form and eigenvalue disagreement is logged as a warning.
    """
    if vary not in SWEEPABLE:
        raise DomainError(f"cannot vary {vary!r}")
    if x_ref is None:
        x_ref = _track_root(params, spec, 0.5)
        if x_ref is None:
            return None

    def tr_of(val):
        p = params.with_(**{vary: val})
        x = _track_root(p, spec, x_ref)
        if x is None:
            return None, None
        s = NeuronState(x, (p.u * p.K / x) ** 2)
        return trace_at(p, spec, s), x

    t_lo, _ = tr_of(lo)
    t_hi, _ = tr_of(hi)
    if t_lo is None or t_hi is None or t_lo * t_hi > 0:
        return None
    a, b = lo, hi
    while b - a > tol * max(1.0, abs(a)):
        mid = 0.5 * (a + b)
        t_mid, _ = tr_of(mid)
        if t_mid is None:
            return None
        if (t_mid > 0) == (t_lo > 0):
            a, t_lo = mid, t_mid
        else:
            b = mid
    val = 0.5 * (a + b)
    p = params.with_(**{vary: val})
    x = _track_root(p, spec, x_ref)
    s = NeuronState(x, (p.u * p.K / x) ** 2)
    ev = eigenvalues_of(jacobian_at(p, spec, s))
    confirmed = abs(ev[0].real) < re_tol and ev[0].imag != 0
    verdict = _verdict_at(p, spec, x)
    agrees = verdict.hopf == confirmed
    if not agrees:
        log.warning("Hopf closed form (%s) disagrees with eigenvalues %s at %s=%.9g",
                    verdict.hopf, ev, vary, val)
    return HopfCrossing(vary, val, s, ev, verdict, confirmed, agrees)


# --------------------------------------------------------------------------
# region scan


@dataclass(frozen=True)
class RegionScan:
    xs: np.ndarray
    ys: np.ndarray
    tr: np.ndarray
    det: np.ndarray
    hopf_cells: np.ndarray  # (nx-1, ny-1) bool
    tb_cells: np.ndarray

    @property
    def tr_sign(self):
        return np.sign(self.tr)

    @property
    def det_sign(self):
        return np.sign(self.det)

    def cell_centres(self):
        cx = 0.5 * (self.xs[:-1] + self.xs[1:])
        cy = 0.5 * (self.ys[:-1] + self.ys[1:])
        return np.meshgrid(cx, cy, indexing="ij")

    def hopf_centroid(self) -> Optional[tuple[float, float]]:
        if not self.hopf_cells.any():
            return None
        cx, cy = self.cell_centres()
        return float(cx[self.hopf_cells].mean()), float(cy[self.hopf_cells].mean())

    def hopf_bounds(self) -> Optional[tuple[float, float, float, float]]:
        """``(x_min, x_max, y_min, y_max)`` of the Hopf cell centres."""
        if not self.hopf_cells.any():
            return None
        cx, cy = self.cell_centres()
        hx, hy = cx[self.hopf_cells], cy[self.hopf_cells]
        return float(hx.min()), float(hx.max()), float(hy.min()), float(hy.max())


def _corners(a):
    return np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])


def scan_region(params: ModelParams, spec: GainSpec = SIGMOID,
                x_range=(0.01, 1.0), y_range=(0.01, 3.0),
                resolution=(400, 400)) -> RegionScan:
    """Sign map of ``tr`` and ``det`` over a lattice in the (x, y) plane.

    A cell is a Hopf cell when ``det > 0`` at all four corners and ``tr``
    changes sign across it; a Takens-Bogdanov candidate when both change sign.
    """
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise DomainError("resolution must be >= 2 per axis")
    if not (x_range[1] > x_range[0] and y_range[1] > y_range[0]):
        raise DomainError("ranges must have positive length")
    if y_range[0] <= 0:
        raise DomainError("y range must be strictly positive")
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    tr, det = trace_det_grid(params, spec, X, Y)
    ts, ds = _corners(np.sign(tr)), _corners(np.sign(det))
    tr_change = (ts.min(0) < 0) & (ts.max(0) > 0)
    det_change = (ds.min(0) < 0) & (ds.max(0) > 0)
    hopf = tr_change & (ds.min(0) > 0)
    return RegionScan(xs, ys, tr, det, hopf, tr_change & det_change)


# --------------------------------------------------------------------------
# parameter sweeps


@dataclass(frozen=True)
class SweepEvent:
    parameter: str
    value: float
    kind: str  # saddle_node | transcritical | hopf
    before: list = field(default_factory=list)
    after: list = field(default_factory=list)


def _signature(params, spec):
    reps = solve_fixed_points(params, spec)
    inter = [r for r in reps if r.branch == "interaction"]
    allee = [r for r in reps if r.branch == "allee"]
    try:
        hopf = any(v.hopf for v in hopf_verdict(params, spec))
    except NoFixedPointError:
        hopf = False
    allee_stable = allee[0].is_stable if allee else None
    inter_stable = inter[0].is_stable if inter else None
    return {
        "reports": reps,
        "n_inter": len(inter),
        "allee_stable": allee_stable,
        "inter_stable": inter_stable,
        "hopf": hopf,
    }


def _swapped(a, b):
    if None in (a["allee_stable"], a["inter_stable"], b["allee_stable"], b["inter_stable"]):
        return False
    return (a["allee_stable"] != b["allee_stable"]
            and a["inter_stable"] != b["inter_stable"]
            and a["allee_stable"] != a["inter_stable"])


def _refine(params, spec, vary, lo, hi, same_as_lo, tol=SWEEP_TOL):
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if same_as_lo(_signature(params.with_(**{vary: mid}), spec)):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def parameter_sweep(params: ModelParams, spec: GainSpec, vary: str,
                    values: Sequence[float]) -> list[SweepEvent]:
    """Detect saddle-node, transcritical and Hopf-verdict changes between
    consecutive parameter values; event locations are bisected to 1e-6."""
    if vary not in SWEEPABLE:
        raise DomainError(f"cannot vary {vary!r}")
    values = [float(v) for v in values]
    if any(b < a for a, b in zip(values, values[1:])) and \
            any(b > a for a, b in zip(values, values[1:])):
        raise DomainError("sweep values must be monotone")
    sigs = [_signature(params.with_(**{vary: v}), spec) for v in values]
    events = []
    for (v0, s0), (v1, s1) in zip(zip(values, sigs), zip(values[1:], sigs[1:])):
        if s1["n_inter"] < s0["n_inter"] or s0["n_inter"] < s1["n_inter"]:
            n0 = s0["n_inter"]
            val = _refine(params, spec, vary, v0, v1, lambda s: s["n_inter"] == n0)
            events.append(SweepEvent(vary, val, "saddle_node", s0["reports"], s1["reports"]))
        if _swapped(s0, s1):
            st = s0["allee_stable"]
            val = _refine(params, spec, vary, v0, v1, lambda s: s["allee_stable"] == st)
            events.append(SweepEvent(vary, val, "transcritical", s0["reports"], s1["reports"]))
        if s0["hopf"] != s1["hopf"]:
            h = s0["hopf"]
            val = _refine(params, spec, vary, v0, v1, lambda s: s["hopf"] == h)
            events.append(SweepEvent(vary, val, "hopf", s0["reports"], s1["reports"]))
    return events
