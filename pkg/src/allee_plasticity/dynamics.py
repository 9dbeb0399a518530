"""Single-neuron Allee plasticity dynamics.

The reduced model tracks the post-synaptic rate ``x`` and the squared
weight norm ``y = ||W||^2``::

    tau_v dx/dt = -x + G(u*sqrt(y) + m*x)
    tau_w dy/dt = x * (u*sqrt(y) - x*y/K) * (1 - A/y)

Everything here is a pure function of immutable inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import expit

from .errors import DomainError, StepFailure

UNBOUNDED = math.inf

EXTINCTION_FLOOR = 1e-8
ROOT_TOL = 1e-12
SCAN_INTERVALS = 1000
X_MIN = 1e-6
MERGE_DIST = 1e-8
TOL_HYP = 1e-9

STABILITY_CLASSES = (
    "stable_node",
    "unstable_node",
    "saddle",
    "stable_focus",
    "unstable_focus",
    "center_candidate",
    "nonhyperbolic",
)


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of the reduced model.

    ``K = UNBOUNDED`` (``math.inf``) is the Hebbian limit and drops the
    ``x*y/K`` term exactly.
    """

    A: float
    K: float
    u: float
    m: float
    tau_v: float = 1.0
    tau_w: float = 1.0

    def __post_init__(self):
        for name in ("A", "K", "u", "m", "tau_v", "tau_w"):
            val = getattr(self, name)
            if math.isnan(val):
                raise DomainError(f"{name} is NaN")
        if self.A < 0:
            raise DomainError(f"A must be >= 0, got {self.A}")
        if not self.K > 0:
            raise DomainError(f"K must be > 0 (or UNBOUNDED), got {self.K}")
        if self.u < 0:
            raise DomainError(f"u must be >= 0, got {self.u}")
        if not math.isfinite(self.m):
            raise DomainError(f"m must be finite, got {self.m}")
        if not (self.tau_v > 0 and self.tau_w > 0):
            raise DomainError("tau_v and tau_w must be > 0")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.K)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class NeuronState:
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class GainSpec:
    """Gain nonlinearity: ``sigmoid`` or four-parameter ``soboleva``."""

    kind: str = "sigmoid"
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sigmoid", "soboleva"):
            raise DomainError(f"unknown gain kind {self.kind!r}")


SIGMOID = GainSpec()


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n, 2): columns x, y
    extinct_at: Optional[float] = None

    def __len__(self):
        return len(self.times)

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final(self) -> NeuronState:
        return NeuronState(float(self.states[-1, 0]), float(self.states[-1, 1]))


@dataclass(frozen=True)
class FixedPointReport:
    point: NeuronState
    branch: str  # "allee" or "interaction"
    jacobian: np.ndarray
    eigenvalues: tuple
    stability: str
    collision: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def is_stable(self) -> bool:
        return self.stability in ("stable_node", "stable_focus")


# --------------------------------------------------------------------------
# gain


def _soboleva_parts(spec: GainSpec, z):
    # all exponentials are taken relative to the log-denominator
    logden = np.logaddexp(spec.c * z, -spec.d * z)
    ea = np.exp(spec.a * z - logden)
    eb = np.exp(-spec.b * z - logden)
    ec = np.exp(spec.c * z - logden)
    ed = np.exp(-spec.d * z - logden)
    return ea, eb, ec, ed


def gain(spec: GainSpec, z):
    """Evaluate the gain function; vectorised over ``z``."""
    if spec.kind == "sigmoid":
        return expit(z)
    ea, eb, _, _ = _soboleva_parts(spec, z)
    return ea - eb


def gain_derivative(spec: GainSpec, z):
    """Analytic derivative of :func:`gain` with respect to its input."""
    if spec.kind == "sigmoid":
        # G(z)(1 - G(z)) written as G(z)G(-z): no cancellation in the tails
        return expit(z) * expit(-z)
    ea, eb, ec, ed = _soboleva_parts(spec, z)
    ratio = ea - eb
    dnum = spec.a * ea + spec.b * eb
    dden = spec.c * ec - spec.d * ed
    return dnum - ratio * dden


# --------------------------------------------------------------------------
# vector field


def _allee_factor(A, y):
    if A == 0:
        return 1.0
    return 1.0 - A / y


def _interaction(params: ModelParams, x, y, sy):
    if params.unbounded:
        return params.u * sy
    return params.u * sy - x * y / params.K


def _field(params: ModelParams, spec: GainSpec, x, y):
    sy = np.sqrt(y)
    dx = (-x + gain(spec, params.u * sy + params.m * x)) / params.tau_v
    dy = x * _interaction(params, x, y, sy) * _allee_factor(params.A, y) / params.tau_w
    return dx, dy


def _check_y(y):
    if not y > 0:
        raise DomainError(f"y must be > 0, got {y}")


def rhs(params: ModelParams, spec: GainSpec, s: NeuronState) -> tuple[float, float]:
    """Return ``(dx/dt, dy/dt)`` at state ``s``."""
    _check_y(s.y)
    dx, dy = _field(params, spec, s.x, s.y)
    return float(dx), float(dy)


def jacobian_at(params: ModelParams, spec: GainSpec, s: NeuronState) -> np.ndarray:
    """Analytic 2x2 Jacobian of :func:`rhs` at ``s``."""
    _check_y(s.y)
    x, y = float(s.x), float(s.y)
    A, K, u, m = params.A, params.K, params.u, params.m
    sy = math.sqrt(y)
    gp = float(gain_derivative(spec, u * sy + m * x))
    inv_k = 0.0 if params.unbounded else 1.0 / K
    fac = _allee_factor(A, y)
    dfac = 0.0 if A == 0 else A / (y * y)

    fx = -1.0 + m * gp
    fy = u / (2.0 * sy) * gp
    gx = (u * sy - 2.0 * x * y * inv_k) * fac
    gy = x * (u / (2.0 * sy) - x * inv_k) * fac + x * (u * sy - x * y * inv_k) * dfac
    return np.array([[fx / params.tau_v, fy / params.tau_v],
                     [gx / params.tau_w, gy / params.tau_w]])


# --------------------------------------------------------------------------
# integration


def _rk4_step(params, spec, x, y, dt, frozen):
    def f(xx, yy):
        yy = max(yy, EXTINCTION_FLOOR)
        dx, dy = _field(params, spec, xx, yy)
        return float(dx), (0.0 if frozen else float(dy))

    k1 = f(x, y)
    k2 = f(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1])
    k3 = f(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1])
    k4 = f(x + dt * k3[0], y + dt * k3[1])
    xn = x + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    yn = y + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return xn, yn


def integrate(params: ModelParams, spec: GainSpec, s0: NeuronState,
              t_end: float, dt: float = 0.01) -> Trajectory:
    """Fixed-step RK4 integration from ``s0`` to ``t_end``.

    ``y`` is floored at ``EXTINCTION_FLOOR``; once it reaches the floor the
    state is declared extinct and ``y`` is held there.
    """
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if not t_end >= 0:
        raise DomainError(f"t_end must be >= 0, got {t_end}")
    _check_y(s0.y)
    n = int(round(t_end / dt))
    times = np.arange(n + 1) * dt
    states = np.empty((n + 1, 2))
    x, y = float(s0.x), float(s0.y)
    states[0] = x, y
    extinct_at = None
    if y <= EXTINCTION_FLOOR:
        y = EXTINCTION_FLOOR
        extinct_at = 0.0
    for i in range(1, n + 1):
        x, y = _rk4_step(params, spec, x, y, dt, extinct_at is not None)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise StepFailure(f"non-finite state at t={times[i]:.6g}")
        if y <= EXTINCTION_FLOOR:
            y = EXTINCTION_FLOOR
            if extinct_at is None:
                extinct_at = float(times[i])
        states[i] = x, y
    return Trajectory(times, states, extinct_at)


# --------------------------------------------------------------------------
# fixed points


def _bisect_brackets(h, lo, hi, tol=ROOT_TOL):
    """Vectorised bisection of ``h`` over arrays of sign-change brackets."""
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    hlo = h(lo)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        hmid = h(mid)
        left = np.sign(hmid) == np.sign(hlo)
        lo = np.where(left, mid, lo)
        hlo = np.where(left, hmid, hlo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def scan_roots(h, a: float, b: float, n: int = SCAN_INTERVALS) -> np.ndarray:
    """All roots of a continuous ``h`` on ``[a, b]`` found by a uniform sign
    scan over ``n`` subintervals followed by bisection."""
    grid = np.linspace(a, b, n + 1)
    vals = h(grid)
    exact = grid[vals == 0.0]
    idx = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    roots = _bisect_brackets(h, grid[idx], grid[idx + 1]) if len(idx) else np.empty(0)
    return np.sort(np.concatenate([roots, exact]))


def allee_branch_roots(params: ModelParams, spec: GainSpec = SIGMOID) -> np.ndarray:
    """Roots of ``x = G(u*sqrt(A) + m*x)`` on (0, 1)."""
    base = params.u * math.sqrt(params.A)
    return scan_roots(lambda x: x - gain(spec, base + params.m * x), 0.0, 1.0)


def interaction_branch_roots(params: ModelParams, spec: GainSpec = SIGMOID) -> np.ndarray:
    """Roots of ``x = G(u^2 K / x + m*x)`` on (X_MIN, 1)."""
    if params.unbounded:
        return np.empty(0)
    c = params.u ** 2 * params.K
    return scan_roots(lambda x: x - gain(spec, c / x + params.m * x), X_MIN, 1.0)


def eigenvalues_of(jac: np.ndarray) -> tuple[complex, complex]:
    tr = jac[0, 0] + jac[1, 1]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        r = math.sqrt(disc)
        # larger-magnitude root first, smaller one via det to avoid cancellation
        big = 0.5 * (tr + math.copysign(r, tr)) if tr != 0 else 0.5 * r
        small = det / big if big != 0 else 0.5 * (tr - r)
        lo, hi = sorted((big, small))
        return complex(lo), complex(hi)
    im = 0.5 * math.sqrt(-disc)
    return complex(0.5 * tr, -im), complex(0.5 * tr, im)


def classify_stability(jac: np.ndarray, tol_hyp: float = TOL_HYP) -> tuple[str, tuple]:
    """Classify a planar fixed point from its Jacobian.

    Returns the class name and the eigenvalue pair.
    """
    ev = eigenvalues_of(np.asarray(jac, dtype=float))
    re = sorted(e.real for e in ev)
    complex_pair = ev[0].imag != 0
    if re[1] < -tol_hyp:
        return ("stable_focus" if complex_pair else "stable_node"), ev
    if re[0] > tol_hyp:
        return ("unstable_focus" if complex_pair else "unstable_node"), ev
    if re[0] < -tol_hyp and re[1] > tol_hyp:
        return "saddle", ev
    if complex_pair and abs(re[0]) <= tol_hyp:
        return "center_candidate", ev
    return "nonhyperbolic", ev


def fixed_point_report(params: ModelParams, spec: GainSpec, x: float, y: float,
                       branch: str, collision: bool = False) -> FixedPointReport:
    jac = jacobian_at(params, spec, NeuronState(x, y))
    stability, ev = classify_stability(jac)
    return FixedPointReport(NeuronState(float(x), float(y)), branch, jac, ev,
                            stability, collision)


def _merge(roots):
    out, flags = [], []
    for r in roots:
        if out and abs(r - out[-1]) < MERGE_DIST:
            flags[-1] = True
            continue
        out.append(float(r))
        flags.append(False)
    return out, flags


def solve_fixed_points(params: ModelParams, spec: GainSpec = SIGMOID) -> list[FixedPointReport]:
    """Locate all interior fixed points with Jacobian and stability class.

    Roots closer than ``MERGE_DIST`` are merged and flagged as a collision
    (saddle-node candidate); this also covers the point where the two
    branches coincide.
    """
    reports: list[FixedPointReport] = []
    if params.A > 0:
        xs, flags = _merge(allee_branch_roots(params, spec))
        for x, flag in zip(xs, flags):
            reports.append(fixed_point_report(params, spec, x, params.A, "allee", flag))
    if not params.unbounded:
        xs, flags = _merge(interaction_branch_roots(params, spec))
        uk = params.u * params.K
        for x, flag in zip(xs, flags):
            y = (uk / x) ** 2
            for i, other in enumerate(reports):
                if math.hypot(other.point.x - x, other.point.y - y) < MERGE_DIST:
                    reports[i] = replace(other, collision=True)
                    flag = True
            reports.append(fixed_point_report(params, spec, x, y, "interaction", flag))
    return reports


# --------------------------------------------------------------------------
# Theorem-style stability predicate for the threshold branch


@dataclass(frozen=True)
class Theorem1Result:
    stable_allee_point: bool
    case: str
    x_A: float
    tau_A: float
    v_A1: Optional[float] = None
    v_A2: Optional[float] = None


def theorem1_predicate(params: ModelParams, spec: GainSpec = SIGMOID) -> Theorem1Result:
    """Closed-form stability test for the fixed point on ``y = A``.

    ``stable_allee_point`` is true when both ``-1 + m G'(v_A) < 0`` (read off
    the sigmoid-output thresholds when ``m > 4``) and ``x_A > tau_A``.
    Uses the smallest root when the branch has several.
    """
    if params.A == 0:
        raise DomainError("predicate undefined for A = 0 (no threshold branch)")
    roots = allee_branch_roots(params, spec)
    if len(roots) == 0:
        raise DomainError("no root on the threshold branch")
    x_a = float(roots[0])
    tau_a = params.u * params.K / math.sqrt(params.A)
    above = x_a > tau_a and x_a < 1.0
    m = params.m
    if m < 4:
        return Theorem1Result(above, "m<4", x_a, tau_a)
    if m == 4:
        return Theorem1Result(False, "boundary", x_a, tau_a)
    r = math.sqrt(1.0 - 4.0 / m)
    v1, v2 = 0.5 * (1.0 - r), 0.5 * (1.0 + r)
    outside = (0.0 < x_a < v1) or (v2 < x_a < 1.0)
    return Theorem1Result(outside and above, "m>4", x_a, tau_a, v1, v2)
