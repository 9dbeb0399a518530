"""Layered hetero/auto-associative memory trained with Hebbian, Oja, Allee,
STDP and eligibility-trace Allee rules.

Weights are a dense ``(L*N_u, L*N_v)`` matrix, layer-major: pre-neuron ``i``
of layer ``k`` is row ``k*N_u + i`` and post-neuron ``j`` of layer ``l`` is
column ``l*N_v + j``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError, ShapeMismatch

INIT_SCALE = 0.01
W_MAX = 10.0
NORM_FLOOR = 1e-6

STDP_KINDS = ("stdp_pair", "stdp_weight", "stdp_addmul", "stdp_power", "stdp_continuous")
RULE_KINDS = ("hebbian", "oja", "allee") + STDP_KINDS + ("allee_temporal",)


@dataclass(frozen=True)
class NetworkShape:
    L: int
    N_u: int
    N_v: int

    def __post_init__(self):
        if min(self.L, self.N_u, self.N_v) < 1:
            raise DomainError("L, N_u and N_v must all be >= 1")

    @property
    def n_pre(self) -> int:
        return self.L * self.N_u

    @property
    def n_post(self) -> int:
        return self.L * self.N_v


@dataclass(frozen=True)
class WeightTensor:
    shape: NetworkShape
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.shape.n_pre, self.shape.n_post):
            raise ShapeMismatch(
                f"entries {self.entries.shape} do not match "
                f"{(self.shape.n_pre, self.shape.n_post)}")

    def block(self, k: int, l: int) -> np.ndarray:
        """Weights from pre-layer ``k`` to post-layer ``l``."""
        nu, nv = self.shape.N_u, self.shape.N_v
        return self.entries[k * nu:(k + 1) * nu, l * nv:(l + 1) * nv]


@dataclass(frozen=True)
class Pattern:
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class LearningRule:
    """A plasticity rule and its constants.

    ``hebbian`` is ``A = 0, K = inf``; ``oja`` is ``A = 0`` with finite
    ``K``; ``allee`` adds the ``1 - A/S_j`` threshold factor. STDP kinds use
    ``B_plus, B_minus, tau_plus, tau_minus, gamma, B``; ``allee_temporal``
    adds eligibility traces scaled by ``kappa`` and ``lambda_trace``.
    """

    kind: str
    A: float = 0.0
    K: float = math.inf
    eta: float = 0.01
    B_plus: float = 0.01
    B_minus: float = 0.012
    tau_plus: float = 20.0
    tau_minus: float = 20.0
    gamma: float = 0.7
    B: float = 0.01
    delta_t: float = 0.1
    kappa: float = 0.0
    lambda_trace: float = 0.0
    tau1: float = 0.6
    tau2: float = 0.6

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise DomainError(f"unknown rule kind {self.kind!r}")
        if self.kind == "hebbian" and (self.A != 0 or not math.isinf(self.K)):
            raise DomainError("hebbian rule requires A = 0 and K unbounded")
        if self.kind == "oja" and self.A != 0:
            raise DomainError("oja rule requires A = 0")
        if self.A < 0 or not self.K > 0:
            raise DomainError("need A >= 0 and K > 0")
        if not self.eta >= 0:
            raise DomainError("eta must be >= 0")
        if self.kind == "stdp_power" and not 0 < self.gamma <= 1:
            raise DomainError("gamma must lie in (0, 1]")

    def with_(self, **changes) -> "LearningRule":
        return replace(self, **changes)


@dataclass(frozen=True)
class RetrievalResult:
    retrieved_v: np.ndarray
    iterations: int
    converged: bool
    accuracy: float


def sign(a: np.ndarray) -> np.ndarray:
    """+1 where ``a > 0``, -1 otherwise (zero maps to -1)."""
    return np.where(a > 0, 1.0, -1.0)


def _entries(W) -> np.ndarray:
    return W.entries if isinstance(W, WeightTensor) else np.asarray(W, dtype=float)


# --------------------------------------------------------------------------
# patterns and noise


def generate_patterns(shape: NetworkShape, P: int, seed, auto: bool = False) -> list[Pattern]:
    """``P`` uniform random +-1 pattern pairs. ``auto`` sets ``v = u``."""
    if P < 1:
        raise DomainError("P must be >= 1")
    if auto and shape.N_u != shape.N_v:
        raise ShapeMismatch("auto-associative patterns need N_u == N_v")
    rng = np.random.default_rng(seed)
    U = rng.choice([-1.0, 1.0], size=(P, shape.n_pre))
    V = U.copy() if auto else rng.choice([-1.0, 1.0], size=(P, shape.n_post))
    return [Pattern(u, v) for u, v in zip(U, V)]


def corrupt(u: np.ndarray, sigma: float, seed) -> np.ndarray:
    """Flip exactly ``round(sigma * len(u))`` entries chosen without
    replacement."""
    if not 0 <= sigma <= 1:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    u = np.array(u, dtype=float)
    k = int(math.floor(sigma * len(u) + 0.5))
    idx = np.random.default_rng(seed).choice(len(u), size=k, replace=False)
    u[idx] = -u[idx]
    return u


# --------------------------------------------------------------------------
# plasticity


def stdp_increment(rule: LearningRule, dt, w=None):
    """Pairwise STDP window for spike-time differences ``dt``.

    ``w`` (weights clipped to [0, 1]) enters the weight-dependent and
    power-law forms.
    """
    dt = np.asarray(dt, dtype=float)
    kind = rule.kind
    if kind == "stdp_continuous":
        return rule.B * dt / rule.tau_plus ** 2 * np.exp(-np.abs(dt) / rule.tau_plus)
    pot = rule.B_plus * np.exp(-dt / rule.tau_plus)
    dep = -rule.B_minus * np.exp(dt / rule.tau_minus)
    if kind != "stdp_pair":
        w = np.zeros_like(dt) if w is None else np.clip(w, 0.0, 1.0)
        if kind in ("stdp_weight", "stdp_addmul"):
            pot = pot * (1.0 - w)
            dep = dep * w
        elif kind == "stdp_power":
            pot = pot * (1.0 - w) ** rule.gamma
            dep = dep * w ** rule.gamma
        else:
            raise DomainError(f"{kind!r} is not an STDP rule")
    return np.where(dt > 0, pot, np.where(dt < 0, dep, 0.0))


def _check_pattern(W, pattern):
    n_pre, n_post = W.shape
    if pattern.u.shape != (n_pre,) or pattern.v.shape != (n_post,):
        raise ShapeMismatch(
            f"pattern sizes {pattern.u.shape}, {pattern.v.shape} do not fit W {W.shape}")


def _allee_increment(rule, W, u, v):
    if math.isinf(rule.K):
        dw = np.outer(u, v)
    else:
        dw = np.outer(u, v) - W * (v * v / rule.K)[None, :]
    if rule.A != 0:
        S = np.maximum((W * W).sum(axis=0), NORM_FLOOR)
        dw = dw * (1.0 - rule.A / S)[None, :]
    return dw


def delta_w(rule: LearningRule, W, pattern: Pattern) -> np.ndarray:
    """Weight increment (before the learning rate) for one pattern."""
    W = _entries(W)
    _check_pattern(W, pattern)
    u, v = pattern.u, pattern.v
    if rule.kind == "hebbian":
        return np.outer(u, v)
    if rule.kind in ("oja", "allee"):
        return _allee_increment(rule, W, u, v)
    if rule.kind == "allee_temporal":
        return delta_w_temporal(rule, W, pattern)
    return stdp_increment(rule, rule.delta_t * np.outer(u, v), W)


def delta_w_temporal(rule: LearningRule, W, pattern: Pattern) -> np.ndarray:
    """Allee increment plus eligibility traces.

    Potentiating pairs (``dt > 0``) gain ``kappa * exp(-dt/tau1)``,
    depressing pairs gain ``lambda_trace * exp(-dt/tau2)``.
    """
    if rule.kind != "allee_temporal":
        raise DomainError(f"expected an allee_temporal rule, got {rule.kind!r}")
    W = _entries(W)
    _check_pattern(W, pattern)
    dw = _allee_increment(rule, W, pattern.u, pattern.v)
    dt = rule.delta_t * np.outer(pattern.u, pattern.v)
    if rule.kappa != 0:
        dw = dw + np.where(dt > 0, rule.kappa * np.exp(-dt / rule.tau1), 0.0)
    if rule.lambda_trace != 0:
        dw = dw + np.where(dt < 0, rule.lambda_trace * np.exp(-dt / rule.tau2), 0.0)
    return dw


def init_weights(shape: NetworkShape, seed) -> WeightTensor:
    rng = np.random.default_rng(seed)
    return WeightTensor(shape, rng.uniform(-INIT_SCALE, INIT_SCALE,
                                           size=(shape.n_pre, shape.n_post)))


def train(shape: NetworkShape, rule: LearningRule, patterns: Sequence[Pattern],
          seed, epochs: int = 1, w_max: Optional[float] = W_MAX) -> WeightTensor:
    """Present each pattern in order for ``epochs`` passes:
    ``W += eta * dW``, then clip to ``[-w_max, w_max]``."""
    W = init_weights(shape, seed).entries
    for _ in range(epochs):
        for pat in patterns:
            W = W + rule.eta * delta_w(rule, W, pat)
            if w_max is not None:
                np.clip(W, -w_max, w_max, out=W)
    return WeightTensor(shape, W)


# --------------------------------------------------------------------------
# retrieval


def retrieve(W, u_noisy: np.ndarray, v_original: Optional[np.ndarray] = None,
             max_iters: int = 50) -> RetrievalResult:
    """Alternate ``v = sign(u W)`` and ``u = sign(W v)`` until ``v`` repeats."""
    W = _entries(W)
    u = np.asarray(u_noisy, dtype=float)
    if u.shape != (W.shape[0],):
        raise ShapeMismatch(f"cue of length {u.shape} does not fit W {W.shape}")
    if v_original is not None and np.shape(v_original) != (W.shape[1],):
        raise ShapeMismatch("original v does not fit W")
    v = sign(u @ W)
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        u = sign(W @ v)
        v_next = sign(u @ W)
        if np.array_equal(v_next, v):
            converged = True
            break
        v = v_next
    acc = float(np.mean(v == v_original)) if v_original is not None else math.nan
    return RetrievalResult(v, it, converged, acc)


# --------------------------------------------------------------------------
# benchmark


@dataclass(frozen=True)
class NoiseSweepTable:
    rules: list
    sigmas: np.ndarray
    seeds: list
    accuracy: np.ndarray  # (rule, sigma, seed, pattern)

    @property
    def mean(self) -> np.ndarray:
        return self.accuracy.mean(axis=(2, 3))

    @property
    def sd(self) -> np.ndarray:
        return self.accuracy.std(axis=(2, 3))

    @property
    def seed_means(self) -> np.ndarray:
        return self.accuracy.mean(axis=3)

    def row(self, rule: str) -> np.ndarray:
        return self.mean[self.rules.index(rule)]


def _threads() -> int:
    env = os.environ.get("ALLEE_PLASTICITY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _one_seed(shape, rules, P, sigmas, seed, epochs, max_iters, auto):
    patterns = generate_patterns(shape, P, [seed, 0], auto=auto)
    out = np.empty((len(rules), len(sigmas), P))
    cues = [[corrupt(p.u, s, [seed, 2, mu, k]) for mu, p in enumerate(patterns)]
            for k, s in enumerate(sigmas)]
    for r, rule in enumerate(rules):
        # same initial weights for every rule: comparisons are paired
        W = train(shape, rule, patterns, [seed, 1], epochs=epochs).entries
        for k in range(len(sigmas)):
            for mu, p in enumerate(patterns):
                out[r, k, mu] = retrieve(W, cues[k][mu], p.v, max_iters).accuracy
    return out


def noise_sweep(shape: NetworkShape, rules: Mapping[str, LearningRule], P: int,
                sigmas: Sequence[float], seeds: Sequence[int], epochs: int = 1,
                max_iters: int = 50, auto: bool = False,
                workers: Optional[int] = None) -> NoiseSweepTable:
    """Accuracy of every rule at every noise level, for every seed and pattern.

    All randomness is derived from the seed, so results do not depend on
    ``workers``.
    """
    if not rules or len(sigmas) == 0 or len(seeds) == 0:
        raise DomainError("rules, sigmas and seeds must be non-empty")
    for s in sigmas:
        if not 0 <= s <= 1:
            raise DomainError(f"sigma {s} outside [0, 1]")
    names = list(rules)
    rule_list = [rules[n] for n in names]
    sigmas = np.asarray(sigmas, dtype=float)
    workers = workers or _threads()

    def job(seed):
        return _one_seed(shape, rule_list, P, sigmas, int(seed), epochs, max_iters, auto)

    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(job, seeds))
    else:
        per_seed = [job(s) for s in seeds]
    acc = np.stack(per_seed, axis=2)
    return NoiseSweepTable(names, sigmas, [int(s) for s in seeds], acc)


# --------------------------------------------------------------------------
# reference configurations


def fig7_setup():
    """Single-rule retrieval setup: 250 post neurons, 150 stored pairs."""
    shape = NetworkShape(L=5, N_u=50, N_v=50)
    rule = LearningRule("allee", A=2.0, K=1.0, eta=0.01)
    return shape, rule, 150, 0.3


def comparison_rules(temporal: bool = False, stdp_eta: float = 0.01) -> dict[str, LearningRule]:
    """Rule set for the multi-rule noise comparison.

    The learning rate multiplies every rule. ``stdp_eta`` overrides it for
    the STDP windows, which already carry amplitudes ``B_plus``, ``B_minus``
    and ``B``.
    """
    stdp = dict(B_plus=0.01, B_minus=0.012, tau_plus=20.0, tau_minus=20.0,
                gamma=0.7, B=0.01, delta_t=0.1, eta=stdp_eta)
    rules = {
        "hebbian": LearningRule("hebbian", eta=0.01),
        "oja": LearningRule("oja", K=5.0, eta=0.01),
        "allee": LearningRule("allee", A=1.0, K=5.0, eta=0.01),
    }
    for kind in STDP_KINDS:
        rules[kind] = LearningRule(kind, **stdp)
    if temporal:
        rules["allee_temporal"] = LearningRule(
            "allee_temporal", A=1.0, K=5.0, eta=0.01, delta_t=0.1,
            kappa=0.1, lambda_trace=0.05, tau1=0.6, tau2=0.6)
    return rules


COMPARISON_SHAPE = NetworkShape(L=5, N_u=25, N_v=25)
COMPARISON_P = 10
COMPARISON_SIGMAS = tuple(round(0.05 * i, 2) for i in range(11))
