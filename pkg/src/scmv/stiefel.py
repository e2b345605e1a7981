"""Feasible descent over a pair of Stiefel manifolds.

Each iteration builds the skew direction F = G T' - T G' per block and
searches along the Cayley curve

    Q(tau) = (I + tau/2 F)^{-1} (I - tau/2 F) T

which keeps T'T = I for every tau.  F has rank <= 2m, so it is kept as a
factor pair F = U V' with U = [G, T], V = [T, -G]; every inverse is then a
2m x 2m solve (Sherman-Morrison-Woodbury) rather than a d x d one.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, asdict
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import linalg

from .errors import NumericalError, ValidationError
from .objective import SubspacePair, orthogonality_residual

log = logging.getLogger(__name__)

REORTH_TOL = 1e-8
STEP_RULES = ("bb", "fixed")
TAU_MIN, TAU_MAX = 1e-20, 1e20


@dataclass(frozen=True)
class OptimizerConfig:
    epsilon: float = 1e-6
    mu: float = 0.5
    rho1: float = 1e-4
    rho2: float = 0.9
    maxiters: int = 500
    maxsteps: int = 30
    tau_init: float = 1.0
    # "bb": Barzilai-Borwein initial step with Armijo-Wolfe bracketing.
    # "fixed": start every search at tau_init and only shrink by mu.
    step_rule: str = "bb"
    # True stops on the Euclidean gradient norm instead of the F-norms
    euclidean_stop: bool = False

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValidationError("epsilon must be >= 0")
        if not 0 < self.mu < 1:
            raise ValidationError("mu must lie in (0, 1)")
        if not 0 < self.rho1 < self.rho2 < 1:
            raise ValidationError("need 0 < rho1 < rho2 < 1")
        if self.maxiters < 0 or self.maxsteps < 1:
            raise ValidationError("maxiters must be >= 0 and maxsteps >= 1")
        if not self.tau_init > 0:
            raise ValidationError("tau_init must be positive")
        if self.step_rule not in STEP_RULES:
            raise ValidationError(f"step_rule must be one of {STEP_RULES}")


class StopReason(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    LINE_SEARCH_EXHAUSTED = "line_search_exhausted"


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    slope0: float
    tau: float
    steps: int
    f1_norm: float
    f2_norm: float
    residual1: float
    residual2: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    initial_objective: float = float("nan")
    final_objective: float = float("nan")

    def __len__(self):
        return len(self.records)

    @property
    def objectives(self) -> list:
        return [self.initial_objective] + [r.objective for r in self.records]

    def dump(self, path):
        """One JSON record per line."""
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                d = asdict(r)
                d["abs_slope0"] = abs(d.pop("slope0"))
                fh.write(json.dumps(d) + "\n")


# --------------------------------------------------------------------------
# Geometry primitives


class SkewFactor(NamedTuple):
    """F = u @ v.T with u = [G, T], v = [T, -G]."""

    u: np.ndarray
    v: np.ndarray

    def dense(self) -> np.ndarray:
        # A - A' with A = G T' is skew bit-for-bit
        m = self.u.shape[1] // 2
        a = self.u[:, :m] @ self.u[:, m:].T
        return a - a.T

    def frob_sq(self) -> float:
        # ||U V'||^2 = tr((V'V)(U'U))
        return float(np.sum((self.v.T @ self.v) * (self.u.T @ self.u)))


def init_orthonormal(d: int, m: int, seed) -> np.ndarray:
    """Orthonormalized Gaussian d x m matrix (deterministic in ``seed``)."""
    if m > d:
        raise ValidationError(f"m={m} exceeds d={d}")
    rng = np.random.default_rng(seed)
    return orthonormalize(rng.standard_normal((d, m)))


def orthonormalize(a: np.ndarray) -> np.ndarray:
    """Thin QR with R's diagonal forced positive."""
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def skew_direction(g: np.ndarray, theta: np.ndarray) -> SkewFactor:
    if g.shape != theta.shape:
        raise ValidationError(f"shape mismatch: gradient {g.shape} vs theta {theta.shape}")
    return SkewFactor(np.hstack([g, theta]), np.hstack([theta, -g]))


def _small_system(f: SkewFactor, tau: float) -> np.ndarray:
    k = f.v.T @ f.u
    return np.eye(k.shape[0]) + 0.5 * tau * k


def _solve_small(a, b):
    try:
        lu = linalg.lu_factor(a, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("Cayley system is singular") from exc
    if np.any(np.diag(lu[0]) == 0.0):
        raise NumericalError("Cayley system is singular")
    return linalg.lu_solve(lu, b)


def cayley_step(theta: np.ndarray, f: SkewFactor, tau: float) -> np.ndarray:
    """Q(tau) = T - tau U (I + tau/2 V'U)^{-1} V'T."""
    if tau == 0:
        return theta.copy()
    return theta - tau * (f.u @ _solve_small(_small_system(f, tau), f.v.T @ theta))


def cayley_step_dense(theta: np.ndarray, f: SkewFactor, tau: float) -> np.ndarray:
    """Reference path that forms the d x d matrices; for tests only."""
    fd = f.dense()
    eye = np.eye(fd.shape[0])
    return np.linalg.solve(eye + 0.5 * tau * fd, (eye - 0.5 * tau * fd) @ theta)


def curve_derivative_at_zero(f1: SkewFactor, f2: SkewFactor) -> float:
    return -0.5 * f1.frob_sq() - 0.5 * f2.frob_sq()


def _apply_resolvent_f(f: SkewFactor, tau: float, w: np.ndarray) -> np.ndarray:
    # (I + tau/2 F)^{-1} F W = U (I + tau/2 V'U)^{-1} V'W
    return f.u @ _solve_small(_small_system(f, tau), f.v.T @ w)


def curve_slope(grads, thetas, qs, fs, tau) -> float:
    """Derivative of tau -> L(Q1(tau), Q2(tau)) given the gradients at Q(tau)."""
    total = 0.0
    for r, theta, q, f in zip(grads, thetas, qs, fs):
        dq = _apply_resolvent_f(f, tau, 0.5 * (theta + q))
        total -= float(np.vdot(r, dq))
    return total


def curve_derivative(problem, q1_tau, q2_tau, f1, f2, theta1, theta2, tau) -> float:
    """Curve slope at ``tau``; ``problem`` maps a SubspacePair to (value, g1, g2)."""
    _, r1, r2 = problem(SubspacePair(q1_tau, q2_tau))
    return curve_slope((r1, r2), (theta1, theta2), (q1_tau, q2_tau), (f1, f2), tau)


# --------------------------------------------------------------------------
# Line search and driver


class LineSearchResult(NamedTuple):
    tau: float
    q1: np.ndarray
    q2: np.ndarray
    steps: int
    value: float
    grads: tuple
    exhausted: bool


Problem = Callable[[SubspacePair], tuple]


def line_search(
    problem: Problem,
    thetas,
    fs,
    config: OptimizerConfig,
    value0: float,
    slope0: float,
    tau0: Optional[float] = None,
) -> LineSearchResult:
    """Search the Cayley curve for a step passing both Armijo-Wolfe tests.

    With ``step_rule="fixed"`` trial s (1-based) uses
    tau = tau0 * mu**(s-1).  With ``"bb"`` a failed sufficient-decrease test
    shrinks tau towards the last step known to be too short, and a failed
    curvature test grows it (by 1/mu until an upper bracket exists, then by
    bisection).  On exhaustion the best trial point seen is returned with
    ``exhausted=True``.
    """
    theta1, theta2 = thetas
    f1, f2 = fs
    tau = config.tau_init if tau0 is None else tau0
    lo, hi = 0.0, float("inf")
    best = None
    for s in range(1, config.maxsteps + 1):
        try:
            q1 = cayley_step(theta1, f1, tau)
            q2 = cayley_step(theta2, f2, tau)
        except NumericalError:
            hi = tau
            tau = lo + config.mu * (hi - lo) if config.step_rule == "bb" else tau * config.mu
            continue
        value, r1, r2 = problem(SubspacePair(q1, q2))
        slope = curve_slope((r1, r2), thetas, (q1, q2), fs, tau)
        armijo = value <= value0 + config.rho1 * tau * slope0
        wolfe = slope >= config.rho2 * slope0
        if armijo and wolfe:
            return LineSearchResult(tau, q1, q2, s, value, (r1, r2), False)
        if best is None or value < best.value:
            best = LineSearchResult(tau, q1, q2, s, value, (r1, r2), True)
        if config.step_rule == "fixed":
            tau *= config.mu
        elif not armijo:
            hi = tau
            tau = lo + config.mu * (hi - lo)
        else:
            lo = tau
            tau = tau / config.mu if hi == float("inf") else 0.5 * (lo + hi)
    if best is None:
        return LineSearchResult(0.0, theta1, theta2, config.maxsteps, value0, (None, None), True)
    return best._replace(steps=config.maxsteps)


def bb_step(d_theta, d_rgrad, iteration: int) -> Optional[float]:
    """Alternating Barzilai-Borwein step from successive iterates.

    ``d_theta`` and ``d_rgrad`` are the changes in the iterate and in the
    tangent gradient F @ theta, each a pair over the two blocks.
    """
    ss = sum(float(np.vdot(a, a)) for a in d_theta)
    sy = sum(float(np.vdot(a, b)) for a, b in zip(d_theta, d_rgrad))
    yy = sum(float(np.vdot(b, b)) for b in d_rgrad)
    if sy == 0 or yy == 0:
        return None
    tau = ss / abs(sy) if iteration % 2 else abs(sy) / yy
    if not np.isfinite(tau):
        return None
    return min(max(tau, TAU_MIN), TAU_MAX)


class OptimizeResult(NamedTuple):
    subspaces: SubspacePair
    trace: IterationTrace
    stop_reason: StopReason


def optimize(problem: Problem, init: SubspacePair, config: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    """Minimize ``problem`` over pairs of column-orthonormal matrices.

    ``problem(pair)`` returns ``(value, g1, g2)`` with Euclidean gradients.
    """
    theta1 = np.array(init.theta1, dtype=float)
    theta2 = np.array(init.theta2, dtype=float)
    trace = IterationTrace()
    try:
        return _run(problem, theta1, theta2, config, trace)
    except NumericalError as exc:
        exc.trace = trace
        raise


def _run(problem, theta1, theta2, config, trace):
    value, g1, g2 = problem(SubspacePair(theta1, theta2))
    trace.initial_objective = value
    reason = StopReason.MAX_ITERATIONS
    prev = None
    for it in range(1, config.maxiters + 1):
        f1 = skew_direction(g1, theta1)
        f2 = skew_direction(g2, theta2)
        slope0 = curve_derivative_at_zero(f1, f2)
        rgrad = (f1.u @ (f1.v.T @ theta1), f2.u @ (f2.v.T @ theta2))
        if config.euclidean_stop:
            measure = float(np.vdot(g1, g1) + np.vdot(g2, g2))
        else:
            measure = -slope0
        if measure <= config.epsilon:
            reason = StopReason.CONVERGED
            break
        tau0 = config.tau_init
        if config.step_rule == "bb" and prev is not None:
            d_theta = (theta1 - prev[0][0], theta2 - prev[0][1])
            d_rgrad = (rgrad[0] - prev[1][0], rgrad[1] - prev[1][1])
            tau0 = bb_step(d_theta, d_rgrad, it) or config.tau_init
        prev = ((theta1, theta2), rgrad)
        ls = line_search(problem, (theta1, theta2), (f1, f2), config, value, slope0, tau0)
        if ls.exhausted and not ls.value < value:
            reason = StopReason.LINE_SEARCH_EXHAUSTED
            break
        theta1, theta2 = ls.q1, ls.q2
        value = ls.value
        g1, g2 = ls.grads
        res1 = orthogonality_residual(theta1)
        res2 = orthogonality_residual(theta2)
        if res1 > REORTH_TOL or res2 > REORTH_TOL:
            if res1 > REORTH_TOL:
                theta1 = orthonormalize(theta1)
                res1 = orthogonality_residual(theta1)
            if res2 > REORTH_TOL:
                theta2 = orthonormalize(theta2)
                res2 = orthogonality_residual(theta2)
            value, g1, g2 = problem(SubspacePair(theta1, theta2))
        trace.records.append(
            IterationRecord(
                iteration=it,
                objective=value,
                slope0=slope0,
                tau=ls.tau,
                steps=ls.steps,
                f1_norm=f1.frob_sq() ** 0.5,
                f2_norm=f2.frob_sq() ** 0.5,
                residual1=res1,
                residual2=res2,
            )
        )
        if ls.exhausted:
            reason = StopReason.LINE_SEARCH_EXHAUSTED
            break
    trace.final_objective = value
    log.debug("optimize stopped after %d iterations: %s", len(trace), reason.value)
    return OptimizeResult(SubspacePair(theta1, theta2), trace, reason)
