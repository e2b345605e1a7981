"""Reduced SCMV objective over the two projection matrices.

With the per-view weights and biases eliminated in closed form, training
minimizes

    L(T1, T2) = gamma * ||X1 T1 - X2 T2||_F^2 + 2 y'Hy
                - sum_i z_i' T_i (T_i' M_i T_i + alpha_i I)^{-1} T_i' z_i

where H centers the labeled rows, M_i = X_i' H X_i and z_i = X_i' H y over
the labeled prefix.  H is never formed; centering is a column-mean
subtraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .dataset import TwoViewDataset
from .errors import NumericalError, ValidationError


@dataclass(frozen=True)
class Hyperparams:
    alpha1: float = 0.1
    alpha2: float = 0.1
    gamma: float = 1.0 / 6.0
    m: int = 10

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ValidationError("alpha1 and alpha2 must be positive")
        if not self.gamma >= 0:
            raise ValidationError("gamma must be non-negative")
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError("m must be a positive integer")

    def alpha(self, view: int) -> float:
        return self.alpha1 if view == 1 else self.alpha2


@dataclass(frozen=True, eq=False)
class ProblemData:
    m1: np.ndarray
    m2: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    const_term: float
    hp: Hyperparams
    # kept for weight recovery (bias needs uncentered labeled rows)
    x1_labeled_mean: np.ndarray
    x2_labeled_mean: np.ndarray
    y_mean: float

    def view(self, i):
        """(M_i, z_i, X_i, alpha_i) for view 1 or 2."""
        if i == 1:
            return self.m1, self.z1, self.x1, self.hp.alpha1
        return self.m2, self.z2, self.x2, self.hp.alpha2


@dataclass(frozen=True, eq=False)
class SubspacePair:
    theta1: np.ndarray
    theta2: np.ndarray

    def __iter__(self):
        return iter((self.theta1, self.theta2))

    def residuals(self) -> tuple[float, float]:
        return orthogonality_residual(self.theta1), orthogonality_residual(self.theta2)


def orthogonality_residual(theta: np.ndarray) -> float:
    """||T'T - I||_F."""
    m = theta.shape[1]
    return float(np.linalg.norm(theta.T @ theta - np.eye(m)))


def precompute(ds: TwoViewDataset, hp: Hyperparams) -> ProblemData:
    if ds.l < 1:
        raise ValidationError("need at least one labeled row")
    if hp.m > min(ds.d1, ds.d2):
        raise ValidationError(f"m={hp.m} exceeds min(d1, d2)={min(ds.d1, ds.d2)}")
    if not (np.all(np.isfinite(ds.x1)) and np.all(np.isfinite(ds.x2)) and np.all(np.isfinite(ds.y))):
        raise ValidationError("non-finite input")
    y = ds.y
    yc = y - y.mean()
    out = {}
    for i, xl in ((1, ds.x1_labeled), (2, ds.x2_labeled)):
        mu = xl.mean(axis=0)
        xc = xl - mu
        mi = xc.T @ xc
        out[f"m{i}"] = 0.5 * (mi + mi.T)
        out[f"z{i}"] = xc.T @ yc
        out[f"x{i}_labeled_mean"] = mu
    return ProblemData(
        x1=ds.x1,
        x2=ds.x2,
        const_term=float(2.0 * (yc @ yc)),
        hp=hp,
        y_mean=float(y.mean()),
        **out,
    )


def _factor(theta, m, alpha):
    inner = theta.T @ m @ theta
    inner[np.diag_indices_from(inner)] += alpha
    try:
        return linalg.cho_factor(inner, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"inner {inner.shape[0]}x{inner.shape[0]} system is not positive definite") from exc


class Evaluation(NamedTuple):
    value: float
    g1: np.ndarray | None
    g2: np.ndarray | None


def evaluate(pd: ProblemData, s: SubspacePair, with_grad: bool = True) -> Evaluation:
    """Objective value and (optionally) both gradient blocks in one pass."""
    t1, t2 = s.theta1, s.theta2
    p1 = pd.x1 @ t1
    p2 = pd.x2 @ t2
    diff = p1 - p2
    value = pd.hp.gamma * float(np.vdot(diff, diff)) + pd.const_term
    grads = []
    for i, theta in ((1, t1), (2, t2)):
        mi, zi, xi, alpha = pd.view(i)
        cf = _factor(theta, mi, alpha)
        a = theta.T @ zi
        sa = linalg.cho_solve(cf, a)
        value -= float(a @ sa)
        if with_grad:
            sign = 1.0 if i == 1 else -1.0
            g = 2.0 * pd.hp.gamma * sign * (xi.T @ diff)
            g -= 2.0 * np.outer(zi, sa)
            g += 2.0 * np.outer(mi @ (theta @ sa), sa)
            grads.append(g)
    if not np.isfinite(value):
        raise NumericalError("objective is not finite")
    if with_grad:
        if not (np.all(np.isfinite(grads[0])) and np.all(np.isfinite(grads[1]))):
            raise NumericalError("gradient is not finite")
        return Evaluation(value, grads[0], grads[1])
    return Evaluation(value, None, None)


def objective(pd: ProblemData, s: SubspacePair) -> float:
    return evaluate(pd, s, with_grad=False).value


def gradient(pd: ProblemData, s: SubspacePair) -> tuple[np.ndarray, np.ndarray]:
    ev = evaluate(pd, s)
    return ev.g1, ev.g2


def coreg_term(pd: ProblemData, s: SubspacePair) -> float:
    """||X1 T1 - X2 T2||_F^2 (unweighted)."""
    diff = pd.x1 @ s.theta1 - pd.x2 @ s.theta2
    return float(np.vdot(diff, diff))
