"""SCMV training, two-view prediction and model persistence."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg

from .dataset import TwoViewDataset
from .errors import ModelFormatError, ValidationError
from .objective import (
    Hyperparams,
    ProblemData,
    SubspacePair,
    _factor,
    evaluate,
    orthogonality_residual,
    precompute,
)
from .stiefel import (
    IterationTrace,
    OptimizerConfig,
    StopReason,
    init_orthonormal,
    optimize,
    orthonormalize,
)
from .tfidf import FEATURIZATION_TAG, Vocabulary

MODEL_FORMAT = "scmv-model"
MODEL_VERSION = 1
LOAD_RESIDUAL_TOL = 1e-6


def sign(v: float) -> int:
    """Sign with sign(0) = +1."""
    return -1 if v < 0 else 1


@dataclass(frozen=True, eq=False)
class ScmvModel:
    theta1: np.ndarray
    theta2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    b1: float
    b2: float
    hp: Hyperparams
    featurization: Optional[str] = None
    vocab: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("theta1", "theta2", "w1", "w2"):
            a = np.array(getattr(self, name), dtype=float, copy=True)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "b1", float(self.b1))
        object.__setattr__(self, "b2", float(self.b2))
        m = self.hp.m
        if self.theta1.ndim != 2 or self.theta2.ndim != 2 or self.theta1.shape[1] != m or self.theta2.shape[1] != m:
            raise ValidationError("theta matrices must have m columns")
        if self.w1.shape != (m,) or self.w2.shape != (m,):
            raise ValidationError("weight vectors must have length m")
        params = (self.theta1, self.theta2, self.w1, self.w2, [self.b1, self.b2])
        if not all(np.all(np.isfinite(p)) for p in params):
            raise ValidationError("model parameters must be finite")

    @property
    def d1(self) -> int:
        return self.theta1.shape[0]

    @property
    def d2(self) -> int:
        return self.theta2.shape[0]

    def view(self, i):
        if i == 1:
            return self.theta1, self.w1, self.b1
        if i == 2:
            return self.theta2, self.w2, self.b2
        raise ValidationError(f"view must be 1 or 2, got {i}")

    def equals(self, other: "ScmvModel") -> bool:
        return (
            np.array_equal(self.theta1, other.theta1)
            and np.array_equal(self.theta2, other.theta2)
            and np.array_equal(self.w1, other.w1)
            and np.array_equal(self.w2, other.w2)
            and self.b1 == other.b1
            and self.b2 == other.b2
            and self.hp == other.hp
            and self.featurization == other.featurization
            and self.vocab == other.vocab
        )


def recover_weights(pd: ProblemData, s: SubspacePair):
    """Closed-form per-view (w, b) for fixed subspaces.

    Returns ``(w1, b1, w2, b2)``.
    """
    out = []
    for i, theta in ((1, s.theta1), (2, s.theta2)):
        mi, zi, _, alpha = pd.view(i)
        cf = _factor(theta, mi, alpha)
        w = linalg.cho_solve(cf, theta.T @ zi)
        mean = pd.x1_labeled_mean if i == 1 else pd.x2_labeled_mean
        # b = mean(y - X T w)
        b = pd.y_mean - float(mean @ (theta @ w))
        out.extend([w, b])
    return tuple(out)


class TrainResult(NamedTuple):
    model: ScmvModel
    trace: IterationTrace
    stop_reason: StopReason


def train(
    ds: TwoViewDataset,
    hp: Hyperparams = Hyperparams(),
    cfg: OptimizerConfig = OptimizerConfig(),
    seed: int = 0,
) -> TrainResult:
    pd = precompute(ds, hp)
    init = SubspacePair(init_orthonormal(ds.d1, hp.m, seed), init_orthonormal(ds.d2, hp.m, seed ^ 1))
    subspaces, trace, reason = optimize(lambda s: evaluate(pd, s), init, cfg)
    w1, b1, w2, b2 = recover_weights(pd, subspaces)
    model = ScmvModel(
        theta1=subspaces.theta1,
        theta2=subspaces.theta2,
        w1=w1,
        w2=w2,
        b1=b1,
        b2=b2,
        hp=hp,
        featurization=FEATURIZATION_TAG if ds.vocab is not None else None,
        vocab=ds.vocab,
    )
    return TrainResult(model, trace, reason)


def predict_view(model: ScmvModel, x, view: int) -> float:
    theta, w, b = model.view(view)
    x = np.asarray(x, dtype=float)
    if x.shape != (theta.shape[0],):
        raise ValidationError(f"view {view} expects {theta.shape[0]} features, got shape {x.shape}")
    return float(x @ (theta @ w)) + b


def predict_scores(model: ScmvModel, x, view: int) -> np.ndarray:
    """Vectorized :func:`predict_view` over the rows of ``x``."""
    theta, w, b = model.view(view)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != theta.shape[0]:
        raise ValidationError(f"view {view} expects {theta.shape[0]} features, got shape {x.shape}")
    return x @ (theta @ w) + b


class Prediction(NamedTuple):
    label: int
    f1: float
    f2: float
    view: int


def combine(f1: float, f2: float) -> Prediction:
    """Take the label of the more confident view; ties go to view 2."""
    if abs(f1) > abs(f2):
        return Prediction(sign(f1), f1, f2, 1)
    return Prediction(sign(f2), f1, f2, 2)


def predict(model: ScmvModel, x1, x2) -> Prediction:
    return combine(predict_view(model, x1, 1), predict_view(model, x2, 2))


def predict_batch(model: ScmvModel, x1, x2) -> list:
    f1 = predict_scores(model, x1, 1)
    f2 = predict_scores(model, x2, 2)
    if f1.shape != f2.shape:
        raise ValidationError("views have different row counts")
    return [combine(float(a), float(b)) for a, b in zip(f1, f2)]


def accuracy(model: ScmvModel, x1, x2, y) -> float:
    preds = predict_batch(model, x1, x2)
    if not preds:
        raise ValidationError("no labeled rows to evaluate")
    return sum(p.label == int(t) for p, t in zip(preds, y)) / len(preds)


# --------------------------------------------------------------------------
# Persistence


def model_to_dict(model: ScmvModel) -> dict:
    hp = model.hp
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "d1": model.d1,
        "d2": model.d2,
        "m": hp.m,
        "hyperparams": {"alpha1": hp.alpha1, "alpha2": hp.alpha2, "gamma": hp.gamma, "m": hp.m},
        "featurization": model.featurization,
        "vocab": None if model.vocab is None else [v.to_dict() for v in model.vocab],
        "theta1": model.theta1.tolist(),
        "theta2": model.theta2.tolist(),
        "w1": model.w1.tolist(),
        "w2": model.w2.tolist(),
        "b1": model.b1,
        "b2": model.b2,
    }


def dumps_model(model: ScmvModel) -> str:
    # json writes floats with repr(), the shortest round-trip form
    return json.dumps(model_to_dict(model), indent=1, allow_nan=False) + "\n"


def save_model(model: ScmvModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def model_from_dict(doc: dict, strict: bool = False) -> ScmvModel:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not an {MODEL_FORMAT} document")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version: found {version!r}, expected {MODEL_VERSION}")
    try:
        hp = Hyperparams(**doc["hyperparams"])
        theta1 = np.array(doc["theta1"], dtype=float)
        theta2 = np.array(doc["theta2"], dtype=float)
        d1, d2, m = int(doc["d1"]), int(doc["d2"]), int(doc["m"])
        vocab = doc.get("vocab")
        vocab = None if vocab is None else tuple(Vocabulary.from_dict(v) for v in vocab)
        fields = dict(
            w1=np.array(doc["w1"], dtype=float),
            w2=np.array(doc["w2"], dtype=float),
            b1=float(doc["b1"]),
            b2=float(doc["b2"]),
            hp=hp,
            featurization=doc.get("featurization"),
            vocab=vocab,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    if theta1.shape != (d1, m) or theta2.shape != (d2, m) or hp.m != m:
        raise ModelFormatError("matrix shapes disagree with header d1/d2/m")
    for name, theta in (("theta1", theta1), ("theta2", theta2)):
        if not np.all(np.isfinite(theta)):
            raise ModelFormatError(f"{name} has non-finite entries")
        res = orthogonality_residual(theta)
        if res > LOAD_RESIDUAL_TOL:
            if strict:
                raise ModelFormatError(f"{name} is not orthonormal (residual {res:.3g})")
            warnings.warn(f"{name} orthonormality residual {res:.3g}; re-orthonormalizing", stacklevel=3)
            if name == "theta1":
                theta1 = orthonormalize(theta1)
            else:
                theta2 = orthonormalize(theta2)
    try:
        return ScmvModel(theta1=theta1, theta2=theta2, **fields)
    except ValidationError as exc:
        raise ModelFormatError(str(exc)) from exc


def load_model(path, strict: bool = False) -> ScmvModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"malformed model file: {exc}") from exc
    return model_from_dict(doc, strict=strict)
