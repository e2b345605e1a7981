import json
import warnings

import numpy as np
import pytest

from scmv.baselines import fit_ridge
from scmv.dataset import SynthConfig, TwoViewDataset, synth_generate, synth_parts
from scmv.errors import ModelFormatError, ValidationError
from scmv.model import (
    ScmvModel,
    combine,
    dumps_model,
    load_model,
    predict,
    predict_batch,
    predict_view,
    recover_weights,
    save_model,
    train,
)
from scmv.objective import Hyperparams, SubspacePair, objective, precompute
from scmv.stiefel import OptimizerConfig, init_orthonormal

from .conftest import random_instance
from .oracles import central_diff, full_objective


def _toy_model(w1=(0.5, -1.0), w2=(2.0, 0.25), b1=0.1, b2=-0.3):
    return ScmvModel(
        theta1=init_orthonormal(4, 2, 0),
        theta2=init_orthonormal(3, 2, 1),
        w1=np.array(w1),
        w2=np.array(w2),
        b1=b1,
        b2=b2,
        hp=Hyperparams(m=2),
    )


# --- weight recovery


def test_recover_constant_labels():
    ds, hp, s = random_instance(0)
    ds = TwoViewDataset(ds.x1, ds.x2, np.full(4, -1.0))
    w1, b1, w2, b2 = recover_weights(precompute(ds, hp), s)
    assert not w1.any() and not w2.any()
    assert b1 == b2 == -1.0


@pytest.mark.parametrize("seed", range(20))
def test_recovered_weights_first_order_optimal(seed):
    ds, hp, s = random_instance(seed)
    w1, b1, w2, b2 = recover_weights(precompute(ds, hp), s)
    params = np.concatenate([w1, [b1], w2, [b2]])

    def f(p):
        return full_objective(ds, hp, s, p[0:2], p[2], p[3:5], p[5])

    assert np.linalg.norm(central_diff(f, params)) <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_full_and_reduced_objectives_agree(seed):
    ds, hp, s = random_instance(seed)
    pd = precompute(ds, hp)
    w1, b1, w2, b2 = recover_weights(pd, s)
    assert full_objective(ds, hp, s, w1, b1, w2, b2) == pytest.approx(objective(pd, s), rel=1e-10)


# --- training


def test_train_deterministic(tmp_path):
    ds = synth_generate(SynthConfig(n=60, l=20, d1=6, d2=5, m_true=2, seed=1))
    cfg = OptimizerConfig(maxiters=40)
    a = train(ds, Hyperparams(m=2), cfg, seed=3).model
    b = train(ds, Hyperparams(m=2), cfg, seed=3).model
    assert dumps_model(a) == dumps_model(b)


def test_train_gamma_zero_decouples():
    ds, _, _ = random_instance(5, n=30, l=12, d1=6, d2=5, m=2)
    hp = Hyperparams(m=2, gamma=0.0)
    cfg = OptimizerConfig(epsilon=1e-16, maxiters=3000)
    ref = train(ds, hp, cfg, seed=2).model
    blank2 = TwoViewDataset(ds.x1, np.zeros_like(ds.x2), ds.y)
    alt = train(blank2, hp, cfg, seed=2).model
    pd = precompute(ds, hp)
    # with gamma = 0 the view-2 block is a fixed offset, so this compares view 1 alone
    v_ref = objective(pd, SubspacePair(ref.theta1, ref.theta2))
    v_alt = objective(pd, SubspacePair(alt.theta1, ref.theta2))
    assert v_alt == pytest.approx(v_ref, abs=1e-8)
    # w is only defined up to a rotation inside the subspace; T w is not
    np.testing.assert_allclose(alt.theta1 @ alt.w1, ref.theta1 @ ref.w1, atol=1e-6)
    assert alt.b1 == pytest.approx(ref.b1, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_separable_training_accuracy(seed):
    # Least squares is not max-margin: even a ridge fit on the true latent
    # factors can misclassify a few separable points.  That fit is the ceiling.
    parts = synth_parts(SynthConfig(n=80, l=80, d1=6, d2=6, m_true=3, noise_sigma=0.0, seed=seed))
    ds = parts.dataset
    w, b = fit_ridge(parts.latent, ds.y, 0.1)
    ceiling = np.mean(np.where(parts.latent @ w + b < 0, -1, 1) == ds.y)
    model = train(ds, Hyperparams(m=3), seed=seed).model
    for view, x in ((1, ds.x1), (2, ds.x2)):
        scores = np.array([predict_view(model, row, view) for row in x])
        acc = np.mean(np.where(scores < 0, -1, 1) == ds.y)
        assert acc >= min(ceiling, 0.95)


# --- prediction


def test_predict_view_bias_only_cases():
    m = _toy_model(w1=(0.0, 0.0))
    assert predict_view(m, np.array([3.0, -1.0, 2.0, 5.0]), 1) == m.b1
    m = _toy_model()
    assert predict_view(m, np.zeros(3), 2) == m.b2


def test_predict_view_linear():
    m = _toy_model()
    x = np.array([0.3, -1.2, 0.8, 2.0])
    a = predict_view(m, x, 1) - m.b1
    b = predict_view(m, 2 * x, 1) - m.b1
    assert b == pytest.approx(2 * a, abs=1e-12)


def test_predict_view_dimension_mismatch():
    with pytest.raises(ValidationError):
        predict_view(_toy_model(), np.zeros(3), 1)
    with pytest.raises(ValidationError):
        predict_view(_toy_model(), np.zeros(3), 3)


@pytest.mark.parametrize(
    "f1, f2, label, view",
    [(0.3, -0.5, -1, 2), (0.5, -0.5, -1, 2), (-0.9, 0.1, -1, 1), (0.0, 0.0, 1, 2), (0.0, -0.0, 1, 2)],
)
def test_combine_rule(f1, f2, label, view):
    p = combine(f1, f2)
    assert (p.label, p.view) == (label, view)


def test_predict_batch_matches_single():
    m = _toy_model()
    rng = np.random.default_rng(0)
    x1, x2 = rng.standard_normal((5, 4)), rng.standard_normal((5, 3))
    for p, a, b in zip(predict_batch(m, x1, x2), x1, x2):
        q = predict(m, a, b)
        assert p.label == q.label and p.view == q.view
        assert p.f1 == pytest.approx(q.f1, abs=1e-14)


def test_positive_scaling_keeps_view_sign():
    m = _toy_model()
    scaled = ScmvModel(m.theta1, m.theta2, 3 * m.w1, m.w2, 3 * m.b1, m.b2, m.hp)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.standard_normal(4)
        assert np.sign(predict_view(m, x, 1)) == np.sign(predict_view(scaled, x, 1))


# --- persistence


def test_model_round_trip(tmp_path):
    ds = synth_generate(SynthConfig(n=40, l=20, d1=5, d2=4, m_true=2, seed=2))
    model = train(ds, Hyperparams(m=2), OptimizerConfig(maxiters=30), seed=0).model
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    assert back.equals(model)
    save_model(back, tmp_path / "m2.json")
    assert (tmp_path / "m2.json").read_bytes() == path.read_bytes()


def test_model_round_trip_with_vocab(tmp_path):
    from scmv.tfidf import featurize_corpus

    docs1 = [["a", "b"], ["b", "c"], ["c", "d", "a"], ["e"]]
    docs2 = [["x"], ["y", "x"], ["z"], ["w", "z"]]
    ds = featurize_corpus(docs1, docs2, [1, -1, 1], k=3)
    model = train(ds, Hyperparams(m=2), OptimizerConfig(maxiters=10)).model
    assert model.featurization is not None and model.vocab == ds.vocab
    save_model(model, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json").equals(model)


def _doc(model):
    return json.loads(dumps_model(model))


def test_load_unknown_version(tmp_path):
    doc = _doc(_toy_model())
    doc["version"] = 7
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="found 7, expected 1"):
        load_model(tmp_path / "m.json")


def test_load_malformed(tmp_path):
    (tmp_path / "m.json").write_text("{not json")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "m.json")
    doc = _doc(_toy_model())
    del doc["w1"]
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "m.json")


def test_load_corrupted_orthonormality(tmp_path):
    doc = _doc(_toy_model())
    doc["theta1"][0][0] += 1e-3
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="orthonormal"):
        load_model(path, strict=True)
    with pytest.warns(UserWarning, match="re-orthonormalizing"):
        m = load_model(path)
    np.testing.assert_allclose(m.theta1.T @ m.theta1, np.eye(2), atol=1e-12)


def test_load_tiny_drift_is_silent(tmp_path):
    doc = _doc(_toy_model())
    doc["theta1"][0][0] += 1e-9
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_model(path)
