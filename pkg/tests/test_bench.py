import numpy as np
import pytest

from scmv.baselines import ridge_accuracy, train_tb
from scmv.bench import MethodResult, format_mean_std, format_report, report_json, run_benchmark, run_sweep
from scmv.dataset import ORIGINAL, SynthConfig, split_train_test, synth_generate
from scmv.errors import ValidationError
from scmv.objective import Hyperparams
from scmv.stiefel import OptimizerConfig

CFG = OptimizerConfig(maxiters=40)
HP = Hyperparams(m=2)


@pytest.fixture(scope="module")
def ds():
    return synth_generate(SynthConfig(n=100, l=40, d1=8, d2=8, m_true=2, seed=3, l_target=10))


def test_format_mean_std():
    assert format_mean_std(0.861, 0.0042) == "86.10±0.42"
    assert format_mean_std(1.0, 0.0) == "100.00±0.00"


def test_sample_std_hand_computed():
    # 0.80, 0.85, 0.90: mean 0.85, squared deviations sum 0.005, / (3 - 1) -> std 0.05
    r = MethodResult.from_accuracies([0.80, 0.85, 0.90])
    assert r.mean == pytest.approx(0.85, abs=1e-15)
    assert r.std == pytest.approx(0.05, abs=1e-15)
    assert r.formatted() == "85.00±5.00"


def test_single_run_std_zero():
    assert MethodResult.from_accuracies([0.7]).std == 0.0


def test_ten_runs(ds):
    rep = run_benchmark(ds, runs=10, hp=HP, cfg=CFG, test_count=10)
    for res in rep.methods.values():
        assert res.runs == 10 and len(res.accuracies) == 10
        assert res.mean == pytest.approx(np.mean(res.accuracies))
    assert rep.config["test_count"] == 10


def test_default_test_count(ds):
    assert run_benchmark(ds, runs=1, methods=("TB",)).config["test_count"] == ds.l // 2


def test_tb_accuracy_matches_manual_split(ds):
    rep = run_benchmark(ds, runs=3, master_seed=7, methods=("TB",), test_count=12)
    for r in range(3):
        train, test = split_train_test(ds, 12, 7 + r)
        m = train_tb(train, train.labeled_rows(ORIGINAL))
        assert rep.methods["TB"].accuracies[r] == ridge_accuracy(m, test.x2, test.y)


def test_jobs_do_not_change_results(ds):
    a = run_benchmark(ds, runs=3, hp=HP, cfg=CFG, jobs=1)
    b = run_benchmark(ds, runs=3, hp=HP, cfg=CFG, jobs=3)
    assert report_json(a) == report_json(b)


def test_report_text(ds):
    text = format_report(run_benchmark(ds, runs=2, hp=HP, cfg=CFG))
    lines = text.splitlines()
    assert len(lines) == 4 and [ln.split()[0] for ln in lines[1:]] == ["SCMV", "TB", "TSB"]


def test_sweep_keys(ds):
    sweep = run_sweep(ds, [1, 2], HP, runs=2, cfg=CFG)
    assert list(sweep) == [1, 2]
    assert all(list(r.methods) == ["SCMV"] for r in sweep.values())
    assert sweep[2].config["hyperparams"]["m"] == 2


@pytest.mark.parametrize("kw", [dict(runs=0), dict(methods=("XX",)), dict(test_count=40)])
def test_validation(ds, kw):
    with pytest.raises(ValidationError):
        run_benchmark(ds, **kw)
