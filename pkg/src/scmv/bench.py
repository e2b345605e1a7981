"""Repeated random-split benchmark of SCMV against the TB/TSB baselines."""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .baselines import ridge_accuracy, train_tb, train_tsb
from .dataset import ORIGINAL, TRANSLATED, TwoViewDataset, split_train_test
from .errors import ValidationError
from .model import accuracy, train
from .objective import Hyperparams
from .stiefel import OptimizerConfig

METHODS = ("SCMV", "TB", "TSB")


@dataclass
class MethodResult:
    accuracies: list
    mean: float
    std: float
    runs: int

    @classmethod
    def from_accuracies(cls, accs):
        accs = [float(a) for a in accs]
        # sample std (n - 1); a single run has no spread to report
        std = statistics.stdev(accs) if len(accs) > 1 else 0.0
        return cls(accs, statistics.fmean(accs), std, len(accs))

    def formatted(self) -> str:
        return format_mean_std(self.mean, self.std)


@dataclass
class BenchmarkReport:
    config: dict
    methods: dict = field(default_factory=dict)

    def to_dict(self):
        return {"config": self.config, "methods": {k: asdict(v) for k, v in self.methods.items()}}


def format_mean_std(mean: float, std: float) -> str:
    """Percent with two decimals, e.g. ``86.10±0.42``."""
    return f"{100 * mean:.2f}±{100 * std:.2f}"


def _one_run(ds, run, master_seed, methods, test_count, hp, cfg, baseline_alpha):
    seed = master_seed + run
    train_ds, test = split_train_test(ds, test_count, seed)
    out = {}
    if "SCMV" in methods:
        model = train(train_ds, hp, cfg, seed).model
        out["SCMV"] = accuracy(model, test.x1, test.x2, test.y)
    target = train_ds.labeled_rows(ORIGINAL)
    if "TB" in methods:
        out["TB"] = ridge_accuracy(train_tb(train_ds, target, baseline_alpha), test.x2, test.y)
    if "TSB" in methods:
        translated = train_ds.labeled_rows(TRANSLATED)
        out["TSB"] = ridge_accuracy(train_tsb(train_ds, target, translated, baseline_alpha), test.x2, test.y)
    return out


def run_benchmark(
    ds: TwoViewDataset,
    runs: int = 10,
    master_seed: int = 0,
    methods: Sequence[str] = METHODS,
    test_count: Optional[int] = None,
    hp: Hyperparams = Hyperparams(),
    cfg: OptimizerConfig = OptimizerConfig(),
    baseline_alpha: float = 0.1,
    jobs: int = 1,
) -> BenchmarkReport:
    """Split, train every method and score held-out rows, ``runs`` times.

    Run ``r`` uses seed ``master_seed + r`` for both the split and SCMV's
    initialization.  ``test_count`` defaults to half the labeled rows.
    """
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValidationError(f"unknown methods: {sorted(unknown)}")
    methods = [m for m in METHODS if m in methods]
    if test_count is None:
        test_count = ds.l // 2
    args = (master_seed, methods, test_count, hp, cfg, baseline_alpha)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_run = list(pool.map(lambda r: _one_run(ds, r, *args), range(runs)))
    else:
        per_run = [_one_run(ds, r, *args) for r in range(runs)]
    config = {
        "runs": runs,
        "master_seed": master_seed,
        "test_count": test_count,
        "n": ds.n,
        "l": ds.l,
        "d1": ds.d1,
        "d2": ds.d2,
        "hyperparams": asdict(hp),
        "optimizer": asdict(cfg),
        "baseline_alpha": baseline_alpha,
    }
    report = BenchmarkReport(config)
    for m in methods:
        report.methods[m] = MethodResult.from_accuracies([r[m] for r in per_run])
    return report


def run_sweep(ds: TwoViewDataset, m_values: Sequence[int], hp: Hyperparams = Hyperparams(), **kwargs) -> dict:
    """One SCMV-only benchmark per subspace dimension, keyed by m."""
    kwargs.setdefault("methods", ("SCMV",))
    return {m: run_benchmark(ds, hp=Hyperparams(hp.alpha1, hp.alpha2, hp.gamma, m), **kwargs) for m in m_values}


def format_report(report: BenchmarkReport) -> str:
    lines = [f"{'method':<8}{'accuracy (%)':>16}{'runs':>6}"]
    for name, res in report.methods.items():
        lines.append(f"{name:<8}{res.formatted():>16}{res.runs:>6}")
    return "\n".join(lines) + "\n"


def format_sweep(sweep: dict) -> str:
    lines = [f"{'m':>4}{'SCMV accuracy (%)':>20}"]
    for m, report in sweep.items():
        lines.append(f"{m:>4}{report.methods['SCMV'].formatted():>20}")
    return "\n".join(lines) + "\n"


def report_json(report) -> str:
    if isinstance(report, dict):
        doc = {"sweep": [{"m": m, **r.to_dict()} for m, r in report.items()]}
    else:
        doc = report.to_dict()
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
