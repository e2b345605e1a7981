"""Command-line interface: ``scmv {train,predict,eval,synth,bench,featurize}``.

Exit codes: 0 success, 1 validation or I/O error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench as bench_mod
from .dataset import (
    ORIGINAL,
    SynthConfig,
    TwoViewDataset,
    load_dataset,
    read_tsv,
    save_dataset,
    synth_generate,
)
from .errors import NumericalError, ScmvError
from .model import accuracy, load_model, predict_batch, save_model, train
from .objective import Hyperparams
from .stiefel import STEP_RULES, OptimizerConfig
from .tfidf import DEFAULT_K, featurize_corpus, tokenize

log = logging.getLogger("scmv")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_hp(p):
    g = p.add_argument_group("model hyperparameters")
    g.add_argument("--alpha1", type=float, default=0.1)
    g.add_argument("--alpha2", type=float, default=0.1)
    g.add_argument("--gamma", type=float, default=1.0 / 6.0)
    g.add_argument("--m", type=int, default=10, help="subspace dimension")


def _add_opt(p):
    g = p.add_argument_group("optimizer")
    d = OptimizerConfig()
    g.add_argument("--epsilon", type=float, default=d.epsilon)
    g.add_argument("--mu", type=float, default=d.mu)
    g.add_argument("--rho1", type=float, default=d.rho1)
    g.add_argument("--rho2", type=float, default=d.rho2)
    g.add_argument("--maxiters", type=int, default=d.maxiters)
    g.add_argument("--maxsteps", type=int, default=d.maxsteps)
    g.add_argument("--tau-init", type=float, default=d.tau_init)
    g.add_argument("--step-rule", choices=STEP_RULES, default=d.step_rule)
    g.add_argument(
        "--euclidean-stop",
        action="store_true",
        help="stop on ||G1||^2 + ||G2||^2 instead of the manifold stationarity measure",
    )


def _add_synth(p, required_out=False):
    g = p.add_argument_group("synthetic data")
    d = SynthConfig()
    g.add_argument("--n", type=int, default=d.n)
    g.add_argument("--l", type=int, default=d.l)
    g.add_argument("--d1", type=int, default=d.d1)
    g.add_argument("--d2", type=int, default=d.d2)
    g.add_argument("--m-true", type=int, default=d.m_true)
    g.add_argument("--noise-sigma", type=float, default=d.noise_sigma)
    g.add_argument("--l-target", type=int, default=None, help="labeled rows tagged as original target documents")


def _hp(args):
    return Hyperparams(alpha1=args.alpha1, alpha2=args.alpha2, gamma=args.gamma, m=args.m)


def _opt(args):
    return OptimizerConfig(
        epsilon=args.epsilon,
        mu=args.mu,
        rho1=args.rho1,
        rho2=args.rho2,
        maxiters=args.maxiters,
        maxsteps=args.maxsteps,
        tau_init=args.tau_init,
        step_rule=args.step_rule,
        euclidean_stop=args.euclidean_stop,
    )


def _synth_cfg(args, seed):
    return SynthConfig(
        n=args.n,
        l=args.l,
        d1=args.d1,
        d2=args.d2,
        m_true=args.m_true,
        noise_sigma=args.noise_sigma,
        seed=seed,
        l_target=args.l_target,
    )


def cmd_train(args, out):
    ds = load_dataset(args.dataset)
    hp = _hp(args)
    res = train(ds, hp, _opt(args), args.seed)
    save_model(res.model, args.output)
    if args.trace:
        res.trace.dump(args.trace)
    print(f"final objective: {res.trace.final_objective!r}", file=out)
    print(f"iterations: {len(res.trace)}", file=out)
    print(f"stop reason: {res.stop_reason.value}", file=out)
    if hp.gamma == 0:
        print("gamma = 0: views trained independently (decoupled)", file=out)
    return EXIT_OK


def cmd_predict(args, out):
    model = load_model(args.model, strict=args.strict_load)
    _, x1, x2, _ = read_tsv(args.dataset)
    preds = predict_batch(model, x1, x2)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label\tf1\tf2\tview\n")
        for p in preds:
            fh.write(f"{p.label:+d}\t{p.f1!r}\t{p.f2!r}\t{p.view}\n")
    print(f"wrote {len(preds)} predictions to {args.output}", file=out)
    return EXIT_OK


def cmd_eval(args, out):
    model = load_model(args.model, strict=args.strict_load)
    ds = load_dataset(args.dataset)
    acc = accuracy(model, ds.x1_labeled, ds.x2_labeled, ds.y)
    print(f"{acc:.4f}", file=out)
    return EXIT_OK


def cmd_synth(args, out):
    ds = synth_generate(_synth_cfg(args, args.seed))
    save_dataset(ds, args.output)
    print(f"wrote n={ds.n} l={ds.l} d1={ds.d1} d2={ds.d2} to {args.output}", file=out)
    return EXIT_OK


def cmd_bench(args, out):
    if args.dataset:
        ds = load_dataset(args.dataset)
    else:
        ds = synth_generate(_synth_cfg(args, args.synth_seed))
    common = dict(
        runs=args.runs,
        master_seed=args.seed,
        test_count=args.test_count,
        cfg=_opt(args),
        baseline_alpha=args.baseline_alpha,
        jobs=args.jobs,
    )
    if args.sweep_m:
        report = bench_mod.run_sweep(ds, args.sweep_m, _hp(args), **common)
        text = bench_mod.format_sweep(report)
    else:
        methods = [m.strip().upper() for m in args.methods.split(",") if m.strip()]
        report = bench_mod.run_benchmark(ds, methods=methods, hp=_hp(args), **common)
        text = bench_mod.format_report(report)
    out.write(text)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(bench_mod.report_json(report))
    return EXIT_OK


def _read_corpus(path):
    labels, docs1, docs2, origin = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) not in (3, 4):
                raise ScmvError(f"{path}: line {lineno}: expected 3 or 4 tab-separated columns")
            labels.append(int(cols[0]))
            docs1.append(tokenize(cols[1]))
            docs2.append(tokenize(cols[2]))
            origin.append(cols[3].strip() if len(cols) == 4 else ORIGINAL)
    return labels, docs1, docs2, origin


def cmd_featurize(args, out):
    labels, docs1, docs2, origin = _read_corpus(args.corpus)
    labels = np.array(labels)
    order = np.concatenate([np.flatnonzero(labels != 0), np.flatnonzero(labels == 0)])
    ds = featurize_corpus(
        [docs1[i] for i in order],
        [docs2[i] for i in order],
        labels[labels != 0].astype(float),
        args.k,
    )
    ds = TwoViewDataset(ds.x1, ds.x2, ds.y, np.array(origin)[order], ds.vocab)
    save_dataset(ds, args.output)
    if args.vocab_out:
        with open(args.vocab_out, "w", encoding="utf-8") as fh:
            json.dump([v.to_dict() for v in ds.vocab], fh, indent=1)
            fh.write("\n")
    print(f"wrote n={ds.n} l={ds.l} d1={ds.d1} d2={ds.d2} to {args.output}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scmv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an SCMV model")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write per-iteration JSON lines here")
    _add_hp(p)
    _add_opt(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score every row of a dataset")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--strict-load", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy over the labeled rows")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--strict-load", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic two-view dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_synth(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="repeated-split benchmark")
    p.add_argument("dataset", nargs="?", help="dataset file; omit to use synthetic data")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="master seed; run r uses seed + r")
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--methods", default=",".join(bench_mod.METHODS))
    p.add_argument("--test-count", type=int, default=None, help="held-out labeled rows per run (default l // 2)")
    p.add_argument("--sweep-m", type=_int_list, default=None, help="e.g. 10,20,30,40,50")
    p.add_argument("--baseline-alpha", type=float, default=0.1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report-out", help="write the machine-readable report here")
    _add_hp(p)
    _add_opt(p)
    _add_synth(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("featurize", help="TF-IDF featurize a raw two-view text corpus")
    p.add_argument("corpus", help="lines of <label>\\t<view1 text>\\t<view2 text>[\\t<o|t>]")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--vocab-out")
    p.set_defaults(func=cmd_featurize)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args, out)
    except NumericalError as exc:
        print(f"scmv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScmvError, OSError, ValueError) as exc:
        print(f"scmv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
