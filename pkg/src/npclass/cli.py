"""Command-line interface: ``npclass <command> [flags]``.

Exit codes: 0 success, 2 invalid arguments, 3 insufficient class 0 sample,
4 unreadable or malformed input/output files. Every command is a pure
function of its flags (including ``--seed``), so reruns produce
byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from functools import partial
from pathlib import Path

import numpy as np

from . import experiments
from .band import (
    DEFAULT_GRID_SIZE,
    choose_alpha,
    compare_bands,
    read_band_csv,
    write_band_csv,
    write_dominance_csv,
    write_segments_csv,
)
from .data import (
    S2_MODELS,
    SIM1_SPEC,
    LabeledDataset,
    load_csv,
    load_feature_csv,
    save_csv,
    sim2_spec,
    simulate,
    simulate_s2,
)
from .ensemble import NPEnsemble, SplitPlan, fit_band, fit_np
from .errors import DataFormatError, InsufficientSampleError, NPError
from .models import EXTERNAL_WARNING, LEARNERS, ExternalScorer, evaluate_errors, fit_identity
from .threshold import min_class0_size, violation_rate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INSUFFICIENT = 3
EXIT_IO = 4

BASES = ("identity", "lda", "gnb", "logistic", "external")


def _fmt(x) -> str:
    return "NA" if x is None else repr(float(x))


# ------------------------------------------------------------------ helpers


def _load_training(args) -> LabeledDataset:
    data = load_csv(args.input, label_column=args.label_col)
    if args.features:
        data = data.select_features([f.strip() for f in args.features.split(",") if f.strip()])
    return data


def _learner(base: str):
    if base == "external":
        # warn once per command rather than once per split
        warnings.warn(EXTERNAL_WARNING, stacklevel=2)
        return lambda train: ExternalScorer() if train.d == 1 else LEARNERS["external"](train)
    if base == "identity":
        return partial(fit_identity, feature_index=0)
    return LEARNERS[base]


def _plan(args) -> SplitPlan:
    return SplitPlan(
        M=args.splits,
        class0_calibration_fraction=args.split_fraction,
        seed=args.seed,
        alpha=getattr(args, "alpha", 0.05),
        delta=args.delta,
    )


def _resolve_method(args) -> None:
    # "--method lda-x1" is shorthand for "--base lda --features x1"
    if getattr(args, "method", None):
        base, _, feats = args.method.partition("-")
        if base not in BASES:
            raise NPError(f"--method must look like BASE-FEATURES with BASE in {BASES}, got {args.method!r}")
        args.base = base
        if feats:
            args.features = feats.replace("+", ",")


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ----------------------------------------------------------------- commands


def cmd_minsize(args) -> int:
    n = min_class0_size(args.alpha, args.delta)
    print(f"n_min={n} violation_bound={violation_rate(n, n, args.alpha)!r}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.model == "sim1":
        data = simulate(SIM1_SPEC, args.n, args.seed)
    elif args.model == "sim2":
        data = simulate(sim2_spec(args.scale_convention), args.n, args.seed)
    else:
        data = simulate_s2(args.model, args.n, args.seed)
    save_csv(args.out, data)
    print(f"wrote {data.n} rows ({int(np.sum(data.labels == 0))} class 0) to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    train = _load_training(args)
    ens = fit_np(train, _learner(args.base), _plan(args))
    Path(args.out).write_text(ens.to_json())
    report = {
        "alpha": args.alpha,
        "delta": args.delta,
        "M": ens.M,
        "base": args.base,
        "members": [thr.to_dict() for _, thr in ens.members],
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"fitted {ens.M} member(s) with base={args.base}, alpha={args.alpha:g}, delta={args.delta:g}")
    for i, (_, thr) in enumerate(ens.members):
        print(f"  member {i}: n={thr.n} k*={thr.k_star} threshold={_fmt(thr.threshold)} v(k*)={_fmt(thr.violation_bound)}")
    return EXIT_OK


def _load_model(path) -> NPEnsemble:
    try:
        return NPEnsemble.from_json(Path(path).read_text())
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: not a valid model file ({exc})") from exc


def cmd_predict(args) -> int:
    ens = _load_model(args.model)
    X = load_feature_csv(args.input, ens.feature_names)
    votes = ens.votes(X)
    pred = ens.predict_batch(X)
    _write_rows(Path(args.out), ["votes", "prediction"], zip(votes.tolist(), pred.tolist()))
    print(f"predicted {pred.size} rows: {int(pred.sum())} class 1, {int(pred.size - pred.sum())} class 0")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ens = _load_model(args.model)
    test = load_csv(args.input, label_column=args.label_col).select_features(list(ens.feature_names))
    rep = evaluate_errors(ens.predict_batch, test)
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"type I error {_fmt(rep.type1_hat)} on {rep.n0} class 0 points")
    print(f"type II error {_fmt(rep.type2_hat)} on {rep.n1} class 1 points")
    return EXIT_OK


def cmd_band(args) -> int:
    _resolve_method(args)
    train = _load_training(args)
    band = fit_band(train, _learner(args.base), args.delta, _plan(args), args.grid_size)
    write_band_csv(args.out, band, args.grid_size)
    if args.segments_out:
        if not band.segments:
            raise NPError("--segments-out needs a single-split band (--splits 1)")
        write_segments_csv(args.segments_out, band)
    print(f"wrote band ({band.n_bands} split(s), delta={args.delta:g}) to {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = read_band_csv(args.first), read_band_csv(args.second)
    report = compare_bands(a, b, args.grid_size)
    names = (args.names[0], args.names[1]) if args.names else ("first", "second")
    if args.out:
        write_dominance_csv(args.out, report, names)
    for name, intervals in ((names[0], report.intervals_first_wins), (names[1], report.intervals_second_wins)):
        if not intervals:
            print(f"{name} dominates nowhere")
        for lo, hi in intervals:
            print(f"{name} dominates for alpha in [{lo:.6g}, {hi:.6g}]")
    return EXIT_OK


def cmd_choose_alpha(args) -> int:
    band = read_band_csv(args.band)
    alpha = choose_alpha(band, args.max_type2)
    if alpha is None:
        print(f"no alpha on the band keeps the type II upper bound <= {args.max_type2:g}")
    else:
        print(f"alpha={alpha!r}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name
    reps = args.replicates
    if name == "sim1":
        r = experiments.run_sim1(reps or 1000, args.n, args.alpha, args.delta, args.seed)
        methods = list(r.type1)
        _write_rows(
            out / "sim1_replicates.csv",
            ["replicate"] + [f"{m}_type1" for m in methods] + [f"{m}_type2" for m in methods],
            ([i] + [_fmt(r.type1[m][i]) for m in methods] + [_fmt(r.type2[m][i]) for m in methods]
             for i in range(len(r.type1["np"]))),
        )
        rows = r.summary_rows()
        _write_rows(
            out / "sim1_summary.csv",
            ["method", "violation_rate", "type1_mean", "type2_mean"],
            ([d["method"], _fmt(d["violation_rate"]), _fmt(d["type1_mean"]), _fmt(d["type2_mean"])] for d in rows),
        )
        for d in rows:
            print(f"{d['method']:>6}: violation rate {d['violation_rate']:.3f}, mean type I {d['type1_mean']:.4f}")
    elif name == "s1":
        r = experiments.run_s1(reps or 1000, args.n, args.alpha, args.delta, args.seed)
        _write_rows(
            out / "s1_replicates.csv",
            ["replicate", "roc_empirical_type1", "roc_type1", "np_empirical_type1", "np_type1", "np_conservative"],
            ([i, _fmt(r.roc_empirical_type1[i]), _fmt(r.roc_type1[i]), _fmt(r.np_empirical_type1[i]),
              _fmt(r.np_type1[i]), int(r.np_conservative[i])] for i in range(r.roc_type1.size)),
        )
        print(f"ROC-picked violation rate {r.roc_violation_rate():.3f}")
        print(f"NP lower curve violation rate {r.np_violation_rate():.3f}")
        print(f"lower curve conservative in {r.conservative_rate():.3f} of replicates")
    elif name == "sim2":
        r = experiments.run_sim2(
            args.n, args.splits, args.delta, args.seed, args.scale_convention, args.grid_size
        )
        write_band_csv(out / "sim2_band_method1.csv", r.band1)
        write_band_csv(out / "sim2_band_method2.csv", r.band2)
        write_dominance_csv(out / "sim2_dominance.csv", r.dominance, ("method1", "method2"))
        summary = {
            "scale_convention": r.scale_convention,
            "max_type2": r.max_type2,
            "chosen_alpha_method1": r.chosen_alpha_method1,
            "method1_wins": [list(iv) for iv in r.dominance.intervals_first_wins],
            "method2_wins": [list(iv) for iv in r.dominance.intervals_second_wins],
        }
        (out / "sim2_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        for lo, hi in r.dominance.intervals_first_wins:
            print(f"method1 dominates for alpha in [{lo:.4g}, {hi:.4g}]")
        for lo, hi in r.dominance.intervals_second_wins:
            print(f"method2 dominates for alpha in [{lo:.4g}, {hi:.4g}]")
        print(f"method1 chosen alpha for type II <= {r.max_type2:g}: {r.chosen_alpha_method1}")
    elif name == "s2":
        r = experiments.run_s2(
            reps or 200, args.n, args.alpha, args.delta, seed=args.seed, test_size=args.test_size
        )
        keys = ["model", "learner", "M", "type1_mean", "type1_sd", "violation_rate", "type2_mean", "type2_sd"]
        rows = [c.row() for c in r.cells]
        _write_rows(
            out / "s2_summary.csv",
            keys,
            ([d[k] if k in ("model", "learner", "M") else _fmt(d[k]) for k in keys] for d in rows),
        )
        for d in rows:
            print(
                f"{d['model']:>9} {d['learner']:>8} M={d['M']:<2} type I {d['type1_mean']:.4f} ({d['type1_sd']:.4f})"
                f" violation {d['violation_rate']:.3f} type II {d['type2_mean']:.4f} ({d['type2_sd']:.4f})"
            )
    elif name == "coverage":
        r = experiments.run_coverage(reps or 2000, args.n, args.delta, args.seed)
        _write_rows(
            out / "coverage_summary.csv",
            ["position", "coverage", "below", "above"],
            ([_fmt(q), _fmt(r.frequency(q)), _fmt(np.mean(r.below[q])), _fmt(np.mean(r.above[q]))]
             for q in r.positions),
        )
        for q in r.positions:
            print(f"k/n={q:g}: two-sided coverage {r.frequency(q):.3f}")
    print(f"tables written to {out}")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="npclass", description="Neyman-Pearson classification and NP-ROC bands.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, alpha=True):
        if alpha:
            sp.add_argument("--alpha", type=float, default=0.05, help="type I error upper bound")
        sp.add_argument("--delta", type=float, default=0.05, help="tolerance (violation probability)")
        sp.add_argument("--seed", type=int, default=0)

    def training(sp):
        sp.add_argument("--input", required=True, help="labeled CSV (or score CSV with --base external)")
        sp.add_argument("--label-col", default="label")
        sp.add_argument("--features", default=None, help="comma-separated feature columns to use")
        sp.add_argument("--base", choices=BASES, default="lda")
        sp.add_argument("--splits", "-M", type=_positive_int, default=1, help="number of random splits M")
        sp.add_argument("--split-fraction", type=float, default=0.5,
                        help="fraction of class 0 (and, for bands, class 1) left out for calibration")

    sp = sub.add_parser("minsize", help="minimum left-out class 0 sample size")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.set_defaults(func=cmd_minsize)

    sp = sub.add_parser("generate", help="write a simulated dataset as CSV")
    sp.add_argument("--model", choices=("sim1", "sim2") + S2_MODELS, default="sim1")
    sp.add_argument("--n", type=_positive_int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale-convention", choices=("variance", "sd"), default="variance")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("fit", help="fit an NP classifier ensemble")
    common(sp)
    training(sp)
    sp.add_argument("--out", required=True, help="model JSON path")
    sp.add_argument("--report", default=None, help="optional calibration report JSON path")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="predict labels with a fitted model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("evaluate", help="empirical type I/II errors on labeled data")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--label-col", default="label")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("band", help="compute an NP-ROC band")
    common(sp, alpha=False)
    training(sp)
    sp.add_argument("--method", default=None, help="shorthand BASE-FEATURES, e.g. lda-x1")
    sp.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    sp.add_argument("--out", required=True, help="band CSV (alpha,lower,upper)")
    sp.add_argument("--segments-out", default=None, help="per-order-statistic table (single split only)")
    sp.set_defaults(func=cmd_band)

    sp = sub.add_parser("compare", help="dominance intervals between two band CSVs")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.add_argument("--names", nargs=2, default=None)
    sp.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    sp.add_argument("--out", default=None, help="dominance CSV (alpha_lo,alpha_hi,winner)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("choose-alpha", help="smallest alpha meeting a type II upper bound")
    sp.add_argument("band")
    sp.add_argument("--max-type2", type=float, required=True)
    sp.set_defaults(func=cmd_choose_alpha)

    sp = sub.add_parser("simulate", help="reproduce a simulation study")
    sp.add_argument("name", choices=("sim1", "sim2", "s1", "s2", "coverage"))
    common(sp)
    sp.add_argument("--replicates", type=_positive_int, default=None)
    sp.add_argument("--n", type=_positive_int, default=1000)
    sp.add_argument("--splits", "-M", type=_positive_int, default=11)
    sp.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    sp.add_argument("--scale-convention", choices=("variance", "sd"), default="variance")
    sp.add_argument("--test-size", type=_positive_int, default=1_000_000)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except InsufficientSampleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
