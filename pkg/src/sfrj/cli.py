"""Command-line entry point: ``sfrj <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ann, harness
from .config import ConfigError, RunConfig, config_to_dict, load_config

DATASET = "dataset.csv"
MODEL = "model.json"


def _common(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="override the training and loop seed")


def _setup(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, ann=replace(cfg.ann, train=replace(cfg.ann.train, seed=args.seed)),
                      loop=replace(cfg.loop, seed=args.seed))
    if getattr(args, "points_per_axis", None) is not None:
        cfg = replace(cfg, ann=replace(cfg.ann, points_per_axis=args.points_per_axis))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _dataset(cfg: RunConfig, out: Path, path=None) -> ann.Dataset:
    path = Path(path) if path else out / DATASET
    if path.exists():
        return ann.Dataset.from_csv(path)
    data = ann.generate_dataset(cfg.ann.points_per_axis, cfg.plant)
    data.to_csv(path)
    return data


def _model(cfg: RunConfig, out: Path, args) -> ann.MlpModel:
    if getattr(args, "model", None):
        return ann.MlpModel.load(args.model)
    path = out / MODEL
    if path.exists():
        return ann.MlpModel.load(path)
    res = ann.train(_dataset(cfg, out, getattr(args, "data", None)), cfg.ann.train)
    res.model.save(path)
    return res.model


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_gen_data(args):
    cfg, out = _setup(args)
    data = ann.generate_dataset(cfg.ann.points_per_axis, cfg.plant)
    path = Path(args.data) if args.data else out / DATASET
    data.to_csv(path)
    print(f"wrote {len(data)} rows to {path} ({data.excluded} grid points excluded)")


def cmd_train_ann(args):
    cfg, out = _setup(args)
    res = ann.train(_dataset(cfg, out, args.data), cfg.ann.train)
    res.model.save(out / MODEL)
    _write_rows(out / "losses.csv", ("epoch", "train_mse", "test_mse"),
                [(i, repr(a), repr(b)) for i, (a, b) in enumerate(zip(res.train_loss, res.test_loss))])
    print(f"final train MSE {res.train_loss[-1]:.3e}, test MSE {res.test_loss[-1]:.3e}; "
          f"model written to {out / MODEL}")


def cmd_eval_ann(args):
    cfg, out = _setup(args)
    data = _dataset(cfg, out, args.data)
    model = _model(cfg, out, args)
    _, test_idx = ann.split_indices(len(data), cfg.ann.train.split_fraction, cfg.ann.train.seed)
    pred = model.predict(data.X)
    sc = model.output_scaler
    norm = ann.mse(sc.transform(data.y[test_idx]), sc.transform(pred[test_idx]))
    metrics = {
        "rows": len(data),
        "test_rows": len(test_idx),
        "test_mse_normalized": norm,
        "test_rmse_N": float(np.sqrt(ann.mse(data.y[test_idx], pred[test_idx]))),
        "test_median_relative_error": float(np.median(np.abs(pred[test_idx] - data.y[test_idx])
                                                      / np.abs(data.y[test_idx]))),
    }
    (out / "eval.json").write_text(json.dumps(metrics, indent=1, sort_keys=True))
    _write_rows(out / "predictions.csv", ann.CSV_HEADER + ("thrust_pred_N",),
                [[repr(float(v)) for v in (*x, y, p)] for x, y, p in zip(data.X, data.y, pred)])
    print(json.dumps(metrics, indent=1, sort_keys=True))


def cmd_simulate(args):
    cfg, out = _setup(args)
    loop = cfg.loop_config(feedback=args.feedback) if args.feedback else cfg.loop_config()
    if args.scenario not in cfg.commands:
        raise ConfigError(f"unknown scenario {args.scenario!r}; have {sorted(cfg.commands)}")
    signal = cfg.commands[args.scenario]
    model = _model(cfg, out, args) if loop.feedback == "ann" else None
    rec = harness.run_closed_loop(loop, signal, model, cfg.plant)
    paths = harness.emit_outputs(rec, out, {"run": config_to_dict(cfg), "scenario": args.scenario,
                                            "signal": signal, "loop": loop},
                                 seed=loop.seed, name=args.scenario, plots=not args.no_plots)
    print(f"{args.scenario}: {len(rec)} steps, stopped by {rec.reason}, final-quarter mean |z| "
          f"{harness.final_quarter_mean_abs_z(rec):.4g} N; wrote {', '.join(map(str, paths))}")


def cmd_sweep_ann(args):
    cfg, out = _setup(args)
    rows = ann.sensitivity_sweep(_dataset(cfg, out, args.data), cfg.ann.train)
    _write_rows(out / "ann_sweep.csv", ("factor", "case", "value", "train_mse", "test_mse", "error"),
                [(r.factor, r.case, r.value, repr(r.train_loss), repr(r.test_loss), r.error) for r in rows])
    if not args.no_plots:
        _plot_ann_sweep(rows, out / "ann_sweep.svg")
    for r in rows:
        print(f"{r.factor:>10} {r.case} {str(r.value):>9}  train {r.train_loss:.3e}  test {r.test_loss:.3e}")


def _plot_ann_sweep(rows, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    factors = list(dict.fromkeys(r.factor for r in rows))
    fig, ax = plt.subplots(1, len(factors), figsize=(4 * len(factors), 3.5), squeeze=False)
    for a, f in zip(ax[0], factors):
        for r in rows:
            if r.factor == f and r.history:
                a.semilogy(r.history, label=f"{r.case}: {r.value}")
        a.set_title(f)
        a.set_xlabel("epoch")
        a.legend(fontsize=8)
    ax[0, 0].set_ylabel("train MSE (scaled)")
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "sfrj"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_sweep_rcac(args):
    cfg, out = _setup(args)
    loop = cfg.loop_config(feedback=args.feedback) if args.feedback else cfg.loop_config()
    signal = cfg.commands[args.scenario]
    model = _model(cfg, out, args) if loop.feedback == "ann" else None
    results = harness.hyperparameter_sweep(loop, signal, model, cfg.plant)
    for r in results:
        if r.record is not None:
            harness.write_csv(r.record, out / f"sweep_n{r.n:g}_p{r.p:g}.csv")
    summary = harness.sweep_summary(results)
    _write_rows(out / "sweep_summary.csv", tuple(summary[0]),
                [[repr(v) if isinstance(v, float) else v for v in row.values()] for row in summary])
    report = harness.trend_report(results)
    (out / "sweep_trend.txt").write_text("\n".join(report) + "\n")
    if not args.no_plots:
        harness.plot_sweep(results, out / "sweep.svg", signal.scale)
    for row in summary:
        print(f"n={row['n']:<4g} p={row['p']:<6g} overshoot {row['overshoot_N']:.4f} N  "
              f"settling step {row['settling_step']}  {row['error']}")
    print("\n".join(report))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sfrj", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic thrust dataset")
    _common(p)
    p.add_argument("--points-per-axis", type=int)
    p.add_argument("--data", help="dataset path (default: <out>/dataset.csv)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-ann", help="train the thrust surrogate")
    _common(p)
    p.add_argument("--points-per-axis", type=int)
    p.add_argument("--data")
    p.set_defaults(func=cmd_train_ann)

    p = sub.add_parser("eval-ann", help="score a trained surrogate on its test split")
    _common(p)
    p.add_argument("--points-per-axis", type=int)
    p.add_argument("--data")
    p.add_argument("--model")
    p.set_defaults(func=cmd_eval_ann)

    for name, func, helptext in (("simulate", cmd_simulate, "run one closed-loop scenario"),
                                 ("sweep-rcac", cmd_sweep_rcac, "12-run (N1, P0) sweep")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--scenario", default="step")
        p.add_argument("--feedback", choices=("ann", "true"))
        p.add_argument("--points-per-axis", type=int)
        p.add_argument("--data")
        p.add_argument("--model")
        p.add_argument("--no-plots", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep-ann", help="one-factor-at-a-time surrogate hyperparameter sweep")
    _common(p)
    p.add_argument("--points-per-axis", type=int)
    p.add_argument("--data")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_sweep_ann)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
