"""Command-line interface: ``mcauc {gen-data,train,eval,experiment,grad-check}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .calibration import calibrate_predict, fit_calibrator
from .data import SyntheticSpec, apply_minmax, fit_minmax, gen_synthetic, load_dataset, save_dataset
from .harness import ExperimentConfig, emit_pr_points, emit_report, format_table, run_experiment
from .losses import DEFAULT_DELTA
from .model import ModelBundle, forward, grad_check, init_params, load_model, predict_scores, save_model
from .train import TrainConfig, compute_loss, loss_and_grads, train

LOSS_ALIASES = {"ce": "softmax_ce", "aauc-ovo": "aauc_ovo", "aauc-ovr": "aauc_ovr"}

log = logging.getLogger("mcauc")


def _add_synthetic_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic data")
    g.add_argument("--classes", type=int, default=3, help="number of classes (default 3)")
    g.add_argument("--dims", type=int, default=8, help="feature dimension (default 8)")
    g.add_argument("--sizes", type=int, nargs=3, default=[300, 300, 1500], metavar=("TRAIN", "VAL", "TEST"),
                   help="examples per split (default 300 300 1500)")
    g.add_argument("--separation", type=float, default=1.5, help="distance of class means from the origin")
    g.add_argument("--spread", type=float, default=1.0, help="per-class standard deviation")
    g.add_argument("--balanced", action="store_true",
                   help="equal class proportions instead of the 16.60/34.45/48.94%% mix (3 classes only)")


def _synthetic_spec(args, seed: int) -> SyntheticSpec:
    props = None if (args.balanced or args.classes != 3) else SyntheticSpec().proportions
    return SyntheticSpec(
        c=args.classes, dims=args.dims, sizes=tuple(args.sizes), proportions=props,
        separation=args.separation, spread=args.spread, seed=seed,
    )


def _add_train_args(p: argparse.ArgumentParser, multi_loss: bool = False) -> None:
    g = p.add_argument_group("training")
    choices = list(LOSS_ALIASES)
    if multi_loss:
        g.add_argument("--loss", nargs="+", choices=choices, default=choices,
                       help="loss kinds to compare (default: all)")
    else:
        g.add_argument("--loss", choices=choices, default="ce", help="training objective (default ce)")
    g.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="sigmoid slope of the AUC surrogate")
    g.add_argument("--epochs", type=int, default=20)
    g.add_argument("--batch", type=int, default=64, help="minibatch size")
    g.add_argument("--lr-start", type=float, default=1e-3, help="learning rate of the first epoch")
    g.add_argument("--lr-end", type=float, default=1e-4, help="learning rate of the last epoch")
    g.add_argument("--hidden", type=int, nargs="+", default=[32, 32], help="hidden layer sizes")
    g.add_argument("--stratified", choices=["on", "off", "auto"], default="auto",
                   help="class-stratified minibatches (auto: on for AUC losses)")
    g.add_argument("--seed", type=int, default=0)


def _train_config(args, loss: str) -> TrainConfig:
    strat = {"on": True, "off": False, "auto": None}[args.stratified]
    return TrainConfig(
        loss_kind=LOSS_ALIASES.get(loss, loss), delta=args.delta, epochs=args.epochs, batch_size=args.batch,
        lr_start=args.lr_start, lr_end=args.lr_end, seed=args.seed, stratified_batches=strat,
        hidden=tuple(args.hidden),
    )


def cmd_gen_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, ds in zip(("train", "val", "test"), gen_synthetic(_synthetic_spec(args, args.seed))):
        save_dataset(ds, out / f"{name}.csv")
    print(f"wrote train.csv, val.csv, test.csv to {out}")
    return 0


def _splits_from(args):
    if args.data:
        d = Path(args.data)
        tr = load_dataset(d / "train.csv")
        va = load_dataset(d / "val.csv", n_classes=tr.n_classes)
        return tr, va
    tr, va, _ = gen_synthetic(_synthetic_spec(args, args.seed))
    return tr, va


def cmd_train(args) -> int:
    tr, va = _splits_from(args)
    norm = fit_minmax(tr)
    tr, va = apply_minmax(norm, tr), apply_minmax(norm, va)
    cfg = _train_config(args, args.loss)
    params, history = train(tr, va, cfg)
    cal = fit_calibrator(predict_scores(params, va.features), va.labels, seed=cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = {"loss_kind": cfg.loss_kind, "seed": cfg.seed, "delta": cfg.delta, "best_epoch": history.best_epoch}
    save_model(out / "model.json", ModelBundle(params, cal, norm, prov))
    (out / "history.json").write_text(json.dumps(history.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"best epoch {history.best_epoch}: val accuracy {history.val_accuracy[history.best_epoch]:.4f}")
    print(f"wrote {out / 'model.json'}")
    return 0


def cmd_eval(args) -> int:
    bundle = load_model(args.model)
    test = load_dataset(args.data, n_classes=bundle.params.n_classes)
    if bundle.normalization is not None:
        test = apply_minmax(bundle.normalization, test)
    scores = predict_scores(bundle.params, test.features)
    if bundle.calibrator is not None:
        pred = calibrate_predict(bundle.calibrator, scores)
    else:
        pred = np.argmax(scores, axis=1)
    report = metrics.evaluate(scores, pred, test.labels)
    text = json.dumps(report.to_dict(), indent=1, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_experiment(args) -> int:
    base = _train_config(args, args.loss[0])
    if args.data:
        d = Path(args.data)
        src = {"synthetic": None, "data_files": tuple(str(d / f"{n}.csv") for n in ("train", "val", "test"))}
    else:
        src = {"synthetic": _synthetic_spec(args, args.seed)}
    config = ExperimentConfig(
        losses=tuple(LOSS_ALIASES[k] for k in args.loss), repeats=args.repeats, base_seed=args.seed,
        train=base, **src,
    )
    summary = run_experiment(config, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(summary, out / "report.json")
    emit_pr_points(summary, out)
    print(format_table(summary))
    print(f"wrote report and PR points to {out}")
    return 0


def cmd_grad_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    c = args.classes
    params = init_params((args.dims, *args.hidden, c), args.seed)
    x = rng.standard_normal((args.n, args.dims))
    y = np.r_[np.arange(c), rng.integers(0, c, args.n - c)]
    ok = True
    for loss in args.loss:
        kind = LOSS_ALIASES[loss]
        _, analytic = loss_and_grads(params, x, y, kind, args.delta)
        res = grad_check(
            lambda p: compute_loss(kind, forward(p, x), y, args.delta).value,
            params, analytic, epsilon=args.epsilon, tolerance=args.tolerance,
        )
        ok &= res.passed
        print(f"{kind:<11} {'PASS' if res.passed else 'FAIL'}  max rel error {res.max_rel_error:.3e} "
              f"over {res.n_checked} coordinates")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcauc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write synthetic train/val/test CSV files")
    _add_synthetic_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model, fit its calibrator, write model.json")
    p.add_argument("--data", help="directory with train.csv and val.csv (default: synthetic)")
    _add_synthetic_args(p)
    _add_train_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model document on a CSV dataset")
    p.add_argument("--model", required=True, help="model.json written by 'train'")
    p.add_argument("--data", required=True, help="CSV file to evaluate on")
    p.add_argument("--out", help="directory for eval.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="repeated comparison of loss kinds")
    p.add_argument("--data", help="directory with train/val/test CSV files (default: synthetic, redrawn per run)")
    _add_synthetic_args(p)
    _add_train_args(p, multi_loss=True)
    p.add_argument("--repeats", type=int, default=10, help="runs per loss kind; run r uses seed+r")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("grad-check", help="finite-difference check of the end-to-end gradients")
    p.add_argument("--loss", nargs="+", choices=list(LOSS_ALIASES), default=list(LOSS_ALIASES))
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--dims", type=int, default=5)
    p.add_argument("--hidden", type=int, nargs="+", default=[8])
    p.add_argument("--n", type=int, default=16, help="batch size")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"mcauc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
