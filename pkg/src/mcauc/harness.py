"""Repeated train/calibrate/evaluate experiments and their report files."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .calibration import calibrate_predict, fit_calibrator
from .data import Dataset, SyntheticSpec, apply_minmax, fit_minmax, gen_synthetic, load_dataset
from .model import predict_scores
from .train import TrainConfig, train

log = logging.getLogger(__name__)

RECALL_GRID = np.linspace(0.0, 1.0, 101)
REPORT_FORMAT = "mcauc-report"


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    losses: tuple[str, ...] = ("softmax_ce", "aauc_ovo", "aauc_ovr")
    repeats: int = 10
    base_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    synthetic: SyntheticSpec | None = field(default_factory=lambda: SyntheticSpec(separation=1.5))
    data_files: tuple[str, str, str] | None = None
    normalize: bool = True
    calibrator_lr: float = 0.05
    calibrator_epochs: int = 200
    calibrator_batch: int = 32

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if (self.synthetic is None) == (self.data_files is None):
            raise ValueError("give exactly one of a synthetic spec or data files")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["losses"] = list(self.losses)
        return d


@dataclass
class LossSummary:
    runs: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]
    pr_curves: dict[str, dict[str, list[float]]]
    best_epochs: list[int]

    @classmethod
    def from_runs(cls, runs, curves, best_epochs) -> "LossSummary":
        names = list(runs[0])
        mean = {k: float(np.mean([r[k] for r in runs])) for k in names}
        std = {k: float(np.std([r[k] for r in runs])) for k in names}
        c = len(curves[0])
        avg = {}
        for k in range(c):
            avg[str(k)] = {
                "recall": RECALL_GRID.tolist(),
                "precision": np.mean([cv[k][0] for cv in curves], axis=0).tolist(),
                "threshold": np.mean([cv[k][1] for cv in curves], axis=0).tolist(),
            }
        return cls(runs, mean, std, avg, list(best_epochs))


@dataclass
class ExperimentSummary:
    provenance: dict
    results: dict[str, LossSummary]

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "provenance": self.provenance,
            "results": {k: asdict(v) for k, v in self.results.items()},
            "comparison": self.comparison(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSummary":
        if d.get("format") != REPORT_FORMAT:
            raise ValueError("not an experiment report")
        return cls(d["provenance"], {k: LossSummary(**v) for k, v in d["results"].items()})

    def comparison(self) -> dict:
        """Mean differences of the ranking metrics between loss kinds (reported, not asserted)."""
        out = {}
        kinds = list(self.results)
        for a in kinds:
            for b in kinds:
                if a >= b:
                    continue
                out[f"{a}-{b}"] = {
                    m: self.results[a].mean[m] - self.results[b].mean[m]
                    for m in ("auc_ovo", "auc_ovr", "avg_pr_auc", "accuracy")
                }
        return out


def _load_splits(config: ExperimentConfig, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    if config.synthetic is not None:
        splits = gen_synthetic(replace(config.synthetic, seed=seed))
    else:
        tr = load_dataset(config.data_files[0])
        c = tr.n_classes
        splits = (tr, *(load_dataset(p, n_classes=c) for p in config.data_files[1:]))
        c = max(s.n_classes for s in splits)
        for s in splits:
            s.class_names = [str(k) for k in range(c)]
    if config.normalize:
        norm = fit_minmax(splits[0])
        splits = tuple(apply_minmax(norm, s) for s in splits)
    return splits


def run_single(config: ExperimentConfig, loss_kind: str, run_index: int):
    """Train, calibrate and evaluate one (loss, repeat) cell."""
    seed = config.base_seed + run_index
    tr, va, te = _load_splits(config, seed)
    tcfg = replace(config.train, loss_kind=loss_kind, seed=seed)
    params, history = train(tr, va, tcfg)
    cal = fit_calibrator(
        predict_scores(params, va.features),
        va.labels,
        lr=config.calibrator_lr,
        epochs=config.calibrator_epochs,
        batch_size=config.calibrator_batch,
        seed=seed,
    )
    scores = predict_scores(params, te.features)
    pred = calibrate_predict(cal, scores)
    report = metrics.evaluate(scores, pred, te.labels)
    flat = {
        "auc_ovo": report.auc_ovo,
        "auc_ovr": report.auc_ovr,
        "avg_pr_auc": report.avg_pr_auc,
        "accuracy": report.accuracy,
    }
    for k in range(scores.shape[1]):
        flat[f"precision_{k}"] = float(report.precision[k])
        flat[f"recall_{k}"] = float(report.recall[k])
        flat[f"f1_{k}"] = float(report.f1[k])
    curves = []
    for k in range(scores.shape[1]):
        curve = metrics.pr_curve(scores[:, k], te.labels == k)
        curves.append(
            (metrics.interpolated_precision(curve, RECALL_GRID), metrics.threshold_at_recall(curve, RECALL_GRID))
        )
    return flat, curves, history.best_epoch


def _run_cell(args):
    config, loss_kind, r = args
    try:
        return run_single(config, loss_kind, r)
    except Exception as exc:
        raise ExperimentError(f"run {r} ({loss_kind}) failed: {exc}") from exc


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    """Every loss kind on every repeat; repeat ``r`` uses seed ``base_seed + r`` for all losses."""
    tasks = [(config, k, r) for k in config.losses for r in range(config.repeats)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_cell, tasks))
    else:
        outputs = [_run_cell(t) for t in tasks]
    results = {}
    for i, k in enumerate(config.losses):
        cell = outputs[i * config.repeats:(i + 1) * config.repeats]
        results[k] = LossSummary.from_runs([o[0] for o in cell], [o[1] for o in cell], [o[2] for o in cell])
        log.info("%s: auc_ovo %.4f +- %.4f", k, results[k].mean["auc_ovo"], results[k].std["auc_ovo"])
    provenance = {"repeats": config.repeats, "base_seed": config.base_seed, "config": config.to_dict()}
    # normalise tuples to lists so a parsed report compares equal
    provenance = json.loads(json.dumps(provenance))
    return ExperimentSummary(provenance, results)


def emit_report(summary: ExperimentSummary, path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(summary.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def load_report(path) -> ExperimentSummary:
    return ExperimentSummary.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def emit_pr_points(summary: ExperimentSummary, out_dir) -> list[Path]:
    """One ``pr_points_<loss>.csv`` per loss kind with ``class,threshold,recall,precision`` rows."""
    out_dir = Path(out_dir)
    written = []
    for kind, res in summary.results.items():
        path = out_dir / f"pr_points_{kind}.csv"
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["class", "threshold", "recall", "precision"])
                for cls, curve in res.pr_curves.items():
                    for t, r, p in zip(curve["threshold"], curve["recall"], curve["precision"]):
                        w.writerow([cls, repr(t), repr(r), repr(p)])
        except OSError as exc:
            raise OSError(f"cannot write PR points to {path}: {exc}") from exc
        written.append(path)
    return written


def format_table(summary: ExperimentSummary) -> str:
    """Plain-text mean +- std table of the headline metrics."""
    cols = ("auc_ovo", "auc_ovr", "avg_pr_auc", "accuracy")
    lines = ["loss".ljust(12) + "".join(c.rjust(20) for c in cols)]
    for kind, res in summary.results.items():
        cells = "".join(f"{res.mean[c]:.4f} +- {res.std[c]:.4f}".rjust(20) for c in cols)
        lines.append(kind.ljust(12) + cells)
    return "\n".join(lines)
