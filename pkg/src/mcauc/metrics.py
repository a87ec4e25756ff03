"""Exact evaluation metrics.

Binary AUC by explicit pair counting (ties count one half), the
one-versus-one and one-versus-rest multiclass AUCs, per-class
precision/recall curves with step-rule average precision, and hard-decision
classification metrics.

Score matrices are ``(N, c)`` arrays where column ``i`` is the detector
score for class ``i``.  Every directed AUC between classes ``i`` and ``j``
is read off column ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class UndefinedMetricError(ValueError):
    """A metric was requested on inputs for which it is not defined."""


class EmptyClassError(UndefinedMetricError):
    """A class required by a multiclass metric has no examples."""

    def __init__(self, cls: int):
        super().__init__(f"empty class: class {cls} has no examples")
        self.cls = cls


def _as_scores(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 2:
        raise ValueError(f"score matrix must be N x c with N >= 1, c >= 2; got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("score matrix contains non-finite entries")
    return s


def _as_labels(labels, n: int, c: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != n:
        raise ValueError(f"label vector length {y.shape} does not match {n} score rows")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= c):
        raise ValueError(f"labels must lie in [0, {c})")
    return y


def binary_auc(pos, neg) -> float:
    """AUC of target scores ``pos`` against non-target scores ``neg``.

    Every (target, non-target) pair is compared: a strictly higher target
    score counts 1, a tie counts 1/2.

    Raises
    ------
    UndefinedMetricError
        If either side is empty.
    """
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0:
        raise UndefinedMetricError("undefined AUC: positive (target) set is empty")
    if neg.size == 0:
        raise UndefinedMetricError("undefined AUC: negative (non-target) set is empty")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
        raise ValueError("AUC scores must be finite")
    d = pos[:, None] - neg[None, :]
    # integer counts keep the result identical to a loop oracle
    greater = int(np.count_nonzero(d > 0))
    ties = int(np.count_nonzero(d == 0))
    return (greater + 0.5 * ties) / (pos.size * neg.size)


def pairwise_auc_hat(scores, labels, i: int, j: int) -> float:
    """Symmetrised separability ``(AUC(C_i, C_j) + AUC(C_j, C_i)) / 2``.

    ``AUC(C_i, C_j)`` ranks class-``i`` against class-``j`` examples on
    score column ``i``.
    """
    s = _as_scores(scores)
    y = _as_labels(labels, s.shape[0], s.shape[1])
    if i == j:
        raise ValueError("pairwise AUC needs two distinct classes")
    return _auc_hat(s, y, i, j)


def _auc_hat(s: np.ndarray, y: np.ndarray, i: int, j: int) -> float:
    in_i = y == i
    in_j = y == j
    if not in_i.any():
        raise EmptyClassError(i)
    if not in_j.any():
        raise EmptyClassError(j)
    if i > j:
        i, j, in_i, in_j = j, i, in_j, in_i
    a_ij = binary_auc(s[in_i, i], s[in_j, i])
    a_ji = binary_auc(s[in_j, j], s[in_i, j])
    return 0.5 * (a_ij + a_ji)


def auc_ovo(scores, labels) -> float:
    """One-versus-one multiclass AUC: mean of ``pairwise_auc_hat`` over all class pairs."""
    s = _as_scores(scores)
    c = s.shape[1]
    y = _as_labels(labels, s.shape[0], c)
    for k in range(c):
        if not np.any(y == k):
            raise EmptyClassError(k)
    total = 0.0
    for i in range(c - 1):
        for j in range(i + 1, c):
            total += _auc_hat(s, y, i, j)
    return 2.0 * total / (c * (c - 1))


def auc_ovr(scores, labels) -> float:
    """One-versus-rest multiclass AUC: mean over classes of class-vs-complement AUC."""
    s = _as_scores(scores)
    c = s.shape[1]
    y = _as_labels(labels, s.shape[0], c)
    total = 0.0
    for k in range(c):
        mask = y == k
        if not mask.any():
            raise EmptyClassError(k)
        if mask.all():
            raise UndefinedMetricError(f"undefined AUC: class {k} has no complement examples")
        total += binary_auc(s[mask, k], s[~mask, k])
    return total / c


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall points in descending threshold order.

    The first point is the anchor ``(recall 0, precision 1)`` at threshold
    ``+inf``; the last point (lowest threshold) always has recall 1.
    """

    thresholds: np.ndarray
    recall: np.ndarray
    precision: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


def pr_curve(scores_col, binary_labels) -> PRCurve:
    """Sweep every distinct score as a ``score >= t`` threshold, highest first."""
    s = np.asarray(scores_col, dtype=np.float64).ravel()
    b = np.asarray(binary_labels, dtype=bool).ravel()
    if s.shape != b.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(b.sum())
    if n_pos == 0:
        raise UndefinedMetricError("undefined recall: no positive examples")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    tp = np.cumsum(b[order])
    fp = np.cumsum(~b[order])
    # last index of each run of tied scores
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    tp = tp[last]
    fp = fp[last]
    thresholds = np.r_[np.inf, s_sorted[last]]
    recall = np.r_[0.0, tp / n_pos]
    precision = np.r_[1.0, tp / (tp + fp)]
    return PRCurve(thresholds=thresholds, recall=recall, precision=precision)


def average_precision(curve: PRCurve) -> float:
    """Step-rule area: sum of recall increments times precision at each point."""
    return float(np.sum(np.diff(curve.recall) * curve.precision[1:]))


def macro_avg_ap(scores, labels) -> float:
    """Unweighted mean over classes of the one-vs-rest average precision."""
    s = _as_scores(scores)
    c = s.shape[1]
    y = _as_labels(labels, s.shape[0], c)
    aps = []
    for k in range(c):
        try:
            aps.append(average_precision(pr_curve(s[:, k], y == k)))
        except UndefinedMetricError as exc:
            raise EmptyClassError(k) from exc
    return float(np.mean(aps))


def interpolated_precision(curve: PRCurve, recall_grid) -> np.ndarray:
    """Highest precision reached at any recall >= each grid value.

    The ``+inf`` anchor is excluded, so grid recall 0 takes the best precision
    over the real operating points.
    """
    grid = np.asarray(recall_grid, dtype=np.float64)
    recall = curve.recall[1:]
    # running max from the high-recall end
    best = np.maximum.accumulate(curve.precision[1:][::-1])[::-1]
    idx = np.searchsorted(recall, grid, side="left")
    return best[np.minimum(idx, best.size - 1)]


def threshold_at_recall(curve: PRCurve, recall_grid) -> np.ndarray:
    """Highest real threshold whose recall reaches each grid value."""
    grid = np.asarray(recall_grid, dtype=np.float64)
    idx = np.searchsorted(curve.recall[1:], grid, side="left")
    thresholds = curve.thresholds[1:]
    return thresholds[np.minimum(idx, thresholds.size - 1)]


@dataclass
class MetricsReport:
    """Hard-decision metrics plus, when scores are given, the ranking metrics."""

    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    auc_ovo: float | None = None
    auc_ovr: float | None = None
    avg_pr_auc: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "auc_ovo": self.auc_ovo,
            "auc_ovr": self.auc_ovr,
            "avg_pr_auc": self.avg_pr_auc,
            "warnings": list(self.warnings),
        }


def confusion_matrix(pred, truth, c: int) -> np.ndarray:
    cm = np.zeros((c, c), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth), np.asarray(pred)), 1)
    return cm


def classification_report(pred, truth, c: int | None = None) -> MetricsReport:
    """Accuracy and per-class precision, recall and f1.

    A zero denominator yields 0 for that entry and a message in
    ``MetricsReport.warnings``.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {truth.shape} labels")
    if pred.size == 0:
        raise ValueError("no examples")
    if c is None:
        c = int(max(pred.max(), truth.max())) + 1
    cm = confusion_matrix(pred, truth, c)
    tp = np.diag(cm).astype(np.float64)
    n_pred = cm.sum(axis=0).astype(np.float64)
    n_true = cm.sum(axis=1).astype(np.float64)
    warnings = []
    precision = np.zeros(c)
    recall = np.zeros(c)
    f1 = np.zeros(c)
    for k in range(c):
        if n_pred[k] > 0:
            precision[k] = tp[k] / n_pred[k]
        else:
            warnings.append(f"class {k}: precision undefined (never predicted), set to 0")
        if n_true[k] > 0:
            recall[k] = tp[k] / n_true[k]
        else:
            warnings.append(f"class {k}: recall undefined (no true examples), set to 0")
        if precision[k] + recall[k] > 0:
            f1[k] = 2 * precision[k] * recall[k] / (precision[k] + recall[k])
        else:
            warnings.append(f"class {k}: f1 undefined, set to 0")
    accuracy = float(np.mean(pred == truth))
    return MetricsReport(accuracy=accuracy, precision=precision, recall=recall, f1=f1, warnings=warnings)


def evaluate(scores, pred, truth) -> MetricsReport:
    """Full report: hard-decision metrics for ``pred`` and ranking metrics for ``scores``."""
    s = _as_scores(scores)
    report = classification_report(pred, truth, c=s.shape[1])
    report.auc_ovo = auc_ovo(s, truth)
    report.auc_ovr = auc_ovr(s, truth)
    report.avg_pr_auc = macro_avg_ap(s, truth)
    return report
