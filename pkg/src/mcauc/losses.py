"""Differentiable AUC surrogates and the softmax cross-entropy baseline.

The approximated AUC replaces the pair indicator ``1[s+ > s-]`` by
``sigmoid(delta * (s+ - s-))``.  The multiclass losses compose it the same
way the exact metrics compose the pair-counting AUC, and every loss is
returned as a value to *minimise* (``1 - aAUC``) together with its gradient
with respect to the score matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .metrics import UndefinedMetricError

DEFAULT_DELTA = 10.0


class DegenerateBatchError(ValueError):
    """A minibatch holds too few classes for any AUC sub-term."""


@dataclass(frozen=True)
class LossValueAndGrad:
    value: float
    grad: np.ndarray


def stable_sigmoid(x: float) -> float:
    """Logistic function of a finite scalar without overflow."""
    if not math.isfinite(x):
        raise ValueError(f"sigmoid input must be finite, got {x!r}")
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Vectorised ``stable_sigmoid``."""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"sigmoid slope must be positive and finite, got {delta!r}")
    return delta


def _check_sets(pos, neg) -> tuple[np.ndarray, np.ndarray]:
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0:
        raise UndefinedMetricError("undefined AUC: positive (target) set is empty")
    if neg.size == 0:
        raise UndefinedMetricError("undefined AUC: negative (non-target) set is empty")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
        raise ValueError("AUC scores must be finite")
    return pos, neg


def aauc_binary(pos, neg, delta: float = DEFAULT_DELTA) -> float:
    """Mean of ``sigmoid(delta * (p - n))`` over all target/non-target pairs."""
    pos, neg = _check_sets(pos, neg)
    delta = _check_delta(delta)
    return float(np.mean(sigmoid(delta * (pos[:, None] - neg[None, :]))))


def aauc_binary_grad(pos, neg, delta: float = DEFAULT_DELTA) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of ``aauc_binary`` with respect to each target and non-target score."""
    pos, neg = _check_sets(pos, neg)
    delta = _check_delta(delta)
    _, g_pos, g_neg = _aauc_value_grad(pos, neg, delta)
    return g_pos, g_neg


def _aauc_value_grad(pos: np.ndarray, neg: np.ndarray, delta: float):
    sig = sigmoid(delta * (pos[:, None] - neg[None, :]))
    w = delta * sig * (1.0 - sig) / sig.size
    return float(np.mean(sig)), w.sum(axis=1), -w.sum(axis=0)


def _prepare(scores, labels, delta):
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] < 2:
        raise ValueError(f"score matrix must be N x c with c >= 2; got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("score matrix contains non-finite entries")
    y = np.asarray(labels)
    if y.shape != (s.shape[0],):
        raise ValueError(f"label vector shape {y.shape} does not match {s.shape[0]} score rows")
    if y.size and (y.min() < 0 or y.max() >= s.shape[1]):
        raise ValueError(f"labels must lie in [0, {s.shape[1]})")
    return s, y, _check_delta(delta)


def aauc_ovo_loss(scores, labels, delta: float = DEFAULT_DELTA) -> LossValueAndGrad:
    """``1 - aAUC_OVO`` over the class pairs present in the batch.

    Each present pair ``(i, j)`` contributes the mean of the directed terms
    ``aAUC(col i: C_i vs C_j)`` and ``aAUC(col j: C_j vs C_i)``; pairs with an
    absent class are dropped and the average renormalised.

    Raises
    ------
    DegenerateBatchError
        If fewer than two classes are present.
    """
    s, y, delta = _prepare(scores, labels, delta)
    present = [k for k in range(s.shape[1]) if np.any(y == k)]
    if len(present) < 2:
        raise DegenerateBatchError(f"degenerate batch: only classes {present} present")
    masks = {k: y == k for k in present}
    grad = np.zeros_like(s)
    total = 0.0
    n_pairs = 0
    for a, i in enumerate(present[:-1]):
        for j in present[a + 1:]:
            mi, mj = masks[i], masks[j]
            v_ij, gp, gn = _aauc_value_grad(s[mi, i], s[mj, i], delta)
            grad[mi, i] -= 0.5 * gp
            grad[mj, i] -= 0.5 * gn
            v_ji, gp, gn = _aauc_value_grad(s[mj, j], s[mi, j], delta)
            grad[mj, j] -= 0.5 * gp
            grad[mi, j] -= 0.5 * gn
            total += 0.5 * (v_ij + v_ji)
            n_pairs += 1
    return LossValueAndGrad(value=1.0 - total / n_pairs, grad=grad / n_pairs)


def aauc_ovr_loss(scores, labels, delta: float = DEFAULT_DELTA) -> LossValueAndGrad:
    """``1 - aAUC_OVR``: mean over usable classes of ``aAUC(col k: C_k vs rest)``.

    A class is usable when the batch holds at least one example inside and
    one outside it.
    """
    s, y, delta = _prepare(scores, labels, delta)
    usable = [k for k in range(s.shape[1]) if np.any(y == k) and np.any(y != k)]
    if len(usable) < 2:
        raise DegenerateBatchError(f"degenerate batch: {len(usable)} usable classes")
    grad = np.zeros_like(s)
    total = 0.0
    for k in usable:
        m = y == k
        v, gp, gn = _aauc_value_grad(s[m, k], s[~m, k], delta)
        grad[m, k] -= gp
        grad[~m, k] -= gn
        total += v
    n = len(usable)
    return LossValueAndGrad(value=1.0 - total / n, grad=grad / n)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(np.asarray(logits, dtype=np.float64)))


def softmax_ce_loss(logits, labels) -> LossValueAndGrad:
    """Mean softmax cross-entropy; the gradient is taken with respect to the logits."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"logits must be N x c, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits contain non-finite entries")
    y = np.asarray(labels)
    n = z.shape[0]
    logp = log_softmax(z)
    rows = np.arange(n)
    value = -float(np.mean(logp[rows, y]))
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    return LossValueAndGrad(value=value, grad=grad / n)


def pair_count_cost(c: int, mode: Literal["ovo", "ovr"]) -> int:
    """Number of binary aAUC terms one loss evaluation computes for ``c`` classes."""
    if c < 2:
        raise ValueError("need at least 2 classes")
    mode = mode.lower()
    if mode == "ovo":
        return c * (c - 1)
    if mode == "ovr":
        return c
    raise ValueError(f"unknown mode {mode!r}")


LOSS_KINDS = ("softmax_ce", "aauc_ovo", "aauc_ovr")
