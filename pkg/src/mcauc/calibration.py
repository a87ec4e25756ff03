"""Post-hoc multinomial logistic regression on classifier score vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import softmax_ce_loss


@dataclass(frozen=True)
class CalibratorParams:
    """Calibrated logits are ``scores @ weight.T + bias``."""

    weight: np.ndarray
    bias: np.ndarray

    @classmethod
    def identity(cls, c: int) -> "CalibratorParams":
        return cls(np.eye(c), np.zeros(c))

    @property
    def n_classes(self) -> int:
        return self.bias.size

    def logits(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=np.float64)
        if s.ndim != 2 or s.shape[1] != self.weight.shape[1]:
            raise ValueError(f"score width {s.shape[-1]} does not match calibrator width {self.weight.shape[1]}")
        return s @ self.weight.T + self.bias

    def to_dict(self) -> dict:
        return {"weight": self.weight.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "CalibratorParams":
        return cls(np.array(d["weight"], dtype=np.float64), np.array(d["bias"], dtype=np.float64))


def fit_calibrator(
    scores,
    labels,
    lr: float = 0.05,
    epochs: int = 200,
    batch_size: int = 32,
    seed: int = 0,
) -> CalibratorParams:
    """Plain minibatch SGD on softmax cross-entropy, starting from the identity map.

    SGD runs on per-column standardised scores (the map stays affine in the
    raw scores and is folded back at the end).  Softmax outputs of a lightly
    trained network vary over a few hundredths, and unscaled SGD needs
    thousands of epochs to grow weights of the required size.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 2 or y.shape != (s.shape[0],):
        raise ValueError("scores must be N x c with N labels")
    c = s.shape[1]
    missing = sorted(set(range(c)) - set(np.unique(y).tolist()))
    if missing:
        raise ValueError(f"classes {missing} missing from calibration data")
    if epochs == 0:
        return CalibratorParams.identity(c)
    mu = s.mean(axis=0)
    sd = s.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    z = (s - mu) / sd
    # identity in raw-score space: W_raw = W_z / sd, b_raw = b_z - W_raw @ mu
    w = np.diag(sd)
    b = mu.copy()
    rng = np.random.default_rng(seed)
    n = s.shape[0]
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start:start + batch_size]
            g = softmax_ce_loss(z[idx] @ w.T + b, y[idx]).grad
            w = w - lr * (g.T @ z[idx])
            b = b - lr * g.sum(axis=0)
    w_raw = w / sd
    return CalibratorParams(w_raw, b - w_raw @ mu)


def calibrate_predict(cal: CalibratorParams, scores) -> np.ndarray:
    """Argmax of the calibrated logits; ties go to the lowest class index."""
    return np.argmax(cal.logits(scores), axis=1)
