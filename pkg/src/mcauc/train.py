"""Adam, the exponential learning-rate schedule, minibatching and the training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .losses import (
    DEFAULT_DELTA,
    LOSS_KINDS,
    DegenerateBatchError,
    LossValueAndGrad,
    aauc_ovo_loss,
    aauc_ovr_loss,
    softmax_ce_loss,
)
from .model import MlpParams, backward, forward, init_params

log = logging.getLogger(__name__)


class LossStarvedError(RuntimeError):
    """Every minibatch of an epoch was too degenerate to produce a loss."""


@dataclass(frozen=True)
class TrainConfig:
    loss_kind: str = "softmax_ce"
    delta: float = DEFAULT_DELTA
    epochs: int = 20
    batch_size: int = 64
    lr_start: float = 1e-3
    lr_end: float = 1e-4
    seed: int = 0
    stratified_batches: bool | None = None
    hidden: tuple[int, ...] = (32, 32)

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if not (self.lr_start >= self.lr_end > 0):
            raise ValueError("need lr_start >= lr_end > 0")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError("delta must be positive and finite")

    @property
    def stratified(self) -> bool:
        # AUC losses need both sides of every pair in each batch
        if self.stratified_batches is None:
            return self.loss_kind != "softmax_ce"
        return self.stratified_batches


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """Geometric interpolation from ``lr_start`` (first epoch) to ``lr_end`` (last)."""
    if not 0 <= epoch < config.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {config.epochs})")
    if epoch == 0 or config.epochs == 1:
        return config.lr_start
    if epoch == config.epochs - 1:
        return config.lr_end
    ratio = config.lr_end / config.lr_start
    return config.lr_start * ratio ** (epoch / (config.epochs - 1))


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: MlpParams, **kw) -> "AdamState":
        t = params.tensors()
        return cls(tuple(np.zeros_like(a) for a in t), tuple(np.zeros_like(a) for a in t), **kw)


def adam_step(state: AdamState, params: MlpParams, grads, lr: float) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    tensors = params.tensors()
    names = params.tensor_names()
    if len(grads) != len(tensors):
        raise ValueError(f"expected {len(tensors)} gradient tensors, got {len(grads)}")
    for name, p, g in zip(names, tensors, grads):
        if g.shape != p.shape:
            raise ValueError(f"gradient {name} has shape {g.shape}, parameter has {p.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in tensor {name}")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(tensors, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return params.with_tensors(new_p), replace(state, m=tuple(new_m), v=tuple(new_v), step=t)


def make_batches(n: int, labels, batch_size: int, seed: int, stratified: bool = False) -> list[np.ndarray]:
    """Partition ``range(n)`` into ``ceil(n / batch_size)`` shuffled minibatches.

    Stratified mode deals each class's shuffled indices round-robin over the
    batches, so every class with at least as many examples as there are
    batches appears in every batch.
    """
    if batch_size > n:
        raise ValueError(f"batch_size {batch_size} exceeds dataset size {n}")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    rng = np.random.default_rng(seed)
    n_batches = math.ceil(n / batch_size)
    if not stratified:
        perm = rng.permutation(n)
        return [perm[k * batch_size:(k + 1) * batch_size] for k in range(n_batches)]
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError("labels must have length n")
    dealt = np.concatenate([rng.permutation(np.flatnonzero(y == k)) for k in np.unique(y)])
    batches = [dealt[k::n_batches] for k in range(n_batches)]
    return [rng.permutation(batches[k]) for k in rng.permutation(n_batches)]


def compute_loss(kind: str, cache, labels, delta: float) -> LossValueAndGrad:
    if kind == "softmax_ce":
        return softmax_ce_loss(cache.logits, labels)
    if kind == "aauc_ovo":
        return aauc_ovo_loss(cache.scores, labels, delta)
    if kind == "aauc_ovr":
        return aauc_ovr_loss(cache.scores, labels, delta)
    raise ValueError(f"unknown loss kind {kind!r}")


def loss_and_grads(params: MlpParams, x, y, kind: str, delta: float = DEFAULT_DELTA):
    """Loss value and parameter gradients for one batch."""
    cache = forward(params, x)
    res = compute_loss(kind, cache, y, delta)
    if kind == "softmax_ce":
        grads = backward(params, cache, grad_logits=res.grad)
    else:
        grads = backward(params, cache, grad_scores=res.grad)
    return res.value, grads


def accuracy(params: MlpParams, x, y) -> float:
    scores = forward(params, x).scores
    return float(np.mean(np.argmax(scores, axis=1) == np.asarray(y)))


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    skipped_batches: list[int] = field(default_factory=list)
    best_epoch: int = -1

    def to_dict(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "val_accuracy": list(self.val_accuracy),
            "lr": list(self.lr),
            "skipped_batches": list(self.skipped_batches),
            "best_epoch": self.best_epoch,
        }


def train(train_set, val_set, config: TrainConfig, layer_sizes=None) -> tuple[MlpParams, TrainHistory]:
    """Train an MLP and return the parameters of the best validation-accuracy epoch.

    ``train_set`` and ``val_set`` are ``Dataset`` objects (or ``(X, y)``
    pairs).  ``layer_sizes`` defaults to ``(D, *config.hidden, c)``.
    Accuracy ties keep the earlier epoch.
    """
    x_tr, y_tr = _xy(train_set)
    x_va, y_va = _xy(val_set)
    c = _n_classes(train_set, y_tr, y_va)
    if x_tr.shape[1] != x_va.shape[1]:
        raise ValueError("train and validation feature dimensions differ")
    missing = sorted(set(range(c)) - set(np.unique(y_tr).tolist()))
    if missing:
        raise ValueError(f"classes {missing} absent from the training set")
    if layer_sizes is None:
        layer_sizes = (x_tr.shape[1], *config.hidden, c)
    if layer_sizes[0] != x_tr.shape[1] or layer_sizes[-1] != c:
        raise ValueError(f"layer sizes {tuple(layer_sizes)} inconsistent with D={x_tr.shape[1]}, c={c}")

    params = init_params(layer_sizes, config.seed)
    state = AdamState.zeros_like(params)
    history = TrainHistory()
    best_params, best_acc = params, -1.0
    n = x_tr.shape[0]
    batch_size = min(config.batch_size, n)
    for epoch in range(config.epochs):
        lr = lr_at_epoch(config, epoch)
        batches = make_batches(n, y_tr, batch_size, seed=config.seed * 100003 + epoch, stratified=config.stratified)
        losses, skipped = [], 0
        for idx in batches:
            try:
                value, grads = loss_and_grads(params, x_tr[idx], y_tr[idx], config.loss_kind, config.delta)
            except DegenerateBatchError:
                skipped += 1
                continue
            params, state = adam_step(state, params, grads, lr)
            losses.append(value)
        if not losses:
            raise LossStarvedError(
                f"epoch {epoch}: all {len(batches)} batches were degenerate; use stratified batching"
            )
        acc = accuracy(params, x_va, y_va)
        history.train_loss.append(float(np.mean(losses)))
        history.val_accuracy.append(acc)
        history.lr.append(lr)
        history.skipped_batches.append(skipped)
        if acc > best_acc:
            best_acc, best_params, history.best_epoch = acc, params, epoch
        log.debug("epoch %d lr %.3g loss %.5f val_acc %.4f", epoch, lr, history.train_loss[-1], acc)
    return best_params, history


def _xy(ds):
    if hasattr(ds, "features"):
        return np.asarray(ds.features, dtype=np.float64), np.asarray(ds.labels)
    x, y = ds
    return np.asarray(x, dtype=np.float64), np.asarray(y)


def _n_classes(ds, *label_arrays) -> int:
    names = getattr(ds, "class_names", None)
    if names:
        return len(names)
    return int(max(a.max() for a in label_arrays)) + 1
