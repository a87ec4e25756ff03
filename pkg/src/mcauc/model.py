"""Feed-forward tanh classifier with a softmax head and hand-written backprop."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .losses import log_softmax

FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpParams:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    seed: int | None = None

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def tensors(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def tensor_names(self) -> list[str]:
        names = []
        for k in range(len(self.weights)):
            names += [f"W{k}", f"b{k}"]
        return names

    def with_tensors(self, tensors: list[np.ndarray]) -> "MlpParams":
        return MlpParams(
            layer_sizes=self.layer_sizes,
            weights=tuple(tensors[0::2]),
            biases=tuple(tensors[1::2]),
            seed=self.seed,
        )


@dataclass
class ForwardCache:
    inputs: np.ndarray
    activations: list[np.ndarray] = field(default_factory=list)
    logits: np.ndarray | None = None
    scores: np.ndarray | None = None


def init_params(layer_sizes, seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    if min(sizes) < 1:
        raise ValueError(f"zero-sized layer in {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(sizes, tuple(weights), tuple(biases), seed=seed)


def forward(params: MlpParams, batch) -> ForwardCache:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.layer_sizes[0]:
        raise ValueError(f"batch shape {x.shape} does not match input size {params.layer_sizes[0]}")
    cache = ForwardCache(inputs=x)
    h = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = h @ w + b
        if k < last:
            h = np.tanh(a)
            cache.activations.append(h)
        else:
            cache.logits = a
    cache.scores = np.exp(log_softmax(cache.logits))
    return cache


def predict_scores(params: MlpParams, x) -> np.ndarray:
    return forward(params, x).scores


def softmax_backward(scores: np.ndarray, grad_scores: np.ndarray) -> np.ndarray:
    """Chain a gradient wrt softmax outputs back to the logits."""
    inner = np.sum(grad_scores * scores, axis=1, keepdims=True)
    return scores * (grad_scores - inner)


def backward(
    params: MlpParams,
    cache: ForwardCache,
    grad_scores: np.ndarray | None = None,
    grad_logits: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Parameter gradients, in the order of ``MlpParams.tensors()``.

    Pass exactly one upstream gradient: ``grad_scores`` (wrt softmax outputs,
    as the AUC losses produce) or ``grad_logits`` (as cross-entropy does).
    """
    if (grad_scores is None) == (grad_logits is None):
        raise ValueError("pass exactly one of grad_scores, grad_logits")
    if grad_scores is not None:
        g = np.asarray(grad_scores, dtype=np.float64)
        if g.shape != cache.scores.shape:
            raise ValueError(f"upstream gradient shape {g.shape} != scores shape {cache.scores.shape}")
        delta = softmax_backward(cache.scores, g)
    else:
        delta = np.asarray(grad_logits, dtype=np.float64)
        if delta.shape != cache.logits.shape:
            raise ValueError(f"upstream gradient shape {delta.shape} != logits shape {cache.logits.shape}")
    layer_inputs = [cache.inputs] + cache.activations
    grads: list[np.ndarray] = []
    for k in range(len(params.weights) - 1, -1, -1):
        h_in = layer_inputs[k]
        grads = [h_in.T @ delta, delta.sum(axis=0)] + grads
        if k > 0:
            delta = (delta @ params.weights[k].T) * (1.0 - h_in * h_in)
    return grads


@dataclass
class GradCheckReport:
    passed: bool
    max_rel_error: float
    n_checked: int
    worst_index: tuple[int, int] | None = None


def grad_check(
    loss_eval: Callable[[MlpParams], float],
    params: MlpParams,
    analytic: list[np.ndarray],
    epsilon: float = 1e-5,
    tolerance: float = 1e-4,
    max_coords: int | None = 400,
    seed: int = 0,
    floor: float = 1e-7,
) -> GradCheckReport:
    """Compare analytic gradients with central differences.

    At most ``max_coords`` coordinates (never fewer than 200) are sampled; all
    of them when the model is smaller.  The relative error of one coordinate is
    ``|a - n| / max(|a|, |n|, floor)``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tensors = params.tensors()
    coords = [(t, i) for t, arr in enumerate(tensors) for i in range(arr.size)]
    n_sample = None if max_coords is None else max(max_coords, 200)
    if n_sample is not None and len(coords) > n_sample:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(coords), size=n_sample, replace=False)
        coords = [coords[p] for p in sorted(pick)]
    worst, worst_at = 0.0, None
    for t, i in coords:
        numeric = _central_difference(loss_eval, params, tensors, t, i, epsilon)
        a = float(analytic[t].ravel()[i])
        err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        if err > worst:
            worst, worst_at = err, (t, i)
    return GradCheckReport(worst <= tolerance, worst, len(coords), worst_at)


def _central_difference(loss_eval, params, tensors, t, i, eps) -> float:
    vals = []
    for sign in (1.0, -1.0):
        bumped = [arr.copy() for arr in tensors]
        bumped[t].ravel()[i] += sign * eps
        v = loss_eval(params.with_tensors(bumped))
        if not math.isfinite(v):
            raise ValueError("loss evaluation returned a non-finite value")
        vals.append(v)
    return (vals[0] - vals[1]) / (2 * eps)


def params_to_dict(params: MlpParams) -> dict:
    return {
        "layer_sizes": list(params.layer_sizes),
        "activation": "tanh",
        "seed": params.seed,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def params_from_dict(d: dict) -> MlpParams:
    sizes = tuple(int(n) for n in d["layer_sizes"])
    weights = tuple(np.array(w, dtype=np.float64).reshape(a, b) for w, a, b in zip(d["weights"], sizes[:-1], sizes[1:]))
    biases = tuple(np.array(b, dtype=np.float64).reshape(n) for b, n in zip(d["biases"], sizes[1:]))
    return MlpParams(sizes, weights, biases, seed=d.get("seed"))


@dataclass
class ModelBundle:
    """Everything the model document holds."""

    params: MlpParams
    calibrator: object | None = None
    normalization: object | None = None
    provenance: dict = field(default_factory=dict)


def save_model(path, bundle: ModelBundle) -> None:
    """Write the model document (JSON; Python float repr keeps values exact)."""
    doc = {"format": "mcauc-model", "version": FORMAT_VERSION, "mlp": params_to_dict(bundle.params)}
    if bundle.calibrator is not None:
        doc["calibrator"] = bundle.calibrator.to_dict()
    if bundle.normalization is not None:
        doc["normalization"] = {
            "min": bundle.normalization.minimum.tolist(),
            "max": bundle.normalization.maximum.tolist(),
        }
    doc["provenance"] = bundle.provenance
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> ModelBundle:
    from .calibration import CalibratorParams
    from .data import NormalizationParams

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "mcauc-model":
        raise ValueError(f"{path}: not a model document")
    bundle = ModelBundle(params_from_dict(doc["mlp"]), provenance=doc.get("provenance", {}))
    if "calibrator" in doc:
        bundle.calibrator = CalibratorParams.from_dict(doc["calibrator"])
    if "normalization" in doc:
        norm = doc["normalization"]
        bundle.normalization = NormalizationParams(
            np.array(norm["min"], dtype=np.float64), np.array(norm["max"], dtype=np.float64)
        )
    return bundle
