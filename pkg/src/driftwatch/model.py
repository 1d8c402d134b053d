"""Frozen z-score normalizer, logistic regression trainer, and log loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import StreamBatch

STD_FLOOR = 1e-8
PROB_CLIP = 1e-12


@dataclass(frozen=True, eq=False)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1e-4
    max_iters: int = 500
    learning_rate: float = 0.1
    grad_tol: float = 1e-6

    def __post_init__(self):
        if not (math.isfinite(self.l2) and self.l2 >= 0):
            raise ValueError(f"train.l2 must be a nonnegative finite number, got {self.l2!r}")
        if isinstance(self.max_iters, bool) or int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"train.max_iters must be a positive integer, got {self.max_iters!r}")
        for name in ("learning_rate", "grad_tol"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"train.{name} must be a positive finite number, got {val!r}")


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    weights: np.ndarray
    bias: float
    normalizer: Normalizer

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]


def fit_normalizer(window) -> Normalizer:
    """Per-column mean and population std, std floored at 1e-8."""
    x = np.asarray(window, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"normalizer needs at least 2 rows, got shape {x.shape}")
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    mean.setflags(write=False)
    std.setflags(write=False)
    return Normalizer(mean=mean, std=std)


def _sigmoid(a: np.ndarray) -> np.ndarray:
    # e^-a may overflow to inf for very negative a; 1 / inf is the right limit
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-a))


def objective(weights, bias: float, z: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean Bernoulli log loss (unclipped) plus ``l2 / 2 * |w|^2``."""
    a = z @ weights + bias
    # log(1 + e^a) - y * a, written to avoid overflow
    losses = np.logaddexp(0.0, a) - y * a
    return float(losses.mean() + 0.5 * l2 * np.dot(weights, weights))


def gradient(weights, bias: float, z: np.ndarray, y: np.ndarray, l2: float) -> tuple[np.ndarray, float]:
    resid = _sigmoid(z @ weights + bias) - y
    n = z.shape[0]
    return z.T @ resid / n + l2 * weights, float(resid.sum() / n)


def train_logistic(
    features,
    labels,
    normalizer: Normalizer,
    config: TrainConfig | None = None,
    trace: list | None = None,
) -> LinearClassifier:
    """Full-batch gradient descent from zero on the regularized log loss.

    ``features`` are raw (unnormalized) rows; the frozen ``normalizer`` is
    applied here and carried into the returned model unchanged. If ``trace``
    is given, the objective value before each update is appended to it.
    """
    cfg = config or TrainConfig()
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("cannot train on an empty window")
    if y.shape != (x.shape[0],):
        raise ValueError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
    if x.shape[1] != normalizer.mean.shape[0]:
        raise ValueError(f"features have {x.shape[1]} columns, normalizer expects {normalizer.mean.shape[0]}")
    z = normalizer.transform(x)
    w = np.zeros(x.shape[1])
    b = 0.0
    lr = cfg.learning_rate
    for _ in range(cfg.max_iters):
        gw, gb = gradient(w, b, z, y, cfg.l2)
        if max(float(np.max(np.abs(gw))), abs(gb)) < cfg.grad_tol:
            break
        if trace is not None:
            trace.append(objective(w, b, z, y, cfg.l2))
        w = w - lr * gw
        b = b - lr * gb
    if trace is not None:
        trace.append(objective(w, b, z, y, cfg.l2))
    w.setflags(write=False)
    return LinearClassifier(weights=w, bias=b, normalizer=normalizer)


def train_on_batches(batches, normalizer: Normalizer, config: TrainConfig | None = None) -> LinearClassifier:
    batches = list(batches)
    if not batches:
        raise ValueError("cannot train on an empty window")
    x = np.concatenate([b.features for b in batches], axis=0)
    y = np.concatenate([b.labels for b in batches], axis=0)
    return train_logistic(x, y, normalizer, config)


def predict_proba(model: LinearClassifier, x) -> float | np.ndarray:
    """Clipped sigmoid probability of label 1 for one row or a matrix of rows."""
    q = np.asarray(x, dtype=float)
    single = q.ndim == 1
    if single:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != model.dimension:
        raise ValueError(f"input dimension {q.shape[-1]} does not match model dimension {model.dimension}")
    if not np.all(np.isfinite(q)):
        raise ValueError("predict_proba got non-finite input")
    p = _sigmoid(model.normalizer.transform(q) @ model.weights + model.bias)
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(p[0]) if single else p


def log_loss(model: LinearClassifier, batch: StreamBatch) -> float:
    if batch.size == 0:
        raise ValueError("log loss needs a non-empty evaluation batch")
    p = predict_proba(model, batch.features)
    y = batch.labels
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log1p(-p))))
