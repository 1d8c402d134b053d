"""Shared stream types and seeded randomness.

Every stochastic component takes an explicit 64-bit seed and builds its own
``numpy.random.Generator`` from it, so equal seeds and configs give
bit-identical batches.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DEFAULT_SEED = 42
_MAX_SEED = 2**64 - 1


class DegenerateBatchError(ValueError):
    """Raised when a batch is too small for the requested operation."""


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StreamBatch:
    """One discrete time step: a feature block and its binary labels."""

    step_index: int
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels)
        if self.step_index < 0:
            raise ValueError(f"step_index must be nonnegative, got {self.step_index}")
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ValueError(f"non-finite feature values in batch {self.step_index}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ValueError(
                f"labels length {labels.shape} does not match {features.shape[0]} feature rows"
            )
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError(f"labels must be 0/1 in batch {self.step_index}")
        object.__setattr__(self, "step_index", int(self.step_index))
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]


class DriftStream(ABC):
    """A finite sequence of batches with consecutive step indices.

    Iterating a stream always starts from step 0; a fresh iteration replays
    the same batches.
    """

    @property
    @abstractmethod
    def dimension(self) -> int: ...

    @abstractmethod
    def __iter__(self) -> Iterator[StreamBatch]: ...


def split_batch(batch: StreamBatch, fit_fraction: float = 0.5) -> tuple[StreamBatch, StreamBatch]:
    """Split a batch into a prefix ``fit`` part and a suffix ``eval`` part.

    The fit part gets ``ceil(fit_fraction * n)`` rows, capped at ``n - 1`` so
    the eval part is never empty.
    """
    if not 0.0 < fit_fraction < 1.0:
        raise ValueError(f"fit_fraction must lie in (0, 1), got {fit_fraction}")
    n = batch.size
    if n < 2:
        raise DegenerateBatchError(f"batch {batch.step_index} has {n} row(s); need at least 2 to split")
    # tolerance keeps e.g. 0.1 * 30 from rounding up to 4
    n_fit = min(math.ceil(fit_fraction * n - 1e-9), n - 1)
    n_fit = max(n_fit, 1)
    fit = StreamBatch(batch.step_index, batch.features[:n_fit], batch.labels[:n_fit])
    ev = StreamBatch(batch.step_index, batch.features[n_fit:], batch.labels[n_fit:])
    return fit, ev


def pool_features(batches) -> np.ndarray:
    return np.concatenate([b.features for b in batches], axis=0)


def pool_labels(batches) -> np.ndarray:
    return np.concatenate([b.labels for b in batches], axis=0)
