"""Product-Gaussian KDE and the plug-in KL estimator used as a drift signal.

The estimator compares a KDE fitted on the current fit batch against a
reference KDE, averaging log-density differences over the fit points
themselves:

    D_hat = mean_i( log p_hat(x_i) - log q_ref(x_i) )

It is not clipped at zero. Finite-sample error can make it slightly negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BANDWIDTH_FLOOR = 1e-3
LOG_DENSITY_FLOOR = math.log(1e-300)
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class KdeModel:
    samples: np.ndarray  # (m, d)
    bandwidths: np.ndarray  # (d,)

    @property
    def sample_count(self) -> int:
        return self.samples.shape[0]

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    def log_density(self, x) -> float | np.ndarray:
        return log_density(self, x)


def scott_bandwidths(points: np.ndarray) -> np.ndarray:
    """Per-dimension Scott's rule, ``sigma_j * m ** (-1 / (d + 4))``.

    ``sigma_j`` is the sample (ddof=1) standard deviation. Bandwidths are
    floored at ``BANDWIDTH_FLOOR``; this covers zero-spread dimensions, the
    single-point case, and constant columns whose std is round-off.
    """
    m, d = points.shape
    if m > 1:
        sigma = points.std(axis=0, ddof=1)
    else:
        sigma = np.zeros(d)
    h = sigma * m ** (-1.0 / (d + 4))
    return np.maximum(h, BANDWIDTH_FLOOR)


def fit_kde(points) -> KdeModel:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"fit_kde needs a non-empty (m, d) matrix, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("fit_kde got non-finite sample values")
    samples = pts.copy()
    samples.setflags(write=False)
    bw = scott_bandwidths(samples)
    bw.setflags(write=False)
    return KdeModel(samples=samples, bandwidths=bw)


def _as_queries(model: KdeModel, x) -> tuple[np.ndarray, bool]:
    q = np.asarray(x, dtype=float)
    single = q.ndim == 1
    if single:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != model.dimension:
        raise ValueError(
            f"query dimension {q.shape[-1] if q.ndim else 0} does not match KDE dimension {model.dimension}"
        )
    if not np.all(np.isfinite(q)):
        raise ValueError("log_density got non-finite query values")
    return q, single


def log_density(model: KdeModel, x) -> float | np.ndarray:
    """Log of the KDE density at ``x``.

    ``x`` may be one point of length ``d`` (returns a float) or an ``(n, d)``
    matrix (returns an array of ``n`` values). Evaluation runs in log space and
    is floored at ``log(1e-300)``.
    """
    q, single = _as_queries(model, x)
    h = model.bandwidths
    d = model.dimension
    log_norm = -0.5 * d * _LOG_2PI - float(np.sum(np.log(h))) - math.log(model.sample_count)
    # (n, m) squared Mahalanobis distances, one kernel per stored sample
    u = (q[:, None, :] - model.samples[None, :, :]) / h
    expo = -0.5 * np.einsum("nmd,nmd->nm", u, u)
    top = expo.max(axis=1)
    lse = top + np.log(np.exp(expo - top[:, None]).sum(axis=1))
    out = np.maximum(lse + log_norm, LOG_DENSITY_FLOOR)
    return float(out[0]) if single else out


def kl_terms(p_hat: KdeModel, q_ref: KdeModel, fit_points) -> np.ndarray:
    """Per-point summands ``log p_hat(x_i) - log q_ref(x_i)``."""
    pts = np.asarray(fit_points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError(f"fit_points must be a non-empty (n, d) matrix, got shape {pts.shape}")
    if not p_hat.dimension == q_ref.dimension == pts.shape[1]:
        raise ValueError(
            f"dimension mismatch: p_hat {p_hat.dimension}, q_ref {q_ref.dimension}, points {pts.shape[1]}"
        )
    return log_density(p_hat, pts) - log_density(q_ref, pts)


def kl_estimate(p_hat: KdeModel, q_ref: KdeModel, fit_points) -> float:
    return float(np.mean(kl_terms(p_hat, q_ref, fit_points)))
