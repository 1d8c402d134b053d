"""EWMA mean/variance tracker with a one-sided standardized trigger.

For a scalar signal ``s_t`` and smoothing ``alpha = 1 - 2 ** (-1 / h)``::

    mu_t = (1 - alpha) * mu_{t-1} + alpha * s_t
    v_t  = (1 - alpha) * v_{t-1}  + alpha * (s_t - mu_t) ** 2
    z_t  = (s_t - mu_t) / (sqrt(v_t) + eps)

The variance update uses the already-updated mean. An alarm fires when
``z_t > k`` strictly and the warmup window has passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class EwmaConfig:
    half_life: float = 50.0
    k: float = 2.0
    epsilon: float = 1e-12
    warmup_steps: int = 10
    reset_on_trigger: bool = True

    def __post_init__(self):
        for name in ("half_life", "k", "epsilon"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"ewma.{name} must be a positive finite number, got {val!r}")
        if isinstance(self.warmup_steps, bool) or int(self.warmup_steps) != self.warmup_steps or self.warmup_steps < 0:
            raise ValueError(f"ewma.warmup_steps must be a nonnegative integer, got {self.warmup_steps!r}")

    @property
    def alpha(self) -> float:
        return smoothing_from_half_life(self.half_life)


def smoothing_from_half_life(half_life: float) -> float:
    return 1.0 - 2.0 ** (-1.0 / half_life)


@dataclass(frozen=True)
class EwmaState:
    """Running EWMA statistics. ``steps_seen == 0`` means uninitialized."""

    config: EwmaConfig = field(default_factory=EwmaConfig)
    mu: float = 0.0
    v: float = 0.0
    steps_seen: int = 0


def ewma_update(state: EwmaState, s: float) -> tuple[EwmaState, float, bool]:
    """Fold one observation into the EWMA and test for an alarm.

    The first observation after construction or reset initializes
    ``mu = s`` and ``v = 0`` (so ``z = 0``).
    """
    s = float(s)
    if not math.isfinite(s):
        raise ValueError(f"EWMA signal must be finite, got {s!r}")
    cfg = state.config
    if state.steps_seen == 0:
        mu, v = s, 0.0
    else:
        a = cfg.alpha
        mu = (1.0 - a) * state.mu + a * s
        v = (1.0 - a) * state.v + a * (s - mu) ** 2
    z = (s - mu) / (math.sqrt(v) + cfg.epsilon)
    triggered = z > cfg.k and state.steps_seen >= cfg.warmup_steps
    return EwmaState(cfg, mu, v, state.steps_seen + 1), z, triggered


def ewma_reset(state: EwmaState) -> EwmaState:
    return replace(state, mu=0.0, v=0.0, steps_seen=0)


def run_ewma(signal, config: EwmaConfig | None = None) -> tuple[list[float], list[bool]]:
    """Feed a whole signal through a fresh tracker, no resets.

    Returns the z series and the trigger flags.
    """
    state = EwmaState(config or EwmaConfig())
    zs, flags = [], []
    for s in signal:
        state, z, hit = ewma_update(state, s)
        zs.append(z)
        flags.append(hit)
    return zs, flags
