"""Retraining policies and the prequential loop that runs them.

Each evaluated step scores the eval split with the current classifier first,
then lets the policy decide whether to retrain. Retraining always uses the
rolling window of the last ``window_steps`` full batches, current step
included, and never refits the normalizer.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .alarm import EwmaConfig, EwmaState, ewma_reset, ewma_update
from .core import DEFAULT_SEED, DriftStream, StreamBatch, check_seed, pool_features, split_batch
from .density import KdeModel, fit_kde, kl_estimate
from .model import LinearClassifier, Normalizer, TrainConfig, fit_normalizer, log_loss, train_on_batches
from .streams import make_stream


class PolicyKind(str, enum.Enum):
    NEVER = "never"
    EVERY_STEP = "every_step"
    ENTROPY = "entropy"
    PERFORMANCE = "performance"


@dataclass(frozen=True)
class RunConfig:
    policy: PolicyKind = PolicyKind.ENTROPY
    window_steps: int = 30
    init_steps: int = 30
    ewma: EwmaConfig = field(default_factory=EwmaConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    fit_fraction: float = 0.5
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind(self.policy))
        if self.window_steps < 1:
            raise ValueError(f"window_steps must be positive, got {self.window_steps}")
        if self.init_steps < 1:
            raise ValueError(f"init_steps must be positive, got {self.init_steps}")
        if not 0.0 < self.fit_fraction < 1.0:
            raise ValueError(f"fit_fraction must lie in (0, 1), got {self.fit_fraction}")
        check_seed(self.seed)


@dataclass
class PolicyRunResult:
    policy: PolicyKind
    steps: list[int]
    per_step_loss: list[float]
    retrain_steps: list[int]
    signal: list[float]
    z: list[float]
    triggered: list[bool]
    normalizer: Normalizer
    final_model: LinearClassifier
    reference: KdeModel | None = None

    @property
    def evaluated_steps(self) -> int:
        return len(self.per_step_loss)

    @property
    def avg_loss(self) -> float:
        return float(np.mean(self.per_step_loss))

    @property
    def retrain_count(self) -> int:
        return len(self.retrain_steps)

    @property
    def retrain_fraction(self) -> float:
        return self.retrain_count / self.evaluated_steps

    def cumulative_retrains(self) -> list[int]:
        done = set(self.retrain_steps)
        total, out = 0, []
        for s in self.steps:
            total += s in done
            out.append(total)
        return out

    def summary(self) -> dict:
        return {
            "avg_loss": self.avg_loss,
            "retrain_count": self.retrain_count,
            "retrain_fraction": self.retrain_fraction,
            "evaluated_steps": self.evaluated_steps,
        }


class StreamTooShortError(ValueError):
    pass


def _checked(stream):
    expected, dim = None, None
    for batch in stream:
        if expected is not None and batch.step_index != expected:
            raise ValueError(f"stream skipped from step {expected - 1} to {batch.step_index}")
        if dim is not None and batch.dimension != dim:
            raise ValueError(f"stream dimension changed from {dim} to {batch.dimension} at step {batch.step_index}")
        expected, dim = batch.step_index + 1, batch.dimension
        yield batch


def run_policy(stream: DriftStream, config: RunConfig) -> PolicyRunResult:
    it = _checked(stream)
    init: list[StreamBatch] = []
    for batch in it:
        init.append(batch)
        if len(init) == config.init_steps:
            break
    if len(init) < config.init_steps:
        raise StreamTooShortError(f"stream ended after {len(init)} steps; need init_steps + 1 = {config.init_steps + 1}")

    normalizer = fit_normalizer(pool_features(init))
    model = train_on_batches(init, normalizer, config.train)
    window: deque[StreamBatch] = deque(init[-config.window_steps :], maxlen=config.window_steps)
    kind = config.policy
    reference = fit_kde(pool_features(init)) if kind is PolicyKind.ENTROPY else None
    monitor = EwmaState(config.ewma)

    steps, losses, retrains = [], [], []
    signal, zs, flags = [], [], []
    for batch in it:
        fit, ev = split_batch(batch, config.fit_fraction)
        loss = log_loss(model, ev)
        steps.append(batch.step_index)
        losses.append(loss)
        window.append(batch)

        retrain = False
        if kind is PolicyKind.EVERY_STEP:
            retrain = True
        elif kind in (PolicyKind.ENTROPY, PolicyKind.PERFORMANCE):
            if kind is PolicyKind.ENTROPY:
                s = kl_estimate(fit_kde(fit.features), reference, fit.features)
            else:
                s = loss
            monitor, z, retrain = ewma_update(monitor, s)
            signal.append(s)
            zs.append(z)
            flags.append(retrain)

        if retrain:
            model = train_on_batches(window, normalizer, config.train)
            retrains.append(batch.step_index)
            if kind is PolicyKind.ENTROPY:
                reference = fit_kde(pool_features(window))
            if kind in (PolicyKind.ENTROPY, PolicyKind.PERFORMANCE) and config.ewma.reset_on_trigger:
                monitor = ewma_reset(monitor)

    if not losses:
        raise StreamTooShortError(f"stream has no steps after the {config.init_steps}-step initial window")
    return PolicyRunResult(
        policy=kind,
        steps=steps,
        per_step_loss=losses,
        retrain_steps=retrains,
        signal=signal,
        z=zs,
        triggered=flags,
        normalizer=normalizer,
        final_model=model,
        reference=reference,
    )


def compare_policies(stream_config, run_configs) -> list[PolicyRunResult]:
    """Run each policy on a freshly built, identically seeded stream."""
    run_configs = list(run_configs)
    if not run_configs:
        raise ValueError("compare_policies needs at least one run config")
    seeds = {rc.seed for rc in run_configs}
    if len(seeds) > 1:
        raise ValueError(f"run configs disagree on seed: {sorted(seeds)}")
    return [run_policy(make_stream(stream_config), rc) for rc in run_configs]


def default_run_configs(**overrides) -> list[RunConfig]:
    return [RunConfig(policy=kind, **overrides) for kind in PolicyKind]
