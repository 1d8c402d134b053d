from collections import deque
from dataclasses import replace

import numpy as np
import pytest

import driftwatch.policies as policies
from driftwatch.alarm import EwmaConfig
from driftwatch.core import pool_features, split_batch
from driftwatch.density import fit_kde, kl_estimate
from driftwatch.model import fit_normalizer, log_loss, train_on_batches
from driftwatch.policies import (
    PolicyKind,
    RunConfig,
    StreamTooShortError,
    compare_policies,
    default_run_configs,
    run_policy,
)
from driftwatch.streams import SyntheticDriftConfig, synthetic_stream

SMALL = SyntheticDriftConfig(steps=60, batch_size=40, mean_velocity=(0.05, 0.02), boundary_rotation=0.03)


@pytest.fixture(scope="module")
def default_results():
    return dict(zip(PolicyKind, compare_policies(SyntheticDriftConfig(), default_run_configs())))


def test_stationary_never_close_to_every_step():
    cfg = SyntheticDriftConfig(mean_velocity=(0, 0), variance_growth=0, boundary_rotation=0)
    never, every = compare_policies(cfg, [RunConfig(PolicyKind.NEVER), RunConfig(PolicyKind.EVERY_STEP)])
    assert abs(never.avg_loss - every.avg_loss) <= 0.05


def test_every_step_retrains_each_step():
    res = run_policy(synthetic_stream(SMALL), RunConfig(PolicyKind.EVERY_STEP, init_steps=10, window_steps=5))
    assert res.retrain_steps == res.steps == list(range(10, 60))
    assert res.retrain_fraction == 1.0
    assert res.signal == []


def test_never_has_no_retrains(default_results):
    res = default_results[PolicyKind.NEVER]
    assert res.retrain_count == 0 and res.retrain_fraction == 0.0


def test_result_bookkeeping(default_results):
    for res in default_results.values():
        assert res.avg_loss == float(np.mean(res.per_step_loss))
        assert res.retrain_fraction == res.retrain_count / res.evaluated_steps
        assert set(res.retrain_steps) <= set(res.steps)
        assert all(b > a for a, b in zip(res.retrain_steps, res.retrain_steps[1:]))
        cum = res.cumulative_retrains()
        assert all(b - a in (0, 1) for a, b in zip(cum, cum[1:]))
        assert cum[-1] == res.retrain_count


def test_entropy_close_to_every_step(default_results):
    ent, every = default_results[PolicyKind.ENTROPY], default_results[PolicyKind.EVERY_STEP]
    assert abs(ent.avg_loss - every.avg_loss) <= 0.05
    assert ent.retrain_fraction < 0.5


def test_never_worse_than_entropy(default_results):
    assert default_results[PolicyKind.NEVER].avg_loss > default_results[PolicyKind.ENTROPY].avg_loss


def test_performance_signal_is_step_loss(default_results):
    res = default_results[PolicyKind.PERFORMANCE]
    assert res.signal == res.per_step_loss
    assert len(res.z) == len(res.triggered) == res.evaluated_steps


def test_policies_see_identical_batches(monkeypatch):
    seen = []

    def recording(cfg):
        log = []
        seen.append(log)

        class Rec:
            dimension = 2

            def __iter__(self):
                for b in synthetic_stream(cfg):
                    log.append(b)
                    yield b

        return Rec()

    monkeypatch.setattr(policies, "make_stream", recording)
    compare_policies(SMALL, default_run_configs(init_steps=10, window_steps=5))
    assert len(seen) == 4
    for other in seen[1:]:
        assert len(other) == len(seen[0])
        for a, b in zip(seen[0], other):
            assert a.features.tobytes() == b.features.tobytes() and a.labels.tobytes() == b.labels.tobytes()


def test_loss_recorded_before_retrain():
    cfg = RunConfig(PolicyKind.EVERY_STEP, init_steps=10, window_steps=4)
    res = run_policy(synthetic_stream(SMALL), cfg)
    batches = list(synthetic_stream(SMALL))
    norm = fit_normalizer(pool_features(batches[:10]))
    for t in (10, 11, 25, 59):
        if t == 10:
            model = train_on_batches(batches[:10], norm)
        else:
            model = train_on_batches(batches[max(0, t - 4) : t], norm)
        _, ev = split_batch(batches[t], 0.5)
        assert res.per_step_loss[res.steps.index(t)] == log_loss(model, ev)


def test_entropy_signal_replay():
    cfg = RunConfig(PolicyKind.ENTROPY, init_steps=10, window_steps=6, ewma=EwmaConfig(half_life=10, warmup_steps=3))
    res = run_policy(synthetic_stream(SMALL), cfg)
    assert res.retrain_count > 0
    batches = list(synthetic_stream(SMALL))
    ref = fit_kde(pool_features(batches[:10]))
    window = deque(batches[:10], maxlen=6)
    replayed = []
    for b in batches[10:]:
        fit, _ = split_batch(b, 0.5)
        window.append(b)
        replayed.append(kl_estimate(fit_kde(fit.features), ref, fit.features))
        if b.step_index in res.retrain_steps:
            ref = fit_kde(pool_features(window))
    assert replayed == res.signal


def test_normalizer_frozen_across_retrains():
    res = run_policy(synthetic_stream(SMALL), RunConfig(PolicyKind.EVERY_STEP, init_steps=10, window_steps=5))
    fresh = fit_normalizer(pool_features(list(synthetic_stream(SMALL))[:10]))
    assert res.retrain_count == 50
    assert res.final_model.normalizer is res.normalizer
    assert res.normalizer.mean.tobytes() == fresh.mean.tobytes()
    assert res.normalizer.std.tobytes() == fresh.std.tobytes()


def test_reset_flag_changes_behaviour():
    on = RunConfig(PolicyKind.ENTROPY, init_steps=10, window_steps=6, ewma=EwmaConfig(half_life=10, warmup_steps=3))
    off = replace(on, ewma=replace(on.ewma, reset_on_trigger=False))
    a, b = run_policy(synthetic_stream(SMALL), on), run_policy(synthetic_stream(SMALL), off)
    assert a.signal[0] == b.signal[0]
    assert a.retrain_steps[0] == b.retrain_steps[0]
    assert a.z != b.z


def test_stream_too_short():
    short = replace(SMALL, steps=10)
    with pytest.raises(StreamTooShortError):
        run_policy(synthetic_stream(short), RunConfig(PolicyKind.NEVER, init_steps=10))
    with pytest.raises(StreamTooShortError):
        run_policy(synthetic_stream(replace(SMALL, steps=5)), RunConfig(PolicyKind.NEVER, init_steps=10))


def test_run_is_deterministic():
    cfg = RunConfig(PolicyKind.ENTROPY, init_steps=10, window_steps=6)
    a, b = run_policy(synthetic_stream(SMALL), cfg), run_policy(synthetic_stream(SMALL), cfg)
    assert a.per_step_loss == b.per_step_loss and a.signal == b.signal and a.retrain_steps == b.retrain_steps


def test_compare_requires_shared_seed():
    with pytest.raises(ValueError, match="seed"):
        compare_policies(SMALL, [RunConfig(seed=1), RunConfig(seed=2)])


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(window_steps=0)
    with pytest.raises(ValueError):
        RunConfig(fit_fraction=1.0)
    with pytest.raises(ValueError):
        RunConfig(policy="daily")
