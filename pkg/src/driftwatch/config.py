"""JSON experiment configs: parsing, validation and full resolution.

A resolved config spells out every value, so writing it back out and running
it again reproduces the same outputs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .alarm import EwmaConfig
from .core import DEFAULT_SEED, check_seed
from .model import TrainConfig
from .policies import PolicyKind, RunConfig
from .streams import CsvStreamConfig, FeatureRecipe, StreamConfigError, SyntheticDriftConfig

EMIT_KINDS = ("loss_series", "cumulative_retrains", "signal_series", "pareto", "summary")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    stream: SyntheticDriftConfig | CsvStreamConfig
    policies: list[tuple[str, RunConfig]]
    seed: int = DEFAULT_SEED
    emit: tuple[str, ...] = EMIT_KINDS
    output_dir: str | None = None

    def resolved(self) -> dict:
        """Plain-JSON form with every default filled in (output_dir omitted)."""
        return {
            "seed": self.seed,
            "stream": stream_to_dict(self.stream),
            "policies": [{"name": name, **run_to_dict(rc)} for name, rc in self.policies],
            "emit": list(self.emit),
        }


def _check_keys(obj: dict, allowed, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(where, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}" if where else key, "unknown field")


def _build(cls, data: dict, where: str, **extra):
    names = {f.name for f in dataclasses.fields(cls)}
    _check_keys(data, names - set(extra), where)
    kwargs = dict(data)
    kwargs.update(extra)
    for f in dataclasses.fields(cls):
        if f.name in kwargs and f.type in ("int", int) and not _is_int(kwargs[f.name]):
            raise ConfigError(f"{where}.{f.name}", f"expected an integer, got {kwargs[f.name]!r}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        bad = next((k for k in kwargs if k in str(exc)), None)
        raise ConfigError(f"{where}.{bad}" if bad else where, str(exc)) from None


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _number(data: dict, key: str, where: str):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key}", f"expected a finite number, got {v!r}")
    return v


def parse_stream(data: dict, seed: int, base_dir: Path) -> SyntheticDriftConfig | CsvStreamConfig:
    if not isinstance(data, dict):
        raise ConfigError("stream", "expected an object")
    kind = data.get("kind", "synthetic")
    body = {k: v for k, v in data.items() if k != "kind"}
    if kind == "synthetic":
        for key in ("variance_growth", "boundary_rotation", "initial_std", "label_sharpness"):
            if key in body:
                _number(body, key, "stream")
        for key in ("mean_velocity", "initial_mean"):
            if key in body and (not isinstance(body[key], list) or len(body[key]) != 2):
                raise ConfigError(f"stream.{key}", "expected a list of two numbers")
        return _build(SyntheticDriftConfig, body, "stream", seed=seed)
    if kind == "csv":
        if "path" not in body:
            raise ConfigError("stream.path", "required for csv streams")
        path = Path(body["path"])
        if not path.is_absolute():
            path = (base_dir / path).resolve()
        body["path"] = str(path)
        if "feature_recipe" in body and body["feature_recipe"] not in [r.value for r in FeatureRecipe]:
            raise ConfigError("stream.feature_recipe", f"unknown recipe {body['feature_recipe']!r}")
        try:
            return _build(CsvStreamConfig, body, "stream")
        except StreamConfigError as exc:
            raise ConfigError("stream", str(exc)) from None
    raise ConfigError("stream.kind", f"unknown stream kind {kind!r} (expected 'synthetic' or 'csv')")


_RUN_KEYS = {"name", "policy", "window_steps", "init_steps", "fit_fraction", "ewma", "train"}


def parse_run(data, defaults: dict, seed: int, where: str) -> tuple[str, RunConfig]:
    if isinstance(data, str):
        data = {"policy": data}
    _check_keys(data, _RUN_KEYS, where)
    merged = {**defaults, **data}
    if "policy" not in merged:
        raise ConfigError(f"{where}.policy", "required")
    try:
        kind = PolicyKind(merged["policy"])
    except ValueError:
        choices = ", ".join(k.value for k in PolicyKind)
        raise ConfigError(f"{where}.policy", f"unknown policy {merged['policy']!r} (expected one of {choices})") from None
    ewma = _build(EwmaConfig, {**defaults.get("ewma", {}), **data.get("ewma", {})}, f"{where}.ewma")
    train = _build(TrainConfig, {**defaults.get("train", {}), **data.get("train", {})}, f"{where}.train")
    kwargs = {k: merged[k] for k in ("window_steps", "init_steps", "fit_fraction") if k in merged}
    rc = _build(RunConfig, kwargs, where, policy=kind, ewma=ewma, train=train, seed=seed)
    name = merged.get("name", kind.value)
    if not isinstance(name, str) or not name or "/" in name or name.startswith("."):
        raise ConfigError(f"{where}.name", f"invalid policy name {name!r}")
    return name, rc


def parse_experiment(data: dict, base_dir: Path = Path("."), seed_override: int | None = None) -> ExperimentConfig:
    _check_keys(data, {"seed", "stream", "defaults", "policies", "emit", "output_dir"}, "")
    seed = data.get("seed", DEFAULT_SEED) if seed_override is None else seed_override
    try:
        seed = check_seed(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError("seed", str(exc)) from None
    stream = parse_stream(data.get("stream", {"kind": "synthetic"}), seed, base_dir)
    defaults = data.get("defaults", {})
    _check_keys(defaults, _RUN_KEYS - {"name", "policy"}, "defaults")
    raw_policies = data.get("policies", [k.value for k in PolicyKind])
    if not isinstance(raw_policies, list) or not raw_policies:
        raise ConfigError("policies", "expected a non-empty list")
    policies = [parse_run(p, defaults, seed, f"policies[{i}]") for i, p in enumerate(raw_policies)]
    names = [n for n, _ in policies]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError("policies", f"duplicate policy names {dupes}; set distinct 'name' fields")
    emit = data.get("emit", list(EMIT_KINDS))
    if not isinstance(emit, list):
        raise ConfigError("emit", "expected a list")
    for e in emit:
        if e not in EMIT_KINDS:
            raise ConfigError("emit", f"unknown output kind {e!r}")
    output_dir = data.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a string")
    return ExperimentConfig(stream, policies, seed, tuple(e for e in EMIT_KINDS if e in emit), output_dir)


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return data


def stream_to_dict(cfg) -> dict:
    if isinstance(cfg, SyntheticDriftConfig):
        out = {"kind": "synthetic"}
        for f in dataclasses.fields(cfg):
            if f.name == "seed":
                continue
            v = getattr(cfg, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out
    return {
        "kind": "csv",
        "path": str(cfg.path),
        "feature_recipe": cfg.feature_recipe.value,
        "target_column": cfg.target_column,
        "rolling_window": cfg.rolling_window,
        "batch_size": cfg.batch_size,
    }


def run_to_dict(rc: RunConfig) -> dict:
    return {
        "policy": rc.policy.value,
        "window_steps": rc.window_steps,
        "init_steps": rc.init_steps,
        "fit_fraction": rc.fit_fraction,
        "ewma": dataclasses.asdict(rc.ewma),
        "train": dataclasses.asdict(rc.train),
    }


# ------------------------------------------------------------ verify-entropy


@dataclass
class EntropyConfig:
    preset: str = "ou"
    n_cells: int = 400
    x_min: float = -8.0
    x_max: float = 8.0
    t_end: float = 8.0
    dt: float | None = None
    initial_mean: float | None = None
    initial_std: float = 1.0
    shift: float = 1.0
    record_every: int = 25
    drift: list | None = None
    diffusion: list | None = None
    initial: list | None = None
    reference: list | None = None
    extra: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("extra")
        return out


def parse_entropy(data: dict) -> EntropyConfig:
    names = {f.name for f in dataclasses.fields(EntropyConfig)} - {"extra"}
    _check_keys(data, names | {"output_dir"}, "")
    data = {k: v for k, v in data.items() if k != "output_dir"}
    if data.get("preset", "ou") not in ("ou", "ou_shifted", "reversed", "custom"):
        raise ConfigError("preset", f"unknown preset {data['preset']!r} (expected ou, ou_shifted, reversed or custom)")
    for key in ("n_cells", "record_every"):
        if key in data and (not _is_int(data[key]) or data[key] < 1):
            raise ConfigError(key, f"expected a positive integer, got {data[key]!r}")
    for key in ("x_min", "x_max", "t_end", "initial_std", "shift"):
        if key in data:
            _number(data, key, "")
    for key in ("dt", "initial_mean"):
        if data.get(key) is not None:
            _number(data, key, "")
    cfg = EntropyConfig(**data)
    if cfg.x_max <= cfg.x_min:
        raise ConfigError("x_max", "must exceed x_min")
    if cfg.t_end <= 0:
        raise ConfigError("t_end", "must be positive")
    if cfg.dt is not None and cfg.dt <= 0:
        raise ConfigError("dt", "must be positive")
    if cfg.initial_std <= 0:
        raise ConfigError("initial_std", "must be positive")
    if cfg.preset == "custom":
        for key in ("drift", "diffusion"):
            table = getattr(cfg, key)
            if not isinstance(table, list) or len(table) != cfg.n_cells:
                raise ConfigError(key, f"custom preset needs a list of {cfg.n_cells} numbers")
    for key in ("drift", "diffusion", "initial", "reference"):
        table = getattr(cfg, key)
        if table is None:
            continue
        if not isinstance(table, list) or len(table) != cfg.n_cells:
            raise ConfigError(key, f"expected a list of {cfg.n_cells} numbers")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in table):
            raise ConfigError(key, "entries must be finite numbers")
    if cfg.diffusion is not None and min(cfg.diffusion) <= 0:
        raise ConfigError("diffusion", "entries must be strictly positive")
    if cfg.reference is not None and min(cfg.reference) <= 0:
        raise ConfigError("reference", "entries must be strictly positive")
    if cfg.initial is not None and (min(cfg.initial) < 0 or sum(cfg.initial) <= 0):
        raise ConfigError("initial", "entries must be nonnegative with positive sum")
    return cfg
