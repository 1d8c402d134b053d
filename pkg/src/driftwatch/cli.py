"""driftwatch command line: run policy comparisons, verify the entropy balance,
write toy fixtures.

Exit codes: 0 success, 1 runtime failure (or failed verification), 2 bad config.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import fplab
from .config import ConfigError, EntropyConfig, ExperimentConfig, load_json, parse_entropy, parse_experiment
from .core import make_rng
from .policies import PolicyRunResult, compare_policies
from .streams import StreamConfigError

log = logging.getLogger("driftwatch")

BUNDLED_CONFIGS = ("synthetic.json", "finance.json", "pageviews.json", "entropy_ou.json")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def write_run_outputs(exp: ExperimentConfig, results: list[PolicyRunResult], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    emit = set(exp.emit)
    for (name, _), res in zip(exp.policies, results):
        pdir = out / name
        pdir.mkdir(exist_ok=True)
        if "loss_series" in emit:
            write_csv(pdir / "loss_series.csv", ["step", "loss"], zip(res.steps, res.per_step_loss))
        if "cumulative_retrains" in emit:
            write_csv(pdir / "cumulative_retrains.csv", ["step", "count"], zip(res.steps, res.cumulative_retrains()))
        if "signal_series" in emit and res.signal:
            write_csv(pdir / "signal_series.csv", ["step", "signal", "z", "triggered"],
                      zip(res.steps, res.signal, res.z, res.triggered))
    if "pareto" in emit:
        write_csv(out / "pareto.csv", ["policy", "retrain_count", "retrain_fraction", "avg_loss"],
                  ([name, r.retrain_count, r.retrain_fraction, r.avg_loss] for (name, _), r in zip(exp.policies, results)))
    if "summary" in emit:
        write_json(out / "summary.json", {
            "policies": {name: {"policy": r.policy.value, **r.summary()} for (name, _), r in zip(exp.policies, results)},
            "config": exp.resolved(),
        })


def cmd_run(args) -> int:
    config_path = Path(args.config)
    exp = parse_experiment(load_json(config_path), config_path.parent, args.seed)
    out = Path(args.out or exp.output_dir or "driftwatch_out")
    try:
        results = compare_policies(exp.stream, [rc for _, rc in exp.policies])
    except StreamConfigError as exc:
        raise ConfigError("stream", str(exc)) from None
    write_run_outputs(exp, results, out)
    for (name, _), r in zip(exp.policies, results):
        print(f"{name:>14}  avg_loss={r.avg_loss:.4f}  retrains={r.retrain_count} ({100 * r.retrain_fraction:.1f}%)")
    print(f"wrote {out}")
    return 0


def _entropy_run(cfg: EntropyConfig, preset: str | None = None):
    grid, q = fplab.make_grid(
        preset or cfg.preset, cfg.n_cells, cfg.x_min, cfg.x_max, cfg.initial_mean, cfg.initial_std,
        cfg.shift, cfg.drift, cfg.diffusion, cfg.initial, cfg.reference,
    )
    dt_max = fplab.STABILITY_FACTOR * grid.dx**2 / float(grid.D.max())
    if cfg.dt is not None and cfg.dt > dt_max:
        raise ConfigError("dt", f"{cfg.dt} exceeds the stability bound {dt_max:.3e}")
    return fplab.simulate(grid, q, cfg.t_end, cfg.dt)


def cmd_verify_entropy(args) -> int:
    data = load_json(args.config)
    cfg = parse_entropy(data)
    out = Path(args.out or data.get("output_dir") or "driftwatch_verify")
    out.mkdir(parents=True, exist_ok=True)
    try:
        trace = _entropy_run(cfg)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(cfg.preset, str(exc)) from None
    idx = list(range(0, len(trace.t), cfg.record_every))
    if idx[-1] != len(trace.t) - 1:
        idx.append(len(trace.t) - 1)
    write_csv(out / "entropy_diagnostics.csv", ["t", "D_kl", "dDdt_flux", "sigma_tot", "q_hk", "mass"],
              ([trace.t[i], trace.D_kl[i], trace.dDdt_flux[i], trace.sigma_tot[i], trace.q_hk[i], trace.mass[i]] for i in idx))
    checks = fplab.run_checks(trace)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")

    # companion driven run: the mismatch may grow while production stays >= 0
    neq = _entropy_run(EntropyConfig(n_cells=cfg.n_cells, x_min=cfg.x_min, x_max=cfg.x_max,
                                     t_end=cfg.t_end, shift=cfg.shift), "ou_shifted")
    grows = bool(np.any(np.diff(neq.D_kl) > 0))
    print(f"INFO  nonequilibrium (ou_shifted): D_kl increases={grows}, min sigma_tot={neq.sigma_tot.min():.3e}")

    write_json(out / "verify_summary.json", {
        "config": cfg.resolved(),
        "dt": trace.dt,
        "steps": len(trace.t) - 1,
        "checks": {c.name: {"passed": bool(c.passed), "detail": c.detail} for c in checks},
        "nonequilibrium": {"D_kl_increases": grows, "min_sigma_tot": float(neq.sigma_tot.min())},
    })
    return 0 if all(c.passed for c in checks) else 1


# ---------------------------------------------------------------- fixtures


def toy_prices(n: int = 600, seed: int = 7) -> list[float]:
    rng = make_rng(seed)
    rets = 0.0003 + 0.01 * rng.standard_normal(n)
    # slow volatility regime change gives the stream some drift
    rets *= np.linspace(0.7, 1.8, n)
    close = 100.0 * np.cumprod(1.0 + rets)
    return [round(float(c), 2) for c in close]


def toy_views(n: int = 600, seed: int = 11) -> list[int]:
    rng = make_rng(seed)
    t = np.arange(n)
    level = 8.0 + 0.4 * np.tanh((t - 0.6 * n) / 80.0) + 0.25 * np.sin(2 * np.pi * t / 7.0)
    return [int(v) for v in np.round(np.exp(level + 0.3 * rng.standard_normal(n)))]


def _dates(n: int, start=dt.date(2020, 1, 1)) -> list[str]:
    return [(start + dt.timedelta(days=i)).isoformat() for i in range(n)]


def gen_fixtures(out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    prices, views = toy_prices(), toy_views()
    written = []
    with (out / "finance.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        w.writerows(zip(_dates(len(prices)), [f"{p:.2f}" for p in prices]))
    with (out / "pageviews.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "views"])
        w.writerows(zip(_dates(len(views)), views))
    written += [out / "finance.csv", out / "pageviews.csv"]
    pkg = resources.files("driftwatch") / "configs"
    for name in BUNDLED_CONFIGS:
        (out / name).write_text((pkg / name).read_text())
        written.append(out / name)
    return written


def cmd_gen_fixtures(args) -> int:
    for path in gen_fixtures(Path(args.out)):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driftwatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compare retraining policies on one stream")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-entropy", help="check the entropy balance on a 1-D Fokker-Planck run")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_entropy)

    p = sub.add_parser("gen-fixtures", help="write toy CSVs and example configs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"driftwatch: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        log.debug("run failed", exc_info=True)
        print(f"driftwatch: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
