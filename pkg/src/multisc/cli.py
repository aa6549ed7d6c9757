"""Command-line surface: fit, att, cv, simulate, bench, replay.

Every command materializes its full configuration (defaults included) into
a run manifest next to its outputs; ``replay`` re-executes a manifest and
reproduces all non-timing outputs byte for byte.  Reports are JSON,
matrices and tables are CSV.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, baselines, effects, panel, simlab, solver
from .exceptions import MultiscError

_LAMBDA_POLICIES = ("cv", "fixed", "corollary")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: list[Path],
                    seed: int | None) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "input_digests": {str(p): _sha256(p) for p in inputs},
        "artifact_version": __version__,
        "seed": seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _load_panel(args) -> panel.PanelData:
    schema = {}
    for key in ("unit", "time", "outcome", "treated"):
        name = getattr(args, f"{key}_col")
        if name:
            schema[key] = name
    marker = args.t0_marker
    if marker is None:
        marker = panel.read_sidecar_marker(args.input)
    if marker is None:
        raise MultiscError(
            "no t0 marker: pass --t0-marker or provide a JSON sidecar")
    return panel.ingest_csv(args.input, schema or None, marker)


def _fit_weights(design, args):
    method = args.method
    if method == "msc":
        lam = _resolve_lambda(design, args)
        report = solver.fit(design, solver.MscConfig(lam=lam))
    else:
        config = baselines.BaselineConfig(
            method=method,
            lam=args.lam if args.lam is not None else 0.0,
            ridge=args.ridge,
        )
        report = baselines.fit_baseline(design, config)
    return report


def _resolve_lambda(design, args) -> float:
    if args.lambda_policy == "fixed":
        if args.lam is None:
            raise MultiscError("--lambda-policy fixed requires --lambda")
        return args.lam
    if args.lambda_policy == "corollary":
        return solver.default_lambda(design.n, design.t0)
    grid = _parse_grid(args.grid) if args.grid else [0.01 * k for k in range(1, 11)]
    best, _ = solver.cross_validate(design, grid, args.blocks,
                                    config=_cv_solver_config())
    return best


def _cv_solver_config() -> solver.MscConfig:
    # Penalty selection compares validation errors, which stabilize long
    # before the 1e-8 default; a capped budget keeps grids affordable.
    return solver.MscConfig(tol=1e-6, max_iter=2000)


def _parse_grid(text: str) -> list[float]:
    """Accepts '0.01,0.02,0.03' or 'start:stop:step' (inclusive stop)."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise MultiscError("grid step must be positive")
        count = int(round((stop - start) / step))
        return [round(start + k * step, 12) for k in range(count + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _write_weights_csv(path: Path, theta: np.ndarray, donors, treated) -> None:
    donors = list(donors) or [f"control_{i}" for i in range(theta.shape[0])]
    treated = list(treated) or [f"treated_{j}" for j in range(theta.shape[1])]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["donor", *treated])
        for i, donor in enumerate(donors):
            writer.writerow([donor, *[repr(v) for v in theta[i]]])


def _fit_report_payload(report) -> dict:
    return {
        "method": report.method,
        "lambda_used": report.lambda_used,
        "iterations": report.iterations,
        "converged": report.converged,
        "wall_clock_seconds": report.wall_clock_seconds,
        "objective_trace": list(report.objective_trace),
    }


def cmd_fit(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = _load_panel(args)
    design = panel.split(data)
    report = _fit_weights(design, args)
    _write_weights_csv(out_dir / "weights.csv", report.theta,
                       design.control_units, design.treated_units)
    (out_dir / "fit_report.json").write_text(
        json.dumps(_fit_report_payload(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    _write_manifest(out_dir, "fit", _config_dict(args), [Path(args.input)], None)
    return 0


def cmd_att(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = _load_panel(args)
    if data.t1 == 0:
        raise MultiscError("panel has no post-treatment periods; cannot estimate effects")
    design = panel.split(data)
    report = _fit_weights(design, args)
    predicted = effects.predict_counterfactual(report.theta, design.x_post)
    effect = effects.att(design.y_post, predicted)
    payload = {
        "att": effect.att,
        "att_per_period": effect.att_per_period.tolist(),
        "per_unit_effects": effect.per_unit_effects.tolist(),
        "counterfactuals": effect.counterfactuals.tolist(),
        "treated_units": list(design.treated_units),
        "fit": _fit_report_payload(report),
    }
    (out_dir / "effect_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out_dir, "att", _config_dict(args), [Path(args.input)], None)
    return 0


def cmd_cv(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = _load_panel(args)
    design = panel.split(data)
    grid = _parse_grid(args.grid)
    best, table = solver.cross_validate(design, grid, args.blocks,
                                        config=_cv_solver_config())
    with (out_dir / "cv_table.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["lambda", "validation_rmse"])
        for lam, score in table:
            writer.writerow([repr(lam), repr(score)])
    (out_dir / "cv_choice.json").write_text(
        json.dumps({"lambda_best": best, "blocks": args.blocks}, indent=2,
                   sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out_dir, "cv", _config_dict(args), [Path(args.input)], None)
    print(f"lambda_best = {best}")
    return 0


def _sim_config(args) -> simlab.SimConfig:
    return simlab.SimConfig(
        setting=args.setting,
        m=args.m,
        n=args.n,
        t0=args.t0,
        t1=args.t1,
        s=args.s,
        noise_sd=args.noise_sd,
        tau=args.tau,
        replications=args.reps,
        seed=args.seed,
        burn_in=args.burn_in,
    )


def _write_sim_outputs(out_dir: Path, result: simlab.SimResult) -> None:
    cfg = result.config
    with (out_dir / "results.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "m", "setting", "replication",
                         "rmse", "att_bias", "fit_seconds"])
        for record in result.records:
            writer.writerow([
                record.method, cfg.m, cfg.setting, record.replication,
                repr(record.rmse), repr(record.att_bias),
                repr(record.fit_seconds),
            ])
    summary = {
        "config": asdict(cfg),
        "hyperparams": result.hyperparams,
        "aggregates": result.aggregates(),
        "failures": [{"replication": rep, "error": msg}
                     for rep, msg in result.failures],
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _sim_config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    result = simlab.run_experiment(
        cfg, methods,
        lambda_policy=args.lambda_policy,
        fixed_lambda=args.lam,
        cv_grid=_parse_grid(args.grid) if args.grid else None,
        threads=args.threads,
    )
    _write_sim_outputs(out_dir, result)
    _write_manifest(out_dir, "simulate", _config_dict(args), [], args.seed)
    return 0


def cmd_bench(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    m_values = [int(v) for v in _parse_grid(args.m_sweep)]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = simlab.bench_timing(
        m_values, methods, n=args.n, t0=args.t0, t1=args.t1, s=args.s,
        replications=args.reps, seed=args.seed, setting=args.setting,
    )
    with (out_dir / "timing.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "m", "mean_seconds", "se_seconds"])
        for row in rows:
            writer.writerow([row["method"], row["m"],
                             repr(row["mean_seconds"]), repr(row["se_seconds"])])
    _write_manifest(out_dir, "bench", _config_dict(args), [], args.seed)
    return 0


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    command = manifest["command"]
    config = dict(manifest["config"])
    if args.out_dir:
        config["out_dir"] = args.out_dir
    parser = build_parser()
    argv = [command]
    for key, value in config.items():
        if value is None or key == "func":
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
            continue
        argv.extend([flag, str(value)])
    replayed = parser.parse_args(argv)
    return replayed.func(replayed)


def _config_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _add_panel_options(sub) -> None:
    sub.add_argument("--input", required=True, help="long-format panel CSV")
    sub.add_argument("--t0-marker", type=int, default=None,
                     help="last pre-treatment time index (overrides the sidecar)")
    sub.add_argument("--unit-col", default=None, help="unit column name")
    sub.add_argument("--time-col", default=None, help="time column name")
    sub.add_argument("--outcome-col", default=None, help="outcome column name")
    sub.add_argument("--treated-col", default=None, help="treated-flag column name")


def _add_method_options(sub) -> None:
    sub.add_argument("--method", choices=("msc", "psc", "scul", "rols"),
                     default="msc")
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="penalty value (required with --lambda-policy fixed)")
    sub.add_argument("--lambda-policy", choices=_LAMBDA_POLICIES, default="fixed")
    sub.add_argument("--ridge", type=float, default=1.0,
                     help="restricted-OLS ridge value")
    sub.add_argument("--grid", default=None,
                     help="penalty grid, '0.01,0.02' or 'start:stop:step'")
    sub.add_argument("--blocks", type=int, default=5,
                     help="cross-validation fold count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multisc",
        description="Synthetic-control weights for many treated units at once",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="estimate donor weights from a panel CSV")
    _add_panel_options(fit)
    _add_method_options(fit)
    fit.add_argument("--out-dir", required=True)
    fit.set_defaults(func=cmd_fit)

    att = commands.add_parser("att", help="weights plus counterfactuals and ATT")
    _add_panel_options(att)
    _add_method_options(att)
    att.add_argument("--out-dir", required=True)
    att.set_defaults(func=cmd_att)

    cv = commands.add_parser("cv", help="rolling-origin penalty selection")
    _add_panel_options(cv)
    cv.add_argument("--grid", required=True,
                    help="penalty grid, '0.01,0.02' or 'start:stop:step'")
    cv.add_argument("--blocks", type=int, default=5)
    cv.add_argument("--out-dir", required=True)
    cv.set_defaults(func=cmd_cv)

    sim = commands.add_parser("simulate", help="replicated benchmark of all methods")
    sim.add_argument("--setting", type=int, choices=(1, 2), required=True)
    sim.add_argument("--m", type=int, required=True)
    sim.add_argument("--n", type=int, default=400)
    sim.add_argument("--t0", type=int, default=100)
    sim.add_argument("--t1", type=int, default=10)
    sim.add_argument("--s", type=int, default=1000)
    sim.add_argument("--noise-sd", type=float, default=0.5)
    sim.add_argument("--tau", type=float, default=1.0)
    sim.add_argument("--burn-in", type=int, default=200)
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--methods", default="msc,psc,scul,rols")
    sim.add_argument("--lambda", dest="lam", type=float, default=None)
    sim.add_argument("--lambda-policy", choices=_LAMBDA_POLICIES, default="cv")
    sim.add_argument("--grid", default=None)
    sim.add_argument("--out-dir", required=True)
    sim.set_defaults(func=cmd_simulate)

    bench = commands.add_parser("bench", help="wall-clock sweep over treated counts")
    bench.add_argument("--m-sweep", required=True, help="'50:400:50' or comma list")
    bench.add_argument("--methods", default="msc,psc,rols")
    bench.add_argument("--setting", type=int, choices=(1, 2), default=2)
    bench.add_argument("--n", type=int, default=400)
    bench.add_argument("--t0", type=int, default=100)
    bench.add_argument("--t1", type=int, default=10)
    bench.add_argument("--s", type=int, default=1000)
    bench.add_argument("--reps", type=int, default=3)
    bench.add_argument("--seed", type=int, required=True)
    bench.add_argument("--out-dir", required=True)
    bench.set_defaults(func=cmd_bench)

    replay = commands.add_parser("replay", help="re-run a recorded manifest")
    replay.add_argument("--manifest", required=True)
    replay.add_argument("--out-dir", default=None,
                        help="redirect outputs (defaults to the recorded directory)")
    replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MultiscError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
