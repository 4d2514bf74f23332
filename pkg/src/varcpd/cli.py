"""Command-line front end: simulate | detect | refine | evaluate | bench.

CSV in and out is comma-separated UTF-8 with '.' decimals; JSON reports
carry 1-based time indices and a ``schema_version`` field.  Errors exit
nonzero with a single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .dp import DetectionConfig, detect, segment_coefficients
from .lasso import SolverConfig
from .metrics import abs_k_error, hausdorff_scaled
from .model import ModelError, TimeSeries
from .pgl import default_zeta, refine_report
from .simulate import SimulationConfig, simulate

SCHEMA_VERSION = 1


class CliError(ValueError):
    pass


def load_csv(path: str | Path) -> TimeSeries:
    """Read a rectangular numeric CSV, auto-detecting a single header row."""
    path = Path(path)
    if not path.exists():
        raise CliError(f"no such file: {path}")
    rows: list[list[float]] = []
    width = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise CliError(
                    f"ragged row at line {lineno}: {len(cells)} columns, expected {width}"
                )
            parsed = []
            for col, cell in enumerate(cells, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    if lineno == 1:
                        parsed = None  # header row
                        break
                    raise CliError(f"non-numeric cell at line {lineno}, column {col}: {cell!r}")
                if not math.isfinite(value):
                    raise CliError(f"non-finite cell at line {lineno}, column {col}: {cell!r}")
                parsed.append(value)
            if parsed is not None:
                rows.append(parsed)
    if not rows:
        raise CliError(f"no numeric rows in {path}")
    return TimeSeries(np.asarray(rows))


def resolve_config(args: argparse.Namespace, n: int, p: int) -> tuple[DetectionConfig, float]:
    """Merge flags > config file > computed defaults into a concrete config."""
    file_cfg = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            file_cfg = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config file {cfg_path}: {exc}")
        if not isinstance(file_cfg, dict):
            raise CliError(f"config file {cfg_path} must hold a JSON object")

    def pick(flag_name: str, file_key: str, fallback):
        value = getattr(args, flag_name, None)
        if value is not None:
            return value
        if file_key in file_cfg:
            return file_cfg[file_key]
        return fallback

    solver = SolverConfig(
        tol=float(pick("tol", "tol", SolverConfig.tol)),
        max_iter=int(pick("max_iter", "max_iter", SolverConfig.max_iter)),
    )
    lag = int(pick("lag", "lag", 1))
    config = DetectionConfig(
        lag=lag,
        lambda_=float(pick("lambda_", "lambda", 0)) if _has(args, file_cfg, "lambda_", "lambda") else None,
        gamma=float(pick("gamma", "gamma", 0)) if _has(args, file_cfg, "gamma", "gamma") else None,
        min_len=int(pick("min_len", "min_len", 0)) if _has(args, file_cfg, "min_len", "min_len") else None,
        step=int(pick("step", "step", 1)),
        solver=solver,
    ).resolved(n, p)
    zeta = float(pick("zeta", "zeta", default_zeta(p)))
    if zeta < 0:
        raise CliError(f"zeta must be non-negative, got {zeta}")
    return config, zeta


def _has(args: argparse.Namespace, file_cfg: dict, flag_name: str, file_key: str) -> bool:
    return getattr(args, flag_name, None) is not None or file_key in file_cfg


def _threads(args: argparse.Namespace) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("VAR_CPD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"VAR_CPD_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _write_json(path: str | None, payload: dict):
    text = json.dumps(payload, indent=2)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _parse_points(spec: str) -> tuple[int, ...]:
    """Comma-separated integers, or a JSON report file with a change_points field."""
    candidate = Path(spec)
    if candidate.exists():
        try:
            payload = json.loads(candidate.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read points file {spec}: {exc}")
        pts = payload.get("change_points")
        if pts is None:
            raise CliError(f"file {spec} has no change_points field")
        return tuple(int(x) for x in pts)
    if not spec:
        return ()
    try:
        return tuple(int(x) for x in spec.split(","))
    except ValueError:
        raise CliError(f"cannot parse change points {spec!r}")


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.scenario == "i":
        model = bench_mod.setting_i(args.n).make_model()
    elif args.scenario == "ii":
        model = bench_mod.setting_ii(args.n, args.p, args.rho).make_model()
    else:
        model = bench_mod.setting_iii(args.n, args.p).make_model()
    series = simulate(model, SimulationConfig(seed=args.seed, burn_in=args.burn_in))
    header = ",".join(f"x{j + 1}" for j in range(series.p))
    np.savetxt(args.out, series.data, delimiter=",", header=header, comments="", fmt="%.17g")
    sidecar = args.truth_out or f"{args.out}.truth.json"
    _write_json(
        sidecar,
        {
            "schema_version": SCHEMA_VERSION,
            "n": model.n,
            "p": model.p,
            "lag": model.lag,
            "noise_sd": model.noise_sd,
            "seed": args.seed,
            "burn_in": args.burn_in,
            "change_points": list(model.change_points),
            "segments": [seg.matrices.tolist() for seg in model.segments],
        },
    )
    print(f"wrote {series.n}x{series.p} series to {args.out}; ground truth in {sidecar}")
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    series = load_csv(args.input)
    config, _ = resolve_config(args, series.n, series.p)
    t0 = time.perf_counter()
    result = detect(series, config, threads=_threads(args))
    elapsed = time.perf_counter() - t0
    fits = segment_coefficients(series, result.change_points, config)
    _write_json(
        args.out,
        {
            "schema_version": SCHEMA_VERSION,
            "n": series.n,
            "p": series.p,
            "config": {
                "lag": config.lag,
                "lambda": config.lambda_,
                "gamma": config.gamma,
                "min_len": config.min_len,
                "step": config.step,
            },
            "change_points": list(result.change_points),
            "objective": result.partition.objective,
            "segments": [f.coeffs.matrices.tolist() for f in fits],
            "timing_seconds": elapsed,
        },
    )
    return 0


def _cmd_refine(args: argparse.Namespace) -> int:
    series = load_csv(args.input)
    config, zeta = resolve_config(args, series.n, series.p)
    points = _parse_points(args.points)
    truth = _parse_points(args.truth) if args.truth else None
    t0 = time.perf_counter()
    report = refine_report(
        series, points, truth=truth, lag=config.lag, zeta=zeta,
        solver=config.solver, threads=_threads(args),
    )
    elapsed = time.perf_counter() - t0
    _write_json(
        args.out,
        {
            "schema_version": SCHEMA_VERSION,
            "n": series.n,
            "p": series.p,
            "zeta": zeta,
            "initial": list(points),
            "change_points": list(report.points),
            "windows": [
                {
                    "index": w.index,
                    "initial": w.initial,
                    "window": [w.start, w.end],
                    "chosen": w.chosen,
                    "refined": w.refined,
                    "objective_curve": list(w.objectives),
                    "candidates": list(w.candidates),
                    "err_before": w.err_before,
                    "err_after": w.err_after,
                }
                for w in report.windows
            ],
            "timing_seconds": elapsed,
        },
    )
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    est = _parse_points(args.est)
    truth = _parse_points(args.truth)
    n = args.n
    if n is None:
        candidate = Path(args.truth)
        if candidate.exists():
            n = json.loads(candidate.read_text(encoding="utf-8")).get("n")
    if n is None:
        raise CliError("--n is required when the truth file does not carry it")
    _write_json(
        args.out,
        {
            "schema_version": SCHEMA_VERSION,
            "n": int(n),
            "est": list(est),
            "truth": list(truth),
            "hausdorff_scaled": hausdorff_scaled(est, truth, int(n)),
            "abs_k_error": abs_k_error(est, truth),
        },
    )
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.setting == "i":
        setting = bench_mod.setting_i(args.n)
    elif args.setting == "ii":
        setting = bench_mod.setting_ii(args.n, args.p, args.rho)
    else:
        setting = bench_mod.setting_iii(args.n, args.p)
    config = None
    zeta = args.zeta
    if args.lag is not None or args.lambda_ is not None or args.gamma is not None:
        config = DetectionConfig(
            lag=args.lag if args.lag is not None else 1,
            lambda_=args.lambda_,
            gamma=args.gamma,
        )
    result = bench_mod.run_setting(
        setting, args.reps, args.seed, config=config, zeta=zeta, threads=_threads(args)
    )
    csv_text = bench_mod.BenchResult.csv_header() + "\n" + result.csv_row() + "\n"
    if args.out_csv:
        Path(args.out_csv).write_text(csv_text, encoding="utf-8")
    else:
        print(csv_text, end="")
    payload = {
        "schema_version": SCHEMA_VERSION,
        **result.summary(),
        "truth": list(result.truth),
        "replications": [
            {
                "rep": r.rep,
                "seed": r.seed,
                "dp_points": list(r.dp_points),
                "pgl_points": list(r.pgl_points),
                "dp_hausdorff": r.dp_hausdorff,
                "pgl_hausdorff": r.pgl_hausdorff,
                "dp_k_error": r.dp_k_error,
                "pgl_k_error": r.pgl_k_error,
                "detect_seconds": r.detect_seconds,
                "refine_seconds": r.refine_seconds,
                "error": r.error,
            }
            for r in result.replications
        ],
    }
    if args.out_json:
        _write_json(args.out_json, payload)
    return 0


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--lag", type=int, default=None, help="VAR lag L (default 1)")
    p.add_argument("--lambda", dest="lambda_", type=float, default=None,
                   help="l1 penalty (default 0.1*sqrt(log p))")
    p.add_argument("--gamma", type=float, default=None,
                   help="per-interval penalty (default 15*log(n)*p)")
    p.add_argument("--zeta", type=float, default=None,
                   help="group penalty for refinement (default 0.3*sqrt(log p))")
    p.add_argument("--min-len", dest="min_len", type=int, default=None,
                   help="shortest interval carrying a loss (default 2(L+1))")
    p.add_argument("--step", type=int, default=None, help="candidate boundary stride (default 1)")
    p.add_argument("--tol", type=float, default=None, help="solver tolerance (default 1e-7)")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None,
                   help="solver sweep limit (default 10000)")
    p.add_argument("--config", default=None, help="JSON config file (flags take precedence)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all cores, or VAR_CPD_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varcpd",
        description="Change point localization in piecewise-stable VAR processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw a scenario realization to CSV + truth JSON")
    p_sim.add_argument("--scenario", choices=["i", "ii", "iii"], required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p", type=int, default=20)
    p_sim.add_argument("--rho", type=float, default=0.25)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--burn-in", dest="burn_in", type=int, default=200)
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.add_argument("--truth-out", dest="truth_out", default=None,
                       help="ground truth JSON path (default: OUT.truth.json)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_det = sub.add_parser("detect", help="estimate change points from a CSV series")
    p_det.add_argument("--input", required=True)
    p_det.add_argument("--out", default=None, help="JSON report path (default: stdout)")
    _add_config_flags(p_det)
    p_det.set_defaults(func=_cmd_detect)

    p_ref = sub.add_parser("refine", help="group-Lasso refinement of given change points")
    p_ref.add_argument("--input", required=True)
    p_ref.add_argument("--points", required=True,
                       help="comma-separated 1-based points, or a detect report JSON")
    p_ref.add_argument("--truth", default=None,
                       help="truth points (list or JSON) for error reporting")
    p_ref.add_argument("--out", default=None)
    _add_config_flags(p_ref)
    p_ref.set_defaults(func=_cmd_refine)

    p_eval = sub.add_parser("evaluate", help="score estimated points against ground truth")
    p_eval.add_argument("--est", required=True, help="comma-separated points or JSON report")
    p_eval.add_argument("--truth", required=True, help="comma-separated points or truth JSON")
    p_eval.add_argument("--n", type=int, default=None, help="series length (read from JSON if omitted)")
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_bench = sub.add_parser("bench", help="Monte Carlo benchmark of one setting")
    p_bench.add_argument("--setting", choices=["i", "ii", "iii"], required=True)
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--p", type=int, default=20)
    p_bench.add_argument("--rho", type=float, default=0.25)
    p_bench.add_argument("--reps", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=7)
    p_bench.add_argument("--out-csv", dest="out_csv", default=None)
    p_bench.add_argument("--out-json", dest="out_json", default=None)
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
