"""Command-line interface: simulate, certify, sweep.

Exit codes: 0 success, 2 simulation diverged, 3 invalid configuration,
4 degenerate thrust command.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from trirotor.config import ConfigError, load_scenario, scenario_from_dict, set_by_path
from trirotor.sim import (
    LOG_COLUMNS,
    STATUS_OK,
    SimResult,
    compute_metrics,
    exact_model_variant,
    initial_attitude_command,
    run_scenario,
)

EXIT_CONFIG_INVALID = 3


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")

_EXTRACTS = {
    # gnuplot-ready two-column (or small multicolumn) series
    "psi.dat": ("t", "psi"),
    "ex_norm.dat": ("t", None),  # norm computed below
    "omega.dat": ("t", "wx", "wy", "wz"),
    "thrusts.dat": ("t", "T1", "T2", "T3"),
}


def _write_csv(result: SimResult, path: Path) -> None:
    header = ",".join(LOG_COLUMNS)
    np.savetxt(path, result.log, fmt="%.17g", delimiter=",", header=header, comments="")


def _write_extracts(result: SimResult, out: Path) -> None:
    t = result.column("t")
    for name, cols in _EXTRACTS.items():
        if name == "ex_norm.dat":
            data = np.column_stack([t, result.ex_norm()])
        else:
            data = np.column_stack([result.column(c) for c in cols])
        np.savetxt(out / name, data, fmt="%.10g")


def _report_dict(result: SimResult) -> dict:
    return {
        "status": result.status,
        "ok": result.ok,
        "reason": result.reason,
        "metrics": result.metrics.as_dict() if result.metrics else None,
        "basin": {"ok": result.basin_ok, "margin": result.basin_margin},
        "certificate": result.certificate.as_dict(),
        "rows": int(result.log.shape[0]),
        "trajectory": result.config.trajectory.describe(),
    }


def _run_and_write(cfg, out: Path, make_figures: bool) -> SimResult:
    out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = run_scenario(cfg)
    _write_csv(result, out / "log.csv")
    _write_extracts(result, out)
    (out / "metrics.json").write_text(
        json.dumps(_report_dict(result), indent=2, default=_json_default) + "\n"
    )
    if make_figures and result.log.shape[0] > 1:
        from trirotor.plots import render_run_figures

        render_run_figures(result, out)
    return result


def _cmd_simulate(args) -> int:
    cfg = load_scenario(args.config)
    if args.exact_model:
        cfg = exact_model_variant(cfg)
    out = Path(args.out)
    result = _run_and_write(cfg, out, not args.no_figures)
    print(f"status: {result.status}" + (f" ({result.reason})" if result.reason else ""))
    if result.metrics is not None:
        for key, value in result.metrics.as_dict().items():
            print(f"  {key}: {value:.6g}")
    if not result.basin_ok:
        print("  note: initial condition outside the certified basin")
    failed = [k for k, ok in result.certificate.passes.items() if not ok]
    if failed:
        print(f"  note: certificate conditions not met: {', '.join(failed)}")
    print(f"wrote {out}/log.csv, metrics.json, extracts"
          + ("" if args.no_figures else ", figures"))
    return result.status


def _cmd_certify(args) -> int:
    cfg = load_scenario(args.config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        from trirotor.certify import build_certificate, check_initial_condition

        cert = build_certificate(
            cfg.position_gains, cfg.attitude_gains, cfg.inertial.m,
            cfg.trajectory, cfg.duration, cfg.certify_theta0, cfg.certify_c,
            cfg.inertial.g,
        )
        try:
            cmd0 = initial_attitude_command(cfg)
            basin_ok, margin = check_initial_condition(cfg.initial_state, cmd0, cfg.attitude_gains)
        except ValueError:
            basin_ok, margin = False, float("-inf")
    report = cert.as_dict()
    report["basin"] = {"ok": basin_ok, "margin": margin}
    if args.json:
        print(json.dumps(report, indent=2, default=_json_default))
    else:
        print(f"gain certificate for {args.config}")
        print(f"  k_x={cert.k_x:g} k_v={cert.k_v:g} k1={cert.k1:g} "
              f"k2 roots={cert.k2_roots[0]:.6g}, {cert.k2_roots[1]:.6g}")
        print(f"  c={cert.c:g} admissible c < {cert.c_max:.6g}")
        print(f"  lambda_min(W1)={cert.lambda_min_W1:.6g}  |W2|={cert.W2_norm:.6g}")
        print(f"  spectral condition: min(alpha k_q, k_omega)={cert.condition_lhs:.6g} "
              f"vs required > {cert.condition_rhs:.6g}")
        print(f"  beta={cert.beta:g}  sup|f_d|={cert.fd_sup:.6g}  "
              f"inf max-norm f_d={cert.fd_inf_max_norm:.6g}  b2={cert.b2:g}")
        for name, ok in cert.passes.items():
            print(f"  [{'pass' if ok else 'FAIL'}] {name}")
        for note in cert.notes:
            print(f"  note: {note}")
        print(f"  [{'pass' if basin_ok else 'FAIL'}] initial condition in basin "
              f"(margin {margin:.6g})")
    return 0


def _parse_vary(spec: str) -> tuple[str, np.ndarray]:
    try:
        param, rng = spec.split("=", 1)
        lo, hi, n = rng.split(":")
        values = np.linspace(float(lo), float(hi), int(n))
    except ValueError as e:
        raise ConfigError(
            f"--vary expects param=lo:hi:n, got {spec!r}"
        ) from e
    if len(values) < 1:
        raise ConfigError("--vary needs at least one point")
    return param, values


def _cmd_sweep(args) -> int:
    import yaml

    param, values = _parse_vary(args.vary)
    base = yaml.safe_load(Path(args.config).read_text()) or {}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    configs = []
    for v in values:
        tree = json.loads(json.dumps(base))  # deep copy
        set_by_path(tree, param, float(v))
        configs.append(scenario_from_dict(tree))

    def subdir(idx: int) -> Path:
        return out / f"{param.replace('.', '_')}={values[idx]:g}"

    def one(idx_cfg):
        # figure rendering is not thread-safe; done after the join
        idx, cfg = idx_cfg
        return idx, _run_and_write(cfg, subdir(idx), make_figures=False)

    results: list[SimResult | None] = [None] * len(configs)
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for idx, res in pool.map(one, enumerate(configs)):
            results[idx] = res
    if not args.no_figures:
        from trirotor.plots import render_run_figures

        for idx, res in enumerate(results):
            if res.log.shape[0] > 1:
                render_run_figures(res, subdir(idx))

    rows = []
    for v, res in zip(values, results):
        m = res.metrics.as_dict() if res.metrics else {}
        rows.append({"value": float(v), "status": res.status, **m})
    summary_keys = ["value", "status"] + (
        list(results[0].metrics.as_dict()) if results[0].metrics else []
    )
    with open(out / "sweep.csv", "w") as fh:
        fh.write(",".join(summary_keys) + "\n")
        for row in rows:
            fh.write(",".join(f"{row.get(k, float('nan'))}" for k in summary_keys) + "\n")
    (out / "sweep.json").write_text(
        json.dumps({"param": param, "runs": rows}, indent=2, default=_json_default) + "\n"
    )
    if not args.no_figures:
        from trirotor.plots import render_sweep_figure

        good = [r.metrics.as_dict() for r in results if r.metrics]
        if good:
            render_sweep_figure(values[: len(good)], good, param, out)
    worst = max(r.status for r in results)
    print(f"swept {param} over {len(values)} values; worst status {worst}")
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trirotor",
        description="Three-rotor quadrotor trajectory-tracking simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one closed-loop scenario")
    sim.add_argument("--config", required=True, help="scenario YAML file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--exact-model", action="store_true",
                     help="idealized variant: no plant gyro/drag, nominal inertia, "
                          "no robustifying term (for Lyapunov checks)")
    sim.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    sim.set_defaults(func=_cmd_simulate)

    cert = sub.add_parser("certify", help="evaluate the gain certificate for a scenario")
    cert.add_argument("--config", required=True)
    cert.add_argument("--json", action="store_true", help="machine-readable output")
    cert.set_defaults(func=_cmd_certify)

    swp = sub.add_parser("sweep", help="run a scenario across a parameter range")
    swp.add_argument("--config", required=True)
    swp.add_argument("--vary", required=True, metavar="param=lo:hi:n",
                     help="dotted config path and linspace range, "
                          "e.g. attitude_gains.k_q=4:16:7")
    swp.add_argument("--out", required=True)
    swp.add_argument("--jobs", type=int, default=4)
    swp.add_argument("--no-figures", action="store_true")
    swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_INVALID


if __name__ == "__main__":
    sys.exit(main())
