"""Command-line entry point: run, sweep, lyapunov, report.

Exit codes: 0 success, 2 configuration error, 3 numerical-integrity abort,
4 inconclusive verdict (only with --require-verdict).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, diagnostics, io
from .classical import TrajectoryState, benettin_spectrum, load_fixture
from .config import ConfigError, RunConfig, load_config, parse_config
from .diagnostics import EntropySeries
from .evolution import NumericalIntegrityError, RunRecord, TimestepTooLargeError, run

log = logging.getLogger("wignerchaos")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INCONCLUSIVE = 0, 2, 3, 4
LAMBDA_FLOOR = 1e-3  # matches the Benettin tolerance
OUTPUT_ENV = "WIGNERCHAOS_OUTPUT"
SWEEP_AXES = {"D": "environment.diffusion", "hbar": "environment.hbar",
              "drive_amplitude": "potential.drive.amplitude"}


def output_root(cli_value: Optional[str], cfg: RunConfig) -> Path:
    for v in (cli_value, os.environ.get(OUTPUT_ENV), cfg.output.directory):
        if v:
            return Path(v)
    return Path("wignerchaos_runs")


def lyapunov_for(cfg: RunConfig) -> dict:
    """lambda+/lambda- per the config's diagnostics.lyapunov block."""
    ly = cfg.diagnostics.lyapunov
    if ly.method == "value":
        lam = float(ly.value)
        return {"method": "value", "exponents": [lam, -lam]}
    if ly.method == "fixture":
        fx = load_fixture(ly.fixture)
        lam = float(fx["lambda_plus"])
        return {"method": "fixture", "fixture": ly.fixture, "fixture_version": fx["version"],
                "exponents": [lam, -lam], "uncertainty": fx.get("uncertainty")}
    g = cfg.gaussian_spec()
    x0 = g.x0 if ly.x0 is None else ly.x0
    p0 = g.p0 if ly.p0 is None else ly.p0
    spec = benettin_spectrum(TrajectoryState(x0, p0), cfg.build_potential(), ly.dt, ly.t_total,
                             ly.renorm_stride, ly.transient)
    out = spec.as_dict()
    out["method"] = "benettin"
    return out


def analyse(cfg: RunConfig, series: EntropySeries, lyap: dict) -> dict:
    """Timescales, rate series and verdict from a stored entropy series."""
    env = cfg.build_environment()
    lam_p, lam_m = lyap["exponents"]
    g = cfg.gaussian_spec()
    chi, chi_min = cfg.nonlinearity()
    if cfg.diagnostics.delta_x is not None:
        delta_x = cfg.diagnostics.delta_x
    elif cfg.state.kind == "cat":
        delta_x = cfg.state.x_sep
    else:
        delta_x = env.hbar / g.sigma_p
    H = getattr(series, cfg.diagnostics.entropy)
    n_tail = max(1, int(round(0.1 * H.size)))
    H_eq = float(np.mean(H[-n_tail:]))
    span = float(series.times[-1] - series.times[0]) if series.times.size > 1 else 0.0
    # below the Benettin tolerance the reference is treated as regular
    chaotic_ref = lam_p > LAMBDA_FLOOR

    lm = lam_m if chaotic_ref else 0.0
    sc = diagnostics.critical_dispersion(env, lm)
    transient = 3 * diagnostics.decoherence_time(env, delta_x)
    if chaotic_ref and sc and g.sigma_p > sc:
        transient = max(transient, math.log(g.sigma_p / sc) / lam_p)
    fit_kw = {}
    if cfg.diagnostics.t_start is None:
        fit_kw["t_start"] = float(series.times[0]) + transient
    if cfg.diagnostics.smoothing_window is None and not chaotic_ref and cfg.diagnostics.dynamical_time:
        fit_kw["smoothing_window"] = cfg.diagnostics.dynamical_time
    fit = cfg.fit_config(**fit_kw)

    verdict, error = None, None
    try:
        v = diagnostics.classify(series, lam_p if chaotic_ref else 0.0, fit)
        verdict = v.as_dict()
        rate_value = v.plateau_rate
    except (diagnostics.WindowTooShortError, diagnostics.SaturationBeforeWindowError) as e:
        error = str(e)
        rate_value = None
    if verdict is None:
        verdict = {"classification": "inconclusive", "error": error, "lyapunov_reference": lam_p}

    window = fit.smoothing_window or (1.0 / lam_p if chaotic_ref else (fit.dynamical_time or span / 20))
    rate = diagnostics.entropy_rate(series, window, cfg.diagnostics.entropy) if series.times.size >= 3 else None
    report = diagnostics.timescale_report(
        env, delta_x=delta_x, chi=chi, chi_min=chi_min, delta_p=g.sigma_p,
        lambda_plus=lam_p, lambda_minus=lm, H_eq=H_eq, H_0=float(H[0]),
        rate=rate_value if rate_value is not None else (lam_p if chaotic_ref else None),
    )
    timescales = report.as_dict()
    timescales["fit_t_start"] = fit.t_start
    timescales["ehrenfest_constant"] = 1.0
    return {"timescales": timescales, "verdict": verdict, "rate": rate}


def _series_from_record(rec: RunRecord) -> EntropySeries:
    return rec.entropy_series()


def _write_rate(path, rate):
    if rate is None:
        return
    rows = zip(rate.times, rate.rates, rate.one_sided.astype(float))
    io.write_series_csv(path, ["t", "rate", "one_sided"], rows)


def execute_run(cfg: RunConfig, run_dir: Path, snapshots: Optional[bool] = None) -> tuple:
    """Run one configuration into ``run_dir``; returns (exit_status, verdict dict)."""
    run_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.build_grid()
    spec = cfg.build_potential()
    env = cfg.build_environment()
    state = cfg.build_state(grid)
    evo = cfg.build_evolution(spec, grid)
    want_snaps = cfg.output.snapshots if snapshots is None else snapshots
    snap_dir = run_dir / "snapshots"

    def writer(w, step):
        snap_dir.mkdir(exist_ok=True)
        return str(io.write_snapshot(snap_dir / f"step_{step:08d}.wig", w).relative_to(run_dir))

    manifest = {
        "version": __version__,
        "name": cfg.name,
        "config": cfg.to_dict(),
        "environment": {"D": env.D, "tau_R": env.tau_R, "lambda_dB": env.lambda_dB},
        "potential": {"coefficients": list(spec.coefficients), "drive_amplitude": spec.drive_amplitude,
                      "drive_frequency": spec.drive_frequency, "mass": spec.mass},
        "grid": {"dx": grid.dx, "dp": grid.dp, "dy": grid.dy, "p_extent": list(grid.p_extent)},
        "dt": evo.dt,
        "files": {"series": "series.csv", "rate": "rate.csv", "verdict": "verdict.json",
                  "lyapunov": "lyapunov.json", "config": "config.yaml"},
    }
    (run_dir / "config.yaml").write_text(cfg.to_yaml())
    status = EXIT_OK
    try:
        rec = run(state, spec, env, evo, snapshot_writer=writer if want_snaps else None)
    except NumericalIntegrityError as e:
        rec = e.record
        status = EXIT_NUMERICAL
        manifest["aborted"] = str(e)
        log.error("numerical integrity abort: %s", e)
    io.write_series_csv(run_dir / "series.csv", RunRecord.COLUMNS, rec.rows())
    if want_snaps and not evo.snapshot_stride:
        # no stride configured: keep the endpoints
        rec.snapshots.append((state.time, writer(state, 0)))
        if rec.final is not None:
            rec.snapshots.append((rec.final.time, writer(rec.final, int(round(rec.final.time / evo.dt)))))
    manifest["snapshots"] = [{"t": t, "path": p} for t, p in rec.snapshots]
    if cfg.output.marginals and rec.final is not None:
        io.write_marginals_csv(run_dir / "marginals_final.csv", rec.final)
        io.write_moments_csv(run_dir / "moments_final.csv", rec.final)

    lyap = lyapunov_for(cfg)
    io.write_json(run_dir / "lyapunov.json", lyap)
    result = analyse(cfg, _series_from_record(rec), lyap)
    _write_rate(run_dir / "rate.csv", result["rate"])
    verdict = dict(result["verdict"])
    verdict["version"] = __version__
    io.write_json(run_dir / "verdict.json", verdict)
    manifest["timescales"] = result["timescales"]
    manifest["verdict"] = verdict["classification"]
    io.write_json(run_dir / "manifest.json", manifest)
    return status, verdict


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    root = output_root(args.output, cfg)
    status, verdict = execute_run(cfg, root / cfg.name, snapshots=True if args.snapshots else None)
    print(f"{cfg.name}: verdict {verdict['classification']} -> {root / cfg.name}")
    if status == EXIT_OK and args.require_verdict and verdict["classification"] == "inconclusive":
        return EXIT_INCONCLUSIVE
    return status


def _parse_values(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {text!r}") from None


def _sweep_member(payload):
    yaml_text, axis, value, run_dir = payload
    logging.basicConfig(level=logging.WARNING)
    cfg = parse_config(yaml_text).with_value(SWEEP_AXES[axis], value)
    try:
        status, verdict = execute_run(cfg, Path(run_dir))
    except TimestepTooLargeError as e:
        return value, EXIT_CONFIG, {"classification": "inconclusive", "error": str(e)}, None
    manifest = io.read_json(Path(run_dir) / "manifest.json")
    return value, status, verdict, manifest["timescales"].get("t_chi")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.axis not in SWEEP_AXES:
        raise ConfigError(f"--axis must be one of {', '.join(SWEEP_AXES)}")
    values = _parse_values(args.values)
    if args.axis == "D" and cfg.environment.gamma != 0:
        raise ConfigError("sweeping D needs gamma = 0 (the direct diffusion override)")
    root = output_root(args.output, cfg) / f"{cfg.name}_sweep_{args.axis}"
    root.mkdir(parents=True, exist_ok=True)
    text = cfg.to_yaml()
    payloads = [(text, args.axis, v, str(root / f"{args.axis}_{v:g}")) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_member, payloads))
    else:
        results = [_sweep_member(p) for p in payloads]
    rows = []
    worst = EXIT_OK
    for value, status, verdict, t_chi in results:
        rows.append([args.axis, value, verdict.get("plateau_rate"), verdict.get("decay_exponent"),
                     verdict["classification"], t_chi, status])
        worst = max(worst, status)
    with open(root / "sweep.csv", "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["axis", "value", "plateau_rate", "decay_exponent", "verdict", "t_chi", "status"])
        for r in rows:
            out.writerow(["" if v is None else v for v in r])
    io.write_json(root / "sweep.json", {"version": __version__, "axis": args.axis, "values": values,
                                        "config": cfg.to_dict(),
                                        "results": [dict(zip(["axis", "value", "plateau_rate", "decay_exponent",
                                                              "verdict", "t_chi", "status"], r)) for r in rows]})
    for r in rows:
        print(f"{r[0]}={r[1]:g}: {r[4]} (plateau {r[2]})")
    if worst == EXIT_OK and args.require_verdict and any(r[4] == "inconclusive" for r in rows):
        return EXIT_INCONCLUSIVE
    return worst


def cmd_lyapunov(args) -> int:
    cfg = load_config(args.config)
    ly = cfg.diagnostics.lyapunov
    if args.t_total is not None or args.dt is not None or ly.method != "benettin":
        ly = replace(ly, method="benettin", t_total=args.t_total or ly.t_total, dt=args.dt or ly.dt)
        cfg.diagnostics.lyapunov = ly
    out = lyapunov_for(cfg)
    out["version"] = __version__
    out["seed"] = None
    text = io.jsonable(out)
    payload = json.dumps(text, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    print(payload)
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    manifest = io.read_json(run_dir / "manifest.json")
    cfg = parse_config((run_dir / "config.yaml").read_text())
    cols = io.read_series_csv(run_dir / "series.csv")
    series = EntropySeries(cols["t"], cols["linear_entropy"], cols["von_neumann"])
    lyap = io.read_json(run_dir / "lyapunov.json")
    result = analyse(cfg, series, lyap)
    stored = io.read_json(run_dir / "verdict.json")
    fresh = io.jsonable(result["verdict"])
    same = all(stored.get(k) == v for k, v in fresh.items())
    _write_rate(run_dir / "rate.csv", result["rate"])
    io.write_json(run_dir / "report.json", {"version": __version__, "timescales": result["timescales"],
                                            "verdict": fresh, "reproduces_stored_verdict": same})
    ts = result["timescales"]
    lines = [
        f"{'run':<24}{manifest['name']}  (code {manifest['version']})",
        f"{'verdict':<24}{fresh['classification']}" + ("" if same else "  [differs from stored verdict]"),
    ]
    for key in ("plateau_rate", "plateau_ratio", "decay_exponent", "lyapunov_reference", "fit_window", "error"):
        if key in fresh and fresh[key] is not None:
            lines.append(f"{key:<24}{fresh[key]}")
    for key in ("tau_D", "delta_x", "t_chi", "sigma_c", "coherence_length", "chi_1", "chi_1_min",
                "t_eq_literal", "t_eq_difference", "quantum_regime", "classical_regime"):
        lines.append(f"{key:<24}{ts.get(key)}")
    if "aborted" in manifest:
        lines.append(f"{'aborted':<24}{manifest['aborted']}")
    print("\n".join(lines))
    return EXIT_OK if same else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wignerchaos", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve one configuration and classify it")
    p.add_argument("config", help="YAML file or preset name")
    p.add_argument("-o", "--output", help=f"output root (default ${OUTPUT_ENV} or ./wignerchaos_runs)")
    p.add_argument("--snapshots", action="store_true", help="write WIG1 snapshots")
    p.add_argument("--require-verdict", action="store_true", help="exit 4 when the verdict is inconclusive")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run one configuration over a parameter list")
    p.add_argument("config")
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.add_argument("--require-verdict", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lyapunov", help="Benettin spectrum of the classical counterpart")
    p.add_argument("config")
    p.add_argument("--t-total", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--out", help="also write the JSON here")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("report", help="recompute timescales and verdict from a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TimestepTooLargeError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
