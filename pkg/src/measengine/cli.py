"""Command-line entry point.

::

    measengine simulate <scenario> [--config PATH] [--out DIR] [--seed N]
                        [--trajectories N] [--mode feedback|open_loop|averaged]
                        [--workers N]
    measengine fit reflection|stark [--data PATH] [--out DIR]

Exit status is 0 on success; otherwise the category code carried by the
raised error class (2 invalid input, 3 malformed data, 4 fit failure,
5 reset failure, 6 output failure, 1 anything else from the package).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from .calibration import (
    FIXTURE_T1,
    FIXTURE_T2,
    REFLECTION_FIXTURE,
    STARK_FIXTURE,
    FitResult,
    fit_reflection,
    fit_stark,
    load_reflection_csv,
    load_stark_csv,
)
from .config import MODES, SCENARIOS, default_scenario_path, load_scenario
from .errors import ConfigError, FitError, MeasEngineError, OutputError
from .scenarios import run_scenario

TWO_PI = 2 * math.pi


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="measengine", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV datasets")
    sim.add_argument("scenario", choices=SCENARIOS)
    sim.add_argument("--config", type=Path, help="scenario file (default: bundled file for the scenario)")
    sim.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    sim.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    sim.add_argument("--trajectories", type=int, help="Monte Carlo trajectories per run")
    sim.add_argument("--mode", choices=MODES, help="Monte Carlo protocol, or 'averaged' for the exact channel")
    sim.add_argument("--workers", type=int, help="worker processes (default: $MEASENGINE_WORKERS or 1)")

    fit = sub.add_parser("fit", help="fit a calibration model to data")
    fit.add_argument("experiment", choices=("reflection", "stark"))
    fit.add_argument("--data", type=Path, help="CSV data file (default: bundled synthetic fixture)")
    fit.add_argument("--out", type=Path, default=Path("fit_out"), help="output directory")
    fit.add_argument("--t1-us", type=float, default=FIXTURE_T1 * 1e6, help="T1 for the reflection fit")
    fit.add_argument("--t2-us", type=float, default=FIXTURE_T2 * 1e6, help="T2 for the reflection fit")
    fit.add_argument("--p-pol", type=float, default=1.0, help="ground minus excited population")
    return p


def _simulate(args) -> int:
    path = args.config or default_scenario_path(args.scenario)
    cfg = load_scenario(path)
    if cfg.name != args.scenario:
        raise ConfigError(f"file describes scenario {cfg.name!r}, not {args.scenario!r}", "scenario.name")
    cfg = cfg.with_overrides(mode=args.mode, seed=args.seed, trajectories=args.trajectories)
    manifest = run_scenario(cfg, args.out, workers=args.workers)
    names = ", ".join(f["name"] for f in manifest["files"])
    print(f"{cfg.name}: wrote {names} and manifest.json to {args.out} ({manifest['wall_time_s']:.2f} s)")
    return 0


def _report(kind: str, res: FitResult, units: dict[str, float]) -> list[str]:
    lines = [f"{kind} fit: {'converged' if res.converged else 'NOT converged'} ({res.message})"]
    lines.append(f"points = {res.n_points}, residual norm = {res.residual_norm:.6g}")
    for name, val, sig in res.rows():
        scale = units.get(name, 1.0)
        lines.append(f"  {name:14s} = {val / scale:.6g} +/- {sig / scale:.2g}")
    lines.append(f"condition number of J^T J = {res.condition_number:.3g}")
    return lines


def _fit(args) -> int:
    if args.experiment == "reflection":
        data = args.data or REFLECTION_FIXTURE
        pts = load_reflection_csv(data)
        res = fit_reflection(pts, 1 / (args.t1_us * 1e-6), 1 / (args.t2_us * 1e-6), args.p_pol)
        units = {"gamma_c": TWO_PI, "omega": TWO_PI}
        labels = {"gamma_c": "gamma_c_hz", "omega": "omega_hz"}
    else:
        data = args.data or STARK_FIXTURE
        pts = load_stark_csv(data)
        res = fit_stark(pts)
        units = {"chi": TWO_PI, "kappa": TWO_PI}
        labels = {"chi": "chi_hz", "kappa": "kappa_hz"}
    lines = _report(args.experiment, res, units)
    print("\n".join(lines))
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{args.experiment}_fit.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("parameter", "estimate", "sigma"))
            for name, val, sig in res.rows():
                s = units.get(name, 1.0)
                w.writerow((labels.get(name, name), f"{val / s:.9g}", f"{sig / s:.9g}"))
        (out / f"{args.experiment}_fit.txt").write_text("\n".join(lines) + "\n")
        (out / f"{args.experiment}_fit.json").write_text(
            json.dumps(
                {
                    "data": str(data),
                    "converged": res.converged,
                    "residual_norm": res.residual_norm,
                    "condition_number": res.condition_number,
                    "params": {labels.get(k, k): v / units.get(k, 1.0) for k, v in res.params.items()},
                    "sigma": {labels.get(k, k): v / units.get(k, 1.0) for k, v in res.sigma.items()},
                },
                indent=2,
            )
            + "\n"
        )
    except OSError as exc:
        raise OutputError(f"cannot write fit results to {out}: {exc.strerror}") from exc
    if not res.converged:
        raise FitError(f"{args.experiment} fit did not converge: {res.message}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _simulate(args) if args.command == "simulate" else _fit(args)
    except MeasEngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
