"""Scenario runner: turn a :class:`ScenarioConfig` into CSV datasets.

Outputs (all floats written with 9 significant digits):

``timeseries.csv``
    One row per sample of the pulse sequence (``cyclic``).
``cycles.csv`` / ``cycles_<protocol>.csv``
    One row per engine cycle (``cyclic``, ``work_vs_cycle``).
``sweep.csv``
    One row per ``(omega_hz, t_r_us)`` grid point (``gain_work_sweep``,
    ``open_loop_map``).
``manifest.json``
    Resolved configuration, code version, seed, wall time and SHA-256 digests
    of every CSV written.

Columns named ``oracle_*`` hold the dissipationless resonant closed forms.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, parallel
from .config import ScenarioConfig
from .dynamics import DriveConfig
from .engine import CycleSchedule, TrajectoryResult, run_engine_batch
from .ensemble import expand, run_ensemble
from .errors import OutputError
from .field import DRIVE
from .oracles import finite_t2_cycle, ideal_excess_gain, ideal_norm_work

TIMESERIES_COLUMNS = (
    "t_us",
    "cycle_index",
    "window",
    "sx",
    "sy",
    "sz",
    "pout_norm",
    "pin_norm",
    "gain_minus_1",
    "p_excess_aw",
    "oracle_gain_minus_1",
)
CYCLE_COLUMNS = (
    "cycle_index",
    "outcome_frequencies",
    "work_j",
    "work_normalized",
    "cycle_gain_minus_1",
    "oracle_work_normalized",
    "oracle_cycle_gain_minus_1",
)
SWEEP_COLUMNS = (
    "omega_hz",
    "t_r_us",
    "theta",
    "mean_gain_minus_1",
    "mean_work_normalized",
    "mean_work_j",
    "oracle_gain_minus_1",
    "oracle_work_normalized",
    "oracle_t2_work_normalized",
)


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".9g")


def _csv_text(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------- #
# simulation helpers
# --------------------------------------------------------------------------- #

def _schedule(cfg: ScenarioConfig, drive: DriveConfig, n_cycles: int, protocol: str) -> CycleSchedule:
    return CycleSchedule(n_cycles=n_cycles, drive=drive, mode=protocol, readout=cfg.readout)


def _simulate(
    cfg: ScenarioConfig, drive: DriveConfig, n_cycles: int, protocol: str, seed_prefix=(), workers=None
) -> TrajectoryResult:
    sched = _schedule(cfg, drive, n_cycles, protocol)
    if cfg.averaged:
        return run_ensemble(
            cfg.ensemble, sched, "averaged", samples_per_stroke=cfg.samples_per_stroke, spontaneous=cfg.spontaneous
        )
    batch = run_engine_batch(
        expand(cfg.ensemble),
        sched,
        cfg.trajectories,
        cfg.seed,
        workers=workers,
        seed_prefix=tuple(seed_prefix),
        samples_per_stroke=cfg.samples_per_stroke,
        spontaneous=cfg.spontaneous,
    )
    return batch.result


def _open_loop_factor(protocol: str, theta: float, k) -> np.ndarray:
    """Ideal ``<sigma_x>`` at the start of cycle ``k``."""
    k = np.asarray(k)
    return np.cos(theta) ** (k - 1) if protocol == "open_loop" else np.ones(k.shape)


def timeseries_rows(res: TrajectoryResult, cfg: ScenarioConfig, protocol: str):
    f = res.field
    d = cfg.drive
    t_cycle = d.t_r + cfg.readout.t_meas
    scale = 2 * cfg.qubit.gamma_c / d.omega if d.omega > 0 else math.nan
    for i in range(len(f.t)):
        k = int(f.cycle_index[i])
        if f.window[i] == DRIVE:
            tau = f.t[i] - (k - 1) * t_cycle
            oracle = scale * math.cos(d.omega * tau) * float(_open_loop_factor(protocol, d.theta, k))
        else:
            oracle = math.nan
        yield (
            f.t[i] * 1e6,
            k,
            str(f.window[i]),
            res.bloch[i, 0],
            res.bloch[i, 1],
            res.bloch[i, 2],
            f.p_out_norm[i],
            f.p_in_norm[i],
            f.gain[i] - 1.0,
            f.p_excess[i] * 1e18,
            oracle,
        )


def cycle_rows(res: TrajectoryResult, cfg: ScenarioConfig, drive: DriveConfig, protocol: str):
    th = drive.theta
    for rec in res.records:
        fac = float(_open_loop_factor(protocol, th, rec.cycle_index))
        yield (
            rec.cycle_index,
            rec.p_minus,
            rec.work,
            rec.work_normalized,
            rec.cycle_gain - 1.0,
            float(ideal_norm_work(th)) * fac,
            float(ideal_excess_gain(th, cfg.qubit.gamma_c, drive.omega)) * fac,
        )


@dataclass(frozen=True)
class _SweepTask:
    cfg: ScenarioConfig
    omega_hz: float
    t_r_us: float
    index: int


def _sweep_point(task: _SweepTask, workers=None) -> tuple:
    cfg = task.cfg
    drive = replace(cfg.drive, omega=2 * math.pi * task.omega_hz, t_r=task.t_r_us * 1e-6)
    protocol = cfg.effective_protocol
    res = _simulate(cfg, drive, cfg.sweep_n_cycles, protocol, seed_prefix=(task.index,), workers=workers)
    th = drive.theta
    n = np.arange(1, cfg.sweep_n_cycles + 1)
    fac = float(np.mean(_open_loop_factor(protocol, th, n)))
    t2 = cfg.qubit.t2
    t2_work = finite_t2_cycle(drive.omega, drive.t_r, t2)[1] * fac if protocol == "feedback" else math.nan
    return (
        task.omega_hz,
        task.t_r_us,
        th,
        float(np.mean(res.cycle_gains)) - 1.0,
        float(np.mean(res.works_normalized)),
        float(np.mean(res.works)),
        float(ideal_excess_gain(th, cfg.qubit.gamma_c, drive.omega)) * fac,
        float(ideal_norm_work(th)) * fac,
        t2_work,
    )


def _sweep_point_serial(task: _SweepTask) -> tuple:
    return _sweep_point(task, workers=1)


def sweep_rows(cfg: ScenarioConfig, workers=None) -> list[tuple]:
    tasks = [
        _SweepTask(cfg, om, tr, i)
        for i, (tr, om) in enumerate((tr, om) for tr in cfg.sweep_t_r_us for om in cfg.sweep_omega_hz)
    ]
    if cfg.averaged:
        return parallel.ordered_map(_sweep_point_serial, tasks, workers)
    return [_sweep_point(t, workers) for t in tasks]


# --------------------------------------------------------------------------- #
# entry point
# --------------------------------------------------------------------------- #

def _write(out: Path, name: str, text: str, files: list) -> None:
    path = out / name
    try:
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc
    files.append({"name": name, "bytes": len(text.encode()), "sha256": hashlib.sha256(text.encode()).hexdigest()})


def _config_echo(cfg: ScenarioConfig) -> dict:
    q, d, r = cfg.qubit, cfg.drive, cfg.readout
    return {
        "raw": cfg.raw,
        "resolved": {
            "name": cfg.name,
            "mode": cfg.mode,
            "protocol": cfg.effective_protocol,
            "trajectories": cfg.trajectories if not cfg.averaged else None,
            "qubit": {
                "delta_rad_s": q.delta,
                "t1_s": None if math.isinf(q.t1) else q.t1,
                "t2_s": None if math.isinf(q.t2) else q.t2,
                "gamma_c_rad_s": q.gamma_c,
                "p_th": q.p_th,
                "f_q_hz": q.f_q,
            },
            "drive": {"omega_rad_s": d.omega, "t_r_s": d.t_r, "phi_rad": d.phi, "n_cycles": cfg.n_cycles},
            "readout": {
                "t_meas_s": r.t_meas,
                "t_int_s": r.t_int,
                "assignment_error": r.assignment_error,
                "gate_error": r.gate_error,
                "reset_max_iter": r.reset_max_iter,
            },
            "ensemble": [
                {"weight": w, "delta_rad_s": c.delta, "t2_s": c.t2} for w, c in expand(cfg.ensemble)
            ],
        },
    }


def run_scenario(cfg: ScenarioConfig, out_dir, *, workers: int | None = None) -> dict:
    """Run a scenario and write its files into ``out_dir``; returns the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror}") from exc
    start = time.perf_counter()
    files: list[dict] = []

    if cfg.name == "cyclic":
        protocol = cfg.effective_protocol
        res = _simulate(cfg, cfg.drive, cfg.n_cycles, protocol, workers=workers)
        _write(out, "timeseries.csv", _csv_text(TIMESERIES_COLUMNS, timeseries_rows(res, cfg, protocol)), files)
        _write(out, "cycles.csv", _csv_text(CYCLE_COLUMNS, cycle_rows(res, cfg, cfg.drive, protocol)), files)
    elif cfg.name == "work_vs_cycle":
        protocols = ("feedback", "open_loop") if cfg.averaged else (cfg.mode,)
        for i, protocol in enumerate(protocols):
            res = _simulate(cfg, cfg.drive, cfg.n_cycles, protocol, seed_prefix=(i,), workers=workers)
            rows = cycle_rows(res, cfg, cfg.drive, protocol)
            _write(out, f"cycles_{protocol}.csv", _csv_text(CYCLE_COLUMNS, rows), files)
    else:
        _write(out, "sweep.csv", _csv_text(SWEEP_COLUMNS, sweep_rows(cfg, workers)), files)

    manifest = {
        "scenario": cfg.name,
        "version": __version__,
        "seed": cfg.seed,
        "wall_time_s": round(time.perf_counter() - start, 6),
        "config": _config_echo(cfg),
        "files": files,
    }
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write manifest: {exc.strerror}") from exc
    return manifest
