"""Scenario configuration files.

Scenario files are INI-style ``key = value`` sections. Every frequency is a
linear frequency in Hz (the "/2 pi" value), times carry their unit in the key
name (``_us``, ``_ns``). Conversion to angular units happens here and nowhere
else.

Sections: ``[scenario]``, ``[qubit]``, ``[drive]``, ``[readout]``, optional
``[tls_1]`` / ``[tls_2]`` and ``[sweep]``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .dynamics import DriveConfig, QubitConfig
from .engine import ReadoutConfig
from .ensemble import TlsEnsemble, TlsSpec, expand
from .errors import ConfigError, InvalidArgument

TWO_PI = 2 * math.pi
SCENARIOS = ("cyclic", "gain_work_sweep", "work_vs_cycle", "open_loop_map")
MODES = ("feedback", "open_loop", "averaged")
PROTOCOLS = ("feedback", "open_loop")
SCENARIO_DIR = Path(__file__).parent / "data" / "scenarios"

_KNOWN = {
    "scenario": {"name", "mode", "protocol", "seed", "trajectories"},
    "qubit": {"f_q_hz", "gamma_c_hz", "t1_us", "t2_us", "p_th", "detuning_hz", "ideal"},
    "drive": {"omega_hz", "t_r_us", "phi_rad", "n_cycles", "samples_per_stroke", "spontaneous"},
    "readout": {"t_meas_ns", "t_int_ns", "assignment_error", "gate_error", "reset_max_iter", "ideal"},
    "tls_1": {"shift_hz", "t2_us", "p", "t2_applies_to"},
    "tls_2": {"shift_hz", "t2_us", "p", "t2_applies_to"},
    "sweep": {"omega_hz", "t_r_us", "n_cycles"},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved scenario; physical quantities already in SI / angular units.

    ``mode`` is ``feedback`` or ``open_loop`` for Monte Carlo trajectories and
    ``averaged`` for the exact ensemble-averaged channel; in the latter case the
    protocol comes from ``protocol``.
    """

    name: str
    mode: str
    protocol: str
    seed: int
    trajectories: int
    qubit: QubitConfig
    drive: DriveConfig
    n_cycles: int
    readout: ReadoutConfig
    ensemble: TlsEnsemble
    samples_per_stroke: int = 100
    spontaneous: bool = True
    sweep_omega_hz: tuple[float, ...] = ()
    sweep_t_r_us: tuple[float, ...] = ()
    sweep_n_cycles: int = 40
    raw: dict[str, dict[str, str]] = field(default_factory=dict, compare=False)

    @property
    def effective_protocol(self) -> str:
        return self.protocol if self.mode == "averaged" else self.mode

    @property
    def averaged(self) -> bool:
        return self.mode == "averaged"

    def with_overrides(self, **kw: Any) -> "ScenarioConfig":
        """Apply CLI overrides (``mode``, ``seed``, ``trajectories``) with validation."""
        raw = {s: dict(v) for s, v in self.raw.items()}
        for key, val in kw.items():
            if val is not None:
                raw.setdefault("scenario", {})[key] = str(val)
        return _resolve(raw)


def _get(sec: dict, section: str, key: str, conv: Callable[[str], Any], default: Any = None):
    path = f"{section}.{key}"
    if key not in sec:
        if default is None:
            raise ConfigError("missing required key", path)
        return default
    raw = sec[key].strip()
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse {raw!r}: {exc}", path) from exc


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _float_list(s: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in s.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _time_us(s: str) -> float:
    return math.inf if s.lower() in ("inf", "infinity") else float(s) * 1e-6


def _check(cond: bool, msg: str, path: str) -> None:
    if not cond:
        raise ConfigError(msg, path)


def _wrap(path: str, build: Callable[[], Any]):
    """Re-raise domain validation errors with the section as key path."""
    try:
        return build()
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise ConfigError(str(exc), path) from exc


def _resolve(raw: dict[str, dict[str, str]]) -> ScenarioConfig:
    for section, keys in raw.items():
        if section not in _KNOWN:
            raise ConfigError("unknown section", section)
        for key in keys:
            if key not in _KNOWN[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
    sc = raw.get("scenario", {})
    name = _get(sc, "scenario", "name", str)
    _check(name in SCENARIOS, f"must be one of {SCENARIOS}", "scenario.name")
    default_protocol = "open_loop" if name == "open_loop_map" else "feedback"
    mode = _get(sc, "scenario", "mode", str, "averaged")
    _check(mode in MODES, f"must be one of {MODES}", "scenario.mode")
    protocol = _get(sc, "scenario", "protocol", str, default_protocol)
    _check(protocol in PROTOCOLS, f"must be one of {PROTOCOLS}", "scenario.protocol")
    seed = _get(sc, "scenario", "seed", int, 0)
    _check(0 <= seed < 2**64, "must be an unsigned 64-bit integer", "scenario.seed")
    trajectories = _get(sc, "scenario", "trajectories", int, 10000)
    _check(trajectories >= 1, "must be >= 1", "scenario.trajectories")

    qs = raw.get("qubit", {})
    ideal_q = _get(qs, "qubit", "ideal", _bool, False)
    gamma_c = TWO_PI * _get(qs, "qubit", "gamma_c_hz", float, 383.0)
    qkw = dict(
        delta=TWO_PI * _get(qs, "qubit", "detuning_hz", float, 0.0),
        gamma_c=gamma_c,
        f_q=_get(qs, "qubit", "f_q_hz", float, 4.983e9),
    )
    if ideal_q:
        qkw.update(t1=math.inf, t2=math.inf, p_th=0.0)
    else:
        qkw.update(
            t1=_get(qs, "qubit", "t1_us", _time_us, 25.4e-6),
            t2=_get(qs, "qubit", "t2_us", _time_us, 32e-6),
            p_th=_get(qs, "qubit", "p_th", float, 0.01),
        )
    qubit = _wrap("qubit", lambda: QubitConfig(**qkw))

    ds = raw.get("drive", {})
    drive = _wrap(
        "drive",
        lambda: DriveConfig(
            omega=TWO_PI * _get(ds, "drive", "omega_hz", float, 14.2e3),
            t_r=_get(ds, "drive", "t_r_us", float, 8.0) * 1e-6,
            phi=_get(ds, "drive", "phi_rad", float, 0.0),
        ),
    )
    n_cycles = _get(ds, "drive", "n_cycles", int, 3)
    _check(n_cycles >= 1, "must be >= 1", "drive.n_cycles")
    samples = _get(ds, "drive", "samples_per_stroke", int, 100)
    _check(samples >= 1, "must be >= 1", "drive.samples_per_stroke")
    spontaneous = _get(ds, "drive", "spontaneous", _bool, True)

    rs = raw.get("readout", {})
    rkw = dict(
        t_meas=_get(rs, "readout", "t_meas_ns", float, 536.0) * 1e-9,
        t_int=_get(rs, "readout", "t_int_ns", float, 280.0) * 1e-9,
        reset_max_iter=_get(rs, "readout", "reset_max_iter", int, 10),
    )
    if _get(rs, "readout", "ideal", _bool, False):
        rkw.update(assignment_error=0.0, gate_error=0.0)
    else:
        rkw.update(
            assignment_error=_get(rs, "readout", "assignment_error", float, 0.004),
            gate_error=_get(rs, "readout", "gate_error", float, 0.0016),
        )
    readout = _wrap("readout", lambda: ReadoutConfig(**rkw))

    base = qubit
    tls = []
    for section in ("tls_1", "tls_2"):
        if section not in raw:
            continue
        ts = raw[section]
        shift = _get(ts, section, "shift_hz", float)
        p = _get(ts, section, "p", float, 0.2)
        applies = _get(ts, section, "t2_applies_to", str, "excited")
        _check(applies in ("excited", "base"), "must be 'excited' or 'base'", f"{section}.t2_applies_to")
        t2 = _get(ts, section, "t2_us", _time_us, 0.0) or None
        if t2 is not None and applies == "base":
            if ideal_q:
                raise ConfigError("a base-T2 reading needs a non-ideal qubit", f"{section}.t2_applies_to")
            base = _wrap(section, lambda: QubitConfig(**{**qkw, "t2": t2}))
            t2 = None
        tls.append(_wrap(section, lambda: TlsSpec(shift, p, t2_excited=t2)))
    if ideal_q and tls:
        raise ConfigError("TLS sections cannot be combined with an ideal qubit", "qubit.ideal")
    ensemble = TlsEnsemble(base, tuple(tls))

    sw = raw.get("sweep", {})
    sweep_om = _get(sw, "sweep", "omega_hz", _float_list, ())
    sweep_tr = _get(sw, "sweep", "t_r_us", _float_list, ())
    sweep_nc = _get(sw, "sweep", "n_cycles", int, 40)
    _check(all(v > 0 for v in sweep_om), "values must be positive", "sweep.omega_hz")
    _check(all(v > 0 for v in sweep_tr), "values must be positive", "sweep.t_r_us")
    _check(sweep_nc >= 1, "must be >= 1", "sweep.n_cycles")
    if name in ("gain_work_sweep", "open_loop_map"):
        _check(bool(sweep_om), "required for this scenario", "sweep.omega_hz")
        _check(bool(sweep_tr), "required for this scenario", "sweep.t_r_us")

    cfg = ScenarioConfig(
        name=name,
        mode=mode,
        protocol=protocol,
        seed=seed,
        trajectories=trajectories,
        qubit=base,
        drive=drive,
        n_cycles=n_cycles,
        readout=readout,
        ensemble=ensemble,
        samples_per_stroke=samples,
        spontaneous=spontaneous,
        sweep_omega_hz=sweep_om,
        sweep_t_r_us=sweep_tr,
        sweep_n_cycles=sweep_nc,
        raw=raw,
    )
    # every member of the ensemble must be a valid configuration
    _wrap("tls_1", lambda: expand(ensemble))
    return cfg


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    raw = {s: dict(parser[s]) for s in parser.sections()}
    return _resolve(raw)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_scenario(text, str(path))


def default_scenario_path(name: str) -> Path:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {SCENARIOS}", "scenario.name")
    return SCENARIO_DIR / f"{name}.ini"


def load_default(name: str) -> ScenarioConfig:
    return load_scenario(default_scenario_path(name))
