"""Slow parameter fluctuations modelled as a mixture of qubit configurations.

Each two-level fluctuator (TLS) is either in its ground state, leaving the
qubit untouched, or excited with probability ``p_excited``, in which case it
shifts the qubit frequency and changes its dephasing. With ``K`` independent
fluctuators the qubit is a weighted mixture of ``2**K`` configurations. The TLS
state is static within one pulse sequence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import least_squares

from .dynamics import QubitConfig
from .engine import (
    CycleSchedule,
    TrajectoryResult,
    average_results,
    run_engine_averaged,
    run_engine_batch,
)
from .errors import InvalidArgument, InvalidConfiguration, NonIdentifiable
from .field import FieldTimeSeries

DEFAULT_TLS_P = 0.2


@dataclass(frozen=True)
class TlsSpec:
    """One fluctuator.

    Give at most one of ``t2_excited`` (absolute qubit T2 while the TLS is
    excited, in s) and ``excess_dephasing`` (added rate in 1/s, may be
    negative). Internally both become an excess rate relative to the base T2.
    """

    freq_shift: float
    p_excited: float = DEFAULT_TLS_P
    t2_excited: float | None = None
    excess_dephasing: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_excited <= 1.0:
            raise InvalidConfiguration(f"p_excited must lie in [0, 1], got {self.p_excited}")
        if self.t2_excited is not None and self.excess_dephasing is not None:
            raise InvalidConfiguration("give either t2_excited or excess_dephasing, not both")
        if self.t2_excited is not None and not self.t2_excited > 0:
            raise InvalidConfiguration("t2_excited must be positive")
        if not math.isfinite(self.freq_shift):
            raise InvalidConfiguration("freq_shift must be finite")

    def excess_rate(self, base: QubitConfig) -> float:
        if self.t2_excited is not None:
            return 1.0 / self.t2_excited - base.gamma2
        return self.excess_dephasing or 0.0


@dataclass(frozen=True)
class TlsEnsemble:
    base: QubitConfig
    tls: tuple[TlsSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "tls", tuple(self.tls))

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(t.p_excited for t in self.tls)

    def with_probabilities(self, p: Sequence[float]) -> "TlsEnsemble":
        if len(p) != len(self.tls):
            raise InvalidArgument(f"expected {len(self.tls)} probabilities, got {len(p)}")
        return TlsEnsemble(self.base, tuple(replace(t, p_excited=float(pi)) for t, pi in zip(self.tls, p)))


def default_tls(
    base: QubitConfig | None = None,
    p: Sequence[float] = (DEFAULT_TLS_P, DEFAULT_TLS_P),
    reading: Literal["excited", "base"] = "excited",
) -> TlsEnsemble:
    """The two fluctuators reported for the device.

    ``reading="excited"`` treats T2 = 34 us as the qubit coherence while the
    70 kHz TLS is excited. ``reading="base"`` treats it as the base coherence of
    the qubit instead, so that TLS only shifts the frequency.
    """
    base = base or QubitConfig()
    if reading == "excited":
        first = TlsSpec(70e3, p[0], t2_excited=34e-6)
    elif reading == "base":
        base = replace(base, t2=34e-6)
        first = TlsSpec(70e3, p[0])
    else:
        raise InvalidArgument(f"reading must be 'excited' or 'base', got {reading!r}")
    return TlsEnsemble(base, (first, TlsSpec(6e3, p[1], t2_excited=21e-6)))


def _all_configs(ens: TlsEnsemble) -> list[tuple[tuple[int, ...], QubitConfig]]:
    """Every joint TLS state with its qubit configuration (weights not applied)."""
    base = ens.base
    out = []
    for bits in itertools.product((0, 1), repeat=len(ens.tls)):
        shift = sum(t.freq_shift for b, t in zip(bits, ens.tls) if b)
        excess = sum(t.excess_rate(base) for b, t in zip(bits, ens.tls) if b)
        t2 = base.t2
        if excess != 0.0:
            rate = base.gamma2 + excess
            if rate <= 0:
                raise InvalidConfiguration(f"TLS state {bits} gives a non-positive dephasing rate {rate}")
            t2 = 1.0 / rate
        try:
            cfg = replace(base, delta=base.delta + 2 * math.pi * shift, t2=t2)
        except InvalidConfiguration as exc:
            raise InvalidConfiguration(f"TLS state {bits}: {exc}") from exc
        out.append((bits, cfg))
    return out


def _weights(bits_list, p) -> np.ndarray:
    """Product weights for each joint state; ``p`` may carry a leading grid axis."""
    p = np.asarray(p, dtype=float)
    cols = []
    for bits in bits_list:
        w = np.ones(p.shape[:-1])
        for i, b in enumerate(bits):
            w = w * (p[..., i] if b else 1.0 - p[..., i])
        cols.append(w)
    return np.stack(cols, axis=-1)


def expand(ens: TlsEnsemble) -> list[tuple[float, QubitConfig]]:
    """Weighted configurations with non-zero weight, in binary TLS-state order."""
    configs = _all_configs(ens)
    w = _weights([b for b, _ in configs], ens.probabilities) if ens.tls else np.ones(1)
    return [(float(wi), cfg) for wi, (_, cfg) in zip(w, configs) if wi > 0]


def run_ensemble(
    ens: TlsEnsemble,
    schedule: CycleSchedule,
    mode: Literal["averaged", "monte_carlo"] = "averaged",
    *,
    n_trajectories: int | None = None,
    seed: int = 0,
    workers: int | None = None,
    samples_per_stroke: int = 100,
    spontaneous: bool = True,
) -> TrajectoryResult:
    """Weight-averaged engine output over the ensemble.

    In ``monte_carlo`` mode each trajectory draws its configuration, so the
    effective weights are the empirical member frequencies.
    """
    members = expand(ens)
    if mode == "averaged":
        runs = [
            run_engine_averaged(cfg, schedule, samples_per_stroke=samples_per_stroke, spontaneous=spontaneous)
            for _, cfg in members
        ]
        if len(runs) == 1:
            return runs[0]
        return average_results(runs, [w for w, _ in members])
    if mode == "monte_carlo":
        if not n_trajectories:
            raise InvalidArgument("monte_carlo mode needs n_trajectories")
        batch = run_engine_batch(
            members,
            schedule,
            n_trajectories,
            seed,
            workers=workers,
            samples_per_stroke=samples_per_stroke,
            spontaneous=spontaneous,
        )
        return batch.result
    raise InvalidArgument(f"unknown mode {mode!r}")


@dataclass
class TlsFit:
    p: tuple[float, ...]
    residual: float
    grid: np.ndarray | None = None
    landscape: np.ndarray | None = None


def fit_tls_probabilities(
    observed: FieldTimeSeries,
    ens: TlsEnsemble,
    schedule: CycleSchedule,
    *,
    step: float = 0.01,
    samples_per_stroke: int | None = None,
    flat_tol: float = 1e-14,
) -> TlsFit:
    """Least-squares TLS probabilities from an observed gain time series.

    The model gain is linear in the joint-state weights, so every joint
    configuration is simulated once and the ``[0, 1]^K`` grid is evaluated by a
    single matrix product. The best grid point is refined with a bounded
    trust-region solver.
    """
    k = len(ens.tls)
    if k > 2:
        raise InvalidArgument(f"at most 2 free probabilities are supported, got {k}")
    n_int = samples_per_stroke or observed.n_intervals
    configs = _all_configs(ens)
    mask = np.isfinite(observed.gain)
    target = observed.gain[mask]
    series = []
    for _, cfg in configs:
        res = run_engine_averaged(cfg, schedule, samples_per_stroke=n_int, spontaneous=observed.spontaneous)
        g = res.field.gain
        if g.shape != observed.gain.shape:
            raise InvalidArgument("observed series does not match the schedule's time grid")
        series.append(g[mask])
    G = np.stack(series, axis=1)
    bits = [b for b, _ in configs]

    if k == 0:
        r = G[:, 0] - target
        return TlsFit(p=(), residual=float(r @ r))

    axis = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    grid = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1)
    W = _weights(bits, grid)
    model = W @ G.T
    landscape = ((model - target) ** 2).sum(axis=-1)
    scale = max(float(np.max(landscape)), np.finfo(float).tiny)
    if float(np.max(landscape) - np.min(landscape)) <= flat_tol * max(scale, 1.0):
        raise NonIdentifiable("residual landscape is flat; TLS probabilities are not identifiable", landscape)

    best = np.unravel_index(int(np.argmin(landscape)), landscape.shape)
    p0 = grid[best]

    def resid(p):
        return _weights(bits, p) @ G.T - target

    sol = least_squares(resid, p0, bounds=(0.0, 1.0), xtol=1e-12, ftol=1e-14, gtol=1e-14)
    p_best, r_best = (sol.x, 2 * sol.cost) if 2 * sol.cost <= landscape[best] else (p0, float(landscape[best]))
    return TlsFit(p=tuple(float(v) for v in p_best), residual=float(r_best), grid=axis, landscape=landscape)
