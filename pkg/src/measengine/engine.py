"""Four-stroke measurement-engine protocol.

One run is: active reset and preparation of ``|+x>``, then ``n_cycles`` times a
drive stroke of duration ``t_R`` followed by a dead-time block of ``t_meas``
holding the sigma_x measurement and the feedback gate.

Gate conventions (all gates are rotations about y, instantaneous, with an
optional depolarising error):

* opening gate ``R_y(+pi/2)`` maps ``|+x> -> |-z>`` and ``|-x> -> |+z>``;
* standard closing gate ``R_y(-pi/2)`` is its inverse (``|-z> -> |+x>``); the same
  gate prepares ``|+x>`` from the ground state during initialisation;
* in feedback mode a reported ``-x`` outcome replaces the closing gate by
  ``R_y(+pi/2)``, which sends ``|+z> -> |+x>``.

Dead-time layout: opening gate, free evolution for ``t_meas / 2`` (the leading
remainder plus the first half of the readout window), instantaneous projection
in the sigma_z basis, free evolution for ``t_meas / 2``, closing gate.

Random numbers. Every trajectory consumes a fixed-length vector of uniforms::

    u[0]                     ensemble-member selection
    u[1 + 2i], u[2 + 2i]     reset iteration i: Born sample, assignment flip
    u[1 + 2R + 2k], +1       cycle k: Born sample, assignment flip

``R = reset_max_iter``. Trajectory ``i`` of a batch with master seed ``s`` draws
its vector from ``numpy.random.SeedSequence(s, spawn_key=prefix + (i,))``, so
batches are reproducible independently of chunking and worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import parallel
from .dynamics import (
    BlochState,
    DriveConfig,
    QubitConfig,
    StrokePropagator,
    apply_affine,
    generator,
    propagator,
)
from .errors import InvalidArgument, InvalidConfiguration, ResetFailure
from .field import (
    DEAD,
    DRIVE,
    FieldTimeSeries,
    build_series,
    cycle_gain,
    cycle_work,
    cycle_work_normalized,
    photon_energy,
)

Mode = Literal["feedback", "open_loop"]
MODES = ("feedback", "open_loop")

RY_PLUS = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
RY_MINUS = RY_PLUS.T.copy()
RY_PI = np.diag([-1.0, 1.0, -1.0])
Z_UP = np.array([0.0, 0.0, 1.0])
Z_DOWN = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class ReadoutConfig:
    """Measurement, feedback and gate imperfections.

    ``gate_error`` is the average infidelity of each gate, applied as a
    depolarising channel that shrinks the Bloch vector by ``1 - 2 * gate_error``.
    Ionisation events are folded into ``assignment_error``.
    """

    t_int: float = 280e-9
    assignment_error: float = 0.004
    t_meas: float = 536e-9
    reset_max_iter: int = 10
    gate_error: float = 0.0016

    def __post_init__(self):
        if not 0.0 <= self.assignment_error < 0.5:
            raise InvalidConfiguration(f"assignment_error must lie in [0, 0.5), got {self.assignment_error}")
        if not 0.0 <= self.t_int <= self.t_meas:
            raise InvalidConfiguration(f"need 0 <= t_int <= t_meas (t_int={self.t_int}, t_meas={self.t_meas})")
        if self.reset_max_iter < 0:
            raise InvalidConfiguration("reset_max_iter must be >= 0")
        if not 0.0 <= self.gate_error <= 0.5:
            raise InvalidConfiguration(f"gate_error must lie in [0, 0.5], got {self.gate_error}")

    @property
    def shrink(self) -> float:
        return 1.0 - 2.0 * self.gate_error


def ideal_readout(t_int: float = 280e-9, t_meas: float = 536e-9) -> ReadoutConfig:
    return ReadoutConfig(t_int=t_int, assignment_error=0.0, t_meas=t_meas, gate_error=0.0)


@dataclass(frozen=True)
class CycleSchedule:
    n_cycles: int
    drive: DriveConfig
    mode: Mode = "feedback"
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)

    def __post_init__(self):
        if self.n_cycles < 1:
            raise InvalidConfiguration("n_cycles must be >= 1")
        if self.mode not in MODES:
            raise InvalidConfiguration(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def t_cycle(self) -> float:
        return self.drive.t_r + self.readout.t_meas

    @property
    def n_uniforms(self) -> int:
        return 1 + 2 * self.readout.reset_max_iter + 2 * self.n_cycles


@dataclass(frozen=True)
class CycleRecord:
    cycle_index: int
    outcome: str | None
    p_minus: float
    end_state: BlochState
    work: float
    work_normalized: float
    cycle_gain: float


@dataclass
class TrajectoryResult:
    records: list[CycleRecord]
    times: np.ndarray
    bloch: np.ndarray
    field: FieldTimeSeries

    @property
    def states(self) -> list[tuple[float, BlochState]]:
        return [(float(t), BlochState.from_array(r)) for t, r in zip(self.times, self.bloch)]

    @property
    def works(self) -> np.ndarray:
        return np.array([r.work for r in self.records])

    @property
    def works_normalized(self) -> np.ndarray:
        return np.array([r.work_normalized for r in self.records])

    @property
    def cycle_gains(self) -> np.ndarray:
        return np.array([r.cycle_gain for r in self.records])

    def cycle_start_states(self) -> np.ndarray:
        """Bloch vector at the first drive sample of every cycle, shape ``(n_cycles, 3)``."""
        first = np.flatnonzero(np.diff(np.r_[0, self.field.cycle_index]) != 0)
        return self.bloch[first]


# --------------------------------------------------------------------------- #
# gate / block maps
# --------------------------------------------------------------------------- #

class _Block:
    """Precomputed maps for reset, preparation and the measurement block."""

    def __init__(self, q: QubitConfig, r: ReadoutConfig):
        self.q, self.r = q, r
        s = r.shrink
        self.g_open = s * RY_PLUS
        self.g_plus = s * RY_MINUS
        self.g_minus = s * RY_PLUS
        self.g_pi = s * RY_PI
        self.g_init = s * RY_MINUS
        L = generator(q)
        half_lead = (r.t_meas - r.t_int) / 2 + r.t_int / 2
        half_trail = r.t_int / 2 + (r.t_meas - r.t_int) / 2
        self.lead = propagator(L, half_lead)
        self.trail = propagator(L, half_trail)
        self.after_up = apply_affine(self.trail, Z_UP)
        self.after_down = apply_affine(self.trail, Z_DOWN)


def _reset_batch(block: _Block, S: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Stochastic active reset; ``U`` holds ``2 * reset_max_iter`` uniforms per row."""
    eps = block.r.assignment_error
    S = np.array(S, dtype=float, copy=True)
    done = np.zeros(len(S), dtype=bool)
    for i in range(block.r.reset_max_iter):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        p_exc = (1.0 + S[act, 2]) / 2.0
        true_exc = U[act, 2 * i] < p_exc
        reported_exc = true_exc ^ (U[act, 2 * i + 1] < eps)
        proj = np.zeros((act.size, 3))
        proj[:, 2] = np.where(true_exc, 1.0, -1.0)
        proj[reported_exc] = proj[reported_exc] @ block.g_pi.T
        S[act] = proj
        done[act[~reported_exc]] = True
    if not done.all():
        bad = int(np.flatnonzero(~done)[0])
        raise ResetFailure(
            f"ground state not heralded within {block.r.reset_max_iter} iterations",
            last_state=BlochState.from_array(S[bad]),
        )
    return S


def _reset_channel(block: _Block, r: np.ndarray) -> np.ndarray:
    """Ensemble-averaged reset, conditioned on the reset terminating."""
    eps = block.r.assignment_error
    w_cont, r_cont = 1.0, np.asarray(r, dtype=float)
    acc = np.zeros(3)
    w_done = 0.0
    for _ in range(block.r.reset_max_iter):
        p_exc = (1.0 + r_cont[2]) / 2.0
        p_gnd = 1.0 - p_exc
        d_g, d_e = w_cont * p_gnd * (1 - eps), w_cont * p_exc * eps
        acc += d_g * Z_DOWN + d_e * Z_UP
        w_done += d_g + d_e
        c_g, c_e = w_cont * p_gnd * eps, w_cont * p_exc * (1 - eps)
        w_cont = c_g + c_e
        if w_cont <= 0.0:
            break
        r_cont = block.g_pi @ ((c_g * Z_DOWN + c_e * Z_UP) / w_cont)
    if w_done <= 0.0:
        raise ResetFailure(
            f"ground state not heralded within {block.r.reset_max_iter} iterations",
            last_state=BlochState.from_array(r_cont),
        )
    return acc / w_done


def _measure_batch(block: _Block, S, u_born, u_flip, feedback: bool):
    """Stochastic sigma_x measurement block. Returns (post, reported_minus, pre_projection)."""
    pre = apply_affine(block.lead, S @ block.g_open.T)
    p_exc = (1.0 + pre[:, 2]) / 2.0
    true_exc = u_born < p_exc
    reported_minus = true_exc ^ (u_flip < block.r.assignment_error)
    post = np.where(true_exc[:, None], block.after_up, block.after_down)
    if feedback:
        out = np.where(reported_minus[:, None], post @ block.g_minus.T, post @ block.g_plus.T)
    else:
        out = post @ block.g_plus.T
    return out, reported_minus, pre


def _measure_channel(block: _Block, r: np.ndarray, feedback: bool):
    """Ensemble-averaged measurement block. Returns (post, p_reported_minus, pre_projection)."""
    eps = block.r.assignment_error
    pre = apply_affine(block.lead, block.g_open @ r)
    p_exc = min(max((1.0 + pre[2]) / 2.0, 0.0), 1.0)
    p_gnd = 1.0 - p_exc
    a_e, a_g = block.after_up, block.after_down
    p_minus = p_exc * (1 - eps) + p_gnd * eps
    if feedback:
        out = block.g_minus @ (p_exc * (1 - eps) * a_e + p_gnd * eps * a_g) + block.g_plus @ (
            p_exc * eps * a_e + p_gnd * (1 - eps) * a_g
        )
    else:
        out = block.g_plus @ (p_exc * a_e + p_gnd * a_g)
    return out, p_minus, pre


# --------------------------------------------------------------------------- #
# single-step public operations
# --------------------------------------------------------------------------- #

def active_reset(state: BlochState, q: QubitConfig, r: ReadoutConfig, rng: np.random.Generator) -> BlochState:
    """Repeat (sigma_z readout, pi pulse if excited) until ground is reported."""
    U = rng.random((1, 2 * r.reset_max_iter))
    return BlochState.from_array(_reset_batch(_Block(q, r), state.as_array()[None, :], U)[0])


def initialize(q: QubitConfig, r: ReadoutConfig, rng: np.random.Generator | None = None) -> BlochState:
    """Reset from thermal equilibrium, then prepare ``|+x>``.

    With ``rng=None`` the ensemble-averaged preparation is returned.
    """
    block = _Block(q, r)
    r0 = q.thermal_state().as_array()
    if rng is None:
        g = _reset_channel(block, r0)
    else:
        g = _reset_batch(block, r0[None, :], rng.random((1, 2 * r.reset_max_iter)))[0]
    return BlochState.from_array(block.g_init @ g)


def measure_sigma_x(
    state: BlochState, q: QubitConfig, r: ReadoutConfig, mode: Mode, rng: np.random.Generator
) -> tuple[str, BlochState]:
    """Sample one measurement + feedback block. Returns the reported outcome and post-state."""
    u = rng.random(2)
    out, minus, _ = _measure_batch(_Block(q, r), state.as_array()[None, :], u[:1], u[1:], mode == "feedback")
    return ("-x" if minus[0] else "+x"), BlochState.from_array(out[0])


def measurement_channel(
    state: BlochState, q: QubitConfig, r: ReadoutConfig, mode: Mode
) -> tuple[float, BlochState]:
    """Averaged measurement block. Returns P(reported -x) and the averaged post-state."""
    out, p_minus, _ = _measure_channel(_Block(q, r), state.as_array(), mode == "feedback")
    return p_minus, BlochState.from_array(out)


# --------------------------------------------------------------------------- #
# full runs
# --------------------------------------------------------------------------- #

def _time_layout(schedule: CycleSchedule, n_intervals: int):
    offsets = np.linspace(0.0, schedule.drive.t_r, n_intervals + 1)
    times, window, cidx = [], [], []
    for k in range(1, schedule.n_cycles + 1):
        t0 = (k - 1) * schedule.t_cycle
        times.append(t0 + offsets)
        times.append([t0 + schedule.drive.t_r + schedule.readout.t_meas / 2])
        window += [DRIVE] * (n_intervals + 1) + [DEAD]
        cidx += [k] * (n_intervals + 2)
    return np.concatenate(times), np.array(window), np.array(cidx)


def _assemble(
    q: QubitConfig,
    schedule: CycleSchedule,
    stroke: StrokePropagator,
    start: np.ndarray,
    pre: np.ndarray,
    end: np.ndarray,
    p_minus: np.ndarray,
    outcomes: Sequence[str] | None,
    spontaneous: bool,
) -> TrajectoryResult:
    """Build samples, field and records from per-cycle (mean) states."""
    n = stroke.n_intervals
    times, window, cidx = _time_layout(schedule, n)
    blocks, integrals = [], {}
    for k in range(schedule.n_cycles):
        blocks.append(stroke.sample_states(start[k]))
        blocks.append(pre[k][None, :])
        integrals[k + 1] = stroke.integrals(start[k])
    bloch = np.concatenate(blocks)
    series = build_series(times, bloch, window, cidx, schedule.drive, q, integrals, n, spontaneous)
    records = []
    for k in range(schedule.n_cycles):
        idx = k + 1
        om = schedule.drive.omega
        records.append(
            CycleRecord(
                cycle_index=idx,
                outcome=None if outcomes is None else outcomes[k],
                p_minus=float(p_minus[k]),
                end_state=BlochState.from_array(end[k]),
                work=cycle_work(series, idx),
                work_normalized=cycle_work_normalized(series, idx) if om > 0 else math.nan,
                cycle_gain=cycle_gain(series, idx) if om > 0 else math.nan,
            )
        )
    return TrajectoryResult(records=records, times=times, bloch=bloch, field=series)


def run_engine_averaged(
    q: QubitConfig, schedule: CycleSchedule, *, samples_per_stroke: int = 100, spontaneous: bool = True
) -> TrajectoryResult:
    """Exact ensemble average of the protocol, with no sampling noise."""
    block = _Block(q, schedule.readout)
    stroke = StrokePropagator(generator(q, schedule.drive), schedule.drive.t_r, samples_per_stroke)
    feedback = schedule.mode == "feedback"
    r = block.g_init @ _reset_channel(block, q.thermal_state().as_array())
    nc = schedule.n_cycles
    start, pre, end = np.empty((nc, 3)), np.empty((nc, 3)), np.empty((nc, 3))
    p_minus = np.empty(nc)
    for k in range(nc):
        start[k] = r
        r, p_minus[k], pre[k] = _measure_channel(block, stroke.end_state(r), feedback)
        end[k] = r
    return _assemble(q, schedule, stroke, start, pre, end, p_minus, None, spontaneous)


def trajectory_uniforms(seed, schedule: CycleSchedule) -> np.ndarray:
    """The uniform vector one trajectory consumes (see module docstring)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.default_rng(ss).random(schedule.n_uniforms)


def _simulate_stochastic(q: QubitConfig, schedule: CycleSchedule, U: np.ndarray, stroke: StrokePropagator):
    """Propagate a batch of trajectories; returns per-cycle state arrays."""
    block = _Block(q, schedule.readout)
    R = schedule.readout.reset_max_iter
    n = len(U)
    S = np.tile(q.thermal_state().as_array(), (n, 1))
    S = _reset_batch(block, S, U[:, 1 : 1 + 2 * R]) @ block.g_init.T
    feedback = schedule.mode == "feedback"
    nc = schedule.n_cycles
    start = np.empty((nc, n, 3))
    pre = np.empty((nc, n, 3))
    end = np.empty((nc, n, 3))
    minus = np.empty((nc, n), dtype=bool)
    base = 1 + 2 * R
    for k in range(nc):
        start[k] = S
        S, minus[k], pre[k] = _measure_batch(
            block, stroke.end_state(S), U[:, base + 2 * k], U[:, base + 2 * k + 1], feedback
        )
        end[k] = S
    return start, pre, end, minus


def run_engine(
    q: QubitConfig,
    schedule: CycleSchedule,
    rng_seed,
    *,
    samples_per_stroke: int = 100,
    spontaneous: bool = True,
) -> TrajectoryResult:
    """One stochastic trajectory; deterministic given ``rng_seed`` (int or SeedSequence)."""
    U = trajectory_uniforms(rng_seed, schedule)[None, :]
    stroke = StrokePropagator(generator(q, schedule.drive), schedule.drive.t_r, samples_per_stroke)
    start, pre, end, minus = _simulate_stochastic(q, schedule, U, stroke)
    outcomes = ["-x" if m else "+x" for m in minus[:, 0]]
    return _assemble(
        q, schedule, stroke, start[:, 0], pre[:, 0], end[:, 0], minus[:, 0].astype(float), outcomes, spontaneous
    )


# --------------------------------------------------------------------------- #
# Monte Carlo batches
# --------------------------------------------------------------------------- #

@dataclass
class _Moments:
    n: int
    s_start: np.ndarray
    s_start_sq: np.ndarray
    s_pre: np.ndarray
    s_end: np.ndarray
    s_end_sq: np.ndarray
    n_minus: np.ndarray
    s_work: np.ndarray
    s_work_sq: np.ndarray

    @classmethod
    def zeros(cls, nc: int) -> "_Moments":
        z3 = np.zeros((nc, 3))
        return cls(0, z3.copy(), z3.copy(), z3.copy(), z3.copy(), z3.copy(), np.zeros(nc), np.zeros(nc), np.zeros(nc))

    def add(self, other: "_Moments") -> None:
        self.n += other.n
        for name in ("s_start", "s_start_sq", "s_pre", "s_end", "s_end_sq", "n_minus", "s_work", "s_work_sq"):
            setattr(self, name, getattr(self, name) + getattr(other, name))


def _stim_work_functional(q: QubitConfig, d: DriveConfig, stroke: StrokePropagator) -> np.ndarray:
    """Row vector mapping ``(x0, y0, z0, 1)`` to the stimulated-emission work of a stroke (J)."""
    J = stroke.integral
    row = 0.5 * d.omega * (math.cos(d.phi) * J[0] - math.sin(d.phi) * J[1])
    return photon_energy(q.f_q) * row


def _chunk_task(args) -> list[_Moments]:
    configs, cum_weights, schedule, start, stop, seed, prefix = args
    U = np.stack(
        [
            trajectory_uniforms(np.random.SeedSequence(seed, spawn_key=tuple(prefix) + (i,)), schedule)
            for i in range(start, stop)
        ]
    )
    member = np.searchsorted(cum_weights, U[:, 0], side="right")
    member = np.minimum(member, len(configs) - 1)
    out = []
    for c, q in enumerate(configs):
        rows = np.flatnonzero(member == c)
        m = _Moments.zeros(schedule.n_cycles)
        if rows.size:
            stroke = StrokePropagator(generator(q, schedule.drive), schedule.drive.t_r, 1)
            st, pre, end, minus = _simulate_stochastic(q, schedule, U[rows], stroke)
            w = _stim_work_functional(q, schedule.drive, stroke)
            work = st @ w[:3] + w[3]
            m = _Moments(
                n=int(rows.size),
                s_start=st.sum(axis=1),
                s_start_sq=(st**2).sum(axis=1),
                s_pre=pre.sum(axis=1),
                s_end=end.sum(axis=1),
                s_end_sq=(end**2).sum(axis=1),
                n_minus=minus.sum(axis=1).astype(float),
                s_work=work.sum(axis=1),
                s_work_sq=(work**2).sum(axis=1),
            )
        out.append(m)
    return out


@dataclass
class BatchResult:
    """Monte Carlo average over independent trajectories.

    ``result`` carries samples, field and records computed from the
    trajectory-averaged state (per ensemble member, then weight-averaged by
    member counts). Standard errors refer to per-trajectory quantities;
    ``work_*`` is the stimulated-emission work.
    """

    result: TrajectoryResult
    n_trajectories: int
    start_mean: np.ndarray
    start_sem: np.ndarray
    end_mean: np.ndarray
    end_sem: np.ndarray
    outcome_frequency: np.ndarray
    work_mean: np.ndarray
    work_sem: np.ndarray
    member_counts: list[int]


def _sem(s, s_sq, n):
    if n < 2:
        return np.zeros_like(s)
    mean = s / n
    var = np.maximum(s_sq / n - mean**2, 0.0) * n / (n - 1)
    return np.sqrt(var / n)


def run_engine_batch(
    q: QubitConfig | Sequence[tuple[float, QubitConfig]],
    schedule: CycleSchedule,
    n_trajectories: int,
    seed: int,
    *,
    workers: int | None = None,
    chunk_size: int = 8192,
    seed_prefix: tuple[int, ...] = (),
    samples_per_stroke: int = 100,
    spontaneous: bool = True,
) -> BatchResult:
    """Average ``n_trajectories`` stochastic runs.

    ``q`` may be a weighted list of configurations; each trajectory then draws
    its (static) member from ``u[0]``. Chunks are reduced in index order, so the
    result is bit-identical for any worker count.
    """
    if n_trajectories < 1:
        raise InvalidArgument("n_trajectories must be >= 1")
    members = [(1.0, q)] if isinstance(q, QubitConfig) else list(q)
    weights = np.array([w for w, _ in members], dtype=float)
    configs = [c for _, c in members]
    cum = np.cumsum(weights / weights.sum())
    tasks = [
        (configs, cum, schedule, a, min(a + chunk_size, n_trajectories), seed, seed_prefix)
        for a in range(0, n_trajectories, chunk_size)
    ]
    chunks = parallel.ordered_map(_chunk_task, tasks, workers)
    nc = schedule.n_cycles
    per_member = [_Moments.zeros(nc) for _ in configs]
    for chunk in chunks:
        for acc, m in zip(per_member, chunk):
            acc.add(m)
    total = _Moments.zeros(nc)
    for m in per_member:
        total.add(m)
    n = total.n

    results, fractions = [], []
    for cfg, m in zip(configs, per_member):
        if m.n == 0:
            continue
        stroke = StrokePropagator(generator(cfg, schedule.drive), schedule.drive.t_r, samples_per_stroke)
        results.append(
            _assemble(
                cfg, schedule, stroke, m.s_start / m.n, m.s_pre / m.n, m.s_end / m.n, m.n_minus / m.n, None, spontaneous
            )
        )
        fractions.append(m.n / n)
    result = results[0] if len(results) == 1 else average_results(results, fractions)
    return BatchResult(
        result=result,
        n_trajectories=n,
        start_mean=total.s_start / n,
        start_sem=_sem(total.s_start, total.s_start_sq, n),
        end_mean=total.s_end / n,
        end_sem=_sem(total.s_end, total.s_end_sq, n),
        outcome_frequency=total.n_minus / n,
        work_mean=total.s_work / n,
        work_sem=_sem(total.s_work, total.s_work_sq, n),
        member_counts=[m.n for m in per_member],
    )


def average_results(results: Sequence[TrajectoryResult], weights: Sequence[float]) -> TrajectoryResult:
    """Weighted linear average of runs sharing one time grid (fixed summation order)."""
    if not results:
        raise InvalidArgument("nothing to average")
    w = np.asarray(weights, dtype=float)
    first = results[0]
    for r in results[1:]:
        if r.times.shape != first.times.shape or not np.array_equal(r.times, first.times):
            raise InvalidArgument("results must share the same time grid")

    def wsum(get):
        acc = w[0] * get(results[0])
        for wi, r in zip(w[1:], results[1:]):
            acc = acc + wi * get(r)
        return acc

    f0 = first.field
    integrals = {
        k: tuple(float(v) for v in wsum(lambda r, k=k: np.array(r.field.stroke_integrals[k])))
        for k in f0.stroke_integrals
    }
    series = FieldTimeSeries(
        t=f0.t,
        b_out=wsum(lambda r: r.field.b_out),
        p_out_norm=wsum(lambda r: r.field.p_out_norm),
        p_in_norm=wsum(lambda r: r.field.p_in_norm),
        gain=wsum(lambda r: r.field.gain),
        p_excess=wsum(lambda r: r.field.p_excess),
        window=f0.window,
        cycle_index=f0.cycle_index,
        omega=f0.omega,
        phi=f0.phi,
        t_r=f0.t_r,
        gamma_c=f0.gamma_c,
        f_q=f0.f_q,
        n_intervals=f0.n_intervals,
        spontaneous=f0.spontaneous,
        stroke_integrals=integrals,
    )
    records = []
    for i, rec in enumerate(first.records):
        records.append(
            CycleRecord(
                cycle_index=rec.cycle_index,
                outcome=None,
                p_minus=float(wsum(lambda r: r.records[i].p_minus)),
                end_state=BlochState.from_array(wsum(lambda r: r.records[i].end_state.as_array())),
                work=float(wsum(lambda r: r.records[i].work)),
                work_normalized=float(wsum(lambda r: r.records[i].work_normalized)),
                cycle_gain=float(wsum(lambda r: r.records[i].cycle_gain)),
            )
        )
    return TrajectoryResult(records=records, times=first.times, bloch=wsum(lambda r: r.bloch), field=series)
