"""Outgoing field of the driven qubit: amplitude, power, gain, work, noise.

Input-output relation: ``b_out = b_in + sqrt(gamma_c) * sigma_minus`` with
``<b_in> = omega / (2 sqrt(gamma_c)) * exp(i phi)``. Powers are expressed as
photon fluxes ``P / (hbar omega_q)`` (1/s) unless the name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from .dynamics import BlochState, DriveConfig, QubitConfig
from .errors import CycleRangeError, InvalidArgument, UndefinedGain

DRIVE = "drive"
DEAD = "dead"


def photon_energy(f_q: float) -> float:
    """``hbar * omega_q`` in joules for a qubit frequency in Hz."""
    return hbar * 2 * math.pi * f_q


def input_amplitude(d: DriveConfig, q: QubitConfig) -> complex:
    if q.gamma_c <= 0:
        raise InvalidArgument("gamma_c must be positive to relate the drive to an input field")
    return d.omega / (2 * math.sqrt(q.gamma_c)) * complex(math.cos(d.phi), math.sin(d.phi))


def output_amplitude(state: BlochState, d: DriveConfig, q: QubitConfig) -> complex:
    return input_amplitude(d, q) + math.sqrt(q.gamma_c) * state.sigma_minus


def _excess_flux(x, y, d: DriveConfig, q: QubitConfig, spontaneous: bool):
    stim = 0.5 * d.omega * (math.cos(d.phi) * x - math.sin(d.phi) * y)
    if spontaneous:
        stim = stim + q.gamma_c * (x * x + y * y) / 4.0
    return stim


def instantaneous_power(
    state: BlochState, d: DriveConfig, q: QubitConfig, spontaneous: bool = True
) -> tuple[float, float]:
    """``(P_out, P_in) / (hbar omega_q)`` during a drive window.

    With ``spontaneous=False`` the coherent spontaneous-emission term
    ``gamma_c |<sigma_->|^2`` is dropped, as in the small-``gamma_c/omega`` closed forms.
    """
    p_in = abs(input_amplitude(d, q)) ** 2
    return p_in + _excess_flux(state.x, state.y, d, q, spontaneous), p_in


def gain(state: BlochState, d: DriveConfig, q: QubitConfig, spontaneous: bool = True) -> float:
    if d.omega == 0:
        raise UndefinedGain("gain is undefined without an input field (omega = 0)")
    p_out, p_in = instantaneous_power(state, d, q, spontaneous)
    return p_out / p_in


@dataclass(frozen=True)
class QuadratureStats:
    var_x_added: float
    var_y_added: float


def quadrature_variances(state: BlochState, q: QubitConfig) -> QuadratureStats:
    """Variance added by the qubit to ``X_out = b + b^dag`` and ``Y_out = i(b - b^dag)``.

    Uses the exact second moments ``gamma_c (<sigma^2> - <sigma>^2)`` with ``sigma^2 = 1``.
    """
    return QuadratureStats(q.gamma_c * (1.0 - state.x**2), q.gamma_c * (1.0 - state.y**2))


# --------------------------------------------------------------------------- #
# detection chain (mean-field amplifier relation)
# --------------------------------------------------------------------------- #

def _check_gain(g_meas: float) -> None:
    if not g_meas >= 1:
        raise InvalidArgument(f"amplifier gain must be >= 1, got {g_meas}")


def detection_chain(b_out, g_meas: float):
    """Mean measured amplitude after a phase-preserving amplifier; the idler has zero mean."""
    _check_gain(g_meas)
    return math.sqrt(g_meas) * b_out


def excess_power_from_measured(B_out, B_in, g_meas: float, f_q: float):
    """Excess power in watts from measured output/input amplitudes."""
    _check_gain(g_meas)
    return photon_energy(f_q) * (np.abs(B_out) ** 2 - np.abs(B_in) ** 2) / g_meas


def g_meas_from_calibration(B_in, omega: float, gamma_c: float) -> float:
    """Detection gain from a measured input amplitude at known Rabi frequency."""
    return 4.0 * gamma_c * (abs(B_in) / omega) ** 2


# --------------------------------------------------------------------------- #
# time series
# --------------------------------------------------------------------------- #

@dataclass
class FieldTimeSeries:
    """Sampled outgoing field over a pulse sequence.

    ``stroke_integrals[k]`` holds the exact drive-window integrals
    ``(int x, int y, int z, int |<sigma_->|^2)`` for cycle ``k``; per-cycle work
    and gain are computed from these rather than from the samples.
    """

    t: np.ndarray
    b_out: np.ndarray
    p_out_norm: np.ndarray
    p_in_norm: np.ndarray
    gain: np.ndarray
    p_excess: np.ndarray
    window: np.ndarray
    cycle_index: np.ndarray
    omega: float
    phi: float
    t_r: float
    gamma_c: float
    f_q: float
    n_intervals: int
    spontaneous: bool = True
    stroke_integrals: dict = field(default_factory=dict)

    @property
    def gain_minus_1(self) -> np.ndarray:
        return self.gain - 1.0

    @property
    def p_excess_aw(self) -> np.ndarray:
        return self.p_excess * 1e18

    def drive_mask(self, cycle_index: int | None = None) -> np.ndarray:
        m = self.window == DRIVE
        if cycle_index is not None:
            m &= self.cycle_index == cycle_index
        return m

    @property
    def n_cycles(self) -> int:
        return len(self.stroke_integrals)


def build_series(
    t: np.ndarray,
    bloch: np.ndarray,
    window: np.ndarray,
    cycle_index: np.ndarray,
    d: DriveConfig,
    q: QubitConfig,
    stroke_integrals: dict,
    n_intervals: int,
    spontaneous: bool = True,
) -> FieldTimeSeries:
    x, y = bloch[:, 0], bloch[:, 1]
    in_drive = window == DRIVE
    b_in = input_amplitude(d, q)
    sm = (x - 1j * y) / 2.0
    b_out = np.where(in_drive, b_in, 0.0) + math.sqrt(q.gamma_c) * sm
    p_in = np.where(in_drive, abs(b_in) ** 2, 0.0)
    spont = q.gamma_c * np.abs(sm) ** 2 if spontaneous else np.zeros_like(x)
    stim = 0.5 * d.omega * (math.cos(d.phi) * x - math.sin(d.phi) * y)
    excess = np.where(in_drive, stim, 0.0) + spont
    p_out = p_in + excess
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(in_drive & (p_in > 0), p_out / np.where(p_in > 0, p_in, 1.0), np.nan)
    return FieldTimeSeries(
        t=t,
        b_out=b_out,
        p_out_norm=p_out,
        p_in_norm=p_in,
        gain=g,
        p_excess=photon_energy(q.f_q) * excess,
        window=window,
        cycle_index=cycle_index,
        omega=d.omega,
        phi=d.phi,
        t_r=d.t_r,
        gamma_c=q.gamma_c,
        f_q=q.f_q,
        n_intervals=n_intervals,
        spontaneous=spontaneous,
        stroke_integrals=dict(stroke_integrals),
    )


def _cycle_flux_integral(series: FieldTimeSeries, cycle_index: int) -> float:
    if cycle_index not in series.stroke_integrals:
        raise CycleRangeError(f"cycle {cycle_index} is not contained in the series")
    if int(series.drive_mask(cycle_index).sum()) != series.n_intervals + 1:
        raise CycleRangeError(f"cycle {cycle_index} is incomplete in the series")
    ix, iy, _, isq = series.stroke_integrals[cycle_index]
    flux = 0.5 * series.omega * (math.cos(series.phi) * ix - math.sin(series.phi) * iy)
    if series.spontaneous:
        flux += series.gamma_c * isq
    return flux


def cycle_work(series: FieldTimeSeries, cycle_index: int) -> float:
    """Work delivered to the field during the drive window of a cycle (J)."""
    return photon_energy(series.f_q) * _cycle_flux_integral(series, cycle_index)


def cycle_work_normalized(series: FieldTimeSeries, cycle_index: int) -> float:
    """``W / (hbar omega_q t_R omega)``."""
    if series.omega == 0:
        raise UndefinedGain("normalized work is undefined for omega = 0")
    return _cycle_flux_integral(series, cycle_index) / (series.t_r * series.omega)


def cycle_gain(series: FieldTimeSeries, cycle_index: int) -> float:
    """Time-averaged gain over the drive window of a cycle."""
    if series.omega == 0:
        raise UndefinedGain("gain is undefined without an input field (omega = 0)")
    p_in = series.omega**2 / (4 * series.gamma_c)
    return 1.0 + _cycle_flux_integral(series, cycle_index) / (series.t_r * p_in)


def to_attowatts(p_watts):
    return p_watts * 1e18
