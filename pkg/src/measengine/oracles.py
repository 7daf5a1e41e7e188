"""Closed-form reference results for the engine.

All functions here are pure: they never touch the simulator and are used as
independent fixtures in tests and as overlay columns in the CLI output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

_SINC_SERIES_BELOW = 1e-4


def sinc(x):
    """Unnormalised ``sin(x) / x`` with ``sinc(0) = 1``.

    Below ``|x| < 1e-4`` the Taylor series ``1 - x^2/6 + x^4/120`` is used; its
    truncation error there is below 1e-24.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SERIES_BELOW
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def ideal_excess_gain(theta, gamma_c: float, omega: float):
    """``G_c - 1 = (2 gamma_c / omega) sinc(theta)`` for an ideal qubit."""
    if omega <= 0:
        raise InvalidArgument("omega must be positive")
    return 2.0 * gamma_c / omega * sinc(theta)


def ideal_norm_work(theta):
    """``W / (hbar omega_q t_R omega) = sinc(theta) / 2``."""
    return 0.5 * sinc(theta)


def open_loop_decay(n_c, theta):
    """Stimulated power of cycle ``n_c + 1`` relative to the first: ``cos^{n_c}(theta)``."""
    if np.any(np.asarray(n_c) < 0):
        raise InvalidArgument("n_c must be >= 0")
    return np.cos(theta) ** n_c


def zeno_expansion(n_c, theta):
    """Second-order expansion ``1 - n_c theta^2 / 2`` of :func:`open_loop_decay`."""
    if np.any(np.asarray(n_c) < 0):
        raise InvalidArgument("n_c must be >= 0")
    return 1.0 - np.asarray(n_c) * theta**2 / 2.0


def finite_t2_cycle(omega: float, t_r: float, t2: float) -> tuple[float, float]:
    """Damped-cosine drive-window average ``(1/t_R) int_0^{t_R} cos(omega t) exp(-t/t2) dt``.

    Returns ``(factor, factor / 2)``: the first multiplies ``2 gamma_c / omega``
    to give the excess gain, the second is the normalised work. Uses the
    antiderivative ``Re[(1 - exp(-(g - i omega) t_R)) / (g - i omega)]`` with
    ``g = 1/t2``.
    """
    if t2 <= 0:
        raise InvalidArgument("t2 must be positive")
    if t_r <= 0:
        raise InvalidArgument("t_r must be positive")
    g = 0.0 if math.isinf(t2) else 1.0 / t2
    if g == 0.0:
        factor = float(sinc(omega * t_r))
    else:
        s = complex(g, -omega) * t_r
        # (1 - e^{-s}) / s evaluated without cancellation for small |s|
        factor = (-np.expm1(-s) / s).real if abs(s) > 1e-8 else (1 - s / 2).real
        factor = float(factor)
    return factor, factor / 2.0


def generalized_rabi(omega: float, delta: float) -> float:
    return math.hypot(omega, delta)


@dataclass(frozen=True)
class OracleCurve:
    """Closed-form ordinates on a grid, tagged with the formula that produced them."""

    x: np.ndarray
    y: np.ndarray
    formula: str


def excess_gain_curve(thetas, gamma_c: float, omega: float) -> OracleCurve:
    th = np.asarray(thetas, dtype=float)
    return OracleCurve(th, ideal_excess_gain(th, gamma_c, omega), "2*gamma_c/omega*sinc(theta)")


def norm_work_curve(thetas) -> OracleCurve:
    th = np.asarray(thetas, dtype=float)
    return OracleCurve(th, np.asarray(ideal_norm_work(th)), "sinc(theta)/2")


def open_loop_curve(n_max: int, theta: float) -> OracleCurve:
    n = np.arange(n_max + 1)
    return OracleCurve(n, open_loop_decay(n, theta), "cos(theta)**n_c")
