"""Calibration experiments: qubit reflection spectroscopy and the dispersive
AC-Stark shift / measurement-induced dephasing.

Each experiment has a forward model, a synthetic-data generator, a CSV loader
and a least-squares fitter. Rates are angular (rad/s) in the API; CSV files use
linear frequencies in Hz.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DataFormatError, FitError, InvalidArgument

TWO_PI = 2 * math.pi
LM_XTOL = 1e-10

REFLECTION_COLUMNS = ("detuning_hz", "re_r", "im_r")
STARK_COLUMNS = ("detuning_hz", "gamma_ac_hz", "omega_ac_hz", "group_id")

# Mean resonator photon numbers at zero detuning for the five drive amplitudes
# of the dephasing calibration.
STARK_PHOTON_NUMBERS = (3e-3, 1.3e-2, 3e-2, 5.3e-2, 8.3e-2)


# --------------------------------------------------------------------------- #
# data types
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class DispersiveConfig:
    chi: float
    kappa: float
    epsilon: float
    delta_omega: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidArgument(f"kappa must be positive, got {self.kappa}")


@dataclass(frozen=True)
class ReflectionPoint:
    delta: float
    r: complex

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.r.real) and math.isfinite(self.r.imag)):
            raise InvalidArgument("reflection point must be finite")


@dataclass(frozen=True)
class StarkPoint:
    delta_omega: float
    gamma_ac: float
    omega_ac: float
    group: int = 0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.delta_omega, self.gamma_ac, self.omega_ac)):
            raise InvalidArgument("Stark point must be finite")


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    ``sigma`` holds 1-sigma uncertainties from ``s^2 (J^T J)^{-1}`` with ``s^2``
    the residual variance per degree of freedom. ``condition_number`` is that of
    ``J^T J`` in the internal parameter scaling; large values flag near-degenerate
    parameter combinations, which also show up in ``correlation``.
    """

    params: dict[str, float]
    sigma: dict[str, float]
    residual_norm: float
    converged: bool
    message: str = ""
    correlation: np.ndarray | None = None
    condition_number: float = math.nan
    n_points: int = 0
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, float, float]]:
        return [(k, v, self.sigma.get(k, math.nan)) for k, v in self.params.items()]


# --------------------------------------------------------------------------- #
# reflection spectroscopy
# --------------------------------------------------------------------------- #

def reflection_model(delta, gamma_c: float, gamma_1: float, gamma_2: float, omega: float, p_pol: float = 1.0):
    """Steady-state reflection coefficient of a driven qubit seen from its line."""
    if not (gamma_1 > 0 and gamma_2 > 0):
        raise InvalidArgument("gamma_1 and gamma_2 must be positive")
    if not 0.0 <= p_pol <= 1.0:
        raise InvalidArgument(f"p_pol must lie in [0, 1], got {p_pol}")
    d = np.asarray(delta, dtype=float)
    num = gamma_c * gamma_1 * (gamma_2 - 1j * d)
    den = gamma_1 * (gamma_2**2 + d**2) + gamma_2 * omega**2
    r = 1.0 - p_pol * num / den
    return r if r.ndim else complex(r)


def synthetic_reflection(
    deltas,
    gamma_c: float,
    gamma_1: float,
    gamma_2: float,
    omega: float,
    p_pol: float = 1.0,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[ReflectionPoint]:
    """Model values plus circular complex Gaussian noise with ``E|n|^2 = noise^2``."""
    d = np.asarray(deltas, dtype=float)
    r = np.asarray(reflection_model(d, gamma_c, gamma_1, gamma_2, omega, p_pol), dtype=complex)
    if noise > 0:
        rng = rng or np.random.default_rng()
        r = r + noise / math.sqrt(2) * (rng.standard_normal(d.size) + 1j * rng.standard_normal(d.size))
    return [ReflectionPoint(float(a), complex(b)) for a, b in zip(d, r)]


def _covariance(jac: np.ndarray, resid: np.ndarray, n_par: int):
    dof = max(resid.size - n_par, 1)
    s2 = float(resid @ resid) / dof
    jtj = jac.T @ jac
    cond = float(np.linalg.cond(jtj))
    try:
        cov = np.linalg.inv(jtj) * s2
    except np.linalg.LinAlgError:
        cov = np.full((n_par, n_par), np.inf)
    return cov, cond


def _correlation(cov: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.abs(np.diag(cov)))
    with np.errstate(divide="ignore", invalid="ignore"):
        return cov / np.outer(sd, sd)


def _best_of(starts: Iterable[np.ndarray], fun) -> tuple[object, int]:
    best, n_ok = None, 0
    for x0 in starts:
        try:
            sol = least_squares(fun, x0, method="lm", xtol=LM_XTOL)
        except (ValueError, FloatingPointError):
            continue
        if not np.all(np.isfinite(sol.fun)):
            continue
        n_ok += sol.status > 0
        if best is None or sol.cost < best.cost:
            best = sol
    return best, n_ok


def fit_reflection(
    points: Sequence[ReflectionPoint], gamma_1: float, gamma_2: float, p_pol: float = 1.0
) -> FitResult:
    """Fit ``gamma_c`` and ``omega`` to complex reflection data.

    Real and imaginary residuals are stacked. Parameters are scaled by
    ``gamma_2`` and ``sqrt(gamma_1 gamma_2)`` internally; ``omega`` is started at
    four decades around the saturation scale and ``gamma_c`` from the resonant dip.
    """
    if len(points) < 8:
        raise InvalidArgument(f"need at least 8 reflection points, got {len(points)}")
    d = np.array([p.delta for p in points])
    r = np.array([p.r for p in points])
    g_scale, o_scale = gamma_2, math.sqrt(gamma_1 * gamma_2)

    def resid(x):
        m = reflection_model(d, x[0] * g_scale, gamma_1, gamma_2, x[1] * o_scale, p_pol)
        diff = m - r
        return np.concatenate([diff.real, diff.imag])

    i0 = int(np.argmin(np.abs(d)))
    gc0 = max((1.0 - r[i0].real) / max(p_pol, 1e-3), 1e-3)
    starts = [np.array([gc0, om]) for om in (0.01, 0.1, 1.0, 10.0)]
    sol, n_ok = _best_of(starts, resid)
    if sol is None:
        return FitResult({}, {}, math.inf, False, "all starts failed", n_points=len(points))
    cov, cond = _covariance(sol.jac, sol.fun, 2)
    scales = np.array([g_scale, o_scale])
    x = sol.x * np.array([1.0, math.copysign(1.0, sol.x[1])])
    sig = np.sqrt(np.abs(np.diag(cov))) * scales
    return FitResult(
        params={"gamma_c": float(x[0] * g_scale), "omega": float(x[1] * o_scale)},
        sigma={"gamma_c": float(sig[0]), "omega": float(sig[1])},
        residual_norm=float(np.linalg.norm(sol.fun)),
        converged=bool(sol.status > 0),
        message=str(sol.message),
        correlation=_correlation(cov),
        condition_number=cond,
        n_points=len(points),
        extra={"successful_starts": int(n_ok)},
    )


# --------------------------------------------------------------------------- #
# dispersive readout: AC-Stark shift and measurement-induced dephasing
# --------------------------------------------------------------------------- #

def pointer_states(c: DispersiveConfig) -> tuple[complex, complex]:
    """Resonator steady-state amplitudes with the qubit in ``|-z>`` and ``|+z>``."""
    a_minus = c.epsilon / complex(c.kappa / 2, -(c.delta_omega - c.chi / 2))
    a_plus = c.epsilon / complex(c.kappa / 2, -(c.delta_omega + c.chi / 2))
    return a_minus, a_plus


def _stark_arrays(delta_omega, chi, kappa, eps2):
    """Vectorised ``(omega_ac, gamma_ac)`` from the closed form of ``alpha_-^* alpha_+``."""
    a = kappa**2 / 4 + delta_omega**2 - chi**2 / 4
    b = kappa * chi / 2
    den = a * a + b * b
    return chi * eps2 * a / den, chi * eps2 * b / den


def stark_and_dephasing(c: DispersiveConfig) -> tuple[float, float]:
    """``(omega_ac, gamma_ac) = chi * (Re, Im)(alpha_-^* alpha_+)``."""
    a_minus, a_plus = pointer_states(c)
    prod = a_minus.conjugate() * a_plus
    return c.chi * prod.real, c.chi * prod.imag


def epsilon_for_photon_number(n0: float, chi: float, kappa: float) -> float:
    """Drive amplitude giving mean photon number ``n0`` at zero detuning."""
    return math.sqrt(n0 * (kappa**2 + chi**2) / 4.0)


def synthetic_stark(
    deltas,
    chi: float,
    kappa: float,
    epsilons: Sequence[float],
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[StarkPoint]:
    """One group per amplitude; ``noise`` is relative (multiplicative Gaussian)."""
    d = np.asarray(deltas, dtype=float)
    rng = rng or np.random.default_rng()
    out = []
    for g, eps in enumerate(epsilons):
        w, gam = _stark_arrays(d, chi, kappa, eps**2)
        if noise > 0:
            w = w * (1 + noise * rng.standard_normal(d.size))
            gam = gam * (1 + noise * rng.standard_normal(d.size))
        out += [StarkPoint(float(a), float(b), float(c), g) for a, b, c in zip(d, gam, w)]
    return out


def fit_stark(points: Sequence[StarkPoint], *, floor: float = 1e-3) -> FitResult:
    """Joint fit of ``chi``, ``kappa`` and one ``epsilon^2`` per amplitude group.

    Residuals are relative to the data with a floor of ``floor * max|data|``, so
    multiplicative noise is weighted evenly across detunings.
    """
    groups = sorted({p.group for p in points})
    d = np.array([p.delta_omega for p in points])
    gam = np.array([p.gamma_ac for p in points])
    w = np.array([p.omega_ac for p in points])
    gid = np.searchsorted(groups, [p.group for p in points])
    unit = float(np.max(np.abs(d))) or 1.0
    dn = d / unit
    sig_g = np.maximum(np.abs(gam), floor * np.max(np.abs(gam)))
    sig_w = np.maximum(np.abs(w), floor * np.max(np.abs(w)))
    n_g = len(groups)

    def model(x):
        chi, kappa = x[0], abs(x[1])
        eps2 = x[2:][gid]
        return _stark_arrays(dn, chi, kappa, eps2)

    def resid(x):
        mw, mg = model(x)
        return np.concatenate([(mg - gam / unit) / (sig_g / unit), (mw - w / unit) / (sig_w / unit)])

    def init_scales(chi, kappa):
        mw, mg = _stark_arrays(dn, chi, kappa, 1.0)
        s = np.empty(n_g)
        for i in range(n_g):
            m = gid == i
            basis = np.concatenate([mg[m] / sig_g[m], mw[m] / sig_w[m]])
            y = np.concatenate([gam[m] / sig_g[m], w[m] / sig_w[m]]) / 1.0
            s[i] = float(basis @ y / (basis @ basis)) / unit
        return s

    starts = [
        np.concatenate([[c, k], init_scales(c, k)])
        for c in (0.05, 0.15, 0.5)
        for k in (0.1, 0.3, 1.0)
    ]
    sol, n_ok = _best_of(starts, resid)
    if sol is None:
        return FitResult({}, {}, math.inf, False, "all starts failed", n_points=len(points))
    n_par = 2 + n_g
    cov, cond = _covariance(sol.jac, sol.fun, n_par)
    scale = np.array([unit, unit] + [unit**2] * n_g)
    x = sol.x.copy()
    x[1] = abs(x[1])
    sig = np.sqrt(np.abs(np.diag(cov))) * scale
    names = ["chi", "kappa"] + [f"epsilon_sq_{g}" for g in groups]
    return FitResult(
        params={n: float(v * s) for n, v, s in zip(names, x, scale)},
        sigma={n: float(v) for n, v in zip(names, sig)},
        residual_norm=float(np.linalg.norm(sol.fun)),
        converged=bool(sol.status > 0),
        message=str(sol.message),
        correlation=_correlation(cov),
        condition_number=cond,
        n_points=len(points),
        extra={"successful_starts": int(n_ok), "groups": groups},
    )


# --------------------------------------------------------------------------- #
# CSV ingestion / export
# --------------------------------------------------------------------------- #

def _read_rows(path: Path, columns: Sequence[str]):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise DataFormatError(f"{path}: file is empty")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in columns if c not in header]
    if missing:
        raise DataFormatError(f"{path}:1: missing column(s) {', '.join(missing)}")
    idx = [header.index(c) for c in columns]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(row[i]) for i in idx]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise DataFormatError(f"{path}:{lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return rows


def load_reflection_csv(path) -> list[ReflectionPoint]:
    return [ReflectionPoint(TWO_PI * d, complex(re, im)) for d, re, im in _read_rows(path, REFLECTION_COLUMNS)]


def load_stark_csv(path) -> list[StarkPoint]:
    out = []
    for lineno, (d, g, w, grp) in enumerate(_read_rows(path, STARK_COLUMNS), start=2):
        if grp != int(grp):
            raise DataFormatError(f"{path}: group_id must be an integer, got {grp}")
        out.append(StarkPoint(TWO_PI * d, TWO_PI * g, TWO_PI * w, int(grp)))
    return out


def write_reflection_csv(path, points: Sequence[ReflectionPoint]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(REFLECTION_COLUMNS)
        for p in points:
            wr.writerow([f"{p.delta / TWO_PI:.9g}", f"{p.r.real:.9g}", f"{p.r.imag:.9g}"])


def write_stark_csv(path, points: Sequence[StarkPoint]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(STARK_COLUMNS)
        for p in points:
            wr.writerow(
                [f"{p.delta_omega / TWO_PI:.9g}", f"{p.gamma_ac / TWO_PI:.9g}", f"{p.omega_ac / TWO_PI:.9g}", p.group]
            )


# --------------------------------------------------------------------------- #
# bundled fixtures
# --------------------------------------------------------------------------- #

DATA_DIR = Path(__file__).parent / "data"
REFLECTION_FIXTURE = DATA_DIR / "reflection_fixture.csv"
STARK_FIXTURE = DATA_DIR / "stark_fixture.csv"

# Ground truth behind the fixtures.
FIXTURE_T1 = 25.4e-6
FIXTURE_T2 = 32e-6
FIXTURE_GAMMA_C = TWO_PI * 383.0
FIXTURE_OMEGA = TWO_PI * 1e3
FIXTURE_CHI = TWO_PI * 3.3e6
FIXTURE_KAPPA = TWO_PI * 9e6


def reflection_detunings(gamma_2: float = 1 / FIXTURE_T2, span: float = 4.0, n: int = 12001) -> np.ndarray:
    """Uniform detuning grid over ``+-span * gamma_2``.

    The resonant dip is only ``gamma_c / gamma_2`` deep (about 8 %), so at 1 %
    noise per point the ``gamma_c`` standard error is about ``0.35 / sqrt(n)``;
    the default keeps a 1 % tolerance at roughly three standard errors.
    """
    return np.linspace(-span * gamma_2, span * gamma_2, n)


def stark_detunings(n: int = 41) -> np.ndarray:
    return TWO_PI * np.linspace(-20e6, 20e6, n)


def make_fixtures(seed: int = 2024, out_dir: Path = DATA_DIR) -> None:
    """Regenerate the bundled synthetic data files."""
    rng = np.random.default_rng(seed)
    refl = synthetic_reflection(
        reflection_detunings(n=2001), FIXTURE_GAMMA_C, 1 / FIXTURE_T1, 1 / FIXTURE_T2, FIXTURE_OMEGA, 1.0, 0.005, rng
    )
    write_reflection_csv(Path(out_dir) / REFLECTION_FIXTURE.name, refl)
    eps = [epsilon_for_photon_number(n, FIXTURE_CHI, FIXTURE_KAPPA) for n in STARK_PHOTON_NUMBERS]
    stark = synthetic_stark(stark_detunings(), FIXTURE_CHI, FIXTURE_KAPPA, eps, 0.01, rng)
    write_stark_csv(Path(out_dir) / STARK_FIXTURE.name, stark)
