"""Two-level system dynamics in the Bloch representation.

Conventions
-----------
``|+z>`` is the excited state (``sigma_z = +1``) and ``|-z>`` the ground state.
All rates and frequencies are angular (rad/s), times are in seconds.

In the frame rotating at the drive frequency the Hamiltonian is::

    H / hbar = (delta * sigma_z + omega * (cos(phi) * sigma_y + sin(phi) * sigma_x)) / 2

so the Bloch vector precesses as ``dr/dt = h x r`` with
``h = (omega sin(phi), omega cos(phi), delta)``. At ``phi = 0`` a resonant drive
takes ``|+x>`` to ``(cos(omega t), 0, -sin(omega t))``: the qubit energy decreases
first. The phase sign is the one for which the stimulated-emission power
``(omega/2)(cos(phi) x - sin(phi) y)`` equals the drive-induced energy loss
``-(1/2) dz/dt``.

Dissipation uses ``Gamma_down = (1 - p_th)/t1`` and ``Gamma_up = p_th/t1``, giving
longitudinal relaxation at ``1/t1`` towards ``z_eq = -1 + 2 p_th`` and transverse
decay at ``1/t2``. The generator is affine and constant within a stroke, so every
stroke is propagated by an exact matrix exponential of the 4x4 homogeneous
generator acting on ``(x, y, z, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.linalg import expm

from .errors import InvalidArgument, InvalidConfiguration

NORM_EPS = 1e-12


@dataclass(frozen=True)
class BlochState:
    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(n2) or n2 > 1.0 + NORM_EPS:
            raise InvalidArgument(f"Bloch vector outside the unit ball (|r|^2 = {n2!r})")

    @classmethod
    def from_array(cls, r) -> "BlochState":
        r = np.asarray(r, dtype=float)
        n = float(np.linalg.norm(r))
        # absorb last-ulp overshoot from composed exact maps
        if 1.0 < n <= 1.0 + NORM_EPS:
            r = r / n
        return cls(float(r[0]), float(r[1]), float(r[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def sigma_minus(self) -> complex:
        return complex(self.x, -self.y) / 2.0

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def excited_population(self) -> float:
        return (1.0 + self.z) / 2.0


PLUS_X = BlochState(1.0, 0.0, 0.0)
MINUS_X = BlochState(-1.0, 0.0, 0.0)
PLUS_Y = BlochState(0.0, 1.0, 0.0)
GROUND = BlochState(0.0, 0.0, -1.0)
EXCITED = BlochState(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class QubitConfig:
    """Physical qubit parameters.

    ``t1 = inf`` together with ``t2 = inf`` is the dissipationless idealisation
    used by the closed-form references; ``gamma_c`` then only enters the field
    relations, so the ``gamma_c <= 1/t1`` check applies to finite ``t1`` only.
    """

    delta: float = 0.0
    t1: float = 25.4e-6
    t2: float = 32e-6
    gamma_c: float = 2 * math.pi * 383.0
    p_th: float = 0.01
    f_q: float = 4.983e9

    def __post_init__(self):
        if not (self.t1 > 0 and self.t2 > 0):
            raise InvalidConfiguration(f"t1 and t2 must be positive (t1={self.t1}, t2={self.t2})")
        if self.pure_dephasing_rate < -1e-12 * max(self.gamma2, 1.0):
            raise InvalidConfiguration(
                f"negative pure-dephasing rate: 1/t2 - 1/(2 t1) = {self.pure_dephasing_rate}"
            )
        if self.gamma_c < 0:
            raise InvalidConfiguration("gamma_c must be non-negative")
        if math.isfinite(self.t1) and self.gamma_c > self.gamma1 * (1 + 1e-12):
            raise InvalidConfiguration(
                f"gamma_c = {self.gamma_c} exceeds the total decay rate 1/t1 = {self.gamma1}"
            )
        if not 0.0 <= self.p_th < 0.5:
            raise InvalidConfiguration(f"p_th must lie in [0, 0.5), got {self.p_th}")
        if not math.isfinite(self.delta):
            raise InvalidConfiguration("delta must be finite")

    @property
    def gamma1(self) -> float:
        return 0.0 if math.isinf(self.t1) else 1.0 / self.t1

    @property
    def gamma2(self) -> float:
        return 0.0 if math.isinf(self.t2) else 1.0 / self.t2

    @property
    def pure_dephasing_rate(self) -> float:
        return self.gamma2 - self.gamma1 / 2.0

    @property
    def z_eq(self) -> float:
        return -1.0 + 2.0 * self.p_th

    @property
    def omega_q(self) -> float:
        return 2 * math.pi * self.f_q

    def thermal_state(self) -> BlochState:
        return BlochState(0.0, 0.0, self.z_eq)


def ideal_qubit(gamma_c: float = 2 * math.pi * 383.0, f_q: float = 4.983e9, delta: float = 0.0) -> QubitConfig:
    return QubitConfig(delta=delta, t1=math.inf, t2=math.inf, gamma_c=gamma_c, p_th=0.0, f_q=f_q)


@dataclass(frozen=True)
class DriveConfig:
    omega: float
    t_r: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.omega >= 0:
            raise InvalidArgument(f"omega must be >= 0, got {self.omega}")
        if not self.t_r > 0:
            raise InvalidArgument(f"t_r must be > 0, got {self.t_r}")

    @property
    def theta(self) -> float:
        return self.omega * self.t_r

    @property
    def field_vector(self) -> np.ndarray:
        return np.array([self.omega * math.sin(self.phi), self.omega * math.cos(self.phi), 0.0])


# --------------------------------------------------------------------------- #
# generators and exact propagation
# --------------------------------------------------------------------------- #

def _cross_matrix(h) -> np.ndarray:
    hx, hy, hz = h
    return np.array([[0.0, -hz, hy], [hz, 0.0, -hx], [-hy, hx, 0.0]])


def generator(q: QubitConfig, drive: DriveConfig | None = None) -> np.ndarray:
    """Homogeneous 4x4 generator of ``d(x, y, z, 1)/dt``."""
    h = np.array([0.0, 0.0, q.delta])
    if drive is not None:
        h = h + drive.field_vector
    g1, g2 = q.gamma1, q.gamma2
    L = np.zeros((4, 4))
    L[:3, :3] = _cross_matrix(h) - np.diag([g2, g2, g1])
    L[2, 3] = g1 * q.z_eq
    return L


def propagator(L: np.ndarray, dt: float) -> np.ndarray:
    if dt < 0:
        raise InvalidArgument(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return np.eye(4)
    return expm(L * dt)


def apply_affine(M: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Apply a 4x4 homogeneous map to one ``(3,)`` vector or a ``(n, 3)`` batch."""
    return r @ M[:3, :3].T + M[:3, 3]


class StrokePropagator:
    """Exact propagation of a constant-generator stroke of duration ``T``.

    Besides the end map it provides the sample maps on a uniform grid of
    ``n_intervals`` intervals and the exact time integrals needed for the field
    bookkeeping: ``integral`` maps ``(x0, y0, z0, 1)`` to ``int_0^T r(t) dt`` and
    ``quad_integral`` maps ``vec(r0 r0^T)`` to ``vec(int_0^T r r^T dt)``; both
    are obtained from block-triangular matrix exponentials (Van Loan).
    """

    def __init__(self, L: np.ndarray, T: float, n_intervals: int = 100):
        if T <= 0:
            raise InvalidArgument("stroke duration must be positive")
        if n_intervals < 1:
            raise InvalidArgument("n_intervals must be >= 1")
        self.L = np.asarray(L, dtype=float)
        self.T = float(T)
        self.n_intervals = int(n_intervals)
        self.offsets = np.linspace(0.0, self.T, self.n_intervals + 1)
        self.samples = expm(self.L[None, :, :] * self.offsets[:, None, None])
        self.samples[0] = np.eye(4)
        self.full = self.samples[-1]

        aug = np.zeros((8, 8))
        aug[:4, :4] = self.L
        aug[:4, 4:] = np.eye(4)
        self.integral = expm(aug * self.T)[:4, 4:]

        eye = np.eye(4)
        G = np.kron(self.L, eye) + np.kron(eye, self.L)
        aug2 = np.zeros((32, 32))
        aug2[:16, :16] = G
        aug2[:16, 16:] = np.eye(16)
        self.quad_integral = expm(aug2 * self.T)[:16, 16:]

    def sample_states(self, r0: np.ndarray) -> np.ndarray:
        """States on the grid, shape ``(n_intervals + 1, 3)``."""
        r0h = np.append(np.asarray(r0, dtype=float), 1.0)
        return np.einsum("kij,j->ki", self.samples, r0h)[:, :3]

    def end_state(self, r0: np.ndarray) -> np.ndarray:
        return apply_affine(self.full, r0)

    def integrals(self, r0: np.ndarray) -> tuple[float, float, float, float]:
        """``(int x, int y, int z, int (x^2 + y^2) / 4)`` over the stroke."""
        r0h = np.append(np.asarray(r0, dtype=float), 1.0)
        lin = self.integral @ r0h
        S = (self.quad_integral @ np.outer(r0h, r0h).ravel()).reshape(4, 4)
        return float(lin[0]), float(lin[1]), float(lin[2]), float((S[0, 0] + S[1, 1]) / 4.0)


# --------------------------------------------------------------------------- #
# public operations
# --------------------------------------------------------------------------- #

def rotation_matrix(axis, angle: float) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise InvalidArgument(f"rotation axis must be a unit 3-vector, got {axis!r}")
    K = _cross_matrix(n)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def rotate(state: BlochState, axis, angle: float) -> BlochState:
    """Rotate the Bloch vector by ``angle`` about ``axis`` (right-hand rule)."""
    return BlochState.from_array(rotation_matrix(axis, angle) @ state.as_array())


def evolve_free(state: BlochState, q: QubitConfig, dt: float) -> BlochState:
    return BlochState.from_array(apply_affine(propagator(generator(q), dt), state.as_array()))


def evolve_driven(state: BlochState, q: QubitConfig, d: DriveConfig, dt: float) -> BlochState:
    return BlochState.from_array(apply_affine(propagator(generator(q, d), dt), state.as_array()))


def evolve_driven_rk4(
    state: BlochState,
    q: QubitConfig,
    d: DriveConfig,
    dt: float,
    steps: int = 1000,
    envelope: Callable[[float], float] | None = None,
) -> BlochState:
    """Fixed-step RK4 for time-dependent drive amplitudes ``omega * envelope(t)``.

    The exact propagator is preferred whenever the drive is piecewise constant.
    """
    if dt < 0:
        raise InvalidArgument(f"dt must be >= 0, got {dt}")
    L_free = generator(q)
    L_drive = generator(q, d) - L_free

    def rhs(t, r):
        L = L_free + (envelope(t) if envelope else 1.0) * L_drive
        return L @ r

    r = np.append(state.as_array(), 1.0)
    h = dt / steps
    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, r)
        k2 = rhs(t + h / 2, r + h / 2 * k1)
        k3 = rhs(t + h / 2, r + h / 2 * k2)
        k4 = rhs(t + h, r + h * k3)
        r = r + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return BlochState.from_array(r[:3])


Observable = Literal["sx", "sy", "sz", "sm"]


def expectation(state: BlochState, observable: Observable):
    if observable == "sx":
        return state.x
    if observable == "sy":
        return state.y
    if observable == "sz":
        return state.z
    if observable == "sm":
        return state.sigma_minus
    raise InvalidArgument(f"unknown observable {observable!r}")
