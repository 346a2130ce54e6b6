"""Driven thermal master equation for the two-level system and its Bloch form.

Basis convention: ``|0>`` is the excited state (sigma_z = +1), ``|1>`` the
ground state, ``sigma_+ = |0><1|``. With this convention
``<sigma_+> = Tr(rho sigma_+) = rho[1, 0]``.

Both generators are linear (affine for the Bloch form) with constant
coefficients, so :func:`evolve` tabulates them once as small real/complex
matrices and runs a classic fixed-step RK4 over the resulting ODE.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ParameterError, StateError
from .model import BathParams, DriveField, SystemParams, planck_occupation

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
# looser checks applied along an integrated trajectory
EVOLVE_TRACE_TOL = 1e-9
EVOLVE_POSITIVITY_TOL = 1e-9

STEP_WARN = 0.01
STEP_FAIL = 0.1


class StepSizeWarning(UserWarning):
    """RK4 step is coarse relative to the fastest rate of the generator."""


class DissipatorMode(str, enum.Enum):
    """How the thermal dissipator is written.

    ``STANDARD`` is the trace-preserving Lindblad form whose Bloch projection
    is the Bloch system of :func:`bloch_rhs`. ``VERBATIM`` keeps the printed
    coefficients ``2 g^2 omega (N+1)`` and ``2 g^2 omega N`` without the
    one-half in front of the anticommutator; it does not preserve trace.
    """

    STANDARD = "standard"
    VERBATIM = "verbatim"

    @classmethod
    def parse(cls, value: "DissipatorMode | str") -> "DissipatorMode":
        try:
            return cls(value)
        except ValueError:
            raise ParameterError(
                f"unknown dissipator mode {value!r}; expected one of "
                + ", ".join(m.value for m in cls)
            ) from None


def _min_eigenvalue(matrix: np.ndarray) -> float:
    herm = 0.5 * (matrix + matrix.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 2x2 matrix."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise StateError(f"density matrix must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("density matrix has non-finite entries")
        if abs(m[1, 0] - np.conj(m[0, 1])) > HERMITIAN_TOL or np.any(
            np.abs(m.diagonal().imag) > HERMITIAN_TOL
        ):
            raise StateError("density matrix is not Hermitian")
        if abs(m[0, 0] + m[1, 1] - 1) >= TRACE_TOL:
            raise StateError(f"density matrix trace {np.trace(m)} != 1")
        lam = _min_eigenvalue(m)
        if lam < -POSITIVITY_TOL:
            raise StateError(f"density matrix has negative eigenvalue {lam:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def excited(cls) -> "DensityMatrix":
        return cls(np.array([[1, 0], [0, 0]], dtype=complex))

    @classmethod
    def ground(cls) -> "DensityMatrix":
        return cls(np.array([[0, 0], [0, 1]], dtype=complex))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(0.5 * IDENTITY)

    @classmethod
    def x_polarized(cls) -> "DensityMatrix":
        """Pure state ``(|0> + |1>) / sqrt(2)``."""
        return cls(0.5 * np.ones((2, 2), dtype=complex))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())

    @property
    def min_eigenvalue(self) -> float:
        return _min_eigenvalue(self.matrix)

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))


@dataclass(frozen=True)
class BlochState:
    """``<sigma_+>`` (complex) and ``<sigma_z>`` (real); ``<sigma_-> = conj(sp)``.

    Only the ranges ``|sz| <= 1`` and ``|sp| <= 1`` are enforced here, so that
    closed-form expectation values outside the Bloch ball stay representable.
    :func:`bloch_to_density` rejects those.
    """

    sp: complex
    sz: float

    def __post_init__(self) -> None:
        sp = complex(self.sp)
        sz = complex(self.sz)
        if abs(sz.imag) > HERMITIAN_TOL:
            raise StateError(f"<sigma_z> must be real, got {sz}")
        sz = sz.real
        if not (math.isfinite(sz) and math.isfinite(sp.real) and math.isfinite(sp.imag)):
            raise StateError("Bloch state has non-finite components")
        if not -1.0 - TRACE_TOL <= sz <= 1.0 + TRACE_TOL:
            raise StateError(f"<sigma_z> = {sz} outside [-1, 1]")
        if abs(sp) > 1.0:
            raise StateError(f"|<sigma_+>| = {abs(sp)} > 1")
        object.__setattr__(self, "sp", sp)
        object.__setattr__(self, "sz", sz)

    @property
    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the reconstructed density matrix."""
        return _min_eigenvalue(_bloch_matrix(self.sp, self.sz))

    @property
    def is_physical(self) -> bool:
        return self.min_eigenvalue >= -POSITIVITY_TOL

    @property
    def sm(self) -> complex:
        return self.sp.conjugate()

    @property
    def sx(self) -> float:
        return 2.0 * self.sp.real

    @property
    def sy(self) -> float:
        return 2.0 * self.sp.imag


class BlochRate(NamedTuple):
    """Time derivative of a Bloch state. ``dsz`` is kept complex on purpose."""

    dsp: complex
    dsz: complex


def _bloch_matrix(sp: complex, sz: float) -> np.ndarray:
    return np.array(
        [[0.5 * (1 + sz), np.conj(sp)], [sp, 0.5 * (1 - sz)]],
        dtype=complex,
    )


def bloch_to_density(state: BlochState) -> DensityMatrix:
    """``rho = [[(1+sz)/2, conj(sp)], [sp, (1-sz)/2]]``.

    Raises :class:`StateError` if the state lies outside the Bloch ball.
    """
    return DensityMatrix(_bloch_matrix(state.sp, state.sz))


def density_to_bloch(rho: DensityMatrix) -> BlochState:
    m = rho.matrix
    return BlochState(sp=complex(m[1, 0]), sz=float((m[0, 0] - m[1, 1]).real))


def thermal_rates(sys: SystemParams, bath: BathParams) -> tuple[float, float]:
    """Emission and absorption rates ``(4 g^2 omega (N+1), 4 g^2 omega N)``."""
    n = planck_occupation(sys.omega, bath.temperature)
    base = 4.0 * sys.g**2 * sys.omega
    return base * (n + 1.0), base * n


def _dissipator(l_op: np.ndarray, rho: np.ndarray, half: float) -> np.ndarray:
    ld = l_op.conj().T
    ldl = ld @ l_op
    return l_op @ rho @ ld - half * (ldl @ rho + rho @ ldl)


def lindblad_rhs(
    rho: DensityMatrix | np.ndarray,
    sys: SystemParams,
    bath: BathParams,
    drive: DriveField,
    mode: DissipatorMode | str = DissipatorMode.STANDARD,
    include_free: bool = False,
) -> np.ndarray:
    """Right-hand side ``d rho / dt`` of the driven thermal master equation.

    Parameters
    ----------
    rho : DensityMatrix or ndarray
        Current state. Raw arrays are accepted unvalidated so the map can be
        applied to basis matrices.
    mode : DissipatorMode or str
        ``"standard"`` (trace preserving) or ``"verbatim"``.
    include_free : bool
        Add the free precession ``-i [omega sigma_z / 2, rho]``.

    Returns
    -------
    ndarray
        Complex 2x2 derivative.
    """
    mode = DissipatorMode.parse(mode)
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    gamma_down, gamma_up = thermal_rates(sys, bath)
    if mode is DissipatorMode.STANDARD:
        out = gamma_down * _dissipator(SIGMA_MINUS, r, 0.5)
        out = out + gamma_up * _dissipator(SIGMA_PLUS, r, 0.5)
    else:
        # printed coefficients are half the standard rates, anticommutator unhalved
        out = 0.5 * gamma_down * _dissipator(SIGMA_MINUS, r, 1.0)
        out = out + 0.5 * gamma_up * _dissipator(SIGMA_PLUS, r, 1.0)
    lam = drive.amplitude
    h_drive = sys.g * (lam * SIGMA_PLUS + lam.conjugate() * SIGMA_MINUS)
    out = out - 1j * (h_drive @ r - r @ h_drive)
    if include_free:
        h0 = 0.5 * sys.omega * SIGMA_Z
        out = out - 1j * (h0 @ r - r @ h0)
    return out


def _bloch_derivative(
    sp: complex, sz: complex, sys: SystemParams, bath: BathParams, drive: DriveField
) -> BlochRate:
    n = planck_occupation(sys.omega, bath.temperature)
    g, omega = sys.g, sys.omega
    lam = drive.amplitude
    sm = np.conj(sp)
    coherence = 2.0 * g**2 * omega * (2.0 * n + 1.0)
    dsp = -coherence * sp - 1j * g * lam.conjugate() * sz
    dsz = (
        -2.0 * coherence * sz
        - 4.0 * g**2 * omega
        - 0.5j * g * (lam * sp - lam.conjugate() * sm)
    )
    return BlochRate(complex(dsp), complex(dsz))


def bloch_rhs(
    state: BlochState, sys: SystemParams, bath: BathParams, drive: DriveField
) -> BlochRate:
    """Bloch equations for ``<sigma_+>`` and ``<sigma_z>``.

    ``d<s+>/dt = -2 g^2 omega (2N+1) <s+> - i g conj(lambda) <sz>``

    ``d<sz>/dt = -4 g^2 omega (2N+1) <sz> - 4 g^2 omega
    - (i/2) g (lambda <s+> - conj(lambda) <s->)``

    The drive term in the second line carries a factor 1/4 relative to what
    the Hamiltonian ``g (lambda s+ + h.c.)`` would give, so the driven Bloch
    flow is not the projection of :func:`lindblad_rhs`. The undriven flows
    coincide.
    """
    return _bloch_derivative(state.sp, state.sz, sys, bath, drive)


@dataclass(frozen=True)
class EvolutionConfig:
    """Fixed-step integration controls.

    ``allow_coarse`` silences the warning for ``h * rate_max > 0.01``; steps
    with ``h * rate_max > 0.1`` are always rejected.
    """

    t_max: float
    steps: int
    dissipator_mode: DissipatorMode = DissipatorMode.STANDARD
    include_free: bool = False
    allow_coarse: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ParameterError(f"t_max must be > 0, got {self.t_max}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ParameterError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "dissipator_mode", DissipatorMode.parse(self.dissipator_mode))

    @property
    def h(self) -> float:
        return self.t_max / self.steps


def rk4(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    h: float,
    steps: int,
    t0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Classic fourth-order Runge-Kutta with a fixed step.

    Returns the ``steps + 1`` sample times and the states at each of them
    (first axis indexes time).
    """
    y = np.array(y0)
    out = np.empty((steps + 1,) + y.shape, dtype=y.dtype)
    out[0] = y
    times = t0 + h * np.arange(steps + 1)
    half = 0.5 * h
    for i in range(steps):
        t = times[i]
        k1 = f(t, y)
        k2 = f(t + half, y + half * k1)
        k3 = f(t + half, y + half * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return times, out


def liouvillian(
    sys: SystemParams,
    bath: BathParams,
    drive: DriveField,
    mode: DissipatorMode | str = DissipatorMode.STANDARD,
    include_free: bool = False,
) -> np.ndarray:
    """4x4 matrix of :func:`lindblad_rhs` acting on row-major ``vec(rho)``."""
    cols = []
    for k in range(4):
        basis = np.zeros(4, dtype=complex)
        basis[k] = 1.0
        cols.append(
            lindblad_rhs(basis.reshape(2, 2), sys, bath, drive, mode, include_free).reshape(4)
        )
    return np.stack(cols, axis=1)


def bloch_generator(
    sys: SystemParams, bath: BathParams, drive: DriveField
) -> tuple[np.ndarray, np.ndarray]:
    """Real affine form ``dy/dt = A y + b`` of :func:`bloch_rhs`.

    ``y = (Re <s+>, Im <s+>, <sz>)``; the imaginary part of ``d<sz>/dt``
    vanishes identically and is dropped.
    """

    def as_real(rate: BlochRate) -> np.ndarray:
        return np.array([rate.dsp.real, rate.dsp.imag, rate.dsz.real])

    b = as_real(_bloch_derivative(0j, 0.0, sys, bath, drive))
    unit = [(1.0 + 0j, 0.0), (1j, 0.0), (0j, 1.0)]
    a = np.stack(
        [as_real(_bloch_derivative(sp, sz, sys, bath, drive)) - b for sp, sz in unit],
        axis=1,
    )
    return a, b


def _check_step(h: float, generator: np.ndarray, allow_coarse: bool) -> float:
    rate_max = float(np.max(np.abs(np.linalg.eigvals(generator))))
    ratio = h * rate_max
    if ratio > STEP_FAIL:
        raise ParameterError(
            f"step h={h:.3g} too coarse: h * rate_max = {ratio:.3g} > {STEP_FAIL}"
        )
    if ratio > STEP_WARN and not allow_coarse:
        warnings.warn(
            f"h * rate_max = {ratio:.3g} exceeds {STEP_WARN}; accuracy may suffer",
            StepSizeWarning,
            stacklevel=3,
        )
    return ratio


@dataclass(frozen=True)
class Trajectory:
    """States sampled at every RK4 step.

    ``rho`` has shape ``(steps + 1, 2, 2)``. For Bloch-path runs it is
    rebuilt from ``(sp, sz)`` without validation.
    """

    times: np.ndarray
    rho: np.ndarray
    representation: str
    mode: DissipatorMode

    @property
    def sp(self) -> np.ndarray:
        return self.rho[:, 1, 0]

    @property
    def sz(self) -> np.ndarray:
        return (self.rho[:, 0, 0] - self.rho[:, 1, 1]).real

    @property
    def trace(self) -> np.ndarray:
        return np.trace(self.rho, axis1=1, axis2=2)

    @property
    def min_eigenvalue(self) -> np.ndarray:
        herm = 0.5 * (self.rho + np.conj(np.swapaxes(self.rho, 1, 2)))
        return np.linalg.eigvalsh(herm)[:, 0]

    @property
    def final(self) -> np.ndarray:
        return self.rho[-1]

    def final_bloch(self) -> BlochState:
        return BlochState(sp=complex(self.sp[-1]), sz=float(self.sz[-1]))

    def to_csv(self, path=None) -> str:
        """Write ``t, re_sp, im_sp, sz, trace, min_eigenvalue`` rows; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "re_sp", "im_sp", "sz", "trace", "min_eigenvalue"])
        trace = self.trace.real
        mins = self.min_eigenvalue
        sp = self.sp
        sz = self.sz
        for i, t in enumerate(self.times):
            writer.writerow(
                [
                    format(float(x), ".17g")
                    for x in (t, sp[i].real, sp[i].imag, sz[i], trace[i], mins[i])
                ]
            )
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def evolve(
    initial: DensityMatrix | BlochState,
    sys: SystemParams,
    bath: BathParams,
    drive: DriveField,
    cfg: EvolutionConfig,
) -> Trajectory:
    """Integrate from ``initial`` over ``[0, cfg.t_max]`` with RK4.

    A :class:`DensityMatrix` runs the master equation in ``cfg.dissipator_mode``;
    a :class:`BlochState` runs the Bloch system (the mode is ignored).
    In standard mode every sample is checked for unit trace and positivity
    to 1e-9; a violation raises :class:`StateError`.
    """
    if isinstance(initial, DensityMatrix):
        gen = liouvillian(sys, bath, drive, cfg.dissipator_mode, cfg.include_free)
        _check_step(cfg.h, gen, cfg.allow_coarse)
        times, vecs = rk4(lambda _t, y: gen @ y, initial.matrix.reshape(4), cfg.h, cfg.steps)
        traj = Trajectory(times, vecs.reshape(-1, 2, 2), "density", cfg.dissipator_mode)
        if cfg.dissipator_mode is DissipatorMode.STANDARD:
            drift = float(np.max(np.abs(traj.trace - 1.0)))
            if drift > EVOLVE_TRACE_TOL:
                raise StateError(f"trace drifted by {drift:.3e}")
            lam = float(np.min(traj.min_eigenvalue))
            if lam < -EVOLVE_POSITIVITY_TOL:
                raise StateError(f"positivity lost: eigenvalue {lam:.3e}")
        return traj
    if isinstance(initial, BlochState):
        a, b = bloch_generator(sys, bath, drive)
        _check_step(cfg.h, a, cfg.allow_coarse)
        y0 = np.array([initial.sp.real, initial.sp.imag, initial.sz])
        times, ys = rk4(lambda _t, y: a @ y + b, y0, cfg.h, cfg.steps)
        sp = ys[:, 0] + 1j * ys[:, 1]
        sz = ys[:, 2]
        rho = np.empty((len(times), 2, 2), dtype=complex)
        rho[:, 0, 0] = 0.5 * (1 + sz)
        rho[:, 1, 1] = 0.5 * (1 - sz)
        rho[:, 1, 0] = sp
        rho[:, 0, 1] = np.conj(sp)
        return Trajectory(times, rho, "bloch", cfg.dissipator_mode)
    raise ParameterError(f"initial state must be DensityMatrix or BlochState, got {type(initial)!r}")
