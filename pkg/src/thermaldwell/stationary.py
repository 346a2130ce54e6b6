"""Closed-form stationary values, the decay constant and its thermal/quantum split.

Everything here is built on the closed-form stationary denominator
``D = (2N+1)^2 + 2 |lambda|^2 / (g omega)^2``. The fixed point of the Bloch
flow in :mod:`thermaldwell.dynamics` does not share this denominator when the
drive is on; :func:`consistency_report` measures the gap instead of hiding it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import BlochState, bloch_generator, rk4
from .errors import ConvergenceError, DegenerateDecayError
from .model import BathParams, DriveField, SystemParams, coth_factor, thermal_weight

#: Coefficient of |lambda|^2 / (g omega)^2 in the closed-form denominator.
CLOSED_FORM_DRIVE_COEFF = 2.0

SETTLE_TOL = 1e-8
AGREE_TOL = 1e-6


def _denominator(sys: SystemParams, bath: BathParams, drive: DriveField) -> float:
    return thermal_weight(sys.omega, bath.temperature) + 2.0 * drive.abs2 / (
        sys.g * sys.omega
    ) ** 2


def stationary_state(sys: SystemParams, bath: BathParams, drive: DriveField) -> BlochState:
    """Closed-form steady state.

    ``<sz> = -(2N+1) / D`` and ``<s+> = 2 i lambda / (g omega D)``.
    The result can sit outside the Bloch ball for weak thermal damping and
    moderate drive; check :attr:`BlochState.is_physical` if that matters.
    """
    c = coth_factor(sys.omega, bath.temperature)
    d = _denominator(sys, bath, drive)
    sp = 2j * drive.amplitude / (sys.g * sys.omega * d)
    return BlochState(sp=sp, sz=-c / d)


def _alpha_gamma(sys: SystemParams, bath: BathParams, drive: DriveField) -> tuple[float, float]:
    c = coth_factor(sys.omega, bath.temperature)
    d = _denominator(sys, bath, drive)
    alpha = 0.5 * sys.omega * c / d
    gamma = 2.0 * sys.delta * drive.lambda_im / (sys.g * sys.omega) / d
    return alpha, gamma


def evolution_exponent(
    sys: SystemParams, bath: BathParams, drive: DriveField, t: float
) -> complex:
    """Exponent ``i alpha t - gamma t`` of the stationary evolution operator."""
    alpha, gamma = _alpha_gamma(sys, bath, drive)
    return complex(-gamma * t, alpha * t)


@dataclass(frozen=True)
class DecayBreakdown:
    gamma: float
    alpha: float
    pi_th: float
    pi_q: float

    @property
    def total_time(self) -> float:
        """``pi_th + pi_q``, the inverse decay constant."""
        return self.pi_th + self.pi_q


def decay_constant(sys: SystemParams, bath: BathParams, drive: DriveField) -> DecayBreakdown:
    """Decay constant at temperature ``bath.temperature`` and its two time scales.

    ``gamma = (2 delta Im(lambda) / (g omega)) / (coth^2(omega/2T) + 2|lambda|^2/(g omega)^2)``

    ``pi_th = g omega coth^2(omega/2T) / (2 delta Im(lambda))`` grows with
    temperature; ``pi_q = |lambda|^2 / (g omega delta Im(lambda))`` does not
    depend on it. ``gamma = 1 / (pi_th + pi_q)``.

    Raises
    ------
    DegenerateDecayError
        If ``delta == 0`` or ``Im(lambda) <= 0``.
    """
    if sys.delta <= 0:
        raise DegenerateDecayError(f"delta must be > 0 for a positive decay constant, got {sys.delta}")
    drive.require_decay()
    alpha, gamma = _alpha_gamma(sys, bath, drive)
    w = thermal_weight(sys.omega, bath.temperature)
    g_omega = sys.g * sys.omega
    drive_rate = sys.delta * drive.lambda_im
    pi_th = g_omega * w / (2.0 * drive_rate)
    pi_q = drive.abs2 / (g_omega * drive_rate)
    return DecayBreakdown(gamma=gamma, alpha=alpha, pi_th=pi_th, pi_q=pi_q)


def zero_temperature_gamma(sys: SystemParams, drive: DriveField) -> float:
    """``gamma_0 = (2 delta Im(lambda)/(g omega)) / (1 + 2|lambda|^2/(g omega)^2)``."""
    g_omega = sys.g * sys.omega
    return (2.0 * sys.delta * drive.lambda_im / g_omega) / (1.0 + 2.0 * drive.abs2 / g_omega**2)


def bloch_fixed_point(sys: SystemParams, bath: BathParams, drive: DriveField) -> BlochState:
    """Exact fixed point of the Bloch flow from a 3x3 linear solve."""
    a, b = bloch_generator(sys, bath, drive)
    y = np.linalg.solve(a, -b)
    return BlochState(sp=complex(y[0], y[1]), sz=float(y[2]))


def implied_drive_coefficient(
    state: BlochState, sys: SystemParams, bath: BathParams, drive: DriveField
) -> float:
    """Coefficient ``k`` such that ``<sz> = -(2N+1) / ((2N+1)^2 + k |lambda|^2/(g omega)^2)``.

    Undefined (NaN) without drive.
    """
    if drive.abs2 == 0.0:
        return math.nan
    c = coth_factor(sys.omega, bath.temperature)
    return (-c / state.sz - c * c) * (sys.g * sys.omega) ** 2 / drive.abs2


def _state_dict(state: BlochState) -> dict:
    return {"sp_re": state.sp.real, "sp_im": state.sp.imag, "sz": state.sz}


@dataclass(frozen=True)
class ConsistencyReport:
    closed_form: dict
    fixed_point: dict
    abs_diff: dict
    settled: bool
    relative_change: float
    horizon: float
    steps: int
    drive_coefficient: dict

    @property
    def max_abs_diff(self) -> float:
        return max(self.abs_diff.values())

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)


def consistency_report(
    sys: SystemParams,
    bath: BathParams,
    drive: DriveField,
    horizon: float | None = None,
    steps: int | None = None,
) -> ConsistencyReport:
    """Integrate the Bloch flow to ``horizon`` and compare with the closed form.

    The run starts from the maximally mixed state. ``horizon`` defaults to 40
    times the slowest relaxation time; ``steps`` defaults to the smallest
    count with ``h * rate_max <= 0.01``.

    "Settled" means the max-norm change over the final 10% of steps, relative
    to the final state, is below 1e-8.

    Raises
    ------
    ConvergenceError
        If the run has not settled, or if the undriven case disagrees with
        the closed form by more than 1e-6.
    """
    a, b = bloch_generator(sys, bath, drive)
    eig = np.linalg.eigvals(a)
    if horizon is None:
        horizon = 40.0 / float(np.min(-eig.real))
    if steps is None:
        steps = max(10, math.ceil(horizon * float(np.max(np.abs(eig))) / 0.01))
    h = horizon / steps
    _, ys = rk4(lambda _t, y: a @ y + b, np.zeros(3), h, steps)

    final = ys[-1]
    tail = ys[steps - max(1, steps // 10) :]
    scale = max(float(np.max(np.abs(final))), np.finfo(float).tiny)
    rel_change = float(np.max(np.abs(tail - final))) / scale
    settled = rel_change < SETTLE_TOL
    if not settled:
        raise ConvergenceError(
            f"Bloch flow not settled at horizon {horizon:.4g}: relative change {rel_change:.3e}"
        )

    fixed = BlochState(sp=complex(final[0], final[1]), sz=float(final[2]))
    closed = stationary_state(sys, bath, drive)
    diff = {
        "sp": abs(fixed.sp - closed.sp),
        "sz": abs(fixed.sz - closed.sz),
    }
    if drive.abs2 == 0.0 and max(diff.values()) > AGREE_TOL:
        raise ConvergenceError(
            f"undriven fixed point disagrees with closed form by {max(diff.values()):.3e}"
        )
    coeff = {
        "closed_form": CLOSED_FORM_DRIVE_COEFF,
        "fixed_point": implied_drive_coefficient(fixed, sys, bath, drive),
    }
    return ConsistencyReport(
        closed_form=_state_dict(closed),
        fixed_point=_state_dict(fixed),
        abs_diff=diff,
        settled=settled,
        relative_change=rel_change,
        horizon=float(horizon),
        steps=int(steps),
        drive_coefficient=coeff,
    )
