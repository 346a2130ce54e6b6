"""Weak values of the survival projector and the weak dwell time.

The pre-selected state decays as ``exp(-gamma t)``; post-selecting the same
level (``k = 0``) makes the weak value of the projector a real survival
weight whose time integral over the measurement window is the dwell time.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dynamics import rk4
from .errors import (
    DegenerateWindowError,
    DomainError,
    FitDomainError,
    ParameterError,
    QuadratureError,
    SingularDenominatorError,
)
from .model import BathParams, DriveField, SystemParams
from .stationary import decay_constant

QUAD_TOL = 1e-12
SERIES_CUTOFF = 1e-4
APPROX_VALIDITY = 0.1
FIT_FRACTION = 0.4
MIN_R2 = 0.999


class ValidityWarning(UserWarning):
    """Approximation used outside the regime where it holds."""


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be > 0, got {value}")
    return value


@dataclass(frozen=True)
class BarrierWindow:
    length: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "length", _positive("length", self.length))


def barrier_indicator(x: float, window: BarrierWindow) -> int:
    """1 on ``[0, L)``, 0 elsewhere."""
    return 1 if 0.0 <= x < window.length else 0


@dataclass(frozen=True)
class MeasurementWindow:
    """Pre-selection at ``t_i``, post-selection of level ``k`` at ``t_f``."""

    t_i: float
    t_f: float
    k: int = 0
    delta_e: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_i) and math.isfinite(self.t_f)):
            raise ParameterError("window endpoints must be finite")
        if self.t_f <= self.t_i:
            raise ParameterError(f"t_f must exceed t_i, got [{self.t_i}, {self.t_f}]")
        if int(self.k) != self.k:
            raise ParameterError(f"k must be an integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if not (math.isfinite(self.delta_e) and self.delta_e >= 0):
            raise ParameterError(f"delta_e must be >= 0, got {self.delta_e}")

    @classmethod
    def of_length(cls, tau_m: float, k: int = 0, delta_e: float = 0.0) -> "MeasurementWindow":
        return cls(0.0, tau_m, k, delta_e)

    @property
    def tau_m(self) -> float:
        return self.t_f - self.t_i


def free_evolution(t: float, sys: SystemParams) -> np.ndarray:
    """``diag(exp(i omega t / 2), exp(-i omega t / 2))``."""
    phase = 0.5 * sys.omega * t
    return np.diag([cmath.exp(1j * phase), cmath.exp(-1j * phase)])


#: Pre-selected state, polarized along x.
PSI_X = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
#: Projector onto ``PSI_X``.
PROJECTOR_X = np.outer(PSI_X, PSI_X.conj())


def u00(t: float, gamma: float) -> complex:
    """Survival amplitude ``exp(-gamma t)`` of the pre-selected level."""
    gamma = _positive("gamma", gamma)
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    return complex(math.exp(-gamma * t))


def un0(t: float, n: int, gamma: float, delta_e: float, coupling: float) -> complex:
    """Amplitude fed into ladder level ``n`` by the decaying level.

    ``i h (exp((-gamma + i n dE) t) - 1) / (gamma - i n dE)``, which is what
    the amplitude equations give when the reference amplitude decays as
    ``exp(-gamma t)``.
    """
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if not (math.isfinite(gamma) and gamma >= 0):
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    rate = complex(-gamma, n * delta_e)
    if rate == 0:
        raise SingularDenominatorError("gamma - i n delta_e vanishes")
    return 1j * coupling * _expm1c(rate * t) / (-rate)


def _expm1c(z: complex) -> complex:
    """``exp(z) - 1`` without cancellation for small ``|z|``."""
    if z.imag == 0.0:
        return complex(math.expm1(z.real))
    # exp(x+iy) - 1 = expm1(x) cos y + (cos y - 1) + i exp(x) sin y
    x, y = z.real, z.imag
    re = math.expm1(x) * math.cos(y) - 2.0 * math.sin(0.5 * y) ** 2
    return complex(re, math.exp(x) * math.sin(y))


def weak_projection(t: float, window: MeasurementWindow, gamma: float) -> complex:
    """Weak value of the survival projector at time ``t`` inside ``window``.

    ``exp(-gamma (t - t_i)) (1 - exp(s (t_f - t))) / (1 - exp(s tau_m))``
    with ``s = -gamma + i k dE``. Equal to 1 at ``t_i`` and 0 at ``t_f``;
    real for ``k = 0``.
    """
    gamma = _positive("gamma", gamma)
    if not window.t_i <= t <= window.t_f:
        raise DomainError(f"t={t} outside window [{window.t_i}, {window.t_f}]")
    if t == window.t_i:
        return 1.0 + 0j
    if t == window.t_f:
        return 0j
    s = complex(-gamma, window.k * window.delta_e)
    denom = -_expm1c(s * window.tau_m)
    if abs(denom) < 1e-30:
        raise DegenerateWindowError("weak value denominator vanishes")
    num = -_expm1c(s * (window.t_f - t))
    value = math.exp(-gamma * (t - window.t_i)) * num / denom
    if s.imag == 0.0:
        return complex(value.real, 0.0)
    return value


def _survival_weight(t: float, t_i: float, t_f: float, gamma: float) -> float:
    return (
        math.exp(-gamma * (t - t_i))
        * math.expm1(-gamma * (t_f - t))
        / math.expm1(-gamma * (t_f - t_i))
    )


def dwell_integral(window: MeasurementWindow, gamma: float) -> float:
    """Dwell time by adaptive quadrature of the ``k = 0`` weak value over the window.

    Raises
    ------
    QuadratureError
        If the estimated error exceeds 1e-12.
    """
    gamma = _positive("gamma", gamma)
    if window.k != 0:
        raise ParameterError("dwell time is defined for the k = 0 post-selection only")
    t_i, t_f = window.t_i, window.t_f
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                _survival_weight,
                t_i,
                t_f,
                args=(t_i, t_f, gamma),
                epsabs=QUAD_TOL,
                epsrel=0.0,
                limit=200,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if err > QUAD_TOL:
        raise QuadratureError(f"quadrature error estimate {err:.3e} exceeds {QUAD_TOL}")
    return value


def dwell_closed(gamma: float, tau_m: float) -> float:
    """``(1/gamma) (1 - x / (exp(x) - 1))`` with ``x = gamma tau_m``.

    Below ``x = 1e-4`` the series ``tau_m (1/2 - x/12 + x^3/720)`` is used.
    """
    gamma = _positive("gamma", gamma)
    tau_m = _positive("tau_m", tau_m)
    x = gamma * tau_m
    if x < SERIES_CUTOFF:
        return tau_m * (0.5 - x / 12.0 + x**3 / 720.0)
    if x > 700.0:
        return (1.0 - x * math.exp(-x)) / gamma
    return (1.0 - x / math.expm1(x)) / gamma


def _approx(gamma: float, tau_m: float) -> float:
    return 1.0 / (2.0 / tau_m + gamma)


def dwell_approx(gamma: float, tau_m: float) -> float:
    """Truncated dwell time ``1 / (2/tau_m + gamma)``.

    Only meant for ``gamma tau_m << 1``; warns with :class:`ValidityWarning`
    above 0.1. Its relative error against :func:`dwell_closed` is about
    ``gamma tau_m / 3``.
    """
    gamma = _positive("gamma", gamma)
    tau_m = _positive("tau_m", tau_m)
    if gamma * tau_m > APPROX_VALIDITY:
        warnings.warn(
            f"gamma * tau_m = {gamma * tau_m:.3g} > {APPROX_VALIDITY}; truncation not valid",
            ValidityWarning,
            stacklevel=2,
        )
    return _approx(gamma, tau_m)


def dwell_resonant(sys: SystemParams, gamma: float) -> float:
    """Truncated dwell time with the measurement time set to ``1/omega``."""
    gamma = _positive("gamma", gamma)
    return _approx(gamma, 1.0 / sys.omega)


def dwell_thermal(sys: SystemParams, bath: BathParams, drive: DriveField) -> float:
    """Dwell time at temperature ``bath.temperature``.

    ``(pi_th + pi_q) / (1 + 2 omega (pi_th + pi_q))``; rises from its zero
    temperature value towards ``1 / (2 omega)``.
    """
    total = decay_constant(sys, bath, drive).total_time
    return total / (1.0 + 2.0 * sys.omega * total)


def dwell_zero_temperature_printed(sys: SystemParams, drive: DriveField) -> float:
    """Zero-temperature dwell time in the alternative closed form.

    ``pi_q (1 + (g omega)^2/|lambda|^2) / (1 + 2 omega pi_q (1 + (g omega)^2/|lambda|^2))``.
    It exceeds :func:`dwell_thermal` at ``T = 0`` because its effective
    thermal time is ``2 pi_th(0)`` instead of ``pi_th(0)``; see
    :func:`zero_temperature_mismatch`.
    """
    breakdown = decay_constant(sys, BathParams(0.0), drive)
    total = breakdown.pi_q * (1.0 + (sys.g * sys.omega) ** 2 / drive.abs2)
    return total / (1.0 + 2.0 * sys.omega * total)


@dataclass(frozen=True)
class ZeroTemperatureMismatch:
    dwell_thermal: float
    dwell_printed: float
    total_time_thermal: float
    total_time_printed: float
    thermal_time_ratio: float

    @property
    def difference(self) -> float:
        return self.dwell_printed - self.dwell_thermal


def zero_temperature_mismatch(sys: SystemParams, drive: DriveField) -> ZeroTemperatureMismatch:
    """Compare the two zero-temperature dwell-time forms.

    ``thermal_time_ratio`` is the implied thermal time of the alternative form
    divided by ``pi_th(0)``; it is exactly 2.
    """
    b = decay_constant(sys, BathParams(0.0), drive)
    printed_total = b.pi_q * (1.0 + (sys.g * sys.omega) ** 2 / drive.abs2)
    return ZeroTemperatureMismatch(
        dwell_thermal=dwell_thermal(sys, BathParams(0.0), drive),
        dwell_printed=dwell_zero_temperature_printed(sys, drive),
        total_time_thermal=b.total_time,
        total_time_printed=printed_total,
        thermal_time_ratio=(printed_total - b.pi_q) / b.pi_th,
    )


@dataclass(frozen=True)
class LadderConfig:
    """Discrete level coupled to an equispaced ladder ``n = -N..N``.

    ``allow_recurrence`` downgrades the ``2 t_max < 2 pi / delta_e`` check to
    a warning.
    """

    n_levels: int
    delta_e: float
    coupling: float
    t_max: float
    steps: int
    allow_recurrence: bool = False

    def __post_init__(self) -> None:
        if int(self.n_levels) != self.n_levels or self.n_levels < 1:
            raise ParameterError(f"n_levels must be a positive integer, got {self.n_levels}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ParameterError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "n_levels", int(self.n_levels))
        object.__setattr__(self, "steps", int(self.steps))
        _positive("delta_e", self.delta_e)
        _positive("t_max", self.t_max)
        if not (math.isfinite(self.coupling) and self.coupling >= 0):
            raise ParameterError(f"coupling must be >= 0, got {self.coupling}")
        if 2.0 * self.t_max >= self.recurrence_time:
            msg = (
                f"t_max={self.t_max} reaches half the recurrence time "
                f"{self.recurrence_time:.4g}"
            )
            if not self.allow_recurrence:
                raise ParameterError(msg)
            warnings.warn(msg, ValidityWarning, stacklevel=3)

    @property
    def recurrence_time(self) -> float:
        return 2.0 * math.pi / self.delta_e

    @property
    def golden_rule_rate(self) -> float:
        """Population decay rate ``2 pi h^2 / delta_e`` of a flat continuum."""
        return 2.0 * math.pi * self.coupling**2 / self.delta_e


@dataclass(frozen=True)
class LadderResult:
    """Output of :func:`ladder_decay`.

    ``rate`` is the fitted decay rate of the survival probability ``|a0|^2``;
    the amplitude decays at ``amplitude_rate = rate / 2``.
    """

    times: np.ndarray
    a0: np.ndarray
    total_prob: np.ndarray
    rate: float
    r_squared: float
    fit_window: tuple[float, float]
    ak: np.ndarray | None = None
    k: int | None = None

    @property
    def amplitude_rate(self) -> float:
        return 0.5 * self.rate

    @property
    def max_norm_error(self) -> float:
        return float(np.max(np.abs(self.total_prob - 1.0)))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "abs_a0", "total_prob"])
        for t, a, p in zip(self.times, np.abs(self.a0), self.total_prob):
            writer.writerow([format(float(v), ".17g") for v in (t, a, p)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fit_rate(times: np.ndarray, log_p: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(times, log_p, 1)
    resid = log_p - (slope * times + intercept)
    ss_tot = float(np.sum((log_p - log_p.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return -float(slope), r2


def ladder_decay(cfg: LadderConfig, window: MeasurementWindow | None = None) -> LadderResult:
    """Integrate the discrete level plus ladder and fit its decay rate.

    Amplitude equations (interaction picture), ``a0(0) = 1``, ``an(0) = 0``::

        da0/dt = -i h sum_n an exp(-i n dE t)
        dan/dt = -i h a0 exp(+i n dE t)

    ``log |a0|^2`` is fitted on ``[0, min(t_max, 0.4 * 2 pi / dE)]``. When the
    run is in the continuum regime (``h << N dE`` and the decay is fast
    against the recurrence time) a coefficient of determination below 0.999
    raises :class:`FitDomainError`.

    If ``window`` is given, the amplitude of ladder level ``window.k`` is
    recorded as ``ak`` for comparison with :func:`un0`.
    """
    n_levels = cfg.n_levels
    n = np.arange(-n_levels, n_levels + 1)
    h = cfg.coupling
    de = cfg.delta_e

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        phase = np.exp(1j * de * t * n)
        out = np.empty_like(y)
        out[0] = -1j * h * np.dot(y[1:], phase.conj())
        out[1:] = -1j * h * y[0] * phase
        return out

    y0 = np.zeros(2 * n_levels + 2, dtype=complex)
    y0[0] = 1.0
    times, ys = rk4(rhs, y0, cfg.t_max / cfg.steps, cfg.steps)
    a0 = ys[:, 0]
    total = np.sum(np.abs(ys) ** 2, axis=1)

    t_end = min(cfg.t_max, FIT_FRACTION * cfg.recurrence_time)
    mask = times <= t_end * (1 + 1e-12)
    if mask.sum() < 3:
        raise FitDomainError(f"fit window [0, {t_end:.4g}] holds fewer than 3 samples")
    p0 = np.abs(a0[mask]) ** 2
    if np.any(p0 <= 0):
        raise FitDomainError("survival probability reached zero inside the fit window")
    rate, r2 = _fit_rate(times[mask], np.log(p0))

    continuum = h < 0.1 * n_levels * de and rate * cfg.recurrence_time > 10.0
    if continuum and r2 <= MIN_R2:
        raise FitDomainError(f"decay is not exponential: R^2 = {r2:.6f}")

    ak = None
    k = None
    if window is not None:
        k = window.k
        if abs(k) > n_levels:
            raise ParameterError(f"|k|={abs(k)} exceeds ladder size {n_levels}")
        ak = ys[:, 1 + k + n_levels]
    return LadderResult(
        times=times,
        a0=a0,
        total_prob=total,
        rate=rate,
        r_squared=r2,
        fit_window=(0.0, float(t_end)),
        ak=ak,
        k=k,
    )

