"""Parameter types and the thermal occupation of the bath mode.

Natural units are used throughout (hbar = k_B = 1), so temperatures are
energies and every rate is an angular frequency. Dimensionless temperature
is ``z = T / omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateDecayError, ParameterError

#: Above this value of omega / (2 T), coth differs from 1 by less than 1e-17.
COTH_SATURATION = 20.0


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Two-level system and its coupling to the field.

    Parameters
    ----------
    omega : float
        Level splitting (angular frequency), must be > 0.
    delta : float
        Strength of the transverse perturbation, must be >= 0.
    g : float
        System-field coupling, must be > 0.
    """

    omega: float
    delta: float = 0.0
    g: float = 1.0

    def __post_init__(self) -> None:
        for name in ("omega", "delta", "g"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.omega <= 0:
            raise ParameterError(f"omega must be > 0, got {self.omega}")
        if self.g <= 0:
            raise ParameterError(f"g must be > 0, got {self.g}")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class DriveField:
    """Classical component of the field, complex amplitude ``lambda_re + i lambda_im``."""

    lambda_re: float = 0.0
    lambda_im: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lambda_re", _finite("lambda_re", self.lambda_re))
        object.__setattr__(self, "lambda_im", _finite("lambda_im", self.lambda_im))

    @property
    def amplitude(self) -> complex:
        return complex(self.lambda_re, self.lambda_im)

    @property
    def abs2(self) -> float:
        return self.lambda_re**2 + self.lambda_im**2

    def require_decay(self) -> None:
        """Raise unless the drive produces a positive decay constant."""
        if self.lambda_im <= 0:
            raise DegenerateDecayError(
                f"Im(lambda) must be > 0 for a positive decay constant, got {self.lambda_im}"
            )


@dataclass(frozen=True)
class BathParams:
    """Thermal bath at temperature ``temperature`` (energy units)."""

    temperature: float = 0.0

    def __post_init__(self) -> None:
        t = _finite("temperature", self.temperature)
        if t < 0:
            raise ParameterError(f"temperature must be >= 0, got {t}")
        object.__setattr__(self, "temperature", t)

    @classmethod
    def from_z(cls, z: float, omega: float) -> "BathParams":
        """Bath at dimensionless temperature ``z = T / omega``."""
        return cls(temperature=z * omega)

    def z(self, omega: float) -> float:
        return self.temperature / omega

    def occupation(self, omega: float) -> float:
        return planck_occupation(omega, self.temperature)


def _check(omega: float, temperature: float) -> tuple[float, float]:
    omega = _finite("omega", omega)
    temperature = _finite("temperature", temperature)
    if omega <= 0:
        raise ParameterError(f"omega must be > 0, got {omega}")
    if temperature < 0:
        raise ParameterError(f"temperature must be >= 0, got {temperature}")
    return omega, temperature


def planck_occupation(omega: float, temperature: float) -> float:
    """Mean thermal occupation ``1 / (exp(omega / T) - 1)`` of a mode at ``omega``.

    Exactly 0 at ``T = 0``. Uses ``expm1`` so that ``N ~ T/omega - 1/2`` is
    accurate at high temperature.
    """
    omega, temperature = _check(omega, temperature)
    if temperature == 0.0:
        return 0.0
    x = omega / temperature
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def coth_factor(omega: float, temperature: float) -> float:
    """``2N + 1 = coth(omega / 2T)``; exactly 1 at ``T = 0``."""
    omega, temperature = _check(omega, temperature)
    if temperature == 0.0:
        return 1.0
    x = omega / (2.0 * temperature)
    if x > COTH_SATURATION:
        return 1.0
    return 1.0 / math.tanh(x)


def thermal_weight(omega: float, temperature: float) -> float:
    """``coth^2(omega / 2T)``, equal to ``(2N + 1)^2``; exactly 1 at ``T = 0``."""
    c = coth_factor(omega, temperature)
    return c * c
