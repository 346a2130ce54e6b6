import json
import math

import numpy as np
import pytest

from thermaldwell import (
    BathParams,
    DriveField,
    SystemParams,
    consistency_report,
    decay_constant,
    evolution_exponent,
    stationary_state,
)
from thermaldwell.errors import ConvergenceError, DegenerateDecayError
from thermaldwell.model import planck_occupation
from thermaldwell.stationary import (
    bloch_fixed_point,
    implied_drive_coefficient,
    zero_temperature_gamma,
)

from conftest import random_params


def test_stationary_undriven_zero_temperature():
    s = stationary_state(SystemParams(1.0), BathParams(0.0), DriveField())
    assert s.sz == -1.0
    assert s.sp == 0


@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_stationary_undriven_thermal(t):
    s = stationary_state(SystemParams(2.0, g=0.3), BathParams(t), DriveField())
    n = planck_occupation(2.0, t)
    assert s.sz == pytest.approx(-1 / (2 * n + 1), rel=1e-14)


def test_stationary_driven_example():
    s = stationary_state(SystemParams(1.0, g=1.0), BathParams(0.0), DriveField(0.0, 1.0))
    # D = 1 + 2 = 3
    assert s.sz == pytest.approx(-1 / 3, rel=1e-15)
    assert s.sp == pytest.approx(-2 / 3, rel=1e-15)
    assert s.sm == pytest.approx(-2 / 3, rel=1e-15)
    assert not s.is_physical


def test_evolution_exponent_example(reference):
    sys, drive = reference
    assert evolution_exponent(sys, BathParams(0.0), drive, 0.0) == 0
    phi = evolution_exponent(sys, BathParams(0.0), drive, 1.0)
    assert phi.imag == pytest.approx(1 / 6, rel=1e-15)
    assert phi.real == pytest.approx(-1 / 3, rel=1e-15)


def test_evolution_exponent_linear_and_contractive(rng):
    for _ in range(100):
        sys, bath, drive = random_params(rng)
        t = float(rng.uniform(0, 10))
        a = evolution_exponent(sys, bath, drive, t)
        b = evolution_exponent(sys, bath, drive, 2 * t)
        assert b == pytest.approx(2 * a, rel=1e-14)
        assert a.real <= 0
        gamma = decay_constant(sys, bath, drive).gamma
        assert abs(np.exp(a)) == pytest.approx(math.exp(-gamma * t), rel=1e-12)


def test_decay_constant_example(reference):
    sys, drive = reference
    b = decay_constant(sys, BathParams(0.0), drive)
    assert b.pi_th == pytest.approx(1.0, rel=1e-15)
    assert b.pi_q == pytest.approx(2.0, rel=1e-15)
    assert b.gamma == pytest.approx(1 / 3, rel=1e-15)
    assert b.alpha == pytest.approx(1 / 6, rel=1e-15)
    assert b.gamma * b.total_time == pytest.approx(1.0, rel=1e-15)


def test_decay_constant_high_temperature(reference):
    sys, drive = reference
    b = decay_constant(sys, BathParams(1e6), drive)
    assert b.gamma < 1e-12
    assert b.pi_th > 1e12


def test_decay_identity_random(rng):
    for _ in range(1000):
        sys, bath, drive = random_params(rng)
        b = decay_constant(sys, bath, drive)
        assert b.gamma * (b.pi_th + b.pi_q) == pytest.approx(1.0, rel=1e-12)


def test_gamma_strictly_decreasing(reference):
    sys, drive = reference
    temps = np.concatenate([[0.0], np.geomspace(0.05, 1e3, 200)])
    gammas = [decay_constant(sys, BathParams(t), drive).gamma for t in temps]
    assert all(b < a for a, b in zip(gammas, gammas[1:]))


def test_pi_q_independent_of_temperature(rng):
    sys, _, drive = random_params(rng)
    values = {decay_constant(sys, BathParams(t), drive).pi_q for t in np.linspace(0, 50, 40)}
    assert len(values) == 1


def test_pi_th_minimal_at_zero(reference):
    sys, drive = reference
    p0 = decay_constant(sys, BathParams(0.0), drive).pi_th
    for t in (0.1, 1.0, 10.0):
        assert decay_constant(sys, BathParams(t), drive).pi_th > p0


def test_zero_temperature_gamma_independent(rng):
    for _ in range(200):
        sys, _, drive = random_params(rng)
        g_omega = sys.g * sys.omega
        gamma0 = (2 * sys.delta * drive.lambda_im / g_omega) / (1 + 2 * drive.abs2 / g_omega**2)
        assert decay_constant(sys, BathParams(0.0), drive).gamma == pytest.approx(gamma0, rel=1e-12)
        assert zero_temperature_gamma(sys, drive) == pytest.approx(gamma0, rel=1e-12)


@pytest.mark.parametrize(
    "sys,drive",
    [
        (SystemParams(1.0, 0.0, 1.0), DriveField(0.0, 1.0)),
        (SystemParams(1.0, 0.5, 1.0), DriveField(1.0, 0.0)),
        (SystemParams(1.0, 0.5, 1.0), DriveField(0.0, -1.0)),
    ],
)
def test_degenerate_decay(sys, drive):
    with pytest.raises(DegenerateDecayError):
        decay_constant(sys, BathParams(0.0), drive)


def test_consistency_undriven_thermal():
    sys = SystemParams(1.0, 0.0, 1.0)
    rep = consistency_report(sys, BathParams(1.0), DriveField())
    n = 1 / (math.e - 1)
    assert rep.settled
    assert rep.fixed_point["sz"] == pytest.approx(-1 / (2 * n + 1), abs=1e-6)
    assert rep.max_abs_diff < 1e-6


def test_consistency_undriven_zero_temperature():
    rep = consistency_report(SystemParams(1.0, 0.0, 1.0), BathParams(0.0), DriveField())
    assert rep.closed_form["sz"] == -1.0
    assert rep.fixed_point["sz"] == pytest.approx(-1.0, abs=1e-12)


def test_consistency_driven_reports_discrepancy():
    sys, bath, drive = SystemParams(1.0, 0.0, 1.0), BathParams(0.0), DriveField(0.0, 1.0)
    rep = consistency_report(sys, bath, drive)
    assert rep.settled
    # exact fixed point of the Bloch flow: sz = -1 / (1 + 1/8), sp = 4/9
    assert rep.fixed_point["sz"] == pytest.approx(-8 / 9, abs=1e-9)
    assert rep.fixed_point["sp_re"] == pytest.approx(4 / 9, abs=1e-9)
    assert rep.closed_form["sz"] == pytest.approx(-1 / 3, rel=1e-15)
    assert rep.abs_diff["sz"] == pytest.approx(5 / 9, abs=1e-9)
    assert rep.drive_coefficient["closed_form"] == 2.0
    assert rep.drive_coefficient["fixed_point"] == pytest.approx(1 / 8, abs=1e-8)


def test_fixed_point_linear_solve_coefficient(rng):
    for _ in range(20):
        sys, bath, drive = random_params(rng)
        fp = bloch_fixed_point(sys, bath, drive)
        c = 2 * planck_occupation(sys.omega, bath.temperature) + 1
        x = drive.abs2 / (sys.g * sys.omega) ** 2
        assert fp.sz == pytest.approx(-c / (c * c + x / 8), rel=1e-12)
        assert implied_drive_coefficient(fp, sys, bath, drive) == pytest.approx(0.125, rel=1e-5)


def test_consistency_not_settled():
    with pytest.raises(ConvergenceError):
        consistency_report(SystemParams(1.0, 0.0, 1.0), BathParams(0.0), DriveField(), horizon=0.5)


def test_consistency_json_round_trip():
    rep = consistency_report(SystemParams(1.0, 0.0, 1.0), BathParams(0.0), DriveField(0.3, 1.0))
    data = json.loads(rep.to_json())
    assert set(data) >= {"closed_form", "fixed_point", "abs_diff", "settled"}
    assert data["fixed_point"]["sz"] == rep.fixed_point["sz"]
