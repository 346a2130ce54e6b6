import math
import warnings

import numpy as np
import pytest

from thermaldwell import (
    BathParams,
    BlochState,
    DensityMatrix,
    DriveField,
    EvolutionConfig,
    ParameterError,
    StateError,
    SystemParams,
    bloch_rhs,
    bloch_to_density,
    density_to_bloch,
    evolve,
    lindblad_rhs,
)
from thermaldwell.dynamics import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    StepSizeWarning,
    liouvillian,
    rk4,
    thermal_rates,
)
from thermaldwell.model import planck_occupation

from conftest import random_params


def random_state(rng):
    # uniform-ish point inside the Bloch ball
    v = rng.normal(size=3)
    v *= rng.uniform() ** (1 / 3) / np.linalg.norm(v)
    return BlochState(sp=complex(v[0], v[1]) / 2, sz=float(v[2]))


def random_rho(rng):
    return bloch_to_density(random_state(rng))


ZERO = DriveField(0.0, 0.0)


def test_ground_state_stationary_at_zero_temperature():
    sys = SystemParams(1.3, 0.2, 0.7)
    out = lindblad_rhs(DensityMatrix.ground(), sys, BathParams(0.0), ZERO)
    assert np.array_equal(out, np.zeros((2, 2)))


def test_standard_mode_traceless(rng):
    for _ in range(100):
        sys, bath, drive = random_params(rng)
        out = lindblad_rhs(random_rho(rng), sys, bath, drive, include_free=bool(rng.integers(2)))
        assert abs(np.trace(out)) < 1e-13 * max(1.0, np.max(np.abs(out)))


def test_standard_mode_output_hermitian(rng):
    sys, bath, drive = random_params(rng)
    out = lindblad_rhs(random_rho(rng), sys, bath, drive)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-13)


def test_verbatim_trace_loss_excited_state():
    sys = SystemParams(1.0, 0.0, 1.0)
    out = lindblad_rhs(DensityMatrix.excited(), sys, BathParams(0.0), ZERO, mode="verbatim")
    gamma_down, _ = thermal_rates(sys, BathParams(0.0))
    # printed form: 2 g^2 omega [s- rho s+ - s+ s- rho - rho s+ s-] -> trace -2 g^2 omega
    assert np.trace(out).real == pytest.approx(-gamma_down / 2, rel=1e-15)
    assert np.trace(out).real == pytest.approx(-2.0, rel=1e-15)


def test_verbatim_matches_literal_expression(rng):
    sys, bath, drive = random_params(rng)
    rho = random_rho(rng).matrix
    n = planck_occupation(sys.omega, bath.temperature)
    c = 2 * sys.g**2 * sys.omega
    sp, sm = SIGMA_PLUS, SIGMA_MINUS
    lam = drive.amplitude
    hd = lam * sp + lam.conjugate() * sm
    expected = (
        c * (n + 1) * (sm @ rho @ sp - sp @ sm @ rho - rho @ sp @ sm)
        + c * n * (sp @ rho @ sm - sm @ sp @ rho - rho @ sm @ sp)
        - 1j * sys.g * (hd @ rho - rho @ hd)
    )
    np.testing.assert_allclose(
        lindblad_rhs(rho, sys, bath, drive, mode="verbatim"), expected, rtol=1e-13, atol=1e-13
    )


def test_invalid_mode():
    with pytest.raises(ParameterError):
        lindblad_rhs(DensityMatrix.ground(), SystemParams(1.0), BathParams(), ZERO, mode="bogus")


def test_undriven_projection_equals_bloch_rhs(rng):
    for _ in range(50):
        sys, bath, _ = random_params(rng)
        state = random_state(rng)
        d = lindblad_rhs(bloch_to_density(state), sys, bath, ZERO)
        rate = bloch_rhs(state, sys, bath, ZERO)
        scale = max(1.0, abs(rate.dsz))
        assert abs(d[1, 0] - rate.dsp) < 1e-12 * scale
        assert abs((d[0, 0] - d[1, 1]) - rate.dsz) < 1e-12 * scale


def test_driven_coherence_equation_matches_hamiltonian(rng):
    sys, bath, drive = random_params(rng)
    state = random_state(rng)
    d = lindblad_rhs(bloch_to_density(state), sys, bath, drive)
    rate = bloch_rhs(state, sys, bath, drive)
    assert abs(d[1, 0] - rate.dsp) < 1e-12 * max(1.0, abs(rate.dsp))


def test_driven_population_equation_differs_by_factor_four(rng):
    sys, bath, drive = random_params(rng)
    state = random_state(rng)
    d = lindblad_rhs(bloch_to_density(state), sys, bath, drive)
    undriven = bloch_rhs(state, sys, bath, ZERO).dsz
    bloch_drive = bloch_rhs(state, sys, bath, drive).dsz - undriven
    hamiltonian_drive = (d[0, 0] - d[1, 1]) - undriven
    assert hamiltonian_drive == pytest.approx(4 * bloch_drive, rel=1e-9, abs=1e-12)


def test_bloch_rhs_ground_state_stationary():
    rate = bloch_rhs(BlochState(0, -1), SystemParams(2.0, 0.0, 0.4), BathParams(0.0), ZERO)
    assert rate == (0, 0)


def test_bloch_rhs_centre():
    sys = SystemParams(1.5, 0.0, 0.8)
    for t in (0.0, 0.3, 7.0):
        rate = bloch_rhs(BlochState(0, 0), sys, BathParams(t), ZERO)
        assert rate.dsz == pytest.approx(-4 * 0.8**2 * 1.5, rel=1e-15)
        assert rate.dsp == 0


def test_bloch_rhs_sz_derivative_real(rng):
    for _ in range(100):
        sys, bath, drive = random_params(rng)
        rate = bloch_rhs(random_state(rng), sys, bath, drive)
        assert abs(rate.dsz.imag) < 1e-13


def test_bloch_to_density_examples():
    np.testing.assert_array_equal(
        bloch_to_density(BlochState(0, 1)).matrix, DensityMatrix.excited().matrix
    )
    x = bloch_to_density(BlochState(0.5, 0))
    psi = np.array([1, 1]) / math.sqrt(2)
    np.testing.assert_allclose(x.matrix, np.outer(psi, psi), atol=1e-15)
    assert x.expect(SIGMA_PLUS) == 0.5
    assert x.expect(SIGMA_Z) == 0


def test_bloch_round_trip(rng):
    for _ in range(100):
        s = random_state(rng)
        back = density_to_bloch(bloch_to_density(s))
        assert abs(back.sp - s.sp) < 1e-14
        assert abs(back.sz - s.sz) < 1e-14


def test_unphysical_bloch_state_rejected_on_conversion():
    s = BlochState(-2 / 3, -1 / 3)
    assert not s.is_physical
    with pytest.raises(StateError):
        bloch_to_density(s)


@pytest.mark.parametrize(
    "sp,sz", [(0, 1.5), (1.2, 0), (0, complex(0, 0.1)), (math.nan, 0)]
)
def test_bloch_state_range_checks(sp, sz):
    with pytest.raises(StateError):
        BlochState(sp, sz)


@pytest.mark.parametrize(
    "matrix",
    [
        [[0.5, 0.1], [0.2, 0.5]],
        [[0.6, 0], [0, 0.6]],
        [[1.2, 0], [0, -0.2]],
        [[1, 0, 0], [0, 0, 0]],
    ],
)
def test_density_matrix_validation(matrix):
    with pytest.raises(StateError):
        DensityMatrix(np.array(matrix, dtype=complex))


def test_density_matrix_immutable():
    rho = DensityMatrix.ground()
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_rk4_fourth_order():
    errs = []
    for steps in (10, 20, 40):
        _, y = rk4(lambda t, y: -y, np.array([1.0]), 1.0 / steps, steps)
        errs.append(abs(y[-1, 0] - math.exp(-1.0)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.1)


def _relax_cfg(sys, bath, horizon_units=50.0, ratio=0.005):
    gamma_down, gamma_up = thermal_rates(sys, bath)
    slow = 0.5 * (gamma_down + gamma_up)
    fast = gamma_down + gamma_up
    t_max = horizon_units / slow
    return EvolutionConfig(t_max=t_max, steps=math.ceil(t_max * fast / ratio))


def test_relaxation_to_ground_state():
    sys, bath = SystemParams(1.0, 0.0, 0.5), BathParams(0.0)
    traj = evolve(DensityMatrix.maximally_mixed(), sys, bath, ZERO, _relax_cfg(sys, bath))
    assert traj.sz[-1] == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("z", [0.3, 1.0, 4.0])
def test_relaxation_to_thermal_state(z):
    sys = SystemParams(1.0, 0.0, 0.5)
    bath = BathParams.from_z(z, 1.0)
    traj = evolve(DensityMatrix.excited(), sys, bath, ZERO, _relax_cfg(sys, bath))
    n = planck_occupation(1.0, bath.temperature)
    assert traj.sz[-1] == pytest.approx(-1 / (2 * n + 1), abs=1e-10)


def test_step_halving_converged():
    sys, bath, drive = SystemParams(1.0, 0.0, 0.5), BathParams(1.0), DriveField(0.1, 0.2)
    cfg = _relax_cfg(sys, bath, horizon_units=10.0)
    fine = EvolutionConfig(cfg.t_max, 2 * cfg.steps)
    a = evolve(DensityMatrix.x_polarized(), sys, bath, drive, cfg).final
    b = evolve(DensityMatrix.x_polarized(), sys, bath, drive, fine).final
    assert np.max(np.abs(a - b)) < 1e-8


def test_trace_and_hermiticity_preserved():
    sys, bath, drive = SystemParams(1.0, 0.0, 0.5), BathParams(0.7), DriveField(0.4, 0.6)
    traj = evolve(DensityMatrix.excited(), sys, bath, drive, _relax_cfg(sys, bath))
    assert np.max(np.abs(traj.trace - 1)) < 1e-9
    herm = np.abs(traj.rho - np.conj(np.swapaxes(traj.rho, 1, 2)))
    assert np.max(herm) < 1e-10
    assert np.min(traj.min_eigenvalue) > -1e-9


def test_bloch_and_density_paths_agree_undriven():
    sys, bath = SystemParams(1.0, 0.0, 0.5), BathParams(0.8)
    cfg = _relax_cfg(sys, bath, horizon_units=20.0)
    start = DensityMatrix.x_polarized()
    a = evolve(start, sys, bath, ZERO, cfg)
    b = evolve(density_to_bloch(start), sys, bath, ZERO, cfg)
    assert b.representation == "bloch"
    assert np.max(np.abs(a.rho - b.rho)) < 1e-8


def test_bloch_and_density_paths_differ_when_driven():
    sys, bath, drive = SystemParams(1.0, 0.0, 0.5), BathParams(0.8), DriveField(0.0, 1.0)
    cfg = _relax_cfg(sys, bath, horizon_units=20.0)
    start = DensityMatrix.x_polarized()
    a = evolve(start, sys, bath, drive, cfg)
    b = evolve(density_to_bloch(start), sys, bath, drive, cfg)
    assert np.max(np.abs(a.sz - b.sz)) > 1e-3


def test_coherence_decay_rate():
    sys, bath = SystemParams(1.0, 0.0, 0.5), BathParams(1.5)
    cfg = _relax_cfg(sys, bath, horizon_units=15.0)
    traj = evolve(DensityMatrix.x_polarized(), sys, bath, ZERO, cfg)
    slope = np.polyfit(traj.times, np.log(np.abs(traj.sp)), 1)[0]
    n = planck_occupation(1.0, 1.5)
    expected = 2 * sys.g**2 * sys.omega * (2 * n + 1)
    assert -slope == pytest.approx(expected, rel=1e-6)


def test_free_precession_rotates_coherence():
    sys, bath = SystemParams(2.0, 0.0, 0.3), BathParams(0.0)
    cfg = EvolutionConfig(t_max=1.0, steps=2000, include_free=True)
    traj = evolve(DensityMatrix.x_polarized(), sys, bath, ZERO, cfg)
    decay = math.exp(-2 * 0.3**2 * 2.0 * 1.0)
    assert traj.sp[-1] == pytest.approx(0.5 * decay * np.exp(2j), abs=1e-10)


def test_verbatim_mode_loses_trace_monotonically():
    sys, bath = SystemParams(1.0, 0.0, 0.5), BathParams(0.0)
    cfg = EvolutionConfig(t_max=2.0, steps=2000, dissipator_mode="verbatim")
    traj = evolve(DensityMatrix.excited(), sys, bath, ZERO, cfg)
    trace = traj.trace.real
    assert np.all(np.diff(trace) < 0)
    assert trace[-1] < 0.9


def test_step_size_warning_and_error():
    sys, bath = SystemParams(1.0, 0.0, 1.0), BathParams(0.0)
    # rate_max = 4 g^2 omega = 4
    with pytest.warns(StepSizeWarning):
        evolve(DensityMatrix.excited(), sys, bath, ZERO, EvolutionConfig(1.0, 200))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        evolve(DensityMatrix.excited(), sys, bath, ZERO, EvolutionConfig(1.0, 200, allow_coarse=True))
        evolve(DensityMatrix.excited(), sys, bath, ZERO, EvolutionConfig(1.0, 400))
    with pytest.raises(ParameterError):
        evolve(DensityMatrix.excited(), sys, bath, ZERO, EvolutionConfig(1.0, 30, allow_coarse=True))


@pytest.mark.parametrize("kwargs", [dict(t_max=0, steps=10), dict(t_max=1, steps=0),
                                    dict(t_max=1, steps=1.5)])
def test_evolution_config_validation(kwargs):
    with pytest.raises(ParameterError):
        EvolutionConfig(**kwargs)


def test_liouvillian_matches_rhs(rng):
    sys, bath, drive = random_params(rng)
    rho = random_rho(rng).matrix
    lv = liouvillian(sys, bath, drive)
    np.testing.assert_allclose(
        (lv @ rho.reshape(4)).reshape(2, 2), lindblad_rhs(rho, sys, bath, drive), atol=1e-12
    )


def test_trajectory_csv(tmp_path):
    sys, bath = SystemParams(1.0, 0.0, 0.5), BathParams(0.0)
    traj = evolve(DensityMatrix.excited(), sys, bath, ZERO, EvolutionConfig(1.0, 500))
    path = tmp_path / "traj.csv"
    text = traj.to_csv(path)
    assert path.read_text() == text
    lines = text.splitlines()
    assert lines[0] == "t,re_sp,im_sp,sz,trace,min_eigenvalue"
    assert len(lines) == 502
    last = [float(x) for x in lines[-1].split(",")]
    assert last[0] == 1.0
    assert last[3] == traj.sz[-1]
