import numpy as np
import pytest
from scipy.integrate import solve_ivp

from spinwaves.dicke import structure_factor
from spinwaves.dynamics import (
    AmplitudeTrace,
    ModeGrid,
    PulseProfile,
    cascade_two_photon,
    e0_of_t,
    emission_spectrum,
    excitation_bookkeeping,
    mode_amplitude,
    phase_matched_weights,
    single_exc_ode_oracle,
    validity_check,
)
from spinwaves.ensemble import AtomicEnsemble, Geometry, generate_ensemble
from spinwaves.radiative import decay_matrix, f_pair, gamma_n

from _helpers import lorentzian_fwhm

K0P = np.array([0.0, 0.0, 1.0])
AXIS = np.array([1.0, 0.0, 0.0])


def sphere(n_atoms, radius=2e-6, seed=5):
    return generate_ensemble(Geometry("sphere", radius), n_atoms=n_atoms, seed=seed)


# ---------------------------------------------------------------------------
# pulse and symmetric amplitude


def test_pulse_normalization_enforced():
    for shape in ("square", "sin2"):
        pulse = PulseProfile.pi_pulse(shape, 80.0)
        assert pulse.beta(pulse.duration) == pytest.approx(np.pi / 2.0, rel=1e-12)
        assert pulse.beta(10 * pulse.duration) == pytest.approx(np.pi / 2.0, rel=1e-12)
    with pytest.raises(ValueError, match="pi pulse"):
        PulseProfile("square", 10.0, 1.0)
    with pytest.raises(ValueError):
        PulseProfile.pi_pulse("triangle", 10.0)


def test_e0_limits():
    pulse = PulseProfile.pi_pulse("square", 200.0)
    gamma = 2.0
    trace = e0_of_t(pulse, gamma, np.array([0.0, pulse.duration]))
    assert trace.values[0] == 0.0
    assert abs(trace.values[1]) == pytest.approx(1.0, abs=gamma * pulse.duration / 2.0)


def test_e0_closed_form_value():
    pulse = PulseProfile.pi_pulse("square", 100.0)
    gamma = 5.0 + 0.7j
    trace = e0_of_t(pulse, gamma, np.array([1.0]))
    assert abs(trace.values[0]) == pytest.approx(np.exp(-2.5), rel=1e-12)


def test_validity_thresholds():
    assert validity_check(PulseProfile("square", np.pi / 0.01, 0.01), 2.0) == (True, 0.01)
    assert validity_check(PulseProfile("square", np.pi, 1.0), 2.0) == (False, 1.0)
    boundary = validity_check(PulseProfile("square", np.pi / 0.1, 0.1), 2.0)
    assert boundary.ratio == pytest.approx(0.1, rel=1e-12)
    assert not boundary.ok


def test_amplitude_trace_bound():
    with pytest.raises(ValueError, match="unit magnitude"):
        AmplitudeTrace(np.array([0.0]), np.array([1.1 + 0.0j]))


# ---------------------------------------------------------------------------
# mode amplitudes and spectra


def test_mode_amplitude_limits():
    assert mode_amplitude(2.0, 3.0, 0.7, 0.0) == 0.0
    n_atoms = 50
    asym = mode_amplitude(2.0, np.sqrt(n_atoms), 0.0, np.inf)
    assert asym == pytest.approx(-np.sqrt(n_atoms) / 1.0, abs=1e-14)


@pytest.mark.parametrize("gamma", [1.0, 7.5, 30.0])
def test_spectrum_fwhm_matches_gamma(gamma):
    detunings = ModeGrid.detuning_span(gamma, 20.0, 512)
    profile = np.abs(mode_amplitude(gamma, 1.0, detunings, np.inf)) ** 2
    assert lorentzian_fwhm(detunings, profile) == pytest.approx(gamma, rel=0.02)


def test_emission_spectrum_shapes_and_normalization():
    e = sphere(25)
    gamma = gamma_n(e, K0P, AXIS).real
    grid = ModeGrid.single_direction(K0P, ModeGrid.detuning_span(gamma, 10.0, 64))
    table = emission_spectrum(e, gamma, grid, np.inf, K0P, normalize=True)
    assert table.shape == (1, 64)
    assert table.max() == pytest.approx(1.0, abs=0)
    # pure Lorentzian along a fixed direction
    assert lorentzian_fwhm(grid.detunings, table[0]) == pytest.approx(gamma, rel=0.02)


def test_mode_grid_validation():
    with pytest.raises(ValueError, match="symmetric"):
        ModeGrid.single_direction(K0P, np.array([-1.0, 0.0, 2.0]))
    with pytest.raises(ValueError, match="unit"):
        ModeGrid(
            np.array([[0.0, 0.0, 2.0]]),
            np.array([-1.0, 1.0]),
            np.array([1.0]),
            np.array([1.0, 1.0]),
        )


def test_phase_matched_weights_normalized_and_peaked():
    e = generate_ensemble(Geometry("sphere", 4e-6), n_atoms=60, seed=2)
    gamma = gamma_n(e, K0P, AXIS).real
    grid = ModeGrid.sphere(40, 16, ModeGrid.detuning_span(gamma, 10.0, 65))
    weights = phase_matched_weights(e, gamma, grid, K0P)
    measure = np.outer(grid.direction_weights, grid.detuning_weights)
    assert np.sum(np.abs(weights) ** 2 * measure) == pytest.approx(1.0, abs=1e-10)
    best_dir, best_det = np.unravel_index(np.argmax(np.abs(weights)), weights.shape)
    # ties within the top polar ring are allowed; the winner must sit on it
    assert grid.directions[best_dir] @ K0P == pytest.approx((grid.directions @ K0P).max(), abs=1e-12)
    assert abs(grid.detunings[best_det]) == np.abs(grid.detunings).min()


def test_phase_matched_weights_all_zero_error():
    e = generate_ensemble(Geometry("cube", 2e-6), n_atoms=4, seed=1)
    grid = ModeGrid.single_direction(K0P, np.array([0.0]))
    with pytest.raises(ValueError, match="vanish"):
        phase_matched_weights(e, np.inf, grid, K0P)


# ---------------------------------------------------------------------------
# cascade


def test_cascade_e02_decay_and_intermediate_limits():
    e = sphere(12, seed=11)
    gamma = gamma_n(e, K0P, AXIS)
    grid = ModeGrid.single_direction(K0P, ModeGrid.detuning_span(gamma.real, 3.0, 5))
    t_grid = np.linspace(0.0, 3.0 / gamma.real, 60)
    result = cascade_two_photon(e, gamma, grid, t_grid, K0P)

    index = np.argmin(np.abs(t_grid - 1.0 / gamma.real))
    assert abs(result.e02.values[index]) == pytest.approx(
        np.exp(-gamma.real * t_grid[index]), rel=1e-12
    )
    assert np.all(result.ephi0[:, :, 0] == 0.0)
    late = cascade_two_photon(
        e, gamma, grid, np.array([0.0, 90.0 / gamma.real]), K0P
    ).ephi0[:, :, -1]
    assert np.abs(late).max() < 1e-12


def test_two_photon_outer_product_factorization():
    e = sphere(10, seed=3)
    gamma = gamma_n(e, K0P, AXIS)
    grid = ModeGrid.single_direction(K0P, ModeGrid.detuning_span(gamma.real, 3.0, 5))
    result = cascade_two_photon(e, gamma, grid, np.array([0.0, 1.0]), K0P)
    table = np.abs(result.two_photon()) ** 2 * result.epsilon()
    outer = np.multiply.outer(
        np.abs(result.first_photon) ** 2, np.abs(result.second_photon) ** 2
    )
    assert np.abs(table - outer).max() < 1e-10
    eps = result.epsilon()
    assert eps[0, 2, 0, 2] == 2.0 and eps[0, 1, 0, 2] == 1.0


def test_cascade_closed_form_matches_ode():
    # independent integration of the cascade equations at the phase-matched
    # direction, where the printed asymptotic form is exact
    e = sphere(12, seed=11)
    gamma = gamma_n(e, K0P, AXIS)
    detunings = ModeGrid.detuning_span(gamma.real, 3.0, 5)
    grid = ModeGrid.single_direction(K0P, detunings)
    result = cascade_two_photon(e, gamma, grid, np.array([0.0, 1.0]), K0P)
    closed = result.two_photon()[0, :, 0, :]

    v12 = np.sqrt(2.0 * (e.n - 1)) / e.n * structure_factor(e, np.zeros(3))
    v0g = structure_factor(e, np.zeros(3)) / np.sqrt(e.n)
    m = detunings.size
    eps = np.ones((m, m))
    np.fill_diagonal(eps, 2.0)

    def rhs(t, y):
        e02 = y[0]
        ephi = y[1 : 1 + m]
        phases = np.exp(-1j * detunings * t)
        d_e02 = -gamma * e02
        d_ephi = -(gamma / 2.0) * ephi - v12 * phases * e02
        d_g = -(v0g / np.sqrt(eps)) * (
            phases[:, None] * ephi[None, :] + phases[None, :] * ephi[:, None]
        )
        return np.concatenate([[d_e02], d_ephi, d_g.ravel()])

    def rhs_real(t, yr):
        z = yr[: yr.size // 2] + 1j * yr[yr.size // 2 :]
        dz = rhs(t, z)
        return np.concatenate([dz.real, dz.imag])

    y0 = np.zeros(1 + m + m * m, dtype=complex)
    y0[0] = 1.0
    sol = solve_ivp(
        rhs_real,
        (0.0, 60.0 / gamma.real),
        np.concatenate([y0.real, y0.imag]),
        method="DOP853",
        rtol=1e-11,
        atol=1e-13,
    )
    assert sol.success
    final = sol.y[: y0.size, -1] + 1j * sol.y[y0.size :, -1]
    integrated = final[1 + m :].reshape(m, m)
    assert np.abs(integrated - closed).max() < 1e-6


# ---------------------------------------------------------------------------
# ODE oracle


def test_ode_oracle_single_atom():
    e = AtomicEnsemble(np.zeros((1, 3)), Geometry("cube", 1e-6), 0)
    t_grid = np.linspace(0.0, 4.0, 40)
    result = single_exc_ode_oracle(e, AXIS, None, t_grid, K0P)
    assert np.abs(result.amplitudes[0] - np.exp(-t_grid / 2.0)).max() < 1e-8
    assert np.abs(result.leakage).max() < 1e-12


def test_ode_oracle_initial_slope_matches_gamma():
    e = sphere(30, seed=8)
    gamma = gamma_n(e, K0P, AXIS).real
    t_grid = np.linspace(0.0, 0.01 / gamma, 9)
    result = single_exc_ode_oracle(e, AXIS, None, t_grid, K0P, rtol=1e-11)
    h = t_grid[1] - t_grid[0]
    s = result.symmetric.real
    slope = (-25 * s[0] + 48 * s[1] - 36 * s[2] + 16 * s[3] - 3 * s[4]) / (12 * h)
    assert slope == pytest.approx(-gamma / 2.0, rel=1e-8)


def test_ode_oracle_two_atom_eigenmodes():
    d = 1.1
    x = np.array([0.0, d, 0.0])
    e = AtomicEnsemble(np.array([[0.0, 0.0, 0.0], [0.0, d, 0.0]]), Geometry("cube", 1e-6), 0)
    f = f_pair(x, AXIS)
    t_grid = np.linspace(0.0, 3.0, 30)
    result = single_exc_ode_oracle(e, AXIS, None, t_grid, K0P)
    # symmetric and antisymmetric combinations decay at (1 +- f)/2
    sym = (result.amplitudes[0] + result.amplitudes[1]) / 2.0
    anti = (result.amplitudes[0] - result.amplitudes[1]) / 2.0
    expected_sym = sym[0] * np.exp(-(1 + f) / 2.0 * t_grid)
    expected_anti = anti[0] * np.exp(-(1 - f) / 2.0 * t_grid)
    assert np.abs(sym - expected_sym).max() < 1e-8
    assert np.abs(anti - expected_anti).max() < 1e-8
    rates = np.linalg.eigvalsh(decay_matrix(e, AXIS))
    assert sorted(rates) == pytest.approx([(1 - f) / 2.0, (1 + f) / 2.0], abs=1e-12)


def test_ode_oracle_validates_inputs():
    e = sphere(5)
    with pytest.raises(ValueError, match="increasing"):
        single_exc_ode_oracle(e, AXIS, None, np.array([0.0]), K0P)
    with pytest.raises(ValueError, match="without a pulse"):
        single_exc_ode_oracle(
            e, AXIS, PulseProfile.pi_pulse("square", 50.0), np.array([0.0, 1.0]), K0P,
            initial=np.ones(5),
        )


def test_e0_follows_ode_oracle_within_stated_bound():
    e = sphere(40, radius=2.5e-6, seed=13)
    gamma = gamma_n(e, K0P, AXIS)
    pulse = PulseProfile.pi_pulse("square", 200.0)
    check = validity_check(pulse, gamma)
    t_grid = np.linspace(0.0, 2.0 / gamma.real, 80)
    oracle = single_exc_ode_oracle(e, AXIS, pulse, t_grid, K0P)
    closed = e0_of_t(pulse, gamma, t_grid)
    # the closed form drops a constant unimodular phase, so compare magnitudes
    diff = np.abs(np.abs(oracle.symmetric) - np.abs(closed.values)).max()
    bound = 2.0 * (check.ratio + oracle.leakage.max())
    assert diff <= bound


# ---------------------------------------------------------------------------
# photon-number bookkeeping


def test_bookkeeping_conserved_on_converged_grid():
    e = generate_ensemble(Geometry("sphere", 1.2e-6), n_atoms=50, seed=3)
    gamma = gamma_n(e, K0P, AXIS).real
    grid = ModeGrid.sphere(200, 64, ModeGrid.detuning_span(gamma, 20.0, 1024))
    t_grid = np.linspace(0.0, 5.0 / gamma, 40)
    total = excitation_bookkeeping(e, gamma, grid, AXIS, t_grid, K0P)
    assert np.all(np.abs(total - 1.0) <= 0.05)
    # non-increasing up to grid-resolution ripple
    assert np.all(np.diff(total) <= 0.02)
    with pytest.raises(ValueError, match="real_only"):
        excitation_bookkeeping(e, gamma + 0.5j, grid, AXIS, t_grid, K0P)
