"""Retrieval dynamics: pulse-driven decay, mode amplitudes, spectra and the two-photon cascade.

Closed forms assume the fast-pulse separation of excitation and decay; the
dense ODE integrator ``single_exc_ode_oracle`` keeps the full per-atom
single-excitation system as the independent cross-check.

Internal units: rates in Gamma, times in 1/Gamma, wavevectors in k_eg, and
the radiation-matter coupling g_phi set to 1. With these conventions the
photon continuum carries the measure
(3 / 16 pi^2) (1 - (k_hat . n_hat)^2) dOmega dDelta, which is what
``excitation_bookkeeping`` uses to account for emitted photons.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .dicke import structure_factor
from .ensemble import AtomicEnsemble
from .radiative import decay_matrix, symmetric_mode, unit_vector

# photon continuum weight per (solid angle x detuning) in internal units
MODE_MEASURE = 3.0 / (16.0 * np.pi**2)

ODE_MAX_ATOMS = 2000


@dataclass(frozen=True)
class PulseProfile:
    """Resonant retrieval pulse normalized to a pi pulse.

    ``mean_rabi`` is the temporal average of the Rabi frequency (units of
    Gamma) over the duration T (units of 1/Gamma); the pulse area
    integral(Omega/2) must equal pi/2, i.e. mean_rabi * duration = pi.
    """

    shape: str
    mean_rabi: float
    duration: float

    def __post_init__(self):
        if self.shape not in ("square", "sin2"):
            raise ValueError("pulse shape must be 'square' or 'sin2'")
        if not (self.mean_rabi > 0 and self.duration > 0):
            raise ValueError("pulse parameters must be positive")
        area = self.mean_rabi * self.duration
        if abs(area - np.pi) > 1e-9 * np.pi:
            raise ValueError(f"not a pi pulse: mean_rabi * duration = {area:.6g} != pi")

    @classmethod
    def pi_pulse(cls, shape: str, mean_rabi: float) -> "PulseProfile":
        return cls(shape, mean_rabi, np.pi / mean_rabi)

    def rabi(self, t):
        """Instantaneous Rabi frequency; zero outside [0, duration]."""
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= self.duration)
        if self.shape == "square":
            return np.where(inside, self.mean_rabi, 0.0)
        return np.where(
            inside, self.mean_rabi * (1.0 - np.cos(2.0 * np.pi * t / self.duration)), 0.0
        )

    def beta(self, t):
        """Accumulated pulse area integral_0^t Omega/2; reaches pi/2 at the end."""
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, 0.0, self.duration)
        if self.shape == "square":
            return self.mean_rabi * tc / 2.0
        return (
            self.mean_rabi
            / 2.0
            * (tc - self.duration * np.sin(2.0 * np.pi * tc / self.duration) / (2.0 * np.pi))
        )


class ValidityResult(NamedTuple):
    ok: bool
    ratio: float


def validity_check(pulse: PulseProfile, gamma_n_value: complex) -> ValidityResult:
    """Fast-pulse criterion Re(Gamma_N) T / 2 < 0.1 (strict at the boundary)."""
    ratio = float(np.real(gamma_n_value) * pulse.duration / 2.0)
    return ValidityResult(ratio < 0.1, ratio)


@dataclass(frozen=True)
class AmplitudeTrace:
    """Complex atomic amplitude samples on a time grid; magnitudes stay <= 1."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if times.shape != values.shape:
            raise ValueError("times and values must have equal shapes")
        if np.any(np.abs(values) > 1.0 + 1e-9):
            raise ValueError("atomic amplitude exceeds unit magnitude")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def e0_of_t(pulse: PulseProfile, gamma_n_value: complex, t_grid) -> AmplitudeTrace:
    """Symmetric intermediate-state amplitude sin(beta(t)) exp(-Gamma_N t / 2).

    Valid when the pulse is fast compared with the collective decay; use
    ``validity_check`` before trusting the result.
    """
    t = np.asarray(t_grid, dtype=float)
    return AmplitudeTrace(t, np.sin(pulse.beta(t)) * np.exp(-gamma_n_value * t / 2.0))


@dataclass(frozen=True)
class ModeGrid:
    """Discretized photon modes: unit directions on the emission shell times a detuning grid.

    ``direction_weights`` carry the solid-angle measure, ``detuning_weights``
    the detuning quadrature weights. Polarization sits implicitly in the
    (1 - cos^2 theta) factor applied by consumers.
    """

    directions: np.ndarray
    detunings: np.ndarray
    direction_weights: np.ndarray
    detuning_weights: np.ndarray

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        det = np.asarray(self.detunings, dtype=float)
        dw = np.asarray(self.direction_weights, dtype=float)
        mw = np.asarray(self.detuning_weights, dtype=float)
        if dirs.shape[0] == 0 or det.size == 0:
            raise ValueError("mode grid must be non-empty")
        norms = np.linalg.norm(dirs, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("directions must be unit vectors")
        if not np.allclose(np.sort(det), np.sort(-det), atol=1e-9 * (1 + np.abs(det).max())):
            raise ValueError("detuning grid must be symmetric about zero")
        if dw.shape != (dirs.shape[0],) or mw.shape != det.shape:
            raise ValueError("weight arrays must match grid shapes")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "direction_weights", dw)
        object.__setattr__(self, "detuning_weights", mw)

    @staticmethod
    def detuning_span(gamma_re: float, half_width_mult: float = 20.0, points: int = 512):
        """Symmetric detuning grid covering +-half_width_mult * gamma_re."""
        return np.linspace(-half_width_mult * gamma_re, half_width_mult * gamma_re, points)

    @classmethod
    def single_direction(cls, direction, detunings) -> "ModeGrid":
        detunings = np.asarray(detunings, dtype=float)
        return cls(
            unit_vector(direction)[None, :],
            detunings,
            np.array([1.0]),
            _trapezoid_weights(detunings),
        )

    @classmethod
    def sphere(cls, n_polar: int, n_azimuth: int, detunings) -> "ModeGrid":
        """Full-sphere product grid: Gauss-Legendre in cos(theta), uniform azimuth."""
        u, wu = np.polynomial.legendre.leggauss(n_polar)
        phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
        st = np.sqrt(1.0 - u**2)
        dirs = np.stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.outer(u, np.ones(n_azimuth)).ravel(),
            ],
            axis=1,
        )
        weights = np.outer(wu, np.full(n_azimuth, 2.0 * np.pi / n_azimuth)).ravel()
        detunings = np.asarray(detunings, dtype=float)
        return cls(dirs, detunings, weights, _trapezoid_weights(detunings))


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    if grid.size == 1:
        return np.ones(1)
    w = np.empty_like(grid)
    w[1:-1] = (grid[2:] - grid[:-2]) / 2.0
    w[0] = (grid[1] - grid[0]) / 2.0
    w[-1] = (grid[-1] - grid[-2]) / 2.0
    return w


def _lorentzian_factor(gamma_n_value: complex, detuning, t):
    """(exp(-(Gamma_N/2 + i d) t) - 1) / (Gamma_N/2 + i d), with the t -> inf limit."""
    pole = gamma_n_value / 2.0 + 1j * np.asarray(detuning, dtype=float)
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        if np.isinf(t):
            return -1.0 / pole
        return (np.exp(-pole * float(t)) - 1.0) / pole
    t = np.asarray(t, dtype=float)
    finite = np.isfinite(t)
    num = np.exp(-np.multiply.outer(np.where(finite, t, 0.0), pole))
    num[~finite] = 0.0
    return (num - 1.0) / pole


def mode_amplitude(gamma_n_value: complex, v0g: complex, detuning, t):
    """Field-mode probability amplitude for instantaneous preparation of the spin wave.

    G(t) = [exp(-(Gamma_N/2 + i detuning) t) - 1] / (Gamma_N/2 + i detuning) * V_0G,
    with g_phi = 1 in internal units. ``t=np.inf`` returns the asymptotic value.
    """
    return _lorentzian_factor(gamma_n_value, detuning, t) * v0g


def _v0g_directions(e: AtomicEnsemble, grid: ModeGrid, k0p) -> np.ndarray:
    dk = grid.directions - np.asarray(k0p, dtype=float)[None, :]
    return structure_factor(e, dk) / np.sqrt(e.n)


def emission_spectrum(
    e: AtomicEnsemble,
    gamma_n_value: complex,
    grid: ModeGrid,
    t,
    k0p,
    normalize: bool = False,
) -> np.ndarray:
    """|G|^2 over the mode grid, shape (directions, detunings).

    ``normalize=True`` rescales the peak to 1.
    """
    v0g = _v0g_directions(e, grid, k0p)
    lorentz = np.abs(_lorentzian_factor(gamma_n_value, grid.detunings, t)) ** 2
    table = np.abs(v0g[:, None]) ** 2 * lorentz[None, :]
    if normalize:
        peak = table.max()
        if peak > 0:
            table = table / peak
    return table


def phase_matched_weights(
    e: AtomicEnsemble, gamma_n_value: complex, grid: ModeGrid, k0p
) -> np.ndarray:
    """Discrete mode function of the phase-matched collective emission.

    Weights proportional to V_0G(k) / (Gamma_N/2 + i detuning), normalized so
    that sum |w|^2 * (grid measure) = 1.
    """
    v0g = _v0g_directions(e, grid, k0p)
    raw = v0g[:, None] / (gamma_n_value / 2.0 + 1j * grid.detunings[None, :])
    measure = np.outer(grid.direction_weights, grid.detuning_weights)
    norm_sq = float(np.sum(np.abs(raw) ** 2 * measure))
    if norm_sq == 0.0:
        raise ValueError("all phase-matched weights vanish on this grid")
    return raw / np.sqrt(norm_sq)


@dataclass(frozen=True)
class CascadeResult:
    """Closed-form stages of the double-spin-wave cascade.

    ``e02`` is the doubly excited symmetric amplitude, ``ephi0`` the
    one-photon intermediate amplitudes with shape (directions, detunings,
    times), and ``first_photon`` / ``second_photon`` the asymptotic
    single-photon amplitude profiles whose outer product (with the
    double-occupancy factor) is the two-photon amplitude.
    """

    e02: AmplitudeTrace
    ephi0: np.ndarray
    first_photon: np.ndarray
    second_photon: np.ndarray

    def two_photon(self) -> np.ndarray:
        """Asymptotic G^{phi phi'} table, shape (D, M, D, M). Small grids only."""
        table = np.multiply.outer(self.first_photon, self.second_photon)
        return table / np.sqrt(self.epsilon())

    def epsilon(self) -> np.ndarray:
        """Occupancy normalization: 2 where the two modes coincide, else 1."""
        d, m = self.first_photon.shape
        eps = np.ones((d, m, d, m))
        di, mi = np.meshgrid(np.arange(d), np.arange(m), indexing="ij")
        eps[di, mi, di, mi] = 2.0
        return eps


def cascade_two_photon(
    e: AtomicEnsemble, gamma_n_value: complex, grid: ModeGrid, t_grid, k0p
) -> CascadeResult:
    """Two-photon decay of a double spin wave, all three stages in closed form.

    The doubly excited symmetric amplitude decays as exp(-Gamma_N t); the
    intermediate single-excitation-plus-photon amplitudes follow

        E^phi_0(t) = V^[1,2]_00(k) [exp((-i d - Gamma_N) t) - exp(-Gamma_N t / 2)]
                      / (i d + Gamma_N / 2)

    and the asymptotic two-photon amplitude factorizes into the first-photon
    profile (V^[1,2]_00 Lorentzian) times the second-photon profile
    (V_0G Lorentzian), divided by sqrt(epsilon) for doubly occupied modes.
    """
    t = np.asarray(t_grid, dtype=float)
    k0p = np.asarray(k0p, dtype=float)
    e02 = AmplitudeTrace(t, np.exp(-gamma_n_value * t))

    # V^[1,2]_00 for each grid direction, exact factorized form
    dkp = k0p[None, :] - grid.directions
    v12 = np.sqrt(2.0 * (e.n - 1)) / e.n * structure_factor(e, dkp)
    v0g = _v0g_directions(e, grid, k0p)

    pole = gamma_n_value / 2.0 + 1j * grid.detunings  # (M,)
    decay_fast = np.exp(np.multiply.outer(-(1j * grid.detunings + gamma_n_value), t))  # (M, T)
    decay_slow = np.exp(-gamma_n_value * t / 2.0)  # (T,)
    ephi0 = v12[:, None, None] * (decay_fast - decay_slow[None, :])[None, :, :] / pole[None, :, None]

    first = v12[:, None] / pole[None, :]
    second = v0g[:, None] / pole[None, :]
    return CascadeResult(e02, ephi0, first, second)


class OdeOracleResult(NamedTuple):
    times: np.ndarray
    amplitudes: np.ndarray
    symmetric: np.ndarray
    leakage: np.ndarray


def _integrate_complex(rhs, y0: np.ndarray, t_segments, t_eval: np.ndarray, rtol: float):
    # stack real/imag so solve_ivp runs on a real system for any scipy version
    dim = y0.size

    def real_rhs(t, y):
        z = y[:dim] + 1j * y[dim:]
        dz = rhs(t, z)
        return np.concatenate([dz.real, dz.imag])

    state = np.concatenate([y0.real, y0.imag])
    collected_t, collected_y = [], []
    for t0, t1 in t_segments:
        eval_mask = (t_eval >= t0) & (t_eval <= t1)
        te = np.unique(np.concatenate([[t0], t_eval[eval_mask], [t1]]))
        sol = solve_ivp(
            real_rhs, (t0, t1), state, method="DOP853", rtol=rtol, atol=1e-12, t_eval=te
        )
        if not sol.success:
            raise RuntimeError(f"ODE integration failed: {sol.message}")
        state = sol.y[:, -1]
        keep = np.isin(sol.t, t_eval[eval_mask])
        collected_t.append(sol.t[keep])
        collected_y.append(sol.y[:, keep])
    times = np.concatenate(collected_t)
    ys = np.concatenate(collected_y, axis=1)
    times, index = np.unique(times, return_index=True)
    ys = ys[:, index]
    return times, ys[:dim] + 1j * ys[dim:]


def single_exc_ode_oracle(
    e: AtomicEnsemble,
    axis,
    pulse: Optional[PulseProfile],
    t_grid,
    k0p,
    initial: Optional[np.ndarray] = None,
    rtol: float = 1e-9,
) -> OdeOracleResult:
    """Dense integration of the per-atom single-excitation amplitudes.

    Without a pulse this solves dE/dt = -M E from the phase-matched spin wave
    (or a caller-supplied ``initial``). With a pulse the stored amplitude R is
    kept as an explicit variable, dE/dt = -i (Omega/2) R - M E and
    dR/dt = -i (Omega/2) E, which reproduces the laser memory kernel exactly
    while staying a first-order system; laser position phases are absorbed
    into R so the retrieved excitation carries the phase-matched wavevector.

    Returns per-atom traces, the symmetric projection <sym|E(t)> and the
    leakage 1 - |<sym|E>|^2 / ||E||^2.
    """
    if e.n > ODE_MAX_ATOMS:
        raise ValueError(f"dense ODE oracle limited to N <= {ODE_MAX_ATOMS}")
    t_eval = np.asarray(t_grid, dtype=float)
    if t_eval.ndim != 1 or t_eval.size < 2 or np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_grid must be strictly increasing with at least two points")
    mat = decay_matrix(e, axis)
    sym = symmetric_mode(e, k0p)
    t_end = t_eval[-1]
    start = t_eval[0]

    if pulse is None:
        y0 = sym.copy() if initial is None else np.asarray(initial, dtype=complex)

        def rhs(t, z):
            return -(mat @ z)

        segments = [(start, t_end)]
        times, traj = _integrate_complex(rhs, y0, segments, t_eval, rtol)
        amps = traj
    else:
        if initial is not None:
            raise ValueError("initial amplitudes are only meaningful without a pulse")
        y0 = np.concatenate([np.zeros(e.n, dtype=complex), sym])

        def rhs(t, z):
            ez, rz = z[: e.n], z[e.n :]
            omega = 0.5 * pulse.rabi(t)
            return np.concatenate([-1j * omega * rz - mat @ ez, -1j * omega * ez])

        segments = [(start, t_end)]
        if pulse.shape == "square" and start < pulse.duration < t_end:
            # split at the pulse edge so the stepper never straddles the jump
            segments = [(start, pulse.duration), (pulse.duration, t_end)]
        times, traj = _integrate_complex(rhs, y0, segments, t_eval, rtol)
        amps = traj[: e.n]

    proj = sym.conj() @ amps
    norms = np.sum(np.abs(amps) ** 2, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        leakage = 1.0 - np.abs(proj) ** 2 / norms
    leakage = np.where(norms > 1e-300, leakage, 0.0)
    return OdeOracleResult(times, amps, proj, leakage)


def excitation_bookkeeping(
    e: AtomicEnsemble, gamma_n_value: float, grid: ModeGrid, axis, t_grid, k0p
) -> np.ndarray:
    """Total |E_0(t)|^2 + sum over grid modes of measure * |G^phi(t)|^2.

    Fast-pulse preparation and the real-only decay rate, for which the
    continuum total is conserved exactly; deviations measure the grid
    resolution. The mode sum factorizes into an angular and a detuning
    quadrature because |G|^2 = |V_0G(k_hat)|^2 |L(detuning, t)|^2; the
    factorized evaluation below equals the literal sum over all grid modes.
    """
    if abs(np.imag(gamma_n_value)) > 1e-12:
        raise ValueError("bookkeeping is defined for the real_only decay rate")
    gamma_re = float(np.real(gamma_n_value))
    t = np.asarray(t_grid, dtype=float)
    axis = unit_vector(axis)

    v0g = _v0g_directions(e, grid, k0p)
    pol = 1.0 - (grid.directions @ axis) ** 2
    angular = MODE_MEASURE * np.sum(grid.direction_weights * pol * np.abs(v0g) ** 2)

    lorentz = np.abs(_lorentzian_factor(gamma_re, grid.detunings, t)) ** 2  # (T, M)
    detuning_sum = lorentz @ grid.detuning_weights
    return np.exp(-gamma_re * t) + angular * detuning_sum
