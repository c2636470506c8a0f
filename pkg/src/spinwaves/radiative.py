"""Pair radiation kernel, generalized collective decay rate and decay matrix.

The kernel f is the angular average of the transverse emission pattern over
photon directions and drives all cross-atom decay terms. Its dispersive
partner g (same angular weights, quadrature phases) supplies the collective
frequency shift; the ``real_only`` mode keeps the literal real kernel.
"""

import warnings

import numpy as np

from .ensemble import AtomicEnsemble

# Below this separation the 1/x^3 terms of the closed form cancel to roundoff;
# switch the real part to its Taylor series.
_SMALL_X = 0.02
# Pairs closer than this make the dispersive (near-zone) part unreliable.
NEAR_ZONE_X = 1e-3


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("direction vector must be finite and nonzero")
    return v / norm


def _axis_cosine(x: np.ndarray, r: np.ndarray, axis: np.ndarray) -> np.ndarray:
    # cosine between separation and dipole axis; value at r = 0 is irrelevant
    # because the c-dependence drops out there.
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (x @ axis) / r
    return np.where(r > 0.0, c, 0.0)


def f_pair(x, axis) -> np.ndarray:
    """Radiation kernel f for dimensionless separation vectors x = k_eg * r.

    Closed form
        f = 3/2 [ (1 - c^2) sin x / x + (1 - 3 c^2)(cos x / x^2 - sin x / x^3) ]
    with c the cosine between x and the dipole axis, continued through x = 0
    where f = 1. Accepts a single vector or an array of shape (..., 3).
    """
    axis = unit_vector(axis)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    r = np.linalg.norm(x, axis=-1)
    c2 = _axis_cosine(x, r, axis) ** 2

    out = np.empty_like(r)
    small = r < _SMALL_X
    rs = r[small]
    out[small] = 1.0 - (2.0 - c2[small]) * rs**2 / 10.0 + (3.0 - 2.0 * c2[small]) * rs**4 / 280.0
    rb = r[~small]
    cb2 = c2[~small]
    out[~small] = 1.5 * (
        (1.0 - cb2) * np.sin(rb) / rb
        + (1.0 - 3.0 * cb2) * (np.cos(rb) / rb**2 - np.sin(rb) / rb**3)
    )
    return float(out[0]) if single else out


def f_dispersive(x, axis) -> np.ndarray:
    """Dispersive partner g of the radiation kernel (same angular weights).

        g = 3/2 [ -(1 - c^2) cos x / x + (1 - 3 c^2)(sin x / x^2 + cos x / x^3) ]

    Diverges as 1/x^3 for x -> 0; separations below NEAR_ZONE_X are flagged
    with a warning and exact zeros return 0.
    """
    axis = unit_vector(axis)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    r = np.linalg.norm(x, axis=-1)
    c2 = _axis_cosine(x, r, axis) ** 2
    if np.any(r < NEAR_ZONE_X):
        warnings.warn(
            f"pair separations below {NEAR_ZONE_X} reach the near-zone divergence "
            "of the dispersive kernel",
            stacklevel=2,
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        out = 1.5 * (
            -(1.0 - c2) * np.cos(r) / r
            + (1.0 - 3.0 * c2) * (np.sin(r) / r**2 + np.cos(r) / r**3)
        )
    out = np.where(r == 0.0, 0.0, out)
    return float(out[0]) if single else out


def f_complex(x, axis) -> np.ndarray:
    """Complex pair kernel f + i g used by the complex decay-rate mode."""
    return f_pair(x, axis) + 1j * f_dispersive(x, axis)


def f_quadrature(x, axis, tol: float = 1e-10) -> float:
    """Literal adaptive angular quadrature of the kernel definition.

    Integrates (3/8 pi) (1 - cos^2 theta) exp(i k_hat . x) over emission
    directions with theta measured from the dipole axis, using a product rule
    (Gauss-Legendre in the polar cosine, uniform grid in the periodic
    azimuth) whose order is raised until two refinements agree within
    ``tol``. Serves as the independent oracle for ``f_pair``; the imaginary
    part vanishes by inversion symmetry so only the cosine part is
    integrated.

    Raises RuntimeError if refinement stalls above ``tol``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    axis = unit_vector(axis)
    x = np.asarray(x, dtype=float)
    # frame with the last component along the dipole axis
    helper = np.array([1.0, 0.0, 0.0])
    if abs(axis[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = unit_vector(np.cross(axis, helper))
    e2 = np.cross(axis, e1)
    x1, x2, x3 = x @ e1, x @ e2, x @ axis

    def product_rule(order):
        u, wu = np.polynomial.legendre.leggauss(order)  # u = cos(theta)
        alpha = 2.0 * np.pi * np.arange(order) / order
        st = np.sqrt(1.0 - u**2)
        kdotx = st[:, None] * (np.cos(alpha)[None, :] * x1 + np.sin(alpha)[None, :] * x2)
        kdotx = kdotx + (u * x3)[:, None]
        vals = (1.0 - u[:, None] ** 2) * np.cos(kdotx)
        return 3.0 / (8.0 * np.pi) * (2.0 * np.pi / order) * wu @ vals.sum(axis=1)

    # bandwidth of the integrand grows like |x|; start just above it
    order = max(24, int(np.linalg.norm(x)) + 16)
    previous = product_rule(order)
    for _ in range(12):
        order = int(order * 1.5) + 8
        current = product_rule(order)
        err = abs(current - previous)
        if err < tol:
            return float(current)
        previous = current
    raise RuntimeError(f"angular quadrature did not reach tol={tol:g}; achieved {err:g}")


def _pair_kernel_sum(e: AtomicEnsemble, k0p: np.ndarray, axis: np.ndarray, mode: str) -> complex:
    # sum over mu != nu of exp(-i k0p . r_munu) kernel(x_munu); both orderings
    # of a pair carry the same kernel, so the phase pair collapses to a cosine.
    total = 0.0 + 0.0j
    block = 512
    pos = e.positions
    for start in range(0, e.n, block):
        seg = pos[start : start + block]
        diff = seg[:, None, :] - pos[None, :, :]
        rows = np.arange(seg.shape[0])
        cols = np.arange(start, start + seg.shape[0])
        diff[rows, cols] = [1.0, 0.0, 0.0]  # placeholder; mu == nu zeroed below
        kern = f_pair(diff, axis).astype(complex)
        if mode == "complex":
            kern += 1j * f_dispersive(diff, axis)
        kern[rows, cols] = 0.0
        phases = np.exp(-1j * diff @ np.asarray(k0p, dtype=float))
        total += np.sum(phases * kern)
    return total


def gamma_n(e: AtomicEnsemble, k0p, axis, mode: str = "real_only") -> complex:
    """Generalized decay rate of the phase-matched symmetric excitation, units of Gamma.

        Gamma_N = 1 + (1/N) sum_{mu != nu} exp(-i k0p . (r_mu - r_nu)) f_munu

    The real part is the collective broadening. ``mode='complex'`` replaces f
    by the complex kernel f + i g so the imaginary part carries the collective
    frequency shift; ``real_only`` is the literal real-kernel definition.
    """
    if mode not in ("real_only", "complex"):
        raise ValueError("mode must be 'real_only' or 'complex'")
    k0p = np.asarray(k0p, dtype=float)
    mag = np.linalg.norm(k0p)
    if abs(mag - 1.0) > 0.1:
        warnings.warn(
            f"|k0p| = {mag:.3f} k_eg is off the emission shell by more than 10%",
            stacklevel=2,
        )
    unit_vector(axis)
    if e.n == 1:
        return 1.0 + 0.0j
    total = _pair_kernel_sum(e, k0p, axis, mode) / e.n
    if mode == "real_only":
        # the pair sum is real by the mu <-> nu symmetry; drop roundoff
        return complex(1.0 + total.real)
    return 1.0 + total


def decay_matrix(e: AtomicEnsemble, axis) -> np.ndarray:
    """Single-excitation decay matrix M = (Gamma/2) f_munu, in units of Gamma.

    Real symmetric with M_mumu = 1/2; the laser-free amplitudes obey
    dE/dt = -M E.
    """
    diff = e.positions[:, None, :] - e.positions[None, :, :]
    mat = 0.5 * f_pair(diff, axis)
    np.fill_diagonal(mat, 0.5)
    return mat


def symmetric_mode(e: AtomicEnsemble, k0p) -> np.ndarray:
    """Normalized phase-matched amplitude vector v_mu = exp(i k0p . r_mu) / sqrt(N)."""
    k0p = np.asarray(k0p, dtype=float)
    return np.exp(1j * e.positions @ k0p) / np.sqrt(e.n)
