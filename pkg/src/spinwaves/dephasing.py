"""Pairwise interaction phases on stored excitations and their effect on correlations.

Atoms holding two metastable excitations pick up a phase Phi_munu during a
storage time T. The resulting spin-wave correlation function g2 and the
overlaps with the symmetric and non-symmetric two-excitation states quantify
how the phases decouple multiple excitations from the phase-matched mode.
"""

from dataclasses import dataclass
from math import comb, factorial
from typing import NamedTuple

import numpy as np

from .dicke import tuples_colex, unrank_tuple
from .ensemble import AtomicEnsemble

EXACT_OVERLAP_MAX_N = 3


@dataclass(frozen=True)
class StateAmplitudes:
    """Amplitudes of the 0-, 1- and 2-excitation components of the stored state."""

    c0: complex
    c1: complex
    c2: complex

    def __post_init__(self):
        total = abs(self.c0) ** 2 + abs(self.c1) ** 2 + abs(self.c2) ** 2
        if total > 1.0 + 1e-12:
            raise ValueError("amplitudes exceed unit norm")

    @classmethod
    def truncated_coherent(cls) -> "StateAmplitudes":
        """c_n = 1 / sqrt(e n!) for n = 0, 1, 2."""
        return cls(*(1.0 / np.sqrt(np.e * factorial(n)) for n in range(3)))


@dataclass(frozen=True)
class InteractionModel:
    """Pairwise phase model: power-law vdw (C6/r^6) or dipolar (C3/r^3), iid uniform, or none.

    Power-law coefficients are the dimensionless products C_p T / (hbar k_eg^-p)
    per unit storage time, so Phi = coefficient * T / x^p with x = k_eg r.
    ``iid_uniform`` draws symmetric phases uniformly on [0, width).
    """

    kind: str
    coefficient: float = 0.0

    def __post_init__(self):
        if self.kind not in ("vdw", "dipolar", "iid_uniform", "none"):
            raise ValueError(f"unknown interaction model {self.kind!r}")
        if self.coefficient < 0:
            raise ValueError("model coefficient must be >= 0")
        if self.kind == "iid_uniform" and not 0.0 <= self.coefficient <= 2.0 * np.pi:
            raise ValueError("iid width must lie in [0, 2 pi]")

    @classmethod
    def vdw(cls, c6: float) -> "InteractionModel":
        return cls("vdw", c6)

    @classmethod
    def dipolar(cls, c3: float) -> "InteractionModel":
        return cls("dipolar", c3)

    @classmethod
    def iid_uniform(cls, width: float) -> "InteractionModel":
        return cls("iid_uniform", width)

    @classmethod
    def none(cls) -> "InteractionModel":
        return cls("none")


def phase_matrix(
    e: AtomicEnsemble, model: InteractionModel, storage_time: float, seed: int = 0
) -> np.ndarray:
    """Symmetric N x N matrix of pair phases Phi_munu with zero diagonal.

    T = 0 gives zeros for every model. Power-law models raise on coincident
    atoms where the phase diverges.
    """
    if storage_time < 0:
        raise ValueError("storage time must be >= 0")
    n = e.n
    phi = np.zeros((n, n))
    if storage_time == 0.0 or model.kind == "none" or n == 1:
        return phi
    iu, ju = np.triu_indices(n, k=1)
    if model.kind == "iid_uniform":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        values = rng.uniform(0.0, model.coefficient, size=iu.size)
    else:
        dist = np.linalg.norm(e.positions[iu] - e.positions[ju], axis=1)
        if np.any(dist == 0.0):
            raise ValueError("divergent phase: coincident atoms under a power-law model")
        power = 6 if model.kind == "vdw" else 3
        values = model.coefficient * storage_time / dist**power
    phi[iu, ju] = values
    phi[ju, iu] = values
    return phi


def g2_zero(c: StateAmplitudes) -> float:
    """Spin-wave correlation before any dephasing: 2 |c2|^2 / (|c1|^2 + 2 |c2|^2)^2."""
    denom = abs(c.c1) ** 2 + 2.0 * abs(c.c2) ** 2
    if denom == 0.0:
        raise ValueError("g2 undefined: no excited-state amplitude")
    return 2.0 * abs(c.c2) ** 2 / denom**2


def g2_of_T(c: StateAmplitudes, phi: np.ndarray) -> float:
    """Spin-wave correlation after pair dephasing.

    Evaluates

        g2 = |c2|^2 |sqrt(2)/N^2 sum_{mu,nu} e^{i Phi}|^2
             / [ |c1|^2 + |c2|^2 (2/N^3) sum_mu |sum_nu e^{i Phi}|^2 ]^2

    with unrestricted double sums and Phi_mumu = 0, so the Phi -> 0 limit
    reproduces ``g2_zero``.
    """
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    if n < 2:
        raise ValueError("g2_of_T requires at least two atoms")
    phases = np.exp(1j * phi)
    row = phases.sum(axis=1)
    numerator = abs(c.c2) ** 2 * abs(np.sqrt(2.0) / n**2 * row.sum()) ** 2
    inner = np.sum(np.abs(row) ** 2)
    denominator = (abs(c.c1) ** 2 + abs(c.c2) ** 2 * 2.0 / n**3 * inner) ** 2
    return float(numerator / denominator)


def g2_asymptotic(c: StateAmplitudes, phi: np.ndarray) -> float:
    """Broad-dephasing approximation 4 g2(0) |N^-2 sum_{mu,nu} e^{i Phi}|^2."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    mean_phase = np.exp(1j * phi).sum() / n**2
    return 4.0 * g2_zero(c) * abs(mean_phase) ** 2


def _pair_phase_sums(phi: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    """Sum of Phi over all atom pairs inside each tuple row (1-based labels)."""
    idx = tuples - 1
    n = idx.shape[1]
    total = np.zeros(idx.shape[0])
    for a in range(n):
        for b in range(a + 1, n):
            total += phi[idx[:, a], idx[:, b]]
    return total


def overlap_symmetric(n: int, phi: np.ndarray) -> complex:
    """Amplitude remaining in the symmetric n-excitation state after dephasing.

    binom(N, n)^-1 sum over atom n-tuples of exp(i sum of pair phases); exact
    tuple enumeration, so n is limited to 3 (use ``overlap_symmetric_mc``
    beyond that). Phi = 0 gives exactly 1.
    """
    phi = np.asarray(phi, dtype=float)
    n_atoms = phi.shape[0]
    if n > n_atoms:
        raise ValueError("excitation number exceeds atom count")
    if not 2 <= n <= EXACT_OVERLAP_MAX_N:
        raise ValueError(
            f"exact enumeration supports 2 <= n <= {EXACT_OVERLAP_MAX_N}; "
            "use overlap_symmetric_mc for larger n"
        )
    tuples = np.array(tuples_colex(n, n_atoms))
    return complex(np.exp(1j * _pair_phase_sums(phi, tuples)).mean())


class OverlapEstimate(NamedTuple):
    value: complex
    stderr: float


def overlap_symmetric_mc(
    n: int, phi: np.ndarray, samples: int = 100_000, seed: int = 0
) -> OverlapEstimate:
    """Monte Carlo estimate of ``overlap_symmetric`` for any 2 <= n <= N.

    Samples atom n-tuples uniformly; the standard error combines the spread
    of the real and imaginary parts.
    """
    phi = np.asarray(phi, dtype=float)
    n_atoms = phi.shape[0]
    if not 2 <= n <= n_atoms:
        raise ValueError("need 2 <= n <= N")
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    draws = np.empty((0, n), dtype=np.int64)
    while draws.shape[0] < samples:
        batch = rng.integers(0, n_atoms, size=(2 * (samples - draws.shape[0]) + 16, n))
        ordered = np.sort(batch, axis=1)
        distinct = np.all(np.diff(ordered, axis=1) > 0, axis=1)
        draws = np.concatenate([draws, batch[distinct]])
    draws = draws[:samples]
    values = np.exp(1j * _pair_phase_sums(phi, draws + 1))
    mean = values.mean()
    var = values.real.var(ddof=1) + values.imag.var(ddof=1)
    return OverlapEstimate(complex(mean), float(np.sqrt(var / samples)))


def overlap_nonsymmetric_2(ell: int, phi: np.ndarray) -> complex:
    """Amplitude transferred into the non-symmetric two-excitation state ell.

    (L * binom(N,2))^-1/2 sum_{j<=ell} [exp(i Phi of pair j) - exp(i Phi of
    pair ell+1)] over the colex pair ranking, L = ell (ell + 1). Zero for all
    ell when Phi = 0.
    """
    phi = np.asarray(phi, dtype=float)
    n_atoms = phi.shape[0]
    n_pairs = comb(n_atoms, 2)
    if not 1 <= ell <= n_pairs - 1:
        raise ValueError("label ell out of range for the two-excitation basis")
    tuples = np.array([unrank_tuple(g, 2, n_atoms) for g in range(1, ell + 2)])
    terms = np.exp(1j * _pair_phase_sums(phi, tuples))
    total = terms[:ell].sum() - ell * terms[ell]
    return complex(total / np.sqrt(ell * (ell + 1) * n_pairs))
