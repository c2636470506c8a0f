"""Timed-Dicke basis bookkeeping and radiative coupling matrix elements.

The basis for n excitations consists of one symmetric member (label ell = 0)
and binom(N, n) - 1 difference states labelled ell >= 1, built on n-atom
tuples ordered colexicographically. Closed-form couplings use the O(N)
factorized structure-factor form; ``oracle_matrix_element`` contracts the
states explicitly in the product basis with no approximation and serves as
the independent check for every closed form.
"""

from itertools import combinations
from math import comb

import numpy as np

from .ensemble import AtomicEnsemble

ORACLE_MAX_ATOMS = 14
ORACLE_MAX_EXCITATIONS = 3


def rank_tuple(atoms: tuple) -> int:
    """Colexicographic rank (1-based) of a strictly increasing tuple of 1-based atom labels."""
    atoms = tuple(atoms)
    if any(b <= a for a, b in zip(atoms, atoms[1:])) or (atoms and atoms[0] < 1):
        raise ValueError("tuple must be strictly increasing 1-based atom labels")
    return 1 + sum(comb(a - 1, i + 1) for i, a in enumerate(atoms))


def unrank_tuple(gamma: int, n: int, n_atoms: int) -> tuple:
    """Inverse of rank_tuple: the gamma-th (1-based) n-tuple out of binom(N, n)."""
    if not 1 <= gamma <= comb(n_atoms, n):
        raise ValueError(f"rank {gamma} out of range for binom({n_atoms},{n})")
    rem = gamma - 1
    out = []
    for i in range(n, 0, -1):
        # largest a with binom(a-1, i) <= rem
        a = i
        while comb(a, i) <= rem:
            a += 1
        out.append(a)
        rem -= comb(a - 1, i)
    return tuple(reversed(out))


def tuples_colex(n: int, n_atoms: int) -> list:
    """All n-tuples of 1-based atom labels in colexicographic order."""
    return sorted(combinations(range(1, n_atoms + 1), n), key=lambda t: t[::-1])


def structure_factor(e: AtomicEnsemble, dk: np.ndarray) -> complex:
    """Sum over atoms of exp(i dk . r_mu); supports a batch of dk rows."""
    dk = np.asarray(dk, dtype=float)
    phases = np.exp(1j * dk @ e.positions.T)
    return phases.sum(axis=-1)


def s_function(e: AtomicEnsemble, n: int, ell: int, j: int, dk: np.ndarray) -> complex:
    """Suppression function of the non-symmetric basis state ell against tuple j.

    S^ell_j(dk) = sum_s [exp(i dk . r_{j(s)}) - exp(i dk . r_{ell+1(s)})] over
    the n atoms of tuples j and ell+1. Vanishes identically at dk = 0 and is
    bounded by 2 n in magnitude.
    """
    if ell < 1:
        raise ValueError("symmetric state ell=0 has no S function")
    if not 1 <= j <= ell:
        raise ValueError("tuple index j must satisfy 1 <= j <= ell")
    dk = np.asarray(dk, dtype=float)
    tup_j = np.array(unrank_tuple(j, n, e.n)) - 1
    tup_l = np.array(unrank_tuple(ell + 1, n, e.n)) - 1
    return complex(
        np.exp(1j * e.positions[tup_j] @ dk).sum()
        - np.exp(1j * e.positions[tup_l] @ dk).sum()
    )


def _s_sum(e: AtomicEnsemble, n: int, ell: int, dk: np.ndarray) -> complex:
    """sum_{j=1..ell} S^ell_j(dk) computed in O(ell) via a running prefix sum."""
    dk = np.asarray(dk, dtype=float)
    ranks = [np.array(unrank_tuple(g, n, e.n)) - 1 for g in range(1, ell + 2)]
    terms = np.array([np.exp(1j * e.positions[t] @ dk).sum() for t in ranks])
    return complex(terms[:ell].sum() - ell * terms[ell])


def v_nn(
    e: AtomicEnsemble,
    n: int,
    ell: int,
    ell_prime: int,
    k: np.ndarray,
    k0p: np.ndarray,
    *,
    double_sum: bool = False,
) -> complex:
    """Same-excitation-number coupling V^[n,n]_{ell ell'}(k).

    Closed forms, exact for n = 1 and leading order (corrections O(1/N)) for
    n >= 2:

    * (0, 0):   (n/N) |sum_mu exp(i (k - k0p) . r_mu)|^2
    * (0, ell): [binom(N,n) L]^(-1/2) F(k - k0p) * sum_j S^ell_j(k0p - k)
    * (ell, 0): complex conjugate of (0, ell) for real k

    with L = ell (ell + 1). General non-symmetric pairs are only available
    through ``oracle_matrix_element``. ``double_sum=True`` evaluates the
    literal O(N^2) pair sum for the (0, 0) element as a self-check.
    """
    if n > e.n:
        raise ValueError("excitation number exceeds atom count")
    if n < 1:
        raise ValueError("excitation number must be >= 1")
    dk = np.asarray(k, dtype=float) - np.asarray(k0p, dtype=float)
    if ell == 0 and ell_prime == 0:
        if double_sum:
            diff = e.positions[:, None, :] - e.positions[None, :, :]
            return complex(n / e.n * np.exp(1j * diff @ dk).sum())
        return complex(n / e.n * abs(structure_factor(e, dk)) ** 2)
    if ell == 0 or ell_prime == 0:
        lab = max(ell, ell_prime)
        if not 1 <= lab <= comb(e.n, n) - 1:
            raise ValueError("non-symmetric label out of range")
        coeff = 1.0 / np.sqrt(comb(e.n, n) * lab * (lab + 1))
        value = coeff * structure_factor(e, dk) * _s_sum(e, n, lab, -dk)
        return complex(value) if ell == 0 else complex(np.conj(value))
    raise ValueError("couplings between two non-symmetric states: use oracle_matrix_element")


def v_down(
    e: AtomicEnsemble,
    n: int,
    ell: int,
    ell_prime: int,
    k: np.ndarray,
    k0p: np.ndarray,
) -> complex:
    """De-excitation coupling V^[n-1,n]_{ell ell'}(k) from n to n - 1 excitations.

    * (0, 0):   sqrt(n (N - n + 1)) / N * sum_mu exp(i (k0p - k) . r_mu), exact.
    * (0, ell): [binom(N, n-1) L]^(-1/2) sum_j S^ell_j(k0p - k) with n-atom tuples.
    * (ell, 0): -[binom(N, n) L]^(-1/2) sum_j S^ell_j(k0p - k) with (n-1)-atom tuples.
    """
    if n < 2:
        raise ValueError("v_down requires n >= 2; the n = 1 case is v_ground")
    if n > e.n:
        raise ValueError("excitation number exceeds atom count")
    dkp = np.asarray(k0p, dtype=float) - np.asarray(k, dtype=float)
    if ell == 0 and ell_prime == 0:
        return complex(np.sqrt(n * (e.n - n + 1)) / e.n * structure_factor(e, dkp))
    if ell == 0:
        if not 1 <= ell_prime <= comb(e.n, n) - 1:
            raise ValueError("ket label out of range")
        coeff = 1.0 / np.sqrt(comb(e.n, n - 1) * ell_prime * (ell_prime + 1))
        return complex(coeff * _s_sum(e, n, ell_prime, dkp))
    if ell_prime == 0:
        if not 1 <= ell <= comb(e.n, n - 1) - 1:
            raise ValueError("bra label out of range")
        coeff = 1.0 / np.sqrt(comb(e.n, n) * ell * (ell + 1))
        return complex(-coeff * _s_sum(e, n - 1, ell, dkp))
    raise ValueError("couplings between two non-symmetric states: use oracle_matrix_element")


def v_ground(e: AtomicEnsemble, ell: int, k: np.ndarray, k0p: np.ndarray) -> complex:
    """Emission amplitude V_{ell G}(k) from the single-excitation basis to the ground state.

    ell = 0 gives the phase-matched Fourier amplitude
    sum_mu exp(i (k - k0p) . r_mu) / sqrt(N); ell >= 1 gives the suppressed
    non-symmetric amplitude built from the n = 1 S functions at k - k0p.
    """
    if not 0 <= ell <= e.n - 1:
        raise ValueError("label ell out of range for the single-excitation basis")
    dk = np.asarray(k, dtype=float) - np.asarray(k0p, dtype=float)
    if ell == 0:
        return complex(structure_factor(e, dk) / np.sqrt(e.n))
    return complex(_s_sum(e, 1, ell, dk) / np.sqrt(ell * (ell + 1)))


def dicke_vector(e: AtomicEnsemble, n: int, ell: int, k0p: np.ndarray) -> np.ndarray:
    """Explicit coefficients of the timed-Dicke state over colex-ordered n-tuples."""
    if not 1 <= n <= e.n:
        raise ValueError("excitation number out of range")
    dim = comb(e.n, n)
    if not 0 <= ell <= dim - 1:
        raise ValueError("label ell out of range")
    k0p = np.asarray(k0p, dtype=float)
    tuples = tuples_colex(n, e.n)
    phases = np.array([np.exp(1j * (e.positions[np.array(t) - 1] @ k0p).sum()) for t in tuples])
    vec = np.zeros(dim, dtype=complex)
    if ell == 0:
        vec[:] = phases / np.sqrt(dim)
    else:
        norm = 1.0 / np.sqrt(ell * (ell + 1))
        vec[:ell] = phases[:ell] * norm
        vec[ell] = -ell * phases[ell] * norm
    return vec


def _lowering_matrix(e: AtomicEnsemble, n: int, k: np.ndarray) -> np.ndarray:
    """Matrix of J(k) = sum_nu exp(-i k . r_nu) sigma^{ge}_nu from the n- to the (n-1)-sector."""
    k = np.asarray(k, dtype=float)
    upper = tuples_colex(n, e.n)
    lower_index = {t: i for i, t in enumerate(tuples_colex(n - 1, e.n))}
    mat = np.zeros((len(lower_index), len(upper)), dtype=complex)
    amp = np.exp(-1j * e.positions @ k)
    for col, tup in enumerate(upper):
        for atom in tup:
            rest = tuple(a for a in tup if a != atom)
            mat[lower_index[rest], col] += amp[atom - 1]
    return mat


def oracle_matrix_element(
    e: AtomicEnsemble,
    n_bra: int,
    n_ket: int,
    ell_bra: int,
    ell_ket: int,
    k: np.ndarray,
    k0p: np.ndarray,
) -> complex:
    """Brute-force coupling matrix element in the explicit product basis.

    For n_bra = n_ket this contracts
    sum_{mu,nu} exp(i k . (r_mu - r_nu)) <bra| sigma^eg_mu sigma^ge_nu |ket>,
    for n_bra = n_ket - 1 it contracts
    sum_mu exp(-i k . r_mu) <bra| sigma^ge_mu |ket>, both with no
    approximation. Guarded to N <= 14 and n <= 3 against combinatorial blowup.
    """
    if e.n > ORACLE_MAX_ATOMS or n_ket > ORACLE_MAX_EXCITATIONS:
        raise ValueError(
            f"oracle limited to N <= {ORACLE_MAX_ATOMS}, n <= {ORACLE_MAX_EXCITATIONS}"
        )
    if n_bra not in (n_ket, n_ket - 1):
        raise ValueError("oracle covers same-n and single de-excitation elements only")
    ket = dicke_vector(e, n_ket, ell_ket, k0p)
    lower = _lowering_matrix(e, n_ket, k) @ ket
    if n_bra == n_ket:
        bra = dicke_vector(e, n_bra, ell_bra, k0p)
        return complex(np.vdot(_lowering_matrix(e, n_bra, k) @ bra, lower))
    if n_bra == 0:
        if ell_bra != 0:
            raise ValueError("ground sector has a single state")
        return complex(lower[0])
    bra = dicke_vector(e, n_bra, ell_bra, k0p)
    return complex(np.vdot(bra, lower))
