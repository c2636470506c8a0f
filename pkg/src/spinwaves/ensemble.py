"""Frozen atomic position configurations for the three cloud geometries.

Positions are stored dimensionless, as k_eg * r with k_eg the transition
wavenumber, so every downstream quantity depends only on phase products.
Generation is keyed per atom by (seed, atom index): the same (geometry, N,
seed) always reproduces the same cloud, independent of evaluation order.
"""

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

TWO_PI = 2.0 * np.pi

_GEOMETRY_PARAM = {"cube": "side_um", "sphere": "radius_um", "gaussian": "sigma_um"}


@dataclass(frozen=True)
class PhysicalUnits:
    """Overall physical scales; internally everything runs with k_eg = 1, Gamma = 1.

    Parameters
    ----------
    wavelength_eg : float
        Wavelength of the emitting transition in meters. Only used to convert
        metric cloud sizes into dimensionless positions.
    gamma_single : float
        Single-atom decay rate in 1/s. Pure output scale, never enters the
        dimensionless computation.
    """

    wavelength_eg: float = 780e-9
    gamma_single: float = 1.0

    def __post_init__(self):
        if not self.wavelength_eg > 0:
            raise ValueError("wavelength_eg must be positive")
        if not self.gamma_single > 0:
            raise ValueError("gamma_single must be positive")

    @property
    def k_eg(self) -> float:
        """Transition wavenumber 2*pi/wavelength in rad/m."""
        return TWO_PI / self.wavelength_eg


@dataclass(frozen=True)
class Geometry:
    """Cloud shape: cube (size = side), sphere (size = radius) or gaussian (size = sigma).

    The size parameter is metric (meters).
    """

    kind: str
    size: float

    def __post_init__(self):
        if self.kind not in _GEOMETRY_PARAM:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError("geometry size parameter must be positive")

    def volume_m3(self) -> float:
        """Metric volume; for gaussian the effective volume (2*pi)^(3/2) sigma^3."""
        if self.kind == "cube":
            return self.size**3
        if self.kind == "sphere":
            return 4.0 / 3.0 * np.pi * self.size**3
        return TWO_PI**1.5 * self.size**3

    def contains(self, points_m: np.ndarray) -> np.ndarray:
        """Exact geometric predicate for metric points, shape (..., 3). Gaussian is unbounded."""
        points_m = np.asarray(points_m, dtype=float)
        if self.kind == "cube":
            return np.all(np.abs(points_m) <= self.size / 2.0, axis=-1)
        if self.kind == "sphere":
            return np.linalg.norm(points_m, axis=-1) <= self.size
        return np.ones(points_m.shape[:-1], dtype=bool)

    def describe(self) -> str:
        """Single-token description used in the ensemble file header."""
        return f"{self.kind}:{_GEOMETRY_PARAM[self.kind]}={self.size * 1e6:.17g}"

    @classmethod
    def parse(cls, desc: str) -> "Geometry":
        try:
            kind, param = desc.split(":", 1)
            key, value = param.split("=", 1)
        except ValueError:
            raise ValueError(f"malformed geometry description {desc!r}") from None
        if kind not in _GEOMETRY_PARAM or key != _GEOMETRY_PARAM[kind]:
            raise ValueError(f"malformed geometry description {desc!r}")
        return cls(kind, float(value) * 1e-6)


@dataclass(frozen=True)
class AtomicEnsemble:
    """Immutable set of N dimensionless atom positions (k_eg * r) with provenance."""

    positions: np.ndarray
    geometry: Geometry
    seed: int
    units: PhysicalUnits = field(default_factory=PhysicalUnits)
    density_per_cm3: Optional[float] = None

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must have shape (N, 3) with N >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.geometry.describe().encode())
        h.update(str(self.seed).encode())
        h.update(self.positions.tobytes())
        return h.hexdigest()[:16]


def _atom_rng(seed: int, index: int) -> np.random.Generator:
    # Splittable stream per atom: generation order and thread schedule cannot
    # change the result.
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def _sample_position_m(geometry: Geometry, rng: np.random.Generator) -> np.ndarray:
    if geometry.kind == "cube":
        half = geometry.size / 2.0
        return rng.uniform(-half, half, size=3)
    if geometry.kind == "sphere":
        half = geometry.size
        while True:  # rejection from the bounding cube keeps the predicate exact
            p = rng.uniform(-half, half, size=3)
            if p @ p <= geometry.size**2:
                return p
    return rng.normal(0.0, geometry.size, size=3)


def atom_count_from_density(geometry: Geometry, density_per_cm3: float) -> int:
    """N = round(rho * V) with V the metric (or effective gaussian) volume."""
    if not density_per_cm3 > 0:
        raise ValueError("density must be positive")
    volume_cm3 = geometry.volume_m3() * 1e6
    return int(round(density_per_cm3 * volume_cm3))


def generate_ensemble(
    geometry: Geometry,
    *,
    n_atoms: Optional[int] = None,
    density_per_cm3: Optional[float] = None,
    seed: int = 0,
    units: Optional[PhysicalUnits] = None,
) -> AtomicEnsemble:
    """Sample a frozen atomic cloud.

    Exactly one of ``n_atoms`` or ``density_per_cm3`` must be given; with a
    density the atom number is N = round(rho * V). Positions are i.i.d.
    uniform in the cube or sphere, isotropic normal for gaussian clouds, and
    are returned dimensionless (multiplied by k_eg).
    """
    units = units or PhysicalUnits()
    if (n_atoms is None) == (density_per_cm3 is None):
        raise ValueError("specify exactly one of n_atoms or density_per_cm3")
    if density_per_cm3 is not None:
        n = atom_count_from_density(geometry, density_per_cm3)
        density = density_per_cm3
    else:
        n = int(n_atoms)
        density = n / (geometry.volume_m3() * 1e6)
    if n < 1:
        raise ValueError("empty ensemble: atom count rounded to zero")

    k_eg = units.k_eg
    positions = np.empty((n, 3), dtype=float)
    for i in range(n):
        positions[i] = _sample_position_m(geometry, _atom_rng(seed, i)) * k_eg
    if n > 1:
        _warn_on_duplicates(positions)
    return AtomicEnsemble(positions, geometry, int(seed), units, density)


def _warn_on_duplicates(positions: np.ndarray):
    # O(N log N) duplicate scan; coincident atoms are legal (f(0) = 1) but
    # break power-law interaction models, so the caller should know.
    order = np.lexsort(positions.T)
    same = np.all(positions[order][1:] == positions[order][:-1], axis=1)
    if np.any(same):
        warnings.warn("ensemble contains coincident atom positions", stacklevel=3)


class PairSeparations(NamedTuple):
    """All N(N-1)/2 unordered pairs: 0-based indices, separation vectors, distances."""

    mu: np.ndarray
    nu: np.ndarray
    vectors: np.ndarray
    distances: np.ndarray


def pair_separations(e: AtomicEnsemble) -> PairSeparations:
    """Separation table r_mu - r_nu for every unordered pair, each listed once."""
    mu, nu = np.triu_indices(e.n, k=1)
    vectors = e.positions[mu] - e.positions[nu]
    distances = np.linalg.norm(vectors, axis=1)
    if np.any(distances == 0.0):
        warnings.warn("coincident atom positions give zero pair separations", stacklevel=2)
    return PairSeparations(mu, nu, vectors, distances)


def save_ensemble(e: AtomicEnsemble, path) -> None:
    """Write the documented text format (17 significant digits, space separated)."""
    lines = [
        f"# ensemble v1 N={e.n} seed={e.seed} geometry={e.geometry.describe()}"
        f" wavelength_nm={e.units.wavelength_eg * 1e9:.17g}"
    ]
    lines.extend(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in e.positions)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_ensemble(path) -> AtomicEnsemble:
    """Read an ensemble file, validating atom count and reporting bad lines."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ValueError("line 1: empty ensemble file")
    header = raw[0].split()
    if header[:3] != ["#", "ensemble", "v1"]:
        raise ValueError("line 1: expected header '# ensemble v1 ...'")
    fields = {}
    for token in header[3:]:
        if "=" not in token:
            raise ValueError(f"line 1: malformed header token {token!r}")
        key, value = token.split("=", 1)
        fields[key] = value
    try:
        n = int(fields["N"])
        seed = int(fields["seed"])
        geometry = Geometry.parse(fields["geometry"])
        wavelength_nm = float(fields["wavelength_nm"])
    except KeyError as exc:
        raise ValueError(f"line 1: missing header field {exc}") from None

    rows = [(i + 2, line) for i, line in enumerate(raw[1:]) if line.strip()]
    if len(rows) != n:
        raise ValueError(f"declared N={n} but found {len(rows)} position rows")
    positions = np.empty((n, 3), dtype=float)
    for out, (lineno, line) in zip(positions, rows):
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 columns, got {len(parts)}")
        try:
            out[:] = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: could not parse coordinates") from None
    units = PhysicalUnits(wavelength_eg=wavelength_nm * 1e-9)
    return AtomicEnsemble(positions, geometry, seed, units)
