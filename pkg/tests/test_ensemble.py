import numpy as np
import pytest

from spinwaves.ensemble import (
    AtomicEnsemble,
    Geometry,
    PhysicalUnits,
    atom_count_from_density,
    generate_ensemble,
    load_ensemble,
    pair_separations,
    save_ensemble,
)


def test_cube_count_matches_reference_parameters():
    # 10 um cube at 1e11 cm^-3 holds 100 atoms
    assert atom_count_from_density(Geometry("cube", 10e-6), 1e11) == 100


def test_sphere_count_against_arithmetic():
    expected = round(4.0 / 3.0 * np.pi * (10e-4) ** 3 * 1e12)  # radius in cm
    assert expected == 4189
    assert atom_count_from_density(Geometry("sphere", 10e-6), 1e12) == expected


def test_gaussian_count_uses_effective_volume():
    sigma = 2.5e-6
    rho = 1e12
    expected = round(rho * (2 * np.pi) ** 1.5 * (sigma * 100) ** 3)
    assert atom_count_from_density(Geometry("gaussian", sigma), rho) == expected


def test_single_atom_is_valid_and_pairless():
    e = generate_ensemble(Geometry("sphere", 1e-6), n_atoms=1, seed=7)
    assert e.n == 1
    pairs = pair_separations(e)
    assert pairs.mu.size == 0 and pairs.distances.size == 0


def test_empty_ensemble_rejected():
    with pytest.raises(ValueError, match="empty ensemble"):
        generate_ensemble(Geometry("cube", 1e-6), density_per_cm3=1.0, seed=0)


def test_nonpositive_size_rejected():
    with pytest.raises(ValueError):
        Geometry("cube", 0.0)
    with pytest.raises(ValueError):
        Geometry("pyramid", 1e-6)


def test_exactly_one_count_spec():
    with pytest.raises(ValueError):
        generate_ensemble(Geometry("cube", 1e-6), seed=0)
    with pytest.raises(ValueError):
        generate_ensemble(Geometry("cube", 1e-6), n_atoms=5, density_per_cm3=1e10, seed=0)


def test_generation_is_bit_deterministic():
    kwargs = dict(n_atoms=40, seed=123)
    a = generate_ensemble(Geometry("gaussian", 2e-6), **kwargs)
    b = generate_ensemble(Geometry("gaussian", 2e-6), **kwargs)
    assert np.array_equal(a.positions, b.positions)


def test_atom_streams_independent_of_count():
    # per-atom keyed RNG: the first atoms of a larger ensemble are unchanged
    small = generate_ensemble(Geometry("cube", 5e-6), n_atoms=10, seed=11)
    large = generate_ensemble(Geometry("cube", 5e-6), n_atoms=50, seed=11)
    assert np.array_equal(small.positions, large.positions[:10])


@pytest.mark.parametrize("kind,size", [("cube", 4e-6), ("sphere", 3e-6)])
def test_containment_exact(kind, size):
    geometry = Geometry(kind, size)
    e = generate_ensemble(geometry, n_atoms=500, seed=3)
    metric = e.positions / e.units.k_eg
    assert np.all(geometry.contains(metric))


def test_density_consistency_after_rounding():
    geometry = Geometry("sphere", 6e-6)
    rho = 3.3e10
    e = generate_ensemble(geometry, density_per_cm3=rho, seed=1)
    volume_cm3 = geometry.volume_m3() * 1e6
    assert abs(e.n - rho * volume_cm3) / e.n <= 1.0 / e.n


def test_roundtrip_is_bit_exact(tmp_path):
    e = generate_ensemble(Geometry("cube", 10e-6), density_per_cm3=1e11, seed=9)
    path = tmp_path / "cloud.txt"
    save_ensemble(e, path)
    loaded = load_ensemble(path)
    assert np.array_equal(e.positions, loaded.positions)
    assert loaded.seed == e.seed
    assert loaded.geometry.kind == e.geometry.kind
    # metric metadata re-crosses the um <-> m conversion, so only ulp-level drift
    assert loaded.geometry.size == pytest.approx(e.geometry.size, rel=1e-14)
    assert loaded.units.wavelength_eg == pytest.approx(e.units.wavelength_eg, rel=1e-14)


def test_load_rejects_row_count_mismatch(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(
        "# ensemble v1 N=3 seed=0 geometry=cube:side_um=10 wavelength_nm=780\n"
        "0 0 0\n1 1 1\n"
    )
    with pytest.raises(ValueError, match="N=3"):
        load_ensemble(path)


def test_load_reports_bad_line_number(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(
        "# ensemble v1 N=2 seed=0 geometry=cube:side_um=10 wavelength_nm=780\n"
        "0 0 0\n0 zero 0\n"
    )
    with pytest.raises(ValueError, match="line 3"):
        load_ensemble(path)


def test_load_file_from_documented_format(tmp_path):
    # file assembled by hand, following only the documented format
    values = [
        (0.25, -1.5, 3.0625),
        (1e-16, 2.0**-30, -7.123456789012345),
    ]
    lines = ["# ensemble v1 N=2 seed=42 geometry=sphere:radius_um=5 wavelength_nm=795"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in values]
    path = tmp_path / "external.txt"
    path.write_text("\n".join(lines) + "\n")
    e = load_ensemble(path)
    assert np.array_equal(e.positions, np.array(values))
    assert e.seed == 42
    assert e.geometry.kind == "sphere"
    assert e.geometry.size == pytest.approx(5e-6, rel=1e-14)
    assert e.units.wavelength_eg == pytest.approx(795e-9, rel=1e-14)


def test_pair_separations_count_and_bound():
    e = generate_ensemble(Geometry("cube", 10e-6), n_atoms=100, seed=2)
    pairs = pair_separations(e)
    assert pairs.distances.size == 100 * 99 // 2
    assert pairs.distances.max() <= np.sqrt(3.0) * 10e-6 * e.units.k_eg
    assert np.all(pairs.distances > 0)


def test_pair_two_atoms():
    d = 1.25
    e = AtomicEnsemble(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, d]]), Geometry("cube", 1e-6), 0)
    pairs = pair_separations(e)
    assert pairs.distances.size == 1
    assert pairs.distances[0] == pytest.approx(d, abs=0)


def test_duplicate_positions_flagged_not_fatal():
    positions = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    with pytest.warns(UserWarning, match="coincident"):
        e = AtomicEnsemble(positions, Geometry("cube", 1e-6), 0)
        pair_separations(e)


def test_positions_read_only():
    e = generate_ensemble(Geometry("cube", 1e-6), n_atoms=3, seed=0)
    with pytest.raises(ValueError):
        e.positions[0, 0] = 1.0


def test_units_invariants():
    units = PhysicalUnits(wavelength_eg=780e-9)
    assert units.k_eg * units.wavelength_eg == pytest.approx(2 * np.pi, rel=1e-15)
    with pytest.raises(ValueError):
        PhysicalUnits(wavelength_eg=-1.0)
