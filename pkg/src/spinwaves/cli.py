"""Command-line front end: reproducible experiments emitting figure-ready CSV/JSON.

Every command is a pure function of its JSON config plus the seeds inside
it; re-running writes byte-identical data files. Outputs are committed with
write-to-temp-then-rename so failed runs leave no partial files.

Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

import argparse
import copy
import hashlib
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dephasing import InteractionModel, StateAmplitudes, g2_asymptotic, g2_of_T, g2_zero
from .dephasing import overlap_symmetric, phase_matrix
from .dynamics import (
    ModeGrid,
    PulseProfile,
    cascade_two_photon,
    e0_of_t,
    emission_spectrum,
    single_exc_ode_oracle,
    validity_check,
)
from .ensemble import Geometry, PhysicalUnits, generate_ensemble, save_ensemble
from .radiative import gamma_n, unit_vector

COMMANDS = ("ensemble", "coupling-map", "gamma", "dynamics", "spectrum", "cascade", "g2")


class ConfigError(Exception):
    """Invalid run configuration; maps to exit code 2."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# config parsing

_GEOMETRY_KEYS = {"cube": "side_um", "sphere": "radius_um", "gaussian": "sigma_um"}

_BASE_KEYS = {
    "wavelength_nm",
    "geometry",
    "n_atoms",
    "density_per_cm3",
    "seed",
    "k0p_direction",
    "k0p_magnitude",
    "dipole_axis",
}

# one config file may drive several commands; every command tolerates the
# other commands' sections and validates only its own
_SECTION_KEYS = {"coupling_map", "gamma", "dynamics", "spectrum", "cascade", "g2"}


def _check_keys(section: dict, allowed: set, required: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where} must be a finite number")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer")
    return value


def _as_vec3(value, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{where} must be a 3-component list")
    return np.array([_as_number(v, where) for v in value])


def _parse_geometry(section, where: str) -> Geometry:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    shape = section.get("shape")
    if shape not in _GEOMETRY_KEYS:
        raise ConfigError(f"{where}.shape must be one of {sorted(_GEOMETRY_KEYS)}")
    size_key = _GEOMETRY_KEYS[shape]
    _check_keys(section, {"shape", size_key}, {"shape", size_key}, where)
    size_um = _as_number(section[size_key], f"{where}.{size_key}")
    if size_um <= 0:
        raise ConfigError(f"{where}.{size_key} must be positive")
    return Geometry(shape, size_um * 1e-6)


class RunContext:
    """Validated base configuration shared by every command."""

    def __init__(self, config: dict, section_key: str, section_allowed: set,
                 section_required: set = frozenset()):
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
        _check_keys(config, _BASE_KEYS | _SECTION_KEYS, {"geometry", "seed"}, "config")
        if ("n_atoms" in config) == ("density_per_cm3" in config):
            raise ConfigError("specify exactly one of n_atoms or density_per_cm3")

        self.config = config
        wavelength_nm = _as_number(config.get("wavelength_nm", 780.0), "wavelength_nm")
        self.units = PhysicalUnits(wavelength_eg=wavelength_nm * 1e-9)
        self.geometry = _parse_geometry(config["geometry"], "geometry")
        self.seed = _as_int(config["seed"], "seed")
        self.k0p_magnitude = _as_number(config.get("k0p_magnitude", 1.0), "k0p_magnitude")
        if self.k0p_magnitude <= 0:
            raise ConfigError("k0p_magnitude must be positive")
        try:
            self.k0p_hat = unit_vector(_as_vec3(config.get("k0p_direction", [0, 0, 1]),
                                                "k0p_direction"))
            self.axis = unit_vector(_as_vec3(config.get("dipole_axis", [1, 0, 0]), "dipole_axis"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.k0p = self.k0p_magnitude * self.k0p_hat
        self.n_atoms = config.get("n_atoms")
        if self.n_atoms is not None:
            self.n_atoms = _as_int(self.n_atoms, "n_atoms")
        self.density = config.get("density_per_cm3")
        if self.density is not None:
            self.density = _as_number(self.density, "density_per_cm3")

        section = config.get(section_key, {}) if section_key else {}
        if not isinstance(section, dict):
            raise ConfigError(f"{section_key} must be an object")
        _check_keys(section, section_allowed, section_required, section_key or "config")
        self.section = section

    def build_ensemble(self):
        if self.n_atoms is not None:
            return generate_ensemble(self.geometry, n_atoms=self.n_atoms, seed=self.seed,
                                     units=self.units)
        return generate_ensemble(self.geometry, density_per_cm3=self.density, seed=self.seed,
                                 units=self.units)


# ---------------------------------------------------------------------------
# output handling

class OutputSet:
    """Collects rendered files, then commits them atomically via os.replace."""

    def __init__(self, outdir: Path):
        self.outdir = Path(outdir)
        self.pending = []

    def add(self, name: str, text: str):
        self.pending.append((name, text))

    def add_csv(self, name: str, header: list, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
        self.add(name, "\n".join(lines) + "\n")

    def add_json(self, name: str, obj):
        self.add(name, json.dumps(obj, sort_keys=True, indent=2) + "\n")

    def commit(self) -> list:
        self.outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.pending:
            final = self.outdir / name
            tmp = self.outdir / f".tmp-{name}"
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, final)
            written.append(final)
        return written


def _meta(command: str, config: dict, outputs: list, wall_time: float) -> dict:
    return {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "outputs": outputs,
        "version": __version__,
        "wall_time_s": wall_time,
    }


def run_command(command: str, config: dict, outdir: Path) -> list:
    """Execute one subcommand, append its metadata record and commit the files."""
    started = time.perf_counter()
    out = _COMMAND_FUNCS[command](config, Path(outdir))
    names = [name for name, _ in out.pending]
    out.add_json(f"{command.replace('-', '_')}_meta.json",
                 _meta(command, config, names, time.perf_counter() - started))
    return out.commit()


# ---------------------------------------------------------------------------
# commands

def cmd_ensemble(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "", set())
    e = ctx.build_ensemble()
    out = OutputSet(outdir)
    lines = [
        f"# ensemble v1 N={e.n} seed={e.seed} geometry={e.geometry.describe()}"
        f" wavelength_nm={e.units.wavelength_eg * 1e9:.17g}"
    ]
    lines.extend(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in e.positions)
    out.add("ensemble.txt", "\n".join(lines) + "\n")
    return out


_SCAN_KEYS = {"kind", "k_max", "points", "axis"}
_COUPLING_KEYS = {"scan", "excitation_number", "s_ell", "profiles"}
_ALL_PROFILES = ("v00", "nonsym_aggregate", "v0g", "s_ell")


def _scan_wavevectors(ctx: RunContext, scan: dict):
    """Wavevectors on the |k| = |k0p| shell for a 1D cut or a 2D patch."""
    _check_keys(scan, _SCAN_KEYS, {"kind", "k_max", "points"}, "scan")
    kind = scan["kind"]
    if kind not in ("cut_1d", "patch_2d"):
        raise ConfigError("scan.kind must be 'cut_1d' or 'patch_2d'")
    k_max = _as_number(scan["k_max"], "scan.k_max")
    points = _as_int(scan["points"], "scan.points")
    if points < 2:
        raise ConfigError("scan.points must be >= 2")
    mag = ctx.k0p_magnitude
    if k_max > mag:
        warnings.warn("scan extends beyond the emission shell; clipped to |k0p|", stacklevel=2)
        k_max = mag
    # orthonormal transverse frame around the phase-matched direction
    helper = np.array([1.0, 0.0, 0.0])
    if abs(ctx.k0p_hat[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    u1 = unit_vector(np.cross(ctx.k0p_hat, helper))
    u2 = np.cross(ctx.k0p_hat, u1)
    if kind == "cut_1d":
        axis_name = scan.get("axis", "x")
        if axis_name not in ("x", "y"):
            raise ConfigError("scan.axis must be 'x' or 'y'")
        q = np.linspace(-k_max, k_max, points)
        trans = u1 if axis_name == "x" else u2
        kz = np.sqrt(mag**2 - q**2)
        return q[:, None] * trans[None, :] + kz[:, None] * ctx.k0p_hat[None, :]
    qx, qy = np.meshgrid(np.linspace(-k_max, k_max, points),
                         np.linspace(-k_max, k_max, points), indexing="ij")
    qx, qy = qx.ravel(), qy.ravel()
    radial = qx**2 + qy**2
    keep = radial <= mag**2
    if not np.all(keep):
        warnings.warn("patch corners fall outside the emission shell; dropped", stacklevel=2)
        qx, qy, radial = qx[keep], qy[keep], radial[keep]
    kz = np.sqrt(mag**2 - radial)
    return qx[:, None] * u1[None, :] + qy[:, None] * u2[None, :] + kz[:, None] * ctx.k0p_hat[None, :]


def cmd_coupling_map(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "coupling_map", _COUPLING_KEYS, {"scan"})
    e = ctx.build_ensemble()
    n_exc = ctx.section.get("excitation_number", 1)
    n_exc = _as_int(n_exc, "coupling_map.excitation_number")
    if not 1 <= n_exc <= e.n:
        raise ConfigError("excitation_number out of range")
    s_ell = ctx.section.get("s_ell")
    if s_ell is not None:
        s_ell = _as_int(s_ell, "coupling_map.s_ell")
        if not 1 <= s_ell <= e.n - 1:
            raise ConfigError("s_ell out of range for the single-excitation basis")
    default_profiles = ["v00", "nonsym_aggregate", "v0g"] + (["s_ell"] if s_ell else [])
    profiles = ctx.section.get("profiles", default_profiles)
    if not isinstance(profiles, list) or any(p not in _ALL_PROFILES for p in profiles):
        raise ConfigError(f"profiles must be a list drawn from {_ALL_PROFILES}")
    if "s_ell" in profiles and s_ell is None:
        raise ConfigError("profile 's_ell' requires the s_ell key")

    ks = _scan_wavevectors(ctx, ctx.section["scan"])
    n_k = ks.shape[0]
    v00 = np.empty(n_k)
    v0g = np.empty(n_k, dtype=complex)
    agg = np.empty(n_k)
    s_profile = np.empty(n_k)
    # non-symmetric labels enumerate atoms in colex order, i.e. natural order
    ell_all = np.arange(1, e.n)
    norm_all = 1.0 / np.sqrt(e.n * ell_all * (ell_all + 1.0))
    block = max(1, int(2e6) // max(e.n, 1))
    for start in range(0, n_k, block):
        sl = slice(start, min(start + block, n_k))
        dk = ks[sl] - ctx.k0p[None, :]
        p = np.exp(-1j * dk @ e.positions.T)  # (B, N)
        cum = np.cumsum(p, axis=1)
        f_abs = np.abs(cum[:, -1])
        v00[sl] = n_exc / e.n * f_abs**2
        v0g[sl] = np.conj(cum[:, -1]) / np.sqrt(e.n)
        if "nonsym_aggregate" in profiles:
            terms = np.abs(cum[:, : e.n - 1] - p[:, 1:] * ell_all[None, :])
            agg[sl] = f_abs * (terms @ norm_all)
        if s_ell is not None:
            s_profile[sl] = np.abs(cum[:, s_ell - 1] - s_ell * p[:, s_ell]) / np.sqrt(
                s_ell * (s_ell + 1.0)
            )

    out = OutputSet(outdir)
    sidecar_base = {"ensemble_hash": e.content_hash(), "k0p": list(ctx.k0p), "n": n_exc}

    def emit(name, values, ell, ell_prime):
        vals = np.asarray(values, dtype=complex)
        rows = [
            (k[0], k[1], k[2], v.real, v.imag, abs(v))
            for k, v in zip(ks, vals)
        ]
        out.add_csv(f"{name}.csv", ["kx", "ky", "kz", "re", "im", "abs_v"], rows)
        out.add_json(f"{name}.json", dict(sidecar_base, ell=ell, ell_prime=ell_prime))

    if "v00" in profiles:
        peak = v00.max()
        emit("v00", v00 / peak if peak > 0 else v00, 0, 0)
    if "nonsym_aggregate" in profiles:
        emit("nonsym_aggregate", agg, "all", 0)
    if "v0g" in profiles:
        emit("v0g", v0g, 0, "ground")
    if s_ell is not None and "s_ell" in profiles:
        emit("s_ell", s_profile, s_ell, None)
    return out


def cmd_gamma(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "gamma", {"kernel_mode"})
    mode = ctx.section.get("kernel_mode", "real_only")
    if mode not in ("real_only", "complex"):
        raise ConfigError("gamma.kernel_mode must be 'real_only' or 'complex'")
    e = ctx.build_ensemble()
    value = gamma_n(e, ctx.k0p, ctx.axis, mode=mode)
    out = OutputSet(outdir)
    out.add_json(
        "gamma.json",
        {
            "N": e.n,
            "geometry": e.geometry.describe(),
            "seed": e.seed,
            "re_gamma_over_Gamma": value.real,
            "im_gamma_over_Gamma": value.imag,
            "mode": mode,
        },
    )
    return out


def _parse_pulse(section: dict, where: str) -> PulseProfile:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(section, {"shape", "mean_rabi_gamma"}, {"shape", "mean_rabi_gamma"}, where)
    shape = section["shape"]
    if shape not in ("square", "sin2"):
        raise ConfigError(f"{where}.shape must be 'square' or 'sin2'")
    rabi = _as_number(section["mean_rabi_gamma"], f"{where}.mean_rabi_gamma")
    if rabi <= 0:
        raise ConfigError(f"{where}.mean_rabi_gamma must be positive")
    return PulseProfile.pi_pulse(shape, rabi)


_DYNAMICS_KEYS = {"pulse", "t_max_gamma", "t_points", "ode_oracle", "kernel_mode"}


def cmd_dynamics(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "dynamics", _DYNAMICS_KEYS, {"pulse"})
    pulse = _parse_pulse(ctx.section["pulse"], "dynamics.pulse")
    t_max = _as_number(ctx.section.get("t_max_gamma", 5.0), "dynamics.t_max_gamma")
    t_points = _as_int(ctx.section.get("t_points", 400), "dynamics.t_points")
    mode = ctx.section.get("kernel_mode", "real_only")
    e = ctx.build_ensemble()
    value = gamma_n(e, ctx.k0p, ctx.axis, mode=mode)
    t_grid = np.linspace(0.0, t_max, t_points)
    trace = e0_of_t(pulse, value, t_grid)
    check = validity_check(pulse, value)

    out = OutputSet(outdir)
    out.add_csv(
        "e0.csv",
        ["t", "re", "im"],
        zip(trace.times, trace.values.real, trace.values.imag),
    )
    out.add_json(
        "dynamics.json",
        {
            "gamma_re": value.real,
            "gamma_im": value.imag,
            "validity_ok": bool(check.ok),
            "validity_ratio": check.ratio,
        },
    )
    if ctx.section.get("ode_oracle", False):
        oracle = single_exc_ode_oracle(e, ctx.axis, pulse, t_grid, ctx.k0p)
        out.add_csv(
            "e0_oracle.csv",
            ["t", "re", "im"],
            zip(oracle.times, oracle.symmetric.real, oracle.symmetric.imag),
        )
    return out


_SPECTRUM_KEYS = {"detuning_halfwidth_gammas", "detuning_points", "time_gamma", "direction",
                  "kernel_mode", "normalize"}


def _detuning_grid(ctx: RunContext, gamma_re: float):
    half = _as_number(ctx.section.get("detuning_halfwidth_gammas", 20.0),
                      "detuning_halfwidth_gammas")
    points = _as_int(ctx.section.get("detuning_points", 512), "detuning_points")
    if half <= 0 or points < 2:
        raise ConfigError("detuning grid must have positive extent and >= 2 points")
    return ModeGrid.detuning_span(gamma_re, half, points)


def _time_value(section, key="time_gamma"):
    raw = section.get(key, "inf")
    if raw == "inf":
        return np.inf
    return _as_number(raw, key)


def cmd_spectrum(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "spectrum", _SPECTRUM_KEYS)
    e = ctx.build_ensemble()
    mode = ctx.section.get("kernel_mode", "real_only")
    value = gamma_n(e, ctx.k0p, ctx.axis, mode=mode)
    direction = ctx.section.get("direction")
    direction = ctx.k0p_hat if direction is None else unit_vector(_as_vec3(direction, "direction"))
    grid = ModeGrid.single_direction(direction, _detuning_grid(ctx, value.real))
    t = _time_value(ctx.section)
    table = emission_spectrum(e, value, grid, t, ctx.k0p,
                              normalize=bool(ctx.section.get("normalize", False)))
    out = OutputSet(outdir)
    rows = [
        (d, direction[0], direction[1], direction[2], table[0, j])
        for j, d in enumerate(grid.detunings)
    ]
    out.add_csv(
        "spectrum.csv",
        ["delta_omega", "direction_x", "direction_y", "direction_z", "intensity"],
        rows,
    )
    out.add_json("spectrum.json", {"gamma_re": value.real, "gamma_im": value.imag})
    return out


_CASCADE_KEYS = {"detuning_halfwidth_gammas", "detuning_points", "t_max_gamma", "t_points",
                 "kernel_mode"}


def cmd_cascade(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "cascade", _CASCADE_KEYS)
    e = ctx.build_ensemble()
    mode = ctx.section.get("kernel_mode", "real_only")
    value = gamma_n(e, ctx.k0p, ctx.axis, mode=mode)
    grid = ModeGrid.single_direction(ctx.k0p_hat, _detuning_grid(ctx, value.real))
    t_max = _as_number(ctx.section.get("t_max_gamma", 5.0), "cascade.t_max_gamma")
    t_points = _as_int(ctx.section.get("t_points", 200), "cascade.t_points")
    t_grid = np.linspace(0.0, t_max / max(value.real, 1e-12), t_points)
    result = cascade_two_photon(e, value, grid, t_grid, ctx.k0p)

    out = OutputSet(outdir)
    out.add_csv(
        "e02.csv",
        ["t", "re", "im"],
        zip(t_grid, result.e02.values.real, result.e02.values.imag),
    )
    mid = int(np.argmin(np.abs(grid.detunings)))
    trace = result.ephi0[0, mid, :]
    out.add_csv("ephi0.csv", ["t", "re", "im"], zip(t_grid, trace.real, trace.imag))
    table = result.two_photon()[0, :, 0, :]
    rows = []
    for i, di in enumerate(grid.detunings):
        for j, dj in enumerate(grid.detunings):
            rows.append((di, dj, table[i, j].real, table[i, j].imag))
    out.add_csv("gphiphi.csv", ["delta_omega", "delta_omega_prime", "re", "im"], rows)
    out.add_json("cascade.json", {"gamma_re": value.real, "gamma_im": value.imag})
    return out


_G2_KEYS = {"amplitudes", "interaction", "storage_times_gamma", "phase_seed", "overlap_n"}


def _parse_amplitudes(section, where: str) -> StateAmplitudes:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    if section.get("truncated_coherent", False):
        _check_keys(section, {"truncated_coherent"}, set(), where)
        return StateAmplitudes.truncated_coherent()
    _check_keys(section, {"c0", "c1", "c2"}, {"c0", "c1", "c2"}, where)
    try:
        return StateAmplitudes(
            _as_number(section["c0"], f"{where}.c0"),
            _as_number(section["c1"], f"{where}.c1"),
            _as_number(section["c2"], f"{where}.c2"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_interaction(section, where: str) -> InteractionModel:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    model = section.get("model")
    if model == "none":
        _check_keys(section, {"model"}, {"model"}, where)
        return InteractionModel.none()
    if model == "iid_uniform":
        _check_keys(section, {"model", "width_rad"}, {"model", "width_rad"}, where)
        return InteractionModel.iid_uniform(_as_number(section["width_rad"], f"{where}.width_rad"))
    if model == "vdw":
        _check_keys(section, {"model", "c6_phase"}, {"model", "c6_phase"}, where)
        return InteractionModel.vdw(_as_number(section["c6_phase"], f"{where}.c6_phase"))
    if model == "dipolar":
        _check_keys(section, {"model", "c3_phase"}, {"model", "c3_phase"}, where)
        return InteractionModel.dipolar(_as_number(section["c3_phase"], f"{where}.c3_phase"))
    raise ConfigError(f"{where}.model must be one of none, iid_uniform, vdw, dipolar")


def cmd_g2(config: dict, outdir: Path) -> OutputSet:
    ctx = RunContext(config, "g2", _G2_KEYS, {"amplitudes", "interaction", "storage_times_gamma"})
    amplitudes = _parse_amplitudes(ctx.section["amplitudes"], "g2.amplitudes")
    model = _parse_interaction(ctx.section["interaction"], "g2.interaction")
    times = ctx.section["storage_times_gamma"]
    if not isinstance(times, list) or not times:
        raise ConfigError("g2.storage_times_gamma must be a non-empty list")
    times = [_as_number(t, "g2.storage_times_gamma") for t in times]
    phase_seed = _as_int(ctx.section.get("phase_seed", 0), "g2.phase_seed")

    e = ctx.build_ensemble()
    rows = []
    for index, t_storage in enumerate(times):
        # per-sample derived seed keeps iid draws independent across the sweep
        phi = phase_matrix(e, model, t_storage, seed=phase_seed + index)
        value = g2_of_T(amplitudes, phi)
        asym = g2_asymptotic(amplitudes, phi)
        ovl = overlap_symmetric(2, phi) if e.n >= 2 else complex(1.0)
        rows.append((t_storage, value, asym, ovl.real, ovl.imag))
    out = OutputSet(outdir)
    out.add_csv("g2.csv", ["T", "g2", "g2_asymptotic", "overlap_sym_re", "overlap_sym_im"], rows)
    out.add_json(
        "g2_meta.json",
        {
            "model": model.kind,
            "coefficient": model.coefficient,
            "phase_seed": phase_seed,
            "seeds": [phase_seed + i for i in range(len(times))],
            "g2_zero": g2_zero(amplitudes),
        },
    )
    return out


_COMMAND_FUNCS = {
    "ensemble": cmd_ensemble,
    "coupling-map": cmd_coupling_map,
    "gamma": cmd_gamma,
    "dynamics": cmd_dynamics,
    "spectrum": cmd_spectrum,
    "cascade": cmd_cascade,
    "g2": cmd_g2,
}


# ---------------------------------------------------------------------------
# sweeps

def _resolve_sweep(config: dict, key_path: str):
    node = config
    parts = key_path.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"sweep key {key_path!r} not found in config")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"sweep key {key_path!r} not found in config")
    current = node[leaf]
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(f"sweep key {key_path!r} is not numeric")
    return node, leaf, isinstance(current, int)


def _parse_sweep(spec: str):
    if "=" not in spec:
        raise ConfigError("sweep spec must look like key=v1,v2,...")
    key, _, raw = spec.partition("=")
    values = []
    for item in raw.split(","):
        try:
            values.append(float(item))
        except ValueError:
            raise ConfigError(f"sweep value {item!r} is not numeric") from None
    if not values:
        raise ConfigError("sweep spec has no values")
    return key, values


def run_sweep(command: str, config: dict, outdir: Path, spec: str, threads: int) -> list:
    key, values = _parse_sweep(spec)
    _resolve_sweep(config, key)  # validate before launching anything

    def one(index_value):
        index, value = index_value
        point = copy.deepcopy(config)
        node, leaf, is_int = _resolve_sweep(point, key)
        node[leaf] = int(value) if is_int and float(value).is_integer() else value
        return run_command(command, point, Path(outdir) / f"sweep_{index:03d}")

    jobs = list(enumerate(values))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(job) for job in jobs]
    return [path for group in results for path in group]


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinwaves",
        description="Collective-emission simulations: ensembles, coupling maps, "
        "decay rates, spectra, cascades and spin-wave correlations.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="parallel sweep workers")
    parser.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                        help="run the command once per value of a numeric config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.sweep:
            written = run_sweep(args.command, config, Path(args.out), args.sweep, args.threads)
        else:
            written = run_command(args.command, config, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
