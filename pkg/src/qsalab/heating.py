"""Electrode voltage-noise heating projected onto normal modes.

For electrode k with voltage-noise PSD S_k (V^2/Hz) and per-volt field E_k^(i)
at ion i, mode n with unit 3N-vector nu_n heats at

    Gamma_{n,k} = q^2 S_k |sum_i nu_n^(i) . E_k^(i)|^2 / (4 m hbar omega_n)

and Gamma_n = sum_k Gamma_{n,k}.  Noise on different electrodes is uncorrelated.
Positions handed to the field model are in the electrode frame (x, height, z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CA40, HBAR, DomainError, IonSpecies, TWO_PI
from . import statics
from .pseudopotential import SurfaceTrapGeometry, dc_field_per_volt, match_geometry, split_rf_geometry


@dataclass(frozen=True)
class NoiseModel:
    psd: float = 1e-18  # V^2/Hz shared by all electrodes
    per_electrode: dict = field(default_factory=dict)  # overrides by electrode name

    def __post_init__(self):
        if self.psd < 0 or any(v < 0 for v in self.per_electrode.values()):
            raise DomainError("noise PSD must be non-negative")

    def for_electrode(self, name: str) -> float:
        return self.per_electrode.get(name, self.psd)

    def scaled(self, s: float) -> "NoiseModel":
        return NoiseModel(self.psd * s, {k: v * s for k, v in self.per_electrode.items()})


@dataclass
class HeatingReport:
    frequencies: np.ndarray  # rad/s
    rates: np.ndarray  # quanta/s per mode
    per_electrode: dict  # name -> (n_modes,) quanta/s
    modes: list
    ratios: dict = field(default_factory=dict)

    def rate(self, mode: int) -> float:
        return float(self.rates[self.modes.index(mode)])

    def to_dict(self) -> dict:
        return {"modes": [
            {"mode": int(l), "freq_Hz": float(f / TWO_PI), "rate_quanta_per_s": float(r),
             "per_electrode": {k: float(v[i]) for k, v in self.per_electrode.items()}}
            for i, (l, f, r) in enumerate(zip(self.modes, self.frequencies, self.rates))],
            "ratios": {k: float(v) for k, v in self.ratios.items()}}


def unit_rate(species: IonSpecies, omega: float) -> float:
    """q^2 / (4 m hbar omega): quanta/s per (V/m)^2/Hz of projected field noise."""
    if omega <= 0:
        raise DomainError("mode frequency must be positive")
    return species.charge**2 / (4 * species.mass * HBAR * omega)


def mode_heating_rates(spectrum, fields: dict, noise: NoiseModel = NoiseModel(),
                       modes=None, species: IonSpecies | None = None) -> HeatingReport:
    """Per-mode and per-electrode heating rates.

    ``fields`` maps electrode name to an (N, 3) array of per-volt fields at the
    ions of ``spectrum`` (same ion order).
    """
    species = species or (spectrum.config.species if spectrum.config is not None else CA40)
    vec = np.asarray(spectrum.mode_vectors)
    n_ions = vec.shape[0] // 3
    modes = list(range(vec.shape[1])) if modes is None else list(modes)
    freqs = np.asarray(spectrum.frequencies)[modes]
    pref = np.array([unit_rate(species, w) for w in freqs])
    per = {}
    for name, e in fields.items():
        e = np.asarray(e, float)
        if e.shape != (n_ions, 3):
            raise DomainError(f"field array for {name!r} has shape {e.shape}, "
                              f"expected {(n_ions, 3)}")
        proj = e.reshape(-1) @ vec[:, modes]
        per[name] = noise.for_electrode(name) * pref * proj**2
    rates = np.sum(list(per.values()), axis=0) if per else np.zeros(len(modes))
    return HeatingReport(freqs, rates, per, modes)


def homogeneous_field(n_ions: int, direction=(0.0, 0.0, 1.0), name: str = "uniform") -> dict:
    e = np.asarray(direction, float)
    return {name: np.tile(e, (n_ions, 1))}


def electrode_frame(positions, height: float, center=(0.0, 0.0)) -> np.ndarray:
    """Trap-frame ion positions (x, y, z) to electrode-frame (x, height, z)."""
    p = np.array(positions, float)
    p[:, 0] += center[0]
    p[:, 1] += height + center[1]
    return p


def pair_rates(spectrum, fields, noise=NoiseModel(), axis: str = "z") -> dict:
    """COM (in-phase) and stretch (out-of-phase) rates of the lowest pair along ``axis``."""
    ip, oop = spectrum.lowest_pair(axis)
    rep = mode_heating_rates(spectrum, fields, noise, modes=[ip, oop])
    com, st = rep.rates
    rep.ratios["com/str"] = com / st if st > 0 else math.inf
    return {"com": float(com), "str": float(st), "ratio": rep.ratios["com/str"],
            "omega_com": float(rep.frequencies[0]), "omega_str": float(rep.frequencies[1]),
            "report": rep}


# ---------------------------------------------------------------- synthetic geometry

SYNTH_DEFAULTS = {"height": 80e-6, "rf_separation": 29e-6, "dc_segment": 100e-6,
                  "omega_dw": TWO_PI * 2.0e6, "omega_y": TWO_PI * 2.1e6,
                  "omega_z": TWO_PI * 0.54e6}


def synthetic_geometry(height=SYNTH_DEFAULTS["height"],
                       rf_separation=SYNTH_DEFAULTS["rf_separation"],
                       dc_segment=SYNTH_DEFAULTS["dc_segment"]) -> SurfaceTrapGeometry:
    """Split-RF strip trap scaled to ``height`` with segmented DC electrodes.

    The layout is matched so the RF nulls sit at ``height`` with
    ``rf_separation``; DC segments are defined before scaling.
    """
    g = split_rf_geometry(dc_segment=dc_segment)
    return match_geometry(g, height, rf_separation)


def double_well_spectrum(d: float, n_per_well: int = 1, species: IonSpecies = CA40,
                         omega_dw=SYNTH_DEFAULTS["omega_dw"], omega_y=SYNTH_DEFAULTS["omega_y"],
                         omega_z=SYNTH_DEFAULTS["omega_z"]):
    alpha_w = species.mass * omega_dw**2 / species.charge
    phi_z = species.mass * omega_z**2 / species.charge
    pot = statics.build_double_well(alpha_w, d, species, "radial",
                                    omega_perp={"omega_y": omega_y}, axial_curvature=phi_z)
    cfg = statics.solve_equilibrium(pot, species, (n_per_well, n_per_well))
    return statics.normal_modes(cfg, pot)


def single_well_spectrum(n: int, x0: float = 0.0, species: IonSpecies = CA40,
                         omega_x=SYNTH_DEFAULTS["omega_dw"], omega_y=SYNTH_DEFAULTS["omega_y"],
                         omega_z=SYNTH_DEFAULTS["omega_z"]):
    """n ions in one harmonic well; positions shifted to x = x0 afterwards."""
    c = lambda w: species.mass * w**2 / species.charge
    pot = statics.TrapPotential(c(omega_x), 0.0, phi_y=c(omega_y), phi_z=c(omega_z), axis="x")
    cfg = statics.solve_equilibrium(pot, species, (n, 0))
    spec = statics.normal_modes(cfg, pot)
    pos = cfg.positions.copy()
    pos[:, 0] += x0
    spec.config = statics.IonConfiguration(cfg.species, pos, cfg.well_assignment)
    return spec


def spectrum_fields(spectrum, geometry: SurfaceTrapGeometry, height: float) -> dict:
    return dc_field_per_volt(geometry, electrode_frame(spectrum.config.positions, height))


def calibrate_noise_amplitude(reference_rate: float, geometry: SurfaceTrapGeometry,
                              omega: float, position=(0.0, 80e-6, 0.0), axis: str = "z",
                              species: IonSpecies = CA40) -> NoiseModel:
    """Shared PSD that reproduces ``reference_rate`` (quanta/s) for one ion at ``position``."""
    if reference_rate <= 0:
        raise DomainError("reference rate must be positive")
    e = dc_field_per_volt(geometry, [position])
    k = "xyz".index(axis)
    proj2 = sum(float(v[0, k]) ** 2 for v in e.values())
    if proj2 == 0:
        raise DomainError("no projected field along the mode: cannot calibrate")
    return NoiseModel(reference_rate / (unit_rate(species, omega) * proj2))


def heating_ratio_scan(separations, geometry: SurfaceTrapGeometry | None = None,
                       n_per_well: int = 1, height: float = SYNTH_DEFAULTS["height"],
                       noise: NoiseModel = NoiseModel(), species: IonSpecies = CA40,
                       **mode_kw) -> list[dict]:
    """Rows (d_um, gamma_com, gamma_str, ratio) of the lowest axial pair vs well separation."""
    geometry = geometry or synthetic_geometry(height)
    rows = []
    for d in separations:
        try:
            spec = double_well_spectrum(float(d), n_per_well, species, **mode_kw)
            r = pair_rates(spec, spectrum_fields(spec, geometry, height), noise)
        except (DomainError, LookupError, RuntimeError) as exc:
            rows.append({"d_um": round(float(d) * 1e6, 9), "gamma_com": math.nan,
                         "gamma_str": math.nan, "ratio": math.nan, "error": str(exc)})
            continue
        rows.append({"d_um": round(float(d) * 1e6, 9), "gamma_com": r["com"], "gamma_str": r["str"],
                     "ratio": r["ratio"]})
    return rows
