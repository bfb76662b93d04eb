"""Light-shift ZZ gate between two radially separated ion strings.

The cross-beam ac-Stark shift drives the two lowest axial modes (in-phase and
out-of-phase motion of the strings along z).  After the phase-space loops close
the qubits see H = sum_{j != k} J_jk Z_j Z_k with

    J_jk = chi_jk cos(dk_z (z_j - z_k)),
    chi_jk = -sum_m Omega^2 eta_m^2 nu_j^(m) nu_k^(m) / (4 delta_m),
    eta_m = dk_z sqrt(hbar / (2 m omega_m)),  delta_m = omega_m - beat note.

The beat note sits delta = Omega_c/2 above the upper mode, so the detunings are
-Omega_c/2 and -3 Omega_c/2 and both loops close at t = 2 pi / delta.

Qubits are numbered well by well (well at negative x first), each string sorted
by increasing z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..core import CA40, HBAR, DomainError, IonSpecies, TWO_PI
from .. import statics

LS_DEFAULTS = {"omega_z": TWO_PI * 0.613e6, "omega_x": TWO_PI * 2.0e6,
               "omega_y": TWO_PI * 2.1e6, "d_over_lz": 31 / 6, "p": 25}


@dataclass(frozen=True)
class LightShiftGeometry:
    potential: object
    config: object
    spectrum: object
    order: tuple  # ion indices in qubit order
    lz_over_dz: float | None = None

    @property
    def n_per_well(self) -> int:
        return len(self.order) // 2

    @property
    def z(self) -> np.ndarray:
        return self.config.positions[list(self.order), 2]

    @property
    def spacing(self) -> float:
        """|z_1 - z_2| of the first string."""
        return float(abs(self.z[1] - self.z[0]))

    def axial_pair(self):
        """Frequencies (2,) and z participations (2, N) of the two lowest axial modes."""
        zm = self.spectrum.modes_on_axis("z")
        lo = sorted(zm, key=lambda l: self.spectrum.frequencies[l])[:2]
        nu = np.array([self.spectrum.axial_component(l, "z")[list(self.order)] for l in lo])
        return self.spectrum.frequencies[lo], nu


@dataclass(frozen=True)
class LightShiftConfig:
    omega: float  # two-photon carrier Rabi frequency, rad/s
    delta_k_z: float  # 1/m
    delta: float | None = None  # |detuning| from the upper mode; None = half the splitting
    gate_time: float | None = None  # None = 2 pi / delta
    spin_echo: tuple | None = None  # 1-based qubit labels flipped at t/2
    theta: float = 0.0  # wavevector angle from z in the yz-plane (y-extent ignored)
    p: int | None = None

    def __post_init__(self):
        if self.omega < 0:
            raise DomainError("omega must be non-negative")

    def with_(self, **kw) -> "LightShiftConfig":
        from dataclasses import replace
        return replace(self, **kw)


def lightshift_geometry(n_per_well: int, species: IonSpecies = CA40,
                        lz_over_dz: float | str | None = "auto", **kw) -> LightShiftGeometry:
    """Two strings of ``n_per_well`` ions in a radial double well.

    ``lz_over_dz="auto"`` adds the z-quartic that equalizes the in-string spacing
    when n_per_well >= 3; ``None`` keeps the pure harmonic z confinement.
    """
    p = {**LS_DEFAULTS, **kw}
    phi_z = species.mass * p["omega_z"] ** 2 / species.charge
    lz = statics.chain_length_scale(phi_z, species)
    d = p["d_over_lz"] * lz
    alpha_w = species.mass * p["omega_x"] ** 2 / species.charge
    pot = statics.build_double_well(alpha_w, d, species, "radial",
                                    omega_perp={"omega_y": p["omega_y"]}, axial_curvature=phi_z)
    ratio = None
    if lz_over_dz == "auto":
        if n_per_well >= 3:
            ratio = statics.optimize_quartic_equidistance(n_per_well, pot, species).lz_over_dz
    elif lz_over_dz is not None:
        ratio = float(lz_over_dz)
    if ratio is not None:
        pot = pot.with_(gamma=statics.quartic_for_ratio(pot, species, ratio))
    cfg = statics.solve_equilibrium(pot, species, (n_per_well, n_per_well))
    spec = statics.normal_modes(cfg, pot)
    pos = cfg.positions
    order = []
    for well in (1, 2):
        idx = [i for i, w in enumerate(cfg.well_assignment) if w == well]
        order += sorted(idx, key=lambda i: pos[i, 2])
    return LightShiftGeometry(pot, cfg, spec, tuple(order), ratio)


def cancellation_wavevector(spacing: float, p: int = 25, odd: bool = True) -> float:
    """dk_z = (2p+1) pi/(2 a) (odd, cancels nearest neighbours) or 2p pi/(2 a) (even)."""
    if spacing <= 0:
        raise DomainError("spacing must be positive")
    return ((2 * p + 1) if odd else 2 * p) * math.pi / (2 * spacing)


def default_config(geom: LightShiftGeometry, omega: float = 0.0, odd: bool = True,
                   p: int = LS_DEFAULTS["p"], spin_echo=None) -> LightShiftConfig:
    return LightShiftConfig(omega, cancellation_wavevector(geom.spacing, p, odd),
                            spin_echo=spin_echo, p=p)


def mode_detunings(config: LightShiftConfig, freqs) -> np.ndarray:
    """delta_m = omega_m - beat note, beat note ``delta`` above the upper mode."""
    freqs = np.asarray(freqs, float)
    delta = abs(freqs[1] - freqs[0]) / 2 if config.delta is None else config.delta
    if delta <= 0:
        raise DomainError("delta must be positive")
    return freqs - (freqs.max() + delta)


def gate_time(config: LightShiftConfig, freqs) -> float:
    if config.gate_time is not None:
        return config.gate_time
    d = np.abs(mode_detunings(config, freqs))
    return TWO_PI / d.min()


def lightshift_coupling_matrix(config: LightShiftConfig, geom: LightShiftGeometry,
                               species: IonSpecies = CA40) -> np.ndarray:
    """Symmetric J_jk (rad/s) with zero diagonal, in qubit order."""
    freqs, nu = geom.axial_pair()
    det = mode_detunings(config, freqs)
    if np.any(det == 0):
        raise DomainError("beat note resonant with a mode")
    kz = config.delta_k_z * math.cos(config.theta)
    eta2 = kz**2 * HBAR / (2 * species.mass * freqs)
    chi = -np.einsum("m,mj,mk->jk", config.omega**2 * eta2 / (4 * det), nu, nu)
    z = geom.z
    j = chi * np.cos(kz * (z[:, None] - z[None, :]))
    np.fill_diagonal(j, 0.0)
    return 0.5 * (j + j.T)


# ---------------------------------------------------------------- evolution

def _zz_energies(jmat: np.ndarray) -> np.ndarray:
    """Diagonal of sum_{j != k} J_jk Z_j Z_k over the computational basis (qubit 0 = MSB)."""
    n = len(jmat)
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    z = 1 - 2 * bits
    return np.einsum("sj,jk,sk->s", z, jmat, z)


def _flip(psi: np.ndarray, qubits, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    mask = 0
    for q in qubits:
        mask |= 1 << (n - q)  # 1-based label q
    return psi[idx ^ mask]


def ideal_state(n_per_well: int) -> np.ndarray:
    n = 2 * n_per_well
    j = np.zeros((n, n))
    for a in range(n_per_well):
        j[a, a + n_per_well] = j[a + n_per_well, a] = math.pi / 8  # double sum: 2 J t = pi/4
    return np.exp(-1j * _zz_energies(j)) * plus_state(n)


def plus_state(n: int) -> np.ndarray:
    return np.full(2**n, 2 ** (-n / 2), complex)


def lightshift_evolve(jmat: np.ndarray, t: float, spin_echo=None,
                      initial: np.ndarray | None = None) -> dict:
    """exp(-i H t) on |+>^n, optionally with X_pi on ``spin_echo`` (1-based) at t/2."""
    jmat = np.asarray(jmat, float)
    n = len(jmat)
    if n % 2:
        raise DomainError("needs an even number of qubits (two strings)")
    psi = plus_state(n) if initial is None else np.asarray(initial, complex)
    e = _zz_energies(jmat)
    if spin_echo:
        half = np.exp(-0.5j * t * e)
        psi = half * _flip(half * psi, spin_echo, n)
    else:
        psi = np.exp(-1j * t * e) * psi
    fid = float(abs(np.vdot(ideal_state(n // 2), psi)) ** 2)
    return {"state": psi, "fidelity": fid}


def omega_unit(config: LightShiftConfig, geom: LightShiftGeometry,
               species: IonSpecies = CA40) -> float:
    """Omega at which the first partner pair accumulates the target pi/4 phase."""
    j1 = lightshift_coupling_matrix(config.with_(omega=1.0), geom, species)
    freqs, _ = geom.axial_pair()
    t = gate_time(config, freqs)
    n = geom.n_per_well
    jp = abs(j1[0, n])
    if jp == 0:
        raise DomainError("partner coupling vanishes")
    return math.sqrt(math.pi / 4 / (2 * jp * t))


def fidelity_scan_vs_omega(config: LightShiftConfig, geom: LightShiftGeometry, omegas,
                           variant: str = "", species: IonSpecies = CA40) -> list[dict]:
    freqs, _ = geom.axial_pair()
    t = gate_time(config, freqs)
    j1 = lightshift_coupling_matrix(config.with_(omega=1.0), geom, species)
    rows = []
    for om in omegas:
        r = lightshift_evolve(j1 * om**2, t, config.spin_echo)
        rows.append({"omega_Hz": float(om / TWO_PI), "fidelity": r["fidelity"],
                     "variant": variant})
    return rows


def peak_fidelity(config: LightShiftConfig, geom: LightShiftGeometry, span: float = 2.5,
                  n_grid: int = 1001, species: IonSpecies = CA40) -> dict:
    """Maximum fidelity over Omega in (0, span * omega_unit], grid plus bounded polish."""
    u = omega_unit(config, geom, species)
    freqs, _ = geom.axial_pair()
    t = gate_time(config, freqs)
    j1 = lightshift_coupling_matrix(config.with_(omega=1.0), geom, species)

    def f(om):
        return lightshift_evolve(j1 * om**2, t, config.spin_echo)["fidelity"]

    grid = np.linspace(0, span * u, n_grid)[1:]
    vals = np.array([f(om) for om in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9 * u})
    best = max((vals[i], grid[i]), (-res.fun, res.x))
    return {"fidelity": float(best[0]), "omega": float(best[1]), "omega_unit": u,
            "gate_time": t}
