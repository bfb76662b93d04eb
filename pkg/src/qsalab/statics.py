"""Ion-crystal equilibria, Hessian normal modes and coupled-mode extraction.

Lengths are in meters and frequencies in rad/s throughout.  Internally the
solver works in micrometers with the energy unit ``q^2/(4 pi eps0 um)`` so
that Newton steps are well conditioned.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import (
    KE,
    DomainError,
    IonSpecies,
    Orientation,
    TrapPotential,
    CoupledPair,
    double_well_coefficients,
    interaction_constant_from_splitting,
    point_charge_coupling,
    TWO_PI,
)

log = logging.getLogger(__name__)

L0 = 1e-6  # internal length unit


class ConvergenceError(RuntimeError):
    pass


class WellMergeError(RuntimeError):
    pass


class SaddlePointError(RuntimeError):
    def __init__(self, msg, mode_vector=None, eigenvalue=None):
        super().__init__(msg)
        self.mode_vector = mode_vector
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class IonConfiguration:
    species: IonSpecies
    positions: np.ndarray  # (N, 3) meters
    well_assignment: tuple
    merge_warning: bool = False

    @property
    def n_ions(self) -> int:
        return len(self.positions)


@dataclass
class ModeSpectrum:
    frequencies: np.ndarray  # ascending, rad/s
    mode_vectors: np.ndarray  # (3N, 3N), column l is mode l, layout [ion0 xyz, ion1 xyz, ...]
    axis_label: list
    pair_phase: list
    pair_index: list
    config: IonConfiguration | None = None
    eigenvalues: np.ndarray | None = None

    def __len__(self):
        return len(self.frequencies)

    def axial_component(self, l: int, axis: str = "z") -> np.ndarray:
        """Per-ion displacement of mode ``l`` along ``axis``."""
        k = "xyz".index(axis)
        return self.mode_vectors[k::3, l]

    def modes_on_axis(self, axis: str) -> list[int]:
        return [l for l, a in enumerate(self.axis_label) if a == axis]

    def lowest_pair(self, axis: str = "z") -> tuple[int, int]:
        """(in-phase, out-of-phase) indices of the lowest paired mode along ``axis``."""
        for l in self.modes_on_axis(axis):
            j = self.pair_index[l]
            if j is not None:
                return (l, j) if self.pair_phase[l] == "in_phase" else (j, l)
        raise LookupError(f"no paired mode along {axis}")


@dataclass(frozen=True)
class EquidistanceResult:
    lz_over_dz: float
    spacing_inhomogeneity: float
    gamma: float = 0.0
    baseline_inhomogeneity: float = float("nan")


# ---------------------------------------------------------------- energy model

class _Model:
    """Dimensionless energy, gradient and Hessian for N ions in a TrapPotential."""

    def __init__(self, potential: TrapPotential, species: IonSpecies):
        self.pot = potential
        self.species = species
        self.e0 = species.charge**2 * KE / L0  # J
        s = species.charge / self.e0
        c = potential.curvatures()
        self.c2 = s * c * L0**2  # coefficient of u^2/2 per axis
        self.ax = potential.axis_index
        self.b4 = s * potential.beta * L0**4  # coefficient of u^4/24 on the double-well axis
        self.g4 = s * potential.gamma * L0**4 if potential.axis != "z" else 0.0
        self.f1 = s * potential.bias_field * L0

    def energy(self, u):
        u = u.reshape(-1, 3)
        e = 0.5 * np.sum(self.c2 * u**2)
        e += self.b4 / 24 * np.sum(u[:, self.ax] ** 4)
        e += self.g4 / 24 * np.sum(u[:, 2] ** 4)
        e -= self.f1 * np.sum(u[:, self.ax])
        n = len(u)
        if n > 1:
            i, j = np.triu_indices(n, 1)
            e += np.sum(1.0 / np.linalg.norm(u[i] - u[j], axis=1))
        return e

    def gradient(self, u):
        u = u.reshape(-1, 3)
        g = self.c2 * u
        g[:, self.ax] += self.b4 / 6 * u[:, self.ax] ** 3
        g[:, 2] += self.g4 / 6 * u[:, 2] ** 3
        g[:, self.ax] -= self.f1
        diff = u[:, None, :] - u[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(r, np.inf)
        g -= np.sum(diff / r[..., None] ** 3, axis=1)
        return g.ravel()

    def hessian(self, u):
        u = u.reshape(-1, 3)
        n = len(u)
        diff = u[:, None, :] - u[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(r, np.inf)
        r3 = r**-3
        r5 = r**-5
        # d^2 (1/r_ij) / du_i du_j block = r^-3 I - 3 d d^T r^-5  (off-diagonal ions)
        blocks = r3[..., None, None] * np.eye(3) - 3 * r5[..., None, None] * (
            diff[..., :, None] * diff[..., None, :])
        h = np.zeros((n, 3, n, 3))
        for a in range(3):
            for b in range(3):
                h[:, a, :, b] = blocks[:, :, a, b]
        h = h.reshape(3 * n, 3 * n)
        diag = -np.einsum("ij...->i...", blocks)  # sum over partners, sign for self-term
        for i in range(n):
            h[3 * i:3 * i + 3, 3 * i:3 * i + 3] = diag[i]
        d = np.tile(self.c2, n).astype(float)
        d[self.ax::3] += self.b4 / 2 * u[:, self.ax] ** 2
        d[2::3] += self.g4 / 2 * u[:, 2] ** 2
        h[np.diag_indices(3 * n)] += d
        return h

    def force_scale(self, d_um: float) -> float:
        return abs(self.c2[self.ax]) * max(d_um, 1.0)


def _newton(model: _Model, u0: np.ndarray, gtol: float, max_iter: int = 200) -> np.ndarray:
    u = u0.ravel().copy()
    e = model.energy(u)
    mu = 0.0
    for _ in range(max_iter):
        g = model.gradient(u)
        if np.linalg.norm(g) < gtol:
            return u
        h = model.hessian(u)
        w, v = np.linalg.eigh(h)
        gn = np.linalg.norm(g)
        if w.min() < 0 and gn < 1e-6:
            # stalled on a symmetric saddle: push along the unstable direction
            u = u + 0.05 * v[:, 0]
            e = model.energy(u)
            continue
        # shift to positive definite when off a minimum
        shift = max(0.0, -w.min() * 1.5 + 1e-12 * abs(w).max()) + mu
        step = -v @ ((v.T @ g) / (w + shift))
        t = 1.0
        while True:
            trial = u + t * step
            e_trial = model.energy(trial)
            if e_trial <= e + 1e-4 * t * g @ step:
                break
            # near the minimum energy differences drown in round-off; fall back
            # to requiring a smaller gradient on a positive-definite Hessian
            if shift == mu and np.linalg.norm(model.gradient(trial)) < 0.5 * gn:
                break
            if t < 1e-10:
                raise ConvergenceError("line search failed")
            t *= 0.5
        u, e = trial, e_trial
    if np.linalg.norm(model.gradient(u)) < gtol:
        return u
    raise ConvergenceError("Newton iteration did not converge")


def _chain_offsets(n: int, spacing: float) -> np.ndarray:
    return (np.arange(n) - (n - 1) / 2) * spacing


def seed_layout(potential: TrapPotential, species: IonSpecies, ions_per_well) -> np.ndarray:
    """Deterministic lattice seed: chains along z centered on each well minimum."""
    n1, n2 = ions_per_well
    if potential.is_double_well:
        half = potential.separation / 2
        alpha_w = -2 * potential.alpha
    else:
        half = 0.0
        alpha_w = potential.curvatures()[potential.axis_index]
    curv_z = alpha_w if potential.axis == "z" else potential.phi_z
    lz = (species.charge * KE / max(curv_z, 1e-30)) ** (1 / 3)
    spacing = 1.2 * lz
    pts = []
    for centre, n in ((-half, n1), (half, n2)):
        offs = _chain_offsets(n, spacing)
        for o in offs:
            p = np.zeros(3)
            if potential.axis == "z":
                p[2] = centre + o
            else:
                p[0] = centre
                p[2] = o
            pts.append(p)
    pts = np.array(pts)
    # tiny deterministic asymmetry keeps Newton off symmetric saddles
    pts[:, 0] += 1e-9 * np.arange(len(pts)) if potential.axis == "z" else 0
    return pts


def solve_equilibrium(potential: TrapPotential, species: IonSpecies, ions_per_well,
                      seed_layout_m=None, gtol: float = 1e-11) -> IonConfiguration:
    """Minimize the total trap + Coulomb energy for ``ions_per_well`` = (n1, n2)."""
    n1, n2 = ions_per_well
    if n1 + n2 < 1:
        raise DomainError("need at least one ion")
    if n2 > 0 and not potential.is_double_well:
        raise DomainError("second well requested but potential has no double well")
    model = _Model(potential, species)
    u0 = (seed_layout(potential, species, ions_per_well) if seed_layout_m is None
          else np.asarray(seed_layout_m, float)) / L0
    d_um = potential.separation / L0 if potential.is_double_well else 1.0
    # gradient bound from the contract: 1e-9 of q |alpha| d, here in internal units
    tol = min(gtol, 1e-9 * model.force_scale(d_um))
    u = _newton(model, u0, tol)
    pos = u.reshape(-1, 3) * L0
    coord = pos[:, potential.axis_index]
    wells = tuple(1 if c < 0 else 2 for c in coord)
    merge = False
    if potential.is_double_well:
        merge = bool(np.any(np.abs(coord) < potential.separation / 100))
        if n1 > 0 and n2 > 0 and (wells.count(1) != n1 or wells.count(2) != n2):
            raise WellMergeError(f"ions redistributed between wells: {wells}")
    return IonConfiguration(species, pos, wells, merge)


def total_energy(config: IonConfiguration, potential: TrapPotential) -> float:
    m = _Model(potential, config.species)
    return m.energy(config.positions / L0) * m.e0


def potential_gradient(config: IonConfiguration, potential: TrapPotential) -> np.ndarray:
    """Gradient of the total energy in N."""
    m = _Model(potential, config.species)
    return m.gradient(config.positions / L0) * m.e0 / L0


def potential_hessian(config: IonConfiguration, potential: TrapPotential) -> np.ndarray:
    """Hessian of the total energy in N/m."""
    m = _Model(potential, config.species)
    return m.hessian(config.positions / L0) * m.e0 / L0**2


# ---------------------------------------------------------------- modes

def _mirror_map(pos: np.ndarray, axis: int) -> np.ndarray:
    refl = pos.copy()
    refl[:, axis] *= -1
    d = np.linalg.norm(pos[:, None, :] - refl[None, :, :], axis=2)
    return np.argmin(d, axis=1)


def _pair_modes(vectors, labels, wells, pos, axis_dw):
    """Pair modes whose per-well sub-vectors overlap, label in/out of phase."""
    n_modes = vectors.shape[1]
    w = np.array(wells)
    pair_index = [None] * n_modes
    pair_phase = ["none"] * n_modes
    if len(set(wells)) < 2:
        return pair_index, pair_phase
    mirror = _mirror_map(pos, axis_dw)
    n = len(pos)
    sign = np.ones(3)
    sign[axis_dw] = -1  # displacement along the mirror axis flips under reflection
    for ax in "xyz":
        k = "xyz".index(ax)
        idx = [l for l in range(n_modes) if labels[l] == ax]
        if len(idx) < 2:
            continue
        comp = vectors[k::3, :][:, idx]  # (n, len(idx))
        a = comp * (w == 1)[:, None]
        b = comp * (w == 2)[:, None]
        # overlap of the signed well-1 sub-vectors between modes
        a_n = a / np.maximum(np.linalg.norm(a, axis=0), 1e-300)
        score = np.abs(a_n.T @ a_n)
        np.fill_diagonal(score, -1)
        used = set()
        order = np.dstack(np.unravel_index(np.argsort(-score, axis=None), score.shape))[0]
        for i, j in order:
            if i >= j or i in used or j in used:
                continue
            if score[i, j] < 0.5:
                break
            used.update((i, j))
            li, lj = idx[i], idx[j]
            pair_index[li], pair_index[lj] = lj, li
            for l in (li, lj):
                v = comp[:, idx.index(l)]
                v1 = v * (w == 1)
                v2m = np.zeros(n)
                for p in range(n):
                    if w[p] == 2:
                        v2m[mirror[p]] = v[p] * sign[k]
                # in phase: ions move along the same direction in both wells
                pair_phase[l] = "in_phase" if v1 @ v2m * sign[k] > 0 else "out_of_phase"
    return pair_index, pair_phase


def normal_modes(config: IonConfiguration, potential: TrapPotential,
                 check_equilibrium: bool = True) -> ModeSpectrum:
    """Eigen-decomposition of the mass-weighted Hessian at an equilibrium."""
    model = _Model(potential, config.species)
    u = config.positions / L0
    if check_equilibrium:
        g = np.linalg.norm(model.gradient(u))
        d_um = potential.separation / L0 if potential.is_double_well else 1.0
        if g > 1e-6 * model.force_scale(d_um):
            raise DomainError(f"configuration is not an equilibrium (|grad|={g:.3e})")
    h = model.hessian(u)
    h = 0.5 * (h + h.T)
    lam, vec = np.linalg.eigh(h)
    lam_si = lam * model.e0 / L0**2
    if lam_si.min() <= 0:
        l = int(np.argmin(lam_si))
        raise SaddlePointError("Hessian has a non-positive eigenvalue", vec[:, l], lam_si[l])
    freqs = np.sqrt(lam_si / config.species.mass)
    n = config.n_ions
    labels = []
    for l in range(3 * n):
        w = [np.sum(vec[k::3, l] ** 2) for k in range(3)]
        labels.append("xyz"[int(np.argmax(w))])
    pidx, pphase = _pair_modes(vec, labels, config.well_assignment, config.positions,
                               potential.axis_index)
    return ModeSpectrum(freqs, vec, labels, pphase, pidx, config, lam_si)


def coupled_pair(spectrum: ModeSpectrum, species: IonSpecies, omega_ref: float,
                 n: int) -> CoupledPair:
    """Lowest axial in-phase/out-of-phase pair and its interaction constant."""
    try:
        ip, oop = spectrum.lowest_pair("z")
    except LookupError as exc:
        raise LookupError("no coupled axial pair (merged or single well)") from exc
    w_com, w_str = spectrum.frequencies[ip], spectrum.frequencies[oop]
    rate = abs(w_com - w_str)
    k = interaction_constant_from_splitting(rate, n, species, omega_ref)
    return CoupledPair(w_com, w_str, rate, k)


def axial_omega_ref(potential: TrapPotential, species: IonSpecies) -> float:
    """Single-ion axial frequency of one well: sqrt(-2 q alpha/m) or sqrt(q phi_z/m)."""
    c = -2 * potential.alpha if potential.axis == "z" else potential.phi_z
    return math.sqrt(species.charge * c / species.mass)


# ---------------------------------------------------------------- calibration

RADIAL_DEFAULTS = {"omega_dw": TWO_PI * 2.0e6, "omega_y": TWO_PI * 2.1e6}
AXIAL_DEFAULTS = {"omega_x": TWO_PI * 3.0e6, "omega_y": TWO_PI * 3.2e6}


def _curv(species, omega):
    return species.mass * omega**2 / species.charge


def build_double_well(alpha_w: float, d: float, species: IonSpecies, orientation,
                      omega_perp: dict | None = None, axial_curvature: float | None = None,
                      bias_field: float = 0.0, gamma: float = 0.0) -> TrapPotential:
    """Double well of separation d and local curvature alpha_w along the coupling axis.

    For radial coupling ``axial_curvature`` sets phi_z (the chain axis).
    """
    orientation = Orientation(orientation)
    alpha, beta = double_well_coefficients(alpha_w, d)
    if orientation is Orientation.AXIAL:
        o = {**AXIAL_DEFAULTS, **(omega_perp or {})}
        return TrapPotential(alpha, beta, phi_x=_curv(species, o["omega_x"]),
                             phi_y=_curv(species, o["omega_y"]), axis="z",
                             bias_field=bias_field)
    o = {**RADIAL_DEFAULTS, **(omega_perp or {})}
    return TrapPotential(alpha, beta, phi_y=_curv(species, o["omega_y"]),
                         phi_z=axial_curvature, axis="x", gamma=gamma, bias_field=bias_field)


def single_well_com(potential: TrapPotential, species: IonSpecies, n: int) -> float:
    """COM (lowest axial) frequency of n ions occupying one well of the potential alone."""
    cfg = solve_equilibrium(potential, species, (n, 0))
    spec = normal_modes(cfg, potential)
    z = spec.modes_on_axis("z")
    return float(spec.frequencies[z[0]])


COM_DEFINITIONS = ("single_well", "double_well_mean")
SEPARATIONS = ("potential", "chain_center")


def _secant(resid, x0, x1, rtol, max_iter=40):
    """Root of a residual that increases with x, near x0 (x1 only sets the first step).

    The residual can be flat or locally non-monotone when chains reach into the
    barrier, so plain secant steps overshoot; bracket geometrically, then Brent.
    """
    step = min(max(abs(x1 / x0), 1.05), 2.0)
    f0 = resid(x0)
    if abs(f0) < rtol:
        return x0
    up = f0 < 0
    lo = x0
    for _ in range(max_iter):
        hi = lo * step if up else lo / step
        fh = resid(hi)
        if (fh > 0) == up or fh == 0:
            a, b = (lo, hi) if up else (hi, lo)
            return brentq(resid, a, b, xtol=1e-15 * abs(x0), rtol=1e-13, maxiter=200)
        lo = hi
    raise ConvergenceError("double-well calibration did not converge")


def _dw_observables(pot, species, n):
    """Mean of the lowest ip/oop pair and the distance between the two chain centers."""
    cfg = solve_equilibrium(pot, species, (n, n))
    spec = normal_modes(cfg, pot)
    ip, oop = spec.lowest_pair("z")
    w = np.array(cfg.well_assignment)
    c = cfg.positions[:, pot.axis_index]
    return 0.5 * (spec.frequencies[ip] + spec.frequencies[oop]), c[w == 2].mean() - c[w == 1].mean()


def calibrate_double_well(target_com: float, n: int, d: float, species: IonSpecies,
                          orientation, omega_perp: dict | None = None,
                          com_definition: str = "single_well", separation: str = "potential",
                          rtol: float = 1e-9) -> TrapPotential:
    """Potential with separation d whose n-ion COM frequency equals ``target_com``.

    ``com_definition="single_well"`` calibrates the COM of n ions occupying one
    well alone; ``"double_well_mean"`` calibrates the mean of the lowest
    in-phase/out-of-phase pair with both wells loaded.  ``separation`` selects
    whether d is the potential parameter sqrt(-24 alpha/beta) or the distance
    between the two chain centers at equilibrium.
    """
    orientation = Orientation(orientation)
    if n < 1 or d <= 0:
        raise DomainError("need n >= 1 and d > 0")
    if com_definition not in COM_DEFINITIONS or separation not in SEPARATIONS:
        raise DomainError(f"unknown calibration convention {com_definition!r}/{separation!r}")
    aw0 = _curv(species, target_com)
    radial = orientation is Orientation.RADIAL
    aw_dw = _curv(species, (omega_perp or {}).get("omega_dw", RADIAL_DEFAULTS["omega_dw"]))

    def build(aw, dd):
        if radial:
            return build_double_well(aw_dw, dd, species, orientation, omega_perp,
                                     axial_curvature=aw)
        return build_double_well(aw, dd, species, orientation, omega_perp)

    if com_definition == "single_well" and separation == "potential":
        # axial confinement is harmonic for radial coupling: COM = sqrt(q phi_z/m) for any n
        if radial or n == 1:
            return build(aw0, d)

        def resid(aw):
            return single_well_com(build(aw, d), species, n) / target_com - 1.0

        return build(_secant(resid, aw0, aw0 * 1.02, rtol), d)

    # two-parameter problem: fixed-point sweeps on (curvature, potential separation)
    aw, dd = aw0, d
    for _ in range(60):
        if com_definition == "single_well":
            if not (radial or n == 1):
                aw = _secant(lambda x: single_well_com(build(x, dd), species, n) / target_com - 1,
                             aw, aw * 1.01, rtol)
        else:
            aw = _secant(lambda x: _dw_observables(build(x, dd), species, n)[0] / target_com - 1,
                         aw, aw * 1.01, rtol)
        if separation == "potential":
            return build(aw, dd)
        sep = _dw_observables(build(aw, dd), species, n)[1]
        if abs(sep / d - 1) < rtol * 10:
            return build(aw, dd)
        dd = _secant(lambda x: _dw_observables(build(aw, x), species, n)[1] / d - 1,
                     dd, dd * d / sep, rtol)
    raise ConvergenceError("double-well calibration did not converge")


DEFAULT_CONVENTION = {"com_definition": "double_well_mean", "separation": "chain_center"}


def coupling_point(n: int, d: float, target_com: float, species: IonSpecies,
                   orientation, omega_perp: dict | None = None,
                   com_definition: str = DEFAULT_CONVENTION["com_definition"],
                   separation: str = DEFAULT_CONVENTION["separation"]) -> dict:
    """Calibrate, solve, diagonalize and extract the coupled pair for one grid point."""
    pot = calibrate_double_well(target_com, n, d, species, orientation, omega_perp,
                                com_definition, separation)
    cfg = solve_equilibrium(pot, species, (n, n))
    spec = normal_modes(cfg, pot)
    pair = coupled_pair(spec, species, target_com, n)
    return {"potential": pot, "config": cfg, "spectrum": spec, "pair": pair}


SCAN_COLUMNS = ["n", "d_um", "omega_com_Hz", "omega_str_Hz", "coupling_Hz",
                "k_int_eV_per_m2", "point_charge_Hz", "status"]


def coupling_scan(n_range, d_range, target_com: float, orientation,
                  species: IonSpecies, omega_perp: dict | None = None,
                  jobs: int = 1, **convention) -> list[dict]:
    """Coupling rate on an (n, d) grid; failures are recorded in the status column."""
    grid = [(int(n), float(d)) for n in n_range for d in d_range]

    def one(nd):
        n, d = nd
        row = {"n": n, "d_um": round(d * 1e6, 9),
               "point_charge_Hz": point_charge_coupling(
                   n, species, target_com, d, orientation) / TWO_PI}
        try:
            pair = coupling_point(n, d, target_com, species, orientation, omega_perp,
                                      **convention)["pair"]
            row.update(omega_com_Hz=pair.omega_com / TWO_PI, omega_str_Hz=pair.omega_str / TWO_PI,
                       coupling_Hz=pair.coupling_rate / TWO_PI,
                       k_int_eV_per_m2=pair.k_int_ev_per_m2, status="ok")
        except Exception as exc:  # per-point failure is data, not a crash
            log.warning("scan point n=%s d=%s failed: %s", n, d, exc)
            row.update(omega_com_Hz=float("nan"), omega_str_Hz=float("nan"),
                       coupling_Hz=float("nan"), k_int_eV_per_m2=float("nan"),
                       status=f"error: {type(exc).__name__}: {exc}")
        return row

    from .parallel import ordered_map
    return ordered_map(one, grid, jobs)


def mode_splitting_scan(d_range, n: int, species: IonSpecies, orientation,
                        single_ion_freq: float, omega_perp: dict | None = None) -> list[dict]:
    """Splitting of every axial ip/oop pair versus separation at fixed single-ion curvature."""
    orientation = Orientation(orientation)
    aw = _curv(species, single_ion_freq)
    rows = []
    for d in d_range:
        if orientation is Orientation.AXIAL:
            pot = build_double_well(aw, d, species, orientation, omega_perp)
        else:
            pot = build_double_well(_curv(species, RADIAL_DEFAULTS["omega_dw"]), d, species,
                                    orientation, omega_perp, axial_curvature=aw)
        try:
            cfg = solve_equilibrium(pot, species, (n, n))
            spec = normal_modes(cfg, pot)
        except Exception as exc:
            rows.append({"d_um": round(d * 1e6, 9), "mode_index": -1, "frequency_Hz": float("nan"),
                         "splitting_Hz": float("nan"), "status": f"error: {exc}"})
            continue
        seen = set()
        k = 0
        for l in spec.modes_on_axis("z"):
            j = spec.pair_index[l]
            if j is None or l in seen:
                continue
            seen.update((l, j))
            rows.append({"d_um": round(d * 1e6, 9), "mode_index": k,
                         "frequency_Hz": 0.5 * (spec.frequencies[l] + spec.frequencies[j]) / TWO_PI,
                         "splitting_Hz": abs(spec.frequencies[l] - spec.frequencies[j]) / TWO_PI,
                         "status": "ok"})
            k += 1
    return rows


# ---------------------------------------------------------------- equidistance

def gap_inhomogeneity(z: np.ndarray) -> float:
    gaps = np.diff(np.sort(z))
    return float(gaps.max() / gaps.min() - 1.0)


def _in_well_inhomogeneity(potential, species, n, two_wells):
    cfg = solve_equilibrium(potential, species, (n, n) if two_wells else (n, 0))
    w = np.array(cfg.well_assignment)
    pos = cfg.positions[w == 1]
    # a zig-zag chain has no meaningful gap sequence along z
    if np.ptp(pos[:, 0]) + np.ptp(pos[:, 1]) > 1e-3 * np.ptp(pos[:, 2]):
        return np.inf
    return gap_inhomogeneity(pos[:, 2])


def quartic_for_ratio(potential: TrapPotential, species: IonSpecies, ratio: float) -> float:
    """gamma such that l_z/d_z = ratio, with d_z = sqrt(24 phi_z/gamma)."""
    lz = chain_length_scale(potential.phi_z, species)
    dz = lz / ratio
    return 24 * potential.phi_z / dz**2


def chain_length_scale(phi_z: float, species: IonSpecies) -> float:
    """(q^2/(4 pi eps0 m omega_z^2))^(1/3) with m omega_z^2 = q phi_z."""
    return (species.charge * KE / phi_z) ** (1 / 3)


def optimize_quartic_equidistance(n: int, potential: TrapPotential, species: IonSpecies,
                                  two_wells: bool = True,
                                  bracket=(0.05, 1.0)) -> EquidistanceResult:
    """Minimize the in-well gap inhomogeneity over l_z/d_z of the added z quartic."""
    if n < 3:
        raise DomainError("gap inhomogeneity needs at least 3 ions per well")
    if potential.axis != "x":
        raise DomainError("the equidistance quartic acts along z with the double well along x")

    def f(r):
        p = potential.with_(gamma=quartic_for_ratio(potential, species, r))
        try:
            return _in_well_inhomogeneity(p, species, n, two_wells)
        except (ConvergenceError, WellMergeError):
            return np.inf

    base = _in_well_inhomogeneity(potential.with_(gamma=0.0), species, n, two_wells)
    grid = np.linspace(*bracket, 20)
    vals = [f(r) for r in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    if not res.success:
        raise ConvergenceError("equidistance optimizer diverged")
    r = float(res.x)
    return EquidistanceResult(r, float(res.fun), quartic_for_ratio(potential, species, r), base)
