"""Constants, ion species, trap potentials and point-charge coupling formulas."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class DomainError(ValueError):
    """Raised when inputs fall outside the physical domain of a formula."""


@dataclass(frozen=True)
class PhysicalConstants:
    vacuum_permittivity: float = 8.8541878128e-12
    elementary_charge: float = 1.602176634e-19
    atomic_mass_unit: float = 1.66053906660e-27
    reduced_planck: float = 1.054571817e-34

    @property
    def coulomb_constant(self) -> float:
        return 1.0 / (4.0 * math.pi * self.vacuum_permittivity)


CODATA = PhysicalConstants()
EPS0 = CODATA.vacuum_permittivity
QE = CODATA.elementary_charge
AMU = CODATA.atomic_mass_unit
HBAR = CODATA.reduced_planck
KE = CODATA.coulomb_constant

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IonSpecies:
    mass: float
    charge: float = QE
    label: str = ""

    def __post_init__(self):
        if self.mass <= 0 or self.charge <= 0:
            raise DomainError("ion mass and charge must be positive")

    @classmethod
    def from_amu(cls, mass_amu: float, label: str = "") -> "IonSpecies":
        return cls(mass=mass_amu * AMU, charge=QE, label=label)

    def to_dict(self) -> dict:
        return {"mass_amu": self.mass / AMU, "charge_e": self.charge / QE, "label": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "IonSpecies":
        return cls(mass=d["mass_amu"] * AMU, charge=d.get("charge_e", 1.0) * QE,
                   label=d.get("label", ""))


# neutral-atom mass; the missing electron is below every tolerance used here
CA40 = IonSpecies.from_amu(39.9625909, "40Ca+")
BE9 = IonSpecies.from_amu(9.0121831, "9Be+")

SPECIES = {"40Ca+": CA40, "Ca40": CA40, "9Be+": BE9, "Be9": BE9}


class Orientation(enum.Enum):
    AXIAL = "axial"
    RADIAL = "radial"

    @property
    def kappa(self) -> int:
        return -2 if self is Orientation.AXIAL else 1


_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class TrapPotential:
    """Polynomial electrostatic potential in volts.

    The double well lies along ``axis`` (``"z"`` for axial coupling, ``"x"`` for
    radial coupling) with ``V = alpha r^2/2 + beta r^4/24 - bias_field r``.
    The remaining axes are harmonic with curvatures ``phi_x``, ``phi_y``,
    ``phi_z`` (the one along ``axis`` is ignored).  ``gamma`` adds a quartic
    term ``gamma z^4/24`` along the chain axis z when the double well is along x.
    """

    alpha: float
    beta: float
    phi_x: float = 0.0
    phi_y: float = 0.0
    phi_z: float = 0.0
    axis: str = "z"
    gamma: float = 0.0
    bias_field: float = 0.0

    def __post_init__(self):
        if self.axis not in ("x", "z"):
            raise DomainError("double-well axis must be 'x' or 'z'")

    @property
    def axis_index(self) -> int:
        return _AXES[self.axis]

    @property
    def is_double_well(self) -> bool:
        return self.alpha < 0 and self.beta > 0

    @property
    def separation(self) -> float:
        return well_separation(self.alpha, self.beta)

    def curvatures(self) -> np.ndarray:
        """Harmonic curvature per axis (V/m^2); double-well axis entry is alpha."""
        c = np.array([self.phi_x, self.phi_y, self.phi_z], dtype=float)
        c[self.axis_index] = self.alpha
        return c

    def with_(self, **kw) -> "TrapPotential":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("alpha", "beta", "phi_x", "phi_y", "phi_z", "axis", "gamma", "bias_field")}

    @classmethod
    def from_dict(cls, d: dict) -> "TrapPotential":
        return cls(**d)


@dataclass(frozen=True)
class CoupledPair:
    omega_com: float
    omega_str: float
    coupling_rate: float
    k_int: float

    @property
    def k_int_ev_per_m2(self) -> float:
        return n_per_m_to_ev_per_m2(self.k_int)


def n_per_m_to_ev_per_m2(k: float) -> float:
    return k / QE


def ev_per_m2_to_n_per_m(k: float) -> float:
    return k * QE


def well_separation(alpha: float, beta: float) -> float:
    """Distance between the two minima of ``alpha r^2/2 + beta r^4/24``."""
    if not (alpha < 0 and beta > 0):
        raise DomainError(f"no double well for alpha={alpha!r}, beta={beta!r}")
    return math.sqrt(-24.0 * alpha / beta)


def local_curvature(alpha: float) -> float:
    """Second-order coefficient at each of the two minima, ``-2 alpha``."""
    return -2.0 * alpha


def double_well_coefficients(alpha_w: float, d: float) -> tuple[float, float]:
    """Inverse of :func:`well_separation`: (alpha, beta) for a local curvature and separation."""
    if alpha_w <= 0 or d <= 0:
        raise DomainError("local curvature and separation must be positive")
    alpha = -alpha_w / 2.0
    beta = -24.0 * alpha / d**2
    return alpha, beta


def point_charge_coupling(n: int, species: IonSpecies, omega_z: float, d: float,
                          orientation: Orientation) -> float:
    """Coupling rate of two point charges n*q in harmonic wells (rad/s)."""
    if n < 1 or omega_z <= 0 or d <= 0:
        raise DomainError("need n >= 1, omega_z > 0, d > 0")
    kappa = abs(Orientation(orientation).kappa)
    return kappa * n * species.charge**2 * KE / (species.mass * omega_z * d**3)


def interaction_constant(n: int, species: IonSpecies, d: float,
                         orientation: Orientation) -> float:
    """Dipole-dipole spring constant kappa (nq)^2 / (4 pi eps0 d^3), signed, N/m."""
    return Orientation(orientation).kappa * (n * species.charge) ** 2 * KE / d**3


def small_coupling_valid(k_int: float, n: int, species: IonSpecies, omega_z: float,
                         threshold: float = 0.1) -> bool:
    """True while |k_int| stays well below n m omega_z^2."""
    return abs(k_int) < threshold * n * species.mass * omega_z**2


def exact_pair_frequencies(k_int: float, n: int, species: IonSpecies,
                           omega_z: float) -> tuple[float, float]:
    """(omega_com, omega_str) = sqrt(omega_z^2 +- k_int/(n m))."""
    shift = k_int / (n * species.mass)
    lo = omega_z**2 - abs(shift)
    if lo <= 0:
        raise DomainError("overcoupled: stretch radicand is not positive")
    return math.sqrt(omega_z**2 + shift), math.sqrt(omega_z**2 - shift)


def interaction_constant_from_splitting(coupling_rate: float, n: int, species: IonSpecies,
                                        omega_z: float) -> float:
    """|k_int| that produces the splitting ``coupling_rate`` around omega_z."""
    if coupling_rate < 0 or coupling_rate >= 2 * omega_z:
        raise DomainError("coupling rate must lie in [0, 2 omega_z)")
    return 0.5 * n * species.mass * coupling_rate * math.sqrt(4 * omega_z**2 - coupling_rate**2)
