"""Bichromatic Molmer-Sorensen gate driven on the two closely spaced coupled modes.

Interaction picture, first order in the Lamb-Dicke parameter:

    H(t) = sum_m (omega_sb/2) eta_m S_m (a_m^dag e^{i delta_m t} + h.c.)

with S_str = X_1 - X_2 (mode 0) and S_com = X_1 + X_2 (mode 1).  The stretch mode
lies Omega_c below the common mode, so a single beat note gives
delta_com = delta_str - Omega_c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import DomainError, TWO_PI
from .states import (SX, SZ, CutoffError, HilbertSpec, QuantumState, annihilation,
                     basis_state, bell_fidelity, evolve_lindblad, evolve_pure, qubit_op)

MODE_NAMES = ("str", "com")

# collective:        sqrt(1/tau) (Z1 + Z2)/2, single-qubit Ramsey decays as exp(-t/(2 tau))
# collective_ramsey: sqrt(1/(2 tau)) (Z1 + Z2), single-qubit Ramsey decays as exp(-t/tau)
# independent:       sqrt(1/(2 tau)) Z_i per ion, Ramsey exp(-t/tau), uncorrelated phases
DEPHASING_MODELS = ("collective", "collective_ramsey", "independent")


class ClosureError(DomainError):
    pass


@dataclass(frozen=True)
class MSGateConfig:
    case: int
    omega_c: float
    omega_sb: float
    delta_str: float
    gate_time: float
    heating: tuple = (0.0, 0.0)  # quanta/s on (str, com)
    dephasing_time: float | None = None
    lamb_dicke: tuple = (1.0, 1.0)  # relative scaling of omega_sb per mode
    cutoffs: tuple | None = None
    dephasing_model: str = "collective"

    def __post_init__(self):
        if self.dephasing_model not in DEPHASING_MODELS:
            raise DomainError(f"unknown dephasing model {self.dephasing_model!r}")
        if self.omega_c <= 0 or self.gate_time <= 0:
            raise DomainError("omega_c and gate_time must be positive")
        if min(self.heating) < 0:
            raise DomainError("heating rates must be non-negative")
        for dm in self.detunings:
            loops = self.gate_time * abs(dm) / TWO_PI
            if dm == 0 or abs(loops - round(loops)) > 1e-6 or round(loops) < 1:
                raise ClosureError(f"phase-space loop not closed: {loops:.6g} loops")
        if self.case == 3 and not math.isclose(self.delta_str, self.omega_c / 2, rel_tol=1e-9):
            raise ClosureError("centered drive needs delta_str = omega_c/2")

    @property
    def detunings(self) -> tuple:
        return (self.delta_str, self.delta_str - self.omega_c)

    def with_(self, **kw) -> "MSGateConfig":
        from dataclasses import replace
        return replace(self, **kw)


def ms_case(case: int, omega_c: float, heating=(0.0, 0.0), dephasing_time=None,
            loops: int = 1, dephasing_model: str = "collective") -> MSGateConfig:
    """The three drive configurations with amplitudes giving a maximally entangling gate.

    Case 1 sits below both modes (delta_str = -Omega_c), case 2 above both
    (delta_com = +Omega_c), case 3 in the middle (delta = +-Omega_c/2).
    """
    if case == 1:
        d_str, t = -omega_c, TWO_PI * loops / omega_c
    elif case == 2:
        d_str, t = 2 * omega_c, TWO_PI * loops / omega_c
    elif case == 3:
        d_str, t = omega_c / 2, 2 * TWO_PI * loops / omega_c
    else:
        raise DomainError("case must be 1, 2 or 3")
    d = (d_str, d_str - omega_c)
    # XX phase is 2 g^2 t (1/delta_com - 1/delta_str) with g = omega_sb/2; set it to pi/4
    phase_per_g2 = 2 * t * abs(1 / d[1] - 1 / d[0])
    omega_sb = 2 * math.sqrt((math.pi / 4) / phase_per_g2)
    return MSGateConfig(case, omega_c, omega_sb, d_str, t, tuple(heating), dephasing_time,
                        dephasing_model=dephasing_model)


def max_displacement(config: MSGateConfig) -> tuple:
    """Largest coherent amplitude reached by each mode (for |S| = 2)."""
    g = 0.5 * config.omega_sb * np.asarray(config.lamb_dicke)
    return tuple(2 * gi * 2 / abs(dm) for gi, dm in zip(g, config.detunings))


def default_cutoffs(config: MSGateConfig) -> tuple:
    if config.cutoffs is not None:
        return tuple(config.cutoffs)
    return tuple(int(max(6, math.ceil(a**2 + 4 * a + 5))) for a in max_displacement(config))


def _operators(config, spec):
    a = [annihilation(spec, m) for m in range(2)]
    x1, x2 = qubit_op(spec, SX, 0), qubit_op(spec, SX, 1)
    s = (x1 - x2, x1 + x2)
    g = 0.5 * config.omega_sb * np.asarray(config.lamb_dicke)
    raise_ops = [(g[m] * (s[m] @ a[m].conj().T)).tocsr() for m in range(2)]
    return a, raise_ops


def _hamiltonian(config, spec):
    _, ops = _operators(config, spec)
    ops_h = [o.conj().T.tocsr() for o in ops]
    det = config.detunings

    def h(t):
        out = ops[0] * np.exp(1j * det[0] * t) + ops_h[0] * np.exp(-1j * det[0] * t)
        for m in range(1, len(ops)):
            out = out + ops[m] * np.exp(1j * det[m] * t) + ops_h[m] * np.exp(-1j * det[m] * t)
        return out

    return h


def collapse_operators(config: MSGateConfig, spec: HilbertSpec) -> list:
    """sqrt(G) a, sqrt(G) a^dag per heated mode plus dephasing per ``dephasing_model``."""
    ops = []
    for m, rate in enumerate(config.heating):
        if rate > 0:
            a = annihilation(spec, m)
            ops += [math.sqrt(rate) * a, math.sqrt(rate) * a.conj().T]
    if config.dephasing_time:
        tau = config.dephasing_time
        z = [qubit_op(spec, SZ, 0), qubit_op(spec, SZ, 1)]
        if config.dephasing_model == "collective":
            ops.append(math.sqrt(1.0 / tau) * 0.5 * (z[0] + z[1]))
        elif config.dephasing_model == "collective_ramsey":
            ops.append(math.sqrt(1.0 / (2 * tau)) * (z[0] + z[1]))
        else:
            ops += [math.sqrt(1.0 / (2 * tau)) * zi for zi in z]
    return ops


def _max_step(config):
    return 0.05 * TWO_PI / max(abs(d) for d in config.detunings)


def ms_evolve(config: MSGateConfig, initial: QuantumState | None = None,
              check_cutoff: bool = True, tol: float = 1e-4) -> QuantumState:
    """Evolve through the full gate; open-system terms switch to density-operator form."""
    cut = default_cutoffs(config)
    spec = HilbertSpec(2, cut)
    if check_cutoff:
        cutoff_convergence(config, tol=tol)
    if initial is None:
        initial = basis_state(spec, "SS")
    elif initial.spec.cutoffs != cut:
        raise CutoffError("initial state cutoffs differ from the gate's cutoffs")
    h = _hamiltonian(config, spec)
    cops = collapse_operators(config, spec)
    if not cops and initial.is_pure:
        psi = evolve_pure(initial.data, h, config.gate_time, max_step=_max_step(config))
        return QuantumState(spec, psi)
    rho = evolve_lindblad(initial.density(), h, cops, config.gate_time,
                          max_step=_max_step(config))
    return QuantumState(spec, rho)


def cutoff_convergence(config: MSGateConfig, tol: float = 1e-4) -> float:
    """Change in the ideal gate fidelity when all cutoffs are doubled; raises above tol."""
    cut = default_cutoffs(config)
    vals = []
    for c in (cut, tuple(2 * x for x in cut)):
        spec = HilbertSpec(2, c)
        psi = evolve_pure(basis_state(spec, "SS").data, _hamiltonian(config, spec),
                          config.gate_time, max_step=_max_step(config))
        vals.append(bell_fidelity(QuantumState(spec, psi).qubit_density()))
    diff = abs(vals[1] - vals[0])
    if diff > tol:
        raise CutoffError(f"Fock cutoff not converged: fidelity changes by {diff:.2e}")
    return diff


def ms_infidelity(config: MSGateConfig, check_cutoff: bool = True) -> float:
    st = ms_evolve(config, check_cutoff=check_cutoff)
    return 1.0 - bell_fidelity(st.qubit_density())


def ms_table(omega_c: float, heating=(2.6, 18.0), cases=(1, 2, 3)) -> list[dict]:
    """Infidelity per drive case with heating on (str, com)."""
    rows = []
    for c in cases:
        cfg = ms_case(c, omega_c, heating)
        rows.append({"case": c, "gate_time_us": cfg.gate_time * 1e6,
                     "omega_sb_kHz": cfg.omega_sb / TWO_PI / 1e3,
                     "delta_str_kHz": cfg.detunings[0] / TWO_PI / 1e3,
                     "delta_com_kHz": cfg.detunings[1] / TWO_PI / 1e3,
                     "infidelity": ms_infidelity(cfg)})
    return rows
