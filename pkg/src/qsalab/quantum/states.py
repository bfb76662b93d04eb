"""Qubit x truncated-oscillator Hilbert spaces, states, operators and a Lindblad integrator.

Ordering of tensor factors: qubits first (qubit 0 is the most significant), then
modes.  Qubit basis index 0 is |S> and 1 is |D>; ``sigma_+ = |D><S|``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

DIM_BUDGET = 4096
MIN_CUTOFF = 3


class CutoffError(RuntimeError):
    pass


@dataclass(frozen=True)
class HilbertSpec:
    n_qubits: int
    cutoffs: tuple = ()
    frequencies: tuple = ()

    def __post_init__(self):
        if any(c < MIN_CUTOFF for c in self.cutoffs):
            raise ValueError(f"Fock cutoffs must be at least {MIN_CUTOFF}")
        if self.dim > DIM_BUDGET:
            raise ValueError("Hilbert space exceeds the configured budget")

    @property
    def dims(self) -> list[int]:
        return [2] * self.n_qubits + list(self.cutoffs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims)) if self.dims else 1

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    def with_cutoffs(self, cutoffs) -> "HilbertSpec":
        return HilbertSpec(self.n_qubits, tuple(cutoffs), self.frequencies)


# ---------------------------------------------------------------- single-factor operators

SX = sp.csr_matrix(np.array([[0, 1], [1, 0]], complex))
SY = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], complex))
SZ = sp.csr_matrix(np.array([[1, 0], [0, -1]], complex))
SP = sp.csr_matrix(np.array([[0, 0], [1, 0]], complex))  # |D><S|
SM = SP.T.tocsr()
ID2 = sp.identity(2, complex, format="csr")


def destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n)), 1, shape=(n, n), dtype=complex, format="csr")


def embed(spec: HilbertSpec, factors: dict) -> sp.csr_matrix:
    """Tensor product with ``factors[k]`` on subsystem k and identity elsewhere."""
    mats = [factors.get(k, sp.identity(d, complex, format="csr")) for k, d in enumerate(spec.dims)]
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), mats)


def qubit_op(spec, op, i):
    return embed(spec, {i: op})


def mode_op(spec, op, m):
    return embed(spec, {spec.n_qubits + m: op})


def annihilation(spec, m):
    return mode_op(spec, destroy(spec.cutoffs[m]), m)


# ---------------------------------------------------------------- states

@dataclass
class QuantumState:
    spec: HilbertSpec
    data: np.ndarray  # vector (dim,) or density (dim, dim)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_density(self) -> "QuantumState":
        return QuantumState(self.spec, self.density())

    def norm(self) -> float:
        return float(np.vdot(self.data, self.data).real) if self.is_pure else float(
            np.trace(self.data).real)

    def check(self, tol: float = 1e-9) -> None:
        if abs(self.norm() - 1) > tol:
            raise ValueError(f"state not normalized: {self.norm()}")
        if not self.is_pure:
            rho = self.data
            if np.abs(rho - rho.conj().T).max() > tol:
                raise ValueError("density operator not Hermitian")
            if np.linalg.eigvalsh(rho).min() < -tol:
                raise ValueError("density operator not positive")

    def qubit_density(self) -> np.ndarray:
        """Reduced density operator of the qubits (modes traced out)."""
        dq = 2 ** self.spec.n_qubits
        dm = self.spec.dim // dq
        if self.is_pure:
            psi = self.data.reshape(dq, dm)
            return psi @ psi.conj().T
        rho = self.data.reshape(dq, dm, dq, dm)
        return np.einsum("ajbj->ab", rho)

    def mode_populations(self, m: int) -> np.ndarray:
        rho = self.density().reshape(self.spec.dims * 2)
        k = self.spec.n_qubits + m
        n = len(self.spec.dims)
        idx = list(range(n))
        letters = "abcdefghijklmnop"
        ins = "".join(letters[i] for i in idx) + "".join(
            letters[i] if i != k else "z" for i in idx)
        ins = ins[:n] + ins[n:].replace("z", letters[k])
        return np.real(np.einsum(ins + "->" + letters[k], rho))

    def to_json(self) -> dict:
        d = self.data
        return {"n_qubits": self.spec.n_qubits, "cutoffs": list(self.spec.cutoffs),
                "pure": self.is_pure, "real": d.real.tolist(), "imag": d.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "QuantumState":
        spec = HilbertSpec(obj["n_qubits"], tuple(obj["cutoffs"]))
        return cls(spec, np.array(obj["real"]) + 1j * np.array(obj["imag"]))


def basis_state(spec: HilbertSpec, qubits, fock=()) -> QuantumState:
    """|q_0 ... q_{n-1}, n_0 ... n_{M-1}> with q in {0 (S), 1 (D)} or {'S', 'D'}."""
    q = [0 if s in (0, "S") else 1 for s in qubits]
    fock = list(fock) + [0] * (spec.n_modes - len(fock))
    if any(n >= c for n, c in zip(fock, spec.cutoffs)):
        raise CutoffError("Fock index exceeds cutoff")
    idx = np.ravel_multi_index(q + fock, spec.dims) if spec.dims else 0
    v = np.zeros(spec.dim, complex)
    v[idx] = 1.0
    return QuantumState(spec, v)


def bell_target(phase: float = -np.pi / 2) -> np.ndarray:
    """(|SS> + e^{i phase}|DD>)/sqrt(2); the default is (|SS> - i|DD>)/sqrt(2)."""
    v = np.zeros(4, complex)
    v[0] = 1 / np.sqrt(2)
    v[3] = np.exp(1j * phase) / np.sqrt(2)
    return v


def bell_fidelity(rho2: np.ndarray) -> float:
    """Overlap with (|SS> + e^{i phi}|DD>)/sqrt(2), maximized over phi (local Z rotations)."""
    return float(0.5 * (rho2[0, 0].real + rho2[3, 3].real) + abs(rho2[0, 3]))


def carrier_rotation(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta/2 (cos phi X + sin phi Y)) on one qubit."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]])


def populations_and_parity(state, phases=None) -> dict:
    """Two-qubit populations, parity after a global pi/2 analysis pulse, and fidelities.

    The visibility is the amplitude of the fitted ``A cos(2 phi + phi0)`` parity
    fringe; ``bell_fidelity`` follows F = (P_SS + P_DD)/2 + V/2.
    """
    rho = state.qubit_density() if isinstance(state, QuantumState) else np.asarray(state)
    if rho.shape != (4, 4):
        raise ValueError("needs a two-qubit state")
    if phases is None:
        phases = np.linspace(0, 2 * np.pi, 73)
    zz = np.diag([1.0, -1.0, -1.0, 1.0])
    par = []
    for ph in phases:
        r = carrier_rotation(np.pi / 2, ph)
        u = np.kron(r, r)
        par.append(float(np.real(np.trace(zz @ u @ rho @ u.conj().T))))
    par = np.array(par)
    # least-squares fit of offset + a cos(2 phi) + b sin(2 phi)
    A = np.column_stack([np.ones_like(phases), np.cos(2 * phases), np.sin(2 * phases)])
    coef, *_ = np.linalg.lstsq(A, par, rcond=None)
    vis = float(np.hypot(coef[1], coef[2]))
    p = np.real(np.diag(rho))
    return {"P_SS": float(p[0]), "P_SD_DS": float(p[1] + p[2]), "P_DD": float(p[3]),
            "phases": np.asarray(phases), "parity": par, "visibility": vis,
            "bell_fidelity": float(0.5 * (p[0] + p[3]) + 0.5 * vis),
            "bell_fidelity_opt": bell_fidelity(rho)}


# ---------------------------------------------------------------- propagation

def evolve_pure(psi0: np.ndarray, hamiltonian, t_end: float, rtol=1e-10, atol=1e-12,
                max_step=np.inf) -> np.ndarray:
    """Schroedinger evolution with ``hamiltonian(t)`` returning a sparse matrix."""
    def rhs(t, y):
        return -1j * (hamiltonian(t) @ y)

    sol = solve_ivp(rhs, (0.0, t_end), psi0.astype(complex), method="DOP853", rtol=rtol,
                    atol=atol, max_step=max_step)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1]


def evolve_lindblad(rho0: np.ndarray, hamiltonian, collapse, t_end: float, rtol=1e-9,
                    atol=1e-11, max_step=np.inf) -> np.ndarray:
    """Integrate d rho/dt = -i[H(t), rho] + sum_k D[L_k] rho on the dense density operator."""
    n = rho0.shape[0]
    ls = [sp.csr_matrix(c) for c in collapse]
    ks = [(c.conj().T @ c).tocsr() for c in ls]

    def rhs(t, y):
        rho = y.reshape(n, n)
        x = hamiltonian(t) @ rho
        out = -1j * (x - x.conj().T)
        for c, k in zip(ls, ks):
            lr = c @ rho
            out += c @ lr.conj().T
            kr = k @ rho
            out -= 0.5 * (kr + kr.conj().T)
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, t_end), rho0.astype(complex).ravel(), method="DOP853",
                    rtol=rtol, atol=atol, max_step=max_step)
    if not sol.success:
        raise RuntimeError(sol.message)
    rho = sol.y[:, -1].reshape(n, n)
    return 0.5 * (rho + rho.conj().T)
