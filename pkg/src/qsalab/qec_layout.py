"""QEC constructions on the well lattice: resource counts and the [[4,2,2]]-surface code.

Each data qubit of a planar distance-d_c surface code is replaced by a [[4,2,2]]
block held in one well.  Logical qubit 1 of every block forms one surface code
and logical qubit 2 another, giving [[4 N, 2, 2 d_c]] with N = d_c^2 + (d_c-1)^2.
Block logicals: X1 = XXII, Z1 = ZIZI, X2 = XIXI, Z2 = ZZII (ions 0..3).
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DomainError


class Protocol(enum.Enum):
    STEANE_EC = "steane-ec"
    MSI = "msi"
    UNIVERSAL = "universal"
    SURFACE_422 = "surface-422"


# (ions per well, registers); the surface entry is a formula in d_c
_TABLE = {Protocol.STEANE_EC: (7, 2), Protocol.MSI: (7, 2), Protocol.UNIVERSAL: (15, 7)}
PROTOCOL_LABELS = {Protocol.STEANE_EC: "Steane EC on [[7,1,3]]",
                   Protocol.MSI: "MSI on [[7,1,3]]",
                   Protocol.UNIVERSAL: "Universal gate set",
                   Protocol.SURFACE_422: "[[4,2,2]]-surface code"}


def surface_registers(d_c: int) -> int:
    if d_c < 2:
        raise DomainError("surface code distance must be at least 2")
    return d_c**2 + (d_c - 1) ** 2


def resource_table(protocol, d_c: int | None = None) -> dict:
    try:
        protocol = Protocol(protocol)
    except ValueError as exc:
        raise DomainError(f"unknown protocol {protocol!r}") from exc
    if protocol is Protocol.SURFACE_422:
        if d_c is None:
            raise DomainError("surface-422 needs d_c")
        return {"ions_per_well": 4, "registers": surface_registers(d_c)}
    ions, regs = _TABLE[protocol]
    return {"ions_per_well": ions, "registers": regs}


def table_rows(d_c: int = 3) -> list[dict]:
    rows = []
    for p in Protocol:
        r = resource_table(p, d_c)
        regs = r["registers"] if p is not Protocol.SURFACE_422 else "d_c^2 + (d_c-1)^2"
        rows.append({"protocol": PROTOCOL_LABELS[p], "ions_per_well": r["ions_per_well"],
                     "registers": regs})
    return rows


@dataclass(frozen=True)
class CodeSpec:
    name: str
    n: int
    k: int
    d: int
    transversal_gates: tuple = ()

    def __post_init__(self):
        if not (self.n >= self.k >= 1 and self.d >= 1):
            raise DomainError("code parameters need n >= k >= 1 and d >= 1")

    @property
    def params(self) -> tuple:
        return (self.n, self.k, self.d)


STEANE = CodeSpec("Steane", 7, 1, 3, ("H", "S", "CNOT"))
REED_MULLER_15 = CodeSpec("Reed-Muller", 15, 1, 3, ("T", "CNOT"))
CODE_422 = CodeSpec("[[4,2,2]]", 4, 2, 2)


def concatenated_surface_params(d_c: int) -> CodeSpec:
    return CodeSpec(f"[[4,2,2]]-surface d_c={d_c}", 4 * surface_registers(d_c), 2, 2 * d_c)


# ---------------------------------------------------------------- layout

@dataclass
class Well:
    position: tuple  # lattice (row, col)
    ions: int
    role: str = "data"


@dataclass
class Stabilizer:
    kind: str  # "X" or "Z"
    support: list  # physical qubit indices
    wells: list
    origin: str  # "block", "lifted_1", "lifted_2"

    @property
    def weight(self) -> int:
        return len(self.support)


@dataclass
class LatticeLayout:
    d_c: int
    wells: list
    edges: list
    stabilizers: list
    code: CodeSpec | None = None

    @property
    def n_qubits(self) -> int:
        return sum(w.ions for w in self.wells if w.role == "data")

    def to_dict(self) -> dict:
        return {"d_c": self.d_c, "wells": [asdict(w) | {"position": list(w.position)}
                                           for w in self.wells],
                "edges": [list(e) for e in self.edges],
                "stabilizers": [asdict(s) for s in self.stabilizers],
                "code": None if self.code is None else asdict(self.code)
                | {"transversal_gates": list(self.code.transversal_gates)}}

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeLayout":
        code = None
        if d.get("code"):
            c = dict(d["code"])
            c["transversal_gates"] = tuple(c.get("transversal_gates", ()))
            code = CodeSpec(**c)
        return cls(d["d_c"], [Well(tuple(w["position"]), w["ions"], w["role"]) for w in d["wells"]],
                   [tuple(e) for e in d["edges"]], [Stabilizer(**s) for s in d["stabilizers"]],
                   code)


def _surface_code(d_c):
    """Planar surface code on a (2d-1)^2 grid: data at even r+c; X checks at odd r."""
    size = 2 * d_c - 1
    data = [(r, c) for r in range(size) for c in range(size) if (r + c) % 2 == 0]
    index = {p: i for i, p in enumerate(data)}
    checks = []
    for r in range(size):
        for c in range(size):
            if (r + c) % 2 == 1:
                nb = [(r + dr, c + dc) for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))]
                support = [index[p] for p in nb if p in index]
                checks.append(("X" if r % 2 else "Z", support, (r, c)))
    return data, checks


# logical operators of a block as ion offsets
_BLOCK_LOGICAL = {("X", 1): (0, 1), ("Z", 1): (0, 2), ("X", 2): (0, 2), ("Z", 2): (0, 1)}


def concatenated_stabilizers(d_c: int, auxiliary: bool = False) -> LatticeLayout:
    """Wells, diagonal nearest-neighbour edges and the full stabilizer list."""
    data, checks = _surface_code(d_c)
    wells = [Well(p, 4, "data") for p in data]
    index = {p: i for i, p in enumerate(data)}
    edges = []
    for (r, c), i in index.items():
        for dr, dc in ((1, -1), (1, 1)):
            j = index.get((r + dr, c + dc))
            if j is not None:
                edges.append((min(i, j), max(i, j)))
    edges.sort()
    stabs = []
    for w in range(len(data)):
        q = list(range(4 * w, 4 * w + 4))
        stabs.append(Stabilizer("X", q, [w], "block"))
        stabs.append(Stabilizer("Z", q, [w], "block"))
    for logical in (1, 2):
        for kind, support, _ in checks:
            qs = sorted(4 * w + o for w in support for o in _BLOCK_LOGICAL[(kind, logical)])
            stabs.append(Stabilizer(kind, qs, sorted(support), f"lifted_{logical}"))
    if auxiliary:
        wells += [Well(pos, 4, "auxiliary") for _, _, pos in checks]
    return LatticeLayout(d_c, wells, edges, stabs, concatenated_surface_params(d_c))


# ---------------------------------------------------------------- stabilizer algebra

def symplectic_matrix(layout: LatticeLayout) -> np.ndarray:
    """Rows (x | z) over GF(2) for each stabilizer."""
    n = layout.n_qubits
    m = np.zeros((len(layout.stabilizers), 2 * n), dtype=np.uint8)
    for i, s in enumerate(layout.stabilizers):
        off = 0 if s.kind == "X" else n
        m[i, [off + q for q in s.support]] = 1
    return m


def commutation_matrix(m: np.ndarray) -> np.ndarray:
    n = m.shape[1] // 2
    x, z = m[:, :n].astype(np.int64), m[:, n:].astype(np.int64)
    return (x @ z.T + z @ x.T) % 2


def gf2_rank(m: np.ndarray) -> int:
    a = (np.array(m, dtype=np.uint8) % 2).copy()
    rank = 0
    rows, cols = a.shape
    for c in range(cols):
        piv = np.nonzero(a[rank:, c])[0]
        if len(piv) == 0:
            continue
        p = rank + piv[0]
        a[[rank, p]] = a[[p, rank]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != rank]
        a[others] ^= a[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def encoded_qubits(layout: LatticeLayout) -> int:
    return layout.n_qubits - gf2_rank(symplectic_matrix(layout))


def check_layout(layout: LatticeLayout) -> dict:
    """Commutation, encoded-qubit count and locality of every stabilizer."""
    m = symplectic_matrix(layout)
    comm = commutation_matrix(m)
    adj = {i: set() for i in range(len(layout.wells))}
    for i, j in layout.edges:
        adj[i].add(j)
        adj[j].add(i)

    def connected(ws):
        ws = set(ws)
        seen, stack = set(), [next(iter(ws))]
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            stack += [v for v in adj[w] if v in ws]
        return seen == ws

    return {"all_commute": bool(not comm.any()), "k": encoded_qubits(layout),
            "local": all(connected(s.wells) for s in layout.stabilizers),
            "weights": sorted({s.weight for s in layout.stabilizers})}


# ---------------------------------------------------------------- emission

def layout_json(layout: LatticeLayout) -> str:
    return json.dumps(layout.to_dict(), indent=1, sort_keys=True)


def layout_dot(layout: LatticeLayout) -> str:
    lines = ["graph wells {"]
    for i, w in enumerate(layout.wells):
        lines.append(f'  w{i} [label="{w.role} {w.position[0]},{w.position[1]} ({w.ions})", '
                     f'pos="{w.position[1]},{-w.position[0]}!"];')
    lines += [f"  w{i} -- w{j};" for i, j in layout.edges]
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_layout(layout: LatticeLayout, path, fmt: str = "json") -> str:
    text = {"json": layout_json, "dot": layout_dot}[fmt](layout)
    with open(path, "w") as fh:
        fh.write(text)
    return text
