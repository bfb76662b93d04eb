"""Gapless-plane surface-trap model: RF pseudopotential nulls and DC fields per volt.

Electrodes lie in the plane y = 0 (y is the height above the surface), the rest
of the plane is grounded.  RF strips are infinite along z.  For such strips the
per-volt potential is phi = Im f(w) with w = x + i y and

    f(w) = (1/pi) log((w - x_max) / (w - x_min)),

so the field is E_x = -Im G, E_y = -Re G with G = sum_k V_k f_k'(w).  RF nulls
are the zeros of G in the upper half plane; G is rational, so they are found as
polynomial roots and polished with Newton steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .core import CA40, DomainError, IonSpecies, TWO_PI

RF_ROLES = ("RF1", "RF2")


@dataclass(frozen=True)
class Strip:
    x_min: float
    x_max: float
    role: str
    z_min: float | None = None  # finite z-extent (DC rectangles); None = infinite
    z_max: float | None = None

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise DomainError("strip needs x_max > x_min")
        if (self.z_min is None) != (self.z_max is None):
            raise DomainError("give both z_min and z_max or neither")
        if self.z_min is not None and not self.z_max > self.z_min:
            raise DomainError("strip needs z_max > z_min")

    @property
    def is_rf(self) -> bool:
        return self.role in RF_ROLES

    @property
    def finite(self) -> bool:
        return self.z_min is not None

    def scaled(self, s: float) -> "Strip":
        z = (None, None) if not self.finite else (self.z_min * s, self.z_max * s)
        return Strip(self.x_min * s, self.x_max * s, self.role, *z)

    def to_dict(self) -> dict:
        d = {"x_min": self.x_min, "x_max": self.x_max, "role": self.role}
        if self.finite:
            d.update(z_min=self.z_min, z_max=self.z_max)
        return d


@dataclass(frozen=True)
class SurfaceTrapGeometry:
    strips: tuple
    omega_rf: float = TWO_PI * 19e6
    v_rf2: float = 70.0  # amplitude, V
    zeta: float = 1.0  # v_rf1 / v_rf2

    def __post_init__(self):
        if self.zeta <= 0:
            raise DomainError("zeta must be positive")
        if self.omega_rf <= 0:
            raise DomainError("omega_rf must be positive")
        xs = sorted((s.x_min, s.x_max) for s in self.strips if not s.finite)
        for (a0, a1), (b0, b1) in zip(xs, xs[1:]):
            if b0 < a1 - 1e-15:
                raise DomainError("infinite strips overlap")

    @property
    def v_rf1(self) -> float:
        return self.zeta * self.v_rf2

    @property
    def rf_strips(self) -> list:
        return [s for s in self.strips if s.is_rf]

    @property
    def dc_strips(self) -> list:
        return [s for s in self.strips if not s.is_rf]

    def rf_voltages(self) -> np.ndarray:
        return np.array([self.v_rf1 if s.role == "RF1" else self.v_rf2 for s in self.rf_strips])

    def with_(self, **kw) -> "SurfaceTrapGeometry":
        return replace(self, **kw)

    def scaled(self, s: float) -> "SurfaceTrapGeometry":
        return replace(self, strips=tuple(st.scaled(s) for st in self.strips))

    def to_dict(self) -> dict:
        return {"strips": [s.to_dict() for s in self.strips], "omega_rf": self.omega_rf,
                "v_rf2": self.v_rf2, "zeta": self.zeta}

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceTrapGeometry":
        return cls(tuple(Strip(**s) for s in d["strips"]), d.get("omega_rf", TWO_PI * 19e6),
                   d.get("v_rf2", 70.0), d.get("zeta", 1.0))


@dataclass
class PseudoMinimum:
    position: tuple  # (x, height) m
    pseudo_frequencies: tuple  # (omega_x, omega_y) rad/s


@dataclass
class PseudoLandscape:
    minima: list
    merged: bool
    barrier_curvature: float = float("nan")  # d2 Phi/dx2 at the midpoint, J/m^2
    separation: float | None = None

    @property
    def height(self) -> float:
        return float(np.mean([m.position[1] for m in self.minima])) if self.minima else math.nan


def split_rf_geometry(center_width=75e-6, gap=115e-6, rail_width=255e-6, zeta=1.0,
                      v_rf2=70.0, omega_rf=TWO_PI * 19e6, dc_segment=None,
                      dc_outer=1000e-6) -> SurfaceTrapGeometry:
    """Centre RF1 strip flanked by two RF2 rails; gaps and outer regions are DC.

    ``dc_segment`` (m) cuts the DC regions into rectangles of that z-length
    (three segments centred on z = 0); None leaves only the RF strips.
    """
    c = center_width / 2
    r0, r1 = c + gap, c + gap + rail_width
    strips = [Strip(-r1, -r0, "RF2"), Strip(-c, c, "RF1"), Strip(r0, r1, "RF2")]
    if dc_segment:
        regions = {"gap_L": (-r0, -c), "gap_R": (c, r0), "out_L": (-r1 - dc_outer, -r1),
                   "out_R": (r1, r1 + dc_outer)}
        for name, (a, b) in regions.items():
            for j in (-1, 0, 1):
                z0 = (j - 0.5) * dc_segment
                strips.append(Strip(a, b, f"DC_{name}_{j + 1}", z0, z0 + dc_segment))
    return SurfaceTrapGeometry(tuple(strips), omega_rf, v_rf2, zeta)


# ---------------------------------------------------------------- fields

def _check_point(point):
    p = np.asarray(point, float)
    if p.shape != (3,):
        raise DomainError("point must be (x, height, z)")
    if p[1] <= 0:
        raise DomainError("field evaluation needs a point strictly above the electrode plane")
    return p


def _strip_field_2d(s: Strip, x, h) -> np.ndarray:
    w = complex(x, h)
    g = (1 / (w - s.x_max) - 1 / (w - s.x_min)) / math.pi
    return np.array([-g.imag, -g.real, 0.0])


def _rect_field(s: Strip, x, h, z) -> np.ndarray:
    """Field per volt of a finite rectangle (gapless plane), closed form."""
    e = np.zeros(3)
    for xs, sx in ((s.x_max, 1), (s.x_min, -1)):
        for zs, sz in ((s.z_max, 1), (s.z_min, -1)):
            a, b = xs - x, zs - z
            r = math.sqrt(a * a + b * b + h * h)
            sign = sx * sz / (2 * math.pi)
            # F = atan(a b / (h r)); E = -grad phi with a = xs - x, b = zs - z
            e[0] += sign * b * h / (r * (a * a + h * h))
            e[2] += sign * a * h / (r * (b * b + h * h))
            e[1] += sign * a * b * (r * r + h * h) / (r * (a * a + h * h) * (b * b + h * h))
    return e


def strip_field(geometry: SurfaceTrapGeometry, point) -> np.ndarray:
    """Per-volt field (n_strips, 3) of every strip at ``point`` = (x, height, z)."""
    x, h, z = _check_point(point)
    return np.array([_rect_field(s, x, h, z) if s.finite else _strip_field_2d(s, x, h)
                     for s in geometry.strips])


def rf_field(geometry: SurfaceTrapGeometry, point) -> np.ndarray:
    x, h, _ = _check_point(point)
    e = np.array([_strip_field_2d(s, x, h) for s in geometry.rf_strips])
    return geometry.rf_voltages() @ e


def pseudopotential_at(geometry: SurfaceTrapGeometry, point,
                       species: IonSpecies = CA40) -> float:
    """Phi = q^2 |E_rf|^2 / (4 m Omega_rf^2) in joules."""
    e = rf_field(geometry, point)
    return species.charge**2 * float(e @ e) / (4 * species.mass * geometry.omega_rf**2)


def dc_field_per_volt(geometry: SurfaceTrapGeometry, positions) -> dict:
    """{electrode role: (N, 3) field per volt at each position (x, height, z)}."""
    pos = np.atleast_2d(np.asarray(positions, float))
    out = {}
    for s in geometry.dc_strips:
        out[s.role] = np.array([_rect_field(s, *_check_point(p)) if s.finite
                                else _strip_field_2d(s, p[0], _check_point(p)[1]) for p in pos])
    if not out:
        raise DomainError("geometry has no DC electrodes")
    return out


# ---------------------------------------------------------------- nulls

def _g_terms(geometry):
    v = geometry.rf_voltages()
    return [(vk * (s.x_max - s.x_min) / math.pi, s.x_min, s.x_max)
            for vk, s in zip(v, geometry.rf_strips)]


def _g(terms, w):
    """G(w) = sum c/((w-a)(w-b)) and its derivative."""
    g = dg = 0j
    for c, a, b in terms:
        q = (w - a) * (w - b)
        g += c / q
        dg -= c * (2 * w - a - b) / q**2
    return g, dg


def _null_candidates(terms) -> np.ndarray:
    num = np.zeros(1)
    for k, (c, _, _) in enumerate(terms):
        poly = np.array([c])
        for j, (_, a, b) in enumerate(terms):
            if j != k:
                poly = P.polymul(poly, P.polyfromroots([a, b]))
        num = P.polyadd(num, poly)
    scale = max(abs(t[2]) for t in terms)
    # roots in scaled units keep the companion matrix well conditioned
    num_s = num * scale ** np.arange(len(num))
    return P.polyroots(num_s) * scale


def _polish(terms, w, tol=1e-15, max_iter=50):
    for _ in range(max_iter):
        g, dg = _g(terms, w)
        if dg == 0:
            break
        step = g / dg
        w -= step
        if abs(step) < tol * max(abs(w), 1e-6):
            break
    return w


def _omega_at_null(geometry, terms, w, species):
    _, dg = _g(terms, w)
    om = species.charge * abs(dg) / (math.sqrt(2) * species.mass * geometry.omega_rf)
    return (om, om)


def _barrier_curvature(geometry, h, species, step=None):
    step = step or 1e-3 * h
    f = [pseudopotential_at(geometry, (x, h, 0.0), species) for x in (-step, 0.0, step)]
    return (f[0] - 2 * f[1] + f[2]) / step**2


def find_rf_nulls(geometry: SurfaceTrapGeometry, window=((-1e-3, 1e-3), (1e-6, 1e-3)),
                  species: IonSpecies = CA40, tol: float = 1e-12) -> PseudoLandscape:
    """All RF nulls (pseudopotential minima) in ``window`` = ((x_lo, x_hi), (h_lo, h_hi))."""
    (x0, x1), (h0, h1) = window
    if h0 <= 0:
        raise DomainError("search window must lie above the electrode plane")
    terms = _g_terms(geometry)
    found = []
    for w in _null_candidates(terms):
        if w.imag <= 0:
            continue
        w = _polish(terms, w)
        if x0 <= w.real <= x1 and h0 <= w.imag <= h1:
            if not any(abs(w - u) < 1e-9 * abs(u) for u in found):
                found.append(w)
    if not found:
        raise DomainError("no RF null in the search window")
    found.sort(key=lambda w: (w.real, w.imag))
    minima = [PseudoMinimum((w.real, w.imag), _omega_at_null(geometry, terms, w, species))
              for w in found]
    scale = max(abs(w) for w in found)
    side = [w for w in found if abs(w.real) > tol * scale]
    h_mid = float(np.mean([w.imag for w in found]))
    curv = _barrier_curvature(geometry, h_mid, species)
    merged = len(side) < 2 or curv >= 0
    sep = None if merged else float(max(w.real for w in side) - min(w.real for w in side))
    return PseudoLandscape(minima, merged, curv, sep)


def separation_vs_ratio(geometry: SurfaceTrapGeometry, zetas, species: IonSpecies = CA40,
                        window=((-1e-3, 1e-3), (1e-6, 1e-3))) -> list[dict]:
    """Rows (zeta, separation_um, height_um, omega_x_Hz, merged); failures recorded as NaN."""
    rows = []
    for z in zetas:
        try:
            land = find_rf_nulls(geometry.with_(zeta=float(z)), window, species)
        except DomainError as exc:
            rows.append({"zeta": float(z), "separation_um": math.nan, "height_um": math.nan,
                         "omega_x_Hz": math.nan, "merged": True, "error": str(exc)})
            continue
        om = np.mean([m.pseudo_frequencies[0] for m in land.minima])
        rows.append({"zeta": float(z),
                     "separation_um": math.nan if land.merged else land.separation * 1e6,
                     "height_um": land.height * 1e6, "omega_x_Hz": float(om / TWO_PI),
                     "merged": bool(land.merged)})
    return rows


def fit_zeta_scale(geometry: SurfaceTrapGeometry, zetas, separations, bounds=(0.5, 2.0),
                   species: IonSpecies = CA40) -> dict:
    """Scale s such that the model at s * zeta best matches measured separations (m)."""
    zetas = np.asarray(zetas, float)
    sep = np.asarray(separations, float)

    def model(s):
        out = []
        for z in zetas:
            land = find_rf_nulls(geometry.with_(zeta=s * z), species=species)
            out.append(np.nan if land.merged else land.separation)
        return np.array(out)

    def cost(s):
        r = model(s) - sep
        return float(np.sum(r[np.isfinite(r)] ** 2)) if np.isfinite(r).any() else np.inf

    res = minimize_scalar(cost, bounds=bounds, method="bounded", options={"xatol": 1e-8})
    return {"scale": float(res.x), "rms_m": math.sqrt(res.fun / len(zetas)),
            "rms_unscaled_m": math.sqrt(cost(1.0) / len(zetas))}


def match_geometry(geometry: SurfaceTrapGeometry, height: float, separation: float | None = None,
                   zeta_bracket=(0.3, 5.0), species: IonSpecies = CA40,
                   n_iter: int = 8) -> SurfaceTrapGeometry:
    """Rescale the electrode layout (and, with ``separation``, pick zeta) to hit the targets."""
    from scipy.optimize import brentq

    g = geometry
    for _ in range(n_iter):
        if separation is not None:
            def resid(z):
                land = find_rf_nulls(g.with_(zeta=z), species=species)
                return (0.0 if land.merged else land.separation) - separation

            g = g.with_(zeta=brentq(resid, *zeta_bracket, xtol=1e-12))
        h = find_rf_nulls(g, species=species).height
        g = g.scaled(height / h)
        if abs(h / height - 1) < 1e-12:
            break
    return g
