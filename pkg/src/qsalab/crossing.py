"""Avoided crossing of two detuned, coupled oscillators: model, synthetic spectra and fit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit, least_squares
from scipy.signal import find_peaks
from scipy.stats import t as student_t

from .core import CA40, DomainError, IonSpecies, TWO_PI, interaction_constant_from_splitting


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class DetunedPair:
    delta_omega: float
    omega_m: float
    k_int: float
    n: int = 1
    species: IonSpecies = CA40

    def __post_init__(self):
        if self.omega_m <= 0:
            raise DomainError("mean frequency must be positive")

    @property
    def coupling_term(self) -> float:
        """k_int/(n m) in rad^2/s^2."""
        return self.k_int / (self.n * self.species.mass)

    @property
    def chi(self) -> float:
        if self.k_int == 0:
            return math.copysign(math.inf, self.delta_omega) if self.delta_omega else 0.0
        return self.n * self.species.mass * self.omega_m * self.delta_omega / self.k_int

    @property
    def uncoupled(self) -> tuple[float, float]:
        return self.omega_m - self.delta_omega / 2, self.omega_m + self.delta_omega / 2

    @classmethod
    def from_coupling_rate(cls, coupling_rate, omega_m, delta_omega=0.0, n=1, species=CA40):
        k = interaction_constant_from_splitting(coupling_rate, n, species, omega_m)
        return cls(delta_omega, omega_m, k, n, species)


@dataclass
class CrossingFit:
    a: float
    b: float
    c: float
    d_center: float
    omega_c: float
    ci95: tuple
    covariance: np.ndarray = field(repr=False, default=None)
    ill_conditioned: bool = False
    n_points: int = 0

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d_center": self.d_center,
                "omega_c_Hz": self.omega_c / TWO_PI,
                "ci95_Hz": [self.ci95[0] / TWO_PI, self.ci95[1] / TWO_PI],
                "ill_conditioned": self.ill_conditioned, "n_points": self.n_points}


def detuned_pair_frequencies(pair: DetunedPair) -> tuple[float, float]:
    """(omega_+, omega_-) of two detuned wells coupled by k_int."""
    dw, wm = pair.delta_omega, pair.omega_m
    root = math.sqrt(pair.coupling_term**2 + dw**2 * wm**2)
    base = dw**2 / 4 + wm**2
    if base - root <= 0:
        raise DomainError("lower branch radicand is not positive")
    return math.sqrt(base + root), math.sqrt(base - root)


def detuned_pair_modevectors(pair: DetunedPair) -> tuple[np.ndarray, np.ndarray]:
    """Unit mode vectors (well 1, well 2) of the + and - branches."""
    chi = pair.chi
    out = []
    for s in (1, -1):
        if math.isinf(chi):
            # chi -> +inf: + branch is (0, 1), - branch is (-1, 0)
            v = np.array([0.0, 1.0]) if (s > 0) == (chi > 0) else np.array([-math.copysign(1, chi), 0.0])
        else:
            r = math.hypot(1.0, chi)
            # -chi + r loses precision for large chi; use 1/(chi + r)
            first = (1.0 / (chi + r) if chi >= 0 else -chi + r) if s > 0 else \
                    (-chi - r if chi >= 0 else -1.0 / (r - chi))
            v = np.array([first, 1.0])
            v /= np.linalg.norm(v)
        out.append(v)
    return out[0], out[1]


# ---------------------------------------------------------------- model of the fit

def crossing_model(gamma, a, b, c, d, branch):
    """a sqrt((gamma-d)^2/4 + b +- sqrt(c^2 + b (gamma-d)^2)), branch = +1 or -1."""
    u = np.asarray(gamma, float) - d
    return a * np.sqrt(u**2 / 4 + b + np.asarray(branch) * np.sqrt(c**2 + b * u**2))


def omega_c_from_params(a, b, c) -> float:
    return a * (math.sqrt(b + c) - math.sqrt(b - c))


def _phys_to_abc(p):
    s, w, k, d = p
    return s, (w / s) ** 2, k / s**2, d


def _model_phys(p, gamma, branch):
    s, w, k, d = p
    u = gamma - d
    r = np.sqrt(k**2 + s**2 * u**2 * w**2)
    q = s**2 * u**2 / 4 + w**2 + branch * r
    return np.sqrt(q), r, q, u


def _jac_phys(p, gamma, branch):
    s, w, k, d = p
    om, r, q, u = _model_phys(p, gamma, branch)
    rr = np.where(r > 0, r, np.inf)
    dq = np.empty((len(gamma), 4))
    dq[:, 0] = s * u**2 / 2 + branch * s * u**2 * w**2 / rr
    dq[:, 1] = 2 * w + branch * s**2 * u**2 * w / rr
    dq[:, 2] = branch * k / rr
    dq[:, 3] = -(s**2 * u / 2 + branch * s**2 * u * w**2 / rr)
    return dq / (2 * om[:, None])


# ---------------------------------------------------------------- synthetic data

def crossing_points(fields, slope, d_center, omega_m, coupling_rate, n=1, species=CA40,
                    noise_sd=0.0, seed=None):
    """Branch frequencies at each field setting, with Delta omega = slope (gamma - d_center).

    Returns arrays (gamma, omega, branch); ``noise_sd`` (rad/s) jitters the centers.
    """
    rng = np.random.default_rng(seed)
    k = interaction_constant_from_splitting(coupling_rate, n, species, omega_m)
    g, w, br = [], [], []
    for gam in fields:
        p = DetunedPair(slope * (gam - d_center), omega_m, k, n, species)
        hi, lo = detuned_pair_frequencies(p)
        for b, val in ((1, hi), (-1, lo)):
            g.append(gam)
            w.append(val + (rng.normal(0, noise_sd) if noise_sd > 0 else 0.0))
            br.append(b)
    return np.array(g), np.array(w), np.array(br)


def synth_crossing_spectrum(fields, detunings, slope, d_center, omega_m, coupling_rate,
                            line_width, n=1, species=CA40, observed_well=0,
                            freq_noise_sd=0.0, amp_noise_sd=0.0, seed=None) -> dict:
    """Excitation map over (field, probe frequency) with Gaussian lines at both branches.

    Line amplitudes follow the squared participation of ``observed_well`` in each mode.
    ``detunings`` are probe angular frequencies in rad/s.
    """
    if line_width <= 0:
        raise DomainError("line width must be positive")
    rng = np.random.default_rng(seed)
    k = interaction_constant_from_splitting(coupling_rate, n, species, omega_m)
    fields = np.asarray(fields, float)
    det = np.asarray(detunings, float)
    exc = np.zeros((len(det), len(fields)))
    centers = np.zeros((len(fields), 2))
    for j, gam in enumerate(fields):
        p = DetunedPair(slope * (gam - d_center), omega_m, k, n, species)
        freqs = detuned_pair_frequencies(p)
        vecs = detuned_pair_modevectors(p)
        for i, (f0, v) in enumerate(zip(freqs, vecs)):
            f = f0 + (rng.normal(0, freq_noise_sd) if freq_noise_sd > 0 else 0.0)
            centers[j, i] = f
            exc[:, j] += v[observed_well] ** 2 * np.exp(-0.5 * ((det - f) / line_width) ** 2)
    if amp_noise_sd > 0:
        exc += rng.normal(0, amp_noise_sd, exc.shape)
    return {"fields": fields, "detunings": det, "excitation": exc, "centers": centers}


def spectrum_rows(spec: dict) -> list[dict]:
    """Long-format table: field_V_per_m, detuning_Hz, excitation."""
    rows = []
    for j, g in enumerate(spec["fields"]):
        for i, f in enumerate(spec["detunings"]):
            rows.append({"field_V_per_m": float(g), "detuning_Hz": float(f / TWO_PI),
                         "excitation": float(spec["excitation"][i, j])})
    return rows


# ---------------------------------------------------------------- peak extraction

def _gauss2(x, a1, m1, a2, m2, s, off):
    return (a1 * np.exp(-0.5 * ((x - m1) / s) ** 2) + a2 * np.exp(-0.5 * ((x - m2) / s) ** 2)
            + off)


def _gauss1(x, a1, m1, s, off):
    return a1 * np.exp(-0.5 * ((x - m1) / s) ** 2) + off


def extract_peaks(spec: dict, min_amplitude: float = 0.05) -> tuple:
    """Gaussian fit per field column; returns (gamma, omega, branch) of resolved peaks."""
    x = spec["detunings"]
    xs = (x - x.mean()) / (x.std() or 1.0)
    scale = x.std() or 1.0
    cols = []
    for j, gam in enumerate(spec["fields"]):
        y = spec["excitation"][:, j]
        idx, props = find_peaks(y, height=min_amplitude)
        order = idx[np.argsort(-props["peak_heights"])][:2] if len(idx) else []
        dx = xs[1] - xs[0]
        try:
            if len(order) == 2:
                p0 = [y[order[0]], xs[order[0]], y[order[1]], xs[order[1]], 2 * dx, 0.0]
                p, _ = curve_fit(_gauss2, xs, y, p0=p0, maxfev=5000)
                peaks = [(p[1], p[0]), (p[3], p[2])]
            elif len(order) == 1:
                p, _ = curve_fit(_gauss1, xs, y, p0=[y[order[0]], xs[order[0]], 2 * dx, 0.0],
                                 maxfev=5000)
                peaks = [(p[1], p[0])]
            else:
                peaks = []
        except RuntimeError:
            peaks = []
        peaks = [(m * scale + x.mean(), amp) for m, amp in peaks if amp > min_amplitude]
        cols.append((gam, sorted(peaks)))
    # two-peak columns give an unambiguous branch split; use their midpoints otherwise
    mids = [0.5 * (pk[0][0] + pk[1][0]) for _, pk in cols if len(pk) == 2]
    mid = float(np.median(mids)) if mids else float(x.mean())
    g, w, br = [], [], []
    for gam, pk in cols:
        if len(pk) == 2:
            for b, (m, _) in zip((-1, 1), pk):
                g.append(gam), w.append(m), br.append(b)
        elif len(pk) == 1:
            g.append(gam), w.append(pk[0][0]), br.append(1 if pk[0][0] > mid else -1)
    return np.array(g), np.array(w), np.array(br)


# ---------------------------------------------------------------- fit

def _initial_guess(gamma, omega, branch):
    fields = np.unique(gamma)
    gaps = []
    for gam in fields:
        hi = omega[(gamma == gam) & (branch > 0)]
        lo = omega[(gamma == gam) & (branch < 0)]
        if len(hi) and len(lo):
            gaps.append((gam, hi.mean() - lo.mean(), 0.5 * (hi.mean() + lo.mean())))
    if len(gaps) < 2:
        raise FitError("need at least two columns with both branches resolved")
    gaps = np.array(gaps)
    i = int(np.argmin(gaps[:, 1]))
    d0, om0, wm0 = gaps[i]
    # far from the center the gap grows like |slope (gamma - d)|
    far = np.abs(gaps[:, 0] - d0)
    j = int(np.argmax(far))
    s0 = math.sqrt(max(gaps[j, 1] ** 2 - om0**2, (0.1 * om0) ** 2)) / max(far[j], 1e-30)
    k0 = wm0 * om0
    return np.array([s0, wm0, k0, d0])


def fit_avoided_crossing(gamma, omega, branch, min_settings: int = 8) -> CrossingFit:
    """Least-squares fit of both branches; Omega_c with a linearized 95% interval."""
    gamma = np.asarray(gamma, float)
    omega = np.asarray(omega, float)
    branch = np.asarray(branch, float)
    if len(np.unique(gamma)) < min_settings:
        raise FitError(f"need at least {min_settings} field settings")
    p0 = _initial_guess(gamma, omega, branch)

    def resid(p):
        return _model_phys(p, gamma, branch)[0] - omega

    def jac(p):
        return _jac_phys(p, gamma, branch)

    best = None
    # coarse grid over slope and coupling scale around the data-driven guess
    for fs in (0.5, 1.0, 2.0):
        for fk in (0.7, 1.0, 1.4):
            p = p0 * np.array([fs, 1.0, fk, 1.0])
            try:
                r = least_squares(resid, p, jac=jac, method="lm", x_scale="jac",
                                  xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
            except ValueError:
                continue
            if np.all(np.isfinite(r.fun)) and (best is None or r.cost < best.cost):
                best = r
    if best is None or not best.success:
        raise FitError("least-squares fit did not converge")
    p = best.x.copy()
    p[0] = abs(p[0])
    p[2] = abs(p[2])
    s, w, k, d = p
    if k >= w**2:
        raise FitError("fitted coupling exceeds the mean frequency (unphysical)")
    J = best.jac
    dof = max(len(omega) - 4, 1)
    s2 = 2 * best.cost / dof
    jtj = J.T @ J
    # parameters span many decades; invert the column-equilibrated normal matrix
    dscale = 1.0 / np.sqrt(np.diag(jtj))
    scaled = jtj * np.outer(dscale, dscale)
    cond = np.linalg.cond(scaled)
    ill = bool(cond > 1e12)
    cov = np.linalg.pinv(scaled) * np.outer(dscale, dscale) * s2
    om_c = math.sqrt(w**2 + k) - math.sqrt(w**2 - k)
    grad = np.array([0.0,
                     w / math.sqrt(w**2 + k) - w / math.sqrt(w**2 - k),
                     0.5 / math.sqrt(w**2 + k) + 0.5 / math.sqrt(w**2 - k),
                     0.0])
    se = math.sqrt(max(grad @ cov @ grad, 0.0))
    half = student_t.ppf(0.975, dof) * se
    a, b, c, dc = _phys_to_abc(p)
    return CrossingFit(a, b, c, dc, om_c, (om_c - half, om_c + half), cov, ill, len(omega))


def fit_spectrum(spec: dict, **kw) -> CrossingFit:
    return fit_avoided_crossing(*extract_peaks(spec, **kw))
