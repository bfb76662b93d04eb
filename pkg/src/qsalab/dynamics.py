"""Classical exchange of motion between two coupled wells with switched frequencies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares
from scipy.stats import t as student_t

from .core import DomainError, TWO_PI

SETTLE_TIME = 130e-6


@dataclass(frozen=True)
class ExchangeConfig:
    """Two oscillators whose frequencies relax exponentially from initial to final values."""

    f1_initial: float
    f2_initial: float
    f1_final: float
    f2_final: float
    k_tilde: float
    tau_on: float = 37e-6
    tau_off: float = 49e-6
    y0: tuple = (1.0, 0.0)
    dy0: tuple = (0.0, 0.0)

    def __post_init__(self):
        if min(self.f1_initial, self.f2_initial, self.f1_final, self.f2_final) <= 0:
            raise DomainError("frequencies must be positive")
        if self.tau_on <= 0 or self.tau_off <= 0:
            raise DomainError("switching times must be positive")

    def frequencies(self, t):
        return (frequency_ramp(t, self.f1_initial, self.f1_final, self.tau_on),
                frequency_ramp(t, self.f2_initial, self.f2_final, self.tau_on))

    @classmethod
    def switched(cls, final_detuning, f1_initial=520e3, f2_initial=560e3, k_tilde=1.41e11,
                 tau_on=37e-6, f_center=None):
        """Wells approach ``f_center +- final_detuning/2`` (f2 - f1 = final_detuning)."""
        fc = 0.5 * (f1_initial + f2_initial) if f_center is None else f_center
        return cls(f1_initial, f2_initial, fc - final_detuning / 2, fc + final_detuning / 2,
                   k_tilde, tau_on)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # (2, T)
    dy: np.ndarray  # (2, T)
    occupation: np.ndarray  # (2, T)

    def rows(self) -> list[dict]:
        return [{"t_us": float(self.t[i] * 1e6), "y1": float(self.y[0, i]),
                 "y2": float(self.y[1, i]), "occ1": float(self.occupation[0, i]),
                 "occ2": float(self.occupation[1, i])} for i in range(len(self.t))]


@dataclass
class ExchangeFitResult:
    n1_0: float
    n2_0: float
    omega_c: float
    phi: float
    tau_d: float
    ci95: dict = field(default_factory=dict)


def frequency_ramp(t, f_init, f_final, tau):
    """f_fin - (f_fin - f_init) exp(-t/tau)."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    return f_final - (f_final - f_init) * np.exp(-np.asarray(t, float) / tau)


def analytic_exchange(lam, omega_c, omega_m, t):
    """Displacements of two resonant wells after an initial kick of well 1."""
    t = np.asarray(t, float)
    return (lam * np.cos(omega_c * t / 2) * np.sin(omega_m * t),
            -lam * np.sin(omega_c * t / 2) * np.cos(omega_m * t))


def k_tilde_from_coupling(omega_c, omega_z):
    """k/m whose resonant pair splits by omega_c below omega_z.

    The coupling matrix [[-w^2 + k, k], [k, -w^2 + k]] has eigenfrequencies
    w and sqrt(w^2 - 2k), so k = omega_c (2 w - omega_c) / 2 exactly.
    """
    if not 0 <= omega_c < omega_z:
        raise DomainError("need 0 <= omega_c < omega_z")
    return 0.5 * omega_c * (2 * omega_z - omega_c)


def integrate_exchange(config: ExchangeConfig, t_end: float, n_samples: int | None = None,
                       rtol: float = 1e-9, atol: float = 1e-11) -> Trajectory:
    """Integrate y'' = M(t) y and return amplitudes and squared envelopes.

    The occupation of well i is y_i^2 + (y_i'/w_i)^2 with w_i^2 = omega_i(t)^2 - k,
    the frequency of well i with the other well clamped.  It is the squared
    amplitude of the local oscillation and equals 1 for the initial state.
    """
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    k = config.k_tilde

    c = config
    a1, b1 = TWO_PI * c.f1_final, TWO_PI * (c.f1_final - c.f1_initial)
    a2, b2 = TWO_PI * c.f2_final, TWO_PI * (c.f2_final - c.f2_initial)

    def rhs(t, s):
        e = math.exp(-t / c.tau_on)  # scalar form of config.frequencies, hot loop
        w1, w2 = (a1 - b1 * e) ** 2, (a2 - b2 * e) ** 2
        y1, y2, v1, v2 = s
        return [v1, v2, (-w1 + k) * y1 + k * y2, k * y1 + (-w2 + k) * y2]

    fmax = max(config.f1_initial, config.f2_initial, config.f1_final, config.f2_final)
    if n_samples is None:
        n_samples = int(t_end * fmax * 8) + 2
    t_eval = np.linspace(0.0, t_end, n_samples)
    sol = solve_ivp(rhs, (0.0, t_end), [*config.y0, *config.dy0], method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol, max_step=0.1 / fmax)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    y, dy = sol.y[:2], sol.y[2:]
    f1, f2 = config.frequencies(sol.t)
    w = np.sqrt((TWO_PI * np.vstack([f1, f2])) ** 2 - k)
    occ = y**2 + (dy / w) ** 2
    return Trajectory(sol.t, y, dy, occ)


def exchange_metrics(traj: Trajectory, settle: float = SETTLE_TIME) -> dict:
    """Contrast after ``settle`` and maximum occupation of well 2."""
    m = traj.t >= settle
    occ2 = traj.occupation[1]
    return {"contrast": float(occ2[m].max() - occ2[m].min()),
            "max_occ2": float(occ2.max()),
            "max_occ2_settled": float(occ2[m].max())}


def detuning_scan(final_detunings, t_end: float = 450e-6, settle: float = SETTLE_TIME,
                  jobs: int = 1, **config_kw) -> list[dict]:
    """Contrast and peak occupation of well 2 versus the final detuning (Hz)."""
    from .parallel import ordered_map

    def one(df):
        row = {"delta_f_kHz": df / 1e3}
        try:
            traj = integrate_exchange(ExchangeConfig.switched(df, **config_kw), t_end)
            met = exchange_metrics(traj, settle)
            row.update(contrast=met["contrast"], max_occ2=met["max_occ2"], status="ok")
        except Exception as exc:
            row.update(contrast=float("nan"), max_occ2=float("nan"), status=f"error: {exc}")
        return row

    return ordered_map(one, list(final_detunings), jobs)


# ---------------------------------------------------------------- fitting

def exchange_model(t, n1_0, n2_0, omega_c, phi, tau_d):
    """n_2(t) = [-(n1 - n2) cos(omega_c t + phi) exp(-t/tau_d) + n1 + n2]/2.

    The minus sign makes n_2(0) = n2_0 at phi = 0; the + sign form is the same
    curve with phi shifted by pi.
    """
    t = np.asarray(t, float)
    return 0.5 * (-(n1_0 - n2_0) * np.cos(omega_c * t + phi) * np.exp(-t / tau_d)
                  + n1_0 + n2_0)


def _guess_rate(t, y):
    """Dominant angular frequency from a zero-padded periodogram."""
    yy = y - y.mean()
    dt = np.median(np.diff(t))
    tt = np.arange(t[0], t[-1], dt)
    yi = np.interp(tt, t, yy)
    nfft = 16 * len(yi)
    spec = np.abs(np.fft.rfft(yi, nfft))
    freqs = np.fft.rfftfreq(nfft, dt)
    spec[0] = 0
    return TWO_PI * freqs[int(np.argmax(spec))]


def fit_exchange_curve(t, occupation, t_min: float = 0.0, tau_guess: float | None = None,
                       fix_phase: bool = False) -> ExchangeFitResult:
    """Least-squares fit of the damped exchange model; points with t < t_min are ignored.

    ``fix_phase`` pins phi = 0 (so the curve starts at its extremum at t = 0).
    """
    t = np.asarray(t, float)
    y = np.asarray(occupation, float)
    keep = t >= t_min
    t, y = t[keep], y[keep]
    if len(t) < 10:
        raise DomainError("need at least 10 points after the exclusion window")
    w0 = _guess_rate(t, y)
    if w0 * (t[-1] - t[0]) < TWO_PI:
        raise DomainError("data must span at least one exchange period")
    amp = 0.5 * (y.max() - y.min())
    mean = y.mean()
    tau0 = tau_guess or 10 * (t[-1] - t[0])
    tscale = t[-1] - t[0]

    def unpack(p):
        n1, n2, w, ph, ltau = p
        return n1, n2, w * TWO_PI / tscale, (0.0 if fix_phase else ph), tscale * math.exp(ltau)

    def resid(p):
        return exchange_model(t, *unpack(p)) - y

    best = None
    for ph0 in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
        p0 = [mean + amp, mean - amp, w0 * tscale / TWO_PI, ph0, math.log(tau0 / tscale)]
        r = least_squares(resid, p0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                          max_nfev=5000)
        if best is None or r.cost < best.cost:
            best = r
    if best is None or not best.success:
        raise RuntimeError("exchange fit did not converge")
    n1, n2, w, ph, tau = unpack(best.x)
    if w < 0:
        w, ph = -w, -ph
    ph = (ph + math.pi) % TWO_PI - math.pi
    dof = max(len(t) - 5, 1)
    s2 = 2 * best.cost / dof
    J = best.jac
    jtj = J.T @ J
    d = 1.0 / np.sqrt(np.where(np.diag(jtj) > 0, np.diag(jtj), 1.0))
    cov = np.linalg.pinv(jtj * np.outer(d, d)) * np.outer(d, d) * s2
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    q = student_t.ppf(0.975, dof)
    ci = {"n1_0": q * se[0], "n2_0": q * se[1], "omega_c": q * se[2] * TWO_PI / tscale,
          "phi": q * se[3], "tau_d": q * se[4] * tau}
    return ExchangeFitResult(n1, n2, w, ph, tau, ci)


def apparent_exchange_rate(config: ExchangeConfig, t_end: float = 450e-6,
                           settle: float = SETTLE_TIME) -> float:
    """Exchange angular frequency of well-2 occupation after the ramp has settled."""
    traj = integrate_exchange(config, t_end, n_samples=int(t_end / 0.5e-6) + 1)
    fit = fit_exchange_curve(traj.t, traj.occupation[1], t_min=settle)
    return fit.omega_c
