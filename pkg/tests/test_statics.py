import math

import numpy as np
import pytest
from scipy.optimize import minimize

from qsalab.core import CA40, KE, TWO_PI, TrapPotential, exact_pair_frequencies, point_charge_coupling
from qsalab.statics import (build_double_well, calibrate_double_well, chain_length_scale,
                            coupled_pair, coupling_point, coupling_scan, gap_inhomogeneity,
                            mode_splitting_scan, normal_modes, optimize_quartic_equidistance,
                            potential_hessian, single_well_com, solve_equilibrium,
                            _in_well_inhomogeneity)


def curv(f):
    return CA40.mass * (TWO_PI * f) ** 2 / CA40.charge


def harmonic(f=400e3, fx=3e6, fy=3.2e6):
    return TrapPotential(curv(f), 0.0, phi_x=curv(fx), phi_y=curv(fy))


def axial_dw(d, f=400e3):
    return build_double_well(curv(f), d, CA40, "axial")


def test_two_ion_separation():
    cfg = solve_equilibrium(harmonic(), CA40, (2, 0))
    sep = np.ptp(cfg.positions[:, 2])
    w = TWO_PI * 400e3
    expect = (2 * KE * CA40.charge**2 / (CA40.mass * w**2)) ** (1 / 3)
    assert sep == pytest.approx(expect, rel=1e-9)
    assert sep == pytest.approx(10.3e-6, abs=0.1e-6)


def test_one_ion_per_well_mirror_symmetric():
    pot = axial_dw(56e-6)
    z = solve_equilibrium(pot, CA40, (1, 1)).positions[:, 2]
    assert z[0] == pytest.approx(-z[1], rel=1e-9)
    # Coulomb repulsion pushes the ions slightly outward
    assert 0 < abs(z[1]) - 28e-6 < 1e-6


def _brute_force(pot, n_ions, rng, starts=6):
    """Independent minimizer: SI energy, random starts, BFGS then coordinate descent."""
    s = 1e-6

    def energy(flat):
        u = flat.reshape(-1, 3) * s
        x, y, z = u.T
        e = 0.5 * (pot.phi_x * x**2 + pot.phi_y * y**2 + pot.alpha * z**2) + pot.beta / 24 * z**4
        e = CA40.charge * e.sum()
        for i in range(len(u)):
            for j in range(i + 1, len(u)):
                e += KE * CA40.charge**2 / np.linalg.norm(u[i] - u[j])
        return e / 1e-25

    best = None
    half = pot.separation / 2 / s
    for _ in range(starts):
        z = np.concatenate([-half + rng.uniform(-12, 12, n_ions // 2),
                            half + rng.uniform(-12, 12, n_ions // 2)])
        x0 = np.column_stack([rng.normal(0, 0.1, n_ions), rng.normal(0, 0.1, n_ions), z]).ravel()
        r = minimize(energy, x0, method="BFGS", options={"gtol": 1e-12, "maxiter": 20000})
        x = r.x
        for h in (1e-2, 1e-3, 1e-4, 1e-5):
            for _ in range(50):
                moved = False
                for k in range(len(x)):
                    for sgn in (1, -1):
                        t = x.copy()
                        t[k] += sgn * h
                        if energy(t) < energy(x):
                            x, moved = t, True
                if not moved:
                    break
        if best is None or energy(x) < energy(best):
            best = x
    return best.reshape(-1, 3) * s


def test_four_plus_four_matches_brute_force():
    pot = calibrate_double_well(TWO_PI * 400e3, 4, 60e-6, CA40, "axial")
    cfg = solve_equilibrium(pot, CA40, (4, 4))
    ref = _brute_force(pot, 8, np.random.default_rng(3))
    a = cfg.positions[np.argsort(cfg.positions[:, 2])]
    b = ref[np.argsort(ref[:, 2])]
    assert np.max(np.abs(a - b)) < 1e-8


def test_two_ion_sqrt3_and_orthonormal():
    pot = harmonic()
    spec = normal_modes(solve_equilibrium(pot, CA40, (2, 0)), pot)
    z = spec.modes_on_axis("z")
    assert len(spec) == 6 and len(z) == 2
    assert spec.frequencies[z[1]] / spec.frequencies[z[0]] == pytest.approx(math.sqrt(3), rel=1e-9)
    v = spec.mode_vectors
    assert np.max(np.abs(v.T @ v - np.eye(6))) < 1e-9


def test_hessian_symmetric():
    pot = axial_dw(56e-6)
    h = potential_hessian(solve_equilibrium(pot, CA40, (3, 3)), pot)
    assert np.max(np.abs(h - h.T)) < 1e-12 * np.max(np.abs(h))


def test_one_plus_one_pair_vectors_and_splitting():
    d = 300e-6
    pot = axial_dw(d)
    spec = normal_modes(solve_equilibrium(pot, CA40, (1, 1)), pot)
    ip, oop = spec.lowest_pair("z")
    s = 1 / math.sqrt(2)
    v_ip, v_oop = spec.axial_component(ip), spec.axial_component(oop)
    assert np.abs(v_ip * np.sign(v_ip[0])) == pytest.approx([s, s], abs=1e-6)
    assert np.sign(v_ip[0]) == np.sign(v_ip[1])
    assert np.sign(v_oop[0]) != np.sign(v_oop[1])
    split = abs(spec.frequencies[ip] - spec.frequencies[oop])
    k = 2 * KE * CA40.charge**2 / d**3
    hi, lo = exact_pair_frequencies(k, 1, CA40, TWO_PI * 400e3)
    assert split == pytest.approx(hi - lo, rel=0.01)


def test_radial_four_plus_four_equal_participation():
    pot = build_double_well(curv(2e6), 50e-6, CA40, "radial", axial_curvature=curv(400e3))
    spec = normal_modes(solve_equilibrium(pot, CA40, (4, 4)), pot)
    ip, _ = spec.lowest_pair("z")
    v = spec.mode_vectors[:, ip].reshape(-1, 3)
    # lowest pair along the chain axis: x is the coupling direction here
    mags = np.abs(v[:, 0]) if np.abs(v[:, 0]).sum() > np.abs(v[:, 2]).sum() else np.abs(v[:, 2])
    assert mags == pytest.approx(np.full(8, 1 / math.sqrt(8)), rel=0.01)


def test_decoupled_at_two_mm():
    pot = axial_dw(2e-3)
    spec = normal_modes(solve_equilibrium(pot, CA40, (1, 1)), pot)
    pair = coupled_pair(spec, CA40, TWO_PI * 400e3, 1)
    assert pair.coupling_rate < TWO_PI * 1.0


def test_six_ion_axial_coupling():
    pair = coupling_point(6, 56e-6, TWO_PI * 400e3, CA40, "axial")["pair"]
    assert pair.coupling_rate / TWO_PI == pytest.approx(39e3, rel=0.15)


def test_radial_three_ions_51um():
    # the radial rows of the coupling table were taken near 238 kHz axial confinement
    pair = coupling_point(3, 51e-6, TWO_PI * 238e3, CA40, "radial")["pair"]
    assert pair.coupling_rate / TWO_PI == pytest.approx(6.4e3, rel=0.10)


@pytest.mark.parametrize("n,d,k_table", [(1, 29e-6, 61e3), (2, 41e-6, 61e3), (3, 51e-6, 77e3)])
def test_radial_interaction_constants(n, d, k_table):
    pair = coupling_point(n, d, TWO_PI * 262.2e3, CA40, "radial")["pair"]
    assert pair.k_int_ev_per_m2 == pytest.approx(k_table, rel=0.15)


def test_single_ion_calibration_exact():
    pot = calibrate_double_well(TWO_PI * 400e3, 1, 56e-6, CA40, "axial")
    assert -2 * pot.alpha == pytest.approx(curv(400e3), rel=1e-14)


def test_six_ion_calibration_self_consistent():
    pot = calibrate_double_well(TWO_PI * 400e3, 6, 56e-6, CA40, "axial")
    assert abs(single_well_com(pot, CA40, 6) / TWO_PI - 400e3) < 0.4


def test_anharmonic_calibration_depends_on_n():
    a1 = calibrate_double_well(TWO_PI * 400e3, 1, 56e-6, CA40, "axial").alpha
    a4 = calibrate_double_well(TWO_PI * 400e3, 4, 56e-6, CA40, "axial").alpha
    assert a1 != a4


def test_scan_ratio_and_reference_column():
    rows = coupling_scan([1, 6], [56e-6], TWO_PI * 400e3, "axial", CA40)
    by_n = {r["n"]: r for r in rows}
    assert all(r["status"] == "ok" for r in rows)
    pc1 = point_charge_coupling(1, CA40, TWO_PI * 400e3, 56e-6, "axial") / TWO_PI
    assert by_n[1]["point_charge_Hz"] == pytest.approx(pc1, rel=1e-14)
    assert by_n[6]["coupling_Hz"] / pc1 == pytest.approx(16, abs=3)


def test_radial_sublinear():
    rows = coupling_scan([1, 3], [51e-6], TWO_PI * 400e3, "radial", CA40)
    c = {r["n"]: r["coupling_Hz"] for r in rows}
    assert c[3] / c[1] < 3


def _lowest(rows):
    out = {}
    for r in rows:
        if r["mode_index"] == 0:
            out[r["d_um"]] = r["splitting_Hz"]
    return out


def test_splitting_inverse_cube():
    ds = np.array([150e-6, 200e-6, 300e-6, 400e-6])
    s = _lowest(mode_splitting_scan(ds, 2, CA40, "axial", TWO_PI * 400e3))
    slope = np.polyfit(np.log(ds), np.log([s[round(d * 1e6, 9)] for d in ds]), 1)[0]
    assert slope == pytest.approx(-3, rel=0.05)


def test_lowest_pair_splits_most_and_axial_beats_radial():
    ax = mode_splitting_scan([56e-6], 4, CA40, "axial", TWO_PI * 400e3)
    rad = mode_splitting_scan([56e-6], 4, CA40, "radial", TWO_PI * 400e3)
    sa = [r["splitting_Hz"] for r in sorted(ax, key=lambda r: r["frequency_Hz"])]
    assert sa[0] == max(sa)
    assert sa[0] > _lowest(rad)[56.0]


def test_splitting_monotone_in_d():
    ds = [40e-6, 56e-6, 80e-6, 120e-6]
    rows = mode_splitting_scan(ds, 3, CA40, "axial", TWO_PI * 400e3)
    for k in range(3):
        s = [r["splitting_Hz"] for r in rows if r["mode_index"] == k]
        assert len(s) == len(ds) and np.all(np.diff(s) < 0)


def test_decoupling_limit_point_charge():
    for n in (1, 2, 3):
        lz = chain_length_scale(curv(400e3), CA40)
        d = 20 * max(lz * n, 10e-6)
        pair = coupling_point(n, d, TWO_PI * 400e3, CA40, "axial",
                              com_definition="single_well", separation="potential")["pair"]
        pc = point_charge_coupling(n, CA40, TWO_PI * 400e3, d, "axial")
        assert pair.coupling_rate == pytest.approx(pc, rel=0.02)


def test_bias_field_tunes_wells_oppositely():
    pot = axial_dw(56e-6)

    def well_freqs(e):
        p = pot.with_(bias_field=e)
        spec = normal_modes(solve_equilibrium(p, CA40, (1, 1)), p)
        cfg = spec.config
        z = spec.modes_on_axis("z")
        # at large bias the modes localize, so sort by the well that dominates
        out = {}
        for l in z:
            v = spec.axial_component(l)
            out[cfg.well_assignment[int(np.argmax(np.abs(v)))]] = spec.frequencies[l]
        return out

    e = 2.0
    hi, lo = well_freqs(e), well_freqs(-e)
    d1, d2 = hi[1] - lo[1], hi[2] - lo[2]
    assert np.sign(d1) == -np.sign(d2) != 0


def _section61_radial():
    return build_double_well(curv(2e6), 1.0, CA40, "radial", {"omega_y": TWO_PI * 2.1e6},
                             axial_curvature=curv(0.613e6))


def test_equidistance_section_parameters():
    base = _section61_radial()
    lz = chain_length_scale(base.phi_z, CA40)
    pot = build_double_well(curv(2e6), lz * 31 / 6, CA40, "radial", {"omega_y": TWO_PI * 2.1e6},
                            axial_curvature=base.phi_z)
    res = optimize_quartic_equidistance(4, pot, CA40)
    assert res.lz_over_dz == pytest.approx(0.43, abs=0.02)
    assert res.spacing_inhomogeneity < res.baseline_inhomogeneity


def test_equidistance_baseline_is_harmonic_crystal():
    pot = build_double_well(curv(2e6), 200e-6, CA40, "radial", {"omega_y": TWO_PI * 2.1e6},
                            axial_curvature=curv(0.613e6))
    # four-ion harmonic crystal: +-0.4544, +-1.4368 in units of the length scale
    assert _in_well_inhomogeneity(pot, CA40, 4, False) == pytest.approx(
        (1.4368 - 0.4544) / 0.9088 - 1, abs=2e-3)
    # three ions in a harmonic well are already equidistant
    assert _in_well_inhomogeneity(pot, CA40, 3, False) < 1e-9


def test_equidistance_single_well_improves():
    pot = build_double_well(curv(2e6), 200e-6, CA40, "radial", {"omega_y": TWO_PI * 2.1e6},
                            axial_curvature=curv(0.613e6))
    res = optimize_quartic_equidistance(5, pot, CA40, two_wells=False)
    assert res.spacing_inhomogeneity < res.baseline_inhomogeneity
    assert gap_inhomogeneity(np.array([0.0, 1.0, 2.0])) == 0.0
