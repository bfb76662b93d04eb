import math

import numpy as np
import pytest

from qsalab.core import TWO_PI, DomainError
from qsalab.quantum import (ClosureError, HilbertSpec, QuantumState, appendix_c_sequence,
                            basis_state, bell_target, default_config, exchange_coupling,
                            lightshift_coupling_matrix, lightshift_evolve, lightshift_geometry,
                            ms_case, ms_evolve, populations_and_parity, sideband_pulse)
from qsalab.quantum.lightshift import gate_time, ideal_state, omega_unit
from qsalab.quantum.states import bell_fidelity

OC = TWO_PI * 5.2e3


@pytest.mark.parametrize("case", [1, 2, 3])
def test_ideal_ms_gate(case):
    cfg = ms_case(case, OC)
    st = ms_evolve(cfg)
    assert bell_fidelity(st.qubit_density()) >= 0.9999
    # populations split evenly between SS and DD
    p = populations_and_parity(st)
    assert p["P_SS"] == pytest.approx(0.5, abs=1e-3) and p["P_DD"] == pytest.approx(0.5, abs=1e-3)


def test_ms_case_parameters():
    c1, c2, c3 = (ms_case(c, TWO_PI * 5.3e3) for c in (1, 2, 3))
    assert c1.gate_time == pytest.approx(190e-6, rel=0.01)
    assert c3.gate_time == pytest.approx(2 * c1.gate_time, rel=1e-12)
    assert c1.omega_sb / TWO_PI == pytest.approx(3.7e3, rel=0.05)
    assert c2.omega_sb == pytest.approx(c1.omega_sb, rel=1e-12)
    assert c3.omega_sb / TWO_PI == pytest.approx(0.9e3, rel=0.1)


def test_open_loops_rejected():
    cfg = ms_case(1, OC)
    with pytest.raises(ClosureError):
        cfg.with_(gate_time=cfg.gate_time * 1.1)
    with pytest.raises(DomainError):
        ms_case(4, OC)


def test_bell_and_mixed_metrics():
    bell = np.outer(bell_target(), bell_target().conj())
    p = populations_and_parity(bell)
    assert p["P_SS"] + p["P_DD"] == pytest.approx(1)
    assert p["visibility"] == pytest.approx(1, abs=1e-12)
    assert p["bell_fidelity"] == pytest.approx(1, abs=1e-12)
    # Bell populations with all coherence lost
    mixed = populations_and_parity(np.diag([0.5, 0.0, 0.0, 0.5]))
    assert mixed["visibility"] == pytest.approx(0, abs=1e-12)
    assert mixed["bell_fidelity"] == pytest.approx(0.5)
    maximally = populations_and_parity(np.eye(4) / 4)
    assert maximally["visibility"] == pytest.approx(0, abs=1e-12)
    assert maximally["bell_fidelity"] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        populations_and_parity(np.eye(2))


SPEC1 = HilbertSpec(1, (4,))


def _amp(state, q, n):
    return state.data[np.ravel_multi_index([q, n], SPEC1.dims)]


def test_blue_sideband_pi_adds_phonon():
    st = sideband_pulse(basis_state(SPEC1, "S", (0,)), 0, 0, "bsb", math.pi)
    assert abs(_amp(st, 1, 1)) == pytest.approx(1, abs=1e-12)


def test_carrier_half_pulses_compose():
    s0 = basis_state(SPEC1, "S", (1,))
    two = sideband_pulse(sideband_pulse(s0, 0, None, "carrier", math.pi / 2), 0, None, "carrier",
                         math.pi / 2)
    one = sideband_pulse(s0, 0, None, "carrier", math.pi)
    assert np.allclose(two.data, one.data, atol=1e-12)
    assert abs(_amp(one, 1, 1)) == pytest.approx(1, abs=1e-12)


def test_red_sideband_on_ground_is_identity():
    s0 = basis_state(SPEC1, "S", (0,))
    st = sideband_pulse(s0, 0, 0, "rsb", math.pi)
    assert np.allclose(st.data, s0.data, atol=1e-14)
    with pytest.raises(DomainError):
        sideband_pulse(s0, 0, 0, "xsb", math.pi)


SPEC2 = HilbertSpec(0, (3, 3))


def _modes(state):
    return state.data.reshape(3, 3)


@pytest.mark.parametrize("fraction,p10,p01", [(0.5, 0.5, 0.5), (1.0, 0.0, 1.0), (2.0, 1.0, 0.0)])
def test_exchange_beam_splitter(fraction, p10, p01):
    oc = TWO_PI * 5e3
    s0 = basis_state(SPEC2, "", (1, 0))
    st = exchange_coupling(s0, (0, 1), oc, fraction * math.pi / oc)
    m = _modes(st)
    assert abs(m[1, 0]) ** 2 == pytest.approx(p10, abs=1e-12)
    assert abs(m[0, 1]) ** 2 == pytest.approx(p01, abs=1e-12)
    if fraction == 2.0:
        assert abs(np.vdot(s0.data, st.data)) == pytest.approx(1, abs=1e-12)


def test_exchange_sequence_ideal_and_missets():
    ideal = appendix_c_sequence()
    assert ideal["bell_fidelity"] > 0.999 and ideal["visibility"] > 0.999
    off = appendix_c_sequence(exchange_scale=0.8)
    assert off["bell_fidelity"] < ideal["bell_fidelity"]
    deph = appendix_c_sequence(dephasing_time=700e-6, dephasing_wait=190e-6)
    assert deph["bell_fidelity"] < ideal["bell_fidelity"]


def test_quantum_state_json_round_trip():
    st = appendix_c_sequence()["state"]
    back = QuantumState.from_json(st.to_json())
    assert np.array_equal(back.data, st.data) and back.spec == st.spec


@pytest.fixture(scope="module")
def geom22():
    return lightshift_geometry(2)


def test_odd_p_cancels_in_string_pairs(geom22):
    j = lightshift_coupling_matrix(default_config(geom22, 1.0, odd=True), geom22)
    scale = np.abs(j).max()
    # qubits 0,1 share a string; 0,2 are partners across the wells; 0,3 are diagonal
    assert abs(j[0, 1]) < 1e-9 * scale and abs(j[2, 3]) < 1e-9 * scale
    assert abs(j[0, 3]) < 1e-9 * scale and abs(j[1, 2]) < 1e-9 * scale
    assert abs(j[0, 2]) == pytest.approx(scale) or abs(j[1, 3]) == pytest.approx(scale)


def test_even_p_couples_all_pairs(geom22):
    j = lightshift_coupling_matrix(default_config(geom22, 1.0, odd=False), geom22)
    off = np.abs(j[~np.eye(4, dtype=bool)])
    assert off.min() > 1e-3 * off.max()


def test_zz_phase_periodicity():
    j = np.array([[0.0, 0.7], [0.7, 0.0]])
    t = 1.3
    f0 = lightshift_evolve(j, t)["fidelity"]
    shifted = j + np.array([[0, 1], [1, 0]]) * math.pi / t
    assert lightshift_evolve(shifted, t)["fidelity"] == pytest.approx(f0, abs=1e-12)
    # partner phase pi/4 gives the target state exactly
    assert lightshift_evolve(np.array([[0, 1], [1, 0]]) * math.pi / 8, 1.0)["fidelity"] == \
        pytest.approx(1, abs=1e-12)


def test_peak_omega_scales_with_inverse_sqrt_coupling(geom22):
    cfg = default_config(geom22, 1.0, odd=False)
    t = gate_time(cfg, geom22.axial_pair()[0])
    j1 = lightshift_coupling_matrix(cfg, geom22)
    u = omega_unit(cfg, geom22)
    grid = np.linspace(0.01, 2.5, 2500) * u

    def peak(j):
        f = [lightshift_evolve(j * om**2, t)["fidelity"] for om in grid]
        return grid[int(np.argmax(f))]

    assert peak(4 * j1) == pytest.approx(peak(j1) / 2, rel=2e-3)


def test_echo_not_worse_at_optimum():
    g = lightshift_geometry(4)
    cfg = default_config(g, 1.0, odd=True)
    t = gate_time(cfg, g.axial_pair()[0])
    j1 = lightshift_coupling_matrix(cfg, g)
    u = omega_unit(cfg, g)
    grid = np.linspace(0.01, 2.5, 500) * u
    echo = [lightshift_evolve(j1 * om**2, t, (3, 4, 7, 8))["fidelity"] for om in grid]
    i = int(np.argmax(echo))
    plain = lightshift_evolve(j1 * grid[i] ** 2, t)["fidelity"]
    assert echo[i] >= plain


def test_ideal_state_normalized():
    for n in (2, 4):
        assert np.linalg.norm(ideal_state(n)) == pytest.approx(1)
    with pytest.raises(DomainError):
        lightshift_evolve(np.zeros((3, 3)), 1.0)
