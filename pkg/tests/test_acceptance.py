import math
import subprocess
import sys
import time

import pytest

from qsalab import acceptance

from conftest import ACCEPTANCE

RUNTIME_S = {1: 1, 2: 120, 3: 1, 4: 10, 5: 30, 6: 60, 7: 300, 8: 120, 9: 5, 10: 300,
             11: 60, 12: 5}


def _run(i, **kw):
    ACCEPTANCE[i] = False
    t0 = time.perf_counter()
    r = acceptance.CRITERIA[i](**kw)
    elapsed = time.perf_counter() - t0
    print(f"criterion {i}: {elapsed:.1f} s {r['values']}")
    return r, elapsed


def _record(i, r, elapsed, ok):
    ACCEPTANCE[i] = ok and all(r["checks"].values()) and elapsed < RUNTIME_S[i]
    failed = [k for k, v in r["checks"].items() if not v]
    assert not failed, failed
    assert ok
    assert elapsed < RUNTIME_S[i], f"{elapsed:.1f} s"


def test_criterion_1_point_charge():
    r, t = _run(1)
    v = r["values"]
    _record(1, r, t, abs(v["axial_Hz"] / 2.5e3 - 1) <= 0.02 and abs(v["radial_Hz"] / 7.0e3 - 1) <= 0.07)


def test_criterion_2_coupling_scaling():
    r, t = _run(2)
    v = r["values"]
    _record(2, r, t, abs(v["n6_Hz"] / 39e3 - 1) <= 0.15 and abs(v["ratio_to_point_charge"] - 16) <= 3
            and v["axial_log_slope"] > 1.3 and v["radial_log_slope"] < 1)


def test_criterion_3_mode_oracle():
    r, t = _run(3)
    v = r["values"]
    _record(3, r, t, abs(v["ratio_minus_sqrt3"]) < 1e-9 and v["n_modes"] == 18
            and v["orthonormality"] < 1e-9)


def test_criterion_4_crossing_fit():
    r, t = _run(4, seed=7)
    errs = r["values"]["relative_error"]
    _record(4, r, t, len(errs) == 3 and all(abs(e) <= 0.02 for e in errs.values()))


def test_criterion_5_heating():
    r, t = _run(5)
    v = r["values"]
    _record(5, r, t, v["stretch_over_com_homogeneous"] < 1e-10
            and all(abs(x - 1) <= 0.01 for x in v["com_rate_over_N"].values())
            and 8 <= v["synthetic_com_str_ratio"] <= 32)


def test_criterion_6_exchange_dynamics():
    r, t = _run(6)
    v = r["values"]
    _record(6, r, t, abs(v["max_occupation_at_kHz"] + 6) <= 1
            and abs(v["max_contrast_at_kHz"] + 7) <= 1
            and abs(v["rate_at_-7.5kHz_Hz"] - 10e3) <= 1e3)


def test_criterion_7_ms_gate():
    r, t = _run(7)
    inf, ref = r["values"]["infidelity"], {1: 0.13e-2, 2: 0.35e-2, 3: 0.2e-2}
    _record(7, r, t, inf[1] < inf[3] < inf[2] and 2.0 <= inf[2] / inf[1] <= 3.5
            and 1.2 <= inf[3] / inf[1] <= 2.3
            and all(abs(inf[c] / ref[c] - 1) <= 0.5 for c in ref)
            and r["values"]["ideal"] < 1e-4)


def test_criterion_8_ms_dephasing():
    r, t = _run(8)
    v = r["values"]
    _record(8, r, t, abs(v["bell_fidelity"] - 0.85) <= 0.04
            and v["gate_time_us"] == pytest.approx(190, rel=0.01))


def test_criterion_9_sequence():
    r, t = _run(9)
    v = r["values"]
    _record(9, r, t, v["bell_fidelity"] > 0.999 and v["visibility"] > 0.999)


def test_criterion_10_lightshift():
    r, t = _run(10)
    v = r["values"]
    _record(10, r, t, abs(v["2x2_even"] - 0.41) <= 0.05 and v["2x4_even"] < 0.01
            and abs(v["2x4_odd"] - 0.17) <= 0.05 and v["2x4_odd_echo"] >= 0.98
            and abs(v["lz_over_dz"] - 0.43) <= 0.02)


def test_criterion_11_pseudopotential():
    r, t = _run(11)
    v = r["values"]
    om = v["omega_x_Hz"]
    _record(11, r, t, not v["merged"] and abs(v["separation_um"] / 110 - 1) <= 0.15
            and all(b < a for a, b in zip(om, om[1:])) and v["mirror_asymmetry"] < 1e-9)


def test_criterion_12_qec():
    r, t = _run(12)
    v = r["values"]
    _record(12, r, t, v["params"] == {"2": [20, 2, 4], "3": [52, 2, 6]}
            and v["k"] == {"2": 2, "3": 2})


def test_criterion_13_determinism(tmp_path):
    ACCEPTANCE[13] = False
    runs = []
    for name in ("A", "B"):
        out = tmp_path / name
        p = subprocess.run([sys.executable, "-m", "qsalab", "repro-all", "--seed", "7",
                            "--out", str(out)], capture_output=True, text=True)
        assert p.returncode == 0, p.stderr
        runs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
    a, b = runs
    assert {n for n in a if n.endswith((".csv", ".json"))} >= {"acceptance.csv",
                                                             "acceptance_report.json"}
    ACCEPTANCE[13] = a == b
    assert a == b
