"""Command-line recipes: JSON config in, CSV + JSON artifacts out.

Exit codes: 0 success, 2 config/schema error, 3 numerical failure.  Artifacts
are built in memory and only written once the whole command has succeeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .core import SPECIES, TWO_PI, DomainError
from . import acceptance, crossing, dynamics, heating, pseudopotential, qec_layout, statics
from .quantum import lightshift, ms

log = logging.getLogger("qsalab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("coupling-scan", "avoided-crossing", "mode-structure", "heating", "exchange",
            "ms-gate", "lightshift", "pseudo", "qec", "repro-all")


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    def __init__(self, failures):
        super().__init__(f"{len(failures)} failed point(s)")
        self.failures = failures


# ---------------------------------------------------------------- serialization

def _clean(x):
    """JSON-safe copy: numpy to python, non-finite floats to None, keys to str."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(rows, columns) -> str:
    """Header row, units row, then one row per record; floats as repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c for c, _ in columns])
    w.writerow([u for _, u in columns])
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c, _ in columns])
    return buf.getvalue()


def plot_hints(**panels) -> str:
    return dumps_json(panels)


# ---------------------------------------------------------------- config

def load_schema() -> dict:
    return json.loads(resources.files("qsalab").joinpath("schema/config.schema.json").read_text())


def default_config(command: str) -> dict:
    return json.loads(resources.files("qsalab").joinpath(f"configs/{command}.json").read_text())


def validate(cfg) -> list[str]:
    """Schema errors as "JSON-pointer: message" strings, in a stable order."""
    v = jsonschema.Draft202012Validator(load_schema())
    errs = []
    for e in v.iter_errors(cfg):
        errs.append(("/" + "/".join(str(p) for p in e.absolute_path), e.message))
    return [f"{p}: {m}" for p, m in sorted(set(errs))]


def load_config(command: str, path: str | None) -> dict:
    if path is None:
        cfg = default_config(command)
    else:
        try:
            cfg = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError([f"/: cannot read {path}: {exc.strerror}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"/: invalid JSON at line {exc.lineno} column {exc.colno}: "
                               f"{exc.msg}"]) from exc
    errs = validate(cfg)
    if errs:
        raise ConfigError(errs)
    if cfg["command"] != command:
        raise ConfigError([f"/command: config is for {cfg['command']!r}, not {command!r}"])
    cfg.setdefault("params", {})
    return cfg


def _failed(rows, key="status"):
    out = []
    for r in rows:
        s = r.get(key, "ok")
        if s != "ok" or r.get("error"):
            out.append({k: v for k, v in r.items()})
    return out


# ---------------------------------------------------------------- commands
# each returns {filename: text}

def cmd_coupling_scan(p, seed, jobs):
    orient = p.get("orientation", "axial")
    rows = statics.coupling_scan(p.get("n", [1, 2, 3, 4, 5, 6]),
                                 [d * 1e-6 for d in p.get("d_um", [56])],
                                 TWO_PI * 1e3 * p.get("target_com_kHz", 400), orient,
                                 SPECIES[p.get("species", "40Ca+")], jobs=jobs,
                                 com_definition=p.get("com_definition", "double_well_mean"),
                                 separation=p.get("separation", "chain_center"))
    cols = [("n", "1"), ("d_um", "um"), ("omega_com_Hz", "Hz"), ("omega_str_Hz", "Hz"),
            ("coupling_Hz", "Hz"), ("k_int_eV_per_m2", "eV/m^2"), ("point_charge_Hz", "Hz"),
            ("status", "")]
    return rows, {"coupling_scan.csv": to_csv(rows, cols),
                  "plot_hints.json": plot_hints(coupling_scan={
                      "file": "coupling_scan.csv", "x": "d_um", "y": "coupling_Hz",
                      "group": "n", "xscale": "log", "yscale": "log",
                      "xlabel": "well separation d (um)", "ylabel": "coupling rate (Hz)",
                      "title": f"{orient} coupling"})}


def cmd_avoided_crossing(p, seed, jobs):
    slope = TWO_PI * 1e3 * p.get("slope_kHz", 10.0)
    wm = TWO_PI * 1e3 * p.get("omega_m_kHz", 400.0)
    center = p.get("center", 1.11)
    pts_rows, fit_rows = [], []
    for k, oc in enumerate(p.get("omega_c_kHz", [5, 19, 39])):
        om = TWO_PI * 1e3 * oc
        fields = acceptance.crossing_fields(om, slope, center, p.get("n_fields", 41),
                                            p.get("span", 4.0))
        g, w, br = crossing.crossing_points(fields, slope, center, wm, om, n=p.get("n", 1),
                                            noise_sd=p.get("noise_rel", 0.01) * om,
                                            seed=seed + k)
        pts_rows += [{"omega_c_kHz": float(oc), "field": float(a), "branch": int(b),
                      "frequency_Hz": float(f / TWO_PI)} for a, f, b in zip(g, w, br)]
        try:
            fit = crossing.fit_avoided_crossing(g, w, br)
            fit_rows.append({"omega_c_kHz": float(oc), "fit_kHz": fit.omega_c / TWO_PI / 1e3,
                             "relative_error": fit.omega_c / om - 1,
                             "d_center": fit.d_center, "status": "ok"})
        except (crossing.FitError, DomainError, RuntimeError) as exc:
            fit_rows.append({"omega_c_kHz": float(oc), "fit_kHz": math.nan,
                             "relative_error": math.nan, "d_center": math.nan,
                             "status": f"error: {exc}"})
    return fit_rows, {
        "crossing_points.csv": to_csv(pts_rows, [("omega_c_kHz", "kHz"), ("field", "V/m"),
                                                 ("branch", "1"), ("frequency_Hz", "Hz")]),
        "crossing_fits.csv": to_csv(fit_rows, [("omega_c_kHz", "kHz"), ("fit_kHz", "kHz"),
                                               ("relative_error", "1"), ("d_center", "V/m"),
                                               ("status", "")]),
        "plot_hints.json": plot_hints(crossing_points={
            "file": "crossing_points.csv", "x": "field", "y": "frequency_Hz",
            "group": ["omega_c_kHz", "branch"], "kind": "scatter",
            "xlabel": "field (V/m)", "ylabel": "mode frequency (Hz)"})}


def cmd_mode_structure(p, seed, jobs):
    rows = statics.mode_splitting_scan([d * 1e-6 for d in p.get("d_um", [40, 56, 80, 120])],
                                       p.get("n", 4), SPECIES[p.get("species", "40Ca+")],
                                       p.get("orientation", "axial"),
                                       TWO_PI * 1e3 * p.get("single_ion_kHz", 400))
    cols = [("d_um", "um"), ("mode_index", "1"), ("frequency_Hz", "Hz"),
            ("splitting_Hz", "Hz"), ("status", "")]
    return rows, {"mode_structure.csv": to_csv(rows, cols),
                  "plot_hints.json": plot_hints(mode_structure={
                      "file": "mode_structure.csv", "x": "d_um", "y": "splitting_Hz",
                      "group": "mode_index", "yscale": "log",
                      "xlabel": "well separation d (um)", "ylabel": "pair splitting (Hz)"})}


def cmd_heating(p, seed, jobs):
    h = 1e-6 * p.get("height_um", 80)
    geom = heating.synthetic_geometry(h, 1e-6 * p.get("rf_separation_um", 29),
                                      1e-6 * p.get("dc_segment_um", 100))
    kw = {"omega_z": TWO_PI * 1e3 * p["omega_z_kHz"]} if "omega_z_kHz" in p else {}
    rows = heating.heating_ratio_scan([d * 1e-6 for d in p.get("d_um", [8, 16, 29, 60, 160])],
                                      geom, p.get("n_per_well", 1), h,
                                      heating.NoiseModel(p.get("psd_V2_per_Hz", 1e-18)), **kw)
    cols = [("d_um", "um"), ("gamma_com", "quanta/s"), ("gamma_str", "quanta/s"),
            ("ratio", "1")]
    return rows, {"heating_ratio.csv": to_csv(rows, cols),
                  "plot_hints.json": plot_hints(heating_ratio={
                      "file": "heating_ratio.csv", "x": "d_um", "y": "ratio",
                      "xscale": "log", "yscale": "log", "xlabel": "well separation d (um)",
                      "ylabel": "COM / stretch heating rate"})}


def cmd_exchange(p, seed, jobs):
    g = p.get("detuning_kHz", {"start": -12, "stop": 12, "step": 0.5})
    n = int(math.floor((g["stop"] - g["start"]) / g["step"] + 1e-9)) + 1
    if n < 1:
        raise ConfigError(["/params/detuning_kHz: stop must not be below start"])
    grid = 1e3 * (g["start"] + g["step"] * np.arange(n))
    t_end = 1e-6 * p.get("t_end_us", 450)
    rows = dynamics.detuning_scan(grid, t_end, jobs=jobs)
    occ = np.array([r["max_occ2"] for r in rows])
    con = np.array([r["contrast"] for r in rows])
    if np.isnan(occ).all():
        raise NumericalFailure(_failed(rows))
    df = p.get("rate_at_kHz", -7.5)
    rate = dynamics.apparent_exchange_rate(dynamics.ExchangeConfig.switched(df * 1e3), t_end)
    summary = {"max_occupation_at_kHz": rows[int(np.nanargmax(occ))]["delta_f_kHz"],
               "max_contrast_at_kHz": rows[int(np.nanargmax(con))]["delta_f_kHz"],
               "rate_at_kHz": df, "apparent_rate_Hz": rate / TWO_PI}
    cols = [("delta_f_kHz", "kHz"), ("contrast", "quanta"), ("max_occ2", "quanta"),
            ("status", "")]
    return rows, {"exchange_scan.csv": to_csv(rows, cols),
                  "exchange_summary.json": dumps_json(summary),
                  "plot_hints.json": plot_hints(exchange_scan={
                      "file": "exchange_scan.csv", "x": "delta_f_kHz",
                      "y": ["contrast", "max_occ2"], "xlabel": "final detuning (kHz)",
                      "ylabel": "well-2 occupation (quanta)"})}


def cmd_ms_gate(p, seed, jobs):
    oc = TWO_PI * 1e3 * p.get("omega_c_kHz", 5.2)
    rows = ms.ms_table(oc, tuple(p.get("heating", [2.6, 18.0])), tuple(p.get("cases", [1, 2, 3])))
    out = {"ms_table.csv": to_csv(rows, [("case", "1"), ("gate_time_us", "us"),
                                         ("omega_sb_kHz", "kHz"), ("delta_str_kHz", "kHz"),
                                         ("delta_com_kHz", "kHz"), ("infidelity", "1")]),
           "plot_hints.json": plot_hints(ms_table={
               "file": "ms_table.csv", "x": "case", "y": "infidelity", "kind": "bar",
               "xlabel": "drive case", "ylabel": "Bell-state infidelity"})}
    if "dephasing" in p:
        dp = p["dephasing"]
        cfg = ms.ms_case(1, TWO_PI * 1e3 * dp.get("omega_c_kHz", 5.3),
                         dephasing_time=1e-6 * dp["tau_us"],
                         dephasing_model=dp.get("model", "collective"))
        out["ms_dephasing.json"] = dumps_json({
            "tau_us": dp["tau_us"], "model": cfg.dephasing_model,
            "gate_time_us": cfg.gate_time * 1e6, "bell_fidelity": 1 - ms.ms_infidelity(cfg)})
    return rows, out


def cmd_lightshift(p, seed, jobs):
    span, n_grid = p.get("span", 2.5), p.get("n_grid", 201)
    rows, peaks = [], {}
    for npw in p.get("n_per_well", [2, 4]):
        geom = lightshift.lightshift_geometry(npw)
        variants = [("even", False, None), ("odd", True, None)]
        if npw == 4:
            variants.append(("odd_echo", True, (3, 4, 7, 8)))
        for name, odd, echo in variants:
            cfg = lightshift.default_config(geom, odd=odd, spin_echo=echo)
            u = lightshift.omega_unit(cfg, geom)
            label = f"2x{npw}_{name}"
            for r in lightshift.fidelity_scan_vs_omega(cfg, geom,
                                                       np.linspace(0, span * u, n_grid)[1:],
                                                       label):
                r["omega_over_unit"] = r["omega_Hz"] * TWO_PI / u
                rows.append(r)
            pk = lightshift.peak_fidelity(cfg, geom, span)
            peaks[label] = {"fidelity": pk["fidelity"], "omega_over_unit": pk["omega"] / u,
                            "gate_time_us": pk["gate_time"] * 1e6}
        if geom.lz_over_dz is not None:
            peaks[f"2x{npw}_lz_over_dz"] = geom.lz_over_dz
    cols = [("variant", ""), ("omega_over_unit", "1"), ("omega_Hz", "Hz"), ("fidelity", "1")]
    return [], {"lightshift_scan.csv": to_csv(rows, cols),
                "lightshift_peaks.json": dumps_json(peaks),
                "plot_hints.json": plot_hints(lightshift_scan={
                    "file": "lightshift_scan.csv", "x": "omega_over_unit", "y": "fidelity",
                    "group": "variant", "xlabel": "Omega / Omega_unit",
                    "ylabel": "fidelity with ideal pair gates"})}


def cmd_pseudo(p, seed, jobs):
    g = pseudopotential.split_rf_geometry(1e-6 * p.get("center_width_um", 75),
                                          1e-6 * p.get("gap_um", 115),
                                          1e-6 * p.get("rail_width_um", 255),
                                          v_rf2=p.get("v_rf2", 70.0))
    zetas = p.get("zeta", [round(0.8 + 0.02 * i, 4) for i in range(21)])
    rows = pseudopotential.separation_vs_ratio(g, zetas)
    cols = [("zeta", "1"), ("separation_um", "um"), ("height_um", "um"),
            ("omega_x_Hz", "Hz"), ("merged", "")]
    return rows, {"pseudo_scan.csv": to_csv(rows, cols),
                  "plot_hints.json": plot_hints(pseudo_scan={
                      "file": "pseudo_scan.csv", "x": "zeta", "y": "separation_um",
                      "y2": "omega_x_Hz", "xlabel": "V_RF1 / V_RF2",
                      "ylabel": "RF-null separation (um)"})}


def cmd_qec(p, seed, jobs):
    if "protocol" in p:
        d = p.get("d_c", [3])[0]
        res = qec_layout.resource_table(p["protocol"], d)
        return [], {"qec_resource.json": dumps_json(res)}, res
    out = {"qec_table.json": dumps_json(qec_layout.table_rows())}
    summary = {}
    for d in p.get("d_c", [2, 3]):
        lay = qec_layout.concatenated_stabilizers(d)
        chk = qec_layout.check_layout(lay)
        summary[str(d)] = {"params": list(lay.code.params), **chk, "wells": len(lay.wells),
                           "stabilizers": len(lay.stabilizers)}
        out[f"layout_dc{d}.json"] = qec_layout.layout_json(lay) + "\n"
        out[f"layout_dc{d}.dot"] = qec_layout.layout_dot(lay)
    out["qec_summary.json"] = dumps_json(summary)
    return [], out


def cmd_repro_all(p, seed, jobs):
    results = acceptance.run(p.get("criteria"), seed=seed, jobs=jobs,
                             log=lambda s: print(s, file=sys.stderr, flush=True))
    rows = [{"criterion": r["id"], "passed": r["passed"],
             "failed_checks": "; ".join(k for k, v in r["checks"].items() if not v)}
            for r in results]
    crashed = [r for r in results if "error" in r["values"]]
    if crashed:
        raise NumericalFailure([{"criterion": r["id"], "error": r["values"]["error"]}
                                for r in crashed])
    report = {"seed": seed, "all_passed": all(r["passed"] for r in results),
              "criteria": {str(r["id"]): {"passed": r["passed"], "checks": r["checks"],
                                          "values": r["values"]} for r in results}}
    return [], {"acceptance.csv": to_csv(rows, [("criterion", "1"), ("passed", ""),
                                                ("failed_checks", "")]),
                "acceptance_report.json": dumps_json(report)}


HANDLERS = {"coupling-scan": cmd_coupling_scan, "avoided-crossing": cmd_avoided_crossing,
            "mode-structure": cmd_mode_structure, "heating": cmd_heating,
            "exchange": cmd_exchange, "ms-gate": cmd_ms_gate, "lightshift": cmd_lightshift,
            "pseudo": cmd_pseudo, "qec": cmd_qec, "repro-all": cmd_repro_all}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsalab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run config (default: packaged config)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="RNG seed (default: config or 7)")
        sp.add_argument("--jobs", type=int, help="worker threads")
        sp.add_argument("--allow-failures", action="store_true",
                        help="write artifacts even if some points failed (still exit 3)")
        if name == "qec":
            sp.add_argument("--protocol", choices=[x.value for x in qec_layout.Protocol])
            sp.add_argument("--d-c", type=int, dest="d_c")
    return ap


def write_artifacts(out_dir: Path, files: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        (out_dir / name).write_text(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.command, args.config)
        if args.command == "qec":
            if args.protocol:
                cfg["params"]["protocol"] = args.protocol
            if args.d_c is not None:
                cfg["params"]["d_c"] = [args.d_c]
            errs = validate(cfg)
            if errs:
                raise ConfigError(errs)
        seed = args.seed if args.seed is not None else cfg.get("seed", 7)
        jobs = args.jobs if args.jobs is not None else cfg.get("jobs", 1)
        if jobs < 1:
            raise ConfigError(["/jobs: must be at least 1"])
    except ConfigError as exc:
        for line in exc.args[0]:
            print(line, file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out or cfg.get("out") or f"qsalab-out/{args.command}")
    files = None
    try:
        res = HANDLERS[args.command](cfg["params"], seed, jobs)
        rows, files = res[0], res[1]
        bad = _failed(rows)
        if bad:
            raise NumericalFailure(bad)
    except ConfigError as exc:
        for line in exc.args[0]:
            print(line, file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        for f in exc.failures:
            print("failed point: " + json.dumps(_clean(f), sort_keys=True), file=sys.stderr)
        if args.allow_failures and files is not None:
            write_artifacts(out_dir, files)
        return EXIT_NUMERIC
    except (DomainError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_artifacts(out_dir, files)
    if len(res) > 2:
        print(dumps_json(res[2]), end="")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))
