"""Declarative scenario runner.

A scenario JSON file describes a trap, trapping sites, integrated beams,
drives, and an optional simulation/fit plan.  Running it executes the steps
in order -- solve wells, (optional) shuttle, beam powers and intensities,
per-site Rabi rates, shot-noise trace simulation, fits, derived ratios --
and writes all artifacts to the output directory.

Determinism contract: all randomness flows from the root seed through
labeled sub-streams (one per trace), so identical (config, seed) pairs
reproduce every numeric output bitwise, and adding a step never perturbs
another step's draws.
"""

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binom

from . import __version__
from .analysis import RabiTrace, crosstalk_intensity_ratio, fit_rabi
from .dynamics import DriveSpec, MotionalMode, rabi_carrier_population
from .errors import ScenarioError
from .fivewire import demo_trap
from .basis_file import load_basis
from .photonics import BeamModel, LossChain, SplitterSpec, beam_intensity, loss_budget, split
from .trap_model import YB171
from .voltage_solver import WellSpec, build_constraints, solve_voltages, shuttle_waveform
from .units import khz_to_rad_s, mhz_to_rad_s


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: JSON-pointer path plus message."""

    pointer: str
    message: str

    def as_json(self):
        return json.dumps({"pointer": self.pointer, "message": self.message},
                          sort_keys=True)


def child_seed(root_seed, label):
    """Deterministic 64-bit sub-seed for a labeled step."""
    digest = hashlib.sha256(f"{root_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "seed", "trap", "solver", "sites", "shuttle", "beams",
             "drives", "crosstalk", "simulate", "fit", "derived", "outputs"}


class _Checker:
    def __init__(self):
        self.diagnostics = []

    def add(self, pointer, message):
        self.diagnostics.append(Diagnostic(pointer=pointer, message=message))

    def obj(self, value, pointer, allowed, required=()):
        if not isinstance(value, dict):
            self.add(pointer, "expected an object")
            return False
        for key in value:
            if key not in allowed:
                self.add(f"{pointer}/{key}", f"unknown key {key!r}")
        ok = True
        for key in required:
            if key not in value:
                self.add(pointer, f"missing required key {key!r}")
                ok = False
        return ok

    def number(self, value, pointer, minimum=None, positive=False):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.add(pointer, "expected a number")
            return False
        if positive and not value > 0:
            self.add(pointer, f"must be positive, got {value}")
            return False
        if minimum is not None and value < minimum:
            self.add(pointer, f"must be >= {minimum}, got {value}")
            return False
        return True

    def integer(self, value, pointer, minimum=None):
        if not isinstance(value, int) or isinstance(value, bool):
            self.add(pointer, "expected an integer")
            return False
        if minimum is not None and value < minimum:
            self.add(pointer, f"must be >= {minimum}, got {value}")
            return False
        return True

    def string(self, value, pointer):
        if not isinstance(value, str) or not value:
            self.add(pointer, "expected a nonempty string")
            return False
        return True


def _check_well_entry(ck, entry, pointer):
    if not ck.obj(entry, pointer,
                  allowed={"position_um", "axial_freq_mhz", "curvature_v_per_m2",
                           "shim_v_per_m", "id"},
                  required=("position_um",)):
        return
    pos = entry.get("position_um")
    if isinstance(pos, list):
        if len(pos) != 3 or not all(isinstance(x, (int, float)) for x in pos):
            ck.add(f"{pointer}/position_um", "expected a number or a 3-number list")
    elif not isinstance(pos, (int, float)) or isinstance(pos, bool):
        ck.add(f"{pointer}/position_um", "expected a number or a 3-number list")
    has_freq = "axial_freq_mhz" in entry
    has_curv = "curvature_v_per_m2" in entry
    if has_freq == has_curv:
        ck.add(pointer, "give exactly one of axial_freq_mhz or curvature_v_per_m2")
    if has_freq:
        ck.number(entry["axial_freq_mhz"], f"{pointer}/axial_freq_mhz", positive=True)
    if has_curv:
        ck.number(entry["curvature_v_per_m2"], f"{pointer}/curvature_v_per_m2", positive=True)
    if "shim_v_per_m" in entry:
        shim = entry["shim_v_per_m"]
        if not (isinstance(shim, list) and len(shim) == 3
                and all(isinstance(x, (int, float)) for x in shim)):
            ck.add(f"{pointer}/shim_v_per_m", "expected a 3-number list")


def validate_scenario_data(data):
    """Validate a parsed scenario; returns a list of diagnostics (empty = valid)."""
    ck = _Checker()
    if not ck.obj(data, "", _TOP_KEYS, required=("name", "trap", "sites")):
        return ck.diagnostics
    ck.string(data.get("name"), "/name")

    trap = data.get("trap", {})
    if ck.obj(trap, "/trap", {"kind", "path", "rf"}, required=("kind",)):
        kind = trap.get("kind")
        if kind not in ("demo", "file"):
            ck.add("/trap/kind", f"expected 'demo' or 'file', got {kind!r}")
        if kind == "file" and not isinstance(trap.get("path"), str):
            ck.add("/trap", "trap kind 'file' requires a 'path'")
        if "rf" in trap and ck.obj(trap["rf"], "/trap/rf",
                                   {"frequency_mhz", "amplitude_v", "calibrate_radial_mhz"},
                                   required=("frequency_mhz",)):
            ck.number(trap["rf"]["frequency_mhz"], "/trap/rf/frequency_mhz", positive=True)
            if "calibrate_radial_mhz" in trap["rf"]:
                ck.number(trap["rf"]["calibrate_radial_mhz"],
                          "/trap/rf/calibrate_radial_mhz", positive=True)

    if "solver" in data and ck.obj(data["solver"], "/solver", {"bound_v"}):
        if "bound_v" in data["solver"]:
            ck.number(data["solver"]["bound_v"], "/solver/bound_v", positive=True)

    site_ids = []
    sites = data.get("sites")
    if not isinstance(sites, list) or not sites:
        ck.add("/sites", "expected a nonempty list")
        sites = []
    for i, site in enumerate(sites):
        ptr = f"/sites/{i}"
        _check_well_entry(ck, site, ptr)
        if isinstance(site, dict):
            sid = site.get("id")
            if sid is None:
                ck.add(ptr, "missing required key 'id'")
            elif ck.string(sid, f"{ptr}/id"):
                if sid in site_ids:
                    ck.add(f"{ptr}/id", f"duplicate site id {sid!r}")
                site_ids.append(sid)

    if "shuttle" in data and ck.obj(data["shuttle"], "/shuttle",
                                    {"stages", "bound_v"}, required=("stages",)):
        stages = data["shuttle"]["stages"]
        if not isinstance(stages, list) or not stages:
            ck.add("/shuttle/stages", "expected a nonempty list")
        else:
            for i, stage in enumerate(stages):
                ptr = f"/shuttle/stages/{i}"
                if not ck.obj(stage, ptr, {"start", "end", "steps"},
                              required=("start", "end", "steps")):
                    continue
                ck.integer(stage["steps"], f"{ptr}/steps", minimum=2)
                for leg in ("start", "end"):
                    wells = stage[leg]
                    if not isinstance(wells, list) or not wells:
                        ck.add(f"{ptr}/{leg}", "expected a nonempty list")
                        continue
                    for j, w in enumerate(wells):
                        _check_well_entry(ck, w, f"{ptr}/{leg}/{j}")
                if (isinstance(stage.get("start"), list) and isinstance(stage.get("end"), list)
                        and len(stage["start"]) != len(stage["end"])):
                    ck.add(ptr, "start and end well counts must match")
        if "bound_v" in data["shuttle"]:
            ck.number(data["shuttle"]["bound_v"], "/shuttle/bound_v", positive=True)

    beam_ids, beam_sites = [], {}
    for i, beam in enumerate(data.get("beams", []) or []):
        ptr = f"/beams/{i}"
        if not ck.obj(beam, ptr,
                      {"id", "site", "wavelength_nm", "fwhm_um", "input_power_mw",
                       "splitter", "loss_chain", "angle_deg"},
                      required=("id", "site", "wavelength_nm", "fwhm_um", "input_power_mw")):
            continue
        if ck.string(beam["id"], f"{ptr}/id"):
            if beam["id"] in beam_ids:
                ck.add(f"{ptr}/id", f"duplicate beam id {beam['id']!r}")
            beam_ids.append(beam["id"])
        if ck.string(beam["site"], f"{ptr}/site") and site_ids and beam["site"] not in site_ids:
            ck.add(f"{ptr}/site", f"undefined site id {beam['site']!r}")
        beam_sites[beam.get("id")] = beam.get("site")
        ck.number(beam["wavelength_nm"], f"{ptr}/wavelength_nm", positive=True)
        ck.number(beam["fwhm_um"], f"{ptr}/fwhm_um", positive=True)
        ck.number(beam["input_power_mw"], f"{ptr}/input_power_mw", minimum=0.0)
        if "splitter" in beam and ck.obj(beam["splitter"], f"{ptr}/splitter",
                                         {"ratio", "loss_db"}, required=("ratio",)):
            ratio = beam["splitter"]["ratio"]
            if ck.number(ratio, f"{ptr}/splitter/ratio", positive=True) and ratio >= 1.0:
                ck.add(f"{ptr}/splitter/ratio", "port ratio must be < 1")
            if "loss_db" in beam["splitter"]:
                ck.number(beam["splitter"]["loss_db"], f"{ptr}/splitter/loss_db", minimum=0.0)
        for j, el in enumerate(beam.get("loss_chain", []) or []):
            eptr = f"{ptr}/loss_chain/{j}"
            if not ck.obj(el, eptr,
                          {"name", "loss_db", "loss_db_per_cm", "length_cm"},
                          required=("name",)):
                continue
            if "loss_db" in el:
                ck.number(el["loss_db"], f"{eptr}/loss_db", minimum=0.0)
            elif "loss_db_per_cm" in el and "length_cm" in el:
                ck.number(el["loss_db_per_cm"], f"{eptr}/loss_db_per_cm", minimum=0.0)
                ck.number(el["length_cm"], f"{eptr}/length_cm", minimum=0.0)
            else:
                ck.add(eptr, "give loss_db or both loss_db_per_cm and length_cm")

    driven_sites = []
    for i, drive in enumerate(data.get("drives", []) or []):
        ptr = f"/drives/{i}"
        if not ck.obj(drive, ptr,
                      {"site", "beam", "omega0_ref_khz", "reference", "transition"},
                      required=("site", "beam", "omega0_ref_khz")):
            continue
        if ck.string(drive["site"], f"{ptr}/site") and site_ids and drive["site"] not in site_ids:
            ck.add(f"{ptr}/site", f"undefined site id {drive['site']!r}")
        if ck.string(drive["beam"], f"{ptr}/beam") and beam_ids and drive["beam"] not in beam_ids:
            ck.add(f"{ptr}/beam", f"undefined beam id {drive['beam']!r}")
        if drive.get("site") in driven_sites:
            ck.add(f"{ptr}/site", f"site {drive['site']!r} already has a drive")
        driven_sites.append(drive.get("site"))
        ck.number(drive["omega0_ref_khz"], f"{ptr}/omega0_ref_khz", positive=True)
        if "reference" in drive and drive["reference"] not in ("nominal", "equal_split"):
            ck.add(f"{ptr}/reference", "expected 'nominal' or 'equal_split'")
        if "transition" in drive and ck.obj(drive["transition"], f"{ptr}/transition",
                                            {"label", "scale"}, required=("label",)):
            if "scale" in drive["transition"]:
                ck.number(drive["transition"]["scale"], f"{ptr}/transition/scale", minimum=0.0)

    for i, ct in enumerate(data.get("crosstalk", []) or []):
        ptr = f"/crosstalk/{i}"
        if not ck.obj(ct, ptr, {"from_site", "to_site", "intensity_ratio"},
                      required=("from_site", "to_site", "intensity_ratio")):
            continue
        for key in ("from_site", "to_site"):
            if ck.string(ct[key], f"{ptr}/{key}") and site_ids and ct[key] not in site_ids:
                ck.add(f"{ptr}/{key}", f"undefined site id {ct[key]!r}")
        if ct.get("from_site") not in driven_sites:
            ck.add(f"{ptr}/from_site", "cross-talk source site has no drive")
        if ct.get("to_site") in driven_sites:
            ck.add(f"{ptr}/to_site", "cross-talk target site already has its own drive")
        ck.number(ct["intensity_ratio"], f"{ptr}/intensity_ratio", minimum=0.0)

    if "simulate" in data:
        sim = data["simulate"]
        if ck.obj(sim, "/simulate",
                  {"t_max_us", "points", "shots", "nbar", "eta", "mode_freq_mhz", "a"},
                  required=("t_max_us", "points", "shots", "eta", "mode_freq_mhz")):
            ck.number(sim["t_max_us"], "/simulate/t_max_us", positive=True)
            ck.integer(sim["points"], "/simulate/points", minimum=2)
            ck.integer(sim["shots"], "/simulate/shots", minimum=1)
            if "nbar" in sim:
                ck.number(sim["nbar"], "/simulate/nbar", minimum=0.0)
            ck.number(sim["eta"], "/simulate/eta", minimum=0.0)
            ck.number(sim["mode_freq_mhz"], "/simulate/mode_freq_mhz", positive=True)
            if "a" in sim:
                a = sim["a"]
                if ck.number(a, "/simulate/a", minimum=0.0) and a > 1.0:
                    ck.add("/simulate/a", "initial ground population must be <= 1")
        if "seed" not in data:
            ck.add("", "stochastic steps need a root 'seed'")
        elif not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
            ck.add("/seed", "expected an integer seed")

    if "fit" in data:
        ck.obj(data["fit"], "/fit", {"enabled", "float_eta"})

    if "derived" in data and ck.obj(data["derived"], "/derived",
                                    {"delta_omega_pair", "crosstalk_pairs"}):
        pair = data["derived"].get("delta_omega_pair")
        if pair is not None:
            if not (isinstance(pair, list) and len(pair) == 2):
                ck.add("/derived/delta_omega_pair", "expected a 2-item site list")
            else:
                for j, sid in enumerate(pair):
                    if site_ids and sid not in site_ids:
                        ck.add(f"/derived/delta_omega_pair/{j}", f"undefined site id {sid!r}")
        for i, pair in enumerate(data["derived"].get("crosstalk_pairs", []) or []):
            if not (isinstance(pair, list) and len(pair) == 2):
                ck.add(f"/derived/crosstalk_pairs/{i}", "expected [from_site, to_site]")
                continue
            for j, sid in enumerate(pair):
                if site_ids and sid not in site_ids:
                    ck.add(f"/derived/crosstalk_pairs/{i}/{j}", f"undefined site id {sid!r}")

    if "outputs" in data and ck.obj(data["outputs"], "/outputs", {"dir"}):
        if "dir" in data["outputs"]:
            ck.string(data["outputs"]["dir"], "/outputs/dir")
    return ck.diagnostics


def validate_scenario(path):
    """Diagnostics for a scenario file; empty list means it will run."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        return [Diagnostic(pointer="", message=f"invalid JSON: {exc.msg} (line {exc.lineno})")]
    return validate_scenario_data(data)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    """In-memory result of a scenario run."""

    name: str
    provenance: dict
    steps: dict
    artifacts: list
    wall_time_s: float
    failed_steps: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failed_steps


def _well_from_entry(entry, basis):
    pos = entry["position_um"]
    if isinstance(pos, list):
        position = np.asarray(pos, dtype=float) * 1e-6
    else:
        position = basis.axis_point(float(pos) * 1e-6)
    shim = np.asarray(entry.get("shim_v_per_m", (0.0, 0.0, 0.0)), dtype=float)
    if "axial_freq_mhz" in entry:
        return WellSpec.from_axial_frequency(
            position, mhz_to_rad_s(entry["axial_freq_mhz"]), YB171, shim)
    return WellSpec(position=position, curvature=float(entry["curvature_v_per_m2"]),
                    compensation=shim)


def _atomic_write(path, text):
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _json_dump(data):
    return json.dumps(data, sort_keys=True, indent=1)


def _beam_power_at_ion(beam_cfg, ratio_override=None):
    """Power (W) delivered to the ion through splitter and loss chain."""
    power = float(beam_cfg["input_power_mw"]) * 1e-3
    splitter_cfg = beam_cfg.get("splitter")
    if splitter_cfg is not None:
        ratio = float(splitter_cfg["ratio"]) if ratio_override is None else ratio_override
        spec = SplitterSpec(ratios=(ratio, 1.0 - ratio),
                            insertion_loss_db=float(splitter_cfg.get("loss_db", 0.0)))
        power = float(split(power, spec)[0])
    chain_cfg = beam_cfg.get("loss_chain", [])
    if chain_cfg:
        budget = loss_budget(LossChain.from_dicts([dict(e) for e in chain_cfg]))
        power *= budget.transmission
    return power


class _ScenarioRun:
    def __init__(self, data, root_seed, out_dir):
        self.data = data
        self.seed = root_seed
        self.out_dir = Path(out_dir)
        self.steps = {}
        self.artifacts = []
        self.failed = []
        self.basis = None
        self.site_wells = {}
        self.beams = {}          # beam id -> BeamModel
        self.site_intensity = {}  # site id -> W/m^2 at site
        self.site_omega = {}     # site id -> rad/s
        self.traces = {}         # site id -> RabiTrace
        self.fits = {}           # site id -> FitResult

    def fail(self, step, exc):
        self.steps[step] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
        self.failed.append(step)

    def run(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        order = [("trap", self.step_trap),
                 ("solve", self.step_solve),
                 ("shuttle", self.step_shuttle),
                 ("beams", self.step_beams),
                 ("drives", self.step_drives),
                 ("simulate", self.step_simulate),
                 ("fit", self.step_fit),
                 ("derived", self.step_derived)]
        blocked_by = {"solve": ["trap"], "shuttle": ["trap"], "beams": [],
                      "drives": ["beams"], "simulate": ["drives"],
                      "fit": ["simulate"], "derived": ["fit"]}
        for name, fn in order:
            upstream_failed = [u for u in blocked_by.get(name, []) if u in self.failed]
            if upstream_failed:
                self.steps[name] = {"status": "skipped",
                                    "blocked_by": upstream_failed}
                self.failed.append(name)
                continue
            try:
                result = fn()
            except Exception as exc:  # noqa: BLE001 - reported, not hidden
                self.fail(name, exc)
                continue
            if result is not None:
                self.steps[name] = result

    # -- steps --------------------------------------------------------------

    def step_trap(self):
        trap_cfg = self.data["trap"]
        rf_cfg = trap_cfg.get("rf")
        info = {"status": "ok", "kind": trap_cfg["kind"]}
        if trap_cfg["kind"] == "demo":
            calibrate = None
            rf_freq = 2.0 * np.pi * 50e6
            if rf_cfg is not None:
                rf_freq = mhz_to_rad_s(rf_cfg["frequency_mhz"])
                if "calibrate_radial_mhz" in rf_cfg:
                    calibrate = mhz_to_rad_s(rf_cfg["calibrate_radial_mhz"])
            trap = demo_trap(rf_frequency=rf_freq, species=YB171,
                             calibrate_radial=calibrate)
            self.basis = trap.basis
            self.trap = trap
            info["rf_amplitude_v"] = trap.rf.amplitude
            info["null_height_um"] = trap.height * 1e6
        else:
            self.basis = load_basis(trap_cfg["path"])
            self.trap = None
        return info

    def step_solve(self):
        wells = [_well_from_entry(site, self.basis) for site in self.data["sites"]]
        for sid, well in zip((s["id"] for s in self.data["sites"]), wells):
            self.site_wells[sid] = well
        bound = self.data.get("solver", {}).get("bound_v")
        system = build_constraints(wells, self.basis)
        solution = solve_voltages(system, bound=bound)
        payload = {
            "status": "ok",
            "voltages": {n: v for n, v in zip(system.electrode_names,
                                              solution.voltages.tolist())},
            "residual_norm": solution.residual_norm,
            "max_abs_voltage": solution.max_abs_voltage,
            "feasible": solution.feasible,
            "clipped": [n for n, c in zip(system.electrode_names, solution.clipped) if c],
        }
        path = self.out_dir / "solution.json"
        _atomic_write(path, _json_dump(payload))
        self.artifacts.append(str(path))
        return payload

    def step_shuttle(self):
        cfg = self.data.get("shuttle")
        if cfg is None:
            return None
        bound = cfg.get("bound_v")
        stages_out = []
        for stage in cfg["stages"]:
            start = [_well_from_entry(w, self.basis) for w in stage["start"]]
            end = [_well_from_entry(w, self.basis) for w in stage["end"]]
            solutions = shuttle_waveform(start, end, stage["steps"], self.basis,
                                         bound=bound)
            stages_out.append({
                "steps": len(solutions),
                "max_abs_voltage": max(s.max_abs_voltage for s in solutions),
                "worst_residual_norm": max(s.residual_norm for s in solutions),
            })
        payload = {"status": "ok", "stages": stages_out}
        path = self.out_dir / "shuttle.json"
        _atomic_write(path, _json_dump(payload))
        self.artifacts.append(str(path))
        return payload

    def step_beams(self):
        beams_cfg = self.data.get("beams", [])
        if not beams_cfg:
            return None
        out = {}
        for cfg in beams_cfg:
            power = _beam_power_at_ion(cfg)
            site = next(s for s in self.data["sites"] if s["id"] == cfg["site"])
            pos = site["position_um"]
            focus = (np.asarray(pos, dtype=float) * 1e-6 if isinstance(pos, list)
                     else self.basis.axis_point(float(pos) * 1e-6))
            angle = math.radians(float(cfg.get("angle_deg", 45.0)))
            beam = BeamModel(
                focus=focus,
                direction=np.array([math.cos(angle), 0.0, math.sin(angle)]),
                wavelength=float(cfg["wavelength_nm"]) * 1e-9,
                fwhm=float(cfg["fwhm_um"]) * 1e-6,
                power=power,
            )
            self.beams[cfg["id"]] = beam
            intensity = beam_intensity(beam, focus)
            self.site_intensity[cfg["site"]] = intensity
            out[cfg["id"]] = {"power_at_ion_w": power,
                              "intensity_at_site_w_m2": intensity}
        return {"status": "ok", "beams": out}

    def step_drives(self):
        drives_cfg = self.data.get("drives", [])
        if not drives_cfg:
            return None
        out = {}
        beam_by_id = {b["id"]: b for b in self.data.get("beams", [])}
        for cfg in drives_cfg:
            beam_cfg = beam_by_id[cfg["beam"]]
            reference = cfg.get("reference", "nominal")
            i_actual = self.site_intensity[cfg["site"]]
            if reference == "equal_split":
                p_ref = _beam_power_at_ion(beam_cfg, ratio_override=0.5)
                p_act = self.beams[cfg["beam"]].power
                i_ref = i_actual * (p_ref / p_act)
            else:
                i_ref = i_actual
            scale = float(cfg.get("transition", {}).get("scale", 1.0))
            omega_ref = khz_to_rad_s(cfg["omega0_ref_khz"])
            omega = scale * omega_ref * math.sqrt(i_actual / i_ref)
            self.site_omega[cfg["site"]] = omega
            out[cfg["site"]] = {"omega0_rad_s": omega,
                                "omega0_khz": omega / (2.0 * np.pi * 1e3)}
        for ct in self.data.get("crosstalk", []) or []:
            omega_src = self.site_omega[ct["from_site"]]
            omega_ct = omega_src * math.sqrt(float(ct["intensity_ratio"]))
            self.site_omega[ct["to_site"]] = omega_ct
            out[ct["to_site"]] = {"omega0_rad_s": omega_ct,
                                  "omega0_khz": omega_ct / (2.0 * np.pi * 1e3),
                                  "crosstalk_from": ct["from_site"]}
        return {"status": "ok", "sites": out}

    def step_simulate(self):
        sim = self.data.get("simulate")
        if sim is None:
            return None
        # `points` samples excluding t = 0, which carries no information.
        times = np.linspace(0.0, float(sim["t_max_us"]) * 1e-6, int(sim["points"]) + 1)[1:]
        shots = int(sim["shots"])
        mode = MotionalMode(omega=mhz_to_rad_s(sim["mode_freq_mhz"]),
                            eta=float(sim["eta"]), nbar=float(sim.get("nbar", 0.0)))
        a = float(sim.get("a", 1.0))
        out = {}
        for sid in sorted(self.site_omega):
            drive = DriveSpec(omega0=self.site_omega[sid], a=a)
            p_true = rabi_carrier_population(times, drive, [mode])
            seed = child_seed(self.seed, f"simulate/{sid}")
            gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
            u = np.maximum(gen.random(times.size), 1e-300)
            successes = binom.ppf(u, shots, p_true).astype(int)
            trace = RabiTrace.from_binomial(times, successes, shots)
            self.traces[sid] = trace
            path = self.out_dir / f"trace_{sid}.csv"
            lines = ["t_us,population,stderr,shots"]
            for t, p, e, s in zip(trace.times, trace.populations, trace.stderr,
                                  trace.shots):
                lines.append(f"{float(t) * 1e6!r},{float(p)!r},{float(e)!r},{int(s)}")
            _atomic_write(path, "\n".join(lines) + "\n")
            self.artifacts.append(str(path))
            out[sid] = {"trace": path.name, "points": int(times.size), "shots": shots,
                        "seed": seed}
        return {"status": "ok", "traces": out}

    def step_fit(self):
        sim = self.data.get("simulate")
        fit_cfg = self.data.get("fit", {})
        if sim is None or not self.traces or not fit_cfg.get("enabled", True):
            return None
        mode = MotionalMode(omega=mhz_to_rad_s(sim["mode_freq_mhz"]),
                            eta=float(sim["eta"]), nbar=float(sim.get("nbar", 0.0)))
        float_eta = bool(fit_cfg.get("float_eta", False))
        out = {}
        failures = []
        for sid in sorted(self.traces):
            try:
                fit = fit_rabi(self.traces[sid], [mode], float_eta=float_eta)
            except Exception as exc:  # noqa: BLE001 - per-site isolation
                failures.append(sid)
                out[sid] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
                continue
            self.fits[sid] = fit
            out[sid] = {
                "status": "ok",
                "params": fit.params,
                "errors": fit.errors,
                "reduced_chi2": fit.reduced_chi2,
                "converged": fit.converged,
                "flags": list(fit.flags),
            }
        payload = {"status": "ok" if not failures else "partial", "sites": out}
        if failures:
            payload["failed_sites"] = failures
            self.failed.append("fit")
        path = self.out_dir / "fits.json"
        _atomic_write(path, _json_dump(payload))
        self.artifacts.append(str(path))
        return payload

    def step_derived(self):
        derived = self.data.get("derived")
        if derived is None or not self.fits:
            return None
        out = {"status": "ok"}
        pair = derived.get("delta_omega_pair")
        if pair is not None and all(p in self.fits for p in pair):
            vals = sorted(((self.fits[p].params["omega0"],
                            (self.fits[p].errors or {}).get("omega0", 0.0))
                           for p in pair), reverse=True)
            ratio = vals[0][0] / vals[1][0]
            rel_err = ratio * math.sqrt((vals[0][1] / vals[0][0]) ** 2
                                        + (vals[1][1] / vals[1][0]) ** 2)
            out["delta_omega"] = {"sites": list(pair), "relative": ratio - 1.0,
                                  "error": rel_err}
        for i, (src, dst) in enumerate(derived.get("crosstalk_pairs", []) or []):
            if src not in self.fits or dst not in self.fits:
                continue
            omega0 = self.fits[src].params["omega0"]
            omega_c = self.fits[dst].params["omega0"]
            ratio = crosstalk_intensity_ratio(omega_c, omega0)
            e0 = (self.fits[src].errors or {}).get("omega0", 0.0)
            ec = (self.fits[dst].errors or {}).get("omega0", 0.0)
            err = 2.0 * ratio * math.sqrt((e0 / omega0) ** 2 + (ec / omega_c) ** 2) \
                if omega_c > 0 else 0.0
            out.setdefault("crosstalk", []).append(
                {"from": src, "to": dst, "intensity_ratio": ratio, "error": err})
        return out


def run_scenario(path, seed=None, out_dir=None):
    """Validate and execute a scenario file; returns a :class:`RunReport`.

    `seed` overrides the file's root seed; `out_dir` overrides the output
    directory.  Raises ScenarioError (with diagnostics) before any
    computation when the file is invalid.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([Diagnostic("", f"invalid JSON: {exc.msg} (line {exc.lineno})")])
    diagnostics = validate_scenario_data(data)
    if diagnostics:
        raise ScenarioError(diagnostics)

    root_seed = seed if seed is not None else data.get("seed", 0)
    if out_dir is None:
        out_dir = data.get("outputs", {}).get("dir", path.stem + "_out")
    out_dir = Path(out_dir)

    started = time.perf_counter()
    run = _ScenarioRun(data, root_seed, out_dir)
    run.run()
    wall = time.perf_counter() - started

    provenance = {
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "seed": root_seed,
        "toolkit_version": __version__,
    }
    report = RunReport(name=data["name"], provenance=provenance, steps=run.steps,
                       artifacts=run.artifacts, wall_time_s=wall,
                       failed_steps=run.failed)
    # The serialized report stays free of volatile fields (wall time lives on
    # the in-memory report only) so reruns are bitwise identical.
    report_path = out_dir / "report.json"
    _atomic_write(report_path, _json_dump({
        "name": report.name,
        "provenance": provenance,
        "steps": run.steps,
        "artifacts": sorted(Path(a).name for a in run.artifacts),
        "failed_steps": run.failed,
    }))
    report.artifacts.append(str(report_path))
    return report
