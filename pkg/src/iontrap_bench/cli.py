"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 step failure.  Validation
diagnostics go to stderr as JSON lines.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import RabiTrace, fit_rabi, heating_rate
from .basis_file import load_basis
from .detection import CountModel, discrimination_threshold, monte_carlo_fidelity
from .dynamics import DriveSpec, MotionalMode, rabi_carrier_population
from .errors import IonBenchError, ScenarioError
from .fivewire import demo_trap
from .photonics import LossChain, SplitterSpec, evanescent_coupling, loss_budget, split
from .scenario import run_scenario, validate_scenario
from .trap_model import YB171
from .units import khz_to_rad_s, mhz_to_rad_s
from .voltage_solver import WellSpec, build_constraints, shuttle_waveform, solve_voltages

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STEP_FAILURE = 3


def _emit(data, out=None):
    text = json.dumps(data, sort_keys=True, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load_trap_basis(spec):
    if spec == "demo":
        return demo_trap().basis
    return load_basis(spec)


def _wells_from_file(path, basis):
    """Wells file: JSON list of {position_um, axial_freq_MHz |
    curvature_V_per_m2, shim_V_per_m}."""
    entries = json.loads(Path(path).read_text())
    if not isinstance(entries, list) or not entries:
        raise IonBenchError(f"{path}: expected a nonempty JSON list of wells")
    wells = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise IonBenchError(f"{path}: well {i} must be an object")
        lowered = {k.lower(): v for k, v in entry.items()}
        if "position_um" not in lowered:
            raise IonBenchError(f"{path}: well {i} missing position_um")
        pos = lowered["position_um"]
        position = (np.asarray(pos, dtype=float) * 1e-6 if isinstance(pos, list)
                    else basis.axis_point(float(pos) * 1e-6))
        shim = np.asarray(lowered.get("shim_v_per_m", (0.0, 0.0, 0.0)), dtype=float)
        if "axial_freq_mhz" in lowered:
            wells.append(WellSpec.from_axial_frequency(
                position, mhz_to_rad_s(lowered["axial_freq_mhz"]), YB171, shim))
        elif "curvature_v_per_m2" in lowered:
            wells.append(WellSpec(position=position,
                                  curvature=float(lowered["curvature_v_per_m2"]),
                                  compensation=shim))
        else:
            raise IonBenchError(
                f"{path}: well {i} needs axial_freq_MHz or curvature_V_per_m2")
    return wells


def _solution_payload(solution, names):
    return {
        "voltages": {n: v for n, v in zip(names, solution.voltages.tolist())},
        "residual_norm": solution.residual_norm,
        "max_abs_voltage": solution.max_abs_voltage,
        "feasible": solution.feasible,
        "clipped": [n for n, c in zip(names, solution.clipped) if c],
    }


def cmd_run(args):
    try:
        report = run_scenario(args.scenario, seed=args.seed, out_dir=args.out_dir)
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(d.as_json(), file=sys.stderr)
        return EXIT_VALIDATION
    print(f"scenario {report.name}: {len(report.artifacts)} artifacts, "
          f"{report.wall_time_s:.2f} s", file=sys.stderr)
    for name, step in report.steps.items():
        status = step.get("status", "ok") if isinstance(step, dict) else "ok"
        print(f"  {name}: {status}", file=sys.stderr)
    return EXIT_STEP_FAILURE if report.failed_steps else EXIT_OK


def cmd_validate(args):
    diagnostics = validate_scenario(args.scenario)
    for d in diagnostics:
        print(d.as_json(), file=sys.stderr)
    return EXIT_VALIDATION if diagnostics else EXIT_OK


def cmd_solve(args):
    basis = _load_trap_basis(args.basis)
    wells = _wells_from_file(args.wells, basis)
    system = build_constraints(wells, basis)
    solution = solve_voltages(system, bound=args.bound)
    _emit(_solution_payload(solution, system.electrode_names), args.out)
    return EXIT_OK


def cmd_shuttle(args):
    basis = _load_trap_basis(args.basis)
    start = _wells_from_file(args.wells, basis)
    end = _wells_from_file(args.wells_end, basis)
    names = basis.names
    solutions = shuttle_waveform(start, end, args.steps, basis, bound=args.bound)
    _emit([_solution_payload(s, names) for s in solutions], args.out)
    return EXIT_OK


def cmd_photonics_budget(args):
    chain = LossChain.from_dicts(json.loads(Path(args.chain).read_text()))
    budget = loss_budget(chain)
    _emit({"total_db": budget.total_db, "transmission": budget.transmission,
           "elements": [{"name": n, "loss_db": db} for n, db in budget.table]},
          args.out)
    return EXIT_OK


def cmd_photonics_split(args):
    spec = SplitterSpec(ratios=(args.ratio, 1.0 - args.ratio),
                        insertion_loss_db=args.loss_db)
    outputs = split(args.power_mw * 1e-3, spec)
    _emit({"outputs_mw": [p * 1e3 for p in outputs]}, args.out)
    return EXIT_OK


def cmd_photonics_evanescent(args):
    frac = evanescent_coupling(args.dn, args.length_mm * 1e-3, args.lambda_nm * 1e-9)
    _emit({"coupled_fraction": frac}, args.out)
    return EXIT_OK


def cmd_rabi_simulate(args):
    omega0 = khz_to_rad_s(args.omega0_khz)
    mode = MotionalMode(omega=mhz_to_rad_s(args.mode_freq_mhz),
                        eta=args.eta, nbar=args.nbar)
    times = np.linspace(0.0, args.t_max_us * 1e-6, args.points)
    pops = rabi_carrier_population(times, DriveSpec(omega0=omega0, a=args.a), [mode])
    lines = ["t_us,population"]
    lines += [f"{float(t) * 1e6!r},{float(p)!r}" for t, p in zip(times, pops)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _read_trace_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise IonBenchError(f"{path}: empty trace file")
    t = np.array([float(r["t_us"]) for r in rows]) * 1e-6
    p = np.array([float(r["population"]) for r in rows])
    keep = t > 0
    t, p = t[keep], p[keep]
    rows = [r for r, k in zip(rows, keep) if k]
    if "shots" in rows[0] and rows[0].get("shots"):
        shots = np.array([int(r["shots"]) for r in rows])
    else:
        shots = np.full(t.shape, 1000, dtype=int)
    if "stderr" in rows[0] and rows[0].get("stderr"):
        stderr = np.array([float(r["stderr"]) for r in rows])
    else:
        stderr = np.maximum(np.sqrt(p * (1 - p) / shots), 1.0 / (shots + 2.0))
    return RabiTrace(times=t, populations=p, shots=shots, stderr=stderr)


def cmd_rabi_fit(args):
    trace = _read_trace_csv(args.infile)
    mode = MotionalMode(omega=mhz_to_rad_s(args.omega_mode_mhz),
                        eta=args.eta, nbar=0.0)
    fit = fit_rabi(trace, [mode], float_eta=args.float_eta)
    _emit({"params": fit.params, "errors": fit.errors,
           "reduced_chi2": fit.reduced_chi2, "converged": fit.converged,
           "flags": list(fit.flags)}, args.out)
    return EXIT_OK if fit.converged else EXIT_STEP_FAILURE


def cmd_heating(args):
    with open(args.infile, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise IonBenchError(f"{args.infile}: empty input")
    waits = np.array([float(r["wait_ms"]) for r in rows]) * 1e-3
    nbars = np.array([float(r["nbar"]) for r in rows])
    errors = None
    if "nbar_err" in rows[0] and rows[0].get("nbar_err"):
        errors = np.array([float(r["nbar_err"]) for r in rows])
    result = heating_rate(waits, nbars, errors)
    _emit({"rate_q_per_ms": result.rate_q_per_ms,
           "rate_error_q_per_ms": result.rate_error_q_per_ms,
           "intercept_quanta": result.intercept,
           "intercept_error": result.intercept_error,
           "reduced_chi2": result.reduced_chi2}, args.out)
    return EXIT_OK


def cmd_detect(args):
    model = CountModel(signal_rate=args.signal_kcps * 1e3,
                       background_rate=args.bg_kcps * 1e3,
                       duration=args.t_ms * 1e-3)
    analytic = discrimination_threshold(model.bright_mean, model.dark_mean)
    payload = {
        "bright_mean": model.bright_mean,
        "dark_mean": model.dark_mean,
        "threshold": analytic.threshold,
        "fidelity": analytic.fidelity,
        "errors": {"bright": analytic.bright_error, "dark": analytic.dark_error},
    }
    if args.shots:
        mc_fid, _ = monte_carlo_fidelity(model, args.shots, args.seed)
        payload["monte_carlo"] = {"fidelity": mc_fid, "shots": args.shots,
                                  "seed": args.seed}
    _emit(payload, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="iontrap-bench",
        description="Surface-trap voltage, photonics, Rabi-dynamics, and "
                    "detection models with a scenario runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("validate", help="validate a scenario file")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("solve", help="solve well voltages")
    p.add_argument("--basis", required=True, help="basis file or 'demo'")
    p.add_argument("--wells", required=True)
    p.add_argument("--bound", type=float, default=10.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("shuttle", help="generate a shuttle waveform")
    p.add_argument("--basis", required=True)
    p.add_argument("--wells", required=True, help="start wells file")
    p.add_argument("--wells-end", required=True, help="end wells file")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--bound", type=float, default=10.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_shuttle)

    photonics = sub.add_parser("photonics", help="beam and loss models")
    psub = photonics.add_subparsers(dest="photonics_command", required=True)

    p = psub.add_parser("budget")
    p.add_argument("--chain", required=True, help="JSON loss-chain file")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_photonics_budget)

    p = psub.add_parser("split")
    p.add_argument("--power-mw", type=float, required=True)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--loss-db", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_photonics_split)

    p = psub.add_parser("evanescent")
    p.add_argument("--dn", type=float, required=True)
    p.add_argument("--length-mm", type=float, required=True)
    p.add_argument("--lambda-nm", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_photonics_evanescent)

    rabi = sub.add_parser("rabi", help="carrier Rabi traces and fits")
    rsub = rabi.add_subparsers(dest="rabi_command", required=True)

    p = rsub.add_parser("simulate")
    p.add_argument("--omega0-khz", type=float, required=True)
    p.add_argument("--nbar", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--t-max-us", type=float, required=True)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--mode-freq-mhz", type=float, default=1.02)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_rabi_simulate)

    p = rsub.add_parser("fit")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--omega-mode-mhz", type=float, default=1.02)
    p.add_argument("--float-eta", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_rabi_fit)

    p = sub.add_parser("heating", help="heating-rate regression")
    p.add_argument("--in", dest="infile", required=True,
                   help="CSV with wait_ms,nbar[,nbar_err]")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_heating)

    p = sub.add_parser("detect", help="detection statistics")
    p.add_argument("--signal-kcps", type=float, required=True)
    p.add_argument("--bg-kcps", type=float, required=True)
    p.add_argument("--t-ms", type=float, required=True)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_detect)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(d.as_json(), file=sys.stderr)
        return EXIT_VALIDATION
    except IonBenchError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
