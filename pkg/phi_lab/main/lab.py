#!/usr/bin/env python3

"""
The phi-lab command: analyze, solve, branch, certify, reduce and selftest.
"""

import sys
from argparse import ArgumentParser
from os import getcwd
from os.path import abspath, dirname, join
from phi_lab.main.analysis.solver import continue_branch
from phi_lab.main.analysis.solver import solve_fixed_lambda
from phi_lab.main.analysis.theorems import CONTRACTING
from phi_lab.main.analysis.theorems import EXPANDING
from phi_lab.main.analysis.theorems import check_branch_trends
from phi_lab.main.analysis.theorems import classify_case
from phi_lab.main.analysis.theorems import default_profiles
from phi_lab.main.analysis.theorems import default_scan
from phi_lab.main.analysis.theorems import golden_window
from phi_lab.main.analysis.theorems import multiplicity_windows
from phi_lab.main.analysis.theorems import nonexistence_bounds
from phi_lab.main.analysis.theorems import shell_index_check
from phi_lab.main.color_print import color_print
from phi_lab.main.errors import InputError
from phi_lab.main.errors import LabError
from phi_lab.main.errors import NumericalError
from phi_lab.main.file.config import LabConfig
from phi_lab.main.file.config import load_annulus
from phi_lab.main.file.config import load_config
from phi_lab.main.file.config import write_config
from phi_lab.main.file.reports import branch_report
from phi_lab.main.file.reports import certificate_report
from phi_lab.main.file.reports import constants_report
from phi_lab.main.file.reports import solutions_report
from phi_lab.main.file.table_files import write_branch
from phi_lab.main.file.table_files import write_r_curves
from phi_lab.main.file.table_files import write_solutions
from typing import List

WINDOW = "window"

# Level names of a witness and the shell behavior they stand for
EXPECTED = {"m1":EXPANDING, "M1":EXPANDING, "m2":CONTRACTING, "M2":CONTRACTING}

def _overrides(args) -> dict:
    return {"solver_tol":args.tol, "mesh_nodes":args.mesh, "mgrid_lo":args.mgrid_lo,
                "mgrid_hi":args.mgrid_hi, "mgrid_per_decade":args.mgrid_per_decade}

def _out_dir(args, config_path:str, run:dict=None) -> str:
    """
    Returns --out-dir, else [run] out_dir relative to the config, else the working directory.
    """
    if args.out_dir is not None:
        return abspath(args.out_dir)
    if run is not None and run.get("out_dir"):
        return abspath(join(dirname(abspath(config_path)), run["out_dir"]))
    return getcwd()

def _lambda(args, config:LabConfig) -> float:
    """
    Returns the lambda of a solve: --lambda, else [run] lambda. The value
    window takes the midpoint of the widest multiplicity window.
    """
    raw = args.lam if args.lam is not None else config.run.get("lambda")
    if raw is None:
        raise InputError("solve needs --lambda or [run] lambda")
    if raw.strip().lower() == WINDOW:
        windows = multiplicity_windows(config.instance)
        if len(windows) == 0:
            raise InputError("lambda = window, but no multiplicity window was found")
        best = max(windows, key=lambda w: (w.predicted_count, w.lambda_high / w.lambda_low))
        return best.midpoint()
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"lambda must be a number or '{WINDOW}', got {raw!r}") from None

def analyze(args) -> int:
    config = load_config(args.config, _overrides(args))
    instance = config.instance
    directory = _out_dir(args, args.config, config.run)
    report = constants_report(instance, config.parameters, config.tags)
    path = report.write(join(directory, f"{instance.name}.report.txt"))
    write_r_curves(instance, default_scan(instance), directory)
    profile = instance.weight_profile()
    color_print(f"gamma1 = {profile.gamma1!r}, gamma2 = {profile.gamma2!r},"
                + f" gamma = {profile.gamma!r}", "g")
    color_print(f"Constants report written to {path}", "g")
    return 0

def solve(args) -> int:
    config = load_config(args.config, _overrides(args))
    instance = config.instance
    lam = _lambda(args, config)
    solutions = solve_fixed_lambda(instance, lam, progress=True)
    directory = _out_dir(args, args.config, config.run)
    write_solutions(solutions, directory)
    solutions_report(instance, lam, solutions).write(join(directory,
                f"{instance.name}.solutions.report.txt"))
    color_print(f"{len(solutions)} solution(s) at lambda = {lam!r}", "g")
    for failure in solutions.failures:
        color_print(failure, "y")
    return 0

def branch(args) -> int:
    config = load_config(args.config, _overrides(args))
    instance = config.instance
    result = continue_branch(instance, progress=True)
    if len(result.samples) == 0:
        raise NumericalError("Continuation did not converge at any peak value")
    directory = _out_dir(args, args.config, config.run)
    path = write_branch(result, directory)
    branch_report(instance, result).write(join(directory, f"{instance.name}.branch.report.txt"))
    color_print(f"{len(result.samples)} branch samples written to {path}", "g")
    for low, high in result.gaps:
        color_print(f"Continuation stalled for M in [{low!r}, {high!r}]", "y")
    return 0

def _shell_rows(config:LabConfig, windows:list) -> list:
    """
    Checks the shell behavior at every witness level of every window, at the window midpoint.
    """
    instance = config.instance
    profiles = default_profiles(instance)
    rows = []
    for k, window in enumerate(windows):
        lam = window.midpoint()
        for name, expected in EXPECTED.items():
            m = window.provenance.get(name)
            if m is None:
                continue
            outcome = shell_index_check(instance, lam, m, profiles)
            rows.append((f"window{k + 1}", name, m, lam, expected, outcome))
    return rows

def certify(args) -> int:
    config = load_config(args.config, _overrides(args))
    instance = config.instance
    case = classify_case(instance)
    if case.inconclusive:
        color_print("The limits of f/phi are inconclusive; no thresholds reported", "y")
    windows = multiplicity_windows(instance)
    bounds = nonexistence_bounds(instance, (case.f0, case.finf))
    shells = _shell_rows(config, windows)
    golden = None
    if "M2" in config.parameters:
        golden = golden_window(instance, config.parameters["M2"])
    trends = None
    if args.trends and not case.inconclusive:
        trends = check_branch_trends(case, continue_branch(instance, progress=True),
                    instance.numerics.trend_samples)
    directory = _out_dir(args, args.config, config.run)
    report = certificate_report(instance, case, windows, bounds, shells, golden, trends)
    path = report.write(join(directory, f"{instance.name}.certificate.report.txt"))
    color_print(f"Case {case.case_id} ({case.orientation}), {len(windows)} window(s)", "g")
    for label, name, m, lam, expected, outcome in shells:
        if outcome != expected:
            color_print(f"{label} {name} = {m!r}: expected {expected}, got {outcome}", "y")
    color_print(f"Certificate written to {path}", "g")
    return 0

def reduce(args) -> int:
    instance = load_annulus(args.config, _overrides(args))
    directory = _out_dir(args, args.config)
    path = write_config(instance, join(directory, f"{instance.name}_reduced.cfg"))
    color_print(f"Reduced config written to {path}", "g")
    return 0

def selftest(args) -> int:
    # Deferred, the test package imports this module.
    from phi_lab.test.all_tests import test_all
    return 0 if test_all() else 2

COMMANDS = {"analyze":analyze, "solve":solve, "branch":branch, "certify":certify,
            "reduce":reduce, "selftest":selftest}

def get_parser() -> ArgumentParser:
    """
    Returns the parser of the phi-lab command line.
    """
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "config",
        help="Problem config file.",
        type=str)
    common.add_argument(
        "--out-dir",
        help="Directory to write reports and tables to.",
        dest="out_dir",
        type=str,
        default=None)
    common.add_argument(
        "--tol",
        help="Verification tolerance of solutions.",
        type=float,
        default=None)
    common.add_argument(
        "--mesh",
        help="Number of mesh nodes.",
        type=int,
        default=None)
    common.add_argument(
        "--mgrid-lo",
        help="Smallest peak value of the branch grid.",
        dest="mgrid_lo",
        type=float,
        default=None)
    common.add_argument(
        "--mgrid-hi",
        help="Largest peak value of the branch grid.",
        dest="mgrid_hi",
        type=float,
        default=None)
    common.add_argument(
        "--mgrid-per-decade",
        help="Peak values per decade of the branch grid.",
        dest="mgrid_per_decade",
        type=int,
        default=None)
    parser = ArgumentParser(prog="phi-lab")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("analyze", parents=[common],
                help="Write the constants report and the R-curve table.")
    solve_parser = commands.add_parser("solve", parents=[common],
                help="Find and verify the solutions at one lambda.")
    solve_parser.add_argument(
        "--lambda",
        help="Parameter value, or 'window' for the midpoint of the widest window.",
        dest="lam",
        type=str,
        default=None)
    commands.add_parser("branch", parents=[common], help="Write lambda(M) over the branch grid.")
    certify_parser = commands.add_parser("certify", parents=[common],
                help="Write the case, windows, bounds and shell checks.")
    certify_parser.add_argument(
        "--trends",
        help="Also compute the branch and check its trends.",
        action="store_true")
    commands.add_parser("reduce", parents=[common],
                help="Write the reduced config of an annular problem.")
    commands.add_parser("selftest", help="Run the built-in test suite.")
    return parser

def run(argv:List[str]=None) -> int:
    """
    Runs one phi-lab command.

    :param argv: Arguments after the program name, defaults to sys.argv[1:]
    :type argv: list[str], optional
    :return: Exit code: 0 on success, 1 on input errors, 2 on numerical failures
    :rtype: int
    """
    arguments = sys.argv[1:] if argv is None else argv
    try:
        args = get_parser().parse_args(arguments)
    except SystemExit as stop:
        return 0 if stop.code in (0, None) else InputError.exit_code
    try:
        return COMMANDS[args.command](args)
    except LabError as error:
        color_print(str(error), "r")
        return error.exit_code

def main():
    sys.exit(run())

if __name__ == "__main__":
    main()
