#!/usr/bin/env python3

"""
Structured text reports: one "key = value  [tag]" line per number, the tag
naming the method or error bound behind it.
"""

import numpy as np
from phi_lab.main.analysis.homeo import check_condition_A
from phi_lab.main.analysis.homeo import check_inverse_sandwich
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.problem import compute_rho1
from phi_lab.main.analysis.problem import estimate_f_limits
from phi_lab.main.analysis.quadrature import classify_integrability
from phi_lab.main.analysis.quadrature import classify_membership
from phi_lab.main.analysis.solver import Branch
from phi_lab.main.analysis.solver import Solutions
from phi_lab.main.analysis.theorems import CaseReport
from phi_lab.main.analysis.theorems import Window
from phi_lab.main.file.table_files import format_real
from phi_lab.main.file.table_files import write_text
from typing import Dict, List, Tuple

def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "pass" if value else "fail"
    if isinstance(value, (float, np.floating)):
        return format_real(float(value))
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)

class Report:
    """
    Sectioned report text built line by line.
    """

    def __init__(self, title:str=None):
        self.lines = [] if title is None else [f"# {title}"]

    def section(self, name:str=None):
        if name is not None:
            self.lines.extend(["", f"[{name}]"])

    def add(self, key:str=None, value=None, tag:str=None):
        """
        Adds a "key = value  [tag]" line.

        :param key: Name of the value, defaults to None
        :type key: str, optional
        :param value: Value, formatted at 17 significant digits if real, defaults to None
        :type value: any, optional
        :param tag: Method or error bound, defaults to None
        :type tag: str, optional
        """
        if key is None:
            return
        line = f"{key} = {_format(value)}"
        if tag is not None:
            line = f"{line}  [{tag}]"
        self.lines.append(line)

    def note(self, text:str=None):
        if text is not None:
            self.lines.append(f"; {text}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def write(self, path:str=None) -> str:
        return write_text(path, self.text())

def quadrature_tag(error:float) -> str:
    return f"quadrature ±{error:.3g}"

def constants_report(instance:ProblemInstance, parameters:Dict[str, float]=None,
            tags:Dict[str, str]=None) -> Report:
    """
    Builds the constants report of an instance: support profile, rho1,
    rho_h, A1, A2, h_* and h^*, the checks of the control pair, the classes
    of f0 and f_inf and the membership verdicts of the weight.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param parameters: Resolved config parameters, defaults to None
    :type parameters: dict, optional
    :param tags: Provenance of each parameter, defaults to None
    :type tags: dict, optional
    :return: Report
    :rtype: Report
    """
    report = Report(f"constants of {instance.name}")
    if parameters:
        report.section("parameters")
        tags = {} if tags is None else tags
        for name, value in parameters.items():
            report.add(name, value, tags.get(name, "declared"))
    profile = instance.weight_profile()
    report.section("weight")
    for key in ("alpha", "alpha_bar", "beta_bar", "beta"):
        tag = "declared" if key in profile.declared else "scan"
        report.add(key, getattr(profile, key), tag)
    report.note("beta_bar is the infimum of x with h > 0 on (x, beta)")
    report.add("gamma1", profile.gamma1, "exact")
    report.add("gamma2", profile.gamma2, "exact")
    report.add("gamma", profile.gamma, "exact")
    n = instance.numerics
    for name, xi in (("H_psi1", instance.homeo.psi1_inverse), ("H_psi2", instance.homeo.psi2_inverse),
                ("H_phi", instance.homeo.phi_inverse)):
        report.add(name, classify_membership(instance.h.values, xi, n.quad_tol,
                    instance.h_breakpoints, n.membership_levels, n.membership_window), "dyadic test")
    report.add("L1", classify_integrability(instance.h.values, n.quad_tol, instance.h_breakpoints,
                n.membership_levels, n.membership_window), "dyadic test")
    report.section("coefficients")
    report.add("c0", instance.c0, "sampled")
    report.add("c_max", instance.c_max, "sampled")
    report.add("d0", instance.d0, "sampled")
    report.add("d_max", instance.d_max, "sampled")
    report.section("homeo")
    for check in (check_condition_A(instance.homeo), check_inverse_sandwich(instance.homeo)):
        report.add(check.name.replace(" ", "_"), check.passed, f"worst margin {check.worst_margin:.3g}")
    constants = instance.derived_constants()
    report.section("constants")
    report.add("rho1", compute_rho1(instance), "sampled")
    report.add("gamma0", constants.gamma0, "exact")
    report.add("rho_h", constants.rho_h, "sampled")
    report.add("A1", constants.A1, quadrature_tag(constants.A1_error))
    report.add("A2", constants.A2, quadrature_tag(constants.A2_error))
    report.add("h_star", constants.h_star, quadrature_tag(constants.h_star_error))
    report.add("h_upper", constants.h_upper, quadrature_tag(constants.h_upper_error))
    f0, finf = estimate_f_limits(instance)
    report.section("nonlinearity")
    for name, limit in (("f0", f0), ("f_inf", finf)):
        report.add(name, limit.kind, limit.method)
        if limit.value is not None:
            report.add(f"{name}_value", limit.value, "extrapolated")
    return report

def _window_lines(report:Report, label:str, window:Window):
    report.add(f"{label}.lambda_low", window.lambda_low, "scan")
    report.add(f"{label}.lambda_high", window.lambda_high, "scan")
    report.add(f"{label}.predicted_count", window.predicted_count, "scan")
    for key, value in window.provenance.items():
        report.add(f"{label}.{key}", value, "scan" if isinstance(value, float) else None)
    for k, shell in enumerate(window.shells):
        report.add(f"{label}.shell{k + 1}", list(shell), "scan")

def certificate_report(instance:ProblemInstance, case:CaseReport, windows:List[Window],
            bounds:Tuple[float, float], shells:List[Tuple]=None,
            golden:Tuple[float, float]=None, trends:Dict[str, str]=None) -> Report:
    """
    Builds the certificate report: class of f with thresholds and regimes,
    nonexistence bounds, multiplicity windows with their witnesses, shell
    checks and branch trend verdicts.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param case: Class of f
    :type case: CaseReport
    :param windows: Multiplicity windows
    :type windows: list[Window]
    :param bounds: lambda_bar and lambda_underline, None where absent
    :type bounds: tuple
    :param shells: Rows (window, level name, m, lambda, expected, outcome), defaults to None
    :type shells: list[tuple], optional
    :param golden: The window the three-solution example asserts, defaults to None
    :type golden: tuple, optional
    :param trends: Branch trend verdicts, defaults to None
    :type trends: dict, optional
    :return: Report
    :rtype: Report
    """
    report = Report(f"certificate of {instance.name}")
    report.section("case")
    report.add("f0", case.f0.kind, case.f0.method)
    report.add("f_inf", case.finf.kind, case.finf.method)
    report.add("inconclusive", "yes" if case.inconclusive else "no")
    report.add("case", case.case_id, "classified")
    report.add("cases", list(case.case_ids), "classified")
    report.add("orientation", case.orientation)
    for regime in case.regime:
        report.note(regime)
    for name, threshold in case.thresholds.items():
        report.add(name, float(threshold.value), threshold.method)
    report.section("nonexistence")
    report.add("lambda_bar", bounds[0], "sampled")
    report.add("lambda_underline", bounds[1], "sampled")
    report.section("windows")
    report.add("count", len(windows), "scan")
    for k, window in enumerate(windows):
        _window_lines(report, f"window{k + 1}", window)
    if golden is not None:
        report.add("example_window", list(golden), "R-curves")
    if shells:
        report.section("shells")
        for label, level, m, lam, expected, outcome in shells:
            report.add(f"{label}.{level}", m, f"lambda {format_real(lam)}, expected {expected}")
            report.add(f"{label}.{level}.outcome", outcome, "sampled")
    if trends:
        report.section("trends")
        for end, verdict in trends.items():
            report.add(end, verdict, "branch samples")
    return report

def branch_report(instance:ProblemInstance, branch:Branch) -> Report:
    report = Report(f"branch of {instance.name}")
    report.add("samples", len(branch.samples), "continuation")
    report.add("gaps", len(branch.gaps), "continuation")
    for k, gap in enumerate(branch.gaps):
        report.add(f"gap{k + 1}", list(gap), "stalled")
    if len(branch.samples) > 0:
        residuals = np.array([s.residual for s in branch.samples])
        report.add("max_residual", float(np.max(residuals)), "shooting")
    return report

def solutions_report(instance:ProblemInstance, lam:float, solutions:Solutions) -> Report:
    """
    Builds the report of the solutions at one lambda, with the failed seeds as notes.
    """
    report = Report(f"solutions of {instance.name}")
    report.add("lambda", float(lam), "given")
    report.add("count", len(solutions), "verified")
    for k, s in enumerate(solutions):
        report.add(f"solution{k}.sup_norm", s.sup_norm, "grid")
        report.add(f"solution{k}.sigma", s.sigma, "shooting")
        report.add(f"solution{k}.sup_residual", s.sup_residual, "operator")
        report.add(f"solution{k}.tail_error", s.tail_error, "halved tail")
    for failure in solutions.failures:
        report.note(failure)
    return report
