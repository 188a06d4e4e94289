#!/usr/bin/env python3

import numpy as np
from os.path import join
from phi_lab.main.analysis.grid_function import tent
from phi_lab.main.analysis.solver import Branch
from phi_lab.main.analysis.solver import BranchSample
from phi_lab.main.analysis.solver import Solution
from phi_lab.main.analysis.solver import Solutions
from phi_lab.main.analysis.theorems import classify_case
from phi_lab.main.analysis.theorems import existence_window
from phi_lab.main.analysis.theorems import nonexistence_bounds
from phi_lab.main.file.reports import Report
from phi_lab.main.file.reports import branch_report
from phi_lab.main.file.reports import certificate_report
from phi_lab.main.file.reports import constants_report
from phi_lab.main.file.reports import quadrature_tag
from phi_lab.main.file.reports import solutions_report
from phi_lab.test.fixtures import get_linear
from phi_lab.test.fixtures import get_quadratic
from phi_lab.test.temp_dir import get_test_dir

def test_report():
    """
    Tests the Report class.
    """
    report = Report("title")
    report.section("values")
    report.add("x", 0.5, "exact")
    report.add("flag", True)
    report.add("missing", None)
    report.add("pair", [1.0, 2])
    report.add(None, 3.0)
    report.note("a note")
    report.section(None)
    assert report.text() == ("# title\n\n[values]\nx = 0.5  [exact]\nflag = pass\n"
                + "missing = none\npair = 1, 2\n; a note\n")
    report = Report()
    report.add("check", np.bool_(False), "sampled")
    assert report.text() == "check = fail  [sampled]\n"
    path = report.write(join(get_test_dir(), "report.txt"))
    with open(path) as file:
        assert file.read() == "check = fail  [sampled]\n"
    assert quadrature_tag(1.5e-11) == "quadrature ±1.5e-11"

def test_constants_report():
    """
    Tests the constants_report function.
    """
    instance = get_linear()
    text = constants_report(instance, {"p":2.0}, {"p":"declared"}).text()
    assert text.startswith("# constants of linear\n")
    assert "[parameters]\np = 2  [declared]\n" in text
    assert "alpha = 0  [scan]\n" in text
    assert "beta = 1  [scan]\n" in text
    assert "gamma1 = 0.25  [exact]\n" in text
    assert "gamma2 = 0.75  [exact]\n" in text
    assert "gamma0 = 0.25  [exact]\n" in text
    assert "L1 = member  [dyadic test]\n" in text
    assert "condition_A = pass" in text
    assert "inverse_sandwich = " in text
    assert "\nA1 = " in text
    assert "f0 = finite" in text
    assert "f0_value = 1  [extrapolated]\n" in text
    assert "[parameters]" not in constants_report(instance).text()

def test_certificate_report():
    """
    Tests the certificate_report function.
    """
    instance = get_quadratic()
    case = classify_case(instance)
    window = existence_window(instance, 100.0, 1.0)
    shells = [("window1", "m1", 100.0, window.midpoint(), "expanding", "expanding")]
    trends = {"small":"confirmed", "large":None}
    text = certificate_report(instance, case, [window], (None, None), shells, None, trends).text()
    assert "case = 1  [classified]\n" in text
    assert "orientation = direct\n" in text
    assert "lambda_bar = none  [sampled]\n" in text
    assert "count = 1  [scan]\n" in text
    assert "window1.predicted_count = 1  [scan]\n" in text
    assert "window1.theorem = one-solution\n" in text
    assert "window1.m1 = 100  [scan]\n" in text
    assert "window1.shell1 = 1, 100  [scan]\n" in text
    assert "window1.m1 = 100  [lambda 6.5" in text
    assert "window1.m1.outcome = expanding  [sampled]\n" in text
    assert "small = confirmed  [branch samples]\n" in text
    assert "large = none  [branch samples]\n" in text
    # Test the class with finite limits at both ends
    instance = get_linear()
    case = classify_case(instance)
    text = certificate_report(instance, case, [], nonexistence_bounds(instance), None,
                (1.0, 2.0)).text()
    assert "case = 6  [classified]\n" in text
    assert "cases = 6, 7  [classified]\n" in text
    assert "\nlambda_bar = " in text
    assert "\nlambda_underline = " in text
    assert "count = 0  [scan]\n" in text
    assert "example_window = 1, 2  [R-curves]\n" in text
    assert "[shells]" not in text
    assert "[trends]" not in text

def test_branch_and_solutions_reports():
    """
    Tests the branch_report and solutions_report functions.
    """
    instance = get_quadratic()
    branch = Branch([BranchSample(1.0, 11.8, 0.5, 0.25), BranchSample(2.0, 5.9, 0.5, 0.5)],
                [(2.0, 4.0)])
    text = branch_report(instance, branch).text()
    assert "samples = 2  [continuation]\n" in text
    assert "gap1 = 2, 4  [stalled]\n" in text
    assert "max_residual = 0.5  [shooting]\n" in text
    assert "max_residual" not in branch_report(instance, Branch()).text()
    u = tent(np.linspace(0.0, 1.0, 9), 2.0)
    solutions = Solutions([Solution(u, 0.5, 3.0, 2.0, 1e-9, 0.0, 1e-7, 0.125)],
                ["No root found"])
    text = solutions_report(instance, 3.0, solutions).text()
    assert "lambda = 3  [given]\n" in text
    assert "count = 1  [verified]\n" in text
    assert "solution0.sup_norm = 2  [grid]\n" in text
    assert "solution0.tail_error = 0.125  [halved tail]\n" in text
    assert "; No root found\n" in text

def all_tests():
    """
    Runs all tests for the reports module.
    """
    test_report()
    test_constants_report()
    test_certificate_report()
    test_branch_and_solutions_reports()
