#!/usr/bin/env python3

import numpy as np
from phi_lab.main.analysis.problem import FINITE
from phi_lab.main.analysis.problem import INCONCLUSIVE
from phi_lab.main.analysis.problem import INFINITE
from phi_lab.main.analysis.problem import ZERO
from phi_lab.main.analysis.solver import Branch
from phi_lab.main.analysis.solver import BranchSample
from phi_lab.main.analysis.solver import continue_branch
from phi_lab.main.analysis.solver import solve_fixed_lambda
from phi_lab.main.analysis.theorems import CONFIRMED
from phi_lab.main.analysis.theorems import CONTRACTING
from phi_lab.main.analysis.theorems import CONTRADICTED
from phi_lab.main.analysis.theorems import DIRECT
from phi_lab.main.analysis.theorems import EXPANDING
from phi_lab.main.analysis.theorems import RESP
from phi_lab.main.analysis.theorems import check_branch_trends
from phi_lab.main.analysis.theorems import classify_case
from phi_lab.main.analysis.theorems import default_profiles
from phi_lab.main.analysis.theorems import example_threshold_M2
from phi_lab.main.analysis.theorems import existence_window
from phi_lab.main.analysis.theorems import golden_window
from phi_lab.main.analysis.theorems import multiplicity_windows
from phi_lab.main.analysis.theorems import nonexistence_bounds
from phi_lab.main.analysis.theorems import shell_index_check
from phi_lab.main.analysis.theorems import shell_norms
from phi_lab.main.errors import InputError
from phi_lab.main.processing.grids import log_grid
from phi_lab.test.fixtures import get_example
from phi_lab.test.fixtures import get_instance
from phi_lab.test.fixtures import get_linear
from phi_lab.test.fixtures import get_quadratic

def test_existence_window():
    """
    Tests the existence_window function.
    """
    instance = get_quadratic()
    window = existence_window(instance, 100.0, 1.0)
    assert abs(window.lambda_low - 5.12) < 1e-8
    assert abs(window.lambda_high - 8.0) < 1e-8
    assert window.predicted_count == 1
    assert window.shells == [(1.0, 100.0)]
    assert window.provenance["variant"] == DIRECT
    assert abs(window.midpoint() - 6.56) < 1e-8
    assert existence_window(instance, 1.0, 100.0) is None
    # Test the resp. ordering with f = sqrt(s), R1 = 64 sqrt(m) and R2 = 8 sqrt(m)
    window = existence_window(get_instance("sqrt(s)"), 1.0, 100.0)
    assert window.provenance["variant"] == RESP
    assert abs(window.lambda_low - 64.0) < 1e-6
    assert abs(window.lambda_high - 80.0) < 1e-6
    for m1, m2 in ((0.0, 1.0), (1.0, -1.0), (2.0, 2.0)):
        try:
            existence_window(instance, m1, m2)
            assert False
        except InputError:
            pass

def test_multiplicity_windows():
    """
    Tests the multiplicity_windows function.
    """
    assert multiplicity_windows(get_quadratic()) == []
    # The three-solution example
    config = get_example()
    instance = config.instance
    windows = multiplicity_windows(instance)
    counts = [w.predicted_count for w in windows]
    assert 2 in counts
    assert 3 in counts
    for window in windows:
        assert window.lambda_low < window.lambda_high
        assert len(window.shells) == window.predicted_count
        for low, high in window.shells:
            assert low < high
    three = [w for w in windows if w.predicted_count == 3]
    low, high = golden_window(instance, config.parameters["M2"])
    assert any(w.lambda_low < high and low < w.lambda_high for w in three)
    for name in ("m1", "m2", "M1", "M2"):
        assert name in three[0].provenance
    # Test invalid scans
    for scan in (np.array([1.0, 10.0, 100.0]), log_grid(1.0, 100.0, 4)):
        try:
            multiplicity_windows(instance, scan)
            assert False
        except InputError:
            pass

def test_classify_case():
    """
    Tests the classify_case function.
    """
    report = classify_case(get_quadratic())
    assert report.f0.kind == ZERO
    assert report.finf.kind == INFINITE
    assert report.case_id == 1
    assert report.case_ids == [1]
    assert report.orientation == DIRECT
    assert report.thresholds == {}
    assert not report.inconclusive
    report = classify_case(get_instance("sqrt(s)"))
    assert report.case_id == 1
    assert report.orientation == RESP
    # f/phi has finite limits at both ends
    report = classify_case(get_linear())
    assert report.f0.kind == FINITE
    assert report.finf.kind == FINITE
    assert report.case_id == 6
    assert report.case_ids == [6, 7]
    assert len(report.regime) == 2
    assert abs(report.thresholds["lambda_bar"].value - 8.0) < 1e-6
    assert abs(report.thresholds["lambda_underline"].value - 16.0) < 1e-6
    # R1 = 128 (1 + m/4) has its infimum at m -> 0
    report = classify_case(get_instance("s/(1+s)"))
    assert report.case_ids == [2, 6]
    assert report.orientation == RESP
    assert abs(report.thresholds["lambda_*"].value - 128.0) < 1e-3
    assert report.thresholds["m_*"].value == 0.0
    assert report.thresholds["m_*"].method == "scan edge"
    assert abs(report.thresholds["lambda_bar"].value - 8.0) < 1e-4

def test_nonexistence_bounds():
    """
    Tests the nonexistence_bounds function.
    """
    lambda_bar, lambda_underline = nonexistence_bounds(get_linear())
    assert abs(lambda_bar - 8.0) < 1e-10
    assert abs(lambda_underline - 16.0) < 1e-10
    assert nonexistence_bounds(get_quadratic()) == (None, None)

def test_nonexistence_consistency():
    """
    Tests that -u'' = lambda u has no solutions outside the nonexistence bounds
    over the default peak grid, and that its flat branch lies between them.
    """
    instance = get_linear()
    lambda_bar, lambda_underline = nonexistence_bounds(instance)
    branch = continue_branch(instance)
    assert len(branch.samples) == len(log_grid())
    assert branch.gaps == []
    lambdas = branch.lambdas()
    assert np.all(np.abs(lambdas - np.pi ** 2) < 1e-6)
    assert np.all((lambdas > lambda_bar) & (lambdas < lambda_underline))
    for lam in (4.0, 32.0):
        solutions = solve_fixed_lambda(instance, lam, branch=branch)
        assert len(solutions) == 0
        assert solutions.failures == []

def test_shell_index_check():
    """
    Tests the shell_index_check, shell_norms and default_profiles functions.
    """
    instance = get_quadratic()
    profiles = default_profiles(instance)
    assert len(profiles) == 6
    for v in profiles:
        assert abs(v.sup_norm() - 1.0) < 1e-12
    assert shell_index_check(instance, 1000.0, 1.0, profiles) == EXPANDING
    assert shell_index_check(instance, 4.0, 1.0, profiles) == CONTRACTING
    # H(lambda, m v) = lambda m T(v) for f = s
    instance = get_linear()
    norms = shell_norms(instance, 2.0, 1.0, profiles)
    assert np.allclose(shell_norms(instance, 2.0, 3.0, profiles), 3.0 * norms, rtol=1e-9)
    assert np.all(norms < 0.25)
    try:
        shell_norms(instance, 2.0, 0.0, profiles)
        assert False
    except InputError:
        pass

def test_check_branch_trends():
    """
    Tests the check_branch_trends function.
    """
    report = classify_case(get_quadratic())
    falling = Branch([BranchSample(10.0 ** k, 10.0 ** -k, 0.5, 0.0) for k in range(10)])
    assert check_branch_trends(report, falling) == {"small":CONFIRMED, "large":CONFIRMED}
    rising = Branch([BranchSample(10.0 ** k, 10.0 ** k, 0.5, 0.0) for k in range(10)])
    assert check_branch_trends(report, rising) == {"small":CONTRADICTED, "large":CONTRADICTED}
    short = Branch(falling.samples[:2])
    assert check_branch_trends(report, short) == {"small":INCONCLUSIVE, "large":INCONCLUSIVE}
    # No prediction without a class
    report = classify_case(get_linear())
    assert check_branch_trends(report, falling) == {"small":None, "large":None}
    # Test a computed branch
    instance = get_quadratic()
    branch = continue_branch(instance, log_grid(1e-2, 1e2, 4))
    verdicts = check_branch_trends(classify_case(instance), branch)
    assert verdicts == {"small":CONFIRMED, "large":CONFIRMED}

def test_example_threshold():
    """
    Tests the example_threshold_M2 and golden_window functions.
    """
    config = get_example()
    threshold = example_threshold_M2(config.instance)
    assert 1e4 < threshold < 3e4
    assert abs(config.parameters["M2"] - 2.0 * threshold) < 1e-6 * threshold
    low, high = golden_window(config.instance, config.parameters["M2"])
    assert 0.0 < low < high
    # Identity problem: 1/rho_h = 4 and phi^-1(128^2 / 64) = 256
    assert abs(example_threshold_M2(get_linear()) - 256.0) < 1e-6

def all_tests():
    """
    Runs all tests for the theorems module.
    """
    test_existence_window()
    test_multiplicity_windows()
    test_classify_case()
    test_nonexistence_bounds()
    test_nonexistence_consistency()
    test_shell_index_check()
    test_check_branch_trends()
    test_example_threshold()
