#!/usr/bin/env python3

import numpy as np
from phi_lab.main.analysis.homeo import MonotoneInverse
from phi_lab.main.analysis.quadrature import NestedIntegrand
from phi_lab.main.analysis.quadrature import SingularityHint
from phi_lab.main.analysis.quadrature import classify_integrability
from phi_lab.main.analysis.quadrature import classify_membership
from phi_lab.main.analysis.quadrature import integrate
from phi_lab.main.analysis.quadrature import integrate_intervals
from phi_lab.main.analysis.quadrature import nested_weight_integral
from phi_lab.main.errors import InputError
from phi_lab.main.errors import QuadratureError
from phi_lab.main.processing.expr import parse_expr

GOLDEN_WEIGHT = "piece(0<=t<0.0625 : 0; 0.0625<=t<1 : (t-0.0625)*(1-t)^(-1))"

def identity(y):
    return y

def test_integrate():
    """
    Tests the integrate function.
    """
    # Test an integrable endpoint singularity
    result = integrate(lambda t: t ** -0.5, 0.0, 1.0, hints=[SingularityHint("left", 0.5)])
    assert result.converged
    assert abs(result.value - 2.0) < 1e-10
    result = integrate(lambda t: -np.log(t), 0.0, 1.0, hints=[SingularityHint("left")])
    assert abs(result.value - 1.0) < 1e-10
    result = integrate(lambda t: (1.0 - t) ** -0.5, 0.0, 1.0, hints=[SingularityHint("right")])
    assert abs(result.value - 2.0) < 1e-8
    # Test polynomial integrands
    result = integrate(lambda s: 0.5 - s, 0.25, 0.5)
    assert result.converged
    assert abs(result.value - 1.0 / 32.0) < 1e-15
    result = integrate(lambda s: 0.5 - s, 0.5, 0.25)
    assert abs(result.value + 1.0 / 32.0) < 1e-15
    assert integrate(lambda s: s, 0.3, 0.3).value == 0.0
    # Test breakpoints at a kink
    result = integrate(lambda t: np.abs(t - 1.0 / 3.0), 0.0, 1.0, 1e-14, breakpoints=[1.0 / 3.0])
    assert abs(result.value - 5.0 / 18.0) < 1e-14
    # Test a non-integrable pole
    result = integrate(lambda t: (1.0 - t) ** -2.0, 0.0, 1.0)
    assert not result.converged
    result = integrate(lambda t: (1.0 - t) ** -2.0, 0.0, 1.0, hints=[SingularityHint("right", 2.0)])
    assert not result.converged
    assert result.diverged
    result = integrate(lambda t: 1.0 / t, 0.0, 1.0, hints=[SingularityHint("left", 1.0)])
    assert result.diverged
    # Test non-finite values at interior nodes
    try:
        integrate(lambda t: np.log(t - 0.5), 0.0, 1.0)
        assert False
    except QuadratureError:
        pass
    try:
        integrate(parse_expr("log(t-0.5)", "t").values, 0.0, 1.0, breakpoints=[0.5, 0.25])
        assert False
    except QuadratureError:
        pass
    try:
        SingularityHint("middle")
        assert False
    except InputError:
        pass

def test_integrate_properties():
    """
    Tests additivity and monotonicity of integrate.
    """
    f = lambda t: np.exp(t) * t ** -0.5
    hint = [SingularityHint("left")]
    whole = integrate(f, 0.0, 1.0, hints=hint)
    left = integrate(f, 0.0, 0.3, hints=hint)
    right = integrate(f, 0.3, 1.0)
    bound = whole.error_estimate + left.error_estimate + right.error_estimate + 1e-12
    assert abs(whole.value - left.value - right.value) <= bound
    g = lambda t: t ** -0.5
    assert whole.value >= integrate(g, 0.0, 1.0, hints=hint).value - 1e-10

def test_integrate_intervals():
    """
    Tests the integrate_intervals function.
    """
    lo = np.array([0.0, 0.5, 0.9])
    hi = np.array([0.5, 0.9, 0.99])
    values, evaluations, converged = integrate_intervals(lambda t: (1.0 - t) ** -1.0, lo, hi)
    assert converged
    assert evaluations >= 45
    assert np.allclose(values, np.log((1.0 - lo) / (1.0 - hi)), rtol=1e-12, atol=0.0)
    values, evaluations, converged = integrate_intervals(lambda t: 0.0 * t, lo, hi)
    assert np.array_equal(values, np.zeros(3))
    assert evaluations == 45
    # Test the absolute floor on an interval with a negligible integral
    f = lambda t: np.where(t < 0.5, 1.0, 1e-20 * np.sin(1e6 * t))
    values, evaluations, converged = integrate_intervals(f, np.array([0.0, 0.5]), np.array([0.5, 1.0]))
    assert converged
    assert evaluations == 30
    assert abs(values[0] - 0.5) < 1e-15
    assert abs(values[1]) < 1e-20
    # Test the evaluation budget
    f = lambda t: np.sin(1e6 * t)
    values, evaluations, converged = integrate_intervals(f, np.array([0.0]), np.array([1.0]),
                max_evaluations=3000)
    assert not converged
    assert evaluations <= 3000
    assert np.isfinite(values[0])

def test_nested_weight_integral():
    """
    Tests the nested_weight_integral function.
    """
    one = lambda t: np.ones_like(t)
    result = nested_weight_integral(identity, one, 0.5, "left", (0.0, 0.5))
    assert result.converged
    assert abs(result.value - 0.125) < 1e-12
    result = nested_weight_integral(identity, one, 0.5, "right", (0.5, 1.0))
    assert abs(result.value - 0.125) < 1e-12
    result = nested_weight_integral(identity, one, 0.5, "left", (0.25, 0.5))
    assert abs(result.value - 1.0 / 32.0) < 1e-12
    # Test a zero weight
    result = nested_weight_integral(identity, lambda t: 0.0 * t, 0.5, "left", (0.0, 0.5))
    assert result.value == 0.0
    # Test outer weights and inner scales
    result = nested_weight_integral(identity, one, 0.5, "left", (0.0, 0.5),
                outer_weight=lambda s: 2.0 + 0.0 * s, inner_scale=lambda s: 3.0 + 0.0 * s)
    assert abs(result.value - 0.75) < 1e-12
    try:
        nested_weight_integral(identity, one, 0.5, "left", (0.0, 0.75))
        assert False
    except InputError:
        pass
    # Test the golden weight against its closed-form inner integral
    h = parse_expr(GOLDEN_WEIGHT, "t")
    psi1_inverse = MonotoneInverse(parse_expr("min(y, y^2)", "y").values, "psi1")
    gamma = 17.0 / 32.0
    result = nested_weight_integral(psi1_inverse, h.values, gamma, "right", (gamma, 1.0),
                breakpoints=h.breakpoints())
    assert result.converged
    inner = lambda s: -(s - gamma) + (15.0 / 16.0) * np.log((1.0 - gamma) / (1.0 - s))
    closed = lambda s: np.where(inner(s) < 1.0, np.sqrt(np.abs(inner(s))), inner(s))
    oracle = integrate(closed, gamma, 1.0, 1e-12, hints=[SingularityHint("left"),
                SingularityHint("right")])
    assert abs(result.value - oracle.value) < 1e-8

def test_nested_integrand_cache():
    """
    Tests that NestedIntegrand reuses cached inner integrals.
    """
    integrand = NestedIntegrand(identity, lambda t: 2.0 * t, 0.5, "right")
    s = np.array([0.6, 0.9, 0.75])
    assert np.allclose(integrand.inner(s), s ** 2 - 0.25, rtol=1e-13, atol=0.0)
    count = integrand.evaluations
    assert np.allclose(integrand(s[::-1]), s[::-1] ** 2 - 0.25, rtol=1e-13, atol=0.0)
    assert integrand.evaluations == count
    assert integrand.inner(np.array([0.5]))[0] == 0.0
    left = NestedIntegrand(identity, lambda t: 2.0 * t, 0.5, "left", breakpoints=[0.25])
    assert np.allclose(left.inner(np.array([[0.1, 0.3], [0.2, 0.4]])),
                0.25 - np.array([[0.1, 0.3], [0.2, 0.4]]) ** 2, rtol=1e-13, atol=0.0)

def test_classify_membership():
    """
    Tests the classify_membership function.
    """
    psi1_inverse = MonotoneInverse(parse_expr("min(y, y^2)", "y").values, "psi1")
    h = parse_expr(GOLDEN_WEIGHT, "t")
    assert classify_membership(h.values, psi1_inverse, breakpoints=h.breakpoints()) == "member"
    assert classify_membership(lambda t: 1.0 + t, identity) == "member"
    assert classify_membership(lambda t: 1.0 + t, psi1_inverse) == "member"
    assert classify_membership(lambda t: (1.0 - t) ** -2.0, identity) == "nonmember"

def test_classify_integrability():
    """
    Tests the classify_integrability function.
    """
    h = parse_expr(GOLDEN_WEIGHT, "t")
    assert classify_integrability(h.values, breakpoints=h.breakpoints()) == "nonmember"
    assert classify_integrability(lambda t: 1.0 + t) == "member"
    assert classify_integrability(lambda t: np.sin(np.pi * t)) == "member"
    assert classify_integrability(lambda t: t ** -0.5) == "member"

def all_tests():
    """
    Runs all tests for the quadrature module.
    """
    test_integrate()
    test_integrate_properties()
    test_integrate_intervals()
    test_nested_weight_integral()
    test_nested_integrand_cache()
    test_classify_membership()
    test_classify_integrability()
