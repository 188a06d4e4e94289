#!/usr/bin/env python3

import numpy as np
from phi_lab.main.errors import DomainError
from phi_lab.main.errors import ExpressionError
from phi_lab.main.errors import ExpressionSyntaxError
from phi_lab.main.processing.expr import eval_expr
from phi_lab.main.processing.expr import parse_expr
from phi_lab.main.processing.expr import substitute_parameters

def test_parse_expr():
    """
    Tests the parse_expr function.
    """
    # Test precedence and associativity
    assert eval_expr(parse_expr("x + x^2", "x"), 2.0) == 6.0
    assert eval_expr(parse_expr("1 + 2*x^2", "x"), 3.0) == 19.0
    assert eval_expr(parse_expr("2^3^2", "x"), 0.0) == 512.0
    assert eval_expr(parse_expr("-x^2", "x"), 3.0) == -9.0
    assert eval_expr(parse_expr("2^-1", "x"), 0.0) == 0.5
    assert eval_expr(parse_expr("8/4/2", "x"), 0.0) == 1.0
    assert eval_expr(parse_expr("1 - 2 - 3", "x"), 0.0) == -4.0
    assert eval_expr(parse_expr("(1 - t)*t", "t"), 0.25) == 0.1875
    assert eval_expr(parse_expr("1.5e2 + .5", "s"), 1.0) == 150.5
    assert abs(eval_expr(parse_expr("sin_free + pi", "sin_free"), 0.0) - np.pi) < 1e-15
    # Test piecewise definitions
    h = parse_expr("piece(0<=t<0.0625 : 0; 0.0625<=t<1 : (t-0.0625)*(1-t)^(-1))", "t")
    assert eval_expr(h, 0.03) == 0.0
    assert eval_expr(h, 0.0625) == 0.0
    assert abs(eval_expr(h, 0.5) - 0.875) < 1e-15
    assert h.breakpoints() == [0.0, 0.0625, 1.0]
    step = parse_expr("piece(x<1 : 1; 1<=x<2 : 2; 2<=x : 3)", "x")
    assert eval_expr(step, 0.5) == 1.0
    assert eval_expr(step, 1.0) == 2.0
    assert eval_expr(step, 2.0) == 3.0
    assert eval_expr(step, 7.0) == 3.0
    assert step.breakpoints() == [1.0, 2.0]
    closed = parse_expr("piece(0<=x<=1 : x)", "x")
    assert eval_expr(closed, 1.0) == 1.0
    try:
        eval_expr(closed, 1.5)
        assert False
    except DomainError:
        pass
    bounds = parse_expr("piece(0<=t<1/16 : 0; 1/16<=t : 1)", "t")
    assert eval_expr(bounds, 0.0625) == 1.0
    # Test syntax errors
    try:
        parse_expr("x + (x", "x")
        assert False
    except ExpressionSyntaxError as error:
        assert error.position == 4
    try:
        parse_expr("x + )", "x")
        assert False
    except ExpressionSyntaxError as error:
        assert error.position == 4
    try:
        parse_expr("x + * 2", "x")
        assert False
    except ExpressionSyntaxError:
        pass
    try:
        parse_expr("", "x")
        assert False
    except ExpressionSyntaxError:
        pass
    # Test unknown identifiers and functions
    try:
        parse_expr("x + y", "x")
        assert False
    except ExpressionError:
        pass
    try:
        parse_expr("sin(x)", "x")
        assert False
    except ExpressionError:
        pass
    try:
        parse_expr("sqrt(x, x)", "x")
        assert False
    except ExpressionError:
        pass
    # Test overlapping pieces
    try:
        parse_expr("piece(0<=t<0.5 : 1; 0.4<=t<1 : 2)", "t")
        assert False
    except ExpressionError:
        pass
    try:
        parse_expr("piece(0<=t<=0.5 : 1; 0.5<=t<1 : 2)", "t")
        assert False
    except ExpressionError:
        pass

def test_domain_coverage():
    """
    Tests that piecewise expressions must cover a declared domain.
    """
    parse_expr("piece(0<=t<0.5 : 1; 0.5<=t<=1 : 2)", "t", (0.0, 1.0))
    try:
        parse_expr("piece(0<=t<0.4 : 1; 0.5<=t<=1 : 2)", "t", (0.0, 1.0))
        assert False
    except ExpressionError:
        pass
    try:
        parse_expr("piece(0.1<=t<1 : 1)", "t", (0.0, 1.0))
        assert False
    except ExpressionError:
        pass
    try:
        parse_expr("piece(0<=t<0.9 : 1)", "t", (0.0, 1.0))
        assert False
    except ExpressionError:
        pass
    e = parse_expr("t", "t", (0.0, 1.0))
    try:
        e.values(np.array([0.5, 1.5]))
        assert False
    except DomainError:
        pass

def test_eval_expr():
    """
    Tests the eval_expr function.
    """
    # Test the psi pair of the golden example
    assert eval_expr(parse_expr("min(y, y^2)", "y"), 0.5) == 0.25
    assert eval_expr(parse_expr("max(y, y^2)", "y"), 1.0) == 1.0
    assert eval_expr(parse_expr("max(y, y^2, 3)", "y"), 1.5) == 3.0
    assert eval_expr(parse_expr("abs(x)", "x"), -2.0) == 2.0
    assert eval_expr(parse_expr("sqrt(x)", "x"), 4.0) == 2.0
    assert abs(eval_expr(parse_expr("log(exp(x))", "x"), 1.25) - 1.25) < 1e-15
    # Test domain errors
    for source, value in (("(1-t)^(-1)", 1.0), ("log(x)", 0.0), ("log(x)", -1.0),
                ("sqrt(x)", -1.0), ("1/x", 0.0)):
        try:
            eval_expr(parse_expr(source, "x" if "x" in source else "t"), value)
            assert False
        except DomainError:
            pass
    # Test vectorized evaluation matches scalar evaluation
    e = parse_expr("x/(1+x) + min(x, 2)", "x")
    points = np.linspace(0.0, 5.0, 11)
    values = e.values(points)
    for point, value in zip(points, values):
        assert value == eval_expr(e, point)
    assert e(2.0) == eval_expr(e, 2.0)
    assert parse_expr("3", "x").is_constant()
    assert not parse_expr("3*x", "x").is_constant()

def test_substitute_parameters():
    """
    Tests the substitute_parameters function.
    """
    source = substitute_parameters("(t-0.0625)*(1-t)^(-a)", {"a":1.0})
    assert source == "(t-0.0625)*(1-t)^(-(1.0))"
    assert eval_expr(parse_expr(source, "t"), 0.5) == 0.875
    # Test whole word matching
    assert substitute_parameters("a + a1 + ba", {"a":2.0, "a1":3.0}) == "(2.0) + (3.0) + ba"
    assert substitute_parameters("x", None) == "x"
    assert substitute_parameters(None, {"a":1.0}) == ""

def all_tests():
    """
    Runs all tests for the expr module.
    """
    test_parse_expr()
    test_domain_coverage()
    test_eval_expr()
    test_substitute_parameters()
