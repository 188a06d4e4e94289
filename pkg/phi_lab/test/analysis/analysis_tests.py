#!/usr/bin/env python3

"""
Combined unit tests for the analysis package
"""

from phi_lab.test.analysis.test_grid_function import all_tests as test_grid_function
from phi_lab.test.analysis.test_homeo import all_tests as test_homeo
from phi_lab.test.analysis.test_problem import all_tests as test_problem
from phi_lab.test.analysis.test_quadrature import all_tests as test_quadrature
from phi_lab.test.analysis.test_solution_operator import all_tests as test_solution_operator
from phi_lab.test.analysis.test_solver import all_tests as test_solver
from phi_lab.test.analysis.test_theorems import all_tests as test_theorems

def test_all():
    """
    Run all analysis tests.
    """
    test_homeo()
    test_quadrature()
    test_grid_function()
    test_problem()
    test_solution_operator()
    test_solver()
    test_theorems()
