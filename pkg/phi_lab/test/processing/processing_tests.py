#!/usr/bin/env python3

"""
Combined unit tests for the processing package
"""

from phi_lab.test.processing.test_expr import all_tests as test_expr
from phi_lab.test.processing.test_grids import all_tests as test_grids

def test_all():
    """
    Run all processing tests.
    """
    test_expr()
    test_grids()
