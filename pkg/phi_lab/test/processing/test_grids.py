#!/usr/bin/env python3

import numpy as np
from phi_lab.main.processing.grids import dyadic_grading
from phi_lab.main.processing.grids import graded_mesh
from phi_lab.main.processing.grids import insert_points
from phi_lab.main.processing.grids import log_grid

def test_graded_mesh():
    """
    Tests the graded_mesh function.
    """
    # Test the default mesh
    mesh = graded_mesh()
    assert len(mesh) == 257
    assert mesh[0] == 0.0
    assert mesh[-1] == 1.0
    assert np.all(np.diff(mesh) > 0.0)
    widths = np.diff(mesh)
    assert widths[0] < 1e-5
    assert abs(widths[0] - widths[-1]) < 1e-15
    assert np.allclose(mesh, 1.0 - mesh[::-1], atol=1e-15)
    # Test widths shrink toward the endpoints
    assert widths[0] < widths[1] < widths[10] < widths[128]
    # Test an even node count
    mesh = graded_mesh(64)
    assert len(mesh) == 64
    assert np.all(np.diff(mesh) > 0.0)
    # Test invalid values
    assert len(graded_mesh(1)) == 3
    assert np.allclose(np.diff(graded_mesh(11, None)), 0.1)

def test_insert_points():
    """
    Tests the insert_points function.
    """
    nodes = np.array([0.0, 0.5, 1.0])
    assert np.array_equal(insert_points(nodes, [0.25, 0.75]), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.array_equal(insert_points(nodes, [0.5 + 1e-12]), nodes)
    assert np.array_equal(insert_points(nodes, None), nodes)
    assert len(insert_points(None, [0.5])) == 0

def test_dyadic_grading():
    """
    Tests the dyadic_grading function.
    """
    points = dyadic_grading(0.0, 1.0, "left", 3)
    assert np.array_equal(points, [0.0, 0.125, 0.25, 0.5, 1.0])
    points = dyadic_grading(1.0, 2.0, "right", 2)
    assert np.array_equal(points, [1.0, 1.5, 1.75, 2.0])

def test_log_grid():
    """
    Tests the log_grid function.
    """
    grid = log_grid(1e-3, 1e3, 64)
    assert len(grid) == 385
    assert abs(grid[0] - 1e-3) < 1e-15
    assert abs(grid[-1] - 1e3) < 1e-9
    assert abs(grid[64] - 1e-2) < 1e-14
    assert len(log_grid(1.0, 0.5)) == 0
    assert len(log_grid(None, 2.0)) == 0

def all_tests():
    """
    Runs all tests for the grids module.
    """
    test_graded_mesh()
    test_insert_points()
    test_dyadic_grading()
    test_log_grid()
