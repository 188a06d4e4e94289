#!/usr/bin/env python3

import numpy as np
from os import listdir
from os.path import basename, exists, join
from phi_lab.main.analysis.grid_function import tent
from phi_lab.main.analysis.solver import Branch
from phi_lab.main.analysis.solver import BranchSample
from phi_lab.main.analysis.solver import Solution
from phi_lab.main.analysis.solver import Solutions
from phi_lab.main.file.table_files import format_real
from phi_lab.main.file.table_files import read_table
from phi_lab.main.file.table_files import write_branch
from phi_lab.main.file.table_files import write_r_curves
from phi_lab.main.file.table_files import write_solutions
from phi_lab.main.file.table_files import write_table
from phi_lab.main.file.table_files import write_text
from phi_lab.test.fixtures import get_quadratic
from phi_lab.test.temp_dir import get_test_dir

def test_format_real():
    """
    Tests the format_real function.
    """
    assert format_real(0.1) == "0.10000000000000001"
    assert format_real(0.296875) == "0.296875"
    assert format_real(1.0) == "1"
    assert format_real(1e20) == "1e+20"
    assert format_real(None) == ""

def test_write_text():
    """
    Tests the write_text function.
    """
    test_dir = get_test_dir()
    path = write_text(join(test_dir, "a", "b", "note.txt"), "first\n")
    assert exists(path)
    write_text(path, "second\n")
    with open(path) as file:
        assert file.read() == "second\n"
    assert listdir(join(test_dir, "a", "b")) == ["note.txt"]
    assert write_text(None, "text") is None
    assert write_text(join(test_dir, "none.txt"), None) is None
    assert not exists(join(test_dir, "none.txt"))

def test_write_table():
    """
    Tests the write_table and read_table functions.
    """
    test_dir = get_test_dir()
    path = write_table(join(test_dir, "table.csv"), ["a", "b"], [(1.0, 2.5), (3, 0.1)])
    with open(path) as file:
        assert file.read() == "a,b\n1,2.5\n3,0.10000000000000001\n"
    header, values = read_table(path)
    assert header == ["a", "b"]
    assert values.shape == (2, 2)
    assert values[1, 1] == 0.1
    # Test a table without rows
    path = write_table(join(test_dir, "empty.csv"), ["a", "b", "c"])
    header, values = read_table(path)
    assert header == ["a", "b", "c"]
    assert values.shape == (0, 3)
    # Test missing values
    path = write_table(join(test_dir, "gaps.csv"), ["a", "b"], [(1.0, None)])
    _, values = read_table(path)
    assert np.isnan(values[0, 1])
    header, values = read_table(join(test_dir, "missing.csv"))
    assert header == []
    assert values.shape == (0, 0)
    assert write_table(None, ["a"]) is None
    assert write_table(join(test_dir, "x.csv"), None) is None

def test_write_branch():
    """
    Tests the write_branch function.
    """
    test_dir = get_test_dir()
    branch = Branch([BranchSample(1.0, 11.8, 0.5, 1e-12), BranchSample(2.0, 5.9, 0.5, 2e-12)])
    path = write_branch(branch, test_dir)
    assert basename(path) == "branch.csv"
    header, values = read_table(path)
    assert header == ["M", "lambda", "sigma", "residual"]
    assert np.all(values[:, 0] == [1.0, 2.0])
    assert np.all(values[:, 1] == [11.8, 5.9])
    assert write_branch(None, test_dir) is None

def test_write_solutions():
    """
    Tests the write_solutions function.
    """
    test_dir = get_test_dir()
    u = tent(np.linspace(0.0, 1.0, 9), 2.0)
    solution = Solution(u, 0.5, 3.0, 2.0, 1e-9, 0.0, 1e-7, 1e-11)
    paths = write_solutions(Solutions([solution, Solution(u.scaled(2.0), 0.5, 3.0,
                4.0, 1e-9, 0.0)]), test_dir)
    assert [basename(p) for p in paths] == ["solutions_index.csv", "solution_0.csv",
                "solution_1.csv"]
    header, values = read_table(paths[0])
    assert header[:3] == ["index", "lambda", "sup_norm"]
    assert len(header) == 8
    assert np.all(values[:, 2] == [2.0, 4.0])
    assert np.isnan(values[1, 7])
    header, values = read_table(paths[2])
    assert header == ["t", "u"]
    assert values.shape == (9, 2)
    assert np.max(values[:, 1]) == 4.0
    # An empty result still writes the index
    test_dir = get_test_dir()
    paths = write_solutions(Solutions(), test_dir)
    assert len(paths) == 1
    header, values = read_table(paths[0])
    assert len(header) == 8
    assert values.shape == (0, 8)

def test_write_r_curves():
    """
    Tests the write_r_curves function.
    """
    test_dir = get_test_dir()
    path = write_r_curves(get_quadratic(), np.array([1.0, 2.0]), test_dir)
    header, values = read_table(path)
    assert header == ["m", "R1", "R2"]
    assert np.allclose(values[:, 1], [512.0, 256.0], rtol=1e-9)
    assert np.allclose(values[:, 2], [8.0, 4.0], rtol=1e-9)

def all_tests():
    """
    Runs all tests for the table_files module.
    """
    test_format_real()
    test_write_text()
    test_write_table()
    test_write_branch()
    test_write_solutions()
    test_write_r_curves()
