#!/usr/bin/env python3

"""
CSV tables of branches, solutions and R-curves. Reals are written at 17
significant digits and every file is moved into place only once complete.
"""

import csv
import numpy as np
from os import makedirs, remove, replace
from os.path import abspath, dirname, exists, join
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.problem import R_curves
from phi_lab.main.analysis.solver import Branch
from phi_lab.main.analysis.solver import Solutions
from tempfile import NamedTemporaryFile
from typing import List, Sequence, Tuple

def format_real(value:float) -> str:
    if value is None:
        return ""
    return "%.17g" % value

def _replace_with(path:str, write) -> str:
    """
    Writes through a temporary sibling of path, then renames it over path.
    """
    target = abspath(path)
    makedirs(dirname(target), exist_ok=True)
    temp = NamedTemporaryFile("w", dir=dirname(target), prefix=".tmp_", delete=False, newline="")
    try:
        with temp:
            write(temp)
        replace(temp.name, target)
    except BaseException:
        if exists(temp.name):
            remove(temp.name)
        raise
    return target

def write_text(path:str=None, text:str=None) -> str:
    """
    Writes text to a file, replacing it once complete.

    :param path: Path of the file, defaults to None
    :type path: str, optional
    :param text: Contents, defaults to None
    :type text: str, optional
    :return: Absolute path written, None if nothing was given
    :rtype: str
    """
    if path is None or text is None:
        return None
    return _replace_with(path, lambda file: file.write(text))

def write_table(path:str=None, header:Sequence[str]=None, rows:Sequence[Sequence]=None) -> str:
    """
    Writes a CSV table with a header row; floats are written at 17 significant digits.

    :param path: Path of the CSV file, defaults to None
    :type path: str, optional
    :param header: Column names, defaults to None
    :type header: list[str], optional
    :param rows: Rows of values, defaults to None
    :type rows: list, optional
    :return: Absolute path written, None if nothing was given
    :rtype: str
    """
    if path is None or header is None:
        return None
    rows = [] if rows is None else rows

    def write(file):
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_real(v) if isinstance(v, (float, np.floating)) else v
                        for v in row])

    return _replace_with(path, write)

def read_table(path:str=None) -> Tuple[List[str], np.ndarray]:
    """
    Reads a numeric CSV table written by write_table.

    :param path: Path of the CSV file, defaults to None
    :type path: str, optional
    :return: Header and values, shape (rows, columns); empty if the file is missing
    :rtype: tuple
    """
    if path is None or not exists(path):
        return [], np.zeros((0, 0))
    with open(path, newline="") as file:
        lines = list(csv.reader(file))
    if len(lines) == 0:
        return [], np.zeros((0, 0))
    values = np.array([[float(v) if v != "" else np.nan for v in line] for line in lines[1:]])
    return lines[0], values.reshape(len(lines) - 1, len(lines[0]))

def write_branch(branch:Branch, directory:str=None) -> str:
    """
    Writes branch.csv with columns M, lambda, sigma, residual.
    """
    if branch is None or directory is None:
        return None
    rows = [(s.M, s.lam, s.sigma, s.residual) for s in branch.samples]
    return write_table(join(directory, "branch.csv"), ["M", "lambda", "sigma", "residual"], rows)

def write_solutions(solutions:Solutions, directory:str=None) -> List[str]:
    """
    Writes solution_<k>.csv (t, u) for every solution and solutions_index.csv.

    :param solutions: Solutions at one lambda
    :type solutions: Solutions
    :param directory: Directory to write to, defaults to None
    :type directory: str, optional
    :return: Paths written, index first
    :rtype: list[str]
    """
    if solutions is None or directory is None:
        return []
    header = ["index", "lambda", "sup_norm", "sigma", "sup_residual",
                "quasi_derivative_residual", "cone_margin", "tail_error"]
    rows = [(k, s.lam, s.sup_norm, s.sigma, s.sup_residual, s.quasi_derivative_residual,
                s.cone_margin, s.tail_error) for k, s in enumerate(solutions)]
    paths = [write_table(join(directory, "solutions_index.csv"), header, rows)]
    for k, s in enumerate(solutions):
        paths.append(write_table(join(directory, f"solution_{k}.csv"), ["t", "u"],
                    [(float(t), float(u)) for t, u in zip(s.u.nodes, s.u.values)]))
    return paths

def write_r_curves(instance:ProblemInstance, levels:np.ndarray, directory:str=None) -> str:
    """
    Writes r_curves.csv with columns m, R1, R2 over the given norm levels.
    """
    if instance is None or directory is None:
        return None
    R1, R2 = R_curves(instance, levels)
    rows = [(float(m), float(a), float(b)) for m, a, b in zip(levels, R1, R2)]
    return write_table(join(directory, "r_curves.csv"), ["m", "R1", "R2"], rows)
