#!/usr/bin/env python3

import numpy as np
from typing import List

def graded_mesh(n_nodes:int=257, ratio:float=0.85) -> np.ndarray:
    """
    Returns a mesh of [0,1] geometrically graded toward both endpoints.

    The outer third of each half shrinks by the given ratio per interval
    going toward the endpoint, the middle is uniform.

    :param n_nodes: Number of mesh nodes, defaults to 257
    :type n_nodes: int, optional
    :param ratio: Ratio between neighboring widths in the graded part, defaults to 0.85
    :type ratio: float, optional
    :return: Strictly increasing nodes including 0 and 1
    :rtype: np.ndarray
    """
    if n_nodes is None or n_nodes < 3:
        return np.array([0.0, 0.5, 1.0])
    intervals = n_nodes - 1
    graded = (intervals // 2) // 3
    if ratio is None or not 0.0 < ratio < 1.0:
        graded = 0
    left = ratio ** np.arange(graded, 0, -1) if graded > 0 else np.zeros(0)
    middle = np.ones(intervals - 2 * graded)
    widths = np.concatenate([left, middle, left[::-1]])
    nodes = np.concatenate([[0.0], np.cumsum(widths)])
    nodes = nodes / nodes[-1]
    # Exact symmetry and exact endpoints.
    nodes = 0.5 * (nodes + (1.0 - nodes[::-1]))
    nodes[0] = 0.0
    nodes[-1] = 1.0
    return nodes

def insert_points(nodes:np.ndarray=None, points:List[float]=None, min_gap:float=1e-9) -> np.ndarray:
    """
    Adds points to a sorted node array, dropping any closer than min_gap to an existing node.

    :param nodes: Sorted node array, defaults to None
    :type nodes: np.ndarray, optional
    :param points: Points to add, defaults to None
    :type points: list[float], optional
    :param min_gap: Smallest allowed distance to an existing node, defaults to 1e-9
    :type min_gap: float, optional
    :return: Sorted array including the new points
    :rtype: np.ndarray
    """
    if nodes is None:
        return np.zeros(0)
    result = np.asarray(nodes, dtype=float)
    if points is None:
        return result
    for point in points:
        index = np.searchsorted(result, point)
        near_left = index > 0 and point - result[index - 1] < min_gap
        near_right = index < len(result) and result[index] - point < min_gap
        if not (near_left or near_right):
            result = np.insert(result, index, point)
    return result

def dyadic_grading(a:float, b:float, toward:str="left", levels:int=30) -> np.ndarray:
    """
    Returns increasing points from a to b that halve in spacing toward one end.

    :param a: Left end
    :type a: float
    :param b: Right end
    :type b: float
    :param toward: End the points cluster at, "left" or "right", defaults to "left"
    :type toward: str, optional
    :param levels: Number of halvings, defaults to 30
    :type levels: int, optional
    :return: Points including a and b
    :rtype: np.ndarray
    """
    fractions = np.concatenate([[0.0], 0.5 ** np.arange(levels, -1, -1)])
    if toward == "left":
        return a + (b - a) * fractions
    return b - (b - a) * fractions[::-1]

def log_grid(lo:float=1e-3, hi:float=1e3, per_decade:int=64) -> np.ndarray:
    """
    Returns log-spaced values from lo to hi with a given density per decade.

    :param lo: Smallest value, defaults to 1e-3
    :type lo: float, optional
    :param hi: Largest value, defaults to 1e3
    :type hi: float, optional
    :param per_decade: Values per decade, defaults to 64
    :type per_decade: int, optional
    :return: Increasing log-spaced values
    :rtype: np.ndarray
    """
    if lo is None or hi is None or not 0.0 < lo < hi:
        return np.zeros(0)
    decades = np.log10(hi) - np.log10(lo)
    count = max(int(round(decades * per_decade)) + 1, 2)
    return np.logspace(np.log10(lo), np.log10(hi), count)
