#!/usr/bin/env python3

"""
Functions on [0,1] stored as values at mesh nodes, the representation of
every iterate, image and solution.
"""

import numpy as np
from phi_lab.main.errors import InputError
from scipy.interpolate import PchipInterpolator

class GridFunction:
    """
    Function on [0,1] given by its values at mesh nodes, interpolated with
    monotone piecewise cubics (no overshoot between nodes).
    """

    def __init__(self, nodes:np.ndarray, values:np.ndarray):
        """
        Initializes the GridFunction.

        :param nodes: Strictly increasing nodes from 0 to 1
        :type nodes: np.ndarray
        :param values: One value per node
        :type values: np.ndarray
        """
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.nodes.ndim != 1 or len(self.nodes) < 2 or self.nodes.shape != self.values.shape:
            raise InputError("A grid function needs at least two nodes and one value per node")
        if self.nodes[0] != 0.0 or self.nodes[-1] != 1.0 or np.any(np.diff(self.nodes) <= 0.0):
            raise InputError("Grid function nodes must increase strictly from 0 to 1")
        self.interpolant = PchipInterpolator(self.nodes, self.values, extrapolate=False)

    def __call__(self, t) -> np.ndarray:
        points = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return self.interpolant(points)

    def derivative(self, t) -> np.ndarray:
        points = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return self.interpolant.derivative()(points)

    def sup_norm(self) -> float:
        """
        Returns max |u|, attained at a node since the interpolant does not overshoot.
        """
        return float(np.max(np.abs(self.values)))

    def peak(self) -> float:
        return float(self.nodes[np.argmax(self.values)])

    def scaled(self, factor:float) -> "GridFunction":
        return GridFunction(self.nodes, factor * self.values)

    def on(self, nodes:np.ndarray) -> "GridFunction":
        """
        Returns the interpolant resampled on other nodes.
        """
        return GridFunction(nodes, self(nodes))

def from_function(fn, nodes:np.ndarray) -> GridFunction:
    """
    Samples a vectorized function at mesh nodes.

    :param fn: Vectorized function on [0,1]
    :type fn: Callable
    :param nodes: Strictly increasing nodes from 0 to 1
    :type nodes: np.ndarray
    :return: Sampled grid function
    :rtype: GridFunction
    """
    nodes = np.asarray(nodes, dtype=float)
    return GridFunction(nodes, np.asarray(fn(nodes), dtype=float) * np.ones(len(nodes)))

def zero_function(nodes:np.ndarray) -> GridFunction:
    return GridFunction(nodes, np.zeros(len(nodes)))

def tent(nodes:np.ndarray, height:float=1.0, peak:float=0.5) -> GridFunction:
    """
    Returns the piecewise linear tent through (0,0), (peak, height) and (1,0).
    """
    nodes = np.asarray(nodes, dtype=float)
    values = height * np.where(nodes <= peak, nodes / peak, (1.0 - nodes) / (1.0 - peak))
    return GridFunction(nodes, values)
