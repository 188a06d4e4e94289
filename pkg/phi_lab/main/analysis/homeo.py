#!/usr/bin/env python3

"""
The odd increasing homeomorphism phi, its control pair (psi1, psi2) and
their numerical inverses.
"""

import numpy as np
from dataclasses import dataclass
from phi_lab.main.errors import DomainError
from phi_lab.main.errors import HomeoError
from phi_lab.main.errors import InversionError
from phi_lab.main.processing.expr import Expression
from typing import Callable, Tuple

EPSILON = np.finfo(float).eps

class MonotoneInverse:
    """
    Inverse of an increasing function of [0, inf) fixing 0.

    Roots are bracketed from a log-spaced table of the function, started from
    log-log interpolation inside the bracket and finished by Illinois
    false-position steps. Values at or below 0 map to 0.
    """

    def __init__(self, fn:Callable, name:str="fn", tolerance:float=1e-12,
                bracket_growth:float=2.0, table_size:int=24001,
                max_iterations:int=200, max_expansions:int=2000):
        """
        Initializes the MonotoneInverse and checks the function on its table.

        :param fn: Vectorized increasing function of [0, inf)
        :type fn: Callable
        :param name: Name used in error messages, defaults to "fn"
        :type name: str, optional
        :param tolerance: Relative tolerance on fn(x) - y, defaults to 1e-12
        :type tolerance: float, optional
        :param bracket_growth: Expansion factor beyond the table, defaults to 2.0
        :type bracket_growth: float, optional
        :param table_size: Number of log-spaced table points in [1e-12, 1e12], defaults to 24001
        :type table_size: int, optional
        """
        self.fn = fn
        self.name = name
        self.tolerance = tolerance
        self.bracket_growth = bracket_growth
        self.max_iterations = max_iterations
        self.max_expansions = max_expansions
        x = np.concatenate([[0.0], np.logspace(-12.0, 12.0, table_size)])
        try:
            y = np.asarray(fn(x), dtype=float)
        except DomainError as error:
            raise HomeoError(f"{name} cannot be evaluated on [0, 1e12]: {error}") from None
        if y[0] != 0.0:
            raise HomeoError(f"{name}(0) = {y[0]!r}, expected 0")
        steps = np.diff(y)
        if not np.all(steps > 0.0):
            bad = int(np.argmin(steps))
            raise HomeoError(f"{name} is not strictly increasing near {x[bad]!r}")
        self.table_x = x
        self.table_y = y
        self.log_x = np.log(x[1:])
        self.log_y = np.log(y[1:])

    def _evaluate(self, x:np.ndarray) -> np.ndarray:
        try:
            return np.asarray(self.fn(x), dtype=float)
        except DomainError as error:
            raise InversionError(f"{self.name} failed while inverting: {error}") from None

    def _expand(self, y:float) -> Tuple[float, float, float, float]:
        """
        Grows a bracket past the end of the table for a single large value.
        """
        lo = self.table_x[-1]
        f_lo = self.table_y[-1]
        for _ in range(self.max_expansions):
            hi = lo * self.bracket_growth
            if not np.isfinite(hi):
                break
            f_hi = self._evaluate(np.array([hi]))[0]
            if not f_hi > f_lo:
                raise HomeoError(f"{self.name} is not strictly increasing near {lo!r}")
            if f_hi >= y:
                return lo, f_lo - y, hi, f_hi - y
            lo, f_lo = hi, f_hi
        raise InversionError(f"No bracket found for {self.name}^-1({y!r});"
                    + f" {self.name} may not be onto [0, inf)")

    def __call__(self, y) -> np.ndarray:
        values = np.asarray(y, dtype=float)
        flat = values.ravel()
        result = np.zeros(flat.shape)
        positive = flat > 0.0
        if np.any(positive):
            result[positive] = self._solve(flat[positive])
        return result.reshape(values.shape)

    def _solve(self, y:np.ndarray) -> np.ndarray:
        size = len(self.table_y)
        index = np.searchsorted(self.table_y, y, side="right") - 1
        beyond = index >= size - 1
        inside = np.minimum(index, size - 2)
        a = self.table_x[inside].copy()
        fa = self.table_y[inside] - y
        b = self.table_x[inside + 1].copy()
        fb = self.table_y[inside + 1] - y
        for i in np.flatnonzero(beyond):
            a[i], fa[i], b[i], fb[i] = self._expand(y[i])
        x = np.where(fa == 0.0, a, b)
        done = (fa == 0.0) | (fb == 0.0)
        # Log-log interpolation gives the first iterate.
        guess = np.flatnonzero(~done & ~beyond & (inside > 0))
        if len(guess) > 0:
            k = inside[guess] - 1
            weight = (np.log(y[guess]) - self.log_y[k]) / (self.log_y[k + 1] - self.log_y[k])
            x0 = np.exp(self.log_x[k] + weight * (self.log_x[k + 1] - self.log_x[k]))
            x0 = np.clip(x0, a[guess], b[guess])
            f0 = self._evaluate(x0) - y[guess]
            low = f0 <= 0.0
            a[guess] = np.where(low, x0, a[guess])
            fa[guess] = np.where(low, f0, fa[guess])
            b[guess] = np.where(low, b[guess], x0)
            fb[guess] = np.where(low, fb[guess], f0)
            x[guess] = x0
            done[guess] = np.abs(f0) <= self.tolerance * y[guess]
        side = np.zeros(len(y), dtype=int)
        for _ in range(self.max_iterations):
            active = np.flatnonzero(~done)
            if len(active) == 0:
                return x
            aa, bb = a[active], b[active]
            fa_, fb_ = fa[active], fb[active]
            trial = (aa * fb_ - bb * fa_) / (fb_ - fa_)
            outside = ~((trial > aa) & (trial < bb))
            trial[outside] = 0.5 * (aa[outside] + bb[outside])
            f_trial = self._evaluate(trial) - y[active]
            low = f_trial < 0.0
            last = side[active]
            # Illinois: halve the stale endpoint when one side moves twice.
            new_fb = np.where(low & (last == -1), 0.5 * fb_, fb_)
            new_fa = np.where(~low & (last == 1), 0.5 * fa_, fa_)
            a[active] = np.where(low, trial, aa)
            fa[active] = np.where(low, f_trial, new_fa)
            b[active] = np.where(low, bb, trial)
            fb[active] = np.where(low, new_fb, f_trial)
            side[active] = np.where(low, -1, 1)
            x[active] = trial
            width = b[active] - a[active]
            done[active] = ((np.abs(f_trial) <= self.tolerance * y[active])
                        | (width <= 4.0 * EPSILON * b[active]))
        if not np.all(done):
            bad = y[~done][0]
            raise InversionError(f"{self.name}^-1({bad!r}) did not converge")
        return x

class HomeoBundle:
    """
    phi with its control pair and their inverses.
    phi is evaluated on [0, inf) and extended oddly.
    """

    def __init__(self, phi:Expression, psi1:Expression, psi2:Expression,
                inverse_tolerance:float=1e-12, bracket_growth:float=2.0):
        """
        Initializes the HomeoBundle, checking monotonicity and the origin of all three functions.

        :param phi: phi on [0, inf)
        :type phi: Expression
        :param psi1: Lower control function
        :type psi1: Expression
        :param psi2: Upper control function
        :type psi2: Expression
        :param inverse_tolerance: Relative tolerance of the inverses, defaults to 1e-12
        :type inverse_tolerance: float, optional
        :param bracket_growth: Expansion factor used past the inverse tables, defaults to 2.0
        :type bracket_growth: float, optional
        """
        if inverse_tolerance is None or not inverse_tolerance > 0.0:
            raise HomeoError("inverse_tolerance must be positive")
        if bracket_growth is None or not bracket_growth > 1.0:
            raise HomeoError("bracket_growth must be greater than 1")
        self.phi = phi
        self.psi1 = psi1
        self.psi2 = psi2
        self.inverse_tolerance = inverse_tolerance
        self.bracket_growth = bracket_growth
        self.inverses = {}
        for name, e in (("phi", phi), ("psi1", psi1), ("psi2", psi2)):
            self.inverses[name] = MonotoneInverse(e.values, name, inverse_tolerance, bracket_growth)

    def phi_values(self, x) -> np.ndarray:
        values = np.asarray(x, dtype=float)
        return np.sign(values) * self.phi.values(np.abs(values))

    def phi_inverse(self, y) -> np.ndarray:
        values = np.asarray(y, dtype=float)
        return np.sign(values) * self.inverses["phi"](np.abs(values))

    def psi1_values(self, y) -> np.ndarray:
        return self.psi1.values(y)

    def psi2_values(self, y) -> np.ndarray:
        return self.psi2.values(y)

    def psi1_inverse(self, y) -> np.ndarray:
        return self.inverses["psi1"](y)

    def psi2_inverse(self, y) -> np.ndarray:
        return self.inverses["psi2"](y)

    def inverse(self, which:str) -> Callable:
        """
        Returns the vectorized inverse of phi, psi1 or psi2.
        """
        if which == "phi":
            return self.phi_inverse
        if which in ("psi1", "psi2"):
            return self.inverses[which]
        raise HomeoError(f"Unknown function '{which}', expected phi, psi1 or psi2")

@dataclass(frozen=True)
class CheckReport:
    name:str
    passed:bool
    worst_margin:float
    worst_point:Tuple[float, float]
    tolerance:float
    points:int

def eval_phi(b:HomeoBundle, x:float) -> float:
    """
    Evaluates the odd extension of phi.

    :param b: Homeomorphism bundle
    :type b: HomeoBundle
    :param x: Any real
    :type x: float
    :return: phi(x) for x >= 0, -phi(-x) otherwise
    :rtype: float
    """
    return float(b.phi_values(np.array([x]))[0])

def invert(b:HomeoBundle, which:str, y:float) -> float:
    """
    Inverts phi, psi1 or psi2 at a single value.

    :param b: Homeomorphism bundle
    :type b: HomeoBundle
    :param which: "phi", "psi1" or "psi2"
    :type which: str
    :param y: Value to invert, nonnegative for the psi functions
    :type y: float
    :return: x with |fn(x) - y| <= tolerance * (1 + |y|)
    :rtype: float
    """
    if which != "phi" and y < 0.0:
        raise DomainError(f"{which}^-1 is only defined on [0, inf), got {y!r}")
    return float(b.inverse(which)(np.array([y]))[0])

def default_lattice() -> np.ndarray:
    """
    Returns the default verification lattice: 64 log-spaced values per axis in
    [1e-6, 1e6] plus points next to the origin and the unit point.

    :return: Array of (x, y) pairs
    :rtype: np.ndarray
    """
    axis = np.concatenate([[1e-9], np.logspace(-6.0, 6.0, 64), [1.0]])
    x, y = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([x.ravel(), y.ravel()])

def _relative_margin(low:np.ndarray, high:np.ndarray) -> np.ndarray:
    scale = np.abs(low) + np.abs(high)
    return np.where(scale > 0.0, (high - low) / np.where(scale > 0.0, scale, 1.0), 0.0)

def _report(name:str, lattice:np.ndarray, margins:np.ndarray, tolerance:float) -> CheckReport:
    worst = int(np.argmin(margins))
    point = (float(lattice[worst % len(lattice), 0]), float(lattice[worst % len(lattice), 1]))
    margin = float(margins[worst])
    return CheckReport(name, margin >= -tolerance, margin, point, tolerance, len(lattice))

def check_condition_A(b:HomeoBundle, lattice:np.ndarray=None, tolerance:float=1e-9) -> CheckReport:
    """
    Checks phi(x)psi1(y) <= phi(xy) <= phi(x)psi2(y) on a lattice.
    Margins are relative to the size of the compared values.

    :param b: Homeomorphism bundle
    :type b: HomeoBundle
    :param lattice: (x, y) pairs in the positive quadrant, defaults to default_lattice()
    :type lattice: np.ndarray, optional
    :param tolerance: Allowed relative violation, defaults to 1e-9
    :type tolerance: float, optional
    :return: Report with the worst margin over both inequalities
    :rtype: CheckReport
    """
    points = default_lattice() if lattice is None else np.asarray(lattice, dtype=float)
    x = points[:, 0]
    y = points[:, 1]
    phi_x = b.phi_values(x)
    phi_xy = b.phi_values(x * y)
    lower = _relative_margin(phi_x * b.psi1_values(y), phi_xy)
    upper = _relative_margin(phi_xy, phi_x * b.psi2_values(y))
    return _report("condition A", points, np.concatenate([lower, upper]), tolerance)

def check_inverse_sandwich(b:HomeoBundle, lattice:np.ndarray=None, tolerance:float=1e-9) -> CheckReport:
    """
    Checks phi^-1(x)psi2^-1(y) <= phi^-1(xy) <= phi^-1(x)psi1^-1(y) on a lattice.

    :param b: Homeomorphism bundle
    :type b: HomeoBundle
    :param lattice: (x, y) pairs in the positive quadrant, defaults to default_lattice()
    :type lattice: np.ndarray, optional
    :param tolerance: Allowed relative violation, defaults to 1e-9
    :type tolerance: float, optional
    :return: Report with the worst margin over both inequalities
    :rtype: CheckReport
    """
    points = default_lattice() if lattice is None else np.asarray(lattice, dtype=float)
    x = points[:, 0]
    y = points[:, 1]
    inverse_x = b.phi_inverse(x)
    inverse_xy = b.phi_inverse(x * y)
    lower = _relative_margin(inverse_x * b.psi2_inverse(y), inverse_xy)
    upper = _relative_margin(inverse_xy, inverse_x * b.psi1_inverse(y))
    return _report("inverse sandwich", points, np.concatenate([lower, upper]), tolerance)
