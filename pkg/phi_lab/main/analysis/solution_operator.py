#!/usr/bin/env python3

"""
The solution operator T of -(d(t)phi(c(t)u'))' = g(t), u(0) = u(1) = 0, and
H(lambda, u) = T(lambda h f(u)).

For g >= 0 the solution is
    T(g)(t) = int_0^t (1/c) phi^-1((1/d) int_s^sigma g) ds     for t <= sigma
    T(g)(t) = int_t^1 (1/c) phi^-1((1/d) int_sigma^s g) ds     for t >= sigma
where sigma is a zero of nu_g = nu_g^1 - nu_g^2, the difference of the two
branch formulas evaluated with sigma = t.
"""

import numpy as np
from dataclasses import dataclass
from phi_lab.main.analysis.grid_function import GridFunction
from phi_lab.main.analysis.grid_function import zero_function
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.problem import compute_rho1
from phi_lab.main.analysis.quadrature import NestedIntegrand
from phi_lab.main.analysis.quadrature import SingularityHint
from phi_lab.main.analysis.quadrature import integrate
from phi_lab.main.analysis.quadrature import integrate_intervals
from phi_lab.main.errors import InputError
from phi_lab.main.errors import OperatorError
from phi_lab.main.errors import QuadratureError
from phi_lab.main.processing.grids import graded_mesh
from phi_lab.main.processing.grids import insert_points
from scipy.optimize import brentq
from typing import Callable, List, Tuple

INTERIOR = "interior"
INTERIOR_ALIAS = "lemma21"
CONE_K = "coneK"

def _identity(y:np.ndarray) -> np.ndarray:
    return y

@dataclass(frozen=True)
class SigmaResult:
    sigma:float
    zero_interval:Tuple[float, float] = None
    residual:float = 0.0

class Source:
    """
    Nonnegative source term g on (0,1) with its primitive G(x) = int_1/2^x g.

    Primitive values are cached, so every inner integral int_a^b g = G(b) - G(a)
    needed by one operator evaluation is computed once.
    """

    def __init__(self, g:Callable, breakpoints:List[float]=None, tol:float=1e-13):
        """
        Initializes the Source.

        :param g: Vectorized nonnegative function on (0,1)
        :type g: Callable
        :param breakpoints: Kinks of g, defaults to None
        :type breakpoints: list[float], optional
        :param tol: Relative tolerance of the cached gap integrals, defaults to 1e-13
        :type tol: float, optional
        """
        self.g = g
        points = [] if breakpoints is None else breakpoints
        self.breakpoints = sorted({float(p) for p in points if 0.0 < p < 1.0})
        self.left = NestedIntegrand(_identity, g, 0.5, "left", tol, self.breakpoints)
        self.right = NestedIntegrand(_identity, g, 0.5, "right", tol, self.breakpoints)
        self._vanishes = None

    def primitive(self, x) -> np.ndarray:
        points = np.asarray(x, dtype=float)
        result = np.zeros(points.shape)
        below = points < 0.5
        if np.any(below):
            result[below] = -self.left.inner(points[below])
        if np.any(~below):
            result[~below] = self.right.inner(points[~below])
        return result

    def converged(self) -> bool:
        return self.left.converged and self.right.converged

    def vanishes(self, samples:int=4097) -> bool:
        """
        Returns whether g is zero at every interior sample.
        """
        if self._vanishes is None:
            t = np.linspace(0.0, 1.0, samples)[1:-1]
            self._vanishes = not np.any(np.asarray(self.g(t), dtype=float) != 0.0)
        return self._vanishes

def as_source(instance:ProblemInstance, g) -> Source:
    """
    Wraps a callable source term, keeping Source objects as they are.
    """
    if isinstance(g, Source):
        return g
    return Source(g, instance.h_breakpoints)

def branch_integrand(instance:ProblemInstance, source:Source, anchor:float, side:str) -> Callable:
    """
    Returns s -> (1/c(s)) phi^-1((1/d(s)) |int_s^anchor g|) for s on one side of the anchor.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param source: Source term
    :type source: Source
    :param anchor: Peak abscissa the inner integrals start from
    :type anchor: float
    :param side: "left" or "right" of the anchor
    :type side: str
    :return: Vectorized outer integrand
    :rtype: Callable
    """
    top = source.primitive(np.array([anchor]))[0]
    sign = 1.0 if side == "left" else -1.0

    def integrand(s:np.ndarray) -> np.ndarray:
        inner = np.maximum(sign * (top - source.primitive(s)), 0.0)
        return instance.homeo.phi_inverse(inner / instance.d.values(s)) / instance.c.values(s)

    return integrand

def _branch(instance:ProblemInstance, source:Source, anchor:float, side:str) -> float:
    """
    Integrates one branch formula from the anchor to its endpoint.
    """
    integrand = branch_integrand(instance, source, anchor, side)
    tol = instance.numerics.quad_tol
    if side == "left":
        result = integrate(integrand, 0.0, anchor, tol, [SingularityHint("left")], source.breakpoints)
    else:
        result = integrate(integrand, anchor, 1.0, tol, [SingularityHint("right")], source.breakpoints)
    if result.diverged:
        raise QuadratureError(f"The {side} branch integral diverges at t={anchor!r};"
                    + " the source does not appear to be in H_phi")
    return result.value

def nu(instance:ProblemInstance, g, t:float) -> float:
    """
    Returns nu_g(t) = nu_g^1(t) - nu_g^2(t), nondecreasing in t.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param g: Source term, a Source or a vectorized nonnegative function
    :type g: Source or Callable
    :param t: Point in (0,1)
    :type t: float
    :return: nu_g(t)
    :rtype: float
    """
    if not 0.0 < t < 1.0:
        raise InputError(f"nu is evaluated on (0,1), got t={t!r}")
    source = as_source(instance, g)
    return _branch(instance, source, t, "left") - _branch(instance, source, t, "right")

def _plateau_end(value:Callable, inside:float, outside:float, threshold:float, tol:float) -> float:
    """
    Bisects for the end of the zero plateau of nu between a plateau point and a point beyond it.
    """
    a, b = inside, outside
    while abs(b - a) > tol:
        middle = 0.5 * (a + b)
        if abs(value(middle)) <= threshold:
            a = middle
        else:
            b = middle
    return a

def find_sigma(instance:ProblemInstance, g) -> SigmaResult:
    """
    Finds a zero of nu_g.

    nu_g is sampled on a coarse grid and the sign change is refined with
    brentq. When nu_g stays within tolerance of 0 over more than
    plateau_width around the root, the whole zero interval is bracketed
    and its midpoint returned.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param g: Source term, not identically 0
    :type g: Source or Callable
    :return: Peak abscissa with optional zero interval
    :rtype: SigmaResult
    """
    source = as_source(instance, g)
    if source.vanishes():
        raise OperatorError("nu has no sign change: the source vanishes")
    numerics = instance.numerics
    cache = {}

    def value(t:float) -> float:
        if t not in cache:
            cache[t] = nu(instance, source, t)
        return cache[t]

    samples = list(np.linspace(0.0, 1.0, 11)[1:-1])
    values = [value(t) for t in samples]
    scale = max(abs(v) for v in values)
    # NU MUST BE NEGATIVE NEAR 0 AND POSITIVE NEAR 1
    low, high = samples[0], samples[-1]
    for _ in range(40):
        if value(low) < 0.0 or scale == 0.0:
            break
        low = 0.5 * low
    for _ in range(40):
        if value(high) > 0.0 or scale == 0.0:
            break
        high = 1.0 - 0.5 * (1.0 - high)
    scale = max(scale, abs(value(low)), abs(value(high)))
    threshold = numerics.sigma_tol * scale
    if not (value(low) < -threshold and threshold < value(high)):
        raise OperatorError(f"nu has no sign change on [{low!r}, {high!r}]")
    ordered = sorted(cache)
    below = max(t for t in ordered if value(t) < -threshold)
    above = min(t for t in ordered if value(t) > threshold and t > below)
    sigma = brentq(value, below, above, xtol=1e-14, rtol=4.0 * np.finfo(float).eps)
    width = numerics.plateau_width
    left, right = max(sigma - width, below), min(sigma + width, above)
    if abs(value(left)) <= threshold or abs(value(right)) <= threshold:
        # THE PLATEAU ENDS ARE SEARCHED FROM THE ROOT OUT TO THE NEAREST SIGNED SAMPLES
        start = _plateau_end(value, sigma, below, threshold, 1e-10)
        end = _plateau_end(value, sigma, above, threshold, 1e-10)
        if end - start >= width:
            middle = 0.5 * (start + end)
            return SigmaResult(middle, (start, end), abs(value(middle)))
    return SigmaResult(sigma, None, abs(value(sigma)))

def _with_node(nodes:np.ndarray, point:float, min_gap:float=1e-9) -> Tuple[np.ndarray, int]:
    """
    Makes point a node, moving an interior node closer than min_gap onto it.
    """
    index = int(np.argmin(np.abs(nodes - point)))
    if abs(nodes[index] - point) < min_gap and 0 < index < len(nodes) - 1:
        nodes = nodes.copy()
        nodes[index] = point
        return nodes, index
    nodes = insert_points(nodes, [point], 0.0)
    return nodes, int(np.searchsorted(nodes, point))

def _branch_values(instance:ProblemInstance, source:Source, nodes:np.ndarray, sigma:float,
            side:str) -> np.ndarray:
    """
    Evaluates one branch formula at increasing nodes from an endpoint to sigma
    (side "left") or from sigma to an endpoint (side "right").
    """
    integrand = branch_integrand(instance, source, sigma, side)
    tol = instance.numerics.quad_tol
    if len(nodes) < 2:
        return np.zeros(len(nodes))
    pieces = np.zeros(len(nodes) - 1)
    if side == "left":
        end = integrate(integrand, nodes[0], nodes[1], tol, [SingularityHint("left")])
        pieces[0] = end.value
        converged = True
        if len(nodes) > 2:
            pieces[1:], _, converged = integrate_intervals(integrand, nodes[1:-1], nodes[2:], tol)
    else:
        end = integrate(integrand, nodes[-2], nodes[-1], tol, [SingularityHint("right")])
        pieces[-1] = end.value
        converged = True
        if len(nodes) > 2:
            pieces[:-1], _, converged = integrate_intervals(integrand, nodes[:-2], nodes[1:-1], tol)
    if not converged or end.diverged:
        raise QuadratureError(f"The {side} branch of T did not converge between the mesh nodes"
                    + f" (sigma={float(sigma)!r})")
    if side == "left":
        return np.concatenate([[0.0], np.cumsum(pieces)])
    return np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])

def image_of(instance:ProblemInstance, g, mesh:np.ndarray=None,
            sigma:float=None) -> Tuple[GridFunction, SigmaResult]:
    """
    Evaluates T(g) at every mesh node, with sigma and the support breakpoints added as nodes.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param g: Source term
    :type g: Source or Callable
    :param mesh: Nodes from 0 to 1, defaults to the instance's graded mesh
    :type mesh: np.ndarray, optional
    :param sigma: Peak abscissa to use instead of solving for it, defaults to None
    :type sigma: float, optional
    :return: T(g) and the peak abscissa it was built with
    :rtype: tuple
    """
    source = as_source(instance, g)
    numerics = instance.numerics
    nodes = (graded_mesh(numerics.mesh_nodes, numerics.mesh_ratio) if mesh is None
                else np.asarray(mesh, dtype=float))
    if source.vanishes():
        return zero_function(nodes), None
    result = find_sigma(instance, source) if sigma is None else SigmaResult(sigma)
    if not 0.0 < result.sigma < 1.0:
        raise OperatorError(f"Peak abscissa {result.sigma!r} is outside (0,1)")
    nodes = insert_points(nodes, source.breakpoints)
    nodes, k = _with_node(nodes, result.sigma)
    left = _branch_values(instance, source, nodes[:k + 1], result.sigma, "left")
    right = _branch_values(instance, source, nodes[k:], result.sigma, "right")
    if not source.converged():
        raise QuadratureError("The source primitive did not converge within the evaluation budget")
    values = np.concatenate([left[:-1], [0.5 * (left[-1] + right[0])], right[1:]])
    return GridFunction(nodes, values), result

def apply_T(instance:ProblemInstance, g, mesh:np.ndarray=None, sigma:float=None) -> GridFunction:
    """
    Returns T(g) on a mesh; T(0) = 0 and the boundary values are exactly 0.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param g: Source term
    :type g: Source or Callable
    :param mesh: Nodes from 0 to 1, defaults to the instance's graded mesh
    :type mesh: np.ndarray, optional
    :param sigma: Peak abscissa to use instead of solving for it, defaults to None
    :type sigma: float, optional
    :return: T(g)
    :rtype: GridFunction
    """
    return image_of(instance, g, mesh, sigma)[0]

def nonlinear_source(instance:ProblemInstance, lam:float, u:GridFunction) -> Source:
    """
    Returns the source F(lambda, u) = lambda h f(u), with u clipped at 0.
    """
    f = instance.f.values
    h = instance.h.values
    g = lambda t: lam * h(t) * f(np.maximum(u(t), 0.0))
    return Source(g, instance.h_breakpoints + list(u.nodes[1:-1]))

def apply_H(instance:ProblemInstance, lam:float, u:GridFunction, mesh:np.ndarray=None) -> GridFunction:
    """
    Returns H(lambda, u) = T(lambda h f(u)); H(0, u) = 0.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param lam: Nonnegative parameter
    :type lam: float
    :param u: Nonnegative grid function
    :type u: GridFunction
    :param mesh: Output nodes, defaults to the nodes of u
    :type mesh: np.ndarray, optional
    :return: H(lambda, u)
    :rtype: GridFunction
    """
    nodes = u.nodes if mesh is None else mesh
    if lam < 0.0:
        raise InputError(f"lambda must be nonnegative, got {lam!r}")
    if lam == 0.0:
        return zero_function(nodes)
    return apply_T(instance, nonlinear_source(instance, lam, u), nodes)

def cone_margin(instance:ProblemInstance, u:GridFunction, mode:str=INTERIOR) -> float:
    """
    Returns the margin of u in one of the two cone bounds; nonnegative means the bound holds.

    interior (also accepted as lemma21): min over nodes of u(t) - min(t, 1-t) rho1 |u|.
    coneK: min over [gamma1, gamma2] of u(t) - rho_h |u|.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param u: Grid function
    :type u: GridFunction
    :param mode: "interior" or "coneK", defaults to "interior"
    :type mode: str, optional
    :return: Margin
    :rtype: float
    """
    norm = u.sup_norm()
    rho1 = compute_rho1(instance)
    if mode in (INTERIOR, INTERIOR_ALIAS):
        t = u.nodes
        return float(np.min(u.values - np.minimum(t, 1.0 - t) * rho1 * norm))
    if mode == CONE_K:
        profile = instance.weight_profile()
        rho_h = rho1 * min(profile.gamma1, 1.0 - profile.gamma2)
        inside = (u.nodes >= profile.gamma1) & (u.nodes <= profile.gamma2)
        values = np.concatenate([u.values[inside], u([profile.gamma1, profile.gamma2])])
        return float(np.min(values) - rho_h * norm)
    raise InputError(f"Unknown cone mode {mode!r}, expected {INTERIOR}, {INTERIOR_ALIAS}"
                + f" or {CONE_K}")

def residual(instance:ProblemInstance, lam:float, u:GridFunction) -> Tuple[float, float]:
    """
    Returns the fixed-point residual max |u - H(lambda, u)| over the nodes of u and
    the quasi-derivative residual max |d phi(c u') - int_t^sigma F(lambda, u)| over
    the interior nodes, leaving out the two nodes nearest each endpoint.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param lam: Nonnegative parameter
    :type lam: float
    :param u: Candidate solution
    :type u: GridFunction
    :return: Fixed-point and quasi-derivative residuals
    :rtype: tuple
    """
    source = nonlinear_source(instance, lam, u)
    if lam == 0.0 or source.vanishes():
        image, sigma = zero_function(u.nodes), None
    else:
        image, sigma = image_of(instance, source, u.nodes)
    sup_residual = float(np.max(np.abs(u.values - image(u.nodes))))
    t = u.nodes[2:-2]
    if len(t) == 0:
        return sup_residual, 0.0
    slope = np.gradient(u.values, u.nodes)[2:-2]
    quasi = instance.d.values(t) * instance.homeo.phi_values(instance.c.values(t) * slope)
    expected = np.zeros(len(t))
    if sigma is not None:
        expected = source.primitive(np.array([sigma.sigma]))[0] - source.primitive(t)
    return sup_residual, float(np.max(np.abs(quasi - expected)))
