#!/usr/bin/env python3

"""
Problem instances of -(d(t)phi(c(t)u'))' = lambda h(t) f(u), u(0) = u(1) = 0,
with the support profile of the weight and every derived constant and curve
the existence criteria are built from.
"""

import numpy as np
from dataclasses import dataclass
from phi_lab.main.analysis.homeo import HomeoBundle
from phi_lab.main.analysis.homeo import invert
from phi_lab.main.analysis.quadrature import QuadResult
from phi_lab.main.analysis.quadrature import SingularityHint
from phi_lab.main.analysis.quadrature import integrate
from phi_lab.main.analysis.quadrature import nested_weight_integral
from phi_lab.main.errors import DomainError
from phi_lab.main.errors import InputError
from phi_lab.main.errors import InstanceError
from phi_lab.main.errors import QuadratureError
from phi_lab.main.processing.expr import Expression
from phi_lab.main.processing.expr import parse_expr
from phi_lab.main.processing.expr import substitute_variable
from scipy.optimize import minimize_scalar
from typing import Callable, Dict, List, Tuple

SUPPORT_KEYS = ("alpha", "alpha_bar", "beta_bar", "beta")

ZERO = "zero"
FINITE = "finite"
INFINITE = "infinite"
INCONCLUSIVE = "inconclusive"

@dataclass(frozen=True)
class Numerics:
    """
    Every tolerance, grid size, threshold and budget of the numerical modules.
    """
    quad_tol:float = 1e-10
    inverse_tolerance:float = 1e-12
    bracket_growth:float = 2.0
    verify_points:int = 1025
    zero_threshold:float = 1e-12
    support_points:int = 4097
    support_tol:float = 1e-9
    support_snap:float = 1e-6
    membership_levels:int = 40
    membership_window:int = 8
    envelope_samples:int = 257
    limit_decades:int = 12
    limit_factor:float = 10.0
    limit_trend_decades:int = 4
    limit_finite_change:float = 1e-3
    limit_finite_decades:int = 3
    ratio_points:int = 2001
    ratio_lo:float = 1e-8
    ratio_hi:float = 1e8
    mesh_nodes:int = 257
    mesh_ratio:float = 0.85
    sigma_tol:float = 1e-10
    plateau_width:float = 1e-6
    tail_epsilon:float = 1e-4
    tail_floor:float = 1e-12
    shooting_steps:int = 256
    shooting_rtol:float = 1e-12
    newton_step:float = 1e-6
    newton_tol:float = 1e-10
    newton_max_iter:int = 50
    newton_halvings:int = 5
    bracket_expansions:int = 30
    illinois_tol:float = 1e-8
    illinois_max_iter:int = 60
    cluster_tol:float = 1e-3
    solver_tol:float = 1e-6
    cone_tol:float = 1e-8
    picard_tol:float = 1e-10
    picard_max_iter:int = 300
    stall_halvings:int = 6
    mgrid_lo:float = 1e-3
    mgrid_hi:float = 1e3
    mgrid_per_decade:int = 64
    scan_lo:float = 1e-6
    scan_hi:float = 1e6
    scan_per_decade:int = 32
    edge_extensions:int = 3
    trend_samples:int = 5

@dataclass(frozen=True)
class WeightProfile:
    alpha:float
    alpha_bar:float
    beta_bar:float
    beta:float
    gamma1:float
    gamma2:float
    gamma:float
    declared:Tuple[str, ...] = ()

@dataclass(frozen=True)
class DerivedConstants:
    rho1:float
    rho_h:float
    gamma0:float
    A1:float
    A1_error:float
    A2:float
    A2_error:float
    h_star:float
    h_star_error:float
    h_upper:float
    h_upper_error:float

@dataclass(frozen=True)
class LimitClass:
    """
    Classification of a limit of f(s)/phi(s); value is set for finite limits.
    """
    kind:str
    value:float = None
    method:str = ""

def _scalar(fn:Callable) -> Callable:
    return lambda x: float(np.asarray(fn(np.array([x], dtype=float)))[0])

def _checked_values(fn:Callable, x:np.ndarray, label:str) -> np.ndarray:
    """
    Evaluates user data on a verification grid, reporting failures as InstanceError.
    """
    try:
        return np.asarray(fn(x), dtype=float)
    except DomainError as error:
        raise InstanceError(f"{label} cannot be evaluated on the verification grid: {error}") from None

def _refined_extremum(fn:Callable, grid:np.ndarray, values:np.ndarray, kind:str) -> float:
    """
    Returns the min or max of fn, refined by a bounded scalar search
    around the best grid sample.
    """
    sign = 1.0 if kind == "min" else -1.0
    index = int(np.argmin(sign * values))
    best = float(values[index])
    lo = grid[max(index - 1, 0)]
    hi = grid[min(index + 1, len(grid) - 1)]
    if hi > lo:
        scalar = _scalar(fn)
        result = minimize_scalar(lambda t: sign * scalar(t), bounds=(lo, hi),
                    method="bounded", options={"xatol":1e-12})
        if sign * result.fun < sign * best:
            best = sign * float(result.fun)
    return best

class ProblemInstance:
    """
    phi-bundle, coefficients c and d, weight h and nonlinearity f of one problem.

    The instance is fixed after construction; the weight profile, the derived
    constants and the f^* sample grid are memoized on first use.
    """

    def __init__(self, homeo:HomeoBundle, c:Expression, d:Expression, h:Expression, f:Expression,
                hints:List[SingularityHint]=None, declared:Dict[str, float]=None,
                numerics:Numerics=None, name:str="instance"):
        """
        Initializes the ProblemInstance, checking positivity of c, d and f and admissibility of h.

        :param homeo: phi with its control pair
        :type homeo: HomeoBundle
        :param c: Coefficient inside phi, positive on [0,1]
        :type c: Expression
        :param d: Coefficient outside phi, positive on [0,1]
        :type d: Expression
        :param h: Nonnegative weight on (0,1), not identically 0
        :type h: Expression
        :param f: Nonlinearity on [0, inf), positive for s > 0
        :type f: Expression
        :param hints: Endpoint singularities of h, defaults to None
        :type hints: list[SingularityHint], optional
        :param declared: Declared support structure (alpha, alpha_bar, beta_bar, beta), defaults to None
        :type declared: dict, optional
        :param numerics: Numerical parameters, defaults to Numerics()
        :type numerics: Numerics, optional
        :param name: Name used in reports, defaults to "instance"
        :type name: str, optional
        """
        self.homeo = homeo
        self.c = c
        self.d = d
        self.h = h
        self.f = f
        self.hints = [] if hints is None else list(hints)
        self.declared = {} if declared is None else dict(declared)
        self.numerics = Numerics() if numerics is None else numerics
        self.name = name
        unknown = set(self.declared) - set(SUPPORT_KEYS)
        if len(unknown) > 0:
            raise InstanceError(f"Unknown support declarations: {sorted(unknown)}")
        # COEFFICIENTS
        grid = np.linspace(0.0, 1.0, self.numerics.verify_points)
        c_values = _checked_values(c.values, grid, "c")
        d_values = _checked_values(d.values, grid, "d")
        for label, values in (("c", c_values), ("d", d_values)):
            if np.any(values <= 0.0):
                bad = grid[np.argmin(values)]
                raise InstanceError(f"{label} must be positive on [0,1],"
                            + f" {label}({float(bad)!r}) <= 0")
        self.c0 = _refined_extremum(c.values, grid, c_values, "min")
        self.c_max = _refined_extremum(c.values, grid, c_values, "max")
        self.d0 = _refined_extremum(d.values, grid, d_values, "min")
        self.d_max = _refined_extremum(d.values, grid, d_values, "max")
        if not self.c0 > 0.0 or not self.d0 > 0.0:
            raise InstanceError("c and d must be bounded away from 0 on [0,1]")
        # WEIGHT
        interior = grid[1:-1]
        h_values = _checked_values(h.values, interior, "h")
        if np.any(h_values < 0.0):
            bad = interior[np.argmin(h_values)]
            raise InstanceError(f"h must be nonnegative, h({float(bad)!r}) < 0")
        if not np.any(h_values > self.numerics.zero_threshold):
            raise InstanceError("h vanishes on the verification grid")
        self.h_breakpoints = [p for p in h.breakpoints() if 0.0 < p < 1.0]
        # NONLINEARITY
        s = np.concatenate([[0.0], np.logspace(-8.0, 8.0, self.numerics.verify_points)])
        f_values = _checked_values(f.values, s, "f")
        if f_values[0] < 0.0:
            raise InstanceError(f"f(0) must be nonnegative, got {float(f_values[0])!r}")
        if np.any(f_values[1:] <= 0.0):
            bad = s[1:][np.argmin(f_values[1:])]
            raise InstanceError(f"f must be positive for s > 0, f({float(bad)!r}) <= 0")
        self._profile = None
        self._constants = None
        self._upper_grid = None

    def weight_profile(self) -> WeightProfile:
        if self._profile is None:
            self._profile = analyze_weight(self.h.values, self.declared, self.numerics,
                        self.h_breakpoints)
        return self._profile

    def derived_constants(self) -> DerivedConstants:
        if self._constants is None:
            self._constants = derive_constants(self)
        return self._constants

    def inner_scale(self, t:np.ndarray) -> np.ndarray:
        return 1.0 / self.d.values(t)

    def outer_weight(self, t:np.ndarray) -> np.ndarray:
        return 1.0 / self.c.values(t)

    def with_f(self, f:Expression) -> "ProblemInstance":
        """
        Returns a copy of this instance with another nonlinearity, keeping the
        f-independent memoized constants.
        """
        other = ProblemInstance(self.homeo, self.c, self.d, self.h, f, self.hints,
                    self.declared, self.numerics, self.name)
        other._profile = self._profile
        other._constants = self._constants
        return other

def _positive(h:Callable, t:float, threshold:float, scale:float) -> bool:
    return abs(float(h(np.array([t]))[0])) >= threshold * (1.0 + scale)

def _boundary(h:Callable, zero_end:float, positive_end:float, threshold:float,
            scale:float, tol:float) -> float:
    """
    Bisects between a sample where h vanishes and one where it is positive.
    """
    a, b = zero_end, positive_end
    while abs(b - a) > tol:
        middle = 0.5 * (a + b)
        if _positive(h, middle, threshold, scale):
            b = middle
        else:
            a = middle
    return 0.5 * (a + b)

def _snap(value:float, breakpoints:List[float], distance:float) -> float:
    for point in breakpoints:
        if abs(point - value) <= distance:
            return float(point)
    return value

def scan_support(h:Callable, numerics:Numerics=None, breakpoints:List[float]=None) -> Dict[str, float]:
    """
    Locates alpha, alpha_bar, beta_bar and beta of a weight from samples.

    h counts as zero where |h| < zero_threshold * (1 + local scale), the local
    scale being the largest |h| among the 8 neighboring samples on each side.
    Detected boundaries are bisected to support_tol and snapped to breakpoints
    of h within support_snap.

    :param h: Vectorized weight on (0,1)
    :type h: Callable
    :param numerics: Numerical parameters, defaults to Numerics()
    :type numerics: Numerics, optional
    :param breakpoints: Kinks of h, defaults to None
    :type breakpoints: list[float], optional
    :return: Support values by name
    :rtype: dict
    """
    numerics = Numerics() if numerics is None else numerics
    breakpoints = [] if breakpoints is None else list(breakpoints)
    t = np.linspace(0.0, 1.0, numerics.support_points)[1:-1]
    try:
        magnitude = np.abs(np.asarray(h(t), dtype=float))
    except DomainError as error:
        raise InstanceError(f"h cannot be evaluated on the support grid: {error}") from None
    padded = np.pad(magnitude, 8, mode="edge")
    local = np.max(np.lib.stride_tricks.sliding_window_view(padded, 17), axis=1)
    threshold = numerics.zero_threshold
    positive = magnitude >= threshold * (1.0 + local)
    if not np.any(positive):
        raise InstanceError("h vanishes on the support grid")
    indices = np.flatnonzero(positive)
    first, last = indices[0], indices[-1]
    boundary = lambda zero_end, positive_end, index: _snap(_boundary(h, zero_end, positive_end,
                threshold, local[index], numerics.support_tol), breakpoints, numerics.support_snap)
    support = {}
    support["alpha"] = 0.0 if first == 0 else boundary(t[first - 1], t[first], first)
    gaps = np.flatnonzero(~positive[first:])
    support["alpha_bar"] = (1.0 if len(gaps) == 0
                else boundary(t[first + gaps[0]], t[first + gaps[0] - 1], first + gaps[0] - 1))
    support["beta"] = 1.0 if last == len(t) - 1 else boundary(t[last + 1], t[last], last)
    gaps = np.flatnonzero(~positive[:last])
    support["beta_bar"] = (0.0 if len(gaps) == 0
                else boundary(t[gaps[-1]], t[gaps[-1] + 1], gaps[-1] + 1))
    # A boundary sitting on the first or last sample is the interval end itself.
    if support["alpha"] <= t[0]:
        support["alpha"] = 0.0
    if support["beta_bar"] <= t[0]:
        support["beta_bar"] = 0.0
    return support

def _support_text(support:Dict[str, float]) -> str:
    return ", ".join(f"{key}={float(value)!r}" for key, value in support.items())

def _check_declared(h:Callable, support:Dict[str, float], numerics:Numerics):
    """
    Checks a declared support structure against samples of h.
    """
    alpha, alpha_bar = support["alpha"], support["alpha_bar"]
    beta_bar, beta = support["beta_bar"], support["beta"]
    if not (0.0 <= alpha < alpha_bar <= 1.0 and 0.0 <= beta_bar < beta <= 1.0):
        raise InstanceError(f"Declared support {_support_text(support)} is not ordered")
    t = np.linspace(0.0, 1.0, numerics.support_points)[1:-1]
    values = np.abs(np.asarray(h(t), dtype=float))
    margin = numerics.support_snap
    zero = ((t < alpha - margin) | (t > beta + margin))
    inner = (((t > alpha + margin) & (t < alpha_bar - margin))
                | ((t > beta_bar + margin) & (t < beta - margin)))
    threshold = numerics.zero_threshold * (1.0 + np.max(values))
    if np.any(values[zero] >= threshold):
        raise InstanceError("h is not zero outside the declared support"
                    + f" [{float(alpha)!r}, {float(beta)!r}]")
    if np.any(values[inner] < threshold):
        raise InstanceError("h vanishes inside a declared positivity interval")

def analyze_weight(h:Callable, declared:Dict[str, float]=None, numerics:Numerics=None,
            breakpoints:List[float]=None) -> WeightProfile:
    """
    Determines the support profile of a weight and the core interval [gamma1, gamma2].

    alpha is the end of the initial zero stretch of h and beta the start of the
    final one; alpha_bar is the end of the first positivity interval after
    alpha and beta_bar the infimum of x with h > 0 on (x, beta). Declared
    values take precedence over scanned ones and are checked against samples.

    :param h: Vectorized weight on (0,1)
    :type h: Callable
    :param declared: Declared support values by name, defaults to None
    :type declared: dict, optional
    :param numerics: Numerical parameters, defaults to Numerics()
    :type numerics: Numerics, optional
    :param breakpoints: Kinks of h used to snap scanned boundaries, defaults to None
    :type breakpoints: list[float], optional
    :return: Support profile
    :rtype: WeightProfile
    """
    numerics = Numerics() if numerics is None else numerics
    declared = {} if declared is None else declared
    support = scan_support(h, numerics, breakpoints)
    names = []
    for key in SUPPORT_KEYS:
        if declared.get(key) is not None:
            support[key] = float(declared[key])
            names.append(key)
    if len(names) > 0:
        _check_declared(h, support, numerics)
    gamma1 = 0.25 * (3.0 * support["alpha"] + support["alpha_bar"])
    gamma2 = 0.25 * (support["beta_bar"] + 3.0 * support["beta"])
    gamma = 0.5 * (gamma1 + gamma2)
    if not (0.0 <= support["alpha"] < gamma1 < gamma < gamma2 < support["beta"] <= 1.0):
        raise InstanceError(f"Support profile {_support_text(support)} does not give"
                    + " a core interval")
    return WeightProfile(support["alpha"], support["alpha_bar"], support["beta_bar"],
                support["beta"], gamma1, gamma2, gamma, tuple(names))

def compute_rho1(instance:ProblemInstance) -> float:
    """
    Returns rho1 = (c0/|c|) psi2^-1(1/|d|) / psi1^-1(1/d0).

    :param instance: Problem instance
    :type instance: ProblemInstance
    :return: rho1 in (0, 1]
    :rtype: float
    """
    b = instance.homeo
    upper = invert(b, "psi2", 1.0 / instance.d_max)
    lower = invert(b, "psi1", 1.0 / instance.d0)
    return (instance.c0 / instance.c_max) * upper / lower

def _scaled(result:QuadResult, factor:float) -> QuadResult:
    return QuadResult(factor * result.value, factor * result.error_estimate,
                result.evaluations, result.converged, result.diverged)

def _nested_pair(instance:ProblemInstance, which:str, left:Tuple[float, float],
            right:Tuple[float, float], anchor:float) -> Tuple[QuadResult, QuadResult]:
    xi_inverse = instance.homeo.inverse(which)
    tol = instance.numerics.quad_tol
    first = nested_weight_integral(xi_inverse, instance.h.values, anchor, "left", left, tol,
                instance.h_breakpoints)
    second = nested_weight_integral(xi_inverse, instance.h.values, anchor, "right", right, tol,
                instance.h_breakpoints)
    return first, second

def _pick(pair:Tuple[QuadResult, QuadResult], kind:str) -> QuadResult:
    first, second = pair
    chosen = (first if (first.value <= second.value) == (kind == "min") else second)
    return QuadResult(chosen.value, max(first.error_estimate, second.error_estimate),
                first.evaluations + second.evaluations,
                first.converged and second.converged, first.diverged or second.diverged)

def upper_weight_integral(instance:ProblemInstance, profile:WeightProfile=None) -> QuadResult:
    """
    Returns h^*, the larger of the psi1^-1-nested integrals over [0, gamma] and [gamma, 1].

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param profile: Weight profile, defaults to the instance's
    :type profile: WeightProfile, optional
    :return: h^* with error bound
    :rtype: QuadResult
    """
    profile = instance.weight_profile() if profile is None else profile
    pair = _nested_pair(instance, "psi1", (0.0, profile.gamma), (profile.gamma, 1.0), profile.gamma)
    result = _pick(pair, "max")
    if result.diverged or not result.converged:
        raise InstanceError("The psi1^-1-nested integrals of h do not converge;"
                    + " h does not appear to be in H_psi1")
    return result

def lower_weight_integral(instance:ProblemInstance, profile:WeightProfile=None) -> QuadResult:
    """
    Returns h_*, the smaller of the integrals of h over [gamma1, gamma] and [gamma, gamma2].

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param profile: Weight profile, defaults to the instance's
    :type profile: WeightProfile, optional
    :return: h_* with error bound
    :rtype: QuadResult
    """
    profile = instance.weight_profile() if profile is None else profile
    tol = instance.numerics.quad_tol
    pair = (integrate(instance.h.values, profile.gamma1, profile.gamma, tol,
                breakpoints=instance.h_breakpoints),
            integrate(instance.h.values, profile.gamma, profile.gamma2, tol,
                breakpoints=instance.h_breakpoints))
    result = _pick(pair, "min")
    if not result.converged:
        raise QuadratureError("The integrals of h over the core interval did not converge")
    return result

def _A_constants(instance:ProblemInstance,
            profile:WeightProfile) -> Tuple[QuadResult, QuadResult, QuadResult]:
    """
    Returns A1, A2 and the h^* integral A2 is scaled from.
    """
    b = instance.homeo
    pair = _nested_pair(instance, "psi2", (profile.gamma1, profile.gamma),
                (profile.gamma, profile.gamma2), profile.gamma)
    lower = _pick(pair, "min")
    if not lower.converged:
        raise QuadratureError("The psi2^-1-nested integrals over the core interval did not converge")
    A1 = _scaled(lower, invert(b, "psi2", 1.0 / instance.d_max) / instance.c_max)
    upper = upper_weight_integral(instance, profile)
    A2 = _scaled(upper, invert(b, "psi1", 1.0 / instance.d0) / instance.c0)
    if not 0.0 < A1.value < A2.value:
        raise InstanceError(f"Expected 0 < A1 < A2, got A1={float(A1.value)!r},"
                    + f" A2={float(A2.value)!r};"
                    + " check condition (A)")
    return A1, A2, upper

def compute_A_constants(instance:ProblemInstance,
            profile:WeightProfile=None) -> Tuple[QuadResult, QuadResult]:
    """
    Computes A1 from psi2^-1-nested integrals over [gamma1, gamma] and [gamma, gamma2]
    and A2 from psi1^-1-nested integrals over [0, gamma] and [gamma, 1].

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param profile: Weight profile, defaults to the instance's
    :type profile: WeightProfile, optional
    :return: A1 and A2 with error bounds
    :rtype: tuple
    """
    profile = instance.weight_profile() if profile is None else profile
    A1, A2, _ = _A_constants(instance, profile)
    return A1, A2

def derive_constants(instance:ProblemInstance) -> DerivedConstants:
    """
    Computes rho1, rho_h, gamma0, A1, A2, h_* and h^* of an instance.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :return: Derived constants with quadrature error bounds
    :rtype: DerivedConstants
    """
    profile = instance.weight_profile()
    rho1 = compute_rho1(instance)
    gamma0 = min(profile.gamma1, 1.0 - profile.gamma2)
    A1, A2, upper = _A_constants(instance, profile)
    lower = lower_weight_integral(instance, profile)
    return DerivedConstants(rho1, rho1 * gamma0, gamma0, A1.value, A1.error_estimate,
                A2.value, A2.error_estimate, lower.value, lower.error_estimate,
                upper.value, upper.error_estimate)

def _envelope_samples(lo:np.ndarray, hi:np.ndarray, count:int) -> np.ndarray:
    """
    Returns sample rows for [lo, hi]: uniform points plus points log-spaced
    down from hi, clipped at lo.
    """
    fractions = np.linspace(0.0, 1.0, count)
    uniform = lo[:, None] + (hi - lo)[:, None] * fractions[None, :]
    clustered = hi[:, None] * np.logspace(-12.0, 0.0, count // 2)[None, :]
    clustered = np.maximum(clustered, lo[:, None])
    return np.sort(np.concatenate([uniform, clustered], axis=1), axis=1)

def _refine_rows(f:Callable, samples:np.ndarray, values:np.ndarray, kind:str) -> np.ndarray:
    """
    Refines the per-row extremum of sampled f with a bounded scalar search
    wherever the best sample is interior to its row.
    """
    sign = 1.0 if kind == "min" else -1.0
    best = np.take_along_axis(values, np.argmin(sign * values, axis=1)[:, None], axis=1)[:, 0]
    scalar = _scalar(f)
    for row, index in enumerate(np.argmin(sign * values, axis=1)):
        if index == 0 or index == samples.shape[1] - 1:
            continue
        lo, hi = samples[row, index - 1], samples[row, index + 1]
        if not hi > lo:
            continue
        result = minimize_scalar(lambda s: sign * scalar(s), bounds=(lo, hi), method="bounded",
                    options={"xatol":1e-12 * max(1.0, hi)})
        if sign * result.fun < sign * best[row]:
            best[row] = sign * result.fun
    return best

def _upper_grid(instance:ProblemInstance) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns the fixed grid of s checked at construction with the running maximum of f on it.
    """
    if instance._upper_grid is None:
        s = np.concatenate([[0.0], np.logspace(-8.0, 8.0, instance.numerics.verify_points)])
        instance._upper_grid = (s, np.maximum.accumulate(instance.f.values(s)))
    return instance._upper_grid

def f_envelopes(instance:ProblemInstance, m) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns f_*(m), the min of f on [rho_h m, m], and f^*(m), the max of f on [0, m].

    Both come from dense sampling refined around the best sample. f^* is
    at least the running maximum of f over a fixed grid of s from 0 to 1e8,
    and every level is computed on its own, so the result for one m does not
    depend on the other levels or on earlier calls.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param m: Positive norm levels
    :type m: float or np.ndarray
    :return: f_* and f^* at every m
    :rtype: tuple
    """
    levels = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any(levels <= 0.0):
        raise InputError("Envelope levels must be positive")
    rho_h = instance.derived_constants().rho_h
    count = instance.numerics.envelope_samples
    f = instance.f.values
    samples = _envelope_samples(rho_h * levels, levels, count)
    lower = _refine_rows(f, samples, f(samples), "min")
    samples = _envelope_samples(np.zeros(len(levels)), levels, count)
    upper = _refine_rows(f, samples, f(samples), "max")
    grid, running = _upper_grid(instance)
    upper = np.maximum(upper, running[np.searchsorted(grid, levels, side="right") - 1])
    lower = np.minimum(lower, upper)
    if np.ndim(m) == 0:
        return float(lower[0]), float(upper[0])
    return lower, upper

def R_curves(instance:ProblemInstance, m) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns R1(m) = phi(m/A1)/f_*(m) and R2(m) = phi(m/A2)/f^*(m).

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param m: Positive norm levels
    :type m: float or np.ndarray
    :return: R1 and R2 at every m
    :rtype: tuple
    """
    constants = instance.derived_constants()
    levels = np.atleast_1d(np.asarray(m, dtype=float))
    lower, upper = f_envelopes(instance, levels)
    if np.any(lower <= 0.0):
        bad = levels[np.argmin(lower)]
        raise InstanceError(f"f vanishes on [rho_h m, m] for m={float(bad)!r}")
    phi = instance.homeo.phi_values
    R1 = phi(levels / constants.A1) / lower
    R2 = phi(levels / constants.A2) / upper
    if np.ndim(m) == 0:
        return float(R1[0]), float(R2[0])
    return R1, R2

def _aitken(a:float, b:float, c:float) -> float:
    denominator = (c - b) - (b - a)
    if denominator == 0.0:
        return c
    return c - (c - b) ** 2 / denominator

def classify_ratio_trend(ratios:np.ndarray, numerics:Numerics=None) -> LimitClass:
    """
    Classifies the limit of a ratio sequence sampled one decade apart, limit last.

    Infinite if the ratio grows by limit_factor over the last limit_trend_decades
    decades, zero if it shrinks likewise, finite with an Aitken-extrapolated
    value if its relative change over the last limit_finite_decades decades is
    below limit_finite_change, inconclusive otherwise.

    :param ratios: Positive ratios, limit last
    :type ratios: np.ndarray
    :param numerics: Numerical parameters, defaults to Numerics()
    :type numerics: Numerics, optional
    :return: Limit class
    :rtype: LimitClass
    """
    numerics = Numerics() if numerics is None else numerics
    r = np.asarray(ratios, dtype=float)
    span = numerics.limit_trend_decades
    if len(r) <= max(span, numerics.limit_finite_decades, 2):
        return LimitClass(INCONCLUSIVE, None, "too few samples")
    method = f"ratio trend over {span} decades"
    if r[-1] >= numerics.limit_factor * r[-1 - span] and np.all(np.diff(r[-1 - span:]) > 0.0):
        return LimitClass(INFINITE, None, method)
    if r[-1 - span] >= numerics.limit_factor * r[-1] and np.all(np.diff(r[-1 - span:]) < 0.0):
        return LimitClass(ZERO, None, method)
    recent = r[-1 - numerics.limit_finite_decades:]
    if r[-1] > 0.0 and np.max(np.abs(recent - r[-1])) < numerics.limit_finite_change * r[-1]:
        return LimitClass(FINITE, _aitken(r[-3], r[-2], r[-1]), "extrapolated")
    return LimitClass(INCONCLUSIVE, None, method)

def estimate_f_limits(instance:ProblemInstance) -> Tuple[LimitClass, LimitClass]:
    """
    Classifies f0 and f_inf, the limits of f(s)/phi(s) at 0 and infinity,
    from samples at s = 10^-k and s = 10^k.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :return: Classes of f0 and f_inf
    :rtype: tuple
    """
    k = np.arange(1, instance.numerics.limit_decades + 1, dtype=float)
    classes = []
    for s in (10.0 ** -k, 10.0 ** k):
        ratios = instance.f.values(s) / instance.homeo.phi_values(s)
        classes.append(classify_ratio_trend(ratios, instance.numerics))
    return classes[0], classes[1]

def f_ratio_bounds(instance:ProblemInstance) -> Tuple[float, float]:
    """
    Returns the sampled sup and inf of f(s)/phi(s) over a log grid,
    refined around the extremal samples in log s.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :return: Sampled sup and inf
    :rtype: tuple
    """
    n = instance.numerics
    x = np.linspace(np.log(n.ratio_lo), np.log(n.ratio_hi), n.ratio_points)
    ratio = lambda y: instance.f.values(np.exp(y)) / instance.homeo.phi_values(np.exp(y))
    values = ratio(x)
    return (_refined_extremum(ratio, x, values, "max"),
                _refined_extremum(ratio, x, values, "min"))

def reduce_annular(w:Expression, A:Expression, k:Expression, R1:float, R2:float, N:int,
            psi1:Expression, psi2:Expression, f:Expression, numerics:Numerics=None) -> ProblemInstance:
    """
    Reduces the radial problem -div(w(|x|) A(|v'|) v') = lambda k(|x|) f(v) on the
    annulus R1 < |x| < R2 in R^N to a problem on (0,1) through |x| = (R2 - R1)t + R1.

    The reduced data are phi(s) = A(|s|)s, c = 1/(R2 - R1), d(t) = w(r)r^(N-1)
    and h(t) = (R2 - R1) r^(N-1) k(r) with r = (R2 - R1)t + R1. w and k are
    expressions in r, A is an expression in s, and none may be piecewise.

    :param w: Radial coefficient, positive on [R1, R2]
    :type w: Expression
    :param A: Gradient coefficient of the operator
    :type A: Expression
    :param k: Radial weight
    :type k: Expression
    :param R1: Inner radius
    :type R1: float
    :param R2: Outer radius
    :type R2: float
    :param N: Space dimension, at least 2
    :type N: int
    :param psi1: Lower control function for the induced phi
    :type psi1: Expression
    :param psi2: Upper control function for the induced phi
    :type psi2: Expression
    :param f: Nonlinearity
    :type f: Expression
    :param numerics: Numerical parameters, defaults to Numerics()
    :type numerics: Numerics, optional
    :return: Reduced problem instance
    :rtype: ProblemInstance
    """
    if R1 is None or R2 is None or not 0.0 < R1 < R2 < np.inf:
        raise InputError(f"Annulus radii must satisfy 0 < R1 < R2, got R1={R1!r}, R2={R2!r}")
    if N is None or int(N) != N or N < 2:
        raise InputError(f"Dimension N must be an integer >= 2, got {N!r}")
    R1, R2 = float(R1), float(R2)
    numerics = Numerics() if numerics is None else numerics
    radii = np.linspace(R1, R2, numerics.verify_points)
    if np.any(_checked_values(w.values, radii, "w") <= 0.0):
        raise InstanceError("w must be positive on [R1, R2]")
    width = R2 - R1
    radius = f"{width!r}*t+{R1!r}"
    power = int(N) - 1
    phi = parse_expr(f"({substitute_variable(A.source, A.var_name, 'x')})*x", "x")
    c = parse_expr(f"1/{width!r}", "t")
    d = parse_expr(f"({substitute_variable(w.source, w.var_name, radius)})*({radius})^{power}", "t")
    h = parse_expr(f"{width!r}*({radius})^{power}"
                + f"*({substitute_variable(k.source, k.var_name, radius)})", "t")
    homeo = HomeoBundle(phi, psi1, psi2, numerics.inverse_tolerance, numerics.bracket_growth)
    return ProblemInstance(homeo, c, d, h, f, numerics=numerics, name="annulus")
