#!/usr/bin/env python3

"""
Adaptive Gauss-Kronrod quadrature for weights with endpoint singularities,
and the nested integrals that define membership of a weight in H_xi.
"""

import heapq
import numpy as np
from dataclasses import dataclass
from phi_lab.main.errors import DomainError
from phi_lab.main.errors import InputError
from phi_lab.main.errors import QuadratureError
from phi_lab.main.processing.grids import dyadic_grading
from typing import Callable, List, Tuple

EPSILON = np.finfo(float).eps

# 7-point Gauss / 15-point Kronrod pair, abscissae from the outside in.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.array([_WG[k // 2] if k % 2 == 1 else 0.0
            for k in list(range(7)) + list(range(7, -1, -1))])

MEMBER = "member"
NONMEMBER = "nonmember"
INCONCLUSIVE = "inconclusive"

@dataclass(frozen=True)
class QuadResult:
    value:float
    error_estimate:float
    evaluations:int
    converged:bool
    diverged:bool = False

@dataclass(frozen=True)
class SingularityHint:
    """
    Marks an endpoint where the integrand behaves like C*dist^(-exponent).
    """
    endpoint:str
    exponent:float = None

    def __post_init__(self):
        if self.endpoint not in ("left", "right"):
            raise InputError(f"Singularity endpoint must be 'left' or 'right', got {self.endpoint!r}")
        if self.exponent is not None and self.exponent < 0.0:
            raise InputError(f"Singularity exponent must be nonnegative, got {self.exponent!r}")

def evaluate_integrand(f:Callable, x:np.ndarray) -> np.ndarray:
    """
    Evaluates a vectorized integrand, converting failures to QuadratureError.

    :param f: Vectorized integrand
    :type f: Callable
    :param x: Nodes
    :type x: np.ndarray
    :return: Finite integrand values
    :rtype: np.ndarray
    """
    try:
        values = np.asarray(f(x), dtype=float)
    except DomainError as error:
        raise QuadratureError(f"Integrand failed at an interior node: {error}") from None
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape).copy()
    finite = np.isfinite(values)
    if not np.all(finite):
        raise QuadratureError(f"Integrand is not finite at {x[~finite].flat[0]!r}")
    return values

def kronrod_panels(f:Callable, lo:np.ndarray, hi:np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Applies the 15-point Kronrod rule to many panels at once.

    :param f: Vectorized integrand
    :type f: Callable
    :param lo: Left ends of the panels
    :type lo: np.ndarray
    :param hi: Right ends of the panels
    :type hi: np.ndarray
    :return: Kronrod values and |Kronrod - Gauss| error estimates per panel
    :rtype: tuple
    """
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)
    x = center[:, None] + half[:, None] * KRONROD_NODES[None, :]
    fx = evaluate_integrand(f, x)
    kronrod = half * (fx @ KRONROD_WEIGHTS)
    gauss = half * (fx @ GAUSS_WEIGHTS)
    return kronrod, np.abs(kronrod - gauss)

def splittable(lo:np.ndarray, hi:np.ndarray) -> np.ndarray:
    """
    Returns which panels are wide enough to bisect without colliding nodes.
    """
    scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    return (hi - lo) > 2048.0 * EPSILON * scale

def integrate_intervals(f:Callable, lo:np.ndarray, hi:np.ndarray, tol:float=1e-13,
                max_rounds:int=60, max_evaluations:int=2000000) -> Tuple[np.ndarray, int, bool]:
    """
    Integrates f over many intervals at once, bisecting each panel until its
    Kronrod error is below tol times the larger of its own value and its
    width's share of the first-round total over all intervals.

    Splitting stops once the next round would exceed max_evaluations; the
    remaining panels are then accepted and the result marked unconverged.

    :param f: Vectorized integrand
    :type f: Callable
    :param lo: Left ends
    :type lo: np.ndarray
    :param hi: Right ends
    :type hi: np.ndarray
    :param tol: Relative tolerance per panel, defaults to 1e-13
    :type tol: float, optional
    :param max_rounds: Maximum number of bisection rounds, defaults to 60
    :type max_rounds: int, optional
    :param max_evaluations: Integrand evaluation budget, defaults to 2000000
    :type max_evaluations: int, optional
    :return: Integral per interval, number of evaluations, whether every panel converged
    :rtype: tuple
    """
    values = np.zeros(len(lo))
    owner = np.arange(len(lo))
    panel_lo = np.asarray(lo, dtype=float)
    panel_hi = np.asarray(hi, dtype=float)
    span = float(np.sum(panel_hi - panel_lo))
    density = None
    evaluations = 0
    converged = True
    for round_number in range(max_rounds + 1):
        if len(panel_lo) == 0:
            break
        kronrod, error = kronrod_panels(f, panel_lo, panel_hi)
        evaluations += 15 * len(panel_lo)
        if density is None:
            # Absolute floor: the first-round total spread over the intervals by width.
            density = float(np.sum(np.abs(kronrod))) / span if span > 0.0 else 0.0
        allowance = tol * np.maximum(np.abs(kronrod), density * (panel_hi - panel_lo))
        accept = (error <= allowance) | ~splittable(panel_lo, panel_hi)
        over_budget = evaluations + 30 * int(np.sum(~accept)) > max_evaluations
        if round_number == max_rounds or over_budget:
            converged = bool(np.all(accept))
            accept[:] = True
        values += np.bincount(owner[accept], weights=kronrod[accept], minlength=len(values))
        split = ~accept
        mid = 0.5 * (panel_lo[split] + panel_hi[split])
        owner = np.concatenate([owner[split], owner[split]])
        panel_lo, panel_hi = (np.concatenate([panel_lo[split], mid]),
                    np.concatenate([mid, panel_hi[split]]))
    return values, evaluations, converged

def _geometric_tail(inner:float, middle:float, outer:float) -> Tuple[float, float, bool]:
    """
    Extrapolates the integral over the region beyond the innermost of three
    dyadic panels, each half the width of the next.

    :return: Tail value, its error estimate, and whether the tail diverges
    :rtype: tuple
    """
    if inner == 0.0 and middle == 0.0:
        return 0.0, 0.0, False
    if middle == 0.0 or inner / middle < 0.0:
        return 0.0, abs(inner), False
    ratio = inner / middle
    if ratio >= 1.0 - 1e-9:
        return 0.0, float("inf"), True
    tail = inner * ratio / (1.0 - ratio)
    previous = ratio
    if outer != 0.0 and middle / outer > 0.0 and middle / outer < 1.0 - 1e-9:
        previous = middle / outer
    alternative = inner * previous / (1.0 - previous)
    return tail, abs(tail - alternative) + 4.0 * EPSILON * abs(tail), False

def integrate(f:Callable, a:float, b:float, tol:float=1e-10, hints:List[SingularityHint]=None,
            breakpoints:List[float]=None, max_evaluations:int=200000,
            floor:float=1e-14) -> QuadResult:
    """
    Integrates f over [a, b] with adaptive Gauss-Kronrod panels.

    Hinted endpoints get panels graded by halving down to width floor;
    the rest of the integral toward a hinted endpoint is extrapolated
    geometrically from the two innermost graded panels, and a ratio at or
    above 1 between them reports divergence.

    :param f: Vectorized integrand
    :type f: Callable
    :param a: Lower limit
    :type a: float
    :param b: Upper limit
    :type b: float
    :param tol: Requested tolerance relative to 1 + |value|, defaults to 1e-10
    :type tol: float, optional
    :param hints: Endpoint singularity hints, defaults to None
    :type hints: list[SingularityHint], optional
    :param breakpoints: Interior points always used as panel boundaries, defaults to None
    :type breakpoints: list[float], optional
    :param max_evaluations: Integrand evaluation budget, defaults to 200000
    :type max_evaluations: int, optional
    :param floor: Width of the innermost graded panel, defaults to 1e-14
    :type floor: float, optional
    :return: Value with error estimate and convergence flags
    :rtype: QuadResult
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0, True)
    if a > b:
        result = integrate(f, b, a, tol, hints, breakpoints, max_evaluations, floor)
        return QuadResult(-result.value, result.error_estimate, result.evaluations,
                    result.converged, result.diverged)
    ends = set() if hints is None else {hint.endpoint for hint in hints}
    # Kronrod nodes must stay distinct from the endpoints in floating point.
    floor = max(floor, 1024.0 * EPSILON * max(1.0, abs(a), abs(b)))
    points = [a, b]
    if breakpoints is not None:
        points.extend(p for p in breakpoints if a < p < b)
    points = sorted(set(points))
    lows = []
    highs = []
    tails = {}
    for i in range(len(points) - 1):
        left, right = points[i], points[i + 1]
        grade_left = i == 0 and "left" in ends
        grade_right = i == len(points) - 2 and "right" in ends
        if grade_left or grade_right:
            if grade_left and grade_right:
                middle = 0.5 * (left + right)
                levels = max(int(np.log2((middle - left) / floor)), 3)
                nodes = np.concatenate([dyadic_grading(left, middle, "left", levels)[1:],
                            dyadic_grading(middle, right, "right", levels)[1:-1]])
            elif grade_left:
                levels = max(int(np.log2((right - left) / floor)), 3)
                nodes = dyadic_grading(left, right, "left", levels)[1:]
            else:
                levels = max(int(np.log2((right - left) / floor)), 3)
                nodes = dyadic_grading(left, right, "right", levels)[:-1]
            lows.extend(nodes[:-1])
            highs.extend(nodes[1:])
            if grade_left:
                tails["left"] = (left, nodes[0])
            if grade_right:
                tails["right"] = (nodes[-1], right)
        else:
            split = np.linspace(left, right, 5)
            lows.extend(split[:-1])
            highs.extend(split[1:])
    lo = np.array(lows)
    hi = np.array(highs)
    kronrod, error = kronrod_panels(f, lo, hi)
    evaluations = 15 * len(lo)
    # TAIL EXTRAPOLATION TOWARD HINTED ENDPOINTS
    tail_value = 0.0
    tail_error = 0.0
    diverged = False
    for side in ("left", "right"):
        if side not in tails:
            continue
        order = np.argsort(lo) if side == "left" else np.argsort(-lo)
        inner, middle, outer = (kronrod[order[0]], kronrod[order[1]], kronrod[order[2]])
        value, err, side_diverged = _geometric_tail(inner, middle, outer)
        tail_value += value
        tail_error += err
        diverged = diverged or side_diverged
    if diverged:
        return QuadResult(float(np.sum(kronrod)), float("inf"), evaluations, False, True)
    # ADAPTIVE REFINEMENT, WORST PANELS FIRST
    panels = [(-error[i], lo[i], hi[i], kronrod[i]) for i in range(len(lo))]
    heapq.heapify(panels)
    frozen = []
    frozen_error = tail_error
    total_error = float(np.sum(error)) + tail_error
    total = float(np.sum(kronrod)) + tail_value
    while total_error > tol * (1.0 + abs(total)) and evaluations < max_evaluations:
        if frozen_error > tol * (1.0 + abs(total)):
            break
        batch = []
        budget = total_error - 0.5 * tol * (1.0 + abs(total))
        while len(panels) > 0 and budget > 0.0 and len(batch) < 256:
            panel = heapq.heappop(panels)
            if not splittable(np.array([panel[1]]), np.array([panel[2]]))[0]:
                frozen.append(panel)
                frozen_error -= panel[0]
                continue
            batch.append(panel)
            budget += panel[0]
        if len(batch) == 0:
            break
        b_lo = np.array([p[1] for p in batch])
        b_hi = np.array([p[2] for p in batch])
        mid = 0.5 * (b_lo + b_hi)
        new_lo = np.concatenate([b_lo, mid])
        new_hi = np.concatenate([mid, b_hi])
        new_k, new_e = kronrod_panels(f, new_lo, new_hi)
        evaluations += 15 * len(new_lo)
        for p in batch:
            total_error += p[0]
            total -= p[3]
        for i in range(len(new_lo)):
            heapq.heappush(panels, (-new_e[i], new_lo[i], new_hi[i], new_k[i]))
        total_error += float(np.sum(new_e))
        total += float(np.sum(new_k))
    everything = panels + frozen
    total = float(np.sum([p[3] for p in everything])) + tail_value
    total_error = float(-np.sum([p[0] for p in everything])) + tail_error
    converged = total_error <= tol * (1.0 + abs(total))
    return QuadResult(total, total_error, evaluations, converged, False)

class NestedIntegrand:
    """
    Outer integrand w(s) * xi^-1(k(s) * |int_s^anchor h|) of a nested weight
    integral, with the inner integrals cached between calls.

    The cache holds sorted points with their inner integrals; a new point is
    integrated only over the gap to its neighbor on the anchor side.
    """

    def __init__(self, xi_inverse:Callable, h:Callable, anchor:float, side:str,
                tol:float=1e-13, breakpoints:List[float]=None,
                outer_weight:Callable=None, inner_scale:Callable=None):
        """
        Initializes the NestedIntegrand.

        :param xi_inverse: Vectorized inverse of xi
        :type xi_inverse: Callable
        :param h: Vectorized weight
        :type h: Callable
        :param anchor: Point the inner integrals start from
        :type anchor: float
        :param side: "left" for points below the anchor, "right" for points above
        :type side: str
        :param tol: Relative tolerance of each inner gap integral, defaults to 1e-13
        :type tol: float, optional
        :param breakpoints: Kinks of h, seeded into the cache, defaults to None
        :type breakpoints: list[float], optional
        :param outer_weight: Factor w(s) outside xi^-1, defaults to None
        :type outer_weight: Callable, optional
        :param inner_scale: Factor k(s) inside xi^-1, defaults to None
        :type inner_scale: Callable, optional
        """
        if side not in ("left", "right"):
            raise InputError(f"Side must be 'left' or 'right', got {side!r}")
        self.xi_inverse = xi_inverse
        self.h = h
        self.anchor = anchor
        self.side = side
        self.tol = tol
        self.outer_weight = outer_weight
        self.inner_scale = inner_scale
        self.evaluations = 0
        self.converged = True
        # Points ordered by distance from the anchor, anchor first.
        self.points = np.array([anchor])
        self.values = np.array([0.0])
        if breakpoints is not None:
            if side == "left":
                seeds = [p for p in breakpoints if 0.0 < p < anchor]
            else:
                seeds = [p for p in breakpoints if anchor < p < 1.0]
            if len(seeds) > 0:
                self.inner(np.array(seeds))

    def _distance_order(self, points:np.ndarray) -> np.ndarray:
        return np.argsort(self.anchor - points if self.side == "left" else points - self.anchor,
                    kind="stable")

    def inner(self, s:np.ndarray) -> np.ndarray:
        """
        Returns |int_s^anchor h| for every point, extending the cache.

        :param s: Points on this integrand's side of the anchor
        :type s: np.ndarray
        :return: Inner integrals
        :rtype: np.ndarray
        """
        points = np.asarray(s, dtype=float)
        flat = points.ravel()
        new = np.setdiff1d(np.unique(flat), self.points)
        if len(new) > 0:
            merged = np.concatenate([self.points, new])
            known = np.concatenate([np.ones(len(self.points), dtype=bool),
                        np.zeros(len(new), dtype=bool)])
            values = np.concatenate([self.values, np.zeros(len(new))])
            order = self._distance_order(merged)
            merged, known, values = merged[order], known[order], values[order]
            # GAP INTEGRALS FROM EACH NEW POINT TO ITS NEIGHBOR TOWARD THE ANCHOR
            unknown = np.flatnonzero(~known)
            lo = np.minimum(merged[unknown], merged[unknown - 1])
            hi = np.maximum(merged[unknown], merged[unknown - 1])
            gaps, evaluations, converged = integrate_intervals(self.h, lo, hi, self.tol)
            self.evaluations += evaluations
            self.converged = self.converged and converged
            increments = np.zeros(len(merged))
            increments[unknown] = np.abs(gaps)
            running = np.cumsum(increments)
            last_known = np.maximum.accumulate(np.where(known, np.arange(len(merged)), 0))
            values = values[last_known] + running - running[last_known]
            self.points = merged
            self.values = values
        sorter = np.argsort(self.points)
        index = sorter[np.searchsorted(self.points, flat, sorter=sorter)]
        return self.values[index].reshape(points.shape)

    def __call__(self, s:np.ndarray) -> np.ndarray:
        inner = self.inner(s)
        if self.inner_scale is not None:
            inner = inner * self.inner_scale(s)
        outer = self.xi_inverse(inner)
        if self.outer_weight is not None:
            outer = outer * self.outer_weight(s)
        return outer

def nested_weight_integral(xi_inverse:Callable, h:Callable, anchor:float, side:str,
                outer_range:Tuple[float, float], tol:float=1e-10,
                breakpoints:List[float]=None, outer_weight:Callable=None,
                inner_scale:Callable=None) -> QuadResult:
    """
    Computes int_outer xi^-1(int_s^anchor h) ds for side "left", or
    int_outer xi^-1(int_anchor^s h) ds for side "right".

    Both ends of the outer range are graded, so weights that are not
    integrable at 0 or 1 are handled through the tail extrapolation.

    :param xi_inverse: Vectorized inverse of xi
    :type xi_inverse: Callable
    :param h: Vectorized weight
    :type h: Callable
    :param anchor: Start of the inner integrals, in (0, 1)
    :type anchor: float
    :param side: "left" or "right" of the anchor
    :type side: str
    :param outer_range: Outer interval on the given side of the anchor
    :type outer_range: tuple
    :param tol: Requested tolerance, defaults to 1e-10
    :type tol: float, optional
    :param breakpoints: Kinks of h, defaults to None
    :type breakpoints: list[float], optional
    :param outer_weight: Factor outside xi^-1 (1/c in the solution operator), defaults to None
    :type outer_weight: Callable, optional
    :param inner_scale: Factor inside xi^-1 (1/d in the solution operator), defaults to None
    :type inner_scale: Callable, optional
    :return: Value with error estimate and convergence flags
    :rtype: QuadResult
    """
    lo, hi = outer_range
    if side == "left" and hi > anchor or side == "right" and lo < anchor:
        raise InputError(f"Outer range {outer_range} is not on the {side} of {anchor}")
    integrand = NestedIntegrand(xi_inverse, h, anchor, side, 1e-3 * tol, breakpoints,
                outer_weight, inner_scale)
    hints = [SingularityHint("left"), SingularityHint("right")]
    result = integrate(integrand, lo, hi, tol, hints, breakpoints)
    return QuadResult(result.value, result.error_estimate,
                result.evaluations + integrand.evaluations,
                result.converged and integrand.converged, result.diverged)

def _increment_verdict(increments:List[float], tol:float, window:int, total:float) -> str:
    """
    Judges a series of dyadic tail increments, innermost last.
    """
    values = np.abs(np.array(increments))
    if np.all(values[-window:] == 0.0):
        return MEMBER
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = values[1:] / values[:-1]
    recent = ratios[-window:]
    if np.all(np.isfinite(recent)) and np.all(recent >= 0.95):
        return NONMEMBER
    if np.all(np.isfinite(recent)) and np.all(recent <= 0.9):
        return MEMBER
    last = ratios[-1]
    if np.isfinite(last) and last < 1.0:
        tail = values[-1] * last / (1.0 - last)
        if tail <= tol * (1.0 + abs(total)):
            return MEMBER
    return INCONCLUSIVE

def _dyadic_increments(integral:Callable, anchor:float, side:str, levels:int) -> List[float]:
    """
    Returns the integrals of a function over the dyadic shells between
    the cutoffs anchor * 2^-k (left) or 1 - (1 - anchor) * 2^-k (right).
    """
    increments = []
    for k in range(levels):
        if side == "left":
            outer, inner = anchor * 2.0 ** -(k + 1), anchor * 2.0 ** -k
        else:
            inner, outer = 1.0 - (1.0 - anchor) * 2.0 ** -k, 1.0 - (1.0 - anchor) * 2.0 ** -(k + 1)
        lo, hi = min(inner, outer), max(inner, outer)
        increments.append(integral(lo, hi))
    return increments

def classify_membership(h:Callable, xi_inverse:Callable, tol:float=1e-10,
                breakpoints:List[float]=None, levels:int=40, window:int=8) -> str:
    """
    Classifies whether the nested integrals of h through xi^-1 converge at both ends of (0,1).

    The nested integrals are split at dyadic cutoffs toward each endpoint;
    the weight is a member when the increment ratios stay at or below 0.9
    over the last window levels or the geometric tail is below tol, a
    nonmember when the ratios stay at or above 0.95, and inconclusive otherwise.

    :param h: Vectorized weight on (0,1)
    :type h: Callable
    :param xi_inverse: Vectorized inverse of xi
    :type xi_inverse: Callable
    :param tol: Tail tolerance, defaults to 1e-10
    :type tol: float, optional
    :param breakpoints: Kinks of h, defaults to None
    :type breakpoints: list[float], optional
    :param levels: Number of dyadic cutoffs per side, defaults to 40
    :type levels: int, optional
    :param window: Consecutive levels needed for a nonmember verdict, defaults to 8
    :type window: int, optional
    :return: "member", "nonmember" or "inconclusive"
    :rtype: str
    """
    verdicts = []
    for side in ("left", "right"):
        integrand = NestedIntegrand(xi_inverse, h, 0.5, side, 1e-3 * tol, breakpoints)
        shell = lambda lo, hi: integrate(integrand, lo, hi, 1e-2 * tol, breakpoints=breakpoints).value
        increments = _dyadic_increments(shell, 0.5, side, levels)
        verdicts.append(_increment_verdict(increments, tol, window, float(np.sum(increments))))
    return _combine(verdicts)

def classify_integrability(h:Callable, tol:float=1e-10, breakpoints:List[float]=None,
                levels:int=40, window:int=8) -> str:
    """
    Classifies whether h is integrable on (0,1) with the same dyadic increment test.

    :param h: Vectorized weight on (0,1)
    :type h: Callable
    :param tol: Tail tolerance, defaults to 1e-10
    :type tol: float, optional
    :param breakpoints: Kinks of h, defaults to None
    :type breakpoints: list[float], optional
    :param levels: Number of dyadic cutoffs per side, defaults to 40
    :type levels: int, optional
    :param window: Consecutive levels needed for a nonmember verdict, defaults to 8
    :type window: int, optional
    :return: "member", "nonmember" or "inconclusive"
    :rtype: str
    """
    verdicts = []
    for side in ("left", "right"):
        shell = lambda lo, hi: integrate(h, lo, hi, 1e-2 * tol, breakpoints=breakpoints).value
        increments = _dyadic_increments(shell, 0.5, side, levels)
        verdicts.append(_increment_verdict(increments, tol, window, float(np.sum(increments))))
    return _combine(verdicts)

def _combine(verdicts:List[str]) -> str:
    if NONMEMBER in verdicts:
        return NONMEMBER
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return MEMBER
