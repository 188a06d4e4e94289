#!/usr/bin/env python3

"""
Computable certificates built from the R-curves: existence and multiplicity
windows of lambda, the classification of f by its limits f0 and f_inf with
the thresholds each class comes with, nonexistence bounds, sampled shell
checks of ||H(lambda, v)|| against ||v|| and trend checks on computed branches.
"""

import numpy as np
from dataclasses import dataclass
from dataclasses import field
from phi_lab.main.analysis.grid_function import GridFunction
from phi_lab.main.analysis.grid_function import from_function
from phi_lab.main.analysis.homeo import invert
from phi_lab.main.analysis.problem import FINITE
from phi_lab.main.analysis.problem import INCONCLUSIVE
from phi_lab.main.analysis.problem import INFINITE
from phi_lab.main.analysis.problem import ZERO
from phi_lab.main.analysis.problem import LimitClass
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.problem import R_curves
from phi_lab.main.analysis.problem import estimate_f_limits
from phi_lab.main.analysis.problem import f_ratio_bounds
from phi_lab.main.analysis.solution_operator import CONE_K
from phi_lab.main.analysis.solution_operator import apply_H
from phi_lab.main.analysis.solution_operator import cone_margin
from phi_lab.main.analysis.solver import Branch
from phi_lab.main.errors import InputError
from phi_lab.main.processing.grids import graded_mesh
from phi_lab.main.processing.grids import log_grid
from tqdm import tqdm
from typing import Dict, List, Tuple

EXPANDING = "expanding"
CONTRACTING = "contracting"

CONFIRMED = "confirmed"
CONTRADICTED = "contradicted"

DIRECT = "direct"
RESP = "resp."

DECREASING = -1
INCREASING = 1

@dataclass(frozen=True)
class Window:
    lambda_low:float
    lambda_high:float
    predicted_count:int
    shells:List[Tuple[float, float]]
    provenance:Dict[str, object] = field(default_factory=dict)

    def midpoint(self) -> float:
        return 0.5 * (self.lambda_low + self.lambda_high)

@dataclass(frozen=True)
class Threshold:
    value:float
    method:str

@dataclass
class CaseReport:
    """
    Class of f by its limits relative to phi, with the thresholds of that class.

    case_id is the primary class 1-5, or 6/7 when only those apply;
    case_ids lists every class whose hypotheses hold.
    """
    case_id:int
    case_ids:List[int]
    orientation:str
    f0:LimitClass
    finf:LimitClass
    regime:List[str] = field(default_factory=list)
    thresholds:Dict[str, Threshold] = field(default_factory=dict)
    inconclusive:bool = False

def existence_window(instance:ProblemInstance, m1:float, m2:float) -> Window:
    """
    Returns the one-solution window (R1(m1), R2(m2)) when R1(m1) < R2(m2), else None.

    Either ordering of m1 and m2 is accepted; the shell is (min, max).

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param m1: Norm level where the operator expands
    :type m1: float
    :param m2: Norm level where the operator contracts
    :type m2: float
    :return: Window or None
    :rtype: Window
    """
    if m1 is None or m2 is None or not m1 > 0.0 or not m2 > 0.0:
        raise InputError(f"Norm levels must be positive, got m1={m1!r}, m2={m2!r}")
    if m1 == m2:
        raise InputError("Norm levels must be distinct")
    R1, _ = R_curves(instance, m1)
    _, R2 = R_curves(instance, m2)
    if not R1 < R2:
        return None
    variant = DIRECT if m2 < m1 else RESP
    return Window(R1, R2, 1, [(min(m1, m2), max(m1, m2))],
                {"theorem":"one-solution", "variant":variant, "m1":m1, "m2":m2})

def _running(values:np.ndarray, kind:str, reverse:bool=False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns the running min or max with the index attaining it.
    Entry i covers indices < i (or > i when reversed); uncovered entries hold +-inf.
    """
    n = len(values)
    worst = np.inf if kind == "min" else -np.inf
    best = np.full(n, worst)
    where = np.full(n, -1)
    order = range(n - 1, -1, -1) if reverse else range(n)
    current, at = worst, -1
    for i in order:
        best[i], where[i] = current, at
        better = values[i] < current if kind == "min" else values[i] > current
        if better:
            current, at = values[i], i
    return best, where

def _pick(low:np.ndarray, high:np.ndarray, levels:List[np.ndarray], m2:np.ndarray) -> int:
    """
    Returns the index of the widest window in log length, ties going to the
    widest shell separation and then to the smallest m2.
    """
    separation = np.min(np.log(np.stack([b / a for a, b in zip(levels[:-1], levels[1:])])), axis=0)
    return int(np.lexsort((m2, -separation, -np.log(high / low)))[0])

def _window(low:np.ndarray, high:np.ndarray, levels:List[np.ndarray], names:List[str],
            theorem:str, variant:str) -> Window:
    """
    Builds the best window from candidate arrays; levels are in increasing order and named.
    """
    best = _pick(low, high, levels, levels[names.index("m2")])
    points = [float(level[best]) for level in levels]
    witness = dict(zip(names, points), theorem=theorem, variant=variant)
    shells = list(zip(points[:-1], points[1:]))
    return Window(float(low[best]), float(high[best]), len(shells), shells, witness)

def _two_solution(scan:np.ndarray, R1:np.ndarray, R2:np.ndarray) -> List[Window]:
    windows = []
    middle = np.arange(1, len(scan) - 1)
    # m1 < m2 < M1, window (max(R1(m1), R1(M1)), R2(m2))
    before, before_at = _running(R1, "min")
    after, after_at = _running(R1, "min", reverse=True)
    low = np.maximum(before, after)[middle]
    high = R2[middle]
    valid = low < high
    if np.any(valid):
        j = middle[valid]
        windows.append(_window(low[valid], high[valid],
                    [scan[before_at[j]], scan[j], scan[after_at[j]]], ["m1", "m2", "M1"],
                    "two-solution", DIRECT))
    # m2 < m1 < M2, window (R1(m1), min(R2(m2), R2(M2)))
    before, before_at = _running(R2, "max")
    after, after_at = _running(R2, "max", reverse=True)
    low = R1[middle]
    high = np.minimum(before, after)[middle]
    valid = low < high
    if np.any(valid):
        j = middle[valid]
        windows.append(_window(low[valid], high[valid],
                    [scan[before_at[j]], scan[j], scan[after_at[j]]], ["m2", "m1", "M2"],
                    "two-solution", RESP))
    return windows

def _three_solution(scan:np.ndarray, R1:np.ndarray, R2:np.ndarray) -> List[Window]:
    windows = []
    b, c = np.triu_indices(len(scan), k=1)
    # m2 < m1 < M2 < M1, window (max(R1(m1), R1(M1)), min(R2(m2), R2(M2)))
    before, before_at = _running(R2, "max")
    after, after_at = _running(R1, "min", reverse=True)
    low = np.maximum(R1[b], after[c])
    high = np.minimum(before[b], R2[c])
    valid = (low < high) & (before_at[b] >= 0) & (after_at[c] >= 0)
    if np.any(valid):
        bb, cc = b[valid], c[valid]
        windows.append(_window(low[valid], high[valid],
                    [scan[before_at[bb]], scan[bb], scan[cc], scan[after_at[cc]]],
                    ["m2", "m1", "M2", "M1"], "three-solution", DIRECT))
    # m1 < m2 < M1 < M2, same window
    before, before_at = _running(R1, "min")
    after, after_at = _running(R2, "max", reverse=True)
    low = np.maximum(before[b], R1[c])
    high = np.minimum(R2[b], after[c])
    valid = (low < high) & (before_at[b] >= 0) & (after_at[c] >= 0)
    if np.any(valid):
        bb, cc = b[valid], c[valid]
        windows.append(_window(low[valid], high[valid],
                    [scan[before_at[bb]], scan[bb], scan[cc], scan[after_at[cc]]],
                    ["m1", "m2", "M1", "M2"], "three-solution", RESP))
    return windows

def default_scan(instance:ProblemInstance) -> np.ndarray:
    n = instance.numerics
    return log_grid(n.scan_lo, n.scan_hi, n.scan_per_decade)

def multiplicity_windows(instance:ProblemInstance, scan:np.ndarray=None) -> List[Window]:
    """
    Searches a grid of norm levels for two- and three-solution witnesses.

    Both orderings of each multiplicity criterion are searched; for each the
    window of largest log length is kept, ties going to wider shell
    separation and then to smaller m2.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param scan: Increasing norm levels covering at least 4 decades, defaults to the configured scan
    :type scan: np.ndarray, optional
    :return: Windows found, two-solution windows first
    :rtype: list[Window]
    """
    levels = default_scan(instance) if scan is None else np.asarray(scan, dtype=float)
    if len(levels) < 4 or np.any(levels <= 0.0) or np.any(np.diff(levels) <= 0.0):
        raise InputError("The scan must hold at least 4 positive increasing levels")
    if np.log10(levels[-1] / levels[0]) < 4.0 - 1e-9:
        raise InputError("The scan must cover at least 4 decades")
    R1, R2 = R_curves(instance, levels)
    return _two_solution(levels, R1, R2) + _three_solution(levels, R1, R2)

def _case_of(f0:str, finf:str) -> Tuple[int, str]:
    table = {(ZERO, INFINITE):(1, DIRECT), (INFINITE, ZERO):(1, RESP),
                (ZERO, FINITE):(2, DIRECT), (FINITE, ZERO):(2, RESP),
                (INFINITE, FINITE):(3, DIRECT), (FINITE, INFINITE):(3, RESP),
                (ZERO, ZERO):(4, DIRECT), (INFINITE, INFINITE):(5, DIRECT)}
    return table.get((f0, finf), (None, None))

REGIMES = {
    (1, DIRECT):"a solution for every lambda > 0; norm -> inf as lambda -> 0 and -> 0 as lambda -> inf",
    (1, RESP):"a solution for every lambda > 0; norm -> 0 as lambda -> 0 and -> inf as lambda -> inf",
    (2, DIRECT):"a solution for lambda > lambda_*; norm -> 0 as lambda -> inf",
    (2, RESP):"a solution for lambda > lambda_*; norm -> inf as lambda -> inf",
    (3, DIRECT):"a solution for lambda < lambda^*; norm -> 0 as lambda -> 0",
    (3, RESP):"a solution for lambda < lambda^*; norm -> inf as lambda -> 0",
    (4, DIRECT):"two solutions for lambda > lambda_*, one at lambda_*",
    (5, DIRECT):"two solutions for lambda < lambda^*, one at lambda^*",
    (6, None):"no solutions for lambda < lambda_bar",
    (7, None):"no solutions for lambda > lambda_underline",
}

# Direction of lambda(M) at the small-M and large-M ends of a branch
TRENDS = {
    (1, DIRECT):(DECREASING, DECREASING), (1, RESP):(INCREASING, INCREASING),
    (2, DIRECT):(DECREASING, None), (2, RESP):(None, INCREASING),
    (3, DIRECT):(INCREASING, None), (3, RESP):(None, DECREASING),
    (4, DIRECT):(DECREASING, INCREASING), (5, DIRECT):(INCREASING, DECREASING),
}

def _scan_extremum(instance:ProblemInstance, which:int, kind:str,
            scan:np.ndarray) -> Tuple[Threshold, Threshold]:
    """
    Returns the extremum of R1 or R2 over the scan and the level attaining it.

    A level stuck at a scan edge through edge_extensions one-decade
    extensions of that edge is reported as 0 or infinity.
    """
    numerics = instance.numerics
    levels = scan.copy()
    edge = None
    for _ in range(numerics.edge_extensions + 1):
        values = R_curves(instance, levels)[which - 1]
        index = int(np.argmin(values) if kind == "min" else np.argmax(values))
        if index == len(levels) - 1:
            side = "upper"
        elif index == 0:
            side = "lower"
        else:
            side = None
        if side is None or (edge is not None and side != edge):
            edge = None
            break
        edge = side
        extra = log_grid(1.0, 10.0, numerics.scan_per_decade)[1:]
        levels = (np.concatenate([levels, levels[-1] * extra]) if side == "upper"
                    else np.concatenate([levels[0] / extra[::-1], levels]))
    method = f"R{which} {kind} over scan"
    if edge == "upper":
        return Threshold(float(values[index]), method), Threshold(np.inf, "scan edge")
    if edge == "lower":
        return Threshold(float(values[index]), method), Threshold(0.0, "scan edge")
    return Threshold(float(values[index]), method), Threshold(float(levels[index]), "sampled")

def nonexistence_bounds(instance:ProblemInstance,
            limits:Tuple[LimitClass, LimitClass]=None) -> Tuple[float, float]:
    """
    Returns lambda_bar, below which no positive solution exists when f0 and
    f_inf are finite, and lambda_underline, above which none exists when both
    are positive. An absent bound is None.

    lambda_bar = (d0/C1) psi1(c0/h^*) with C1 the sampled sup of f/phi;
    lambda_underline = (||d||/(h_* eps)) psi2(||c||/gamma0) with eps the sampled inf.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param limits: Classes of f0 and f_inf, defaults to estimating them
    :type limits: tuple, optional
    :return: lambda_bar and lambda_underline
    :rtype: tuple
    """
    f0, finf = estimate_f_limits(instance) if limits is None else limits
    constants = instance.derived_constants()
    sup_ratio, inf_ratio = f_ratio_bounds(instance)
    b = instance.homeo
    lambda_bar = None
    if f0.kind in (ZERO, FINITE) and finf.kind in (ZERO, FINITE) and np.isfinite(sup_ratio):
        argument = instance.c0 / constants.h_upper
        lambda_bar = float(instance.d0 / sup_ratio * b.psi1_values(np.array([argument]))[0])
    lambda_underline = None
    if f0.kind in (FINITE, INFINITE) and finf.kind in (FINITE, INFINITE) and inf_ratio > 0.0:
        argument = instance.c_max / constants.gamma0
        lambda_underline = float(instance.d_max / (constants.h_star * inf_ratio)
                    * b.psi2_values(np.array([argument]))[0])
    return lambda_bar, lambda_underline

def classify_case(instance:ProblemInstance, scan:np.ndarray=None) -> CaseReport:
    """
    Classifies f by (f0, f_inf) and computes the thresholds of its class.

    lambda_* is the min of R1 and lambda^* the max of R2 over the scan, with
    the attaining levels m_* and m^*. Inconclusive limits give an
    inconclusive report without thresholds.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param scan: Norm levels, defaults to the configured scan
    :type scan: np.ndarray, optional
    :return: Case report
    :rtype: CaseReport
    """
    f0, finf = estimate_f_limits(instance)
    if INCONCLUSIVE in (f0.kind, finf.kind):
        return CaseReport(None, [], None, f0, finf, ["f-limits inconclusive"], {}, True)
    levels = default_scan(instance) if scan is None else np.asarray(scan, dtype=float)
    primary, orientation = _case_of(f0.kind, finf.kind)
    ids = [] if primary is None else [primary]
    if f0.kind in (ZERO, FINITE) and finf.kind in (ZERO, FINITE):
        ids.append(6)
    if f0.kind in (FINITE, INFINITE) and finf.kind in (FINITE, INFINITE):
        ids.append(7)
    regime = [REGIMES[(case, orientation if case <= 5 else None)] for case in ids]
    thresholds = {}
    if primary in (2, 4):
        thresholds["lambda_*"], thresholds["m_*"] = _scan_extremum(instance, 1, "min", levels)
    if primary in (3, 5):
        thresholds["lambda^*"], thresholds["m^*"] = _scan_extremum(instance, 2, "max", levels)
    if 6 in ids or 7 in ids:
        lambda_bar, lambda_underline = nonexistence_bounds(instance, (f0, finf))
        if lambda_bar is not None:
            thresholds["lambda_bar"] = Threshold(lambda_bar, "sampled")
        if lambda_underline is not None:
            thresholds["lambda_underline"] = Threshold(lambda_underline, "sampled")
    return CaseReport(ids[0], ids, orientation, f0, finf, regime, thresholds, False)

def default_profiles(instance:ProblemInstance, mesh:np.ndarray=None) -> List[GridFunction]:
    """
    Returns unit-norm sample functions of the cone: tents, a parabola, a sine,
    a plateau and a squared sine, keeping those that satisfy the cone bound.
    """
    nodes = graded_mesh(instance.numerics.mesh_nodes, instance.numerics.mesh_ratio) if mesh is None else mesh
    gamma = instance.weight_profile().gamma
    shapes = [
        lambda t: np.where(t <= 0.5, 2.0 * t, 2.0 * (1.0 - t)),
        lambda t: np.where(t <= gamma, t / gamma, (1.0 - t) / (1.0 - gamma)),
        lambda t: 4.0 * t * (1.0 - t),
        lambda t: np.sin(np.pi * t),
        lambda t: np.minimum(1.0, np.minimum(4.0 * t, 4.0 * (1.0 - t))),
        lambda t: np.sin(np.pi * t) ** 2,
    ]
    profiles = []
    for shape in shapes:
        v = from_function(shape, nodes)
        v = v.scaled(1.0 / v.sup_norm())
        if cone_margin(instance, v, CONE_K) >= 0.0:
            profiles.append(v)
    return profiles

def shell_index_check(instance:ProblemInstance, lam:float, m:float,
            profiles:List[GridFunction]=None, progress:bool=False) -> str:
    """
    Compares ||H(lambda, v)|| with m for sample functions v of sup-norm m in the cone.

    This is a sampled necessary check of norm expansion or compression on the
    shell, not a fixed-point index computation.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param lam: Parameter value
    :type lam: float
    :param m: Norm level
    :type m: float
    :param profiles: Unit-norm cone functions, defaults to default_profiles
    :type profiles: list[GridFunction], optional
    :param progress: Whether to show a progress bar, defaults to False
    :type progress: bool, optional
    :return: expanding, contracting or inconclusive
    :rtype: str
    """
    norms = shell_norms(instance, lam, m, profiles, progress)
    if len(norms) == 0:
        return INCONCLUSIVE
    if np.all(norms > m):
        return EXPANDING
    if np.all(norms < m):
        return CONTRACTING
    return INCONCLUSIVE

def shell_norms(instance:ProblemInstance, lam:float, m:float, profiles:List[GridFunction]=None,
            progress:bool=False) -> np.ndarray:
    if not m > 0.0:
        raise InputError(f"Norm level must be positive, got {m!r}")
    samples = default_profiles(instance) if profiles is None else profiles
    norms = []
    for v in tqdm(samples, disable=not progress, desc="shell"):
        shell = v.scaled(m / v.sup_norm())
        norms.append(apply_H(instance, lam, shell).sup_norm())
    return np.array(norms)

def check_branch_trends(report:CaseReport, branch:Branch, samples:int=5) -> Dict[str, str]:
    """
    Checks the direction of lambda(M) at both ends of a branch against the class of f.

    Each end's verdict is confirmed when the last given number of samples
    move strictly in the predicted direction, contradicted when they all move
    against it and inconclusive otherwise. Ends without a prediction are None.

    :param report: Case report
    :type report: CaseReport
    :param branch: Computed branch
    :type branch: Branch
    :param samples: Samples per end, defaults to 5
    :type samples: int, optional
    :return: Verdicts keyed "small" and "large"
    :rtype: dict
    """
    trends = TRENDS.get((report.case_id, report.orientation), (None, None))
    lambdas = branch.lambdas()
    verdicts = {}
    for end, trend, tail in (("small", trends[0], lambdas[:samples]),
                ("large", trends[1], lambdas[-samples:])):
        if trend is None:
            verdicts[end] = None
            continue
        steps = np.diff(tail)
        if len(steps) < 2:
            verdicts[end] = INCONCLUSIVE
        elif np.all(trend * steps > 0.0):
            verdicts[end] = CONFIRMED
        elif np.all(trend * steps < 0.0):
            verdicts[end] = CONTRADICTED
        else:
            verdicts[end] = INCONCLUSIVE
    return verdicts

def example_threshold_M2(instance:ProblemInstance) -> float:
    """
    Returns max{1/rho_h, phi^-1(phi(1/(rho_h A1))^2 / (phi(1) psi1(1/A2)^2))},
    the level above which the three-piece nonlinearity built on it has
    three solutions for lambda in (R1(1/rho_h), R2(M2)).

    :param instance: Problem instance; its f is not used
    :type instance: ProblemInstance
    :return: Threshold for M2
    :rtype: float
    """
    constants = instance.derived_constants()
    b = instance.homeo
    phi = lambda x: float(b.phi_values(np.array([x]))[0])
    psi1 = float(b.psi1_values(np.array([1.0 / constants.A2]))[0])
    inner = phi(1.0 / (constants.rho_h * constants.A1)) ** 2 / (phi(1.0) * psi1 ** 2)
    return max(1.0 / constants.rho_h, invert(b, "phi", inner))

def golden_window(instance:ProblemInstance, M2:float) -> Tuple[float, float]:
    """
    Returns (R1(1/rho_h), R2(M2)).
    """
    rho_h = instance.derived_constants().rho_h
    R1, _ = R_curves(instance, 1.0 / rho_h)
    _, R2 = R_curves(instance, M2)
    return R1, R2
