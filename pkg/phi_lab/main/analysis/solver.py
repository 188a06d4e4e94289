#!/usr/bin/env python3

"""
Positive solutions: Picard iteration of H, branch continuation of lambda(M)
by peak-anchored shooting, enumeration of the solutions at a fixed lambda and
their verification against the solution operator.
"""

import numpy as np
from dataclasses import dataclass
from dataclasses import field
from phi_lab.main.analysis.grid_function import GridFunction
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.problem import R_curves
from phi_lab.main.analysis.shooting import LEFT
from phi_lab.main.analysis.shooting import RIGHT
from phi_lab.main.analysis.shooting import Shooter
from phi_lab.main.analysis.shooting import illinois_log
from phi_lab.main.analysis.shooting import newton_batch
from phi_lab.main.analysis.solution_operator import CONE_K
from phi_lab.main.analysis.solution_operator import INTERIOR
from phi_lab.main.analysis.solution_operator import cone_margin
from phi_lab.main.analysis.solution_operator import find_sigma
from phi_lab.main.analysis.solution_operator import image_of
from phi_lab.main.analysis.solution_operator import nonlinear_source
from phi_lab.main.analysis.solution_operator import residual
from phi_lab.main.errors import InputError
from phi_lab.main.errors import LabError
from phi_lab.main.processing.grids import log_grid
from scipy.optimize import root
from tqdm import tqdm
from typing import Callable, List, Tuple, Union

COLLAPSED = "collapsed_to_zero"
OSCILLATING = "oscillating"
BUDGET = "budget"

LOG_BOUND = 700.0

@dataclass(frozen=True)
class Certificate:
    sup_residual:float
    quasi_derivative_residual:float
    interior_margin:float
    cone_margin:float
    boundary:Tuple[float, float]
    minimum:float
    sup_norm:float
    tolerance:float
    passed:bool

@dataclass(frozen=True)
class Solution:
    u:GridFunction
    sigma:float
    lam:float
    sup_norm:float
    sup_residual:float
    cone_margin:float
    quasi_derivative_residual:float = None
    tail_error:float = None

@dataclass(frozen=True)
class NonConvergence:
    reason:str
    iterations:int
    last_change:float
    last_norm:float

@dataclass(frozen=True)
class BranchSample:
    M:float
    lam:float
    sigma:float
    residual:float

@dataclass
class Branch:
    """
    Computed samples of lambda(M) with the M-intervals where continuation stalled.
    """
    samples:List[BranchSample] = field(default_factory=list)
    gaps:List[Tuple[float, float]] = field(default_factory=list)

    def peaks(self) -> np.ndarray:
        return np.array([s.M for s in self.samples])

    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])

    def sigmas(self) -> np.ndarray:
        return np.array([s.sigma for s in self.samples])

class Solutions(list):
    """
    Distinct verified solutions sorted by sup-norm, with the seeds that failed.
    """

    def __init__(self, solutions:List[Solution]=None, failures:List[str]=None, branch:Branch=None):
        super().__init__([] if solutions is None else solutions)
        self.failures = [] if failures is None else failures
        self.branch = branch

def verify_solution(instance:ProblemInstance, lam:float, u:GridFunction) -> Certificate:
    """
    Verifies a candidate solution against the solution operator.

    The candidate passes when ||u - H(lambda, u)|| <= solver_tol (1 + ||u||),
    its boundary values are within the same bound, u is positive somewhere,
    nonnegative up to cone_tol max(1, ||u||) and satisfies the endpoint cone
    bound with the same slack. The quasi-derivative residual is reported only.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param lam: Parameter value
    :type lam: float
    :param u: Candidate
    :type u: GridFunction
    :return: Certificate
    :rtype: Certificate
    """
    numerics = instance.numerics
    norm = u.sup_norm()
    tolerance = numerics.solver_tol * (1.0 + norm)
    slack = numerics.cone_tol * max(1.0, norm)
    sup_residual, quasi = residual(instance, lam, u)
    interior = cone_margin(instance, u, INTERIOR)
    cone = cone_margin(instance, u, CONE_K)
    boundary = (float(u.values[0]), float(u.values[-1]))
    minimum = float(np.min(u.values))
    passed = (sup_residual <= tolerance
                and max(abs(boundary[0]), abs(boundary[1])) <= tolerance
                and norm > numerics.zero_threshold
                and minimum >= -slack
                and interior >= -slack)
    return Certificate(sup_residual, quasi, interior, cone, boundary, minimum, norm, tolerance, passed)

def picard(instance:ProblemInstance, lam:float, u0:GridFunction, damping:float=1.0,
            max_iter:int=None, progress:bool=False) -> Union[Solution, NonConvergence]:
    """
    Iterates u <- (1 - damping) u + damping H(lambda, u) on the nodes of u0.

    Only fixed points that attract the iteration are found. Convergence to 0
    is reported as collapsed_to_zero, never as a solution.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param lam: Parameter value
    :type lam: float
    :param u0: Starting function in the cone
    :type u0: GridFunction
    :param damping: Relaxation factor in (0,1], defaults to 1.0
    :type damping: float, optional
    :param max_iter: Iteration budget, defaults to numerics.picard_max_iter
    :type max_iter: int, optional
    :param progress: Whether to show a progress bar, defaults to False
    :type progress: bool, optional
    :return: Solution, or the reason the iteration stopped
    :rtype: Solution or NonConvergence
    """
    if not 0.0 < damping <= 1.0:
        raise InputError(f"Damping must be in (0,1], got {damping!r}")
    numerics = instance.numerics
    budget = numerics.picard_max_iter if max_iter is None else max_iter
    u = u0
    norms = [u.sup_norm()]
    change = np.inf
    for iteration in tqdm(range(1, budget + 1), disable=not progress, desc="picard"):
        source = nonlinear_source(instance, lam, u)
        if lam == 0.0 or source.vanishes():
            return NonConvergence(COLLAPSED, iteration, 0.0, u.sup_norm())
        image, sigma = image_of(instance, source, u.nodes)
        values = (1.0 - damping) * u.values + damping * image(u.nodes)
        change = float(np.max(np.abs(values - u.values)))
        u = GridFunction(u.nodes, values)
        norm = u.sup_norm()
        norms.append(norm)
        if norm <= numerics.zero_threshold:
            return NonConvergence(COLLAPSED, iteration, change, norm)
        if change <= numerics.picard_tol * (1.0 + norm):
            sup_residual, quasi = residual(instance, lam, u)
            return Solution(u, sigma.sigma, lam, norm, sup_residual,
                        cone_margin(instance, u, INTERIOR), quasi)
    steps = np.diff(norms[-11:])
    flips = int(np.sum(np.sign(steps[1:]) * np.sign(steps[:-1]) < 0))
    reason = OSCILLATING if flips >= len(steps) - 2 and len(steps) >= 4 else BUDGET
    return NonConvergence(reason, budget, change, norms[-1])

def _branch_residuals(shooter:Shooter, M:np.ndarray) -> Callable:
    """
    Returns (sigma, log lambda) -> (u(0), u(1)) / M for the peak values of each row.
    """
    def residuals(x:np.ndarray, rows:np.ndarray) -> np.ndarray:
        peaks = M[rows]
        left, right = shooter.shoot(x[:, 0], np.exp(x[:, 1]), peaks)
        return np.stack([left, right], axis=1) / peaks[:, None]
    return residuals

def _peak_sigma(instance:ProblemInstance) -> float:
    try:
        return find_sigma(instance, instance.h.values).sigma
    except LabError:
        return 0.5

def _lambda_brackets(instance:ProblemInstance, M:np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Starting lambda brackets from the shell curves, R2(M) <= lambda(M) <= R1(M).
    """
    try:
        R1, R2 = R_curves(instance, M)
        lo, hi = R2 / 10.0, R1 * 10.0
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo > 0.0):
            return lo, np.maximum(hi, 100.0 * lo)
    except LabError:
        pass
    return np.full(len(M), 1e-2), np.full(len(M), 1e2)

def initial_guesses(instance:ProblemInstance, shooter:Shooter, M:np.ndarray) -> np.ndarray:
    """
    Returns starting (sigma, log lambda) for every peak value.

    sigma is the peak of T(h); lambda is the geometric mean of the values
    that bring each side of the shot to 0 at that sigma. Rows without a
    bracket get nan.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param shooter: Shooter of the instance
    :type shooter: Shooter
    :param M: Peak values
    :type M: np.ndarray
    :return: Starting points, shape (len(M), 2)
    :rtype: np.ndarray
    """
    numerics = instance.numerics
    count = len(M)
    sigma = np.clip(_peak_sigma(instance), *shooter.sigma_bounds())
    sides = np.concatenate([np.full(count, LEFT), np.full(count, RIGHT)])
    peaks = np.tile(M, 2)

    def side_end(lam:np.ndarray, rows:np.ndarray) -> np.ndarray:
        return shooter.shoot_sides(sigma, lam, peaks[rows], sides[rows]).end / peaks[rows]

    lo, hi = _lambda_brackets(instance, M)
    lo, hi = np.tile(lo, 2), np.tile(hi, 2)
    rows = np.arange(2 * count)
    f_lo, f_hi = side_end(lo, rows), side_end(hi, rows)
    for _ in range(numerics.bracket_expansions):
        low = np.flatnonzero(~(f_lo > 0.0))
        high = np.flatnonzero(~(f_hi < 0.0))
        if len(low) == 0 and len(high) == 0:
            break
        lo[low] = lo[low] / 10.0
        hi[high] = hi[high] * 10.0
        f_lo[low] = side_end(lo[low], low)
        f_hi[high] = side_end(hi[high], high)
    bracketed = (f_lo > 0.0) & (f_hi < 0.0)
    lam = np.full(2 * count, np.nan)
    found = np.flatnonzero(bracketed)
    if len(found) > 0:
        roots, converged = illinois_log(lambda x, r: side_end(x, found[r]), lo[found], hi[found],
                    f_lo[found], f_hi[found], numerics.illinois_tol, numerics.illinois_max_iter)
        lam[found] = np.where(converged, roots, np.nan)
    guess = np.sqrt(lam[:count] * lam[count:])
    return np.stack([np.full(count, sigma), np.log(guess)], axis=1)

def _bounds(shooter:Shooter) -> Tuple[np.ndarray, np.ndarray]:
    low, high = shooter.sigma_bounds()
    return np.array([low, -LOG_BOUND]), np.array([high, LOG_BOUND])

def _newton(instance:ProblemInstance, residuals:Callable, x0:np.ndarray, shooter:Shooter,
            bar=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    numerics = instance.numerics
    lower, upper = _bounds(shooter)
    return newton_batch(residuals, x0, lower, upper, numerics.newton_tol, numerics.newton_step,
                numerics.newton_max_iter, numerics.newton_halvings, bar)

def _repair(instance:ProblemInstance, shooter:Shooter, M:np.ndarray, x:np.ndarray,
            ok:np.ndarray, norms:np.ndarray, bar=None):
    """
    Retries failed peak values from their nearest converged neighbor, halving
    the step in log M on failure until stall_halvings is exhausted.
    """
    numerics = instance.numerics
    converged = np.flatnonzero(ok)
    pending = np.flatnonzero(~ok)
    if len(converged) == 0 or len(pending) == 0:
        return
    nearest = converged[np.argmin(np.abs(pending[:, None] - converged[None, :]), axis=1)]
    start_M = M[nearest].copy()
    start_x = x[nearest].copy()
    fraction = np.ones(len(pending))
    floor = 0.5 ** numerics.stall_halvings
    for _ in range(4 * (numerics.stall_halvings + 1)):
        if len(pending) == 0:
            break
        target = np.exp(np.log(start_M) + fraction * (np.log(M[pending]) - np.log(start_M)))
        found, success, found_norms = _newton(instance, _branch_residuals(shooter, target),
                    start_x, shooter)
        reached = success & (fraction == 1.0)
        x[pending[reached]] = found[reached]
        norms[pending[reached]] = found_norms[reached]
        ok[pending[reached]] = True
        if bar is not None:
            bar.update(int(np.sum(reached)))
        step = success & ~reached
        start_M[step] = target[step]
        start_x[step] = found[step]
        fraction[step] = 1.0
        fraction[~success] = fraction[~success] / 2.0
        keep = ~reached & (fraction >= floor)
        pending, start_M, start_x, fraction = (pending[keep], start_M[keep], start_x[keep],
                    fraction[keep])

def _gaps(M:np.ndarray, ok:np.ndarray) -> List[Tuple[float, float]]:
    """
    Returns the M-intervals spanned by each run of failed grid values,
    bounded by the converged neighbors or the grid ends.
    """
    gaps = []
    index = 0
    while index < len(M):
        if ok[index]:
            index += 1
            continue
        end = index
        while end + 1 < len(M) and not ok[end + 1]:
            end += 1
        low = M[index - 1] if index > 0 else M[index]
        high = M[end + 1] if end + 1 < len(M) else M[end]
        gaps.append((float(low), float(high)))
        index = end + 1
    return gaps

def _peak_grid(instance:ProblemInstance, M_grid:np.ndarray=None) -> np.ndarray:
    numerics = instance.numerics
    if M_grid is None:
        return log_grid(numerics.mgrid_lo, numerics.mgrid_hi, numerics.mgrid_per_decade)
    M = np.asarray(M_grid, dtype=float)
    if M.ndim != 1 or len(M) == 0 or np.any(M <= 0.0) or np.any(np.diff(M) <= 0.0):
        raise InputError("M_grid must be positive and strictly increasing")
    return M

def continue_branch(instance:ProblemInstance, M_grid:np.ndarray=None,
            progress:bool=False) -> Branch:
    """
    Computes lambda(M) and sigma(M) over a grid of peak values.

    Every peak value is solved at once by damped Newton on (sigma, log lambda)
    from a shooting-based starting point; peak values that fail are retried
    from the nearest converged neighbor with step halving in log M, and
    recorded as gaps when that stalls.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param M_grid: Positive increasing peak values, defaults to the configured grid
    :type M_grid: np.ndarray, optional
    :param progress: Whether to show a progress bar, defaults to False
    :type progress: bool, optional
    :return: Branch
    :rtype: Branch
    """
    M = _peak_grid(instance, M_grid)
    shooter = Shooter(instance)
    with tqdm(total=len(M), disable=not progress, desc="branch") as bar:
        x0 = initial_guesses(instance, shooter, M)
        x, ok, norms = _newton(instance, _branch_residuals(shooter, M), x0, shooter, bar)
        _repair(instance, shooter, M, x, ok, norms, bar)
    samples = [BranchSample(float(M[i]), float(np.exp(x[i, 1])), float(x[i, 0]),
                float(norms[i] * M[i])) for i in np.flatnonzero(ok)]
    return Branch(samples, _gaps(M, ok))

def _fixed_lambda_residuals(shooter:Shooter, lam:float) -> Callable:
    """
    Returns (sigma, log M) -> (u(0), u(1)) / M at a fixed lambda.
    """
    def residuals(x:np.ndarray, rows:np.ndarray) -> np.ndarray:
        peaks = np.exp(x[:, 1])
        left, right = shooter.shoot(x[:, 0], lam, peaks)
        return np.stack([left, right], axis=1) / peaks[:, None]
    return residuals

def _bracket_roots(instance:ProblemInstance, shooter:Shooter, lam:float, low:List[BranchSample],
            high:List[BranchSample]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Finds lambda(M) = lambda between pairs of branch samples by a bracketed
    root in log M, solving the branch at every trial peak value.
    """
    numerics = instance.numerics
    log_M = np.log([[a.M, b.M] for a, b in zip(low, high)])
    states = np.array([[[a.sigma, np.log(a.lam)], [b.sigma, np.log(b.lam)]]
                for a, b in zip(low, high)])
    sigmas = np.full(len(low), np.nan)

    def mismatch(M:np.ndarray, rows:np.ndarray) -> np.ndarray:
        weight = (np.log(M) - log_M[rows, 0]) / (log_M[rows, 1] - log_M[rows, 0])
        seeds = states[rows, 0] + weight[:, None] * (states[rows, 1] - states[rows, 0])
        found, success, _ = _newton(instance, _branch_residuals(shooter, M), seeds, shooter)
        sigmas[rows] = np.where(success, found[:, 0], np.nan)
        return np.where(success, found[:, 1] - np.log(lam), np.nan)

    f_lo = np.log([a.lam for a in low]) - np.log(lam)
    f_hi = np.log([b.lam for b in high]) - np.log(lam)
    roots, converged = illinois_log(mismatch, np.exp(log_M[:, 0]), np.exp(log_M[:, 1]),
                f_lo, f_hi, 1e-12, numerics.illinois_max_iter)
    # sigma of the final iterate belongs to the returned root
    mismatch(roots, np.arange(len(low)))
    converged = converged & np.isfinite(sigmas)
    return np.stack([sigmas, np.log(roots)], axis=1), converged

def _pair_roots(instance:ProblemInstance, shooter:Shooter, lam:float,
            pairs:List[Tuple[BranchSample, BranchSample]], failures:List[str]) -> List[np.ndarray]:
    """
    Solves lambda(M) = lambda between pairs of samples where lambda(M) - lambda
    changes sign: Newton from a log-log interpolated seed, then a bracketed
    root along the branch when Newton fails or leaves the pair.
    """
    low, high = [a for a, _ in pairs], [b for _, b in pairs]
    seeds = []
    for a, b in pairs:
        span = np.log(b.lam) - np.log(a.lam)
        weight = 0.5 if span == 0.0 else (np.log(lam) - np.log(a.lam)) / span
        seeds.append([a.sigma + weight * (b.sigma - a.sigma),
                    np.log(a.M) + weight * (np.log(b.M) - np.log(a.M))])
    x, ok, _ = _newton(instance, _fixed_lambda_residuals(shooter, lam), np.array(seeds), shooter)
    slack = np.array([np.log(b.M) - np.log(a.M) for a, b in pairs])
    inside = ((x[:, 1] >= np.log([a.M for a in low]) - slack)
                & (x[:, 1] <= np.log([b.M for b in high]) + slack))
    ok = ok & inside
    retry = np.flatnonzero(~ok)
    if len(retry) > 0:
        found, success = _bracket_roots(instance, shooter, lam, [low[i] for i in retry],
                    [high[i] for i in retry])
        x[retry] = found
        ok[retry] = success
        for i in retry[~success]:
            failures.append(f"No root of lambda(M) = {float(lam)!r} found for M in"
                        + f" [{float(low[i].M)!r}, {float(high[i].M)!r}]")
    return [x[i] for i in np.flatnonzero(ok)]

def _max_norm(values:np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values))) if np.all(np.isfinite(values)) else np.inf

def _polish(shooter:Shooter, residuals:Callable, sigma:float, M:float) -> Tuple[float, float]:
    """
    Refines a root of the fixed-lambda system with the hybrid Powell method,
    keeping the starting point unless the residual drops.

    :param shooter: Shooter of the instance
    :type shooter: Shooter
    :param residuals: Batched (sigma, log M) residuals at the fixed lambda
    :type residuals: Callable
    :param sigma: Peak abscissa of the root
    :type sigma: float
    :param M: Peak value of the root
    :type M: float
    :return: Refined sigma and M
    :rtype: tuple
    """
    start = np.array([sigma, np.log(M)])
    row = np.zeros(1, dtype=int)

    def fn(x:np.ndarray) -> np.ndarray:
        return residuals(x[None, :], row)[0]

    low, high = shooter.sigma_bounds()
    try:
        result = root(fn, start, method="hybr",
                    options={"xtol":shooter.instance.numerics.newton_tol})
    except (ValueError, FloatingPointError):
        return sigma, M
    refined = result.x
    if (not result.success or not low <= refined[0] <= high
                or not -LOG_BOUND <= refined[1] <= LOG_BOUND
                or _max_norm(result.fun) > _max_norm(fn(start))):
        return sigma, M
    return float(refined[0]), float(np.exp(refined[1]))

def _distinct(candidates:List[Tuple[float, float]], tol:float) -> List[Tuple[float, float]]:
    """
    Clusters (sigma, M) roots: two roots are the same solution when both
    log M and sigma differ by at most tol.
    """
    kept = []
    for sigma, M in sorted(candidates, key=lambda item: item[1]):
        if all(abs(np.log(M) - np.log(other_M)) > tol or abs(sigma - other_sigma) > tol
                    for other_sigma, other_M in kept):
            kept.append((sigma, M))
    return kept

def solve_fixed_lambda(instance:ProblemInstance, lam:float, M_grid:np.ndarray=None,
            branch:Branch=None, progress:bool=False) -> Solutions:
    """
    Enumerates positive solutions at a fixed lambda.

    The branch lambda(M) is computed over M_grid (or taken as given) and
    every sample seeds damped Newton on (sigma, log M) at this lambda, so
    roots where lambda(M) only touches lambda between samples are found.
    Sign changes of lambda(M) - lambda with no seeded root inside are solved
    from an interpolated seed, then by a bracketed root along the branch.
    Roots outside the sampled peak range are dropped; the rest are clustered,
    refined with scipy.optimize.root, rebuilt as grid functions and verified.
    Enumeration is only as complete as M_grid.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param lam: Parameter value
    :type lam: float
    :param M_grid: Peak values, defaults to the configured grid
    :type M_grid: np.ndarray, optional
    :param branch: Precomputed branch over the same grid, defaults to None
    :type branch: Branch, optional
    :param progress: Whether to show progress bars, defaults to False
    :type progress: bool, optional
    :return: Verified solutions sorted by sup-norm
    :rtype: Solutions
    """
    if lam < 0.0:
        raise InputError(f"lambda must be nonnegative, got {lam!r}")
    if lam == 0.0:
        return Solutions()
    numerics = instance.numerics
    if branch is None:
        branch = continue_branch(instance, M_grid, progress)
    samples = branch.samples
    failures = []
    if len(samples) == 0:
        return Solutions([], failures, branch)
    shooter = Shooter(instance)
    residuals = _fixed_lambda_residuals(shooter, lam)
    slack = numerics.cluster_tol
    lowest, highest = np.log(samples[0].M) - slack, np.log(samples[-1].M) + slack
    # EVERY SAMPLE SEEDS NEWTON AT THIS LAMBDA
    x, ok, _ = _newton(instance, residuals, np.array([[s.sigma, np.log(s.M)] for s in samples]),
                shooter)
    ok = ok & (x[:, 1] >= lowest) & (x[:, 1] <= highest)
    found = [x[i] for i in np.flatnonzero(ok)]
    # sign changes with no seeded root inside fall back to bracketing
    pairs = [(a, b) for a, b in zip(samples[:-1], samples[1:])
                if (a.lam - lam) * (b.lam - lam) <= 0.0
                and not any(np.log(a.M) - slack <= point[1] <= np.log(b.M) + slack for point in found)]
    if len(pairs) > 0:
        found.extend(_pair_roots(instance, shooter, lam, pairs, failures))
    clusters = _distinct([(float(point[0]), float(np.exp(point[1]))) for point in found],
                numerics.cluster_tol)
    candidates = _distinct([_polish(shooter, residuals, sigma, M) for sigma, M in clusters],
                numerics.cluster_tol)
    halved = Shooter(instance, shooter.epsilon / 2.0)
    solutions = []
    for sigma, M in tqdm(candidates, disable=not progress, desc="verify"):
        try:
            u, left, right = shooter.profile(sigma, lam, M)
        except LabError as error:
            failures.append(f"Profile at M={M!r} failed: {error}")
            continue
        half_left, half_right = halved.shoot(sigma, lam, M)
        tail_error = float(max(abs(half_left[0] - left), abs(half_right[0] - right)))
        certificate = verify_solution(instance, lam, u)
        if not certificate.passed:
            failures.append(f"Solution at M={M!r}, sigma={sigma!r} failed verification:"
                        + f" residual {certificate.sup_residual!r},"
                        + f" cone margin {certificate.interior_margin!r}")
            continue
        solutions.append(Solution(u, sigma, lam, u.sup_norm(), certificate.sup_residual,
                    certificate.interior_margin, certificate.quasi_derivative_residual, tail_error))
    solutions.sort(key=lambda s: s.sup_norm)
    return Solutions(solutions, failures, branch)
