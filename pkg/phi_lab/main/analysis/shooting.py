#!/usr/bin/env python3

"""
Peak-anchored shooting for -(d(t)phi(c(t)u'))' = lambda h(t) f(u).

Every shot starts at the peak abscissa sigma with u = M and quasi-derivative
0 and integrates outward to both endpoints. With r the distance from sigma
and Q = |d phi(c u')| the state obeys
    du/dr = -(1/c) phi^-1(Q/d),    dQ/dr = lambda h f(u)
up to the tail start epsilon away from the endpoint. The remaining tail uses
the integral form with f(u) frozen at its tail-start value, so weights that
are not integrable at an endpoint never enter the ODE. All functions work on
batches: one row per (sigma, lambda, M) triple.
"""

import numpy as np
from dataclasses import dataclass
from phi_lab.main.analysis.grid_function import GridFunction
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.quadrature import KRONROD_NODES
from phi_lab.main.analysis.quadrature import KRONROD_WEIGHTS
from phi_lab.main.analysis.quadrature import NestedIntegrand
from phi_lab.main.errors import InputError
from phi_lab.main.processing.grids import graded_mesh
from scipy.integrate import solve_ivp
from typing import Callable, Tuple

LEFT = -1
RIGHT = 1

# Largest phi argument a shot may reach before its row is dropped.
STATE_LIMIT = 1e250

def _identity(y:np.ndarray) -> np.ndarray:
    return y

def raw_values(e, x:np.ndarray) -> np.ndarray:
    """
    Evaluates an expression without the finiteness check, so that a single
    diverging row of a batch yields inf or nan instead of an exception.
    """
    with np.errstate(all="ignore"):
        return e.root.evaluate(np.asarray(x, dtype=float))

@dataclass(frozen=True)
class TailRule:
    """
    Quadrature rule on the tail between an endpoint and the tail start.

    Panels halve in width toward the endpoint; every array is indexed
    (panel, Kronrod node), panel 0 touching the tail start.
    """
    epsilon:float
    side:int
    boundaries:np.ndarray
    weights:np.ndarray
    H:np.ndarray
    c:np.ndarray
    d:np.ndarray

def build_tail_rule(instance:ProblemInstance, epsilon:float, side:int) -> TailRule:
    """
    Builds the tail rule for one endpoint.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param epsilon: Distance of the tail start from the endpoint
    :type epsilon: float
    :param side: LEFT or RIGHT
    :type side: int
    :return: Tail rule with H(s) = |int_s^tail start h| at every node
    :rtype: TailRule
    """
    if not 0.0 < epsilon < 0.25:
        raise InputError(f"Tail length must be in (0, 0.25), got {epsilon!r}")
    floor = instance.numerics.tail_floor
    levels = max(int(np.floor(np.log2(epsilon / floor))), 1)
    distances = np.concatenate([epsilon * 0.5 ** np.arange(levels + 1), [0.0]])
    outer, inner = distances[:-1], distances[1:]
    half = 0.5 * (outer - inner)
    middle = 0.5 * (outer + inner)
    distance = middle[:, None] + half[:, None] * KRONROD_NODES[None, :]
    weights = half[:, None] * KRONROD_WEIGHTS[None, :]
    if side == LEFT:
        t = distance
        boundaries = distances
        primitive = NestedIntegrand(_identity, instance.h.values, epsilon, "left",
                    breakpoints=instance.h_breakpoints)
    else:
        t = 1.0 - distance
        boundaries = 1.0 - distances
        primitive = NestedIntegrand(_identity, instance.h.values, 1.0 - epsilon, "right",
                    breakpoints=instance.h_breakpoints)
    return TailRule(epsilon, side, boundaries, weights, primitive.inner(t),
                instance.c.values(t), instance.d.values(t))

def tail_panels(rule:TailRule, phi_inverse:Callable, Q:np.ndarray, lam_f:np.ndarray) -> np.ndarray:
    """
    Returns the drop of u over every tail panel, one row per shot.

    :param rule: Tail rule
    :type rule: TailRule
    :param phi_inverse: Vectorized odd inverse of phi
    :type phi_inverse: Callable
    :param Q: |quasi-derivative| at the tail start
    :type Q: np.ndarray
    :param lam_f: lambda f(u) at the tail start
    :type lam_f: np.ndarray
    :return: Panel integrals of (1/c) phi^-1((Q + lambda f H)/d), shape (rows, panels)
    :rtype: np.ndarray
    """
    argument = (Q[:, None, None] + lam_f[:, None, None] * rule.H[None]) / rule.d[None]
    values = phi_inverse(argument) / rule.c[None]
    return np.sum(values * rule.weights[None], axis=2)

@dataclass(frozen=True)
class Shot:
    """
    End values of one batch of one-sided shots.
    """
    end:np.ndarray
    u_tail:np.ndarray
    Q_tail:np.ndarray
    profile:tuple = None

class Shooter:
    """
    Batched shooting for one instance and one tail length.

    Every batch is a single DOP853 system in the normalized distance
    xi = r / (distance from sigma to the tail start), mapped affinely for
    every row, so end values are smooth in sigma. Profiles are sampled on a
    mesh in xi graded toward both ends.
    """

    def __init__(self, instance:ProblemInstance, epsilon:float=None, steps:int=None):
        """
        Initializes the Shooter.

        :param instance: Problem instance
        :type instance: ProblemInstance
        :param epsilon: Tail length, defaults to numerics.tail_epsilon
        :type epsilon: float, optional
        :param steps: Profile intervals per side, defaults to numerics.shooting_steps
        :type steps: int, optional
        """
        numerics = instance.numerics
        self.instance = instance
        self.epsilon = numerics.tail_epsilon if epsilon is None else epsilon
        self.steps = numerics.shooting_steps if steps is None else steps
        self.rtol = numerics.shooting_rtol
        self.xi = graded_mesh(self.steps + 1, numerics.mesh_ratio)
        self.tails = {LEFT:build_tail_rule(instance, self.epsilon, LEFT),
                    RIGHT:build_tail_rule(instance, self.epsilon, RIGHT)}

    def sigma_bounds(self) -> Tuple[float, float]:
        return 2.0 * self.epsilon, 1.0 - 2.0 * self.epsilon

    def _rates(self, t:np.ndarray, u:np.ndarray, Q:np.ndarray,
                lam:np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        instance = self.instance
        slope = -instance.homeo.phi_inverse(Q / instance.d.values(t)) / instance.c.values(t)
        growth = lam * instance.h.values(t) * raw_values(instance.f, np.maximum(u, 0.0))
        return slope, growth

    def _integrate(self, sigma:np.ndarray, lam:np.ndarray, M:np.ndarray, sides:np.ndarray,
                span:np.ndarray, keep_profile:bool) -> tuple:
        """
        Integrates (u, Q) from the peak to the tail start for a batch of rows.

        Rows whose rates stop being finite are frozen and flagged. A batch
        the integrator gives up on is split in halves until the failing rows
        are isolated.

        :return: u and Q at the tail start, the flags of failed rows and the
        profile on xi (None unless keep_profile)
        :rtype: tuple
        """
        count = len(M)
        bad = ~np.isfinite(M) | ~np.isfinite(lam)
        with np.errstate(all="ignore"):
            growth_scale = np.abs(lam * raw_values(self.instance.f, np.maximum(M, 0.0)))
        growth_scale = np.where(np.isfinite(growth_scale) & (growth_scale > 0.0), growth_scale, 1.0)
        peak_scale = np.where(np.isfinite(M) & (M > 0.0), np.abs(M), 1.0)
        atol = self.rtol * np.concatenate([peak_scale, growth_scale])

        def rates(xi, y):
            u, Q = y[:count], y[count:]
            safe = ~bad & np.isfinite(u) & np.isfinite(Q) & (np.abs(Q) < STATE_LIMIT)
            t = sigma + sides * xi * span
            with np.errstate(all="ignore"):
                slope, growth = self._rates(t, np.where(safe, u, 0.0), np.where(safe, Q, 0.0),
                            np.where(safe, lam, 0.0))
            finite = safe & np.isfinite(slope) & np.isfinite(growth)
            bad[~finite] = True
            return np.concatenate([np.where(finite, span * slope, 0.0),
                        np.where(finite, span * growth, 0.0)])

        y0 = np.concatenate([np.where(bad, 0.0, M), np.zeros(count)])
        t_eval = self.xi if keep_profile else None
        solution = solve_ivp(rates, (0.0, 1.0), y0, method="DOP853", t_eval=t_eval,
                    rtol=self.rtol, atol=atol)
        if solution.success:
            u, Q = solution.y[:count, -1], solution.y[count:, -1]
            bad = bad | ~np.isfinite(u) | ~np.isfinite(Q) | (np.abs(Q) >= STATE_LIMIT)
            profile = solution.y[:count] if keep_profile else None
            return u, Q, bad, profile
        if count == 1:
            nan = np.full(1, np.nan)
            profile = np.full((1, len(self.xi)), np.nan) if keep_profile else None
            return nan, nan, np.ones(1, dtype=bool), profile
        half = count // 2
        first = self._integrate(sigma[:half], lam[:half], M[:half], sides[:half], span[:half],
                    keep_profile)
        second = self._integrate(sigma[half:], lam[half:], M[half:], sides[half:], span[half:],
                    keep_profile)
        profile = np.concatenate([first[3], second[3]]) if keep_profile else None
        return (np.concatenate([first[0], second[0]]), np.concatenate([first[1], second[1]]),
                    np.concatenate([first[2], second[2]]), profile)

    def shoot_sides(self, sigma, lam, M, sides, keep_profile:bool=False) -> Shot:
        """
        Integrates one side per row from the peak to the endpoint.

        :param sigma: Peak abscissas
        :type sigma: np.ndarray
        :param lam: Parameter values
        :type lam: np.ndarray
        :param M: Peak values
        :type M: np.ndarray
        :param sides: LEFT or RIGHT per row
        :type sides: np.ndarray
        :param keep_profile: Whether to keep u at every profile node, defaults to False
        :type keep_profile: bool, optional
        :return: u at the endpoint per row, nan where the shot diverged
        :rtype: Shot
        """
        sigma, lam, M, sides = np.broadcast_arrays(np.atleast_1d(np.asarray(sigma, dtype=float)),
                    np.atleast_1d(np.asarray(lam, dtype=float)),
                    np.atleast_1d(np.asarray(M, dtype=float)), np.atleast_1d(np.asarray(sides)))
        sigma = np.clip(sigma, *self.sigma_bounds())
        span = np.where(sides == LEFT, sigma - self.epsilon, 1.0 - self.epsilon - sigma)
        u, Q, bad, profile = self._integrate(sigma, lam.astype(float), M.astype(float), sides,
                    span, keep_profile)
        # FROZEN TAIL
        end = np.full(len(u), np.nan)
        drops = {}
        for side in (LEFT, RIGHT):
            rows = np.flatnonzero((sides == side) & ~bad)
            if len(rows) == 0:
                continue
            with np.errstate(all="ignore"):
                lam_f = lam[rows] * raw_values(self.instance.f, np.maximum(u[rows], 0.0))
            usable = np.isfinite(lam_f) & (lam_f * np.max(self.tails[side].H) < STATE_LIMIT)
            rows, lam_f = rows[usable], lam_f[usable]
            panels = tail_panels(self.tails[side], self.instance.homeo.phi_inverse, Q[rows], lam_f)
            end[rows] = u[rows] - np.sum(panels, axis=1)
            if keep_profile:
                for row, panel in zip(rows, panels):
                    drops[int(row)] = panel
        if keep_profile:
            return Shot(end, u, Q, (profile, drops))
        return Shot(end, u, Q)

    def shoot(self, sigma, lam, M) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns u(0) and u(1) for every (sigma, lambda, M) row.

        :param sigma: Peak abscissas
        :type sigma: np.ndarray
        :param lam: Parameter values
        :type lam: np.ndarray
        :param M: Peak values
        :type M: np.ndarray
        :return: Left and right end values
        :rtype: tuple
        """
        sigma, lam, M = np.broadcast_arrays(np.atleast_1d(np.asarray(sigma, dtype=float)),
                    np.atleast_1d(np.asarray(lam, dtype=float)),
                    np.atleast_1d(np.asarray(M, dtype=float)))
        count = len(sigma)
        sides = np.concatenate([np.full(count, LEFT), np.full(count, RIGHT)])
        shot = self.shoot_sides(np.tile(sigma, 2), np.tile(lam, 2), np.tile(M, 2), sides)
        return shot.end[:count], shot.end[count:]

    def profile(self, sigma:float, lam:float, M:float) -> Tuple[GridFunction, float, float]:
        """
        Returns the shot of a single row as a grid function, with its end values.

        The grid function has the profile nodes and the tail panel boundaries as
        nodes; its end values are set to 0 and the actual end values returned.

        :param sigma: Peak abscissa
        :type sigma: float
        :param lam: Parameter value
        :type lam: float
        :param M: Peak value
        :type M: float
        :return: Profile, u(0) and u(1)
        :rtype: tuple
        """
        sigma = float(np.clip(sigma, *self.sigma_bounds()))
        sides = np.array([LEFT, RIGHT])
        shot = self.shoot_sides(np.array([sigma, sigma]), np.array([lam, lam]),
                    np.array([M, M]), sides, keep_profile=True)
        profiles, drops = shot.profile
        if len(drops) < 2 or not np.all(np.isfinite(shot.end)):
            raise InputError(f"Shot diverged at sigma={sigma!r}, lambda={lam!r}, M={M!r}")
        pieces_t, pieces_u = [], []
        for row, side in enumerate(sides):
            span = sigma - self.epsilon if side == LEFT else 1.0 - self.epsilon - sigma
            t = sigma + side * self.xi * span
            rule = self.tails[side]
            # u at the panel boundaries, tail start first
            tail_u = shot.u_tail[row] - np.concatenate([[0.0], np.cumsum(drops[row])])
            tail_u[-1] = 0.0
            t = np.concatenate([t, rule.boundaries[1:]])
            values = np.concatenate([profiles[row], tail_u[1:]])
            pieces_t.append(t[::-1] if side == LEFT else t[1:])
            pieces_u.append(values[::-1] if side == LEFT else values[1:])
        nodes = np.concatenate(pieces_t)
        values = np.concatenate(pieces_u)
        nodes[0], nodes[-1] = 0.0, 1.0
        return GridFunction(nodes, values), float(shot.end[0]), float(shot.end[1])

def illinois_log(fn:Callable, lo:np.ndarray, hi:np.ndarray, f_lo:np.ndarray, f_hi:np.ndarray,
            tol:float=1e-8, max_iter:int=60) -> Tuple[np.ndarray, np.ndarray]:
    """
    Finds a root per row of fn in log space from brackets with a sign change.

    :param fn: Batched function fn(x, rows) of positive x
    :type fn: Callable
    :param lo: Lower bracket ends
    :type lo: np.ndarray
    :param hi: Upper bracket ends
    :type hi: np.ndarray
    :param f_lo: Values at the lower ends
    :type f_lo: np.ndarray
    :param f_hi: Values at the upper ends
    :type f_hi: np.ndarray
    :param tol: Relative width of the final bracket, defaults to 1e-8
    :type tol: float, optional
    :param max_iter: Iteration budget, defaults to 60
    :type max_iter: int, optional
    :return: Roots and a convergence mask
    :rtype: tuple
    """
    a, b = np.log(lo).astype(float), np.log(hi).astype(float)
    fa, fb = np.array(f_lo, dtype=float), np.array(f_hi, dtype=float)
    x = np.where(np.abs(fa) < np.abs(fb), a, b)
    done = (fa == 0.0) | (fb == 0.0) | (np.abs(b - a) <= tol)
    x = np.where(fa == 0.0, a, np.where(fb == 0.0, b, x))
    side = np.zeros(len(a), dtype=int)
    for _ in range(max_iter):
        active = np.flatnonzero(~done)
        if len(active) == 0:
            break
        aa, bb, fa_, fb_ = a[active], b[active], fa[active], fb[active]
        trial = (aa * fb_ - bb * fa_) / (fb_ - fa_)
        outside = ~((trial > np.minimum(aa, bb)) & (trial < np.maximum(aa, bb)))
        trial[outside] = 0.5 * (aa[outside] + bb[outside])
        f_trial = fn(np.exp(trial), active)
        broken = ~np.isfinite(f_trial)
        trial[broken] = 0.5 * (aa[broken] + bb[broken])
        if np.any(broken):
            f_trial[broken] = fn(np.exp(trial[broken]), active[broken])
        with_a = np.sign(f_trial) == np.sign(fa_)
        last = side[active]
        new_fb = np.where(with_a & (last == -1), 0.5 * fb_, fb_)
        new_fa = np.where(~with_a & (last == 1), 0.5 * fa_, fa_)
        a[active] = np.where(with_a, trial, aa)
        fa[active] = np.where(with_a, f_trial, new_fa)
        b[active] = np.where(with_a, bb, trial)
        fb[active] = np.where(with_a, new_fb, f_trial)
        side[active] = np.where(with_a, -1, 1)
        x[active] = trial
        done[active] = (f_trial == 0.0) | (np.abs(b[active] - a[active]) <= tol)
        done[active] |= ~np.isfinite(f_trial)
    converged = done & np.isfinite(fa) & np.isfinite(fb)
    return np.exp(x), converged

def newton_batch(residuals:Callable, x0:np.ndarray, lower:np.ndarray, upper:np.ndarray,
            tol:float=1e-10, step:float=1e-6, max_iter:int=50,
            halvings:int=5, bar=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Damped Newton for many 2-equation systems at once.

    The Jacobian is a forward finite difference with relative step. A full
    step that does not decrease the max-norm of the residual is halved up to
    the given number of times; a row with no decrease is given up.

    :param residuals: Batched function residuals(x, rows) -> (n, 2)
    :type residuals: Callable
    :param x0: Starting points, shape (rows, 2)
    :type x0: np.ndarray
    :param lower: Lower bounds of both unknowns
    :type lower: np.ndarray
    :param upper: Upper bounds of both unknowns
    :type upper: np.ndarray
    :param tol: Max-norm of a converged residual, defaults to 1e-10
    :type tol: float, optional
    :param step: Relative finite-difference step, defaults to 1e-6
    :type step: float, optional
    :param max_iter: Iteration budget, defaults to 50
    :type max_iter: int, optional
    :param halvings: Damping halvings per iteration, defaults to 5
    :type halvings: int, optional
    :param bar: tqdm bar advanced by converged rows, defaults to None
    :type bar: tqdm, optional
    :return: Final points, convergence mask and residual norms
    :rtype: tuple
    """
    x = np.array(x0, dtype=float).reshape(-1, 2)
    rows = np.arange(len(x))
    norms = np.full(len(x), np.inf)
    ready = np.all(np.isfinite(x), axis=1)
    if np.any(ready):
        r = np.full((len(x), 2), np.nan)
        r[ready] = residuals(x[ready], rows[ready])
    else:
        r = np.full((len(x), 2), np.nan)
    norms = np.where(np.all(np.isfinite(r), axis=1), np.max(np.abs(r), axis=1), np.inf)
    converged = norms <= tol
    active = ~converged & np.isfinite(norms)
    if bar is not None:
        bar.update(int(np.sum(converged)))
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        n = len(idx)
        xa, ra = x[idx], r[idx]
        h = step * np.maximum(np.abs(xa), 1.0)
        shifted = np.concatenate([xa + np.stack([h[:, 0], np.zeros(n)], axis=1),
                    xa + np.stack([np.zeros(n), h[:, 1]], axis=1)])
        rp = residuals(shifted, np.concatenate([idx, idx]))
        j0 = (rp[:n] - ra) / h[:, :1]
        j1 = (rp[n:] - ra) / h[:, 1:]
        jacobian = np.stack([j0, j1], axis=2)
        usable = np.all(np.isfinite(jacobian), axis=(1, 2)) & np.all(np.isfinite(ra), axis=1)
        usable[usable] = np.linalg.matrix_rank(jacobian[usable]) == 2
        delta = np.full((n, 2), np.nan)
        if np.any(usable):
            delta[usable] = -np.linalg.solve(jacobian[usable], ra[usable][:, :, None])[:, :, 0]
        usable = usable & np.all(np.isfinite(delta), axis=1)
        accepted = np.zeros(n, dtype=bool)
        new_x, new_r = xa.copy(), ra.copy()
        pending = np.flatnonzero(usable)
        for level in range(halvings + 1):
            if len(pending) == 0:
                break
            trial = np.clip(xa[pending] + 0.5 ** level * delta[pending], lower, upper)
            rt = residuals(trial, idx[pending])
            with np.errstate(invalid="ignore"):
                nt = np.where(np.all(np.isfinite(rt), axis=1), np.max(np.abs(rt), axis=1), np.inf)
            better = nt < norms[idx[pending]]
            new_x[pending[better]] = trial[better]
            new_r[pending[better]] = rt[better]
            accepted[pending[better]] = True
            pending = pending[~better]
        x[idx], r[idx] = new_x, new_r
        norms[idx] = np.where(accepted, np.max(np.abs(new_r), axis=1), norms[idx])
        newly = accepted & (norms[idx] <= tol)
        converged[idx] = newly
        active[idx] = accepted & ~newly
        if bar is not None:
            bar.update(int(np.sum(newly)))
    return x, converged, norms
