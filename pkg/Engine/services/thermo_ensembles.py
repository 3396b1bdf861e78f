"""
Legendre transforms of sampled energy densities and the finite-volume
comparison bounds used to pass between canonical and grand-canonical energies.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DomainError, ExtrapolationError, GeometryError
from core.models import DensityLowerBound, GridFunction, LegendreTransform
from services.first_order_bounds import lower_hull_indices
from services.quadrature import ball_volume

logger = logging.getLogger(__name__)


def _mu_array(mu_grid: Sequence[float]) -> np.ndarray:
    mu = np.unique(np.asarray(mu_grid, dtype=float))
    if mu.size == 0:
        raise DomainError("mu grid is empty")
    return mu


def legendre_transform(g: GridFunction, mu_grid: Sequence[float]) -> LegendreTransform:
    """g*(mu) = sup_rho [mu rho - g(rho)] over the piecewise-linear extension of g.

    The supremum over a piecewise-linear function sits at a vertex. When the
    maximising vertex is the last one and mu exceeds the last slope, the
    conjugate is +inf; the value at that vertex is kept and flagged.
    """
    xs, ys = g.as_arrays()
    mu = _mu_array(mu_grid)
    scores = mu[:, None] * xs[None, :] - ys[None, :]
    best = np.argmax(scores, axis=1)
    values = scores[np.arange(mu.size), best]
    last_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]) if xs.size > 1 else -math.inf
    unbounded = (best == xs.size - 1) & (mu > last_slope)
    if np.any(unbounded):
        logger.debug(f"Conjugate unbounded for {int(unbounded.sum())} of {mu.size} mu values")
    return LegendreTransform(primal=g, dual=GridFunction(xs=mu.tolist(), ys=values.tolist()),
                             argmax=xs[best].tolist(), unbounded=unbounded.tolist())


def hull_slopes(g: GridFunction) -> List[float]:
    """Edge slopes of the lower convex envelope of g."""
    xs, ys = g.as_arrays()
    hull = lower_hull_indices(xs, ys)
    return [float((ys[j] - ys[i]) / (xs[j] - xs[i])) for i, j in zip(hull[:-1], hull[1:])]


def _bounded_dual(g: GridFunction, mu_grid: Optional[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
    grid = hull_slopes(g) if mu_grid is None else list(mu_grid)
    if not grid:
        grid = [0.0]
    lt = legendre_transform(g, grid)
    mu, dual = lt.dual.as_arrays()
    keep = ~np.asarray(lt.unbounded)
    return mu[keep], dual[keep]


def biconjugate(g: GridFunction, mu_grid: Optional[Sequence[float]] = None) -> GridFunction:
    """g**(rho) = sup_mu [mu rho - g*(mu)] at the grid points of g.

    With the default mu grid (hull edge slopes) this is the lower convex
    envelope of g exactly.
    """
    xs, ys = g.as_arrays()
    if xs.size == 1:
        return g
    mu, dual = _bounded_dual(g, mu_grid)
    values = np.max(mu[:, None] * xs[None, :] - dual[:, None], axis=0)
    return GridFunction(xs=xs.tolist(), ys=values.tolist())


def _interp(g: GridFunction, x: float) -> float:
    xs, ys = g.as_arrays()
    if not xs[0] <= x <= xs[-1]:
        raise ExtrapolationError(f"{x:g} lies outside the grid [{xs[0]:g}, {xs[-1]:g}]")
    return float(np.interp(x, xs, ys))


def ensembles_gap(e: GridFunction, rho: float, mu_grid: Optional[Sequence[float]] = None) -> float:
    """e(rho) - sup_mu [mu rho - e*(mu)]; zero for convex e, the envelope deficit otherwise."""
    value = _interp(e, rho)
    xs, _ = e.as_arrays()
    if xs.size == 1:
        return 0.0
    mu, dual = _bounded_dual(e, mu_grid)
    return value - float(np.max(mu * rho - dual))


def free_energy(e: GridFunction, mu: float) -> Tuple[float, float]:
    """f(mu) = inf_rho [e(rho) - mu rho] and the minimising density."""
    lt = legendre_transform(e, [mu])
    if lt.unbounded[0]:
        logger.warning(f"Free energy at mu={mu:g} is -inf on the extended grid")
    return -lt.dual.ys[0], lt.argmax[0]


def conjugate_records(lt: LegendreTransform) -> List[Dict[str, float]]:
    """JSON rows {mu, value, argmax_rho} (unbounded entries carry value None)."""
    return [{"mu": mu, "value": None if flag else value, "argmax_rho": rho}
            for mu, value, rho, flag in zip(lt.dual.xs, lt.dual.ys, lt.argmax, lt.unbounded)]


def simple_lower(eps: float, R: float, N: int, L: float, V0_at_0: float, n: int) -> DensityLowerBound:
    """E0(N, L) >= C eps R^n N^2 / L^n - N V(0)/2 with C = v_n 4^{-n} / 2.

    Valid when V >= eps on the ball of radius 2R.
    """
    if 2 * R >= L:
        raise GeometryError(f"need 2R < L, got R={R:g}, L={L:g}")
    if eps < 0 or R <= 0 or N < 0:
        raise DomainError("need eps >= 0, R > 0 and N >= 0")
    constant = ball_volume(n) * 4.0 ** (-n) / 2.0
    value = constant * eps * R ** n * N ** 2 / L ** n - N * V0_at_0 / 2.0
    return DensityLowerBound(value=value, constant=constant, vacuous=N <= 1)


def duplicate_scaling(e_handle: GridFunction, rho: float, L: float, R: float, n: int) -> float:
    """(1 + R/L)^n e(rho (1 + R/L)^{-n}), the comparator for boxes separated by corridors of width R."""
    if R < 0 or L <= 0:
        raise DomainError(f"need R >= 0 and L > 0, got R={R:g}, L={L:g}")
    factor = (1.0 + R / L) ** n
    return factor * _interp(e_handle, rho / factor)


def trivial_upper(V_hat0: float, rho: float) -> float:
    """Constant trial function: e(rho) <= V_hat_0 rho / 2."""
    return V_hat0 * rho / 2.0


def model_lower(C1: float, C2: float, xs: Sequence[float]) -> GridFunction:
    """C1 rho^2 - C2 rho sampled on xs."""
    xs = np.asarray(xs, dtype=float)
    return GridFunction(xs=xs.tolist(), ys=(C1 * xs ** 2 - C2 * xs).tolist())


def load_grid_function(path: str) -> GridFunction:
    try:
        data = np.loadtxt(path, ndmin=2)
    except OSError as e:
        logger.error(f"Error reading grid function {path}: {e}")
        raise
    return GridFunction(xs=data[:, 0].tolist(), ys=data[:, 1].tolist())


def save_grid_function(g: GridFunction, path: str) -> None:
    try:
        np.savetxt(path, np.column_stack(g.as_arrays()), fmt="%.17g")
    except OSError as e:
        logger.error(f"Error writing grid function {path}: {e}")
        raise
