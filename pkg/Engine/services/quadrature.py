"""
Quadrature helpers shared by the transform and bound services.

Radial reduction of n-dimensional Fourier integrals, composite Gauss rules on
linear and logarithmic panels, and a checked wrapper around scipy's adaptive
quad that turns non-convergence into a ToleranceError.
"""

import logging
import warnings
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import special
from scipy.integrate import IntegrationWarning, quad

from core.config import config
from core.exceptions import ToleranceError

logger = logging.getLogger(__name__)

_SERIES_SWITCH = 1e-3


def sphere_area(n: int) -> float:
    """|S^{n-1}|, the area of the unit sphere in R^n."""
    return float(2.0 * np.pi ** (n / 2) / special.gamma(n / 2))


def ball_volume(n: int) -> float:
    """v_n, the volume of the unit ball in R^n."""
    return float(np.pi ** (n / 2) / special.gamma(n / 2 + 1))


def s_n(n: int) -> float:
    """(n - 2)|S^{n-1}|, the coefficient of a^{n-2} rho in the leading energy."""
    return (n - 2) * sphere_area(n)


def radial_kernel(n: int, x) -> np.ndarray:
    """Angular average of e^{-i p.x} over the sphere, as a function of x = |p||x|.

    Equals Gamma(n/2) (2/x)^{n/2-1} J_{n/2-1}(x), normalised so the value at
    x = 0 is 1. Small arguments use the even power series.
    """
    x = np.abs(np.asarray(x, dtype=float))
    nu = n / 2.0 - 1.0
    out = np.empty_like(x)
    small = x < _SERIES_SWITCH
    xs = x[small]
    out[small] = 1.0 - xs ** 2 / (2.0 * n) + xs ** 4 / (8.0 * n * (n + 2))
    xl = x[~small]
    out[~small] = special.gamma(n / 2.0) * (2.0 / xl) ** nu * special.jv(nu, xl)
    return out


def gauss_panels(edges: Sequence[float], order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panel edges."""
    t, w = special.roots_legendre(order)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (t[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def momentum_nodes(scale: float, p_hi: float,
                   panels_per_decade: Optional[int] = None,
                   order: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes for a semi-infinite momentum integral truncated at p_hi.

    A linear Gauss block covers [0, scale/10]; logarithmically spaced panels
    cover [scale/10, p_hi].
    """
    per_decade = panels_per_decade or config.LOG_PANELS_PER_DECADE
    order = order or config.LOG_PANEL_ORDER
    lo = 0.1 * scale
    if p_hi <= lo:
        return gauss_panels([0.0, p_hi], 2 * order)
    head_nodes, head_weights = gauss_panels([0.0, lo], 2 * order)
    decades = np.log10(p_hi / lo)
    panels = max(1, int(np.ceil(decades * per_decade)))
    tail_nodes, tail_weights = gauss_panels(np.geomspace(lo, p_hi, panels + 1), order)
    return np.concatenate([head_nodes, tail_nodes]), np.concatenate([head_weights, tail_weights])


def angular_rule(n: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss rule in x = cos(theta) for the weight (1 - x^2)^{(n-3)/2}.

    int_0^pi F(cos theta) sin^{n-2}(theta) d theta = sum_i w_i F(x_i).
    """
    x, w = special.roots_gegenbauer(order, (n - 2) / 2.0)
    return x, w


def checked_quad(func: Callable[[float], float], a: float, b: float, label: str,
                 points: Optional[Sequence[float]] = None,
                 epsabs: Optional[float] = None,
                 epsrel: Optional[float] = None) -> Tuple[float, float]:
    """Adaptive quadrature that raises ToleranceError instead of warning.

    Returns:
        Tuple of (value, error estimate)
    """
    epsabs = config.QUAD_EPSABS if epsabs is None else epsabs
    epsrel = config.QUAD_EPSREL if epsrel is None else epsrel
    limit = config.QUAD_LIMIT
    if points is not None:
        inside = [pt for pt in points if a < pt < b]
        points = inside or None
        if points is not None:
            limit = max(limit, 2 * len(points) + 50)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, error = quad(func, a, b, points=points, epsabs=epsabs, epsrel=epsrel, limit=limit)
    allowed = max(epsabs, epsrel * abs(value)) * config.QUAD_SLACK
    if not np.isfinite(value) or error > allowed:
        logger.error(f"Quadrature for {label} missed tolerance: error {error:.3e} > {allowed:.3e}")
        raise ToleranceError(f"quadrature for {label} did not converge", achieved=error, requested=allowed)
    return value, error
