"""
Zero-energy scattering solver and the momentum-space functions derived from it.

The regular solution of -u'' - (n-1)/r u' + V u / 2 = 0 is shot outward from a
small radius and matched to the exterior harmonic form A + B r^{2-n}. The
transforms g_hat (of V u), phi_hat (of V (1 - u)) and V_hat are tabulated once
per solution on a momentum grid and interpolated with cubic splines.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from core.config import config
from core.exceptions import (
    DomainError,
    InfiniteScatteringLengthError,
    NonIntegrableError,
    SingularityError,
    ToleranceError,
)
from core.models import GammaMetrics, HatValues, PotentialKind, RadialPotential, ScatteringSolution
from services.potentials import integration_radius, radial_moment, radial_values, tail_mass
from services.quadrature import checked_quad, gauss_panels, radial_kernel, s_n, sphere_area

logger = logging.getLogger(__name__)

_GRID_POINTS = 1025
_KERNEL_CHUNK = 128


def solve_zero_energy(P: RadialPotential, n: int, tol: Optional[float] = None,
                      r_max: Optional[float] = None) -> ScatteringSolution:
    """Solve the zero-energy scattering equation for P in dimension n.

    Args:
        P: Nonnegative radial potential
        n: Dimension (>= 3)
        tol: Relative ODE tolerance (defaults to config.SCATTERING_RTOL)
        r_max: Matching radius for potentials without compact support

    Returns:
        ScatteringSolution normalised so that u -> 1 at infinity
    """
    if n < 3:
        raise DomainError(f"dimension must be at least 3, got {n}")
    area, sn = sphere_area(n), s_n(n)

    if P.kind == PotentialKind.HARD_CORE:
        R0 = P.params["R0"]
        sol = ScatteringSolution(n=n, potential=P, a=R0, a_pow=R0 ** (n - 2), r_match=R0,
                                 s_n=sn, sphere_area=area,
                                 r=np.linspace(0.0, 4.0 * R0, _GRID_POINTS), u=np.zeros(1))
        sol.u = sol.u_at(sol.r)
        logger.info(f"Hard core in n={n}: a = R0 = {R0:g}")
        return sol

    if P.is_zero:
        support = P.support_radius or 1.0
        r = np.linspace(0.0, support, _GRID_POINTS)
        return ScatteringSolution(n=n, potential=P, a=0.0, a_pow=0.0, r_match=support,
                                  s_n=sn, sphere_area=area, r=r, u=np.ones_like(r))

    support = P.support_radius
    if support is not None:
        if r_max is not None and r_max < support:
            raise DomainError(f"r_max={r_max:g} lies inside the support radius {support:g}")
        r_end = support
        a_pow_error = 0.0
    else:
        r_end = r_max or integration_radius(P, n, config.DECAY_TAIL_FRACTION)
        tail = tail_mass(P, n, r_end)
        if not np.isfinite(tail):
            raise InfiniteScatteringLengthError("potential is not integrable at infinity")
        a_pow_error = tail / (2.0 * sn)

    rtol = tol or config.SCATTERING_RTOL
    eps = config.SCATTERING_START_FRACTION * min(support or r_end, 1.0)
    v0 = float(radial_values(P, 0.0))

    def rhs(r: float, y: np.ndarray) -> list:
        return [y[1], -(n - 1) / r * y[1] + 0.5 * float(radial_values(P, r)) * y[0]]

    # regular branch: u = 1 + V(0) r^2 / (4n) + O(r^3)
    y0 = [1.0 + v0 * eps ** 2 / (4.0 * n), v0 * eps / (2.0 * n)]
    logger.info(f"Solving zero-energy scattering for {P.label()} in n={n} on [{eps:.2e}, {r_end:g}]")
    result = solve_ivp(rhs, (eps, r_end), y0, method="DOP853", rtol=rtol,
                       atol=config.SCATTERING_ATOL, dense_output=True)
    if not result.success:
        logger.error(f"Error solving scattering equation: {result.message}")
        raise ToleranceError(f"scattering solver failed: {result.message}", requested=rtol)

    u_end, du_end = result.y[0, -1], result.y[1, -1]
    B = du_end * r_end ** (n - 1) / (2.0 - n)
    A = u_end - B * r_end ** (2 - n)
    if A <= 0:
        raise ToleranceError(f"exterior constant A={A:.3e} is not positive", achieved=A)
    a_pow = max(-B / A, 0.0)

    sol = ScatteringSolution(n=n, potential=P, a=a_pow ** (1.0 / (n - 2)), a_pow=a_pow,
                             a_pow_error=a_pow_error, r_match=r_end, start_radius=eps,
                             s_n=sn, sphere_area=area,
                             r=np.linspace(0.0, 2.0 * r_end, _GRID_POINTS), u=np.zeros(1))
    sol.attach_dense(result.sol, A)
    sol.u = sol.u_at(sol.r)
    logger.info(f"Scattering length a={sol.a:.10g} (a^(n-2)={a_pow:.10g}, tail error {a_pow_error:.2e})")
    return sol


class HatTable:
    """Spline tables of g_hat, phi_hat and V_hat on [0, p_max].

    Values beyond p_max are taken as zero. The hard core only carries g_hat,
    which is the transform of the surface measure 2 s_n a^{n-2} delta(|x| - R0)/|S| R0^{n-1}.
    """

    def __init__(self, sol: ScatteringSolution):
        self.n = sol.n
        self.r_end = sol.r_match
        self.p_hi = config.TABLE_MOMENTUM_CUTOFF / self.r_end
        self.p_max = 2.0 * self.p_hi
        self.p = np.concatenate([[0.0], np.geomspace(1e-6 / self.r_end, self.p_max, config.TABLE_POINTS)])

        self._phi = self._v = None
        P = sol.potential
        if P.kind == PotentialKind.HARD_CORE:
            g = 2.0 * sol.s_n * sol.a_pow * radial_kernel(sol.n, self.p * P.params["R0"])
            self._g = self._spline(g)
        elif sol.a_pow == 0.0 and P.is_zero:
            zeros = np.zeros_like(self.p)
            self._g = self._phi = self._v = self._spline(zeros)
        else:
            g, phi, v = self._transform(sol)
            self._g, self._phi, self._v = self._spline(g), self._spline(phi), self._spline(v)
        logger.debug(f"Built momentum table with {self.p.size} points up to p={self.p_max:g}")

    def _transform(self, sol: ScatteringSolution):
        P = sol.potential
        panels = max(32, int(np.ceil(self.p_max * self.r_end / np.pi)))
        edges = np.linspace(0.0, self.r_end, panels + 1)
        if P.kind == PotentialKind.TABULATED:
            edges = np.union1d(edges, [x for x in P.r_table if x < self.r_end])
        r, w = gauss_panels(edges, config.TABLE_PANEL_ORDER)
        v = radial_values(P, r)
        u = sol.u_at(r)
        base = sol.sphere_area * w * r ** (self.n - 1)
        weights = np.stack([base * v * u, base * v * (1.0 - u), base * v], axis=1)

        values = np.empty((self.p.size, 3))
        for start in range(0, self.p.size, _KERNEL_CHUNK):
            block = self.p[start:start + _KERNEL_CHUNK]
            values[start:start + _KERNEL_CHUNK] = radial_kernel(self.n, np.outer(block, r)) @ weights
        return values[:, 0], values[:, 1], values[:, 2]

    def _spline(self, values: np.ndarray) -> CubicSpline:
        return CubicSpline(self.p, values, bc_type=((1, 0.0), (2, 0.0)))

    def _eval(self, spline: Optional[CubicSpline], p, name: str) -> np.ndarray:
        if spline is None:
            raise NonIntegrableError(f"{name} is undefined for a hard core potential")
        p = np.abs(np.asarray(p, dtype=float))
        return np.where(p > self.p_max, 0.0, spline(np.minimum(p, self.p_max)))

    def g(self, p) -> np.ndarray:
        return self._eval(self._g, p, "g_hat")

    def phi(self, p) -> np.ndarray:
        return self._eval(self._phi, p, "phi_hat")

    def v(self, p) -> np.ndarray:
        return self._eval(self._v, p, "V_hat")

    def w(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if np.any(p == 0):
            raise SingularityError("w_hat is singular at p = 0")
        return self.g(p) / (2.0 * p ** 2)


def hat_table(sol: ScatteringSolution) -> HatTable:
    """Momentum table cached on the solution."""
    if sol._hat_table is None:
        sol._hat_table = HatTable(sol)
    return sol._hat_table


def hat_functions(sol: ScatteringSolution, p: float) -> HatValues:
    """g_hat_p, phi_hat_p (None for a hard core) and, for p > 0, w_hat_p = g_hat_p / (2 p^2)."""
    if p < 0:
        raise DomainError(f"momentum must be nonnegative, got {p}")
    table = hat_table(sol)
    g = float(table.g(p))
    phi = float(table.phi(p)) if sol.potential.is_integrable else None
    w = g / (2.0 * p * p) if p > 0 else None
    return HatValues(p=p, g_hat=g, phi_hat=phi, w_hat=w)


def w_hat(sol: ScatteringSolution, p: float) -> float:
    if p == 0:
        raise SingularityError("w_hat is singular at p = 0")
    return float(hat_table(sol).w(abs(p)))


def gamma_metrics(sol: ScatteringSolution) -> GammaMetrics:
    """gamma = int V |x|^{2-n} dx and gamma_tilde = phi_hat_0 / g_hat_0."""
    try:
        gamma = radial_moment(sol.potential, sol.n, 1.0)
    except NonIntegrableError as e:
        logger.error(f"Error computing gamma: {e}")
        raise
    bound = gamma / (2.0 * sol.s_n)
    table = hat_table(sol)
    g0 = float(table.g(0.0))
    if g0 == 0.0:
        return GammaMetrics(gamma=gamma, gamma_tilde=0.0, gamma_bound=bound, degenerate=True)
    gamma_tilde = float(table.phi(0.0)) / g0
    holds = gamma_tilde <= bound * (1.0 + 1e-8) + 1e-12
    if not holds:
        logger.warning(f"gamma_tilde={gamma_tilde:.6g} exceeds gamma/(2 s_n)={bound:.6g}")
    return GammaMetrics(gamma=gamma, gamma_tilde=gamma_tilde, gamma_bound=bound, bound_holds=holds)


def truncated_scattering_bound(sol: ScatteringSolution, R: float) -> float:
    """Lower estimate of a^{n-2} for V cut off to the ball of radius R."""
    if R <= 0:
        raise DomainError(f"truncation radius must be positive, got {R}")
    return max(sol.a_pow - tail_mass(sol.potential, sol.n, R) / (2.0 * sol.s_n), 0.0)


def representation_residual(sol: ScatteringSolution, radii: Iterable[float]) -> np.ndarray:
    """1 - u(r) minus the Newton-potential representation of V u, at each radius.

    The angular average of |x - y|^{2-n} is max(|x|, |y|)^{2-n}, so the
    n-dimensional integral reduces to one radial quadrature.
    """
    P, n = sol.potential, sol.n
    if not P.is_integrable:
        raise NonIntegrableError("representation identity needs an integrable potential")
    r_end = integration_radius(P, n, config.FOURIER_TAIL_FRACTION)
    points = list(P.r_table) if P.kind == PotentialKind.TABULATED else []

    residuals = []
    for r in radii:
        def integrand(s: float, r=r) -> float:
            return float(radial_values(P, s) * sol.u_at(s)) * s ** (n - 1) * max(r, s) ** (2 - n)

        value, _ = checked_quad(integrand, 0.0, r_end, label=f"representation at r={r:g}",
                                points=points + [r])
        residuals.append(1.0 - float(sol.u_at(r)) - value / (2.0 * (n - 2)))
    return np.asarray(residuals)


def scattering_record(sol: ScatteringSolution) -> Dict[str, float]:
    """JSON-ready summary {n, a, a_pow, g_hat_0, gamma, gamma_tilde}."""
    record = {"n": sol.n, "a": sol.a, "a_pow": sol.a_pow,
              "g_hat_0": float(hat_table(sol).g(0.0)), "gamma": None, "gamma_tilde": None}
    if sol.potential.is_integrable:
        metrics = gamma_metrics(sol)
        record.update(gamma=metrics.gamma, gamma_tilde=metrics.gamma_tilde)
    return record


def export_grid(sol: ScatteringSolution, path: str, record_path: Optional[str] = None) -> None:
    """Write (r, u(r)) as two-column text, and optionally the JSON record."""
    try:
        np.savetxt(path, np.column_stack([sol.r, sol.u]), fmt="%.17g", header="r u")
        if record_path:
            Path(record_path).write_text(json.dumps(scattering_record(sol), indent=2, sort_keys=True))
    except OSError as e:
        logger.error(f"Error exporting scattering grid: {e}")
        raise
