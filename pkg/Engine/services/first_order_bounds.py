"""
First-order bounds on the ground-state energy per particle.

Upper bound from the Dyson trial function truncated at b = (|S| rho)^{-1/n};
lower bound from Dyson's lemma, Temple's inequality on cells of side l and the
superadditive cell decomposition, with length scales fixed by a power-law
ansatz in Y = a^n rho.
"""

import logging
import math
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy.interpolate import PchipInterpolator

from core.config import config
from core.exceptions import (
    DensityTooHighError,
    DomainError,
    GeometryError,
    HypothesisError,
    InfeasibleError,
    RegimeError,
    TempleGapError,
)
from core.models import (
    BoxPotential,
    CellEnvelope,
    DysonIntegrals,
    DysonUpperBound,
    ExponentAnsatz,
    GridFunction,
    LowerBoundResult,
    RadialPotential,
    ScatteringSolution,
    TempleBlock,
    TempleParams,
)
from services.potentials import radial_values
from services.quadrature import ball_volume, gauss_panels, s_n, sphere_area

logger = logging.getLogger(__name__)

_INTERIOR_PANELS = 64
_INTERIOR_ORDER = 16


# ---------------------------------------------------------------------------
# Upper bound
# ---------------------------------------------------------------------------

def _power_integral(power: float, lo: float, hi: float) -> float:
    """int_lo^hi r^power dr."""
    if power == -1:
        return math.log(hi / lo)
    return (hi ** (power + 1) - lo ** (power + 1)) / (power + 1)


def dyson_integrals(sol: ScatteringSolution, rho: float) -> DysonIntegrals:
    """I, J and K for the trial function f = u/u(b) on [0, b], f = 1 beyond.

    I = int (1 - f^2), K = int f |f'|, J = int |f'|^2 + V f^2 / 2. Integration
    by parts gives J = |S| b^{n-1} u'(b) / u(b) exactly. Between the matching
    radius and b, u = 1 - A r^{2-n} and the remaining integrals are elementary.
    """
    if rho <= 0:
        raise DomainError(f"density must be positive, got {rho}")
    n, area = sol.n, sol.sphere_area
    b = (area * rho) ** (-1.0 / n)
    if sol.a_pow == 0.0:
        return DysonIntegrals(b=b, I=0.0, J=0.0, K=0.0)

    u_b = float(sol.u_at(b))
    if u_b <= 0:
        raise DensityTooHighError(f"u(b) = {u_b:.3e} vanishes at b = {b:.3e}", factor="u(b)")
    J = area * b ** (n - 1) * float(sol.du_at(b)) / u_b

    r_in = min(b, sol.r_match)
    edges = np.linspace(0.0, r_in, _INTERIOR_PANELS + 1)
    r, w = gauss_panels(edges, _INTERIOR_ORDER)
    u, du = sol.u_at(r), sol.du_at(r)
    jac = w * r ** (n - 1)
    I_val = np.sum(jac * (u_b ** 2 - u ** 2)) / u_b ** 2
    K_val = np.sum(jac * u * du) / u_b ** 2

    if b > r_in:
        A, rm = sol.a_pow, r_in
        # u_b^2 - u^2 = 2A (r^{2-n} - b^{2-n}) - A^2 (r^{4-2n} - b^{4-2n})
        outer_I = (2.0 * A * (_power_integral(1, rm, b) - b ** (2 - n) * _power_integral(n - 1, rm, b))
                   - A * A * (_power_integral(3 - n, rm, b) - b ** (4 - 2 * n) * _power_integral(n - 1, rm, b)))
        # u u' r^{n-1} = (n-2) A (1 - A r^{2-n})
        outer_K = (n - 2) * A * ((b - rm) - A * _power_integral(2 - n, rm, b))
        I_val += outer_I / u_b ** 2
        K_val += outer_K / u_b ** 2

    return DysonIntegrals(b=b, I=max(area * I_val, 0.0), J=max(J, 0.0), K=max(area * K_val, 0.0))


def dyson_upper(sol: ScatteringSolution, rho: float, mode: str = "quadrature") -> DysonUpperBound:
    """Upper bound (J rho + 2/3 (K rho)^2) / (1 - I rho)^2 or its closed-form estimate.

    Args:
        sol: Scattering solution
        rho: Density
        mode: "quadrature" (exact I, J, K) or "closed_form"

    Returns:
        DysonUpperBound with the energy per particle
    """
    if rho <= 0:
        raise DomainError(f"density must be positive, got {rho}")
    if mode not in ("quadrature", "closed_form"):
        raise DomainError(f"unknown mode '{mode}'")
    n = sol.n
    area = sphere_area(n)
    Y = sol.a ** n * rho
    beta = (n - 2) / n
    ytilde_beta = (area * Y) ** beta
    near = ytilde_beta >= config.DIVERGENCE_WARN
    if near:
        logger.warning(f"Dyson upper bound near divergence: Ytilde^beta = {ytilde_beta:.3f}")

    if sol.a_pow == 0.0:
        return DysonUpperBound(value=0.0, mode=mode, rho=rho, Y=0.0, ytilde_beta=0.0)

    leading = sol.s_n * sol.a_pow * rho
    if mode == "closed_form":
        if ytilde_beta >= 1.0:
            raise RegimeError(f"Ytilde^beta = {ytilde_beta:.4f} >= 1, closed form undefined", factor="Ytilde")
        C = 2.0 / 3.0 * (n - 1) ** 2 * area ** beta / (n - 2)
        gap = 1.0 - ytilde_beta
        value = leading * (gap ** -4 + C * Y ** beta * gap ** -2)
        return DysonUpperBound(value=value, mode=mode, rho=rho, Y=Y, ytilde_beta=ytilde_beta,
                               near_divergence=near, constant=C)

    integrals = dyson_integrals(sol, rho)
    i_rho = integrals.I * rho
    if i_rho >= 1.0:
        raise DensityTooHighError(f"I rho = {i_rho:.4f} >= 1", factor="I rho")
    value = (integrals.J * rho + 2.0 / 3.0 * (integrals.K * rho) ** 2) / (1.0 - i_rho) ** 2
    return DysonUpperBound(value=value, mode=mode, rho=rho, Y=Y, ytilde_beta=ytilde_beta,
                           near_divergence=near, integrals=integrals)


# ---------------------------------------------------------------------------
# Lower bound
# ---------------------------------------------------------------------------

def exponent_ansatz(n: int) -> ExponentAnsatz:
    """Exact exponents: alpha = (n-2)/(n(n+2)+2), n beta = 1 + alpha, gamma = n alpha."""
    if n < 3:
        raise DomainError(f"dimension must be at least 3, got {n}")
    alpha = sp.Rational(n - 2, n * (n + 2) + 2)
    beta = (1 + alpha) / n
    return ExponentAnsatz(n=n, alpha=alpha, beta=beta, gamma_exp=n * alpha,
                          r0_exponent=sp.Rational(n - 2) / (5 * alpha))


def temple_block(tp: TempleParams, n: int) -> TempleBlock:
    """G(N, l) and K(N, l) of the Temple estimate on a cell of side l."""
    if not tp.R0 < tp.R:
        raise GeometryError(f"need R0 < R, got R0={tp.R0:g}, R={tp.R:g}")
    if tp.R >= tp.l / 2:
        raise GeometryError(f"need R < l/2, got R={tp.R:g}, l={tp.l:g}")
    sn = s_n(n)
    G = tp.eps * math.pi ** 2 / tp.l ** 2 - sn * tp.a_pow * tp.N ** 2 / tp.l ** n
    if G <= 0:
        raise TempleGapError(f"Temple gap G = {G:.4e} is not positive for N={tp.N}")
    shell = tp.R ** n - tp.R0 ** n
    K_val = (sn * tp.a_pow / tp.l ** n
             * (1.0 - tp.eps)
             * (1.0 - 2.0 * tp.R / tp.l) ** n
             * (1.0 - ball_volume(n) * tp.R ** n / tp.l ** n) ** (tp.N - 2)
             * (1.0 - n * (n - 2) * tp.a_pow * tp.N / (shell * G)))
    return TempleBlock(G=G, K_val=K_val)


def _ansatz_scales(a: float, R0: float, Y: float, n: int) -> Dict[str, float]:
    ansatz = exponent_ansatz(n)
    alpha, beta, gamma_exp = float(ansatz.alpha), float(ansatz.beta), float(ansatz.gamma_exp)
    eps = Y ** alpha
    l = a * Y ** (-beta)
    R_over_l_n = Y ** gamma_exp + (R0 / a) ** n * Y ** (n * beta)
    R = l * R_over_l_n ** (1.0 / n)
    return {"alpha": alpha, "eps": eps, "l": l, "R": R, "R_over_l_n": R_over_l_n, "k": Y ** (-alpha)}


def _lower_factors(a: float, R0: float, Y: float, n: int) -> Tuple[Dict[str, float], Dict[str, float]]:
    scales = _ansatz_scales(a, R0, Y, n)
    eps, l, R, Rl = scales["eps"], scales["l"], scales["R"], scales["R_over_l_n"]
    l_a_n = (l / a) ** n
    gap = eps * math.pi ** 2 * (a / l) ** 2 - 16.0 * s_n(n) * Y ** 2 * l_a_n
    shell = R ** n - R0 ** n
    factors = {
        "epsilon": 1.0 - eps,
        "boundary": 1.0 - 2.0 * n * R / l,
        "cell_count": 1.0 - (a / l) ** n / Y,
        "excluded_volume": 1.0 - 4.0 * ball_volume(n) * Y * l_a_n * Rl,
        "temple": (1.0 - 4.0 * n * (n - 2) * l ** n * Y / (shell * gap)) if gap > 0 else -math.inf,
    }
    return factors, scales


def _regime_violation(a: float, R0: float, Y: float, n: int) -> Union[str, None]:
    factors, scales = _lower_factors(a, R0, Y, n)
    for name, value in factors.items():
        if not value > config.REGIME_MARGIN:
            return name
    if scales["k"] < 1.0:
        return "cell_particles"
    if scales["R"] >= scales["l"] / 2:
        return "geometry"
    return None


def lower_regime_threshold(a_pow: float, R0: float, n: int) -> float:
    """Largest Y below which every bracketed factor exceeds the regime margin."""
    a = a_pow ** (1.0 / (n - 2))
    r0_exponent = float(exponent_ansatz(n).r0_exponent)
    r0_limit = (a / R0) ** r0_exponent if R0 > a else 1.0
    threshold = 0.0
    for Y in np.logspace(-80, 0, 801):
        if Y > r0_limit or _regime_violation(a, R0, Y, n) is not None:
            break
        threshold = float(Y)
    return threshold


def ly_lower(a_pow: float, R0: float, rho: float, n: int) -> LowerBoundResult:
    """Lower bound on the energy per particle at density rho.

    Args:
        a_pow: a^{n-2}
        R0: Support radius of the potential
        rho: Density
        n: Dimension

    Returns:
        LowerBoundResult with the product bound, the direct cell value and
        the certified constant C in s_n a^{n-2} rho (1 - C Y^alpha)
    """
    if n < 3:
        raise DomainError(f"dimension must be at least 3, got {n}")
    if rho <= 0 or a_pow < 0 or R0 < 0:
        raise DomainError("need rho > 0, a_pow >= 0 and R0 >= 0")
    if a_pow == 0.0:
        return LowerBoundResult(value=0.0, leading=0.0, ratio=1.0, certified_constant=0.0, Y=0.0,
                                epsilon=0.0, l=math.inf, R=math.inf, cell_density=0.0,
                                cell_particles=0, factors={})

    a = a_pow ** (1.0 / (n - 2))
    Y = a ** n * rho
    r0_exponent = float(exponent_ansatz(n).r0_exponent)
    if R0 > a and Y > (a / R0) ** r0_exponent:
        raise RegimeError(f"Y = {Y:.3e} exceeds (a/R0)^{r0_exponent:.4g}", factor="core_radius")
    violation = _regime_violation(a, R0, Y, n)
    if violation is not None:
        raise RegimeError(f"Y = {Y:.3e} outside the lower-bound regime ({violation})", factor=violation)

    factors, scales = _lower_factors(a, R0, Y, n)
    leading = s_n(n) * a_pow * rho
    value = leading * math.prod(factors.values())
    ratio = value / leading

    k = scales["k"]
    p = int(math.floor(4.0 * k))
    block = temple_block(TempleParams(N=p, l=scales["l"], eps=scales["eps"], R=scales["R"],
                                      R0=R0, a_pow=a_pow), n)
    direct = (k - 1.0) * block.K_val

    logger.debug(f"Lower bound at Y={Y:.3e}: ratio {ratio:.6f}, direct ratio {direct / leading:.6f}")
    return LowerBoundResult(value=value, leading=leading, ratio=ratio,
                            certified_constant=(1.0 - ratio) / Y ** scales["alpha"], direct=direct,
                            Y=Y, epsilon=scales["eps"], l=scales["l"], R=scales["R"],
                            cell_density=k, cell_particles=p, factors=factors)


# ---------------------------------------------------------------------------
# Cell decomposition
# ---------------------------------------------------------------------------

def lower_hull_indices(xs: Sequence[float], ys: Sequence[float]) -> List[int]:
    """Vertices of the lower convex hull of (xs, ys); xs strictly increasing."""
    hull: List[int] = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (xs[i1] - xs[i0]) * (y - ys[i0]) - (ys[i1] - ys[i0]) * (x - xs[i0])
            if cross > 0:
                break
            hull.pop()
        hull.append(i)
    return hull


def cell_envelope(E: Sequence[float], k: float) -> CellEnvelope:
    """min sum c_m E(m) over c >= 0 with sum c_m = 1 and sum m c_m = k.

    Two equality constraints leave basic solutions with at most two nonzero
    weights, which sit on adjacent vertices of the lower convex envelope.
    """
    E = [float(e) for e in E]
    N = len(E) - 1
    if N < 0 or not 0 <= k <= N:
        raise InfeasibleError(f"k = {k} lies outside [0, {N}]")
    if E[0] != 0.0:
        raise HypothesisError(f"cell energies must start at E(0) = 0, got {E[0]}")

    xs = list(range(N + 1))
    hull = lower_hull_indices(xs, E)
    for lo, hi in zip(hull[:-1], hull[1:]):
        if lo <= k <= hi:
            break
    else:
        lo = hi = hull[0]
    if k == lo or lo == hi:
        return CellEnvelope(value=E[lo], weights={lo: 1.0})
    if k == hi:
        return CellEnvelope(value=E[hi], weights={hi: 1.0})
    t = (k - lo) / (hi - lo)
    return CellEnvelope(value=(1.0 - t) * E[lo] + t * E[hi], weights={lo: 1.0 - t, hi: t})


def superadditive_chain_holds(E: Sequence[float], p: int, tol: float = 1e-12) -> bool:
    """E(m) >= m/(2p) E(p) for every p <= m < len(E)."""
    if p < 1 or p >= len(E):
        raise DomainError(f"chain base p={p} outside [1, {len(E) - 1}]")
    return all(E[m] >= m / (2.0 * p) * E[p] - tol for m in range(p, len(E)))


# ---------------------------------------------------------------------------
# Dyson's lemma
# ---------------------------------------------------------------------------

def box_potential(R0: float, R: float, n: int) -> BoxPotential:
    """U = n / (R^n - R0^n) on (R0, R), normalised so int U r^{n-1} dr = 1."""
    if not 0 <= R0 < R:
        raise GeometryError(f"need 0 <= R0 < R, got R0={R0:g}, R={R:g}")
    return BoxPotential(R0=R0, R=R, height=n / (R ** n - R0 ** n))


UFunction = Union[BoxPotential, RadialPotential, Callable[[np.ndarray], np.ndarray]]


def _u_values(U: UFunction, r: np.ndarray) -> np.ndarray:
    if isinstance(U, BoxPotential):
        return U.values(r)
    if isinstance(U, RadialPotential):
        return radial_values(U, r)
    return np.asarray(U(r), dtype=float) * np.ones_like(r)


def dyson_lemma_gap(f: GridFunction, U: UFunction, V: RadialPotential, sol: ScatteringSolution,
                    n: int, r_end: float) -> float:
    """LHS - RHS of the radial Dyson inequality on [0, r_end].

    LHS = int (f'^2 + V f^2 / 2) r^{n-1}, RHS = (n-2) a^{n-2} int U f^2 r^{n-1}.
    """
    R0 = V.support_radius
    if R0 is None:
        raise HypothesisError("Dyson's lemma needs a compactly supported potential")
    xs, ys = f.as_arrays()
    if xs.size < 2 or xs[0] > 0 or xs[-1] < r_end:
        raise DomainError("f must be sampled on a grid covering [0, r_end]")

    edges = np.union1d(np.linspace(0.0, r_end, 257), xs[(xs > 0) & (xs < r_end)])
    for cut in (R0, getattr(U, "R0", None), getattr(U, "R", None)):
        if cut is not None and 0 < cut < r_end:
            edges = np.union1d(edges, [cut])
    r, w = gauss_panels(edges, 8)

    u_vals = _u_values(U, r)
    jac = w * r ** (n - 1)
    mass = float(np.sum(jac * u_vals))
    if mass > 1.0 + 1e-9:
        raise HypothesisError(f"int U r^(n-1) dr = {mass:.6g} exceeds 1")
    if np.any(u_vals[r <= R0] != 0.0):
        raise HypothesisError("U must vanish inside the potential support")

    interp = PchipInterpolator(xs, ys)
    fr, dfr = interp(r), interp.derivative()(r)
    lhs = np.sum(jac * (dfr ** 2 + 0.5 * radial_values(V, r) * fr ** 2))
    rhs = (n - 2) * sol.a_pow * np.sum(jac * u_vals * fr ** 2)
    return float(lhs - rhs)
