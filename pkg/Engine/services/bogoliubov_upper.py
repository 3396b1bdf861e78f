"""
Second-order upper bound from the paired (Bogoliubov) trial state.

E(rho) = s_n a^{n-2} rho + Q + Q_tilde + Omega, with the pair amplitudes chosen
so that -e^2 + e + rho w_hat = 0 at every momentum.
"""

import logging
import math
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from core.config import config
from core.exceptions import DivergentMomentError, DomainError, RegimeError
from core.models import ExpansionCoefficients, QuasiparticleParams, ScatteringSolution, SecondOrderReport
from services.quadrature import angular_rule, checked_quad, momentum_nodes, sphere_area
from services.scattering import HatTable, hat_table

logger = logging.getLogger(__name__)

# s = |p| / sqrt(g_hat_0 rho) where the linear part of the Q integral ends
_LINEAR_SPLIT = 40.0


def phi_fn(t):
    """Phi(t) = sqrt(1+4t) + 2t^2 - 2t - 1, evaluated without cancellation.

    With sigma = sqrt(1+4t), Phi(t) = (2t/(sigma+1))^3 (sigma+3).
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < -0.25):
        raise DomainError("Phi is defined for t >= -1/4")
    sigma = np.sqrt(1.0 + 4.0 * arr)
    value = (2.0 * arr / (sigma + 1.0)) ** 3 * (sigma + 3.0)
    return float(value) if np.ndim(t) == 0 else value


def _quasi_arrays(x: np.ndarray) -> Dict[str, np.ndarray]:
    if np.any(x <= -0.25):
        worst = float(np.min(x))
        raise RegimeError(f"1 + 4 rho w_hat = {1 + 4 * worst:.3e} <= 0; use a smaller density",
                          factor="rho_w_hat")
    sigma = np.sqrt(1.0 + 4.0 * x)
    e = -2.0 * x / (sigma + 1.0)
    return {
        "e": e,
        "h": e * e / sigma,
        "s": -x / sigma,
        "m": -4.0 * x * x / (sigma + 1.0) ** 2,
        # e + rho w_hat = e^2 at the optimum
        "A": e * e,
    }


def quasiparticle(rho: float, w_hat: float, p: Optional[float] = None) -> QuasiparticleParams:
    """Optimal e, h, s and objective value m for x = rho * w_hat."""
    q = _quasi_arrays(np.array([rho * w_hat]))
    return QuasiparticleParams(x=rho * w_hat, e=float(q["e"][0]), h=float(q["h"][0]),
                               s=float(q["s"][0]), m=float(q["m"][0]), p=p)


def _scaled_x(table: HatTable, rho: float, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return rho * table.g(p) / (2.0 * p * p)


def _momentum_integral(sol: ScatteringSolution, rho: float, F: Callable[[float], float],
                       label: str) -> Tuple[float, float]:
    """int_0^inf F(p) p^{n-1} dp with p = sqrt(g_hat_0 rho) s.

    The head [0, 40] is integrated in s, the tail in ln s up to the end of
    the momentum table.
    """
    table, n = hat_table(sol), sol.n
    scale = math.sqrt(float(table.g(0.0)) * rho)
    s_top = table.p_max / scale

    head, head_err = checked_quad(lambda s: F(scale * s) * s ** (n - 1), 0.0, min(_LINEAR_SPLIT, s_top),
                                  label=f"{label} head")
    tail = tail_err = 0.0
    if s_top > _LINEAR_SPLIT:
        tail, tail_err = checked_quad(lambda t: F(scale * math.exp(t)) * math.exp(n * t),
                                      math.log(_LINEAR_SPLIT), math.log(s_top), label=f"{label} tail")
    return scale ** n * (head + tail), scale ** n * (head_err + tail_err)


def _is_free(sol: ScatteringSolution) -> bool:
    return sol.a_pow == 0.0


def _compute_Q(sol: ScatteringSolution, rho: float) -> Tuple[float, float]:
    n, table = sol.n, hat_table(sol)

    def F(p: float) -> float:
        x = float(_scaled_x(table, rho, p))
        _quasi_arrays(np.array([x]))
        return p * p * phi_fn(x)

    value, error = _momentum_integral(sol, rho, F, "Q")
    factor = sphere_area(n) / (2.0 * (2.0 * math.pi) ** n * rho)
    return factor * value, factor * error


def compute_Q(sol: ScatteringSolution, rho: float, n: int) -> float:
    """Q = (2 (2 pi)^n rho)^{-1} int p^2 Phi(rho w_hat_p) dp."""
    _check_inputs(sol, rho, n)
    if _is_free(sol):
        return 0.0
    return _compute_Q(sol, rho)[0]


def _compute_Qtilde(sol: ScatteringSolution, rho: float) -> Tuple[float, float]:
    n, table = sol.n, hat_table(sol)

    def F(p: float) -> float:
        x = float(_scaled_x(table, rho, p))
        return float(table.phi(p)) * float(_quasi_arrays(np.array([x]))["h"][0])

    value, error = _momentum_integral(sol, rho, F, "Q_tilde")
    factor = 2.0 * sphere_area(n) / (2.0 * math.pi) ** n
    return factor * value, factor * error


def compute_Qtilde(sol: ScatteringSolution, rho: float, n: int) -> float:
    """Q_tilde = 2 (2 pi)^{-n} int phi_hat_p h_p dp."""
    _check_inputs(sol, rho, n)
    if _is_free(sol):
        return 0.0
    return _compute_Qtilde(sol, rho)[0]


def h_integral(sol: ScatteringSolution, rho: float) -> float:
    """int h_p dp over R^n."""
    if _is_free(sol):
        return 0.0
    table = hat_table(sol)

    def F(p: float) -> float:
        return float(_quasi_arrays(np.array([float(_scaled_x(table, rho, p))]))["h"][0])

    value, _ = _momentum_integral(sol, rho, F, "h integral")
    return sphere_area(sol.n) * value


def _angular_matrix(table: HatTable, p: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """M_ij = sum_k w_k V_hat(|p_i - p_j|) at cos(angle) = x_k."""
    M = np.empty((p.size, p.size))
    chunk = max(1, 4_000_000 // (p.size * x.size))
    for start in range(0, p.size, chunk):
        pi = p[start:start + chunk, None, None]
        dist2 = pi ** 2 + p[None, :, None] ** 2 - 2.0 * pi * p[None, :, None] * x[None, None, :]
        M[start:start + chunk] = table.v(np.sqrt(np.maximum(dist2, 0.0))) @ w
    return M


def _compute_Omega(sol: ScatteringSolution, rho: float) -> Dict[str, float]:
    n, table = sol.n, hat_table(sol)
    scale = math.sqrt(float(table.g(0.0)) * rho)
    p, wp = momentum_nodes(scale, table.p_hi)
    q = _quasi_arrays(_scaled_x(table, rho, p))
    area = sphere_area(n)
    radial = wp * p ** (n - 1)
    wa, ws, wh = radial * q["A"], radial * q["s"], radial * q["h"]
    v_p = table.v(p)

    # separable pieces: -2 (int V s)(int h) - 2 (int V h)(int h)
    int_h = area * np.sum(wh)
    separable = -2.0 * area * np.sum(ws * v_p) * int_h - 2.0 * area * np.sum(wh * v_p) * int_h

    angular_factor = area * sphere_area(n - 1)
    prefactor = 1.0 / (2.0 * (2.0 * math.pi) ** (2 * n) * rho)

    def omega_at(order: int) -> float:
        x, w = angular_rule(n, order)
        M = _angular_matrix(table, p, x, w)
        double = angular_factor * (wa @ M @ wa + 2.0 * (ws @ M @ wh))
        return prefactor * (double + separable)

    order = config.ANGULAR_ORDER
    coarse, fine = omega_at(order // 2), omega_at(order)
    while abs(fine - coarse) > 1e-6 * abs(fine) + 1e-300 and 2 * order <= config.ANGULAR_MAX_ORDER:
        order *= 2
        coarse, fine = fine, omega_at(order)
    if abs(fine - coarse) > 1e-6 * abs(fine):
        logger.warning(f"Omega angular rule not settled at order {order}: change {abs(fine - coarse):.2e}")

    # |V_hat_{p-q}| <= V_hat_0 bounds every term by products of single integrals
    v0 = float(table.v(0.0))
    abs_a, abs_s = area * np.sum(np.abs(wa)), area * np.sum(np.abs(ws))
    bound = prefactor * v0 * (abs_a ** 2 + 4.0 * abs_s * int_h + 2.0 * int_h ** 2)
    ratio = coarse / fine if fine != 0 else 1.0
    return {"value": fine, "error": abs(fine - coarse), "ratio": ratio, "bound": bound, "order": order}


def compute_Omega(sol: ScatteringSolution, rho: float, n: int) -> float:
    """Omega, the double-integral remainder of the trial-state energy."""
    _check_inputs(sol, rho, n)
    if _is_free(sol):
        return 0.0
    return _compute_Omega(sol, rho)["value"]


# ---------------------------------------------------------------------------
# Expansion coefficients
# ---------------------------------------------------------------------------

def taylor_coefficients(max_order: int) -> Dict[int, sp.Rational]:
    """Exact b_m = Phi^{(m)}(0)/m! for 0 <= m <= max_order."""
    coeffs: Dict[int, sp.Rational] = {}
    binom = sp.Rational(1)
    for k in range(max_order + 1):
        coeffs[k] = binom * 4 ** k if k >= 3 else sp.Rational(0)
        binom = binom * (sp.Rational(1, 2) - k) / (k + 1)
    return coeffs


def lhy_coefficient() -> float:
    """128 / (15 sqrt(pi))."""
    return 128.0 / (15.0 * math.sqrt(math.pi))


def c_coefficient(sol: ScatteringSolution, m: int, b_m: Optional[sp.Rational] = None) -> float:
    """c_m = b_m / (2 (2 pi)^n) int p^2 w_hat_p^m dp; finite only for m < n/2 + 1."""
    n = sol.n
    if m >= n / 2 + 1:
        raise DivergentMomentError(f"int p^2 w_hat^{m} diverges at p = 0 in n={n}")
    if m < 3:
        raise DomainError(f"expansion coefficients start at m = 3, got {m}")
    if _is_free(sol):
        return 0.0
    b_m = taylor_coefficients(m)[m] if b_m is None else b_m
    table = hat_table(sol)
    split = 1.0 / table.r_end

    def head(p: float) -> float:
        return p ** (n + 1) * float(table.w(p)) ** m

    def tail(t: float) -> float:
        p = math.exp(t)
        return p ** (n + 2) * float(table.w(p)) ** m

    v1, _ = checked_quad(head, 0.0, split, label=f"c_{m} head")
    v2, _ = checked_quad(tail, math.log(split), math.log(table.p_max), label=f"c_{m} tail")
    return float(b_m) / (2.0 * (2.0 * math.pi) ** n) * sphere_area(n) * (v1 + v2)


def log_coefficient(n: int) -> Optional[float]:
    """Coefficient of s_n a^{n-2} rho Y^{n/2-1} |ln Y| (even n only)."""
    if n % 2:
        return None
    half = n // 2
    b = taylor_coefficients(half + 1)[half + 1]
    return float(b) * sphere_area(n) ** (half + 1) * (n - 2) ** half / (4.0 * (2.0 * math.pi) ** n)


def expansion_coefficients(sol: ScatteringSolution, n: int,
                           orders: Optional[Iterable[int]] = None) -> ExpansionCoefficients:
    """b_m, c_m for 3 <= m <= ceil(n/2) (or the requested orders), and c_log."""
    if n != sol.n:
        raise DomainError(f"solution is for n={sol.n}, not n={n}")
    if n < 4:
        raise DomainError("the expansion starts at n = 4; use the LHY form in n = 3")
    orders = list(range(3, math.ceil(n / 2) + 1)) if orders is None else list(orders)
    b = taylor_coefficients(max([n // 2 + 1, *orders]))
    c_m = {m: c_coefficient(sol, m, b[m]) for m in orders}
    return ExpansionCoefficients(n=n, b_m={m: b[m] for m in range(3, max(b) + 1)},
                                 c_m=c_m, c_log=log_coefficient(n))


def fit_log_coefficient(Ys: Sequence[float], ratios: Sequence[float], n: int = 4) -> Tuple[float, float]:
    """Least-squares fit of ratio - 1 = c Y^k |ln Y| + d Y^k with k = n/2 - 1.

    Returns:
        Tuple of (c, d)
    """
    Ys = np.asarray(Ys, dtype=float)
    power = Ys ** (n / 2 - 1)
    basis = np.column_stack([power * np.abs(np.log(Ys)), power])
    (c, d), *_ = np.linalg.lstsq(basis, np.asarray(ratios, dtype=float) - 1.0, rcond=None)
    return float(c), float(d)


def reference_energy(n: int, a: float, rho: float) -> float:
    """Leading energy with the known correction: LHY in 3D, log term in 4D."""
    Y = a ** n * rho
    leading = (n - 2) * sphere_area(n) * a ** (n - 2) * rho
    if Y == 0:
        return leading
    if n == 3:
        return leading * (1.0 + lhy_coefficient() * math.sqrt(Y))
    if n == 4:
        return leading * (1.0 + 2.0 * math.pi ** 2 * Y * abs(math.log(Y)))
    return leading


def _check_inputs(sol: ScatteringSolution, rho: float, n: int) -> None:
    if rho <= 0:
        raise DomainError(f"density must be positive, got {rho}")
    if n != sol.n:
        raise DomainError(f"solution is for n={sol.n}, not n={n}")


def second_order_upper(sol: ScatteringSolution, rho: float, n: int) -> SecondOrderReport:
    """Assemble E(rho) and compare it with the dimension's reference expansion.

    Args:
        sol: Scattering solution in dimension n
        rho: Density
        n: Dimension

    Returns:
        SecondOrderReport with the components, residual and quadrature errors
    """
    _check_inputs(sol, rho, n)
    Y = sol.a ** n * rho
    leading = sol.s_n * sol.a_pow * rho
    b_m = taylor_coefficients(max(3, n // 2 + 1))
    if _is_free(sol):
        zero = ExpansionCoefficients(n=n, b_m={m: v for m, v in b_m.items() if m >= 3})
        return SecondOrderReport(n=n, rho=rho, Y=0.0, leading=0.0, Q=0.0, Q_tilde=0.0, Omega=0.0,
                                 E_total=0.0, reference=0.0, residual=0.0, coefficients=zero)

    logger.info(f"Second-order energy at rho={rho:.3e} (Y={Y:.3e}) in n={n}")
    try:
        Q, Q_err = _compute_Q(sol, rho)
        Q_tilde, Qt_err = _compute_Qtilde(sol, rho)
        omega = _compute_Omega(sol, rho)
    except Exception as e:
        logger.error(f"Error evaluating second-order energy at rho={rho:.3e}: {e}")
        raise

    E_total = leading + Q + Q_tilde + omega["value"]
    reference = reference_energy(n, sol.a, rho)
    coefficients = (expansion_coefficients(sol, n) if n >= 4
                    else ExpansionCoefficients(n=n, b_m={m: v for m, v in b_m.items() if m >= 3}))

    log_shift = None
    if coefficients.c_log is not None:
        g0 = float(hat_table(sol).g(0.0))
        log_shift = coefficients.c_log * leading * Y ** (n / 2 - 1) * (abs(math.log(g0 * rho)) - abs(math.log(Y)))

    if abs(omega["value"]) > omega["bound"] * (1.0 + 1e-9):
        logger.warning(f"|Omega| = {abs(omega['value']):.3e} exceeds its triangle bound {omega['bound']:.3e}")

    return SecondOrderReport(n=n, rho=rho, Y=Y, leading=leading, Q=Q, Q_tilde=Q_tilde,
                             Omega=omega["value"], E_total=E_total, reference=reference,
                             residual=E_total - reference, log_shift=log_shift,
                             omega_order_ratio=omega["ratio"],
                             errors={"Q": Q_err, "Q_tilde": Qt_err, "Omega": omega["error"],
                                     "Omega_bound": omega["bound"]},
                             coefficients=coefficients)
