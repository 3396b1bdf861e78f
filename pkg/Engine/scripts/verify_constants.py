#!/usr/bin/env python3
"""
Check the closed-form constants of the bounds engine against independent evaluations.
Useful after changing the quadrature settings in .env.
"""

import math
import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import sympy as sp

from services.bogoliubov_upper import lhy_coefficient, log_coefficient, phi_fn, taylor_coefficients
from services.first_order_bounds import exponent_ansatz
from services.potentials import soft_sphere, soft_sphere_scattering_length_3d
from services.quadrature import checked_quad
from services.scattering import solve_zero_energy

LHY_LIMIT_INTEGRAL = 0.75425


def report(name: str, ok: bool, detail: str) -> bool:
    print(f"{'✅' if ok else '❌'} {name}: {detail}")
    return ok


def check_exponents():
    """alpha(3) = 1/17 and alpha(4) = 1/13 in exact arithmetic."""
    results = []
    for n, expected in ((3, sp.Rational(1, 17)), (4, sp.Rational(1, 13))):
        alpha = exponent_ansatz(n).alpha
        results.append(report(f"alpha({n})", alpha == expected, f"{alpha} (expected {expected})"))
    return all(results)


def check_taylor():
    b3 = taylor_coefficients(3)[3]
    h = 1e-5
    # central third difference; Phi is evaluated without cancellation so h can be small
    fd = (phi_fn(2 * h) - 2 * phi_fn(h) + 2 * phi_fn(-h) - phi_fn(-2 * h)) / (2 * h ** 3) / 6.0
    ok = b3 == 4 and abs(fd - 4.0) < 1e-6
    return report("b_3", ok, f"{b3} exact, finite difference {fd:.6f}")


def check_log_coefficient():
    c_log = log_coefficient(4)
    return report("c_log(4)", abs(c_log - 2 * math.pi ** 2) < 1e-12,
                  f"{c_log:.12f} vs 2 pi^2 = {2 * math.pi ** 2:.12f}")


def check_soft_sphere():
    print("\n🔗 Solving the soft-sphere scattering problem in n=3...")
    results = []
    for V0, R0 in ((1.0, 1.0), (10.0, 0.5), (0.1, 2.0)):
        try:
            sol = solve_zero_energy(soft_sphere(V0, R0), 3)
        except Exception as e:
            results.append(report(f"soft sphere V0={V0:g}, R0={R0:g}", False, f"solver failed: {e}"))
            continue
        exact = soft_sphere_scattering_length_3d(V0, R0)
        rel = abs(sol.a - exact) / exact
        results.append(report(f"soft sphere V0={V0:g}, R0={R0:g}", rel <= 1e-8,
                              f"a = {sol.a:.12f}, closed form {exact:.12f}, rel err {rel:.2e}"))
    return all(results)


def check_lhy_integral():
    """int_0^inf Phi(1/(2 s^2)) s^4 ds, the dimensionless 3D limit of Q."""
    value, error = checked_quad(lambda s: phi_fn(0.5 / (s * s)) * s ** 4, 0.0, math.inf,
                                label="LHY limit integral")
    ok = abs(value - LHY_LIMIT_INTEGRAL) < 1e-4
    report("LHY limit integral", ok, f"{value:.6f} (+/- {error:.1e}), expected {LHY_LIMIT_INTEGRAL}")
    print(f"   128/(15 sqrt(pi)) = {lhy_coefficient():.6f}")
    return ok


def main():
    print("🔍 Verifying closed-form constants")
    print("=" * 40)
    checks = [check_exponents(), check_taylor(), check_log_coefficient(),
              check_lhy_integral(), check_soft_sphere()]

    if all(checks):
        print("\n🎉 All constants verified")
        return 0
    print("\n🔧 Some checks failed; tighten QUAD_EPSREL or SCATTERING_RTOL in .env and rerun.")
    return 1


if __name__ == "__main__":
    sys.exit(main())
