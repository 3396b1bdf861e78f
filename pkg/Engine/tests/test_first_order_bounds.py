"""Tests for the first-order upper and lower bounds."""

import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import trapezoid
from scipy.optimize import linprog

from core.exceptions import (
    DensityTooHighError,
    DomainError,
    GeometryError,
    HypothesisError,
    InfeasibleError,
    RegimeError,
    TempleGapError,
)
from core.models import GridFunction, TempleParams
from services.first_order_bounds import (
    box_potential,
    cell_envelope,
    dyson_integrals,
    dyson_lemma_gap,
    dyson_upper,
    exponent_ansatz,
    lower_regime_threshold,
    ly_lower,
    superadditive_chain_holds,
    temple_block,
)
from services.potentials import hard_core, soft_sphere
from services.quadrature import sphere_area
from services.scattering import solve_zero_energy


def rho_for(sol, Y):
    return Y / sol.a ** sol.n


# ---------------------------------------------------------------------------
# Upper bound
# ---------------------------------------------------------------------------

def test_free_gas_upper_bound_vanishes(zero_solution):
    for rho in (1e-6, 1e-2, 1.0):
        assert dyson_upper(zero_solution, rho).value == 0.0


def test_upper_ratio_at_small_Y():
    sol = solve_zero_energy(soft_sphere(2.0, 1.0), 3)
    rho = rho_for(sol, 1e-6)
    upper = dyson_upper(sol, rho)
    ratio = upper.value / (4 * math.pi * sol.a * rho)
    assert 1.0 < ratio < 1.1
    assert not upper.near_divergence


@pytest.mark.parametrize("n", [3, 4, 5])
def test_dyson_integrals_invariants(soft_sphere_solutions, n):
    sol = soft_sphere_solutions[n]
    integrals = dyson_integrals(sol, rho_for(sol, 1e-6))
    assert integrals.I >= 0 and integrals.K >= 0
    assert integrals.J >= sol.s_n * sol.a_pow
    assert integrals.b == pytest.approx((sphere_area(n) * rho_for(sol, 1e-6)) ** (-1.0 / n))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_quadrature_below_closed_form(soft_sphere_solutions, n):
    sol = soft_sphere_solutions[n]
    for Y in (1e-4, 1e-6, 1e-8):
        rho = rho_for(sol, Y)
        quad = dyson_upper(sol, rho, mode="quadrature").value
        closed = dyson_upper(sol, rho, mode="closed_form").value
        assert sol.s_n * sol.a_pow * rho <= quad <= closed


def test_closed_form_divergence_flag(soft3):
    area = sphere_area(3)
    # Ytilde^beta = 0.6 with beta = 1/3
    rho = rho_for(soft3, 0.6 ** 3 / area)
    upper = dyson_upper(soft3, rho, mode="closed_form")
    assert math.isfinite(upper.value)
    assert upper.near_divergence
    with pytest.raises(RegimeError):
        dyson_upper(soft3, rho_for(soft3, 1.5 / area), mode="closed_form")


def test_density_too_high_inside_hard_core():
    sol = solve_zero_energy(hard_core(1.0), 3)
    # b = (4 pi rho)^(-1/3) < R0
    with pytest.raises(DensityTooHighError):
        dyson_upper(sol, 1.0)


def test_upper_rejects_bad_arguments(soft3):
    with pytest.raises(DomainError):
        dyson_upper(soft3, -1.0)
    with pytest.raises(DomainError):
        dyson_upper(soft3, 1e-6, mode="exact")


# ---------------------------------------------------------------------------
# Exponents and Temple estimate
# ---------------------------------------------------------------------------

def test_exponent_ansatz_values():
    assert exponent_ansatz(3).alpha == sp.Rational(1, 17)
    assert exponent_ansatz(4).alpha == sp.Rational(1, 13)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_exponent_ansatz_relations(n):
    ansatz = exponent_ansatz(n)
    assert ansatz.alpha == sp.Rational(n - 2, n * (n + 2) + 2)
    assert ansatz.gamma_exp / n == ansatz.alpha
    assert n * ansatz.beta - 1 == ansatz.alpha


def temple_params_at(Y, a=0.238, R0=1.0, N=16, n=3):
    ansatz = exponent_ansatz(n)
    l = 40 * a * Y ** (-float(ansatz.beta))
    R = (R0 ** n + Y ** float(ansatz.gamma_exp) * l ** n) ** (1.0 / n)
    return TempleParams(N=N, l=l, eps=Y ** float(ansatz.alpha), R=R, R0=R0, a_pow=a)


def test_temple_block_regression():
    block = temple_block(temple_params_at(1e-8), 3)
    assert block.G > 0
    assert block.K_val > 0


def test_temple_block_errors():
    tp = temple_params_at(1e-8)
    with pytest.raises(GeometryError):
        temple_block(tp.model_copy(update={"R": tp.l / 2}), 3)
    with pytest.raises(GeometryError):
        temple_block(tp.model_copy(update={"R0": tp.R}), 3)
    with pytest.raises(TempleGapError):
        temple_block(tp.model_copy(update={"N": 10 ** 6}), 3)


def test_temple_K_vanishes_as_eps_approaches_one():
    tp = temple_params_at(1e-8)
    near_one = temple_block(tp.model_copy(update={"eps": 1.0 - 1e-12}), 3)
    assert abs(near_one.K_val) < 1e-10 * temple_block(tp, 3).K_val


# ---------------------------------------------------------------------------
# Lower bound
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5])
def test_lower_bound_approaches_leading_from_below(soft_sphere_solutions, n):
    sol = soft_sphere_solutions[n]
    threshold = lower_regime_threshold(sol.a_pow, 1.0, n)
    assert threshold > 0
    ratios = []
    for Y in (threshold, threshold * 1e-4, threshold * 1e-8, threshold * 1e-12):
        result = ly_lower(sol.a_pow, 1.0, rho_for(sol, Y), n)
        assert 0.0 < result.value < result.leading
        assert result.direct >= result.value * (1.0 - 1e-12)
        ratios.append(result.ratio)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sandwich(soft_sphere_solutions, n):
    sol = soft_sphere_solutions[n]
    threshold = lower_regime_threshold(sol.a_pow, 1.0, n)
    upper_ratios = []
    for Y in (threshold, threshold * 1e-4, threshold * 1e-8):
        rho = rho_for(sol, Y)
        leading = sol.s_n * sol.a_pow * rho
        lower = ly_lower(sol.a_pow, 1.0, rho, n).value
        quad = dyson_upper(sol, rho).value
        closed = dyson_upper(sol, rho, mode="closed_form").value
        assert lower <= leading <= quad <= closed
        upper_ratios.append(quad / leading)
    assert all(b <= a for a, b in zip(upper_ratios, upper_ratios[1:]))


def test_lower_bound_outside_regime(soft3):
    with pytest.raises(RegimeError) as info:
        ly_lower(soft3.a_pow, 1.0, rho_for(soft3, 1e-4), 3)
    assert info.value.factor


def test_lower_bound_certified_constant(soft3):
    threshold = lower_regime_threshold(soft3.a_pow, 1.0, 3)
    result = ly_lower(soft3.a_pow, 1.0, rho_for(soft3, threshold * 1e-6), 3)
    expected = result.leading * (1.0 - result.certified_constant * result.Y ** (1.0 / 17))
    assert result.value == pytest.approx(expected, rel=1e-10)
    assert result.cell_particles == math.floor(4 * result.cell_density)


def test_lower_bound_free_gas():
    assert ly_lower(0.0, 1.0, 1e-3, 3).value == 0.0


# ---------------------------------------------------------------------------
# Cell decomposition
# ---------------------------------------------------------------------------

def test_cell_envelope_convex_example():
    result = cell_envelope([0, 0, 1, 3, 6], 1.5)
    assert result.value == pytest.approx(0.5)
    assert result.weights == pytest.approx({1: 0.5, 2: 0.5})


def test_cell_envelope_mixes_distant_indices():
    result = cell_envelope([0, 10, 11, 12], 1)
    assert result.value == pytest.approx(4.0)
    assert set(result.weights) == {0, 3}


def test_cell_envelope_touches_convex_function_at_integers():
    E = [m * (m - 1) for m in range(9)]
    for k in range(9):
        assert cell_envelope(E, k).value == E[k]


def test_cell_envelope_errors():
    with pytest.raises(InfeasibleError):
        cell_envelope([0, 1, 2], 2.5)
    with pytest.raises(InfeasibleError):
        cell_envelope([0, 1, 2], -0.1)
    with pytest.raises(HypothesisError):
        cell_envelope([1, 1, 2], 1.0)


def test_cell_envelope_matches_linear_program(rng):
    for _ in range(100):
        N = int(rng.integers(1, 13))
        E = np.concatenate([[0.0], rng.normal(size=N) * 5 + np.arange(1, N + 1) ** 1.5])
        k = float(rng.uniform(0, N))
        A_eq = np.vstack([np.ones(N + 1), np.arange(N + 1)])
        lp = linprog(E, A_eq=A_eq, b_eq=[1.0, k], bounds=[(0, None)] * (N + 1), method="highs")
        result = cell_envelope(E, k)
        assert result.value == pytest.approx(lp.fun, rel=1e-6, abs=1e-6)
        assert len(result.weights) <= 2
        assert min(E) - 1e-12 <= result.value <= max(E[math.ceil(k)], 0.0) + 1e-12


def test_superadditive_chain():
    E = [m * (m - 1) for m in range(51)]
    assert all(superadditive_chain_holds(E, p) for p in range(1, 51))
    assert not superadditive_chain_holds([0, 0, 10, 1], 2)
    with pytest.raises(DomainError):
        superadditive_chain_holds(E, 0)


# ---------------------------------------------------------------------------
# Dyson's lemma
# ---------------------------------------------------------------------------

def test_box_potential_normalisation():
    U = box_potential(1.0, 2.0, 3)
    r = np.linspace(0, 3, 300001)
    mass = trapezoid(U.values(r) * r ** 2, r)
    assert mass == pytest.approx(1.0, rel=1e-4)
    with pytest.raises(GeometryError):
        box_potential(2.0, 1.0, 3)


def test_dyson_lemma_gap_cases(soft3):
    V = soft_sphere(1.0, 1.0)
    U = box_potential(1.0, 2.0, 3)
    zero = GridFunction(xs=soft3.r.tolist(), ys=[0.0] * soft3.r.size)
    assert dyson_lemma_gap(zero, U, V, soft3, 3, 2.0) == pytest.approx(0.0, abs=1e-14)

    f = GridFunction(xs=soft3.r.tolist(), ys=soft3.u.tolist())
    assert dyson_lemma_gap(f, U, V, soft3, 3, 2.0) >= -1e-10
    assert dyson_lemma_gap(f, lambda r: np.zeros_like(r), V, soft3, 3, 2.0) > 0


def test_dyson_lemma_gap_random_trial_functions(soft3, rng):
    V = soft_sphere(1.0, 1.0)
    U = box_potential(1.0, 1.8, 3)
    xs = np.linspace(0.0, 2.0, 41)
    for _ in range(10):
        ys = np.cumsum(rng.uniform(0, 1, xs.size)) + rng.uniform(0, 1)
        f = GridFunction(xs=xs.tolist(), ys=ys.tolist())
        assert dyson_lemma_gap(f, U, V, soft3, 3, 2.0) >= -1e-10


def test_dyson_lemma_hypotheses(soft3):
    V = soft_sphere(1.0, 1.0)
    f = GridFunction(xs=soft3.r.tolist(), ys=soft3.u.tolist())
    heavy = box_potential(1.0, 2.0, 3).model_copy(update={"height": 1.0})
    with pytest.raises(HypothesisError):
        dyson_lemma_gap(f, heavy, V, soft3, 3, 2.0)
    inside = box_potential(0.5, 2.0, 3)
    with pytest.raises(HypothesisError):
        dyson_lemma_gap(f, inside, V, soft3, 3, 2.0)
