"""Tests for potential construction, evaluation and radial transforms."""

import math

import numpy as np
import pytest

from core.exceptions import DomainError, NonIntegrableError
from core.models import PotentialKind
from services.potentials import (
    eval_radial,
    fourier_radial,
    gaussian,
    gaussian_fourier,
    hard_core,
    load_tabulated,
    parse_potential,
    radial_moment,
    radial_values,
    soft_sphere,
    soft_sphere_fourier_3d,
    soft_sphere_scattering_length_3d,
    tabulated,
    tail_mass,
)
from services.quadrature import ball_volume, radial_kernel, sphere_area
from services.scattering import hat_table


def test_sphere_constants():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_radial_kernel_is_continuous_at_series_switch(n):
    below = radial_kernel(n, np.array([0.999e-3]))[0]
    above = radial_kernel(n, np.array([1.001e-3]))[0]
    assert below == pytest.approx(above, rel=1e-12)
    assert radial_kernel(n, np.array([0.0]))[0] == 1.0


def test_radial_kernel_3d_is_sinc():
    x = np.linspace(0.1, 30, 50)
    assert np.allclose(radial_kernel(3, x), np.sin(x) / x, rtol=1e-12, atol=1e-14)


def test_evaluation_of_builtin_potentials():
    assert eval_radial(soft_sphere(2.0, 1.0), 0.5) == 2.0
    assert eval_radial(soft_sphere(2.0, 1.0), 1.5) == 0.0
    assert math.isinf(eval_radial(hard_core(1.0), 0.5))
    assert eval_radial(hard_core(1.0), 1.0) == 0.0
    assert eval_radial(gaussian(3.0, 2.0), 2.0) == pytest.approx(3.0 * math.exp(-1.0))


def test_negative_radius_rejected():
    with pytest.raises(DomainError):
        eval_radial(soft_sphere(1.0, 1.0), -0.1)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        soft_sphere(-1.0, 1.0)
    with pytest.raises(ValueError):
        hard_core(0.0)
    with pytest.raises(ValueError):
        tabulated([0.0, 1.0, 0.5], [1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        tabulated([0.0, 1.0], [1.0, -1.0])


def test_tabulated_interpolation_stays_nonnegative():
    r = np.linspace(0.0, 2.0, 9)
    v = np.array([5.0, 4.0, 0.0, 0.0, 3.0, 0.0, 0.0, 1.0, 0.0])
    P = tabulated(r, v)
    samples = radial_values(P, np.linspace(0.0, 3.0, 400))
    assert np.all(samples >= 0.0)
    assert radial_values(P, 2.5) == 0.0
    assert P.support_radius == 2.0


def test_load_tabulated_from_file(tmp_path):
    path = tmp_path / "v.txt"
    np.savetxt(path, np.column_stack([np.linspace(0, 1, 5), np.ones(5)]))
    P = load_tabulated(str(path))
    assert P.kind == PotentialKind.TABULATED
    assert eval_radial(P, 0.3) == pytest.approx(1.0)


def test_parse_potential_strings():
    P = parse_potential("soft_sphere:V0=2,R0=0.5")
    assert P.kind == PotentialKind.SOFT_SPHERE
    assert P.params == {"V0": 2.0, "R0": 0.5}
    assert parse_potential("gaussian").params["w"] == 1.0
    assert parse_potential("hard_core:R0=1").label() == "hard_core:R0=1"


@pytest.mark.parametrize("spec", ["lennard_jones:eps=1", "soft_sphere:V0=1", "soft_sphere:V0", "tabulated:"])
def test_parse_potential_errors(spec):
    with pytest.raises(DomainError):
        parse_potential(spec)


def test_unknown_kind_lists_available():
    with pytest.raises(DomainError, match="Available: gaussian, hard_core, soft_sphere, tabulated"):
        parse_potential("morse:D=1")


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0, 4.0, 11.0])
def test_soft_sphere_fourier_matches_closed_form(p):
    value = fourier_radial(soft_sphere(1.5, 1.2), p, 3)
    exact = soft_sphere_fourier_3d(1.5, 1.2, p)
    assert value.value == pytest.approx(exact, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("p", [0.0, 0.5, 2.0])
def test_gaussian_fourier_matches_closed_form(n, p):
    value = fourier_radial(gaussian(2.0, 0.7), p, n)
    assert value.value == pytest.approx(gaussian_fourier(2.0, 0.7, n, p), rel=1e-8)
    assert value.error < 1e-8 * max(1.0, value.value)


def test_hard_core_has_no_transform():
    with pytest.raises(NonIntegrableError):
        fourier_radial(hard_core(1.0), 1.0, 3)
    with pytest.raises(NonIntegrableError):
        radial_moment(hard_core(1.0), 3, 2)


def test_moments_and_tails():
    P = soft_sphere(2.0, 1.0)
    assert radial_moment(P, 3, 2) == pytest.approx(2.0 * 4 * math.pi / 3)
    assert tail_mass(P, 3, 1.0) == 0.0
    G = gaussian(1.0, 1.0)
    assert radial_moment(G, 3, 2) == pytest.approx(math.pi ** 1.5, rel=1e-9)
    assert tail_mass(G, 3, 3.0) < tail_mass(G, 3, 2.0)


@pytest.mark.parametrize("V0,R0,expected", [(0.0, 1.0, 0.0), (1e6, 1.0, 1.0)])
def test_soft_sphere_scattering_length_limits(V0, R0, expected):
    assert soft_sphere_scattering_length_3d(V0, R0) == pytest.approx(expected, abs=2e-3)


def test_decay_class_metadata():
    assert hard_core(1.0).decay_class == "compact, not integrable"
    assert gaussian(1.0, 1.0).decay_class == "gaussian decay"
    assert tabulated([0.0, 1.0], [1.0, 0.0]).decay_class == "compact"


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("P", [soft_sphere(1.0, 1.0), gaussian(2.0, 0.7)], ids=["soft", "gaussian"])
def test_transform_bounded_and_lipschitz(P, n):
    v0 = fourier_radial(P, 0.0, n).value
    momenta = np.linspace(0.1, 30.0, 25)
    values = np.array([fourier_radial(P, p, n).value for p in momenta])
    slack = 1e-9 * v0
    assert np.all(np.abs(values) <= v0 + slack)

    first_moment = radial_moment(P, n, n)
    gaps = np.abs(values[:, None] - values[None, :])
    steps = np.abs(momenta[:, None] - momenta[None, :])
    assert np.all(gaps <= steps * first_moment + slack)
    assert abs(values[0] - v0) <= 0.1 * first_moment + slack


@pytest.mark.parametrize("n", [3, 4, 5])
def test_transform_is_even(n, soft_sphere_solutions):
    x = np.array([1e-4, 5e-4, 0.3, 2.0, 17.0])
    assert np.array_equal(radial_kernel(n, -x), radial_kernel(n, x))
    table = hat_table(soft_sphere_solutions[n])
    p = np.array([0.2, 1.5, 6.0])
    assert np.array_equal(table.v(-p), table.v(p))
