"""Shared fixtures for the bounds engine tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.models import ModeSet
from services.potentials import gaussian, soft_sphere
from services.scattering import solve_zero_energy


@pytest.fixture(scope="session")
def soft_sphere_solutions():
    """Soft sphere V0 = 1, R0 = 1 solved in n = 3, 4, 5."""
    return {n: solve_zero_energy(soft_sphere(1.0, 1.0), n) for n in (3, 4, 5)}


@pytest.fixture(scope="session")
def soft3(soft_sphere_solutions):
    return soft_sphere_solutions[3]


@pytest.fixture(scope="session")
def soft4(soft_sphere_solutions):
    return soft_sphere_solutions[4]


@pytest.fixture(scope="session")
def gaussian3():
    return solve_zero_energy(gaussian(1.0, 1.0), 3)


@pytest.fixture(scope="session")
def zero_solution():
    return solve_zero_energy(soft_sphere(0.0, 1.0), 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def one_pair_modes():
    return ModeSet(modes=[(0, 0, 0), (1, 0, 0), (-1, 0, 0)], L=2.0)


@pytest.fixture
def two_pair_modes():
    return ModeSet(modes=[(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)], L=2.0)


@pytest.fixture
def three_pair_modes():
    return ModeSet(modes=[(0,), (1,), (-1,), (2,), (-2,), (3,), (-3,)], L=3.0)
