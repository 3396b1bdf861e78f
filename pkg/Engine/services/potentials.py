"""
Nonnegative radial potentials and their n-dimensional radial Fourier transforms.
"""

import logging
from typing import Dict, Union

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from core.config import config
from core.exceptions import DomainError, NonIntegrableError
from core.models import FourierValue, PotentialKind, RadialPotential
from services.quadrature import checked_quad, radial_kernel, sphere_area

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def hard_core(R0: float) -> RadialPotential:
    return RadialPotential(kind=PotentialKind.HARD_CORE, params={"R0": R0})


def soft_sphere(V0: float, R0: float) -> RadialPotential:
    return RadialPotential(kind=PotentialKind.SOFT_SPHERE, params={"V0": V0, "R0": R0})


def gaussian(V0: float = 1.0, w: float = 1.0) -> RadialPotential:
    return RadialPotential(kind=PotentialKind.GAUSSIAN, params={"V0": V0, "w": w})


def tabulated(r, v, source: str = "inline") -> RadialPotential:
    return RadialPotential(kind=PotentialKind.TABULATED,
                           r_table=[float(x) for x in r],
                           v_table=[float(x) for x in v],
                           source=source)


def load_tabulated(path: str) -> RadialPotential:
    """Load a two-column text file (r, V(r))."""
    try:
        data = np.loadtxt(path, ndmin=2)
    except OSError as e:
        logger.error(f"Error reading tabulated potential {path}: {e}")
        raise
    if data.shape[1] != 2:
        raise DomainError(f"tabulated potential {path} must have two columns, got {data.shape[1]}")
    return tabulated(data[:, 0], data[:, 1], source=str(path))


# Registry of potential kinds accepted by the CLI spec strings
POTENTIAL_BUILDERS = {
    "hard_core": lambda kw: hard_core(kw["R0"]),
    "soft_sphere": lambda kw: soft_sphere(kw["V0"], kw["R0"]),
    "gaussian": lambda kw: gaussian(kw.get("V0", 1.0), kw.get("w", 1.0)),
}


def parse_potential(spec: str) -> RadialPotential:
    """Parse `kind:key=value,...` (or `tabulated:path=...`) into a RadialPotential."""
    kind, _, body = spec.strip().partition(":")
    kind = kind.strip()
    fields: Dict[str, str] = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"malformed potential parameter '{item}' in '{spec}'")
        fields[key.strip()] = value.strip()

    if kind == "tabulated":
        if "path" not in fields:
            raise DomainError("tabulated potential needs path=...")
        return load_tabulated(fields["path"])
    if kind not in POTENTIAL_BUILDERS:
        available = ", ".join(sorted([*POTENTIAL_BUILDERS, "tabulated"]))
        raise DomainError(f"Unknown potential '{kind}'. Available: {available}")
    try:
        values = {key: float(value) for key, value in fields.items()}
        return POTENTIAL_BUILDERS[kind](values)
    except KeyError as e:
        raise DomainError(f"potential '{kind}' is missing parameter {e}") from e
    except ValueError as e:
        raise DomainError(f"invalid potential '{spec}': {e}") from e


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _tabulated_interpolator(P: RadialPotential) -> PchipInterpolator:
    if P._interpolator is None:
        P._interpolator = PchipInterpolator(np.asarray(P.r_table), np.asarray(P.v_table), extrapolate=False)
    return P._interpolator


def radial_values(P: RadialPotential, r: ArrayLike) -> np.ndarray:
    """V(r) on an array of radii (no domain checks)."""
    r = np.asarray(r, dtype=float)
    kind = P.kind
    if kind == PotentialKind.HARD_CORE:
        return np.where(r < P.params["R0"], np.inf, 0.0)
    if kind == PotentialKind.SOFT_SPHERE:
        return np.where(r < P.params["R0"], P.params["V0"], 0.0)
    if kind == PotentialKind.GAUSSIAN:
        return P.params["V0"] * np.exp(-(r / P.params["w"]) ** 2)

    table_r = P.r_table
    values = _tabulated_interpolator(P)(np.clip(r, table_r[0], None))
    values = np.where(r > table_r[-1], 0.0, values)
    # monotone cubic cannot overshoot below the data, the clamp guards rounding
    return np.maximum(np.nan_to_num(values, nan=0.0), 0.0)


def eval_radial(P: RadialPotential, r: float) -> float:
    """V(r) for r >= 0."""
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    return float(radial_values(P, r))


def integration_radius(P: RadialPotential, n: int, tail_fraction: float) -> float:
    """Radius containing all but `tail_fraction` of int V(x) dx."""
    support = P.support_radius
    if support is not None:
        return support
    # gaussian: tail mass fraction is the regularised upper incomplete gamma
    w = P.params["w"]
    return float(w * np.sqrt(special.gammainccinv(n / 2.0, tail_fraction)))


def tail_mass(P: RadialPotential, n: int, R: float) -> float:
    """int_{|x| >= R} V(x) dx."""
    if P.kind == PotentialKind.HARD_CORE:
        if R < P.params["R0"]:
            raise NonIntegrableError("hard core is not integrable")
        return 0.0
    if P.kind == PotentialKind.GAUSSIAN:
        V0, w = P.params["V0"], P.params["w"]
        total = V0 * np.pi ** (n / 2.0) * w ** n
        return float(total * special.gammaincc(n / 2.0, (R / w) ** 2))
    support = P.support_radius
    if R >= support:
        return 0.0
    return radial_moment(P, n, n - 1, r_from=R)


def radial_moment(P: RadialPotential, n: int, power: float, r_from: float = 0.0) -> float:
    """|S^{n-1}| int_{r_from}^inf V(r) r^power dr."""
    if not P.is_integrable:
        raise NonIntegrableError("hard core potential is not integrable")
    if P.is_zero:
        return 0.0
    R = integration_radius(P, n, config.FOURIER_TAIL_FRACTION)
    if r_from >= R:
        return 0.0
    points = P.r_table if P.kind == PotentialKind.TABULATED else None
    value, _ = checked_quad(lambda r: float(radial_values(P, r)) * r ** power, r_from, R,
                            label=f"moment r^{power} of {P.kind.value}", points=points)
    return sphere_area(n) * value


def fourier_radial(P: RadialPotential, p: float, n: int) -> FourierValue:
    """V_hat_p through the one-dimensional radial reduction.

    V_hat_p = |S^{n-1}| int_0^R V(r) K_n(p r) r^{n-1} dr, with K_n the
    normalised Bessel kernel and R the support (or tail cutoff) radius.
    """
    if n < 3:
        raise DomainError(f"dimension must be at least 3, got {n}")
    if p < 0:
        raise DomainError(f"momentum must be nonnegative, got {p}")
    if not P.is_integrable:
        raise NonIntegrableError("hard core potential has no Fourier transform")
    if P.is_zero:
        return FourierValue(p=p, n=n, value=0.0)

    R = integration_radius(P, n, config.FOURIER_TAIL_FRACTION)
    points = P.r_table if P.kind == PotentialKind.TABULATED else None

    def integrand(r: float) -> float:
        return float(radial_values(P, r) * radial_kernel(n, np.array([p * r]))[0]) * r ** (n - 1)

    value, error = checked_quad(integrand, 0.0, R, label=f"Fourier transform at p={p:g}", points=points)
    area = sphere_area(n)
    truncation = tail_mass(P, n, R) if P.support_radius is None else 0.0
    return FourierValue(p=p, n=n, value=area * value, error=area * error + truncation)


# ---------------------------------------------------------------------------
# Closed-form comparators
# ---------------------------------------------------------------------------

def soft_sphere_scattering_length_3d(V0: float, R0: float) -> float:
    """a = R0 - tanh(kappa R0)/kappa with kappa = sqrt(V0/2)."""
    if V0 == 0:
        return 0.0
    kappa = np.sqrt(V0 / 2.0)
    return float(R0 - np.tanh(kappa * R0) / kappa)


def soft_sphere_fourier_3d(V0: float, R0: float, p: float) -> float:
    if p == 0:
        return float(4.0 * np.pi * V0 * R0 ** 3 / 3.0)
    x = p * R0
    return float(4.0 * np.pi * V0 * (np.sin(x) - x * np.cos(x)) / p ** 3)


def gaussian_fourier(V0: float, w: float, n: int, p: float) -> float:
    return float(V0 * np.pi ** (n / 2.0) * w ** n * np.exp(-(p * w) ** 2 / 4.0))
