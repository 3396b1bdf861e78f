"""
Pydantic models for the dilute Bose gas bounds engine.
Domain records shared between the services, the reporting layer and the CLI.
"""

from enum import Enum
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

class PotentialKind(str, Enum):
    HARD_CORE = "hard_core"
    SOFT_SPHERE = "soft_sphere"
    GAUSSIAN = "gaussian"
    TABULATED = "tabulated"


class RadialPotential(BaseModel):
    """Nonnegative radial pair potential V(r).

    The potential itself is dimension agnostic; the dimension enters only
    through the transforms and the scattering problem.
    """

    kind: PotentialKind
    params: Dict[str, float] = Field(default_factory=dict)
    r_table: Optional[List[float]] = None
    v_table: Optional[List[float]] = None
    source: Optional[str] = None

    _interpolator: Any = PrivateAttr(default=None)

    @model_validator(mode="after")
    def check_params(self) -> "RadialPotential":
        p = self.params
        if self.kind == PotentialKind.HARD_CORE:
            if p.get("R0", 0.0) <= 0:
                raise ValueError("hard_core requires R0 > 0")
        elif self.kind == PotentialKind.SOFT_SPHERE:
            if p.get("R0", 0.0) <= 0 or p.get("V0", -1.0) < 0:
                raise ValueError("soft_sphere requires R0 > 0 and V0 >= 0")
        elif self.kind == PotentialKind.GAUSSIAN:
            p.setdefault("w", 1.0)
            if p.get("w", 0.0) <= 0 or p.get("V0", -1.0) < 0:
                raise ValueError("gaussian requires w > 0 and V0 >= 0")
        elif self.kind == PotentialKind.TABULATED:
            if self.r_table is None or self.v_table is None:
                raise ValueError("tabulated requires r_table and v_table")
            r = np.asarray(self.r_table, dtype=float)
            v = np.asarray(self.v_table, dtype=float)
            if r.shape != v.shape or r.size < 2:
                raise ValueError("tabulated grids must have equal length >= 2")
            if np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ValueError("tabulated radial grid must be nonnegative and strictly increasing")
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValueError("tabulated values must be finite and nonnegative")
        return self

    @property
    def support_radius(self) -> Optional[float]:
        """Radius beyond which V vanishes identically (None if unbounded)."""
        if self.kind in (PotentialKind.HARD_CORE, PotentialKind.SOFT_SPHERE):
            return float(self.params["R0"])
        if self.kind == PotentialKind.TABULATED:
            return float(self.r_table[-1])
        return None

    @property
    def decay_class(self) -> str:
        """Integrability metadata; decay rates of tabulated data are not verified."""
        if self.kind == PotentialKind.HARD_CORE:
            return "compact, not integrable"
        if self.kind == PotentialKind.GAUSSIAN:
            return "gaussian decay"
        return "compact"

    @property
    def is_integrable(self) -> bool:
        return self.kind != PotentialKind.HARD_CORE

    @property
    def is_zero(self) -> bool:
        if self.kind == PotentialKind.TABULATED:
            return not any(self.v_table)
        if self.kind == PotentialKind.HARD_CORE:
            return False
        return self.params.get("V0", 0.0) == 0.0

    def label(self) -> str:
        if self.kind == PotentialKind.TABULATED:
            return f"tabulated:path={self.source}"
        body = ",".join(f"{key}={value:g}" for key, value in self.params.items())
        return f"{self.kind.value}:{body}"


class FourierValue(BaseModel):
    """Value of V_hat_p = int e^{-ip.x} V(x) dx at one momentum magnitude."""

    p: float
    n: int
    value: float
    error: float = 0.0


# ---------------------------------------------------------------------------
# Scattering
# ---------------------------------------------------------------------------

class ScatteringSolution(BaseModel):
    """Zero-energy scattering solution u = 1 - w on a radial grid.

    Inside the matching radius u comes from the ODE dense output; beyond it
    the exact exterior form 1 - a_pow r^{2-n} is used.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(..., ge=3)
    potential: RadialPotential
    a: float = Field(..., ge=0)
    a_pow: float = Field(..., ge=0)
    a_pow_error: float = 0.0
    r_match: float = Field(..., ge=0)
    start_radius: float = 0.0
    s_n: float
    sphere_area: float
    r: np.ndarray
    u: np.ndarray

    _dense: Optional[Callable] = PrivateAttr(default=None)
    _scale: float = PrivateAttr(default=1.0)
    _hat_table: Any = PrivateAttr(default=None)

    def attach_dense(self, dense: Callable, scale: float) -> None:
        self._dense = dense
        self._scale = scale

    def u_at(self, r) -> np.ndarray:
        """u(r), vectorised."""
        shape = np.shape(r)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.a_pow == 0.0:
            return np.ones(shape)
        out = np.zeros_like(r)
        outer = r >= self.r_match
        out[outer] = 1.0 - self.a_pow * r[outer] ** (2 - self.n)
        inner = ~outer
        if self._dense is not None and np.any(inner):
            rin = np.clip(r[inner], self.start_radius, self.r_match)
            out[inner] = self._dense(rin)[0] / self._scale
        return out.reshape(shape)

    def du_at(self, r) -> np.ndarray:
        """u'(r), vectorised."""
        shape = np.shape(r)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        if self.a_pow == 0.0:
            return out.reshape(shape)
        outer = r >= self.r_match
        out[outer] = (self.n - 2) * self.a_pow * r[outer] ** (1 - self.n)
        inner = ~outer
        if self._dense is not None and np.any(inner):
            rin = np.clip(r[inner], self.start_radius, self.r_match)
            slope = self._dense(rin)[1] / self._scale
            # regular branch: u' is linear in r below the start radius
            below = r[inner] < self.start_radius
            out[inner] = np.where(below, slope * r[inner] / self.start_radius, slope)
        return out.reshape(shape)


class HatValues(BaseModel):
    """Transforms at one momentum; phi_hat is None for a hard core."""

    p: float
    g_hat: float
    phi_hat: Optional[float] = None
    w_hat: Optional[float] = None


class GammaMetrics(BaseModel):
    gamma: float
    gamma_tilde: float
    gamma_bound: float
    degenerate: bool = False
    bound_holds: bool = True


# ---------------------------------------------------------------------------
# First-order bounds
# ---------------------------------------------------------------------------

class DysonIntegrals(BaseModel):
    b: float
    I: float = Field(..., ge=0)
    J: float = Field(..., ge=0)
    K: float = Field(..., ge=0)


class DysonUpperBound(BaseModel):
    value: float
    mode: Literal["quadrature", "closed_form"]
    rho: float
    Y: float
    ytilde_beta: float
    near_divergence: bool = False
    integrals: Optional[DysonIntegrals] = None
    constant: Optional[float] = None


class TempleParams(BaseModel):
    N: int = Field(..., ge=0)
    l: float = Field(..., gt=0)
    eps: float = Field(..., gt=0, lt=1)
    R: float = Field(..., gt=0)
    R0: float = Field(..., ge=0)
    a_pow: float = Field(..., ge=0)


class TempleBlock(BaseModel):
    G: float
    K_val: float


class ExponentAnsatz(BaseModel):
    """Exact rational exponents of the lower-bound ansatz."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    alpha: Any
    beta: Any
    gamma_exp: Any
    r0_exponent: Any


class LowerBoundResult(BaseModel):
    value: float
    leading: float
    ratio: float
    certified_constant: float
    direct: Optional[float] = None
    Y: float
    epsilon: float
    l: float
    R: float
    cell_density: float
    cell_particles: int
    factors: Dict[str, float]


class BoxPotential(BaseModel):
    """Radial step U = height on (R0, R), zero elsewhere."""

    R0: float = Field(..., ge=0)
    R: float = Field(..., gt=0)
    height: float = Field(..., ge=0)

    def values(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where((r > self.R0) & (r < self.R), self.height, 0.0)


class CellEnvelope(BaseModel):
    value: float
    weights: Dict[int, float]


class BoundReport(BaseModel):
    """One row of a density scan."""

    n: int
    rho: float
    Y: float
    leading: float
    lower: Optional[float] = None
    upper_first: Optional[float] = None
    Q: Optional[float] = None
    Q_tilde: Optional[float] = None
    Omega: Optional[float] = None
    upper_second: Optional[float] = None
    reference: Optional[float] = None
    flags: List[str] = Field(default_factory=list)

    @property
    def is_consistent(self) -> bool:
        if self.lower is None or self.upper_first is None:
            return True
        return self.lower <= self.upper_first


# ---------------------------------------------------------------------------
# Second-order trial state
# ---------------------------------------------------------------------------

class QuasiparticleParams(BaseModel):
    x: float
    e: float = Field(..., lt=0.5)
    h: float = Field(..., ge=0)
    s: float
    m: float = Field(..., le=0)
    p: Optional[float] = None


class ExpansionCoefficients(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    b_m: Dict[int, Any]
    c_m: Dict[int, float] = Field(default_factory=dict)
    c_log: Optional[float] = None


class SecondOrderReport(BaseModel):
    n: int
    rho: float
    Y: float
    leading: float
    Q: float
    Q_tilde: float
    Omega: float
    E_total: float
    reference: float
    residual: float
    log_shift: Optional[float] = None
    omega_order_ratio: Optional[float] = None
    errors: Dict[str, float] = Field(default_factory=dict)
    coefficients: Optional[ExpansionCoefficients] = None


# ---------------------------------------------------------------------------
# Fock oracle
# ---------------------------------------------------------------------------

Mode = Tuple[int, ...]


class ModeSet(BaseModel):
    """Finite set of lattice labels k (momentum 2 pi k / L), closed under negation."""

    modes: List[Mode]
    L: float = Field(..., gt=0)

    @field_validator("modes")
    @classmethod
    def check_modes(cls, modes: List[Mode]) -> List[Mode]:
        modes = [tuple(int(c) for c in m) for m in modes]
        if len(set(modes)) != len(modes):
            raise ValueError("mode labels must be distinct")
        dims = {len(m) for m in modes}
        if len(dims) != 1:
            raise ValueError("mode labels must share one dimension")
        dim = dims.pop()
        if (0,) * dim not in modes:
            raise ValueError("mode set must contain 0")
        for m in modes:
            if tuple(-c for c in m) not in modes:
                raise ValueError(f"mode set not closed under negation: {m}")
        return modes

    @property
    def dim(self) -> int:
        return len(self.modes[0])

    @property
    def zero(self) -> Mode:
        return (0,) * self.dim

    @property
    def pairs(self) -> List[Mode]:
        """One representative per {p, -p} pair, in first-seen order."""
        reps: List[Mode] = []
        for m in self.modes:
            if m == self.zero:
                continue
            if tuple(-c for c in m) not in reps:
                reps.append(m)
        return reps

    def momentum(self, mode: Mode) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(mode, dtype=float) / self.L

    def momentum_squared(self, mode: Mode) -> float:
        k = self.momentum(mode)
        return float(k @ k)


class TruncatedFockState(BaseModel):
    """Paired trial state on a truncated occupation lattice.

    Amplitudes are stored as a dense tensor indexed by (alpha(0), j_1, ..., j_P)
    with j_i = alpha(p_i) = alpha(-p_i).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mode_set: ModeSet
    cutoff: int = Field(..., ge=1)
    N: float
    N0: float = Field(..., ge=0)
    c: Dict[Mode, float]
    amplitudes: np.ndarray
    norm_deficit: float
    tail_bound: float
    deficit_flag: bool = False

    def coefficient(self, alpha: Dict[Mode, int]) -> float:
        """f(alpha); zero outside the paired set or beyond the cutoff."""
        zero = self.mode_set.zero
        index = [alpha.get(zero, 0)]
        for rep in self.mode_set.pairs:
            j = alpha.get(rep, 0)
            if alpha.get(tuple(-c for c in rep), 0) != j:
                return 0.0
            index.append(j)
        if any(i > self.cutoff or i < 0 for i in index):
            return 0.0
        return float(self.amplitudes[tuple(index)])

    def h(self, mode: Mode) -> float:
        c = self.c[mode]
        return c * c / (1.0 - c * c)

    def s(self, mode: Mode) -> float:
        c = self.c[mode]
        return c / (1.0 - c * c)


class ExpectationRecord(BaseModel):
    selector: str
    item: int = Field(..., ge=1, le=6)
    numeric: float
    closed_form: float
    abs_err: float
    tolerance: float

    @property
    def within_tolerance(self) -> bool:
        return self.abs_err <= self.tolerance


class EnergyExpectation(BaseModel):
    numeric: float
    closed: float
    kinetic: float
    E1: float
    E2: float
    E3: float
    tolerance: float

    @property
    def abs_err(self) -> float:
        return abs(self.numeric - self.closed)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

class GridFunction(BaseModel):
    """Function sampled on a strictly increasing grid, extended piecewise linearly."""

    xs: List[float]
    ys: List[float]

    @model_validator(mode="after")
    def check_grid(self) -> "GridFunction":
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.size < 1:
            raise ValueError("grid and values must have equal nonzero length")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("grid function values must be finite")
        return self

    def as_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.xs, dtype=float), np.asarray(self.ys, dtype=float)


class LegendreTransform(BaseModel):
    primal: GridFunction
    dual: GridFunction
    argmax: List[float]
    unbounded: List[bool]


class DensityLowerBound(BaseModel):
    value: float
    constant: float
    vacuous: bool = False


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

BoundName = Literal["lower", "upper_first", "upper_second"]


class RhoGrid(BaseModel):
    min: float = Field(..., gt=0)
    max: float = Field(..., gt=0)
    points: int = Field(1, ge=1)
    spacing: Literal["linear", "log"] = "log"

    @model_validator(mode="after")
    def check_order(self) -> "RhoGrid":
        if self.max < self.min:
            raise ValueError("rho max must not be below rho min")
        return self

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.min])
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


class OutputSpec(BaseModel):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(BaseModel):
    n: int = Field(3, ge=3)
    potential: str
    rho_grid: RhoGrid
    bounds: List[BoundName] = Field(default_factory=lambda: ["lower", "upper_first", "upper_second"])
    outputs: OutputSpec = Field(default_factory=OutputSpec)
