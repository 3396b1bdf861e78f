"""
Brute-force oracle for the paired trial state on a truncated Fock space.

The basis is the dense lattice of occupations (alpha(0), j_1, ..., j_P) with
j_i = alpha(p_i) = alpha(-p_i), each at most `cutoff`. Ladder operators act on
the explicit occupation table; expectations are overlaps with the amplitude
vector.
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from core.config import config
from core.exceptions import DomainError, FockSizeError, InfeasibleError, ModeError
from core.models import EnergyExpectation, ExpectationRecord, Mode, ModeSet, TruncatedFockState

logger = logging.getLogger(__name__)

Ladder = Tuple[Mode, bool]

SELECTOR_ITEMS = {
    "n0": 1,
    "pair0": 1,
    "n0_sq": 1,
    "factor": 2,
    "pair_factor": 3,
    "occupation": 4,
    "pair": 5,
    "occupation_sq": 6,
}


def _neg(mode: Mode) -> Mode:
    return tuple(-c for c in mode)


def _column_order(ms: ModeSet) -> List[Mode]:
    order = [ms.zero]
    for rep in ms.pairs:
        order.extend([rep, _neg(rep)])
    return order


def build_state(ms: ModeSet, c: Dict[Mode, float], N: float, cutoff: int) -> TruncatedFockState:
    """Paired trial state with amplitudes sqrt(N0^alpha0 / alpha0!) prod_i c_i^{j_i}.

    Args:
        ms: Mode set containing 0 and closed under negation
        c: Pair coefficients (either member of a pair may be given)
        N: Expected particle number
        cutoff: Maximal occupation per mode

    Returns:
        TruncatedFockState normalised over the truncated basis
    """
    if cutoff < 1:
        raise DomainError(f"cutoff must be at least 1, got {cutoff}")
    pairs = ms.pairs
    size = (cutoff + 1) ** (1 + len(pairs))
    if size > config.FOCK_MAX_STATES:
        raise FockSizeError(f"basis of {size} states exceeds budget {config.FOCK_MAX_STATES}")

    coeffs: Dict[Mode, float] = {}
    for mode, value in c.items():
        mode = tuple(int(x) for x in mode)
        if mode not in ms.modes or mode == ms.zero:
            raise ModeError(f"coefficient given for mode {mode} outside the nonzero modes")
        other = c.get(_neg(mode))
        if other is not None and other != value:
            raise DomainError(f"c must be even: c{mode}={value} but c{_neg(mode)}={other}")
        if not -1.0 < value < 1.0:
            raise DomainError(f"|c| must be below 1, got {value} at {mode}")
        coeffs[mode] = coeffs[_neg(mode)] = float(value)
    for rep in pairs:
        coeffs.setdefault(rep, 0.0)
        coeffs.setdefault(_neg(rep), 0.0)

    depletion = sum(v * v / (1.0 - v * v) for v in coeffs.values())
    N0 = N - depletion
    if N0 < 0:
        raise InfeasibleError(f"N0 = {N0:.6g} < 0: depletion {depletion:.6g} exceeds N = {N}")

    occupations = np.arange(cutoff + 1)
    if N0 > 0:
        factors = [np.exp(0.5 * (occupations * math.log(N0) - gammaln(occupations + 1)))]
    else:
        factors = [(occupations == 0).astype(float)]
    factors += [coeffs[rep] ** occupations for rep in pairs]

    amplitudes = factors[0]
    for factor in factors[1:]:
        amplitudes = np.multiply.outer(amplitudes, factor)
    weight = float(np.sum(amplitudes ** 2))
    # exact series: e^{N0} prod_i 1/(1 - c_i^2)
    log_exact = N0 + sum(-math.log1p(-coeffs[rep] ** 2) for rep in pairs)
    norm_deficit = max(0.0, 1.0 - math.exp(math.log(weight) - log_exact))
    amplitudes = amplitudes / math.sqrt(weight)

    K1 = cutoff + 1
    poisson = 1.0 if K1 <= N0 else (math.exp(-N0 + K1 * math.log(math.e * N0 / K1)) if N0 > 0 else 0.0)
    geometric = sum(coeffs[rep] ** (2 * K1) / (1.0 - coeffs[rep] ** 2) for rep in pairs)
    tail_bound = poisson + geometric
    flag = max(tail_bound, norm_deficit) > 1e-6
    if flag:
        logger.warning(f"Truncated Fock state misses weight: deficit {norm_deficit:.3e}, tail bound {tail_bound:.3e}")

    return TruncatedFockState(mode_set=ms, cutoff=cutoff, N=N, N0=N0, c=coeffs, amplitudes=amplitudes,
                              norm_deficit=norm_deficit, tail_bound=tail_bound, deficit_flag=flag)


class _Basis:
    """Occupation table of the truncated paired basis in column order."""

    def __init__(self, st: TruncatedFockState):
        self.st = st
        self.order = _column_order(st.mode_set)
        self.column = {mode: i for i, mode in enumerate(self.order)}
        P = len(st.mode_set.pairs)
        grid = np.indices((st.cutoff + 1,) * (1 + P), dtype=np.int16).reshape(1 + P, -1).T
        self.occ = np.empty((grid.shape[0], 1 + 2 * P), dtype=np.int16)
        self.occ[:, 0] = grid[:, 0]
        for i in range(P):
            self.occ[:, 1 + 2 * i] = self.occ[:, 2 + 2 * i] = grid[:, 1 + i]
        self.amp = st.amplitudes.ravel()
        self.radix = (st.cutoff + 1) ** np.arange(P, -1, -1)

    def expectation(self, ops: Sequence[Ladder]) -> float:
        occ = self.occ.copy()
        coeff = self.amp.copy()
        for mode, dagger in reversed(ops):
            k = self.column[mode]
            if dagger:
                coeff *= np.sqrt(occ[:, k] + 1.0)
                occ[:, k] += 1
            else:
                coeff *= np.sqrt(np.maximum(occ[:, k], 0))
                occ[:, k] -= 1
        valid = (coeff != 0) & np.all(occ >= 0, axis=1) & np.all(occ <= self.st.cutoff, axis=1)
        valid &= np.all(occ[:, 1::2] == occ[:, 2::2], axis=1)
        reduced = np.column_stack([occ[valid, 0], occ[valid, 1::2]])
        return float(np.sum(self.amp[reduced @ self.radix] * coeff[valid]))


def _check_mode(st: TruncatedFockState, mode: Mode) -> Mode:
    mode = tuple(int(x) for x in mode)
    if mode not in st.mode_set.modes:
        raise ModeError(f"mode {mode} is not in the mode set")
    return mode


def expectation(st: TruncatedFockState, ops: Sequence[Ladder]) -> float:
    """<psi| O |psi> for a ladder string O = ops[0] ops[1] ... (True means a^+)."""
    ops = [(_check_mode(st, mode), bool(dagger)) for mode, dagger in ops]
    return _Basis(st).expectation(ops)


def _closed_h(st: TruncatedFockState, mode: Mode) -> float:
    return st.N0 if mode == st.mode_set.zero else st.h(mode)


def _closed_s(st: TruncatedFockState, mode: Mode) -> float:
    return st.N0 if mode == st.mode_set.zero else st.s(mode)


def _tolerance(st: TruncatedFockState, closed: float) -> float:
    """Truncation error bound for a ladder string of length at most four.

    The truncated state misses weight at most max(tail_bound, norm_deficit).
    On occupations up to cutoff + 2 a length-four string has norm at most
    (cutoff + 2)^2, so renormalising the kept amplitudes and dropping the
    outside terms each change the expectation by at most weight * (cutoff + 2)^2.
    """
    missing = max(st.tail_bound, st.norm_deficit)
    return 2.0 * missing * (st.cutoff + 2) ** 2 + config.FOCK_ROUNDING_FLOOR * max(1.0, abs(closed))


def expectations(st: TruncatedFockState, selector: str, p: Optional[Mode] = None,
                 q: Optional[Mode] = None) -> ExpectationRecord:
    """Compare one brute-force expectation with its closed form.

    Selectors: n0, pair0, n0_sq (a_0 identities); factor(p, q); pair_factor(p, q);
    occupation(p); pair(p); occupation_sq(p, q = +-p).
    """
    if selector not in SELECTOR_ITEMS:
        raise DomainError(f"unknown selector '{selector}'. Available: {', '.join(SELECTOR_ITEMS)}")
    zero = st.mode_set.zero
    item = SELECTOR_ITEMS[selector]
    if item >= 2:
        if p is None:
            raise DomainError(f"selector '{selector}' needs a mode p")
        p = _check_mode(st, p)
        if p == zero:
            raise DomainError(f"selector '{selector}' needs p != 0")
    if item in (2, 3, 6):
        if q is None:
            q = p if item == 6 else None
        if q is None:
            raise DomainError(f"selector '{selector}' needs a second mode q")
        q = _check_mode(st, q)
        if item == 6 and q not in (p, _neg(p)):
            raise DomainError("occupation_sq needs q = +p or q = -p")
        if item in (2, 3) and q in (p, _neg(p)):
            raise DomainError(f"selector '{selector}' needs p != +-q")

    if selector == "n0":
        ops, closed = [(zero, True), (zero, False)], st.N0
    elif selector == "pair0":
        ops, closed = [(zero, False), (zero, False)], st.N0
    elif selector == "n0_sq":
        ops, closed = [(zero, True), (zero, False), (zero, True), (zero, False)], st.N0 * (st.N0 + 1.0)
    elif selector == "factor":
        ops, closed = [(p, True), (p, False), (q, True), (q, False)], _closed_h(st, p) * _closed_h(st, q)
    elif selector == "pair_factor":
        ops = [(p, True), (_neg(p), True), (q, False), (_neg(q), False)]
        closed = _closed_s(st, p) * _closed_s(st, q)
    elif selector == "occupation":
        ops, closed = [(p, True), (p, False)], st.h(p)
    elif selector == "pair":
        ops, closed = [(p, True), (_neg(p), True)], st.s(p)
    else:
        h = st.h(p)
        ops, closed = [(p, True), (p, False), (q, True), (q, False)], h * (2.0 * h + 1.0)

    numeric = _Basis(st).expectation(ops)
    label = selector + "".join(f"[{m}]" for m in (p, q) if m is not None)
    return ExpectationRecord(selector=label, item=item, numeric=numeric, closed_form=closed,
                             abs_err=abs(numeric - closed), tolerance=_tolerance(st, closed))


def energy_expectation(st: TruncatedFockState, V_hat: Callable[[float], float], L: float,
                       n: int) -> EnergyExpectation:
    """<H> by direct operator application versus kinetic + E1 + E2 + E3.

    H = sum_p p^2 a_p^+ a_p + (2 L^n)^{-1} sum_{p+q=r+s} V_hat(p-r) a_p^+ a_q^+ a_r a_s,
    restricted to the modes of the state.
    """
    ms = st.mode_set
    if n != ms.dim:
        raise DomainError(f"mode labels have dimension {ms.dim}, not {n}")
    if not math.isclose(L, ms.L):
        raise DomainError(f"box side {L} differs from the mode set's {ms.L}")
    modes = ms.modes
    zero = ms.zero
    mode_index = set(modes)
    momentum = {m: ms.momentum(m) for m in modes}
    volume = L ** n

    def v_between(p: Mode, r: Mode) -> float:
        return float(V_hat(float(np.linalg.norm(momentum[p] - momentum[r]))))

    basis = _Basis(st)
    kinetic_numeric = sum(ms.momentum_squared(m) * basis.expectation([(m, True), (m, False)])
                          for m in modes if m != zero)

    interaction = 0.0
    terms = 0
    for p in modes:
        for q in modes:
            for r in modes:
                s = tuple(a + b - c for a, b, c in zip(p, q, r))
                if s not in mode_index:
                    continue
                change: Dict[Mode, int] = {}
                for m, d in ((p, 1), (q, 1), (r, -1), (s, -1)):
                    change[m] = change.get(m, 0) + d
                if any(change.get(m, 0) != change.get(_neg(m), 0) for m in ms.pairs):
                    continue
                interaction += v_between(p, r) * basis.expectation([(p, True), (q, True), (r, False), (s, False)])
                terms += 1
    numeric = kinetic_numeric + interaction / (2.0 * volume)

    def X(p: Mode, q: Mode) -> float:
        if p == q:
            return st.N0 ** 2 if p == zero else 2.0 * st.h(p) ** 2
        if p != zero and q == _neg(p):
            h = st.h(p)
            return h * (2.0 * h + 1.0)
        return _closed_h(st, p) * _closed_h(st, q)

    kinetic = sum(ms.momentum_squared(m) * st.h(m) for m in modes if m != zero)
    v0 = float(V_hat(0.0))
    E1 = v0 / (2.0 * volume) * sum(X(p, q) for p in modes for q in modes)
    E2 = sum(v_between(p, q) * X(p, q) for p in modes for q in modes if p != q) / (2.0 * volume)
    E3 = sum(v_between(p, r) * _closed_s(st, p) * _closed_s(st, r)
             for p in modes for r in modes if r not in (p, _neg(p))) / (2.0 * volume)
    closed = kinetic + E1 + E2 + E3

    v_max = max([abs(v0)] + [abs(v_between(p, r)) for p in modes for r in modes])
    scale = sum(ms.momentum_squared(m) for m in modes) + v_max * max(terms, 1) / (2.0 * volume)
    tolerance = scale * 2.0 * st.tail_bound * (st.cutoff + 2) ** 2 + config.FOCK_ROUNDING_FLOOR * max(1.0, abs(closed))
    logger.debug(f"Energy oracle: {terms} pair-preserving quartic terms, numeric {numeric:.12g}, closed {closed:.12g}")
    return EnergyExpectation(numeric=numeric, closed=closed, kinetic=kinetic, E1=E1, E2=E2, E3=E3,
                             tolerance=tolerance)
