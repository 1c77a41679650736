"""Certified spectral quantities of structured operators.

Because the block and the tail reduce the operator, every spectral question
splits into a dense finite problem plus a scan over the diagonal tail.  Tail
scans stop as soon as the decay envelope (or an eventual-sign tag) proves that
no later entry can matter, so the answers are exact up to the dense
eigensolver's error radius.

``m(T)`` below is the *minimum modulus* ``inf ||T x||`` over unit vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (NotInvertible, NotPositive, NotSelfAdjoint,
                     SignUndecidable, UnsupportedPolar)
from .structured import (DEFAULT_TOL, FinVector, StructuredOperator,
                         make_operator, promote, tail_cutoff)
from .tails import (ZERO_RULE, Sign, SignTag, excess_sign, rule_abs_shift,
                    rule_phase_shift, rule_recip_shift, rule_scale,
                    rule_sqrt_shift)

EPS = np.finfo(float).eps
SCAN_CAP = 1 << 20


class Verdict(Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class Attainment:
    status: Verdict
    witness: FinVector | None = None
    note: str = ""

    @property
    def yes(self):
        return self.status is Verdict.YES


@dataclass(frozen=True)
class NormResult:
    value: float
    error_bound: float
    attainment: Attainment

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_bound", float(self.error_bound))


@dataclass(frozen=True)
class SpectralPoint:
    value: float
    error_radius: float
    multiplicity: int
    witness: FinVector


@dataclass(frozen=True)
class SpectrumApprox:
    eigenvalues: list
    essential_points: list
    cluster_radius: float

    def contains(self, lam, slack=0.0):
        """Whether ``lam`` lies in the certified enclosure."""
        if any(abs(lam - e) <= self.cluster_radius + slack for e in self.essential_points):
            return True
        return any(abs(lam - p.value) <= p.error_radius + slack for p in self.eigenvalues)

    def is_countable(self):
        # finite list of points plus finitely many accumulation points
        return isinstance(self.eigenvalues, list) and len(self.essential_points) < float("inf")


@dataclass(frozen=True)
class PolarPair:
    V: StructuredOperator
    modulus: StructuredOperator


# ---------------------------------------------------------------------------
# tail scanning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Scan:
    best: float
    index: int | None
    rest: str  # dominated | base_attained | base_strict | base_weak | open
    rest_bound: float
    rest_index: int


def _scan_max(f, base, env, sign: SignTag, start, floor, cap=SCAN_CAP):
    """Supremum of ``f(n)`` over ``n >= start``.

    ``|f(n) - base| <= env(n)`` and ``sign`` describes ``f(n) - base``.
    ``floor`` is the best value already known from elsewhere; the scan stops
    once the envelope shows later entries cannot beat it.
    """
    stop = None
    if sign.kind in (Sign.NONPOS, Sign.ZERO):
        stop = max(sign.start, start)
    n, chunk = start, 64
    best, idx = -math.inf, None
    while True:
        if stop is not None and n >= stop:
            if sign.kind is Sign.ZERO:
                rest = "base_attained"
            else:
                rest = "base_strict" if sign.strict else "base_weak"
            return _Scan(best, idx, rest, base, n)
        e = float(env(n))
        if e == 0.0:
            return _Scan(best, idx, "base_attained", base, n)
        if base + e < max(floor, best):
            return _Scan(best, idx, "dominated", base + e, n)
        if n - start >= cap:
            return _Scan(best, idx, "open", base + e, n)
        m = n + chunk
        if stop is not None:
            m = min(m, stop)
        vals = f(np.arange(n, m))
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, idx = float(vals[k]), n + k
        n, chunk = m, min(chunk * 2, 1 << 16)


def _scan_min(f, base, env, sign, start, ceiling, cap=SCAN_CAP):
    s = _scan_max(lambda n: -f(n), -base, env, sign.flipped(), start, -ceiling, cap)
    return _Scan(-s.best, s.index, s.rest, -s.rest_bound, s.rest_index)


def _value_radius(v):
    return 8 * EPS * max(1.0, abs(v))


def _resolve_max(block_best, block_rad, block_witness, scan: _Scan, base):
    """Combine block candidate, tail scan and essential value into a NormResult."""
    from_block = block_best >= scan.best
    cand = block_best if from_block else scan.best
    c_rad = block_rad if from_block else _value_radius(cand)

    def witness():
        return block_witness() if from_block else FinVector.basis(scan.index)

    if scan.rest == "base_attained":
        if cand >= base:
            return NormResult(cand, c_rad, Attainment(Verdict.YES, witness()))
        return NormResult(base, _value_radius(base),
                          Attainment(Verdict.YES, FinVector.basis(scan.rest_index)))
    if cand > base + c_rad and cand >= scan.rest_bound:
        return NormResult(cand, c_rad, Attainment(Verdict.YES, witness()))
    if scan.rest == "base_strict" and cand < base - c_rad:
        return NormResult(base, 0.0, Attainment(
            Verdict.NO, note="supremum equals the essential value and no entry reaches it"))
    value = max(cand, base)
    err = max(scan.rest_bound, cand + c_rad, base) - value
    return NormResult(value, max(err, c_rad), Attainment(
        Verdict.UNDECIDED, note="candidates within tolerance of the essential value"))


# ---------------------------------------------------------------------------
# dense block helpers (LAPACK)
# ---------------------------------------------------------------------------


def _block_svd(T):
    """Singular values (descending), right vectors, certified radius."""
    M = T.dense_block()
    if M.size == 0:
        return np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0)), 0.0
    U, s, Vh = np.linalg.svd(M)
    V = Vh.conj().T
    res = np.linalg.norm(M @ V - U * s, axis=0) + np.linalg.norm(M.conj().T @ U - V * s, axis=0)
    rad = float(res.max()) + 16 * M.shape[0] * EPS * float(s[0] if len(s) else 0.0)
    return s, U, V, rad


def _block_eigh(M):
    if M.size == 0:
        return np.zeros(0), np.zeros((0, 0)), np.zeros(0)
    H = (M + M.conj().T) / 2
    w, V = np.linalg.eigh(H)
    res = np.linalg.norm(H @ V - V * w, axis=0)
    scale = float(np.abs(w).max()) if len(w) else 0.0
    return w, V, res + 16 * M.shape[0] * EPS * scale


def is_self_adjoint(T: StructuredOperator, tol=DEFAULT_TOL) -> bool:
    if abs(T.scalar.imag) > tol:
        return False
    if T.block_size and np.abs(T.block - T.block.conj().T).max() > tol:
        return False
    if T.tail.is_real:
        return True
    N = T.block_size
    idx = np.arange(N + 1, N + 257)
    return bool(np.abs(T.tail(idx).imag).max() <= tol and T.tail.envelope(N + 257) <= tol)


def _require_sa(T, tol):
    if not is_self_adjoint(T, tol):
        raise NotSelfAdjoint("operator is not self-adjoint")


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def spectrum_sa(T: StructuredOperator, tol=DEFAULT_TOL, window=32, max_listed=4096) -> SpectrumApprox:
    """Certified enclosure of the spectrum of a self-adjoint operator.

    Lists the block eigenvalues with their error radii and the tail entries
    ``alpha + d_n`` up to ``N*`` (at most ``max_listed``) plus ``window`` more;
    every unlisted point lies within ``cluster_radius`` of ``alpha``.
    """
    _require_sa(T, tol)
    alpha = T.scalar.real
    N = T.block_size
    w, V, rad = _block_eigh(T.dense_block())
    points = [SpectralPoint(float(w[i]), float(rad[i]), 1, FinVector.from_array(V[:, i]))
              for i in range(len(w))]
    if T.tail.is_zero:
        return SpectrumApprox(points, [alpha], 0.0)
    nstar = tail_cutoff(T, tol)
    count = min(nstar - N, max_listed) + window
    idx = np.arange(N + 1, N + count + 1)
    vals = T.tail_values(idx).real
    points += [SpectralPoint(float(v), 0.0, 1, FinVector.basis(int(n))) for n, v in zip(idx, vals)]
    return SpectrumApprox(points, [alpha], float(T.tail.envelope(N + count + 1)))


def sa_extremes(T: StructuredOperator, tol=DEFAULT_TOL):
    """``(min, max)`` of the spectrum of self-adjoint ``T`` as NormResult-like pairs."""
    _require_sa(T, tol)
    alpha = T.scalar.real
    w, V, rad = _block_eigh(T.dense_block())
    f = lambda n: T.tail_values(n).real
    start = T.block_size + 1
    lo_b = float(w[0]) if len(w) else math.inf
    hi_b = float(w[-1]) if len(w) else -math.inf
    r = float(rad.max()) if len(rad) else 0.0
    smin = _scan_min(f, alpha, T.tail.envelope, T.tail.sign, start, lo_b)
    smax = _scan_max(f, alpha, T.tail.envelope, T.tail.sign, start, hi_b)
    lo = min(lo_b, smin.best, alpha)
    hi = max(hi_b, smax.best, alpha)
    lo_err = max(r, lo - smin.rest_bound if smin.rest == "open" else 0.0)
    hi_err = max(r, smax.rest_bound - hi if smax.rest == "open" else 0.0)
    return (lo, lo_err), (hi, hi_err)


def operator_norm(T: StructuredOperator, tol=DEFAULT_TOL) -> NormResult:
    """``||T||`` with error bound and a norm-attainment decision.

    The supremum of ``sigma(|T|)`` is the largest of the block singular values,
    the tail moduli ``|alpha + d_n|`` and the essential value ``|alpha|``.
    """
    base = abs(T.scalar)
    s, _, V, rad = _block_svd(T)
    block_best = float(s[0]) if len(s) else -math.inf
    scan = _scan_max(lambda n: np.abs(T.tail_values(n)), base, T.tail.envelope,
                     excess_sign(T.tail, T.scalar), T.block_size + 1, block_best)
    return _resolve_max(block_best, rad, lambda: FinVector.from_array(V[:, 0]), scan, base)


def min_modulus(T: StructuredOperator, tol=DEFAULT_TOL):
    """``(m(T), error_bound)`` where ``m(T) = inf ||Tx|| = d(0, sigma(|T|))``."""
    base = abs(T.scalar)
    s, _, _, rad = _block_svd(T)
    block_min = float(s[-1]) if len(s) else math.inf
    scan = _scan_min(lambda n: np.abs(T.tail_values(n)), base, T.tail.envelope,
                     excess_sign(T.tail, T.scalar), T.block_size + 1, block_min)
    value = min(block_min, scan.best, base)
    err = rad if block_min <= scan.best else _value_radius(value)
    if scan.rest == "open":
        err = max(err, value - max(scan.rest_bound, 0.0))
    return float(value), float(err)


def essential_min_modulus(T: StructuredOperator) -> float:
    """Distance from 0 to the essential spectrum of ``|T|``, i.e. ``|alpha|``."""
    return abs(T.scalar)


def modulus(T: StructuredOperator) -> StructuredOperator:
    """``|T| = (T* T)^(1/2)``."""
    a = abs(T.scalar)
    s, _, V, _ = _block_svd(T)
    M = (V * s) @ V.conj().T if len(s) else np.zeros((0, 0))
    B = M - a * np.eye(T.block_size)
    return make_operator(a, B, rule_abs_shift(T.tail, T.scalar))


def sqrt_positive(T: StructuredOperator, tol=DEFAULT_TOL) -> StructuredOperator:
    """Positive square root of a positive operator."""
    (lo, lo_err), _ = sa_extremes(T, tol)
    if lo < -tol:
        raise NotPositive(f"spectrum reaches {lo:.3e}")
    a = max(T.scalar.real, 0.0)
    if a == 0 and T.tail.sign.kind not in (Sign.NONNEG, Sign.ZERO):
        raise SignUndecidable("tail sign needed for the square root of a compact operator")
    if a == 0:
        T = promote(T, max(T.block_size, T.tail.sign.start - 1))
    w, V, _ = _block_eigh(T.dense_block())
    M = (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T if len(w) else np.zeros((0, 0))
    B = M - math.sqrt(a) * np.eye(T.block_size)
    return make_operator(math.sqrt(a), B, rule_sqrt_shift(T.tail, a))


def _settle_sign(T: StructuredOperator):
    """Promote ``T`` until the sign of every tail entry ``alpha + d_n`` is fixed.

    Returns ``(promoted, sign)`` with sign +1, -1 or 0 (tail identically 0).
    """
    a = T.scalar.real
    env = T.tail.envelope
    if a != 0:
        n0 = env.first_below(abs(a), T.block_size + 1) if not env.is_zero else T.block_size + 1
        return promote(T, max(T.block_size, n0 - 1)), (1 if a > 0 else -1)
    tag = T.tail.sign
    if tag.kind is Sign.COMPLEX:
        raise SignUndecidable("alpha = 0 and the tail sign is undecidable")
    P = promote(T, max(T.block_size, tag.start - 1))
    return P, {Sign.NONNEG: 1, Sign.NONPOS: -1, Sign.ZERO: 0}[tag.kind]


def pos_neg_parts(T: StructuredOperator, tol=DEFAULT_TOL):
    """``(T+, T-)`` positive with ``T = T+ - T-`` and ``T+ T- = 0``."""
    _require_sa(T, tol)
    T = make_operator(T.scalar.real, (T.block + T.block.conj().T) / 2, T.tail)
    P, sgn = _settle_sign(T)
    a = P.scalar.real
    w, V, _ = _block_eigh(P.dense_block())
    I = np.eye(P.block_size)
    Mp = (V * np.clip(w, 0, None)) @ V.conj().T if len(w) else np.zeros((0, 0))
    Mm = (V * np.clip(-w, 0, None)) @ V.conj().T if len(w) else np.zeros((0, 0))
    ap, am = max(a, 0.0), max(-a, 0.0)
    tail_p = P.tail if sgn > 0 else ZERO_RULE
    tail_m = rule_scale(-1, P.tail) if sgn < 0 else ZERO_RULE
    return (make_operator(ap, Mp - ap * I, tail_p),
            make_operator(am, Mm - am * I, tail_m))


def polar(T: StructuredOperator, tol=DEFAULT_TOL) -> PolarPair:
    """Polar decomposition ``T = V |T|`` with ``N(V) = N(T)``."""
    a = T.scalar
    if a != 0:
        phase = a / abs(a)
        V_tail = rule_phase_shift(T.tail, a)
        P = T
    else:
        if not T.tail.is_zero and not (T.tail.sign.is_real and
                                       (T.tail.sign.strict or T.tail.sign.kind is Sign.ZERO)):
            raise UnsupportedPolar("alpha = 0 and the tail phase does not settle")
        try:
            P, sgn = _settle_sign(T)
        except SignUndecidable as exc:
            raise UnsupportedPolar(str(exc)) from exc
        phase = float(sgn)
        V_tail = ZERO_RULE
    s, U, W, _ = _block_svd(P)
    keep = s > tol
    Vb = U[:, keep] @ W[:, keep].conj().T if len(s) else np.zeros((0, 0))
    V = make_operator(phase, Vb - phase * np.eye(P.block_size), V_tail)
    return PolarPair(V, modulus(P))


def invert(T: StructuredOperator, tol=DEFAULT_TOL) -> StructuredOperator:
    """Bounded inverse; refuses unless ``m(T)`` clears ``tol`` with margin."""
    a = T.scalar
    if a == 0:
        raise NotInvertible("compact operators on l2 are never invertible")
    m, err = min_modulus(T, tol)
    if m - err <= tol:
        raise NotInvertible(f"minimum modulus {m:.3e} not certified above {tol:.1e}")
    env = T.tail.envelope
    if env.is_zero:
        P, tail = T, ZERO_RULE
    else:
        nv = env.first_below(abs(a) / 2, T.block_size + 1)
        P = promote(T, max(T.block_size, nv - 1))
        tail = rule_recip_shift(P.tail, a, P.block_size + 1)
    M = np.linalg.inv(P.dense_block()) if P.block_size else np.zeros((0, 0))
    return make_operator(1 / a, M - (1 / a) * np.eye(P.block_size), tail)
