"""Diagonal tail rules for structured operators.

A tail rule describes the diagonal entries ``d_n`` of an operator beyond its
dense block.  It carries three things:

* an exact entry expression ``n -> d_n`` (vectorised over integer arrays),
* a :class:`DecayEnvelope` with ``|d_n| <= env(n)`` for ``n >= valid_from``,
* a :class:`SignTag` describing the eventual sign of ``d_n``.

User-supplied tails are finite sums ``sum_i c_i r_i**n n**(-p_i)``
(:class:`Terms`).  That family is closed under sums, products, scaling and
conjugation, and its eventual sign is decided by a dominant-term analysis.
Derived operations (modulus, inverse, polar phase, square root) wrap an inner
expression in a :class:`Shifted` node with its own envelope rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import MalformedEnvelope, NonvanishingTail

#: Hard cap for doubling searches over tail indices.
MAX_INDEX = 2**62


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeTerm:
    """One envelope summand ``c * r**n * n**(-p)``."""

    c: float
    r: float
    p: float

    def __post_init__(self):
        c, r, p = float(self.c), float(self.r), float(self.p)
        if not all(map(math.isfinite, (c, r, p))):
            raise MalformedEnvelope(f"non-finite envelope term {(c, r, p)}")
        if c < 0 or p < 0 or not (0.0 < r <= 1.0):
            raise MalformedEnvelope(
                f"envelope term needs c >= 0, 0 < r <= 1, p >= 0; got {(c, r, p)}")
        if r == 1.0 and p == 0.0 and c > 0:
            raise NonvanishingTail(f"term {(c, r, p)} does not decay")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p", p)

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        with np.errstate(under="ignore"):
            return self.c * np.power(self.r, n) * np.power(n, -self.p)


@dataclass(frozen=True)
class DecayEnvelope:
    """Sum of envelope terms; each term is nonincreasing for ``n >= 1``."""

    terms: tuple = ()
    valid_from: int = 1

    def __post_init__(self):
        terms = tuple(t for t in self.terms if t.c > 0)
        object.__setattr__(self, "terms", terms)
        if int(self.valid_from) < 1:
            raise MalformedEnvelope("valid_from must be >= 1")
        object.__setattr__(self, "valid_from", int(self.valid_from))

    @property
    def is_zero(self):
        return not self.terms

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        out = np.zeros(n.shape)
        for t in self.terms:
            out = out + t(n)
        return out if out.ndim else float(out)

    def scaled(self, k):
        k = abs(k)
        return DecayEnvelope(tuple(EnvelopeTerm(t.c * k, t.r, t.p) for t in self.terms),
                             self.valid_from)

    def plus(self, other):
        return DecayEnvelope(self.terms + other.terms, max(self.valid_from, other.valid_from))

    def times(self, other):
        terms = tuple(EnvelopeTerm(a.c * b.c, a.r * b.r, a.p + b.p)
                      for a in self.terms for b in other.terms)
        return DecayEnvelope(terms, max(self.valid_from, other.valid_from))

    def sqrt(self):
        # sqrt(sum) <= sum(sqrt) termwise
        terms = tuple(EnvelopeTerm(math.sqrt(t.c), math.sqrt(t.r), t.p / 2) for t in self.terms)
        return DecayEnvelope(terms, self.valid_from)

    def starting(self, n):
        return DecayEnvelope(self.terms, max(self.valid_from, int(n)))

    def first_below(self, eps, start=1):
        """Smallest ``n >= start`` with ``env(n) < eps`` (env is nonincreasing)."""
        start = max(int(start), 1)
        if self(start) < eps:
            return start
        lo, hi = start, start
        while self(hi) >= eps:
            lo, hi = hi, 2 * hi
            if hi > MAX_INDEX:
                raise OverflowError("envelope never drops below eps")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self(mid) < eps:
                hi = mid
            else:
                lo = mid
        return hi


ZERO_ENVELOPE = DecayEnvelope()


# ---------------------------------------------------------------------------
# Sign tags
# ---------------------------------------------------------------------------


class Sign(Enum):
    NONNEG = "eventually_nonneg"
    NONPOS = "eventually_nonpos"
    ZERO = "identically_zero"
    COMPLEX = "complex"


@dataclass(frozen=True)
class SignTag:
    """Eventual sign of a tail sequence, valid for ``n >= start``.

    ``strict`` means the entries are nonzero from ``start`` on (so NONNEG is
    really "positive").
    """

    kind: Sign
    start: int = 1
    strict: bool = False

    @property
    def is_real(self):
        return self.kind is not Sign.COMPLEX

    def flipped(self):
        kind = {Sign.NONNEG: Sign.NONPOS, Sign.NONPOS: Sign.NONNEG}.get(self.kind, self.kind)
        return SignTag(kind, self.start, self.strict)

    def later(self, n):
        return SignTag(self.kind, max(self.start, int(n)), self.strict)


COMPLEX_TAG = SignTag(Sign.COMPLEX)
ZERO_TAG = SignTag(Sign.ZERO, 1, False)


def _combine_sum(tags):
    if any(t.kind is Sign.COMPLEX for t in tags):
        return COMPLEX_TAG
    start = max((t.start for t in tags), default=1)
    kinds = {t.kind for t in tags} - {Sign.ZERO}
    if not kinds:
        return SignTag(Sign.ZERO, start)
    if len(kinds) > 1:
        return COMPLEX_TAG
    kind = kinds.pop()
    strict = any(t.strict for t in tags if t.kind is kind)
    return SignTag(kind, start, strict)


def _combine_product(tags):
    zero = [t for t in tags if t.kind is Sign.ZERO]
    if zero:
        return SignTag(Sign.ZERO, min(t.start for t in zero))
    if any(t.kind is Sign.COMPLEX for t in tags):
        return COMPLEX_TAG
    negatives = sum(t.kind is Sign.NONPOS for t in tags)
    kind = Sign.NONPOS if negatives % 2 else Sign.NONNEG
    return SignTag(kind, max(t.start for t in tags), all(t.strict for t in tags))


# ---------------------------------------------------------------------------
# Entry expressions
# ---------------------------------------------------------------------------


def _idx(n):
    return np.asarray(n, dtype=float)


class TailExpr:
    """Exact rule ``n -> d_n``; evaluates to a complex ndarray."""

    is_real: bool = False

    def __call__(self, n):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Terms(TailExpr):
    """``sum_i c_i r_i**n n**(-p_i)`` in canonical form.

    Terms with equal ``(r, p)`` are merged, exact zeros dropped, and the rest
    ordered by decreasing ``r`` then increasing ``p`` (dominant first).
    """

    coeffs: tuple = ()

    def __post_init__(self):
        merged = {}
        for c, r, p in self.coeffs:
            c, r, p = complex(c), float(r), float(p)
            EnvelopeTerm(abs(c), r, p)
            merged[(r, p)] = merged.get((r, p), 0j) + c
        canon = tuple(sorted(((c, r, p) for (r, p), c in merged.items() if c != 0),
                             key=lambda t: (-t[1], t[2])))
        object.__setattr__(self, "coeffs", canon)

    @property
    def is_real(self):
        return all(c.imag == 0 for c, _, _ in self.coeffs)

    def __call__(self, n):
        n = _idx(n)
        out = np.zeros(n.shape, dtype=complex)
        with np.errstate(under="ignore"):
            for c, r, p in self.coeffs:
                out = out + c * (np.power(r, n) * np.power(n, -p))
        return out

    def envelope(self):
        return DecayEnvelope(tuple(EnvelopeTerm(abs(c), r, p) for c, r, p in self.coeffs))

    def conj(self):
        return Terms(tuple((c.conjugate(), r, p) for c, r, p in self.coeffs))

    def scaled(self, k):
        return Terms(tuple((k * c, r, p) for c, r, p in self.coeffs))

    def plus(self, other):
        return Terms(self.coeffs + other.coeffs)

    def times(self, other):
        return Terms(tuple((a * b, ra * rb, pa + pb)
                           for a, ra, pa in self.coeffs for b, rb, pb in other.coeffs))

    def sign(self):
        return _terms_sign(self.coeffs)

    def describe(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({_fmt(c)})*{r!r}^n*n^-{p!r}" for c, r, p in self.coeffs)


ZERO_TERMS = Terms()


def _fmt(c):
    c = complex(c)
    return repr(c.real) if c.imag == 0 else repr(c)


def _terms_sign(coeffs):
    if not coeffs:
        return ZERO_TAG
    if any(c.imag != 0 for c, _, _ in coeffs):
        return COMPLEX_TAG
    c0, r0, p0 = coeffs[0]
    kind = Sign.NONNEG if c0.real > 0 else Sign.NONPOS
    rest = coeffs[1:]
    if not rest:
        return SignTag(kind, 1, True)
    # log of |term_j / dominant| = log|c_j/c0| + n log(r_j/r0) + (p0 - p_j) log n
    logc = np.array([math.log(abs(c)) - math.log(abs(c0)) for c, _, _ in rest])
    logq = np.array([math.log(r) - math.log(r0) for _, r, _ in rest])
    expo = np.array([p0 - p for _, _, p in rest])
    threshold = 1
    for lq, a in zip(logq, expo):
        if lq < 0 and a > 0:
            threshold = max(threshold, math.ceil(a / -lq))

    def ratio(n):
        # overflow to inf just means "not dominated yet"
        with np.errstate(over="ignore"):
            return float(np.exp(logc + n * logq + expo * math.log(n)).sum())

    lo = threshold
    if ratio(lo) < 1:
        return SignTag(kind, lo, True)
    hi = lo
    while ratio(hi) >= 1:
        lo, hi = hi, 2 * hi
        if hi > MAX_INDEX:
            return COMPLEX_TAG
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ratio(mid) < 1:
            hi = mid
        else:
            lo = mid
    return SignTag(kind, hi, True)


@dataclass(frozen=True)
class Shifted(TailExpr):
    """Nonlinear function of ``a + x(n)`` re-centred at its limit value.

    kinds:
      ``abs``    |a + x| - |a|
      ``recip``  1/(a + x) - 1/a
      ``phase``  u(a + x) - a/|a| where u(z) = z/|z| and u(0) = 0
      ``sqrt``   sqrt(a + x) - sqrt(a)   (a >= 0, a + x >= 0)
    """

    kind: str
    inner: TailExpr
    shift: complex

    @property
    def is_real(self):
        if self.kind in ("abs", "sqrt"):
            return True
        return self.inner.is_real and complex(self.shift).imag == 0

    def __call__(self, n):
        # written without the cancellation of e.g. |a + x| - |a| for small x
        a = complex(self.shift)
        x = self.inner(n)
        z = a + x
        if self.kind in ("abs", "phase"):
            mag = np.abs(z)
            num = 2 * (a.conjugate() * x).real + np.abs(x) ** 2
            den = mag + abs(a)
            dabs = np.divide(num, den, out=np.zeros_like(num), where=den != 0)
            if self.kind == "abs":
                return dabs.astype(complex)
            ua = a / abs(a)
            safe = np.where(mag != 0, mag, 1.0)
            return np.where(mag != 0, (x - ua * dabs) / safe, -ua)
        if self.kind == "recip":
            return -x / (a * z)
        if self.kind == "sqrt":
            zr = np.maximum(z.real, 0.0)
            ra = math.sqrt(max(a.real, 0.0))
            den = np.sqrt(zr) + ra
            out = np.divide(zr - max(a.real, 0.0), den, out=np.zeros_like(zr), where=den != 0)
            return out.astype(complex)
        raise ValueError(self.kind)

    def describe(self):
        return f"{self.kind}[{_fmt(self.shift)} + ({self.inner.describe()})]"


@dataclass(frozen=True)
class Sum(TailExpr):
    parts: tuple

    @property
    def is_real(self):
        return all(p.is_real for p in self.parts)

    def __call__(self, n):
        return sum((p(n) for p in self.parts), np.zeros(_idx(n).shape, dtype=complex))

    def describe(self):
        return " + ".join(f"({p.describe()})" for p in self.parts)


@dataclass(frozen=True)
class Product(TailExpr):
    parts: tuple

    @property
    def is_real(self):
        return all(p.is_real for p in self.parts)

    def __call__(self, n):
        out = np.ones(_idx(n).shape, dtype=complex)
        for p in self.parts:
            out = out * p(n)
        return out

    def describe(self):
        return " * ".join(f"({p.describe()})" for p in self.parts)


@dataclass(frozen=True)
class Scaled(TailExpr):
    factor: complex
    inner: TailExpr

    @property
    def is_real(self):
        return complex(self.factor).imag == 0 and self.inner.is_real

    def __call__(self, n):
        return complex(self.factor) * self.inner(n)

    def describe(self):
        return f"{_fmt(self.factor)}*({self.inner.describe()})"


@dataclass(frozen=True)
class Conj(TailExpr):
    inner: TailExpr

    @property
    def is_real(self):
        return self.inner.is_real

    def __call__(self, n):
        return np.conj(self.inner(n))

    def describe(self):
        return f"conj({self.inner.describe()})"


# ---------------------------------------------------------------------------
# Tail rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailRule:
    """Entry expression together with its envelope and eventual sign."""

    expr: TailExpr = field(default=ZERO_TERMS)
    envelope: DecayEnvelope = field(default=ZERO_ENVELOPE)
    sign: SignTag = field(default=ZERO_TAG)

    def __call__(self, n):
        return self.expr(n)

    @property
    def is_real(self):
        return self.expr.is_real

    @property
    def is_zero(self):
        return isinstance(self.expr, Terms) and not self.expr.coeffs


ZERO_RULE = TailRule()


def terms_rule(coeffs: Iterable[Sequence] | Terms) -> TailRule:
    """Rule for a signed sum of geometric/power terms with its exact envelope."""
    expr = coeffs if isinstance(coeffs, Terms) else Terms(tuple(coeffs))
    return TailRule(expr, expr.envelope(), expr.sign())


def rule_add(a: TailRule, b: TailRule) -> TailRule:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if isinstance(a.expr, Terms) and isinstance(b.expr, Terms):
        return terms_rule(a.expr.plus(b.expr))
    return TailRule(Sum((a.expr, b.expr)), a.envelope.plus(b.envelope),
                    _combine_sum([a.sign, b.sign]))


def rule_scale(k, a: TailRule) -> TailRule:
    k = complex(k)
    if k == 0 or a.is_zero:
        return ZERO_RULE
    if isinstance(a.expr, Terms):
        return terms_rule(a.expr.scaled(k))
    if k.imag != 0:
        sign = COMPLEX_TAG if a.sign.kind is not Sign.ZERO else a.sign
    else:
        sign = a.sign if k.real > 0 else a.sign.flipped()
    return TailRule(Scaled(k, a.expr), a.envelope.scaled(abs(k)), sign)


def rule_mul(a: TailRule, b: TailRule) -> TailRule:
    if a.is_zero or b.is_zero:
        return ZERO_RULE
    if isinstance(a.expr, Terms) and isinstance(b.expr, Terms):
        return terms_rule(a.expr.times(b.expr))
    return TailRule(Product((a.expr, b.expr)), a.envelope.times(b.envelope),
                    _combine_product([a.sign, b.sign]))


def rule_conj(a: TailRule) -> TailRule:
    if isinstance(a.expr, Terms):
        return terms_rule(a.expr.conj())
    if a.is_real:
        return a
    return TailRule(Conj(a.expr), a.envelope, a.sign)


def rule_abs_shift(a: TailRule, shift) -> TailRule:
    """Tail of ``|shift + d_n|`` re-centred at ``|shift|``; bound ``|d_n|``."""
    shift = complex(shift)
    if a.is_zero:
        return ZERO_RULE
    return TailRule(Shifted("abs", a.expr, shift), a.envelope, excess_sign(a, shift))


def excess_sign(a: TailRule, shift) -> SignTag:
    """Eventual sign of ``|shift + d_n| - |shift|``."""
    shift = complex(shift)
    if a.is_zero:
        return ZERO_TAG
    if isinstance(a.expr, Terms):
        # same sign as |s + x|^2 - |s|^2 = conj(s) x + s conj(x) + |x|^2
        x = a.expr
        gram = x.scaled(shift.conjugate()).plus(x.conj().scaled(shift)).plus(x.conj().times(x))
        return _real_terms_sign(gram)
    if shift == 0:
        if a.sign.kind is Sign.ZERO:
            return a.sign
        return SignTag(Sign.NONNEG, a.sign.start if a.sign.is_real else 1,
                       a.sign.strict and a.sign.is_real)
    if shift.imag == 0 and a.is_real and a.sign.is_real:
        if a.sign.kind is Sign.ZERO:
            return a.sign
        # once |d_n| < 2|s| the sign of |s + d| - |s| is sign(s) * sign(d)
        start = max(a.sign.start, _first_below(a.envelope, 2 * abs(shift)))
        tag = a.sign.later(start)
        return tag if shift.real > 0 else tag.flipped()
    return COMPLEX_TAG


def _real_terms_sign(t: Terms) -> SignTag:
    # imaginary parts of a real-valued sum cancel pairwise but may leave
    # rounding residue; drop it before the dominant-term analysis
    coeffs = []
    for c, r, p in t.coeffs:
        if abs(c.imag) <= 1e-14 * max(abs(c), 1e-300):
            c = complex(c.real, 0.0)
        coeffs.append((c, r, p))
    return _terms_sign(Terms(tuple(coeffs)).coeffs)


def _first_below(env: DecayEnvelope, eps):
    return env.first_below(eps, env.valid_from) if not env.is_zero else 1


def rule_recip_shift(a: TailRule, shift, valid_from: int) -> TailRule:
    """Tail of ``1/(shift + d_n)`` re-centred at ``1/shift``.

    For ``n >= valid_from`` (where ``env(n) <= env(valid_from) < |shift|``)
    ``|1/(s+d) - 1/s| <= env(n) / (|s| (|s| - env(valid_from)))``.
    """
    shift = complex(shift)
    if a.is_zero:
        return ZERO_RULE
    e0 = float(a.envelope(valid_from))
    if not e0 < abs(shift):
        raise ValueError("reciprocal envelope needs env(valid_from) < |shift|")
    k = 1.0 / (abs(shift) * (abs(shift) - e0))
    env = a.envelope.scaled(k).starting(valid_from)
    if shift.imag == 0 and a.is_real and a.sign.is_real:
        # -d / (s (s + d)) and s (s + d) > 0 once |d| < |s|
        sign = a.sign.later(valid_from).flipped()
    else:
        sign = COMPLEX_TAG
    return TailRule(Shifted("recip", a.expr, shift), env, sign)


def rule_phase_shift(a: TailRule, shift) -> TailRule:
    """Tail of the phase ``u(shift + d_n)`` re-centred at ``shift/|shift|``.

    ``|u(s+d) - u(s)| <= 2|d|/|s|``; real data settle to exactly zero once
    ``|d_n| < |s|``.
    """
    shift = complex(shift)
    if a.is_zero:
        return ZERO_RULE
    env = a.envelope.scaled(2.0 / abs(shift))
    if shift.imag == 0 and a.is_real:
        sign = SignTag(Sign.ZERO, _first_below(a.envelope, abs(shift)))
    else:
        sign = COMPLEX_TAG
    return TailRule(Shifted("phase", a.expr, shift), env, sign)


def rule_sqrt_shift(a: TailRule, shift) -> TailRule:
    """Tail of ``sqrt(shift + d_n)`` re-centred at ``sqrt(shift)``, shift >= 0."""
    s = float(complex(shift).real)
    if a.is_zero:
        return ZERO_RULE
    env = a.envelope.scaled(1.0 / math.sqrt(s)) if s > 0 else a.envelope.sqrt()
    sign = a.sign if a.sign.is_real else COMPLEX_TAG
    return TailRule(Shifted("sqrt", a.expr, s), env, sign)
