"""Norm attainment, AN decisions and the ``K - F + alpha I`` decomposition.

A positive operator ``P = s I + A`` with ``A`` compact is absolutely norm
attaining exactly when ``A`` has finitely many negative eigenvalues; then
``K = A+``, ``F = A-`` and ``alpha = s`` give ``P = K - F + alpha I`` with
``KF = 0`` and ``0 <= F <= alpha I``.  Other operators are reduced to a
positive one first: self-adjoint ``T`` through ``|T| = T+ + T-``, general
``T`` through ``T* T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (InvalidTriple, PromotionLimit, SignUndecidable,
                     UncertifiableKernel)
from .spectral import (SCAN_CAP, Attainment, _block_eigh,
                       _block_svd, _resolve_max, _scan_max, is_self_adjoint,
                       operator_norm, polar, pos_neg_parts, sa_extremes)
from .structured import (DEFAULT_TOL, FinVector, StructuredOperator, add,
                         adjoint, identity, make_operator, multiply, scale)
from .tails import Sign, excess_sign


@dataclass(frozen=True)
class Classification:
    self_adjoint: bool
    normal: bool
    hyponormal: bool
    positive: bool
    compact: bool


def self_commutator_block(T: StructuredOperator) -> np.ndarray:
    """Block of ``T* T - T T*``; the diagonal tail contributes nothing."""
    M = T.dense_block()
    return M.conj().T @ M - M @ M.conj().T


def classify(T: StructuredOperator, tol=DEFAULT_TOL) -> Classification:
    sa = is_self_adjoint(T, tol)
    C = self_commutator_block(T)
    if C.size:
        w = np.linalg.eigvalsh((C + C.conj().T) / 2)
        normal = float(np.abs(w).max()) <= tol
        hypo = float(w.min()) >= -tol
    else:
        normal = hypo = True
    positive = False
    if sa:
        (lo, _), _ = sa_extremes(T, tol)
        positive = lo >= -tol
    return Classification(sa, normal, hypo, positive, abs(T.scalar) <= tol)


def is_norm_attaining(T: StructuredOperator, tol=DEFAULT_TOL) -> Attainment:
    """Decide whether ``||T x|| = ||T||`` for some unit ``x``.

    Self-adjoint ``a I + diag(lambda_n)`` is handled entrywise: the norm is
    attained iff some ``|lambda_n + a|`` reaches the supremum, which beats
    ``|a|`` as soon as one entry exceeds it.
    """
    B = T.block
    if is_self_adjoint(T, tol) and np.count_nonzero(B - np.diag(np.diagonal(B))) == 0:
        a = T.scalar.real
        diag = np.abs(a + np.diagonal(B).real)
        best = float(diag.max()) if diag.size else -np.inf
        k = int(diag.argmax()) + 1 if diag.size else None
        scan = _scan_max(lambda n: np.abs(T.tail_values(n)), abs(a), T.tail.envelope,
                         excess_sign(T.tail, a), T.block_size + 1, best)
        res = _resolve_max(best, 0.0, lambda: FinVector.basis(k), scan, abs(a))
        return res.attainment
    return operator_norm(T, tol).attainment


# ---------------------------------------------------------------------------
# AN triples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ANTriple:
    K: StructuredOperator
    F: StructuredOperator
    alpha: float


class NotANReason(Enum):
    INFINITELY_MANY_BELOW_ESSENTIAL = "InfinitelyManyBelowEssential"
    NORM_NOT_ATTAINED_ON_SUBSPACE = "NormNotAttainedOnSubspace"


class VerdictKind(Enum):
    IN_AN = "InAN"
    NOT_AN = "NotAN"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class ANVerdict:
    kind: VerdictKind
    analyzed: StructuredOperator | None = None
    route: str = "positive"
    triple: ANTriple | None = None
    reason: NotANReason | None = None
    offending: tuple = ()
    explanation: str = ""


def _positive_route(T, tol):
    cl = classify(T, tol)
    if cl.positive:
        return make_operator(T.scalar.real, (T.block + T.block.conj().T) / 2, T.tail), "positive"
    if cl.self_adjoint:
        Tp, Tm = pos_neg_parts(T, tol)
        return add(Tp, Tm), "self-adjoint |T|"
    return multiply(adjoint(T), T), "T*T"


def an_check(T: StructuredOperator, tol=DEFAULT_TOL) -> ANVerdict:
    """AN verdict for ``T`` together with the triple of the analysed positive operator."""
    try:
        P, route = _positive_route(T, tol)
    except (SignUndecidable, PromotionLimit) as exc:
        return ANVerdict(VerdictKind.UNDECIDED, route="self-adjoint |T|", explanation=str(exc))
    s = P.scalar.real
    A = make_operator(0.0, P.block, P.tail)
    tag = A.tail.sign
    if tag.kind is Sign.COMPLEX:
        return ANVerdict(VerdictKind.UNDECIDED, P, route,
                         explanation="eventual sign of the tail is undecidable")
    if tag.kind is Sign.NONPOS:
        if not tag.strict:
            return ANVerdict(VerdictKind.UNDECIDED, P, route,
                             explanation="tail is eventually nonpositive but may vanish")
        return ANVerdict(VerdictKind.NOT_AN, P, route,
                         reason=NotANReason.INFINITELY_MANY_BELOW_ESSENTIAL,
                         offending=_below_essential(P, tol, 8),
                         explanation=f"tail entries stay below {s!r} from index {tag.start}")
    try:
        K, F = pos_neg_parts(A, tol)
    except (SignUndecidable, PromotionLimit) as exc:
        return ANVerdict(VerdictKind.UNDECIDED, P, route, explanation=str(exc))
    return ANVerdict(VerdictKind.IN_AN, P, route, triple=ANTriple(K, F, s))


def _below_essential(P, tol, count):
    s = P.scalar.real
    w, _, _ = _block_eigh(P.dense_block())
    out = [float(v) for v in w if v < s - tol][:count]
    n, chunk = P.block_size + 1, 64
    while len(out) < count and n < P.block_size + SCAN_CAP:
        idx = np.arange(n, n + chunk)
        vals = P.tail_values(idx).real
        out += [float(v) for v in vals if v < s][: count - len(out)]
        n += chunk
    return tuple(out)


def check_triple(triple: ANTriple, tol=DEFAULT_TOL) -> dict:
    """Residuals of every triple invariant (all should be <= tol)."""
    K, F, a = triple.K, triple.F, triple.alpha
    (kmin, _), _ = sa_extremes(K, tol)
    wF = np.linalg.eigvalsh((F.block + F.block.conj().T) / 2) if F.block_size else np.zeros(1)
    return {
        "K_compact": abs(K.scalar),
        "K_positive": max(0.0, -kmin),
        "F_finite_rank": abs(F.scalar) + (0.0 if F.tail.is_zero else np.inf),
        "F_positive": max(0.0, -float(wF.min())),
        "KF": operator_norm(multiply(K, F), tol).value,
        "F_le_alpha": max(float(wF.max()) - a, 0.0),
        "F2_le_alpha2": max(float(wF.max()) ** 2 - a * a, 0.0),
    }


def an_reassemble(triple: ANTriple) -> StructuredOperator:
    """``K - F + alpha I``."""
    if triple.F.scalar != 0 or not triple.F.tail.is_zero:
        raise InvalidTriple("F must be supported on the finite block")
    if triple.K.scalar != 0:
        raise InvalidTriple("K must be compact (zero scalar part)")
    if triple.alpha < 0:
        raise InvalidTriple("alpha must be nonnegative")
    return add(add(triple.K, scale(-1, triple.F)), identity(triple.alpha))


def sa_representation(T: StructuredOperator, tol=DEFAULT_TOL):
    """``(K, F, alpha, V)`` with ``T = K - F + alpha V`` for self-adjoint AN ``T``.

    ``(K', F', alpha)`` is the triple of ``|T|`` and ``V`` the polar phase, so
    ``K = V K'`` and ``F = V F'``; both stay self-adjoint with ``KF = 0``.
    """
    verdict = an_check(T, tol)
    if verdict.kind is not VerdictKind.IN_AN:
        raise InvalidTriple(f"operator is not certified AN ({verdict.kind.value})")
    if not is_self_adjoint(T, tol):
        raise InvalidTriple("representation needs a self-adjoint operator")
    V = polar(T, tol).V
    t = verdict.triple
    return multiply(V, t.K), multiply(V, t.F), t.alpha, V


def null_space(T: StructuredOperator, tol=DEFAULT_TOL) -> list:
    """Orthonormal basis of ``N(T)`` (block kernel plus vanishing tail entries)."""
    a = T.scalar
    N = T.block_size
    env = T.tail.envelope
    if abs(a) > tol:
        stop = env.first_below(abs(a) - tol, N + 1) if not env.is_zero else N + 1
    elif a == 0 and T.tail.sign.is_real and T.tail.sign.strict:
        stop = max(T.tail.sign.start, N + 1)
    else:
        raise UncertifiableKernel("tail entries accumulate at 0")
    if stop - N > SCAN_CAP:
        raise UncertifiableKernel(f"kernel certification needs {stop - N} tail entries")
    out = []
    s, _, V, _ = _block_svd(T)
    for i in np.flatnonzero(s <= tol):
        out.append(FinVector.from_array(V[:, i]))
    if stop > N + 1:
        idx = np.arange(N + 1, stop)
        out += [FinVector.basis(int(n)) for n in idx[np.abs(T.tail_values(idx)) <= tol]]
    return out
