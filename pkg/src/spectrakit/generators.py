"""Seeded random families of structured operators.

Tails are short geometric sums (``r <= 0.6``) so certified cutoffs, and hence
dense cross-checks, stay small.  Every generator takes a
``numpy.random.Generator``.
"""

from __future__ import annotations

import numpy as np

from .structured import (StructuredOperator, add, diagonal, finite_block,
                         make_operator, scale)
from .tails import terms_rule


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(n, rng):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diagonal(R) / np.abs(np.diagonal(R)))


def random_tail_terms(rng, bound, real=True, count=None):
    """Up to three ``(c, r, p)`` terms whose sum stays below ``bound`` in modulus."""
    count = rng.integers(1, 4) if count is None else count
    terms = []
    for _ in range(count):
        r = float(rng.uniform(0.2, 0.6))
        p = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
        c = rng.uniform(-1, 1) + (0 if real else 1j * rng.uniform(-1, 1))
        terms.append((c, r, p))
    # sup_n |d_n| <= sum |c| r
    total = sum(abs(c) * r for c, r, _ in terms)
    k = bound / total if total else 0.0
    return [(c * k, r, p) for c, r, p in terms]


def normal_operator(eigs, scalar, tail_terms, rng):
    """``scalar I + (U diag(eigs) U* - scalar I) + tail``: the block acts as ``U diag(eigs) U*``."""
    n = len(eigs)
    U = random_unitary(n, rng)
    M = (U * np.asarray(eigs, dtype=complex)) @ U.conj().T
    return make_operator(scalar, M - scalar * np.eye(n), terms_rule(tail_terms))


def _unit(rng):
    return np.exp(2j * np.pi * rng.uniform())


def orthogonal_maximizer(rng, real=False) -> StructuredOperator:
    """Normal ``E`` attaining its norm on a space holding ``+-c e^{i theta}``.

    ``<E zeta, zeta> = 0`` for the balanced combination of the two top
    eigenvectors.
    """
    c = float(rng.uniform(0.5, 3.0))
    ph = 1.0 if real else _unit(rng)
    k = int(rng.integers(0, 4))
    others = [c * rng.uniform(0, 0.8) * (1.0 if real else _unit(rng)) for _ in range(k)]
    a = c * rng.uniform(-0.3, 0.3) * (1.0 if real else _unit(rng))
    tail = random_tail_terms(rng, 0.2 * c, real=real)
    return normal_operator([c * ph, -c * ph] + others, a, tail, rng)


def _chord_points(w, rng):
    """Two unit-circle points whose chord passes through ``w`` (``|w| < 1``)."""
    d = _unit(rng)
    # solve |w + t d| = 1 for the two roots t
    b = (w * d.conjugate()).real
    disc = np.sqrt(b * b - abs(w) ** 2 + 1)
    return w + (-b + disc) * d, w + (-b - disc) * d


def phase_matched_pair(rng, dependent: bool):
    """Normal ``(S, T)`` satisfying the phase condition on their norming spaces."""
    nS, nT = rng.uniform(0.5, 3.0, size=2)
    if dependent:
        mu = _unit(rng)
        topS, topT = [nS * mu], [-nT * mu]
    else:
        w = 0.6 * np.sqrt(rng.uniform()) * _unit(rng)
        topS = [nS * z for z in _chord_points(w, rng)]
        topT = [nT * z for z in _chord_points(-w, rng)]
    ops = []
    for norm, top in ((nS, topS), (nT, topT)):
        k = int(rng.integers(0, 3))
        rest = [norm * rng.uniform(0, 0.7) * _unit(rng) for _ in range(k)]
        a = norm * rng.uniform(0, 0.3) * _unit(rng)
        ops.append(normal_operator(top + rest, a, random_tail_terms(rng, 0.2 * norm, real=False), rng))
    return tuple(ops)


def attaining_operator(rng) -> StructuredOperator:
    """General (non-normal) operator whose norm is attained in the block."""
    n = int(rng.integers(1, 6))
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = np.linalg.norm(B, 2)
    a = s * rng.uniform(0, 0.3) * _unit(rng)
    tail = random_tail_terms(rng, 0.2 * s, real=False)
    return make_operator(a, B - a * np.eye(n), terms_rule(tail))


def invertible_normal(rng, positive=False) -> StructuredOperator:
    """Normal operator with spectrum bounded away from 0."""
    n = int(rng.integers(1, 6))
    mods = rng.uniform(0.4, 3.0, size=n)
    if positive:
        eigs = mods
        a = float(rng.uniform(0.5, 2.0))
        tail = random_tail_terms(rng, 0.4 * a)
    else:
        eigs = mods * np.array([_unit(rng) for _ in range(n)])
        a = rng.uniform(0.5, 2.0) * _unit(rng)
        tail = random_tail_terms(rng, 0.4 * abs(a), real=False)
    return normal_operator(eigs, a, tail, rng)


def an_positive(rng):
    """Positive ``P = K - F + s I`` built from a known triple; returns ``(P, K, F, s)``."""
    n = int(rng.integers(2, 7))
    s = float(rng.uniform(0.5, 2.0))
    k = int(rng.integers(1, n))
    U = random_unitary(n, rng)
    f = rng.uniform(0.05, 1.0, size=k) * s
    kk = rng.uniform(0.0, 2.0, size=n - k)
    F = (U[:, :k] * f) @ U[:, :k].conj().T
    Kb = (U[:, k:] * kk) @ U[:, k:].conj().T
    terms = [(abs(c), r, p) for c, r, p in random_tail_terms(rng, 0.5)]
    K = make_operator(0.0, Kb, terms_rule(terms))
    Fop = finite_block(F)
    P = add(add(K, scale(-1, Fop)), make_operator(s))
    return P, K, Fop, s


def positive_contraction(rng) -> StructuredOperator:
    n = int(rng.integers(1, 7))
    s = float(rng.uniform(0.05, 0.95))
    w = rng.uniform(0, 1, size=n)
    if rng.uniform() < 0.5:
        w[0] = 1.0
    bound = 0.9 * min(s, 1 - s)
    return normal_operator(w, s, random_tail_terms(rng, bound), rng)


def random_structured(rng) -> StructuredOperator:
    """Mixed bag: block-attaining, tail-attaining and non-attaining norms."""
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return attaining_operator(rng)
    a = float(rng.uniform(0.5, 2.0)) * (1 if rng.uniform() < 0.5 else -1)
    n = int(rng.integers(0, 5))
    B = rng.standard_normal((n, n)) * 0.3 * abs(a) / max(n, 1) if n else None
    c, r, p = float(rng.uniform(0.1, 0.9)) * abs(a), float(rng.uniform(0.2, 0.6)), float(rng.integers(0, 3))
    # kind 1: |a + d_n| > |a| somewhere (attained in the tail); kind 2: tail pulls toward 0
    sgn = np.sign(a) if kind == 1 else -np.sign(a)
    return make_operator(a, B, terms_rule([(sgn * c, r, p)]))


def kernel_example(rng):
    """``T = K + F + a I`` with ``F = -a P_W`` and ``K`` vanishing on ``W``; returns ``(T, F, W)``."""
    n = int(rng.integers(2, 7))
    k = int(rng.integers(1, n))
    a = float(rng.uniform(0.5, 2.0))
    U = random_unitary(n, rng)
    W = U[:, :k]
    Kb = (U[:, k:] * rng.uniform(0.0, 2.0, size=n - k)) @ U[:, k:].conj().T
    terms = [(abs(c), r, p) for c, r, p in random_tail_terms(rng, 0.5)]
    K = make_operator(0.0, Kb, terms_rule(terms))
    F = finite_block(-a * W @ W.conj().T)
    return add(add(K, F), make_operator(a)), F, W


def dominated_example(rng):
    """``T = K + F + a I`` with positive finite-rank ``F`` and ``K >= F``; returns ``(T, K, F)``."""
    n = int(rng.integers(2, 7))
    a = float(rng.uniform(0.5, 2.0))
    U = random_unitary(n, rng)
    f = rng.uniform(0, 1.0, size=n) * (rng.uniform(size=n) < 0.6)
    F = (U * f) @ U.conj().T
    Kb = (U * (f + rng.uniform(0, 1.0, size=n))) @ U.conj().T
    terms = [(abs(c), r, p) for c, r, p in random_tail_terms(rng, 0.5)]
    K = make_operator(0.0, Kb, terms_rule(terms))
    Fop = finite_block(F)
    return add(add(K, Fop), make_operator(a)), K, Fop


def an_mixed(rng, kind):
    """Operators for adjoint-invariance checks; ``kind`` in {"in", "not", "undecided"}."""
    if kind == "in":
        if rng.uniform() < 0.5:
            return an_positive(rng)[0]
        n = int(rng.integers(1, 5))
        B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = rng.uniform(0.5, 2.0) * _unit(rng)
        c = rng.uniform(0.1, 0.4) * abs(a)
        # |a + d_n| >= |a|: d_n along a
        return make_operator(a, B, terms_rule([(c * a / abs(a), 0.5, 0.0)]))
    if kind == "not":
        n = int(rng.integers(0, 5))
        B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) if n else None
        a = rng.uniform(0.5, 2.0) * _unit(rng)
        c = rng.uniform(0.1, 0.4) * abs(a)
        return make_operator(a, B, terms_rule([(-c * a / abs(a), float(rng.uniform(0.3, 1.0)), 1.0)]))
    # self-adjoint, scalar too small to settle the tail sign within the block limit
    eps = float(rng.uniform(1e-7, 1e-6))
    return diagonal([(-float(rng.uniform(0.5, 1.5)), 1.0, 1.0)], eps)
