import numpy as np
import pytest

from conftest import random_op
from spectrakit.errors import MalformedEnvelope, PromotionLimit
from spectrakit.oracle import truncate
from spectrakit.structured import (MAX_BLOCK, FinVector, add, adjoint, align,
                                   apply, diagonal, finite_block, identity,
                                   make_operator, multiply, power, promote,
                                   rank_one, replace_entry, scale,
                                   tail_cutoff)
from spectrakit.tails import EnvelopeTerm, Sign, terms_rule


def same(T1, T2, M=12, tol=1e-12):
    return np.abs(truncate(T1, M) - truncate(T2, M)).max() <= tol


def test_identity_and_diagonal():
    assert np.array_equal(truncate(identity(), 3), np.eye(3))
    D = diagonal([(1, 1, 1)])
    assert np.allclose(truncate(D, 4).diagonal(), 1 / np.arange(1, 5))


def test_bad_envelope_rejected():
    with pytest.raises(MalformedEnvelope):
        make_operator(0, np.eye(2), terms_rule([(1, 1.5, 1)]))


def test_promote_examples(rng):
    P = promote(identity(), 5)
    assert P.block_size == 5 and np.all(P.block == 0) and same(P, identity())
    D = promote(diagonal([(1, 1, 1)]), 2)
    assert np.allclose(np.diagonal(D.block), [1, 0.5])
    assert np.isclose(D.tail_values(7), 1 / 7)
    T = random_op(rng, 3)
    P = promote(T, 8)
    for k in range(1, 13):
        e = FinVector.basis(k)
        a, b = apply(P, e), apply(T, e)
        assert np.allclose((a - b).to_array(13), 0, atol=1e-15)


def test_promotion_limit():
    with pytest.raises(PromotionLimit):
        promote(identity(), MAX_BLOCK + 1)


def test_align(rng):
    A, B = align(identity(), identity())
    assert A.block_size == B.block_size == 0
    for _ in range(20):
        T1, T2 = random_op(rng, 2), random_op(rng, 4)
        A, B = align(T1, T2)
        assert A.block_size == B.block_size == 4
        assert same(A, T1, 8) and same(B, T2, 8)


def test_add_scale_examples():
    T = diagonal([(2, 0.5, 0)], 1.0)
    assert same(add(T, make_operator(0)), T)
    assert same(add(identity(), scale(-1, identity())), make_operator(0))
    Z = add(diagonal([(1, 1, 1)]), diagonal([(-1, 1, 1)]))
    assert np.all(truncate(Z, 100) == 0)
    assert Z.tail.is_zero and Z.tail.sign.kind is Sign.ZERO


def test_multiply_examples(rng):
    T = random_op(rng, 3)
    assert same(multiply(T, identity()), T)
    D = diagonal([(1, 1, 1)])
    D2 = multiply(D, D)
    assert D2.tail.expr.coeffs == ((1.0, 1.0, 2.0),)
    assert D2.tail.envelope.terms == (EnvelopeTerm(1.0, 1.0, 2.0),)


def test_algebra_matches_dense(rng):
    for _ in range(20):
        S, T = random_op(rng), random_op(rng)
        M = max(S.block_size, T.block_size) + 6
        s, t = truncate(S, M), truncate(T, M)
        c = complex(rng.standard_normal(), rng.standard_normal())
        assert np.abs(truncate(add(S, T), M) - (s + t)).max() <= 1e-12
        assert np.abs(truncate(scale(c, S), M) - c * s).max() <= 1e-12
        # block-diagonal splitting makes truncated products exact
        assert np.abs(truncate(multiply(S, T), M) - s @ t).max() <= 1e-9
        assert np.abs(truncate(adjoint(S), M) - s.conj().T).max() <= 1e-12
        assert np.abs(truncate(adjoint(multiply(S, T)), M)
                      - truncate(multiply(adjoint(T), adjoint(S)), M)).max() <= 1e-12


def test_adjoint_examples(rng):
    assert same(adjoint(identity(1j)), identity(-1j))
    for _ in range(50):
        T = random_op(rng)
        TT = adjoint(adjoint(T))
        assert TT.scalar == T.scalar and np.array_equal(TT.block, T.block)
        assert TT.tail.expr == T.tail.expr


def test_power():
    D = diagonal([(1, 1, 1)], 1.0)
    assert same(power(D, 3), multiply(D, multiply(D, D)))


def test_apply(rng):
    x = FinVector({1: 1, 4: 2j, 9: -1})
    assert apply(identity(), x) == x
    assert apply(diagonal([(1, 1, 1)]), FinVector.basis(3)).coords == {3: 1 / 3}
    for _ in range(50):
        T = random_op(rng)
        x = FinVector.from_array(rng.standard_normal(10) + 1j * rng.standard_normal(10))
        M = max(T.block_size, 10)
        assert np.abs(apply(T, x).to_array(M) - truncate(T, M) @ x.to_array(M)).max() <= 1e-12


def test_tail_is_reducing(rng):
    for _ in range(20):
        T = random_op(rng)
        for n in range(T.block_size + 1, T.block_size + 6):
            assert apply(T, FinVector.basis(n)).support in ([n], [])


def test_tail_cutoff_examples():
    assert tail_cutoff(finite_block(np.eye(3)), 1e-3) == 3
    assert tail_cutoff(diagonal([(1, 0.5, 0)]), 1e-3) == 9
    assert tail_cutoff(diagonal([(1, 1, 1)]), 0.01) == 100


def test_rank_one_and_replace_entry():
    u, v = FinVector({1: 1.0, 3: 2.0}), FinVector.basis(2)
    R = rank_one(u, v, 2.0)
    assert np.allclose(truncate(R, 3), 2 * np.outer(u.to_array(3), v.to_array(3)))
    Z = replace_entry(diagonal([(-1, 1, 2)], 1.0), 5, 1.0)
    d = truncate(Z, 8).diagonal()
    assert d[4] == 1.0 and np.isclose(d[5], 1 - 1 / 36)


def test_finvector_ops():
    x = FinVector({2: 3.0, 5: 4.0})
    assert x.norm() == 5.0
    assert x.normalized().norm() == pytest.approx(1.0)
    assert x.inner(FinVector.basis(2, 1j)) == pytest.approx(-3j)
    with pytest.raises(ValueError):
        FinVector({0: 1.0})
