import numpy as np
import pytest

from conftest import hermitian_op, random_op
from spectrakit.errors import NotInvertible, NotSelfAdjoint
from spectrakit.oracle import dense_norm, jacobi_eigh, truncate
from spectrakit.spectral import (Verdict, essential_min_modulus, invert,
                                 min_modulus, modulus, operator_norm, polar,
                                 pos_neg_parts, spectrum_sa, sqrt_positive)
from spectrakit.structured import (FinVector, add, adjoint, apply, diagonal,
                                   finite_block, identity, make_operator,
                                   multiply, scale, tail_cutoff)

HARM = [(1, 1, 1)]


def dist(S, T, M=40):
    return np.abs(truncate(S, M) - truncate(T, M)).max()


def test_spectrum_examples():
    sp = spectrum_sa(identity(2.0))
    assert sp.eigenvalues == [] and sp.essential_points == [2.0] and sp.cluster_radius == 0
    sp = spectrum_sa(diagonal(HARM))
    assert [p.value for p in sp.eigenvalues[:3]] == [1.0, 0.5, 1 / 3]
    assert sp.eigenvalues[2].witness == FinVector.basis(3)
    assert sp.essential_points == [0.0]
    sp = spectrum_sa(finite_block([[0, 1], [1, 0]], 2.0))
    assert np.allclose([p.value for p in sp.eigenvalues], [1, 3]) and sp.essential_points == [2.0]
    assert sp.is_countable()
    with pytest.raises(NotSelfAdjoint):
        spectrum_sa(identity(1j))


def test_spectrum_contains_dense_eigenvalues(rng):
    for _ in range(10):
        T = hermitian_op(rng)
        sp = spectrum_sa(T, 1e-9)
        M = tail_cutoff(T, 1e-9) + 5
        w, _, off = jacobi_eigh(truncate(T, M))
        assert all(sp.contains(x, off + 1e-12) for x in w)
        for p in sp.eigenvalues[:T.block_size]:
            r = apply(T, p.witness) - p.witness.scaled(p.value)
            assert r.norm() <= p.error_radius + 1e-15


def test_norm_examples():
    z = operator_norm(make_operator(0))
    assert (z.value, z.attainment.status) == (0.0, Verdict.YES)
    r = operator_norm(diagonal(HARM))
    assert r.value == 1.0 and r.error_bound <= 1e-9 and r.attainment.witness == FinVector.basis(1)
    r = operator_norm(diagonal(HARM, -1.0))
    assert r.value == 1.0 and r.attainment.status is Verdict.NO


def test_min_modulus_examples():
    assert min_modulus(identity())[0] == 1.0
    assert min_modulus(diagonal(HARM))[0] == 0.0
    assert min_modulus(diagonal([(-1, 1, 1)], 2.0))[0] == pytest.approx(1.0, abs=1e-15)
    assert essential_min_modulus(identity()) == 1.0
    assert essential_min_modulus(diagonal(HARM)) == 0.0
    assert essential_min_modulus(diagonal(HARM, 0.5)) == 0.5


def test_modulus_examples():
    assert dist(modulus(identity(-1.0)), identity()) == 0
    assert dist(modulus(diagonal([(-1, 1, 1)])), diagonal(HARM)) <= 1e-15
    assert np.allclose(truncate(modulus(finite_block([[0, 1], [0, 0]])), 2), np.diag([0, 1]))


def test_modulus_matches_dense(rng):
    for _ in range(20):
        T = random_op(rng)
        M = T.block_size + 30
        t = truncate(T, M)
        w, V = np.linalg.eigh(t.conj().T @ t)
        ref = (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T
        assert np.abs(truncate(modulus(T), M) - ref).max() <= 1e-9


def test_pos_neg_examples(rng):
    P, N = pos_neg_parts(finite_block(np.diag([1.0, -2.0])))
    assert np.allclose(truncate(P, 2), np.diag([1, 0])) and np.allclose(truncate(N, 2), np.diag([0, 2]))
    P, N = pos_neg_parts(identity(-1.0))
    assert dist(P, make_operator(0)) == 0 and dist(N, identity()) == 0
    P, N = pos_neg_parts(diagonal([(-1, 1, 1)], 0.5))
    assert np.allclose(truncate(N, 30), np.diag([0.5] + [0] * 29))
    for _ in range(20):
        T = hermitian_op(rng)
        P, N = pos_neg_parts(T)
        assert dist(add(P, scale(-1, N)), T) <= 1e-9
        assert operator_norm(multiply(P, N)).value <= 1e-9


def test_polar_examples(rng):
    pp = polar(identity())
    assert dist(pp.V, identity()) == 0 and dist(pp.modulus, identity()) == 0
    assert dist(polar(identity(-1.0)).V, identity(-1.0)) == 0
    T = make_operator(1.0, np.diag([-2.0, 1.0]))
    pp = polar(T)
    assert np.allclose(truncate(pp.V, 4), np.diag([-1, 1, 1, 1]))
    assert np.allclose(truncate(pp.modulus, 4), np.diag([1, 2, 1, 1]))
    for _ in range(20):
        T = random_op(rng)
        pp = polar(T)
        assert operator_norm(add(multiply(pp.V, pp.modulus), scale(-1, T))).value <= 1e-9
        v = truncate(pp.V, pp.V.block_size + 20)
        G = v.conj().T @ v
        assert np.abs(G @ G - G).max() <= 1e-8


def test_invert_examples(rng):
    assert dist(invert(identity()), identity()) == 0
    assert dist(invert(identity(2.0)), identity(0.5)) == 0
    T = diagonal([(-1, 1, 1)], 2.0)
    Ti = invert(T)
    n = np.arange(1, 41)
    assert np.abs(truncate(Ti, 40).diagonal() - 1 / (2 - 1 / n)).max() <= 1e-9
    with pytest.raises(NotInvertible):
        invert(diagonal(HARM))
    with pytest.raises(NotInvertible):
        invert(diagonal([(-1, 1, 1)], 1.0))


def test_sqrt_positive(rng):
    T = diagonal([(1, 0.5, 0)], 1.0)
    R = sqrt_positive(T)
    assert dist(multiply(R, R), T) <= 1e-12
    R = sqrt_positive(diagonal(HARM))
    assert np.allclose(truncate(R, 10).diagonal(), 1 / np.sqrt(np.arange(1, 11)))


def test_min_modulus_identities(rng):
    """m(T) = m(|T|), m(T*) = m(T) and m(T)^2 = min sigma(T*T) for random T."""
    for _ in range(50):
        T = random_op(rng)
        m, err = min_modulus(T)
        assert abs(m - min_modulus(modulus(T))[0]) <= err + 1e-9
        TT = multiply(adjoint(T), T)
        sp = spectrum_sa(TT)
        lo = min([p.value for p in sp.eigenvalues] + sp.essential_points)
        assert abs(lo - m * m) <= 1e-9 * max(1, m)


def test_norm_against_dense(rng):
    for _ in range(30):
        T = random_op(rng)
        r = operator_norm(T)
        M = tail_cutoff(T, 1e-10) + 2
        dn, rad = dense_norm(truncate(T, M), with_radius=True)
        assert abs(r.value - dn) <= 1e-9 + 2 * rad
