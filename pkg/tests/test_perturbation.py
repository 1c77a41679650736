import numpy as np
import pytest

from spectrakit.errors import BetaOutsideEssentialRange, NotPositive
from spectrakit.generators import positive_contraction
from spectrakit.oracle import dense_norm, truncate
from spectrakit.perturbation import (EmptyTopSlice, attainify, flatten_top,
                                     slice_projections)
from spectrakit.spectral import operator_norm
from spectrakit.structured import (FinVector, add, diagonal, finite_block,
                                   identity, scale)

L4 = np.diag([1.0, 0.9, 0.5, 0.1])


def test_slices_of_identity():
    sp = slice_projections(identity(), 0.4)
    assert np.array_equal(truncate(sp.P_rho, 4), np.eye(4))
    assert np.array_equal(truncate(sp.P_gamma, 4), np.zeros((4, 4)))
    assert np.array_equal(truncate(flatten_top(identity(), 0.4), 4), np.eye(4))


def test_slice_example():
    L = finite_block(L4)
    sp = slice_projections(L, 0.4)
    assert np.allclose(truncate(sp.P_rho, 6), np.diag([1, 1, 0, 0, 0, 0]))
    J = flatten_top(L, 0.4)
    assert np.allclose(truncate(J, 6), np.diag([1, 1, 0.5, 0.1, 0, 0]))
    assert operator_norm(add(J, scale(-1, L))).value == pytest.approx(0.1, abs=1e-12)


def test_slice_properties(rng):
    for _ in range(20):
        L = positive_contraction(rng)
        sp = slice_projections(L, 0.3)
        M = max(sp.P_rho.block_size, L.block_size) + 5
        g, r = truncate(sp.P_gamma, M), truncate(sp.P_rho, M)
        for P in (g, r):
            assert np.abs(P @ P - P).max() <= 1e-10
            assert np.abs(P - P.conj().T).max() <= 1e-10
        assert np.abs(g @ r).max() <= 1e-10
        assert np.abs(g + r - np.eye(M)).max() <= 1e-12


def test_tail_crossing_the_cut():
    L = diagonal([(-0.5, 1, 1)], 1.0)
    sp = slice_projections(L, 0.4)
    assert np.allclose(truncate(sp.P_rho, 6).diagonal(), [0, 0, 1, 1, 1, 1])


def test_empty_top_slice_warns():
    with pytest.warns(EmptyTopSlice):
        flatten_top(finite_block(np.diag([0.5, 0.1])), 0.4)


def test_not_positive():
    with pytest.raises(NotPositive):
        slice_projections(finite_block(np.diag([1.0, -0.5])), 0.4)


def test_attainify_example():
    S = diagonal([(-1, 1, 2)], 1.0)
    c = attainify(S, 0.1, 1.0)
    assert c.index == 5 and c.eta.vector == FinVector.basis(5)
    assert c.distance == pytest.approx(0.04, abs=1e-15)
    assert c.beta_achieved == 1.0 and c.norm_preserved == pytest.approx(1.0)
    M = 40
    z, s = truncate(c.Z, M), truncate(S, M)
    assert dense_norm(s - z) == pytest.approx(0.04, abs=1e-12)
    assert z[4, 4] == 1.0


def test_attainify_trivial_and_errors():
    c = attainify(identity(), 0.1)
    assert c.distance == 0 and c.index is None
    with pytest.raises(BetaOutsideEssentialRange):
        attainify(diagonal([(-1, 1, 2)], 1.0), 0.1, beta=0.0)


def test_attainify_monotone_in_index():
    S = diagonal([(-1, 1, 2)], 1.0)
    dists = [attainify(S, a).distance for a in (0.5, 0.2, 0.1, 0.05)]
    assert dists == sorted(dists, reverse=True)
