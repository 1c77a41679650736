"""Explicit maximisers for commutator-type norms.

* :func:`maximizer_single` -- ``X`` with ``||E X - X E|| = 2 ||E||`` built from a
  norming vector ``zeta`` with ``<E zeta, zeta> = 0``.
* :func:`maximizer_pair` -- ``X`` with ``||S X - X T|| = ||S|| + ||T||`` when the
  normalised numerical values at the norming vectors are opposite.
* :func:`maximizer_sandwich` -- ``X = <., T eta> zeta`` giving
  ``||S X T|| = ||S|| ||T||``.

Hyponormal operators in this class have a normal block, so the top singular
space is spanned by orthonormal eigenvectors ``v_i`` with ``|lambda_i| = ||E||``
and ``<E z, z> = sum |a_i|^2 lambda_i`` for ``z = sum a_i v_i``.  Choosing a
norming vector with a prescribed value of ``<E z, z>`` is then a small linear
feasibility problem over the convex hull of the ``lambda_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .an import classify
from .errors import (NormNotAttained, PhaseConditionFailed,
                     PreconditionFailed)
from .oracle import truncate
from .spectral import operator_norm
from .structured import (DEFAULT_TOL, FinVector, StructuredOperator, add,
                         apply, make_operator, multiply, scale)


@dataclass(frozen=True)
class Witness:
    vector: FinVector
    value: complex


@dataclass(frozen=True)
class MaximizerReport:
    X: StructuredOperator
    achieved: float
    target: float
    witnesses: list
    case: str = ""
    error_bound: float = 0.0
    partial_isometry_defect: float | None = None

    @property
    def gap(self):
        return abs(self.achieved - self.target)


def outer(u: FinVector, v: FinVector, c=1.0) -> StructuredOperator:
    """Finite-rank ``x -> c <x, v> u``."""
    n = max(u.max_index, v.max_index, 1)
    return make_operator(0.0, c * np.outer(u.to_array(n), v.to_array(n).conj()))


def _numerical_value(E, x: FinVector):
    return apply(E, x).inner(x)


def _norming(E, tol):
    res = operator_norm(E, tol)
    if not res.attainment.yes:
        raise NormNotAttained(f"norm {res.value:.6g} is not certified as attained")
    return res


def top_eigendata(E: StructuredOperator, tol=DEFAULT_TOL):
    """Orthonormal eigenpairs ``(lambda, v)`` spanning the norming space of normal ``E``."""
    res = _norming(E, tol)
    nrm = res.value
    pairs = []
    if E.block_size:
        R, Z = scipy.linalg.schur(E.dense_block(), output="complex")
        lam = np.diagonal(R)
        for i in np.flatnonzero(np.abs(lam) >= nrm - tol):
            pairs.append((complex(lam[i]), FinVector.from_array(Z[:, i])))
    w = res.attainment.witness
    if w.max_index > E.block_size:
        n = w.max_index
        pairs.append((E.diagonal_entry(n), FinVector.basis(n)))
    if not pairs:
        pairs.append((_numerical_value(E, w), w))
    return nrm, pairs


def _convex_weights(points, target, tol):
    """Weights ``w >= 0`` summing to 1 with ``sum w_i points_i = target`` (or None)."""
    points = np.asarray(points, dtype=complex)
    for i, p in enumerate(points):
        if abs(p - target) <= tol:
            w = np.zeros(len(points))
            w[i] = 1.0
            return w
    A = np.vstack([points.real, points.imag, np.ones(len(points))])
    b = np.array([target.real, target.imag, 1.0])
    sol = linprog(np.zeros(len(points)), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    return sol.x if sol.status == 0 else None


def _combine(pairs, weights):
    vec = FinVector({})
    for (_, v), w in zip(pairs, weights):
        if w > 0:
            vec = vec + v.scaled(np.sqrt(w))
    return vec.normalized()


def maximizer_single(E: StructuredOperator, tol=DEFAULT_TOL, zeta: FinVector | None = None):
    """``X = zeta (x) zeta - (E zeta (x) E zeta)/||E zeta||^2`` with ``||EX - XE|| = 2||E||``."""
    if not classify(E, tol).hyponormal:
        raise PreconditionFailed("E is not hyponormal")
    if zeta is None:
        nrm, pairs = top_eigendata(E, tol)
        if nrm == 0:
            zeta = FinVector.basis(1)
        else:
            w = _convex_weights([lam for lam, _ in pairs], 0j, tol)
            if w is None:
                raise PreconditionFailed("no norming vector with <E zeta, zeta> = 0")
            zeta = _combine(pairs, w)
    else:
        nrm = _norming(E, tol).value
        zeta = zeta.normalized()
    Ez = apply(E, zeta)
    q = Ez.inner(zeta)
    if abs(Ez.norm() - nrm) > tol:
        raise PreconditionFailed("zeta is not a norming vector")
    if abs(q) > tol:
        raise PreconditionFailed(f"<E zeta, zeta> = {q:.3g} is not 0")
    X = outer(zeta, zeta)
    if nrm > 0:
        X = add(X, outer(Ez, Ez, -1.0 / Ez.norm() ** 2))
    comm = operator_norm(add(multiply(E, X), scale(-1, multiply(X, E))), tol)
    return MaximizerReport(X, comm.value, 2 * nrm, [Witness(zeta, q)], "single", comm.error_bound)


def maximizer_pair(S: StructuredOperator, T: StructuredOperator, tol=DEFAULT_TOL,
                   zeta: FinVector | None = None, eta: FinVector | None = None):
    """``X`` with ``||S X - X T|| = ||S|| + ||T||`` under the phase condition
    ``<S zeta, zeta>/||S|| = -<T eta, eta>/||T||``."""
    for name, op in (("S", S), ("T", T)):
        if not classify(op, tol).hyponormal:
            raise PreconditionFailed(f"{name} is not hyponormal")
    if zeta is None or eta is None:
        nS, pS = top_eigendata(S, tol)
        nT, pT = top_eigendata(T, tol)
        if nS == 0 or nT == 0:
            raise PhaseConditionFailed("phase condition is undefined for a zero operator")
        zeta, eta = _phase_matched(pS, nS, pT, nT, tol)
    else:
        nS, nT = _norming(S, tol).value, _norming(T, tol).value
        if nS == 0 or nT == 0:
            raise PhaseConditionFailed("phase condition is undefined for a zero operator")
        zeta, eta = zeta.normalized(), eta.normalized()
    Sz, Te = apply(S, zeta), apply(T, eta)
    if abs(Sz.norm() - nS) > tol or abs(Te.norm() - nT) > tol:
        raise NormNotAttained("supplied witnesses are not norming vectors")
    qS, qT = Sz.inner(zeta) / nS, Te.inner(eta) / nT
    if abs(qS + qT) > tol:
        raise PhaseConditionFailed(f"<S zeta,zeta>/||S|| = {qS:.6g} but -<T eta,eta>/||T|| = {-qT:.6g}")
    rest = Te.scaled(1 / nT) - eta.scaled(qT)
    tau = rest.norm()
    if tau <= tol:
        case = "dependent"
        X = outer(zeta, eta)
    else:
        case = "independent"
        h = rest.scaled(1 / tau)
        Xh = (Sz.scaled(-1 / nS) - zeta.scaled(qT)).scaled(1 / tau)
        X = add(outer(zeta, eta), outer(Xh, h))
    comm = operator_norm(add(multiply(S, X), scale(-1, multiply(X, T))), tol)
    m = max(X.block_size, 1)
    Xd = truncate(X, m)
    defect = float(np.linalg.norm(Xd @ Xd.conj().T @ Xd - Xd, 2))
    return MaximizerReport(X, comm.value, nS + nT,
                           [Witness(zeta, qS * nS), Witness(eta, qT * nT)],
                           case, comm.error_bound, defect)


def _phase_matched(pS, nS, pT, nT, tol):
    mu = np.array([lam / nS for lam, _ in pS])
    nu = np.array([-lam / nT for lam, _ in pT])
    # prefer a single pair of eigenvectors (dependent case)
    for i, m in enumerate(mu):
        for j, n in enumerate(nu):
            if abs(m - n) <= tol:
                return pS[i][1], pT[j][1]
    k, l = len(mu), len(nu)
    A = np.vstack([
        np.concatenate([mu.real, -nu.real]),
        np.concatenate([mu.imag, -nu.imag]),
        np.concatenate([np.ones(k), np.zeros(l)]),
        np.concatenate([np.zeros(k), np.ones(l)]),
    ])
    b = np.array([0.0, 0.0, 1.0, 1.0])
    sol = linprog(np.zeros(k + l), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if sol.status != 0:
        raise PhaseConditionFailed("numerical ranges of the norming spaces do not meet")
    w = np.clip(sol.x, 0, None)
    return _combine(pS, w[:k] / w[:k].sum()), _combine(pT, w[k:] / w[k:].sum())


def maximizer_sandwich(S: StructuredOperator, T: StructuredOperator, tol=DEFAULT_TOL,
                       zeta: FinVector | None = None, eta: FinVector | None = None):
    """``X = <., T eta> zeta / ||T eta||`` so that ``||S X T|| = ||S|| ||T||``."""
    rS, rT = _norming(S, tol), _norming(T, tol)
    zeta = (zeta or rS.attainment.witness).normalized()
    eta = (eta or rT.attainment.witness).normalized()
    Te = apply(T, eta)
    if Te.norm() == 0:
        X = outer(zeta, eta)
    else:
        X = outer(zeta, Te, 1.0 / Te.norm())
    res = operator_norm(multiply(multiply(S, X), T), tol)
    return MaximizerReport(X, res.value, rS.value * rT.value,
                           [Witness(zeta, apply(S, zeta).norm()), Witness(eta, Te.norm())],
                           "sandwich", res.error_bound)
