"""Norm-attaining perturbations of contractions.

Given ``S`` (normalised to ``||S|| = 1``) and ``0 < alpha < 2``,
:func:`attainify` produces ``Z`` with ``||Z|| = ||S||``, ``||S - Z|| < alpha``
and a unit ``eta`` with ``||Z eta|| = ||Z||`` and ``<Z eta, eta> = beta``.

The spectral slicing of ``L = |S|`` at ``1 - alpha/2`` and the flattened
operator ``J = L P_gamma + P_rho`` are exposed separately.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .commutator import Witness
from .errors import (BetaOutsideEssentialRange, NotPositive, NoWitnessFound,
                     PreconditionFailed, SignUndecidable, SpectraError)
from .spectral import (_block_eigh, is_self_adjoint, operator_norm,
                       sa_extremes)
from .an import is_norm_attaining
from .structured import (DEFAULT_TOL, FinVector, StructuredOperator, add,
                         apply, identity, make_operator, multiply, promote,
                         replace_entry, scale, tail_cutoff)
from .tails import ZERO_RULE, Sign

#: How many far-tail indices attainify tries before giving up.
MAX_CANDIDATES = 16


class EmptyTopSlice(UserWarning):
    """The top slice ``(1 - alpha/2, 1]`` of ``|S|`` is empty, so ``||J|| < 1``."""


@dataclass(frozen=True)
class SliceProjections:
    P_gamma: StructuredOperator
    P_rho: StructuredOperator


@dataclass(frozen=True)
class PerturbationCertificate:
    Z: StructuredOperator
    eta: Witness
    norm_preserved: float
    distance: float
    beta_achieved: complex
    scale: float = 1.0
    index: int | None = None


def _check_alpha(alpha):
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")


def _require_positive_contraction(L, tol):
    if not is_self_adjoint(L, tol):
        raise NotPositive("L is not self-adjoint")
    (lo, _), (hi, _) = sa_extremes(L, tol)
    if lo < -tol:
        raise NotPositive(f"spectrum of L reaches {lo:.3e}")
    if hi > 1 + tol:
        raise PreconditionFailed(f"||L|| = {hi:.6g} exceeds 1")


def _settle_cut(L, cut):
    """Promote ``L`` until every tail entry is on a fixed side of ``cut``.

    Returns ``(promoted, top)`` where ``top`` says the tail belongs to the
    upper slice.  Entries equal to the cut go to the lower slice.
    """
    s = L.scalar.real
    env = L.tail.envelope
    N = L.block_size
    margin = cut - s
    if env.is_zero:
        return L, margin < 0
    if margin != 0:
        n0 = env.first_below(abs(margin), N + 1)
        return promote(L, max(N, n0 - 1)), margin < 0
    tag = L.tail.sign
    if tag.kind in (Sign.NONPOS, Sign.ZERO):
        return promote(L, max(N, tag.start - 1)), False
    if tag.kind is Sign.NONNEG and tag.strict:
        return promote(L, max(N, tag.start - 1)), True
    raise SignUndecidable("tail entries oscillate around the cut")


def slice_projections(L: StructuredOperator, alpha: float, tol=DEFAULT_TOL) -> SliceProjections:
    """Spectral projections of positive ``L`` for ``[0, 1 - alpha/2]`` and ``(1 - alpha/2, 1]``.

    Eigenvalues within ``tol`` of the cut go to the lower slice.
    """
    _check_alpha(alpha)
    _require_positive_contraction(L, tol)
    L = make_operator(L.scalar.real, (L.block + L.block.conj().T) / 2, L.tail)
    P, top = _settle_cut(L, 1 - alpha / 2 + tol)
    w, V, _ = _block_eigh(P.dense_block())
    up = w > 1 - alpha / 2 + tol
    Vr = V[:, up]
    Br = Vr @ Vr.conj().T
    n = P.block_size
    if top:
        rho = make_operator(1.0, Br - np.eye(n), ZERO_RULE)
    else:
        rho = make_operator(0.0, Br, ZERO_RULE)
    return SliceProjections(add(identity(), scale(-1, rho)), rho)


def flatten_top(L: StructuredOperator, alpha: float, tol=DEFAULT_TOL) -> StructuredOperator:
    """``J = L P_gamma + P_rho``: ``L`` with its top slice pushed up to 1."""
    sp = slice_projections(L, alpha, tol)
    J = add(multiply(L, sp.P_gamma), sp.P_rho)
    gap = operator_norm(add(J, scale(-1, L)), tol).value
    if gap > alpha / 2 + tol:
        raise SpectraError(f"||J - L|| = {gap:.6g} exceeds alpha/2")
    if operator_norm(sp.P_rho, tol).value == 0:
        warnings.warn("top slice is empty; ||J|| < 1", EmptyTopSlice, stacklevel=2)
    elif abs(operator_norm(J, tol).value - 1) > tol:
        raise SpectraError("||J|| differs from 1")
    return J


def _certify(S1, Z, eta, beta, alpha, tol, index=None, norm=1.0):
    """Check every certificate field; ``None`` if one fails."""
    nz = operator_norm(Z, tol)
    Ze = apply(Z, eta)
    q = Ze.inner(eta)
    dist = operator_norm(add(S1, scale(-1, Z)), tol).value
    ok = (abs(nz.value - 1) <= tol and dist < alpha and
          Ze.norm() >= nz.value - tol and abs(q - beta) <= tol)
    if not ok:
        return None
    return PerturbationCertificate(Z, Witness(eta, complex(q)), nz.value, dist, complex(q), norm, index)


def attainify(S: StructuredOperator, alpha: float, beta=None, tol=DEFAULT_TOL) -> PerturbationCertificate:
    """Norm-attaining ``Z`` within ``alpha`` of ``S / ||S||`` with ``<Z eta, eta> = beta``.

    All certificate quantities refer to the normalised operator; ``scale``
    records ``||S||`` so that ``scale * Z`` approximates ``S`` itself.
    """
    _check_alpha(alpha)
    nrm = operator_norm(S, tol).value
    if nrm == 0:
        raise NoWitnessFound("S = 0 has no normalisation")
    S1 = scale(1 / nrm, S)
    s = S1.scalar
    beta = s if beta is None else complex(beta)
    if abs(beta - s) > tol:
        raise BetaOutsideEssentialRange(f"beta = {beta} but the essential numerical range is {{{s}}}")
    att = is_norm_attaining(S1, tol)
    if att.yes and att.witness is not None:
        cert = _certify(S1, S1, att.witness.normalized(), beta, alpha, tol, norm=nrm)
        if cert is not None:
            return cert
    if abs(abs(s) - 1) > tol:
        raise NoWitnessFound(f"|s| = {abs(s):.6g} < 1 and S attains no norm at beta")
    first = tail_cutoff(S1, alpha / 2) + 1
    for n in range(first, first + MAX_CANDIDATES):
        Z = replace_entry(S1, n, beta)
        cert = _certify(S1, Z, FinVector.basis(n), beta, alpha, tol, n, nrm)
        if cert is not None:
            return cert
    raise NoWitnessFound(f"no admissible index in [{first}, {first + MAX_CANDIDATES})")
