"""Brute-force dense numerics on finite sections.

Everything here works on plain ``numpy`` arrays and is deliberately
independent of the structured code paths: eigenvalues come from a cyclic
Jacobi iteration written out below, not from LAPACK.  The test-suite uses
these routines as the reference every structured result is checked against.
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergence, NotHermitian

JACOBI_THRESHOLD = 1e-12
MAX_SWEEPS = 60


def truncate(T, M: int) -> np.ndarray:
    """Finite section ``[<T e_j, e_i>]_{i,j <= M}``."""
    if M < 1:
        raise ValueError("dimension must be >= 1")
    N = T.block_size
    out = np.zeros((M, M), dtype=complex)
    k = min(M, N)
    out[:k, :k] = T.block[:k, :k]
    if M > N:
        idx = np.arange(N + 1, M + 1)
        out[idx - 1, idx - 1] = T.tail(idx)
    out[np.diag_indices(M)] += T.scalar
    return out


def _round_robin(n):
    """Pairings of ``0..n-1`` into disjoint pairs, covering every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _offdiag(A):
    B = A.copy()
    np.fill_diagonal(B, 0)
    return float(np.linalg.norm(B))


def jacobi_eigh(M, threshold=JACOBI_THRESHOLD, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi for a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors, offdiag)`` with eigenvalues ascending
    and eigenvectors as columns.  ``offdiag`` is the Frobenius norm of what is
    left off the diagonal; by Weyl's inequality every eigenvalue is within it
    of the returned value.
    """
    A = np.array(M, dtype=complex)
    n = A.shape[0]
    scale = max(1.0, float(np.linalg.norm(A)))
    if np.linalg.norm(A - A.conj().T) > 1e-12 * scale:
        raise NotHermitian("matrix is not Hermitian")
    A = (A + A.conj().T) / 2
    V = np.eye(n, dtype=complex)
    rounds = _round_robin(n)
    off = _offdiag(A)
    sweeps = 0
    while off > threshold * scale:
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
        for P, Q in rounds:
            apq = A[P, Q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not active.any():
                continue
            safe = np.where(active, mag, 1.0)
            ph = np.where(active, apq / safe, 1.0)
            tau = (A[Q, Q].real - A[P, P].real) / (2 * safe)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1 + tau * tau))
            t = np.where(active, t, 0.0)
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            phc = ph.conj()
            # A <- A J, V <- V J
            for X in (A, V):
                Xp, Xq = X[:, P].copy(), X[:, Q].copy()
                X[:, P] = Xp * c - Xq * (s * phc)
                X[:, Q] = Xp * s + Xq * (c * phc)
            # A <- J^* A
            Ap, Aq = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = c[:, None] * Ap - (s * ph)[:, None] * Aq
            A[Q, :] = s[:, None] * Ap + (c * ph)[:, None] * Aq
        idx = np.arange(n)
        A[idx, idx] = A[idx, idx].real
        off = _offdiag(A)
        sweeps += 1
    w = np.diagonal(A).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], off


def dense_sym_eig(M, tol=1e-9):
    """List of ``(eigenvalue, eigenvector, error_radius)`` in ascending order."""
    w, V, off = jacobi_eigh(M)
    return [(float(w[i]), V[:, i], off) for i in range(len(w))]


def dense_svd(M, tol=1e-9):
    """Singular triplets ``(sigma, u, v)`` with ``M v = sigma u``, descending.

    Right vectors from Jacobi on ``M* M``; left vectors by back-substitution,
    then re-orthonormalised.  Left vectors for ``sigma <= tol`` are completed
    to an orthonormal set.
    """
    M = np.asarray(M, dtype=complex)
    w, V, _ = jacobi_eigh(M.conj().T @ M)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    sig = np.sqrt(np.clip(w, 0, None))
    U = np.zeros_like(V)
    good = sig > tol
    U[:, good] = (M @ V[:, good]) / sig[good]
    if good.any():
        Q, R = np.linalg.qr(U[:, good])
        U[:, good] = Q * np.sign(np.diagonal(R).real + (np.diagonal(R).real == 0))
    if (~good).any():
        # complete with an orthonormal basis of the complement
        basis = U[:, good]
        rest = []
        for e in np.eye(M.shape[0], dtype=complex):
            v = e - basis @ (basis.conj().T @ e) if basis.size else e.copy()
            for r in rest:
                v = v - r * (r.conj() @ v)
            if np.linalg.norm(v) > 1e-8:
                rest.append(v / np.linalg.norm(v))
            if len(rest) == (~good).sum():
                break
        U[:, ~good] = np.array(rest).T
    return [(float(sig[i]), U[:, i], V[:, i]) for i in range(len(sig))]


def dense_norm(M, with_radius=False):
    """Largest singular value, via Jacobi on ``M* M``."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return (0.0, 0.0) if with_radius else 0.0
    w, _, off = jacobi_eigh(M.conj().T @ M)
    top = max(float(w[-1]), 0.0)
    val = float(np.sqrt(top))
    if not with_radius:
        return val
    # |sqrt(a) - sqrt(b)| <= |a - b| / sqrt(b) when b > 0
    rad = off / val if val > 0 else float(np.sqrt(off))
    return val, rad


def dense_min_singular(M):
    M = np.asarray(M, dtype=complex)
    w, _, _ = jacobi_eigh(M.conj().T @ M)
    return float(np.sqrt(max(float(w[0]), 0.0)))


def dense_kernel(M, tol=1e-9):
    """Orthonormal basis (columns) of ``{v : ||M v|| <= tol}``."""
    M = np.asarray(M, dtype=complex)
    w, V, _ = jacobi_eigh(M.conj().T @ M)
    keep = np.sqrt(np.clip(w, 0, None)) <= tol
    return V[:, keep]
