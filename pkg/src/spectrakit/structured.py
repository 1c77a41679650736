"""Operators of the form ``scalar*I + dense block + diagonal tail`` on l2.

A :class:`StructuredOperator` acts on the canonical basis ``e_1, e_2, ...`` as

* ``T e_j = alpha e_j + sum_i B[i, j] e_i`` for ``j <= N`` (the block),
* ``T e_n = (alpha + d_n) e_n`` for ``n > N`` (the tail),

so the block and the tail are exactly reducing subspaces.  Indices are
1-based throughout, as in the maths; the block array is 0-based internally.
The class is closed under sums, products and adjoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PromotionLimit
from .tails import (ZERO_RULE, TailRule, rule_add, rule_conj, rule_mul,
                    rule_scale, terms_rule)

DEFAULT_TOL = 1e-9
#: Largest dense block any certified split is allowed to build.
MAX_BLOCK = 4096


@dataclass(frozen=True)
class FinVector:
    """Finitely supported vector in l2, stored as ``{index: value}``."""

    coords: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): complex(v) for k, v in dict(self.coords).items() if v != 0}
        if any(k < 1 for k in clean):
            raise ValueError("indices are 1-based")
        object.__setattr__(self, "coords", clean)

    @classmethod
    def basis(cls, n, value=1.0):
        return cls({n: value})

    @classmethod
    def from_array(cls, values, offset=1):
        return cls({i + offset: v for i, v in enumerate(np.asarray(values).ravel()) if v != 0})

    @property
    def support(self):
        return sorted(self.coords)

    @property
    def max_index(self):
        return max(self.coords, default=0)

    def norm(self):
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.coords.values())))

    def to_array(self, size=None):
        size = self.max_index if size is None else size
        out = np.zeros(size, dtype=complex)
        for k, v in self.coords.items():
            if k > size:
                raise ValueError(f"index {k} outside dimension {size}")
            out[k - 1] = v
        return out

    def inner(self, other):
        """``<self, other>``, linear in the first slot."""
        return sum(v * other.coords.get(k, 0).conjugate() for k, v in self.coords.items())

    def scaled(self, c):
        return FinVector({k: c * v for k, v in self.coords.items()})

    def normalized(self):
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalise the zero vector")
        return self.scaled(1.0 / nrm)

    def __add__(self, other):
        out = dict(self.coords)
        for k, v in other.coords.items():
            out[k] = out.get(k, 0) + v
        return FinVector(out)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def to_json(self):
        return [[k, v.real, v.imag] for k, v in sorted(self.coords.items())]


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StructuredOperator:
    scalar: complex
    block: np.ndarray
    tail: TailRule

    @property
    def block_size(self):
        return self.block.shape[0]

    def dense_block(self):
        """The block as it acts: ``alpha I_N + B``."""
        return self.scalar * np.eye(self.block_size) + self.block

    def tail_values(self, n):
        """``alpha + d_n`` for tail indices ``n``."""
        return self.scalar + self.tail(np.asarray(n))

    def diagonal_entry(self, n):
        n = int(n)
        if n <= self.block_size:
            return self.scalar + self.block[n - 1, n - 1]
        return complex(self.tail_values(n))

    def __repr__(self):
        return (f"StructuredOperator(scalar={self.scalar!r}, block_size={self.block_size}, "
                f"tail={self.tail.expr.describe()})")

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(-1, other))

    def __neg__(self):
        return scale(-1, self)

    def __matmul__(self, other):
        return multiply(self, other)

    def __rmul__(self, c):
        return scale(c, self)

    @property
    def H(self):
        return adjoint(self)


def make_operator(scalar=0.0, block=None, tail: TailRule | None = None) -> StructuredOperator:
    """Validated structured operator; tails starting late are absorbed into the block."""
    block = np.zeros((0, 0)) if block is None else np.atleast_2d(np.asarray(block, dtype=complex))
    if block.size == 0:
        block = np.zeros((0, 0), dtype=complex)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise ValueError(f"block must be square, got shape {block.shape}")
    if not np.all(np.isfinite(block)) or not np.isfinite(complex(scalar)):
        raise ValueError("non-finite operator data")
    tail = ZERO_RULE if tail is None else tail
    op = StructuredOperator(complex(scalar), _frozen(block), tail)
    if tail.envelope.valid_from > op.block_size + 1:
        op = promote(op, tail.envelope.valid_from - 1)
    return op


def identity(scalar=1.0):
    return make_operator(scalar)


def diagonal(coeffs, scalar=0.0):
    """``scalar I + diag(sum c r^n n^-p)`` from ``[(c, r, p), ...]``."""
    return make_operator(scalar, None, terms_rule(coeffs))


def finite_block(block, scalar=0.0):
    return make_operator(scalar, block)


def rank_one(u: FinVector, v: FinVector, scale_by=1.0):
    """``scale_by * u (x) v`` i.e. ``x -> scale_by <x, v> u``."""
    n = max(u.max_index, v.max_index)
    return make_operator(0.0, scale_by * np.outer(u.to_array(n), v.to_array(n).conj()))


def promote(T: StructuredOperator, size: int) -> StructuredOperator:
    """Same operator with the block enlarged to ``size`` (tail entries folded in)."""
    size = int(size)
    N = T.block_size
    if size < N:
        raise ValueError(f"cannot shrink block from {N} to {size}")
    if size == N:
        return T
    if size > MAX_BLOCK:
        raise PromotionLimit(f"block of size {size} exceeds limit {MAX_BLOCK}")
    B = np.zeros((size, size), dtype=complex)
    B[:N, :N] = T.block
    idx = np.arange(N + 1, size + 1)
    B[idx - 1, idx - 1] = T.tail(idx)
    return StructuredOperator(T.scalar, _frozen(B), T.tail)


def align(T1: StructuredOperator, T2: StructuredOperator):
    n = max(T1.block_size, T2.block_size)
    return promote(T1, n), promote(T2, n)


def add(T1: StructuredOperator, T2: StructuredOperator) -> StructuredOperator:
    A, B = align(T1, T2)
    return make_operator(A.scalar + B.scalar, A.block + B.block, rule_add(A.tail, B.tail))


def scale(c, T: StructuredOperator) -> StructuredOperator:
    c = complex(c)
    return make_operator(c * T.scalar, c * T.block, rule_scale(c, T.tail))


def multiply(T1: StructuredOperator, T2: StructuredOperator) -> StructuredOperator:
    """Composition ``T1 T2``."""
    A, B = align(T1, T2)
    a, b = A.scalar, B.scalar
    block = a * B.block + b * A.block + A.block @ B.block
    tail = rule_add(rule_add(rule_scale(a, B.tail), rule_scale(b, A.tail)),
                    rule_mul(A.tail, B.tail))
    return make_operator(a * b, block, tail)


def power(T: StructuredOperator, k: int) -> StructuredOperator:
    out = identity()
    for _ in range(int(k)):
        out = multiply(out, T)
    return out


def adjoint(T: StructuredOperator) -> StructuredOperator:
    return make_operator(T.scalar.conjugate(), T.block.conj().T, rule_conj(T.tail))


def apply(T: StructuredOperator, x: FinVector) -> FinVector:
    """Exact image ``T x``."""
    N = T.block_size
    out = {}
    if N:
        head = np.zeros(N, dtype=complex)
        for k, v in x.coords.items():
            if k <= N:
                head[k - 1] = v
        if head.any():
            for i, v in enumerate(T.block @ head, start=1):
                out[i] = v
    tail_idx = [k for k in x.coords if k > N]
    if tail_idx:
        vals = T.tail(np.array(tail_idx))
        for k, d in zip(tail_idx, vals):
            out[k] = out.get(k, 0) + d * x.coords[k]
    for k, v in x.coords.items():
        out[k] = out.get(k, 0) + T.scalar * v
    return FinVector(out)


def tail_cutoff(T: StructuredOperator, eps: float) -> int:
    """Smallest ``N* >= block_size`` with ``env(n) < eps`` for every ``n > N*``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    env = T.tail.envelope
    if env.is_zero:
        return T.block_size
    return env.first_below(eps, T.block_size + 1) - 1


def bounded_by(T: StructuredOperator) -> float:
    """Cheap upper bound ``|alpha| + ||B||_1 + env(N+1)`` on ``||T||``."""
    b = np.abs(T.block).sum(axis=0).max() if T.block_size else 0.0
    return abs(T.scalar) + float(b) + float(T.tail.envelope(T.block_size + 1))


def is_finite_block(T: StructuredOperator) -> bool:
    return T.scalar == 0 and T.tail.is_zero


def replace_entry(T: StructuredOperator, n: int, value) -> StructuredOperator:
    """Operator equal to ``T`` except that ``<T e_n, e_n> = value``."""
    P = promote(T, max(T.block_size, int(n)))
    B = np.array(P.block)
    B[n - 1, n - 1] = value - P.scalar
    return StructuredOperator(P.scalar, _frozen(B), P.tail)
