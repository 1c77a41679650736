"""JSON operator files.

Layout::

    {
      "scalar": {"re": 1.0, "im": 0.0},
      "block": {"n": 2, "entries": [{"re": 0, "im": 0}, ...]},   # row-major
      "tail": {"terms": [{"c": -1.0, "r": 1.0, "p": 2.0}, ...]},
      "rank_one": [{"u": [[1, 1.0, 0.0]], "v": [[2, 1.0, 0.0]]}]
    }

Every key is optional.  The tail is ``d_n = sum c r**n n**(-p)``; ``c`` may be
a number or ``{"re", "im"}``.  Sparse vectors are ``[index, re, im]`` lists
(1-based).  ``rank_one`` entries ``u (x) v`` are folded into the block.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import InputError, ParseError
from .structured import FinVector, StructuredOperator, make_operator
from .tails import Terms, terms_rule

_KEYS = {"scalar", "block", "tail", "rank_one"}


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"expected a number, got {x!r}", where)
    x = float(x)
    if not math.isfinite(x):
        raise ParseError("non-finite number", where)
    return x


def _complex(obj, where):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(_number(obj, where))
    if not isinstance(obj, dict) or not set(obj) <= {"re", "im"}:
        raise ParseError(f"expected {{re, im}}, got {obj!r}", where)
    return complex(_number(obj.get("re", 0.0), f"{where}.re"),
                   _number(obj.get("im", 0.0), f"{where}.im"))


def _sparse(obj, where):
    if not isinstance(obj, list):
        raise ParseError("sparse vector must be a list of [index, re, im]", where)
    coords = {}
    for i, item in enumerate(obj):
        at = f"{where}[{i}]"
        if not isinstance(item, list) or len(item) not in (2, 3):
            raise ParseError("expected [index, re, im]", at)
        k = item[0]
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ParseError(f"index must be a positive integer, got {k!r}", at)
        im = _number(item[2], at) if len(item) == 3 else 0.0
        coords[k] = coords.get(k, 0) + complex(_number(item[1], at), im)
    return FinVector(coords)


def _term(obj, where):
    if not isinstance(obj, dict) or not {"c", "r", "p"} <= set(obj):
        raise ParseError("tail term needs c, r and p", where)
    c = _complex(obj["c"], f"{where}.c")
    r = _number(obj["r"], f"{where}.r")
    p = _number(obj["p"], f"{where}.p")
    if not 0 < r <= 1:
        raise ParseError(f"r must lie in (0, 1], got {r!r}", f"{where}.r")
    if p < 0:
        raise ParseError(f"p must be >= 0, got {p!r}", f"{where}.p")
    if r == 1 and p == 0:
        raise ParseError("term with r = 1 and p = 0 does not decay", where)
    return (c, r, p)


def from_dict(data) -> StructuredOperator:
    if not isinstance(data, dict):
        raise ParseError("operator spec must be a JSON object", "$")
    extra = set(data) - _KEYS
    if extra:
        raise ParseError(f"unknown keys {sorted(extra)}", "$")
    scalar = _complex(data.get("scalar", 0.0), "scalar")
    block = None
    if "block" in data:
        b = data["block"]
        if not isinstance(b, dict) or "n" not in b:
            raise ParseError("block needs n and entries", "block")
        n = b["n"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ParseError(f"block.n must be a nonnegative integer, got {n!r}", "block.n")
        entries = b.get("entries", [])
        if not isinstance(entries, list) or len(entries) != n * n:
            raise ParseError(f"block.entries must hold n*n = {n * n} values", "block.entries")
        block = np.array([_complex(e, f"block.entries[{i}]") for i, e in enumerate(entries)],
                         dtype=complex).reshape(n, n)
    for i, ro in enumerate(data.get("rank_one", [])):
        at = f"rank_one[{i}]"
        if not isinstance(ro, dict) or not {"u", "v"} <= set(ro):
            raise ParseError("rank_one entry needs u and v", at)
        u, v = _sparse(ro["u"], f"{at}.u"), _sparse(ro["v"], f"{at}.v")
        m = max(u.max_index, v.max_index, 0 if block is None else block.shape[0])
        grown = np.zeros((m, m), dtype=complex)
        if block is not None:
            grown[:block.shape[0], :block.shape[0]] = block
        block = grown + np.outer(u.to_array(m), v.to_array(m).conj())
    tail = None
    if "tail" in data:
        t = data["tail"]
        if not isinstance(t, dict) or not isinstance(t.get("terms", []), list):
            raise ParseError("tail must be {terms: [...]}", "tail")
        terms = [_term(x, f"tail.terms[{i}]") for i, x in enumerate(t.get("terms", []))]
        try:
            tail = terms_rule(terms)
        except InputError as exc:
            raise ParseError(str(exc), "tail") from exc
    return make_operator(scalar, block, tail)


def parse_spec(text: str) -> StructuredOperator:
    """Operator from JSON text; errors carry a character offset or a key path."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from exc
    return from_dict(data)


def load_spec(path) -> StructuredOperator:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def _cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def to_dict(T: StructuredOperator) -> dict:
    """Serialisable form; only ``c r**n n**(-p)`` tails can be written."""
    if not isinstance(T.tail.expr, Terms):
        raise InputError(f"tail {T.tail.expr.describe()} has no file representation")
    out = {"scalar": _cjson(T.scalar)}
    if T.block_size:
        out["block"] = {"n": T.block_size, "entries": [_cjson(z) for z in T.block.ravel()]}
    terms = [{"c": c.real if c.imag == 0 else _cjson(c), "r": r, "p": p}
             for c, r, p in T.tail.expr.coeffs]
    if terms:
        out["tail"] = {"terms": terms}
    return out


def emit_spec(T: StructuredOperator) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(to_dict(T), indent=1, sort_keys=True)
