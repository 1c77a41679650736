import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectrakit.cli import main
from spectrakit.errors import ParseError
from spectrakit.oracle import truncate
from spectrakit.specfile import emit_spec, parse_spec

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)

IDENTITY = {"scalar": {"re": 1, "im": 0}}
K_MINUS = {"scalar": {"re": 1, "im": 0}, "tail": {"terms": [{"c": -1, "r": 1, "p": 1}]}}
SWAP = {"block": {"n": 2, "entries": [{"re": 0, "im": 0}, {"re": 1, "im": 0},
                                      {"re": 1, "im": 0}, {"re": 0, "im": 0}]}}
# sign change near n = 5000, past the largest block a certified split may build
TINY = {"scalar": 1e-3, "tail": {"terms": [{"c": -5, "r": 1, "p": 1}]}}
LOOSE = {"scalar": 1e-7, "tail": {"terms": [{"c": -1, "r": 1, "p": 1}]}}


def test_parse_examples():
    assert np.array_equal(truncate(parse_spec(json.dumps(IDENTITY)), 3), np.eye(3))
    D = parse_spec('{"tail": {"terms": [{"c": 1, "r": 1, "p": 1}]}}')
    assert np.allclose(truncate(D, 4).diagonal(), 1 / np.arange(1, 5))
    with pytest.raises(ParseError) as exc:
        parse_spec('{"tail": {"terms": [{"c": 1, "r": 0, "p": 1}]}}')
    assert exc.value.position == "tail.terms[0].r"
    with pytest.raises(ParseError) as exc:
        parse_spec('{"scalar": ')
    assert exc.value.position == 11


def test_rank_one_folded():
    T = parse_spec('{"rank_one": [{"u": [[1, 1.0, 0.0], [3, 0.0, 2.0]], "v": [[2, 1.0]]}]}')
    ref = np.zeros((3, 3), complex)
    ref[0, 1], ref[2, 1] = 1, 2j
    assert T.block_size == 3 and np.array_equal(T.block, ref)


@settings(max_examples=50, deadline=None)
@given(st.tuples(finite, finite),
       st.lists(st.tuples(finite, finite), min_size=4, max_size=4),
       st.lists(st.tuples(finite.filter(lambda c: c != 0), st.floats(0.01, 0.99),
                          st.floats(0, 4)), max_size=3))
def test_round_trip_bit_exact(scalar, entries, terms):
    spec = {"scalar": {"re": scalar[0], "im": scalar[1]},
            "block": {"n": 2, "entries": [{"re": a, "im": b} for a, b in entries]},
            "tail": {"terms": [{"c": c, "r": r, "p": p} for c, r, p in terms]}}
    T = parse_spec(json.dumps(spec))
    text = emit_spec(T)
    T2 = parse_spec(text)
    assert emit_spec(T2) == text
    assert T2.scalar == T.scalar and np.array_equal(T2.block, T.block)
    assert T2.tail.expr == T.tail.expr


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_analyze_identity(tmp_path, capsys):
    code, rep = _run(capsys, ["analyze", _write(tmp_path, "identity.op", IDENTITY)])
    res = rep["results"]
    assert code == 0
    assert res["norm"]["value"] == 1.0 and res["min_modulus"]["value"] == 1.0
    assert res["essential_min_modulus"]["value"] == 1.0
    assert res["classification"]["positive"]
    assert len(rep["input_digest"]) == 64


def test_an_check_cli(tmp_path, capsys):
    code, rep = _run(capsys, ["an-check", _write(tmp_path, "k_minus.op", K_MINUS)])
    assert code == 0
    assert rep["results"]["verdict"] == "NotAN"
    assert rep["results"]["reason"] == "InfinitelyManyBelowEssential"


def test_commutator_cli(tmp_path, capsys):
    swap = _write(tmp_path, "swap.op", SWAP)
    code, rep = _run(capsys, ["commutator", "--single", swap])
    assert code == 0
    assert rep["results"]["achieved"]["value"] == pytest.approx(2.0, abs=1e-12)
    assert rep["results"]["target"]["value"] == 2.0
    code, rep = _run(capsys, ["commutator", "--sandwich", swap, swap])
    assert code == 0 and rep["results"]["achieved"]["value"] == pytest.approx(1.0)


def test_attainify_and_oracle_cli(tmp_path, capsys):
    f = _write(tmp_path, "s.op", {"scalar": 1, "tail": {"terms": [{"c": -1, "r": 1, "p": 2}]}})
    code, rep = _run(capsys, ["attainify", f, "--alpha", "0.1"])
    assert code == 0 and rep["results"]["index"] == 5
    assert rep["results"]["distance"]["value"] == pytest.approx(0.04)
    code, rep = _run(capsys, ["oracle-compare", f, "--dim", "30"])
    assert code == 0 and rep["results"]["norm"]["delta"] <= rep["results"]["norm"]["truncation_bound"] + 1e-12


def test_exit_codes(tmp_path, capsys, monkeypatch):
    bad = tmp_path / "bad.op"
    bad.write_text('{"tail": {"terms": [{"c": 1, "r": 0, "p": 1}]}}')
    code, rep = _run(capsys, ["analyze", str(bad)])
    assert code == 2 and rep["error"]["type"] == "ParseError"
    code, rep = _run(capsys, ["commutator", "--single", _write(tmp_path, "i.op", IDENTITY)])
    assert code == 3 and rep["error"]["type"] == "PreconditionFailed"
    tiny = _write(tmp_path, "tiny.op", TINY)
    assert _run(capsys, ["an-check", tiny])[0] == 0
    assert _run(capsys, ["an-check", tiny, "--strict"])[0] == 5
    monkeypatch.setenv("SPECTRAKIT_TOL", "1e-6")
    assert _run(capsys, ["analyze", tiny])[1]["tolerance"] == 1e-6
    assert _run(capsys, ["analyze", tiny, "--tol", "1e-8"])[1]["tolerance"] == 1e-8


def test_suite_deterministic(tmp_path, capsys):
    d = tmp_path / "ops"
    d.mkdir()
    for name, obj in (("identity", IDENTITY), ("k_minus", K_MINUS), ("swap", SWAP), ("tiny", TINY)):
        _write(d, f"{name}.op", obj)
    outs = []
    for i in range(2):
        out = tmp_path / f"s{i}.json"
        code = main(["suite", str(d), "--random", "4", "--seed", "7", "--json", str(out)])
        capsys.readouterr()
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["results"]["count"] == 8 and rep["results"]["all_bounds_ok"]
    assert (d / "reports" / "k_minus.report.json").exists()
    assert not list((d / "reports").glob("*.tmp"))
    code = main(["suite", str(d), "--strict"])
    capsys.readouterr()
    assert code == 5


def test_suite_flags_loose_bounds(tmp_path, capsys):
    d = tmp_path / "ops"
    d.mkdir()
    _write(d, "loose.op", LOOSE)
    code = main(["suite", str(d)])
    rep = json.loads(capsys.readouterr().out)
    assert code == 4 and not rep["results"]["all_bounds_ok"]
