"""Command-line driver: ``spectrakit <command> ...``.

Every command prints (and optionally writes) a deterministic JSON report.
Exit codes: 0 ok, 2 parse error, 3 precondition error, 4 numerical
non-convergence or a bound above tolerance, 5 undecided verdict with
``--strict``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .an import VerdictKind, an_check, check_triple, classify
from .commutator import (maximizer_pair, maximizer_sandwich,
                         maximizer_single)
from .errors import InputError, SpectraError
from .generators import random_structured, rng_from
from .oracle import dense_min_singular, dense_norm, truncate
from .perturbation import attainify
from .spectral import (Verdict, _value_radius, essential_min_modulus,
                       is_self_adjoint, min_modulus, operator_norm,
                       spectrum_sa)
from .specfile import emit_spec, parse_spec, to_dict
from .structured import DEFAULT_TOL, StructuredOperator

EXIT_UNDECIDED = 5
EXIT_BOUNDS = 4
SUITE_SUFFIXES = (".op", ".json")


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _cnum(z):
    z = complex(z)
    return {"re": _num(z.real), "im": _num(z.imag)}


def _val(v, err):
    """Quantity paired with its error bound."""
    if isinstance(v, complex):
        return {"value": _cnum(v), "error": _num(err)}
    return {"value": _num(v), "error": _num(err)}


def _vec(x):
    return None if x is None else x.to_json()


def _op(T: StructuredOperator):
    try:
        return to_dict(T)
    except InputError:
        d = {"scalar": _cnum(T.scalar), "tail": {"symbolic": T.tail.expr.describe()}}
        if T.block_size:
            d["block"] = {"n": T.block_size, "entries": [_cnum(z) for z in T.block.ravel()]}
        return d


def dumps(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def digest(*texts) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _norm_json(res):
    return {**_val(res.value, res.error_bound),
            "attained": res.attainment.status.value,
            "witness": _vec(res.attainment.witness),
            "note": res.attainment.note}


def analyze(T, tol, window=32):
    cl = classify(T, tol)
    nrm = operator_norm(T, tol)
    m, merr = min_modulus(T, tol)
    out = {
        "classification": {k: bool(v) for k, v in vars(cl).items()},
        "norm": _norm_json(nrm),
        "min_modulus": _val(m, merr),
        "essential_min_modulus": _val(essential_min_modulus(T), 0.0),
    }
    if is_self_adjoint(T, tol):
        sp = spectrum_sa(T, tol, window=window)
        pts = sp.eigenvalues[:T.block_size + window]
        out["spectrum"] = {
            "points": [{**_val(p.value, p.error_radius), "witness": _vec(p.witness)} for p in pts],
            "listed": len(pts),
            "total_certified": len(sp.eigenvalues),
            "essential": [_val(e, 0.0) for e in sp.essential_points],
            "cluster_radius": _num(sp.cluster_radius),
        }
    else:
        out["spectrum"] = None
    return out, nrm.attainment.status is Verdict.UNDECIDED


def an_report(T, tol):
    v = an_check(T, tol)
    out = {
        "verdict": v.kind.value,
        "route": v.route,
        "reason": v.reason.value if v.reason else None,
        "offending": [_val(x, _value_radius(x)) for x in v.offending],
        "explanation": v.explanation,
        "triple": None,
    }
    if v.triple is not None:
        t = v.triple
        out["triple"] = {
            "K": _op(t.K),
            "F": _op(t.F),
            "alpha": _val(t.alpha, 0.0),
            "residuals": {k: _num(x) for k, x in check_triple(t, tol).items()},
        }
    return out, v.kind is VerdictKind.UNDECIDED


def commutator_report(rep):
    return {
        "case": rep.case,
        "achieved": _val(rep.achieved, rep.error_bound),
        "target": _val(rep.target, 0.0),
        "gap": _num(rep.gap),
        "partial_isometry_defect": None if rep.partial_isometry_defect is None
        else _num(rep.partial_isometry_defect),
        "X": _op(rep.X),
        "witnesses": [{"vector": _vec(w.vector), "value": _cnum(w.value)} for w in rep.witnesses],
    }


def attainify_report(cert):
    return {
        "index": cert.index,
        "scale": _num(cert.scale),
        "norm_preserved": _val(cert.norm_preserved, _value_radius(cert.norm_preserved)),
        "distance": _val(cert.distance, _value_radius(cert.distance)),
        "beta_achieved": _val(cert.beta_achieved, _value_radius(abs(cert.beta_achieved))),
        "eta": _vec(cert.eta.vector),
        "Z": _op(cert.Z),
    }


def oracle_report(T, dim, tol):
    M = truncate(T, dim)
    nrm = operator_norm(T, tol)
    dn, drad = dense_norm(M, with_radius=True)
    m, merr = min_modulus(T, tol)
    dm = dense_min_singular(M)
    # past the block, every truncated entry is within env of |alpha|
    env = T.tail.envelope
    tail_gap = float(env(dim) + env(dim + 1)) if dim > T.block_size else math.inf
    return {
        "dim": dim,
        "norm": {"structured": _val(nrm.value, nrm.error_bound),
                 "dense": _val(dn, drad),
                 "delta": _num(abs(nrm.value - dn)),
                 "truncation_bound": _num(tail_gap)},
        "min_modulus": {"structured": _val(m, merr),
                        "dense": _val(dm, drad),
                        "delta": _num(abs(m - dm)),
                        "truncation_bound": _num(tail_gap)},
    }


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def _bounds_ok(node, tol):
    """Whether every ``error`` field in a report stays within ``tol``."""
    if isinstance(node, dict):
        e = node.get("error")
        if isinstance(e, (int, float)) and e > tol:
            return False
        if e in ("inf", "nan"):
            return False
        return all(_bounds_ok(v, tol) for k, v in node.items() if k != "error")
    if isinstance(node, list):
        return all(_bounds_ok(v, tol) for v in node)
    return True


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _suite_job(args):
    name, text, tol, window, out_dir = args
    report = {"command": "suite-item", "name": name, "input_digest": digest(text), "tolerance": tol}
    try:
        T = parse_spec(text)
        res, _ = analyze(T, tol, window)
        an, undecided = an_report(T, tol)
        report["results"] = {"analyze": res, "an_check": an}
        report["bounds_ok"] = _bounds_ok(report["results"], tol)
        status = "undecided" if undecided else "ok"
    except SpectraError as exc:
        report["error"] = _error(exc)
        report["bounds_ok"] = True
        status = "error"
    _write_atomic(Path(out_dir) / f"{name}.report.json", dumps(report))
    return name, status, report["bounds_ok"], report["input_digest"]


def run_suite(directory, tol, window=32, random_count=0, seed=0, workers=None):
    directory = Path(directory)
    jobs = []
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix in SUITE_SUFFIXES:
            jobs.append((p.stem, p.read_text(encoding="utf-8")))
    rng = rng_from(seed)
    for i in range(random_count):
        jobs.append((f"random-{seed}-{i:03d}", emit_spec(random_structured(rng))))
    out_dir = directory / "reports"
    payload = [(name, text, tol, window, str(out_dir)) for name, text in jobs]
    if workers == 1 or len(payload) <= 1:
        results = [_suite_job(a) for a in payload]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_suite_job, payload))
    items = [{"name": n, "status": s, "bounds_ok": b, "input_digest": d} for n, s, b, d in results]
    return {"items": items, "count": len(items), "report_dir": str(out_dir),
            "all_bounds_ok": all(i["bounds_ok"] for i in items)}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _error(exc):
    return {"type": type(exc).__name__, "message": str(exc),
            "exit_code": getattr(exc, "exit_code", 3)}


def default_tol():
    env = os.environ.get("SPECTRAKIT_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        return float(env)
    except ValueError:
        raise SystemExit(f"SPECTRAKIT_TOL is not a number: {env!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="numerical tolerance (default 1e-9 or $SPECTRAKIT_TOL)")
    common.add_argument("--json", metavar="OUT", help="also write the report to OUT")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--window", type=int, default=32, help="tail eigenvalues to report")
    common.add_argument("--strict", action="store_true", help="exit 5 on undecided verdicts")

    p = argparse.ArgumentParser(prog="spectrakit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="classification, norms and spectrum")
    a.add_argument("file")
    a = sub.add_parser("an-check", parents=[common], help="AN verdict and triple")
    a.add_argument("file")
    a = sub.add_parser("commutator", parents=[common], help="explicit norm maximizers")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--single", nargs=1, metavar="E")
    g.add_argument("--pair", nargs=2, metavar=("S", "T"))
    g.add_argument("--sandwich", nargs=2, metavar=("S", "T"))
    a = sub.add_parser("attainify", parents=[common], help="norm-attaining perturbation")
    a.add_argument("file")
    a.add_argument("--alpha", type=float, required=True)
    a.add_argument("--beta", type=complex, default=None)
    a = sub.add_parser("oracle-compare", parents=[common], help="structured vs dense results")
    a.add_argument("file")
    a.add_argument("--dim", type=int, required=True)
    a = sub.add_parser("suite", parents=[common], help="batch over a directory of operator files")
    a.add_argument("directory")
    a.add_argument("--random", type=int, default=0, metavar="K",
                   help="also analyse K seeded random operators")
    a.add_argument("--workers", type=int, default=None)
    return p


def _load(path):
    text = Path(path).read_text(encoding="utf-8")
    return parse_spec(text), text


def execute(args, tol):
    """Run one command; returns ``(report, exit_code)``."""
    report = {"command": [args.command], "tolerance": tol}
    undecided, code = False, 0
    if args.command == "suite":
        report["command"] += [args.directory, f"--random={args.random}", f"--seed={args.seed}"]
        res = run_suite(args.directory, tol, args.window, args.random, args.seed, args.workers)
        report["results"] = res
        undecided = any(i["status"] == "undecided" for i in res["items"])
        if not res["all_bounds_ok"]:
            code = EXIT_BOUNDS
        return report, code, undecided
    if args.command == "commutator":
        mode = next(m for m in ("single", "pair", "sandwich") if getattr(args, m))
        files = getattr(args, mode)
        report["command"] += [f"--{mode}", *files]
        loaded = [_load(f) for f in files]
        report["input_digest"] = digest(*(t for _, t in loaded))
        ops = [op for op, _ in loaded]
        fn = {"single": maximizer_single, "pair": maximizer_pair, "sandwich": maximizer_sandwich}[mode]
        report["results"] = commutator_report(fn(*ops, tol=tol))
        return report, code, undecided
    T, text = _load(args.file)
    report["command"].append(args.file)
    report["input_digest"] = digest(text)
    if args.command == "analyze":
        report["results"], undecided = analyze(T, tol, args.window)
    elif args.command == "an-check":
        report["results"], undecided = an_report(T, tol)
    elif args.command == "attainify":
        report["command"] += [f"--alpha={args.alpha!r}"]
        if args.beta is not None:
            report["command"] += [f"--beta={args.beta!r}"]
        report["results"] = attainify_report(attainify(T, args.alpha, args.beta, tol))
    elif args.command == "oracle-compare":
        report["command"] += [f"--dim={args.dim}"]
        report["results"] = oracle_report(T, args.dim, tol)
    return report, code, undecided


def main(argv=None):
    args = build_parser().parse_args(argv)
    tol = args.tol if args.tol is not None else default_tol()
    try:
        report, code, undecided = execute(args, tol)
        if code == 0 and undecided and args.strict:
            code = EXIT_UNDECIDED
    except SpectraError as exc:
        report = {"command": [args.command], "tolerance": tol, "error": _error(exc)}
        code = exc.exit_code
    except OSError as exc:
        report = {"command": [args.command], "tolerance": tol,
                  "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": 2}}
        code = 2
    text = dumps(report)
    sys.stdout.write(text)
    if args.json:
        _write_atomic(Path(args.json), text)
    return code


if __name__ == "__main__":
    sys.exit(main())
