"""Batch command line front-end.

Every command writes one JSON report (``schema: 1``) or CSV rows.  Exit
status: 0 when every check passes, 1 when some check fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import partial
from pathlib import Path

import numpy as np

from . import certificates, moduli, witness
from .constructions import check_lemma22_config, make_c0_sum, make_fkn, make_xn, space_from_config
from .errors import AsqlabError, ConfigurationError, EnumerationCapExceeded, InputError, TruncationTooSmall
from .norm import enumerate_oracle, eval_norm
from .sampling import random_sum_unit, random_unit, random_vector, trial_rng
from .vector import CoordVector, format_value, parse_number, read_vector_csv, write_vector_csv

SCHEMA = 1
RATIONAL_MAX_M = 64


class UsageError(Exception):
    pass


# helpers --------------------------------------------------------------------------


def _clean(obj):
    """Report-ready copy: numbers become strings (``p/q`` or 17 digits)."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (Fraction, float, np.floating)):
        return format_value(obj if not isinstance(obj, np.floating) else float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, CoordVector):
        return write_vector_csv(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return str(obj)


def _vectors(vs):
    """Exchange-format text for a list of vectors (sum vectors give one text per component)."""
    out = []
    for v in vs:
        if isinstance(v, CoordVector):
            out.append(write_vector_csv(v))
        else:
            out.append([write_vector_csv(c) for c in v])
    return out


def _exact(a) -> bool:
    return a.mode == "rational"


def _check_mode(a, *ms):
    if _exact(a) and max(ms) > RATIONAL_MAX_M:
        raise UsageError(f"rational mode is limited to m <= {RATIONAL_MAX_M}, got m={max(ms)}")


def _require_seed(a):
    if a.seed is None:
        raise UsageError(f"{a.command} is randomized: --seed is required")


def _require(a, *names):
    missing = [f"--{n}" for n in names if getattr(a, n, None) is None]
    if missing:
        raise UsageError(f"{a.command} needs explicit {', '.join(missing)}")


def _eps(a):
    return parse_number(a.eps, _exact(a))


def _rtol(a, default=1e-9):
    if _exact(a):
        return 0
    return default if a.tol is None else a.tol


def _support(a, default):
    return default if a.support is None else a.support


def _below_last_block(m: int) -> int:
    """Default data prefix for X_N commands: everything before the last full dyadic block."""
    n_last = (m + 1).bit_length() - 2
    return max(1, 2**n_last - 1)


def _jobs(a) -> int:
    if a.jobs is not None:
        return max(1, a.jobs)
    try:
        return max(1, int(os.environ.get("ASQLAB_JOBS", "1")))
    except ValueError as exc:
        raise UsageError("ASQLAB_JOBS must be an integer") from exc


def _map_trials(a, fn):
    """Run ``fn(a, i)`` for each trial index; results are ordered by index."""
    trials = range(a.trials)
    jobs = _jobs(a)
    if jobs == 1 or a.trials < 2:
        return [fn(a, i) for i in trials]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(partial(fn, a), trials, chunksize=max(1, a.trials // (4 * jobs))))


def _summary(rows) -> dict:
    failures = [r["trial"] for r in rows if not r["passed"]]
    values = [r["value"] for r in rows if "value" in r]
    out = {"trials": len(rows), "failures": len(failures), "failed_trials": failures[:20]}
    if values:
        out["worst"] = max(values)
    return out


# trial functions (top level so worker processes can pickle them) -------------------


def _sandwich_trial(a, i):
    rng = trial_rng(a.seed, i)
    space = make_fkn(a.k, a.n, a.m) if a.command == "verify-eq8" else make_xn(a.k, a.N, a.m)
    f = random_vector(rng, a.m, exact=_exact(a), support=_support(a, a.m))
    sup = f.sup_norm()
    nf = space.norm(f)
    lo = Fraction(sup) / a.k if f.exact else sup / a.k
    hi = sup if a.command == "verify-eq8" else a.k * sup
    tol = _rtol(a, 1e-12)
    ok = nf >= lo - tol * lo and nf <= hi + tol * hi
    row = {"trial": i, "value": nf, "lower": lo, "upper": hi, "passed": bool(ok)}
    if not ok:
        row["vectors"] = _vectors([f])
    return row


def _witness_row(i, rep, fs):
    row = {"trial": i, "value": rep.worst, "bound": rep.bound, "h_norm": rep.h_norm, "passed": bool(rep.verdict)}
    if not rep.verdict:
        row["vectors"] = _vectors(fs)
        row["report"] = rep.to_json()
    return row


def _coordinate_trial(a, i):
    space = make_fkn(a.k, a.n, a.m)
    f = random_unit(space, trial_rng(a.seed, i), exact=_exact(a), support=_support(a, a.m))
    return _witness_row(i, witness.lemma22_witness(space, f, _rtol(a)), [f])


def _common_coordinate_trial(a, i):
    space = make_fkn(a.k, a.n, a.m)
    rng = trial_rng(a.seed, i)
    fs = [random_unit(space, rng, exact=_exact(a), support=_support(a, a.m)) for _ in range(a.K)]
    return _witness_row(i, witness.remark23_witness(space, fs, _rtol(a)), fs)


def _xn_units(a, space, rng):
    return [random_unit(space, rng, exact=_exact(a), support=_support(a, _below_last_block(a.m))) for _ in range(a.K)]


def _block_pair_trial(a, i):
    space = make_xn(a.k, a.N, a.m)
    fs = _xn_units(a, space, trial_rng(a.seed, i))
    eps = _eps(a)
    pair = witness.lemma33_block_pair(space, fs, eps, _rtol(a))
    ok = witness.check_block_pair(fs, a.k, eps, pair)
    row = {"trial": i, "block": pair.n, "l": pair.l, "pair_m": pair.m, "passed": bool(ok)}
    if not ok:
        row["vectors"] = _vectors(fs)
    return row


def _block_witness_trial(a, i):
    space = make_xn(a.k, a.N, a.m)
    fs = _xn_units(a, space, trial_rng(a.seed, i))
    return _witness_row(i, witness.lemma34_witness(space, fs, _rtol(a)), fs)


def _c0_space(a):
    return make_c0_sum([make_xn(a.k, N, a.m) for N in a.Ns])


def _c0_trial(a, i):
    space = _c0_space(a)
    rng = trial_rng(a.seed, i)
    support = _support(a, _below_last_block(a.m))
    fs = [random_sum_unit(space, rng, exact=_exact(a), support=support) for _ in range(a.K)]
    rep = witness.thm35_witness(space, fs, _eps(a), _rtol(a))
    row = _witness_row(i, rep, fs)
    row["M"] = rep.params["M"]
    return row


def _transfer_trial(a, i):
    left = space_from_config(a.left)
    right = make_xn(a.k, a.N, a.m)
    rng = trial_rng(a.seed, i)
    exact = _exact(a)
    ws, xs = [], []
    for _ in range(a.K):
        w = random_vector(rng, left.m, exact=exact, support=a.support)
        t = Fraction(int(rng.integers(0, 11)), 10) if exact else float(rng.uniform(0, 1))
        ws.append(w * (t / left.norm(w)))
        xs.append(random_unit(right, rng, exact=exact, support=_support(a, _below_last_block(a.m))))
    rep = witness.linf_transfer_witness(left, ws, right, xs, witness.lemma34_witness, _rtol(a))
    row = _witness_row(i, rep, list(zip(ws, xs)))
    row["identity_exact"] = rep.notes["identity_exact"]
    return row


def _oracle_trial(a, i):
    space = space_from_config(a.space)
    f = random_vector(trial_rng(a.seed, i), space.m, exact=_exact(a), support=_support(a, space.m))
    closed = eval_norm(space, f)
    oracle = enumerate_oracle(space, f, cap=a.cap)
    ok = closed == oracle if _exact(a) else abs(closed - oracle) <= _rtol(a) * max(abs(oracle), 1)
    row = {"trial": i, "closed_form": closed, "oracle": oracle, "passed": bool(ok)}
    if not ok:
        row["vectors"] = _vectors([f])
    return row


def _polytope(a, i):
    if a.vertices is not None:
        return np.asarray(a.vertices, dtype=float)
    return moduli.random_symmetric_polytope(trial_rng(a.seed, i), a.dim)


def _mvee_trial(a, i):
    V = _polytope(a, i)
    ball = moduli.PolytopeNorm(V)
    E = moduli.mvee(ball.vertices)
    minimal = moduli.mvee_minimality(ball.vertices, E)
    sandwich = moduli.john_sandwich_check(ball.vertices, E, samples=a.samples, seed=a.seed + i)
    ok = minimal and sandwich["passed"]
    row = {"trial": i, "gap": E.gap, "minimal": minimal, "sandwich": sandwich["passed"], "passed": bool(ok),
           "Q": E.Q.tolist()}
    if not ok:
        row["vertices"] = V.tolist()
        row["violation"] = sandwich["violation"]
    return row


def _uniform_bound_trial(a, i):
    V = _polytope(a, i)
    cert = moduli.prop21_certificate(V, samples=a.samples, seed=a.seed + i, grid_res=a.grid_res)
    row = {"trial": i, "worst_value": cert["worst_value"], "bound": cert["bound"],
           "violations": cert["violations"], "passed": cert["passed"]}
    if not cert["passed"]:
        row["vertices"] = V.tolist()
        row["worst_h"] = cert["worst_h"]
    return row


# commands ---------------------------------------------------------------------------


def cmd_sandwich(a):
    if a.command == "verify-eq8":
        _require(a, "k", "n", "m")
        make_fkn(a.k, a.n, a.m)
    else:
        _require(a, "k", "N", "m")
        make_xn(a.k, a.N, a.m)
    _check_mode(a, a.m)
    _require_seed(a)
    rows = _map_trials(a, _sandwich_trial)
    return {"summary": _summary(rows)}, rows


def cmd_coordinate(a):
    _require(a, "k", "n", "m")
    check_lemma22_config(make_fkn(a.k, a.n, a.m))
    _check_mode(a, a.m)
    _require_seed(a)
    rows = _map_trials(a, _coordinate_trial)
    return {"summary": _summary(rows), "bound": 1 + Fraction(1, a.k)}, rows


def cmd_common_coordinate(a):
    _require(a, "k", "n", "m")
    make_fkn(a.k, a.n, a.m)
    _check_mode(a, a.m)
    _require_seed(a)
    rows = _map_trials(a, _common_coordinate_trial)
    return {"summary": _summary(rows), "bound": 1 + Fraction(1, a.k)}, rows


def cmd_block_pair(a):
    _require(a, "k", "N", "m", "eps")
    make_xn(a.k, a.N, a.m)
    _check_mode(a, a.m)
    _require_seed(a)
    rows = _map_trials(a, _block_pair_trial)
    return {"summary": _summary(rows)}, rows


def cmd_block_witness(a):
    _require(a, "k", "N", "m")
    make_xn(a.k, a.N, a.m)
    _check_mode(a, a.m)
    _require_seed(a)
    rows = _map_trials(a, _block_witness_trial)
    return {"summary": _summary(rows), "bound": 1 + Fraction(1, a.N)}, rows


def cmd_c0(a):
    _require(a, "k", "Ns", "m", "eps")
    _c0_space(a)
    _check_mode(a, a.m)
    _require_seed(a)
    rows = _map_trials(a, _c0_trial)
    return {"summary": _summary(rows), "target": 1 + Fraction(_eps(a))}, rows


def cmd_transfer(a):
    _require(a, "k", "N", "m", "left")
    left = space_from_config(a.left)
    if not hasattr(left, "families"):
        raise UsageError("the left summand must be an Fkn or Xn space")
    make_xn(a.k, a.N, a.m)
    _check_mode(a, a.m, left.m)
    _require_seed(a)
    rows = _map_trials(a, _transfer_trial)
    summary = _summary(rows)
    summary["identity_exact"] = all(r["identity_exact"] for r in rows)
    return {"summary": summary, "bound": 1 + Fraction(1, a.N)}, rows


def cmd_oracle_diff(a):
    _require(a, "space")
    space = space_from_config(a.space)
    if not hasattr(space, "families"):
        raise UsageError("oracle-diff needs an Fkn or Xn space")
    _check_mode(a, space.m)
    _require_seed(a)
    rows = _map_trials(a, _oracle_trial)
    return {"summary": _summary(rows)}, rows


def cmd_refute(a):
    _require(a, "k", "N", "m")
    _check_mode(a, a.m)
    _require_seed(a)
    space = make_xn(a.k, a.N, a.m)
    f = certificates.build_counterexample(a.N, a.k, a.m)
    control = None
    if a.control:
        j = 2 ** 2
        control = CoordVector({j: 1, j + 1: -1}, a.m)
    eps = _eps(a) if a.eps is not None else Fraction(1, 4 * a.N)
    sweep = certificates.refute_lasq_sweep(a.N, a.k, a.m, starts=a.starts, seed=a.seed, iters=a.iters,
                                           eps=eps, f=control)
    rows, report = [], {"sweep": {k: v for k, v in sweep.items() if k != "failures"},
                        "sweep_failures": sweep["failures"][:20]}
    passed = sweep["passed"] if not a.control else sweep["best_value"] <= 1.5 + 1e-9
    for i in range(a.random_h):
        h = random_unit(space, trial_rng(a.seed, i), exact=_exact(a))
        row = {"trial": i, "passed": False}
        try:
            cert = certificates.refute_unit_h(space, f, h, eps)
            try:
                ok = certificates.verify_certificate(space, f, h, cert, eps, use_oracle=True)
                row["oracle"] = True
            except EnumerationCapExceeded:
                ok = certificates.verify_certificate(space, f, h, cert, eps, use_oracle=False)
                row["oracle"] = False
            row.update(case=cert.case, value=cert.achieved, passed=bool(ok))
            if not ok:
                row["certificate"] = cert.to_json()
        except AsqlabError as exc:
            row["error"] = str(exc)
        if not row["passed"]:
            row["vectors"] = _vectors([h])
        rows.append(row)
    if rows:
        report["summary"] = _summary(rows)
        passed = passed and not report["summary"]["failures"]
    report["passed"] = passed
    return report, rows


def cmd_mvee(a):
    if a.vertices is None:
        _require(a, "dim")
    _require_seed(a)
    a.trials = 1 if a.vertices is not None else a.polytopes
    rows = _map_trials(a, _mvee_trial)
    return {"summary": _summary(rows)}, rows


def cmd_uniform_bound(a):
    if a.vertices is None:
        _require(a, "dim")
    _require_seed(a)
    a.trials = 1 if a.vertices is not None else a.polytopes
    rows = _map_trials(a, _uniform_bound_trial)
    summary = _summary(rows)
    summary["min_observed"] = min(r["worst_value"] for r in rows)
    summary["bound"] = rows[0]["bound"]
    return {"summary": summary}, rows


def cmd_moduli(a):
    _require(a, "space", "vector")
    _require_seed(a)
    space = space_from_config(a.space)
    if not hasattr(space, "families"):
        raise UsageError("moduli reads vectors for Fkn or Xn spaces only")
    xs = [read_vector_csv(Path(path).read_text(), space.m, exact=False) for path in a.vector]
    cfg = moduli.SearchConfig(starts=a.starts, iters=a.iters, seed=a.seed, grid_res=a.grid_res)
    est = moduli.asq_modulus(space, xs, cfg)
    rows = []
    if a.format == "csv":
        if a.grid_res is None:
            raise UsageError("CSV output of moduli needs --grid-res")
        rows = [dict(zip([*(f"h{j + 1}" for j in range(space.dim)), "objective"], r))
                for r in moduli.grid_rows(space, xs, a.grid_res)]
    return {"estimate": est.to_json(), "passed": True}, rows


def cmd_tau(a):
    _require(a, "k", "Ns", "m")
    _check_mode(a, a.m)
    _require_seed(a)
    space = _c0_space(a)
    if a.eps is not None:
        eps_seq = [parse_number(t, True) for t in a.eps.split(",")]
    else:
        eps_seq = [Fraction(1, 3 * n + 4) for n in range(1, a.points + 1)]
    rng = trial_rng(a.seed, 0)
    low = min(a.dense_components, len(space.components))
    dense = []
    for _ in range(a.points):
        parts = [random_vector(rng, c.dim, exact=_exact(a), support=a.support) if j < low else c.zero()
                 for j, c in enumerate(space.components)]
        norm = space.norm(tuple(parts))
        dense.append(tuple(p / norm for p in parts))
    seq = witness.lemma43_sequence(space, dense, eps_seq, rtol=_rtol(a))
    tests = [("zero", space.zero())]
    tests += [(f"dense{i}", x) for i, x in enumerate(dense)]
    tests += [(f"twice{i}", tuple(2 * c for c in x)) for i, x in enumerate(dense)]
    rows = []
    for i, (name, x) in enumerate(tests):
        est = witness.type_tau(space, x, seq)
        rows.append({"trial": i, "x": name, "tau": est.tau, "target": est.target, "bound": est.bound,
                     "density_gap": est.density_gap, "two_sided": est.two_sided_ok, "passed": est.passed})
    summary = _summary(rows)
    summary["sequence_passed"] = seq.passed
    summary["eps_last"] = eps_seq[-1]
    return {"summary": summary, "passed": seq.passed and not summary["failures"]}, rows


# parser ----------------------------------------------------------------------------


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"malformed JSON: {exc}") from exc


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--tol", type=float)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--mode", choices=("float", "rational"), default="float")
    common.add_argument("--jobs", type=int)
    common.add_argument("--support", type=int, help="random data lives on coordinates 1..support")

    p = argparse.ArgumentParser(prog="asqlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, *params, **extra):
        sp = sub.add_parser(name, parents=[common])
        for param in params:
            if param in ("k", "n", "N", "m"):
                sp.add_argument(f"--{param}", type=int)
        sp.set_defaults(func=fn)
        return sp

    add("verify-eq8", cmd_sandwich, "k", "n", "m")
    add("verify-eq9", cmd_sandwich, "k", "N", "m")
    add("verify-lemma22", cmd_coordinate, "k", "n", "m")
    add("verify-remark23", cmd_common_coordinate, "k", "n", "m").add_argument("--K", type=int, default=2)
    sp = add("verify-lemma33", cmd_block_pair, "k", "N", "m")
    sp.add_argument("--K", type=int, default=2)
    sp.add_argument("--eps")
    add("verify-lemma34", cmd_block_witness, "k", "N", "m").add_argument("--K", type=int, default=5)
    sp = add("verify-thm35", cmd_c0, "k", "m")
    sp.add_argument("--Ns", type=_int_list)
    sp.add_argument("--eps")
    sp.add_argument("--K", type=int, default=3)
    sp = add("verify-transfer", cmd_transfer, "k", "N", "m")
    sp.add_argument("--left", type=_json_arg, help="JSON space config of the left summand")
    sp.add_argument("--K", type=int, default=1)
    sp = add("refute-lasq", cmd_refute, "k", "N", "m")
    sp.add_argument("--starts", type=int, default=200)
    sp.add_argument("--iters", type=int, default=200)
    sp.add_argument("--eps")
    sp.add_argument("--random-h", type=int, default=0, help="also refute this many random unit h")
    sp.add_argument("--control", action="store_true", help="search at e_4 - e_5 instead, without refutation")
    for name, fn in (("mvee-check", cmd_mvee), ("prop21-sweep", cmd_uniform_bound)):
        sp = add(name, fn)
        sp.add_argument("--dim", type=int)
        sp.add_argument("--polytopes", type=int, default=10)
        sp.add_argument("--samples", type=int, default=2000)
        sp.add_argument("--vertices", type=_json_arg, help="JSON list of vertices (symmetrised)")
        sp.add_argument("--grid-res", type=float)
    sp = add("moduli", cmd_moduli)
    sp.add_argument("--space", type=_json_arg)
    sp.add_argument("--vector", action="append", help="vector file in index,value format (repeatable)")
    sp.add_argument("--starts", type=int, default=20)
    sp.add_argument("--iters", type=int, default=200)
    sp.add_argument("--grid-res", type=float)
    sp = add("lemma43-tau", cmd_tau, "k", "m")
    sp.add_argument("--Ns", type=_int_list)
    sp.add_argument("--points", type=int, default=20)
    sp.add_argument("--eps", help="comma-separated decreasing eps values (default 1/(3n+4))")
    sp.add_argument("--dense-components", type=int, default=2)
    sp = add("oracle-diff", cmd_oracle_diff)
    sp.add_argument("--space", type=_json_arg)
    sp.add_argument("--cap", type=int, default=10**7)
    return p


def _config(a) -> dict:
    skip = {"func", "out", "jobs", "format"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def _write(a, text: str):
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(rows) -> str:
    keys = []
    for r in rows:
        for key, v in r.items():
            if key not in keys and not isinstance(v, (list, dict)):
                keys.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _clean(v) for k, v in r.items() if k in keys})
    return buf.getvalue()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, rows = a.func(a)
    except (UsageError, ConfigurationError, InputError, TruncationTooSmall, EnumerationCapExceeded) as exc:
        msg = {"schema": SCHEMA, "command": a.command, "error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, TruncationTooSmall):
            msg["required_m"] = exc.required_m
        if getattr(exc, "required_N", None) is not None:
            msg["required_N"] = exc.required_N
        print(json.dumps(msg, sort_keys=True), file=sys.stderr)
        return 2
    passed = report.pop("passed", None)
    if passed is None:
        passed = report["summary"]["failures"] == 0
    if a.format == "csv":
        _write(a, _csv_text(rows))
    else:
        body = {"schema": SCHEMA, "command": a.command, "config": _config(a), "passed": bool(passed), **report}
        if rows and a.command != "moduli":
            body["trials"] = rows
        _write(a, json.dumps(_clean(body), indent=2, sort_keys=True) + "\n")
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())
