"""Constructive almost-square witnesses.

Each routine returns a :class:`WitnessReport` whose verdict is recomputed from
the norms of ``f_i +- h``; the construction is never trusted on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

from .constructions import SumSpace, check_lemma22_config, make_linf_sum
from .errors import ConfigurationError, InputError, InvariantViolation, TruncationTooSmall
from .norm import DEFAULT_RTOL, block_indices, full_blocks
from .vector import CoordVector, as_fraction, combine, format_value, is_exact


def _leq(a, b, rtol=DEFAULT_RTOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return a <= b + rtol * max(1.0, abs(float(b)))


def _close(a, b, rtol=DEFAULT_RTOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= rtol * max(1.0, abs(float(b)))


def pm_value(space, f, h):
    """``max(||f + h||, ||f - h||)``."""
    return max(space.norm(combine(f, h, 1)), space.norm(combine(f, h, -1)))


def _require_unit(space, fs, rtol, allow_below=False):
    for i, f in enumerate(fs):
        nf = space.norm(f)
        ok = _leq(nf, 1, rtol) if allow_below else _close(nf, 1, rtol)
        if not ok:
            want = "<= 1" if allow_below else "= 1"
            raise InputError(f"input {i} has norm {format_value(nf)}, expected {want}")


def _json_vector(v):
    if isinstance(v, CoordVector):
        return [[j, format_value(x)] for j, x in v.items()]
    return [_json_vector(c) for c in v]


@dataclass
class WitnessReport:
    lemma: str
    params: dict
    h: object
    per_input: list
    bound: object
    h_norm: object
    verdict: bool
    notes: dict = field(default_factory=dict)

    @property
    def worst(self):
        return max((v for _, v in self.per_input), default=0)

    def to_json(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "h": _json_vector(self.h),
            "h_norm": format_value(self.h_norm),
            "per_input": [[i, format_value(v)] for i, v in self.per_input],
            "worst": format_value(self.worst),
            "bound": format_value(self.bound),
            "verdict": "pass" if self.verdict else "fail",
            **({"notes": self.notes} if self.notes else {}),
        }


def _report(lemma, params, space, fs, h, bound, rtol, notes=None) -> WitnessReport:
    per_input = [(i, pm_value(space, f, h)) for i, f in enumerate(fs)]
    h_norm = space.norm(h)
    verdict = all(_leq(v, bound, rtol) for _, v in per_input) and _close(h_norm, 1, rtol)
    return WitnessReport(lemma, params, h, per_input, bound, h_norm, verdict, notes or {})


# coordinate witnesses in F_{k,n} ---------------------------------------------


def lemma22_witness(space, f: CoordVector, rtol: float = DEFAULT_RTOL) -> WitnessReport:
    """Witness ``h = k e_l`` for one unit vector of ``F_{k,n}`` with ``k^2 <= n``, ``m = 2n``.

    ``E`` is the sign class of ``f`` (zeros count as nonnegative) with at least
    ``n`` members; ``l`` minimises ``|f_l|`` over ``E``.  Averaging over an
    ``n``-subset of ``E`` forces ``|f_l| <= 1``.
    """
    check_lemma22_config(space)
    _require_unit(space, [f], rtol)
    k, n, m = space.k, space.n, space.m
    nonneg = [j for j in range(1, m + 1) if f.get(j) >= 0]
    neg = [j for j in range(1, m + 1) if f.get(j) < 0]
    E = nonneg if len(nonneg) >= n else neg
    if len(E) < n:
        raise InvariantViolation("no sign class of size n; pigeonhole over m = 2n failed")
    l = min(E, key=lambda j: (abs(f.get(j)), j))
    if not _leq(abs(f.get(l)), 1, rtol):
        raise InvariantViolation(
            f"min |f_l| over the sign class is {format_value(abs(f.get(l)))} > 1; input is not normalised"
        )
    h = CoordVector.unit(l, m, k)
    params = {"k": k, "n": n, "m": m, "l": l, "sign_class": "nonneg" if E is nonneg else "neg"}
    return _report("lemma22", params, space, [f], h, 1 + Fraction(1, k), rtol)


def remark23_witness(space, fs: Sequence[CoordVector], rtol: float = DEFAULT_RTOL) -> WitnessReport:
    """Common coordinate witness ``h = k e_l`` for several unit vectors of ``F_{k,n}``.

    A unit vector has fewer than ``n`` coordinates above 1 of each sign, so
    ``m >= 2K(n-1) + 1`` always leaves a free coordinate.
    """
    if space.kind != "Fkn":
        raise ConfigurationError(f"expected an F_{{k,n}} space, got {space.label}")
    _require_unit(space, fs, rtol)
    k, n, m = space.k, space.n, space.m
    best = None
    for j in range(1, m + 1):
        worst = max((abs(f.get(j)) for f in fs), default=0)
        if _leq(worst, 1, rtol) and (best is None or worst < best[0]):
            best = (worst, j)
    if best is None:
        raise TruncationTooSmall(
            f"every coordinate of F_{{{k},{n}}}(m={m}) exceeds 1 in some input",
            2 * len(fs) * (n - 1) + 1,
        )
    l = best[1]
    h = CoordVector.unit(l, m, k)
    notes = {} if k * k <= n else {"warning": "k^2 > n: bound 1 + 1/k is not guaranteed"}
    params = {"k": k, "n": n, "m": m, "l": l, "inputs": len(fs)}
    return _report("remark23", params, space, fs, h, 1 + Fraction(1, k), rtol, notes)


# block-pair witnesses in X_N ---------------------------------------------------


class BlockPair(NamedTuple):
    n: int
    l: int
    m: int


def _cell(v, side) -> int:
    return math.floor(v / side)


def lemma33_block_pair(space, fs: Sequence[CoordVector], eps, rtol: float = DEFAULT_RTOL) -> BlockPair:
    """Find a dyadic block ``E_n`` and ``l != m`` in it with

    1. ``|f^i_j| <= 1/k`` on all of ``E_n``, and
    2. ``|f^i_l - f^i_m| < eps`` for every input.

    Blocks are scanned in increasing ``n`` (only blocks inside the truncation);
    blocks carrying a large coordinate are skipped, then the coordinate tuples
    are bucketed into half-open cells of side just below ``eps`` and the
    lexicographically first same-cell pair is returned.
    """
    if space.kind != "Xn":
        raise ConfigurationError(f"expected an X_N space, got {space.label}")
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps}")
    _require_unit(space, fs, rtol, allow_below=True)
    k = space.k
    exact = all(f.exact for f in fs) and is_exact(eps)
    side = Fraction(eps) if exact else float(eps) * (1 - 1e-12)
    big = Fraction(1, k) if all(f.exact for f in fs) else 1 / k
    large = {j for f in fs for j, v in f.items() if abs(v) > big}
    for n in full_blocks(space.m):
        block = block_indices(n, space.m)
        if any(j in large for j in block):
            continue
        first: dict[tuple, int] = {}
        best = None
        for j in block:
            key = tuple(_cell(f.get(j), side) for f in fs)
            if key in first:
                l = first[key]
                if best is None or l < best[0]:
                    best = (l, j)
            else:
                first[key] = j
        if best is not None:
            return BlockPair(n, *best)
    raise TruncationTooSmall(
        f"no dyadic block inside m={space.m} admits a pair", _pigeonhole_m(k, eps, len(fs), large)
    )


def _pigeonhole_m(k, eps, K, large) -> int:
    p = math.floor(2 / (k * as_fraction(eps))) + 1
    cells = p**K
    n1 = 1
    while 2**n1 <= cells or 2**n1 <= max(large, default=0):
        n1 += 1
    return 2 ** (n1 + 1)


def check_block_pair(fs, k, eps, pair: BlockPair) -> bool:
    """Re-check both block-pair conditions directly from their statements."""
    n, l, m = pair
    block = range(2**n, 2 ** (n + 1))
    if l == m or l not in block or m not in block:
        return False
    big = Fraction(1, k) if all(f.exact for f in fs) else 1 / k
    cond1 = all(abs(f.get(j)) <= big for f in fs for j in block)
    cond2 = all(abs(f.get(l) - f.get(m)) < eps for f in fs)
    return cond1 and cond2


def lemma34_witness(space, fs: Sequence[CoordVector], rtol: float = DEFAULT_RTOL) -> WitnessReport:
    """``h = e_l - e_m`` from a block pair at ``eps = 1/N``; certified bound ``1 + 1/N``.

    Inputs may have norm below 1 (sum-space projections need this).
    """
    N = space.N
    eps = Fraction(1, N)
    pair = lemma33_block_pair(space, fs, eps, rtol)
    h = CoordVector({pair.l: 1, pair.m: -1}, space.m)
    if space.norm(h) != 1:
        raise InvariantViolation(f"||e_l - e_m||_N = {space.norm(h)} != 1")
    params = {"k": space.k, "N": N, "m": space.m, "block": pair.n, "l": pair.l, "pair_m": pair.m}
    return _report("lemma34", params, space, fs, h, 1 + eps, rtol)


def required_even_N(eps) -> int:
    """Smallest even ``N > 1/eps``."""
    N = math.floor(1 / as_fraction(eps)) + 1
    return N + (N % 2)


def thm35_witness(space: SumSpace, fs: Sequence, eps, rtol: float = DEFAULT_RTOL) -> WitnessReport:
    """Witness in a c0-sum of ``X_N``: run the block-pair witness in the smallest
    component ``M > 1/eps`` and embed it there; bound ``1 + 1/M < 1 + eps``."""
    if not isinstance(space, SumSpace) or space.kind != "c0_sum":
        raise ConfigurationError("expected a c0-sum of X_N spaces")
    eps_q = as_fraction(eps)
    if not eps_q > 0:
        raise InputError(f"eps must be positive, got {eps}")
    _require_unit(space, fs, rtol, allow_below=True)
    candidates = [(c.N, i) for i, c in enumerate(space.components) if c.N > 1 / eps_q]
    if not candidates:
        need = required_even_N(eps_q)
        err = ConfigurationError(f"eps={eps} needs a component with N >= {need}; largest is {max(space.Ns)}")
        err.required_N = need
        raise err
    M, idx = min(candidates)
    comp = space.components[idx]
    inner = lemma34_witness(comp, [f[idx] for f in fs], rtol)
    h = space.embed(idx, inner.h)
    bound = 1 + Fraction(1, M)
    params = {"eps": format_value(eps), "M": M, "component": idx, **inner.params}
    rep = _report("thm35", params, space, fs, h, bound, rtol)
    rep.notes["target"] = format_value(1 + eps_q)
    rep.verdict = rep.verdict and bound < 1 + eps_q
    return rep


def linf_transfer_witness(
    left_space, ws: Sequence, right_space, xs: Sequence,
    right_witness: Callable, rtol: float = DEFAULT_RTOL,
) -> WitnessReport:
    """Witness for ``W (+)_inf X`` with ``h`` placed in the right component.

    ``right_witness(right_space, xs)`` must return a :class:`WitnessReport`.
    Each value ``||(w, x +- h)||`` is checked against ``max(||w||, ||x +- h||)``.
    """
    if len(ws) != len(xs):
        raise InputError("need one left vector per right vector")
    pairs = list(zip(ws, xs))
    for i, (w, x) in enumerate(pairs):
        total = max(left_space.norm(w), right_space.norm(x))
        if not _close(total, 1, rtol):
            raise InputError(f"pair {i} has norm {format_value(total)}, expected 1")
    inner = right_witness(right_space, list(xs))
    h = inner.h
    total_space = make_linf_sum(left_space, right_space)
    per_input, identity_ok = [], True
    for i, (w, x) in enumerate(pairs):
        nw = left_space.norm(w)
        vals = []
        for s in (1, -1):
            direct = total_space.norm((w, combine(x, h, s)))
            split = max(nw, right_space.norm(combine(x, h, s)))
            identity_ok &= direct == split
            vals.append(direct)
        per_input.append((i, max(vals)))
    h_norm = right_space.norm(h)
    bound = inner.bound
    verdict = identity_ok and all(_leq(v, bound, rtol) for _, v in per_input) and _close(h_norm, 1, rtol)
    params = {"right": inner.lemma, **inner.params}
    zero_left = left_space.zero() if hasattr(left_space, "zero") else None
    return WitnessReport(
        "linf_transfer", params, (zero_left, h), per_input, bound, h_norm, verdict,
        {"identity_exact": identity_ok},
    )


# super-ASQ sequence and the type tau --------------------------------------------


@dataclass
class SuperAsqSequence:
    space: object
    dense: list
    eps: list
    hs: list
    reports: list
    ineq_values: list  # per n: list of (i, ||x_i + h_n||, ||x_i - h_n||)
    passed: bool


def lemma43_sequence(
    space, dense_pts: Sequence, eps_seq: Sequence, witness: Callable = thm35_witness,
    rtol: float = DEFAULT_RTOL,
) -> SuperAsqSequence:
    """``h_n`` = witness for the first ``n`` dense points at ``eps_n``.

    Every ``h_n`` is checked against ``| ||x_i +- h_n|| - 1 | < eps_n`` for
    ``i <= n``.  The lower side also follows from ``||x + h|| >= 2 - ||x - h||``.
    """
    if not eps_seq:
        raise InputError("eps_seq is empty")
    if any(e <= 0 for e in eps_seq) or any(b >= a for a, b in zip(eps_seq, eps_seq[1:])):
        raise InputError("eps_seq must be strictly decreasing and positive")
    if len(dense_pts) < len(eps_seq):
        raise InputError("need at least as many dense points as eps values")
    _require_unit(space, dense_pts, rtol)
    hs, reports, table, ok = [], [], [], True
    for n, eps in enumerate(eps_seq, start=1):
        rep = witness(space, list(dense_pts[:n]), eps)
        h = rep.h
        rows = []
        for i, x in enumerate(dense_pts[:n]):
            plus = space.norm(combine(x, h, 1))
            minus = space.norm(combine(x, h, -1))
            rows.append((i, plus, minus))
            upper = max(plus, minus)
            lower = min(plus, minus)
            forced = 2 - upper
            ok &= upper - 1 < eps and 1 - lower < eps and 1 - forced < eps
        ok &= rep.verdict
        hs.append(h)
        reports.append(rep)
        table.append(rows)
    return SuperAsqSequence(space, list(dense_pts), list(eps_seq), hs, reports, table, ok)


@dataclass
class TauEstimate:
    tau: object
    target: object
    tail_variation: float
    density_gap: float
    bound: float
    two_sided_ok: bool
    passed: bool

    def to_json(self) -> dict:
        return {k: (format_value(v) if not isinstance(v, bool) else v) for k, v in self.__dict__.items()}


def _gap(space, x, norm_x, pts) -> float:
    if norm_x == 0:
        return 0.0
    u = tuple(c / norm_x for c in x) if not isinstance(x, CoordVector) else x / norm_x
    return float(min(space.norm(combine(u, d, -1)) for d in pts))


def type_tau(space, x, seq: SuperAsqSequence) -> TauEstimate:
    """Estimate ``tau(x) = lim ||x + h_n||`` from the last term of the sequence.

    The estimate is compared with ``max(||x||, 1)``.  ``density_gap`` is the
    distance from ``x/||x||`` to the dense points; the allowed error is
    ``2 eps_last + max(||x||, 1) * density_gap``.
    """
    if not seq.hs:
        raise InputError("empty witness sequence")
    norm_x = space.norm(x)
    values = [space.norm(combine(x, h, 1)) for h in seq.hs]
    tau = values[-1]
    tail = values[-3:]
    target = max(norm_x, 1)
    gap = _gap(space, x, norm_x, seq.dense)
    scale_ = max(float(norm_x), 1.0)
    bound = 2 * float(seq.eps[-1]) + scale_ * gap
    two_sided = True
    for n, (val, eps) in enumerate(zip(values, seq.eps), start=1):
        gap_n = _gap(space, x, norm_x, seq.dense[:n])
        slack = float(eps) + scale_ * gap_n + 1e-12
        two_sided &= abs(float(val) - float(target)) <= slack
    passed = abs(float(tau) - float(target)) <= bound and two_sided
    return TauEstimate(tau, target, float(max(tail) - min(tail)), gap, bound, two_sided, passed)
