"""Polyhedral norms given as suprema of structured functional families.

Three families cover every norm in the package:

* ``A(c, q)``: ``c * sum_{j in A} e_j*`` over subsets ``|A| = q``.  When the
  family is *padded* the subsets range over all of N, so indices past the
  truncation act as zero coordinates.
* ``B(1/k)``: ``(1/k) e_j*``.
* ``C``: ``(e_l* +- e_m*) / 2`` with ``l != m`` in one dyadic block
  ``E_n = {2^n, ..., 2^(n+1) - 1}``, ``n >= 1``.

:func:`family_sup` evaluates each family in closed form; :func:`enumerate_oracle`
recomputes the same supremum by exhaustive enumeration and is kept deliberately
naive so the two routes check each other.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, EnumerationCapExceeded, InputError
from .vector import CoordVector, format_value

A, B, C = "A", "B", "C"

DEFAULT_CAP = 10**7
DEFAULT_RTOL = 1e-9


def block_of(j: int) -> int:
    """Dyadic block containing index ``j``; 0 means "no block" (only j = 1)."""
    return j.bit_length() - 1


def block_indices(n: int, m: int) -> range:
    """In-range part of ``E_n``."""
    return range(2**n, min(2 ** (n + 1) - 1, m) + 1)


def full_blocks(m: int) -> Iterator[int]:
    """Blocks lying entirely inside ``{1..m}``."""
    n = 1
    while 2 ** (n + 1) - 1 <= m:
        yield n
        n += 1


@dataclass(frozen=True)
class FunctionalFamily:
    kind: str
    coeff: Fraction
    size: int = 1
    padded: bool = False

    def __post_init__(self):
        if self.kind not in (A, B, C):
            raise ConfigurationError(f"unknown family kind {self.kind!r}")
        if self.kind == A and self.size < 1:
            raise ConfigurationError("A-family needs a positive subset size")

    @classmethod
    def averages(cls, coeff, size: int, padded: bool = False) -> "FunctionalFamily":
        return cls(A, Fraction(coeff), size, padded)

    @classmethod
    def coordinates(cls, k: int) -> "FunctionalFamily":
        return cls(B, Fraction(1, k))

    @classmethod
    def dyadic_pairs(cls) -> "FunctionalFamily":
        return cls(C, Fraction(1, 2), 2)

    def l1_mass(self) -> Fraction:
        return self.coeff * self.size if self.kind != B else self.coeff

    def describe(self) -> str:
        if self.kind == A:
            tail = ", padded" if self.padded else ""
            return f"A({self.coeff}, {self.size}{tail})"
        if self.kind == B:
            return f"B({self.coeff})"
        return "C"


@dataclass(frozen=True)
class Functional:
    """An explicit sparse functional ``sum_j c_j e_j*``."""

    family: str
    coeffs: tuple[tuple[int, Fraction], ...]

    def __call__(self, f: CoordVector):
        return sum((c * f.get(j) for j, c in self.coeffs), 0)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.coeffs)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "coeffs": [[j, format_value(c)] for j, c in self.coeffs],
        }


@dataclass(frozen=True)
class PolyNormSpace:
    """``||f|| = sup |x(f)|`` over a union of families on ``{1..m}``."""

    families: tuple[FunctionalFamily, ...]
    m: int
    label: str = ""
    kind: str = "custom"
    k: int | None = None
    n: int | None = None
    N: int | None = None
    rtol: float = field(default=DEFAULT_RTOL, compare=False)

    @property
    def dim(self) -> int:
        return self.m

    def norm(self, f: CoordVector):
        return eval_norm(self, f)

    def zero(self) -> CoordVector:
        return CoordVector({}, self.m)

    def check_vector(self, f: CoordVector) -> None:
        if f.max_index > self.m:
            raise InputError(f"index {f.max_index} beyond truncation m={self.m} of {self.label}")

    def contains(self, x: Functional) -> bool:
        """True when ``x`` is literally one of the space's functionals."""
        return any(_family_contains(fam, x, self.m) for fam in self.families)

    def batch_norm(self, X: np.ndarray) -> np.ndarray:
        return batch_norm(self, X)

    def to_array(self, f: CoordVector) -> np.ndarray:
        self.check_vector(f)
        return f.dense(self.m)

    def from_array(self, x: np.ndarray) -> CoordVector:
        return CoordVector.from_dense(x.tolist(), self.m)

    def linf_bounds(self) -> tuple[float, float]:
        """Constants ``lo, hi`` with ``lo ||f||_inf <= ||f|| <= hi ||f||_inf``."""
        lo = max((float(f.coeff) for f in self.families if f.kind == B), default=0.0)
        hi = max(float(f.l1_mass()) for f in self.families)
        return lo, hi

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "m": self.m}
        for name in ("k", "n", "N"):
            if getattr(self, name) is not None:
                cfg[name] = getattr(self, name)
        return cfg


def _family_contains(fam: FunctionalFamily, x: Functional, m: int) -> bool:
    if x.family != fam.kind:
        return False
    idx = x.indices
    if len(set(idx)) != len(idx) or any(j < 1 for j in idx):
        return False
    if fam.kind == A:
        if len(idx) != fam.size or any(c != fam.coeff for _, c in x.coeffs):
            return False
        return fam.padded or all(j <= m for j in idx)
    if fam.kind == B:
        return len(idx) == 1 and idx[0] <= m and x.coeffs[0][1] == fam.coeff
    if len(idx) != 2 or any(j > m for j in idx):
        return False
    l, j = idx
    if block_of(l) < 1 or block_of(l) != block_of(j):
        return False
    return {abs(c) for _, c in x.coeffs} == {Fraction(1, 2)}


# closed forms ---------------------------------------------------------------


def _zero_indices(f: CoordVector, m: int, count: int, exclude=()) -> list[int]:
    """Smallest indices where ``f`` vanishes, spilling past ``m`` if needed."""
    out, skip = [], set(f.support) | set(exclude)
    j = 1
    while len(out) < count:
        if j not in skip:
            out.append(j)
        j += 1
    return out


def _a_extreme(fam: FunctionalFamily, f: CoordVector, m: int, sign: int, with_indices=False):
    """Max of ``sign * sum_{j in A} f_j`` over admissible ``A``."""
    q = fam.size
    if not fam.padded and q > m:
        raise ConfigurationError(f"A-family size {q} exceeds truncation m={m}")
    ranked = sorted(((sign * v, j) for j, v in f.items()), key=lambda t: (-t[0], t[1]))
    pos = [t for t in ranked if t[0] > 0]
    neg = [t for t in ranked if t[0] < 0]
    take = pos[:q]
    r = q - len(take)
    zeros_avail = (m - len(f)) + (q if fam.padded else 0)
    z = min(r, zeros_avail)
    r -= z
    take_neg = neg[:r]
    total = sum((t[0] for t in take), 0) + sum((t[0] for t in take_neg), 0)
    if not with_indices:
        return total, None
    indices = [j for _, j in take] + [j for _, j in take_neg]
    indices += _zero_indices(f, m, z, exclude=indices)
    return total, sorted(indices)


def _c_blocks(f: CoordVector, m: int) -> dict[int, list]:
    blocks: dict[int, list] = {}
    for j, v in f.items():
        n = block_of(j)
        if n >= 1 and len(block_indices(n, m)) >= 2:
            blocks.setdefault(n, []).append((abs(v), j, v))
    return blocks


def family_sup(fam: FunctionalFamily, f: CoordVector, m: int | None = None):
    """Closed-form ``sup |x(f)|`` over one family at truncation ``m``."""
    m = f.m if m is None else m
    return family_argmax(fam, f, m, with_functional=False)[0]


def family_argmax(fam: FunctionalFamily, f: CoordVector, m: int, with_functional=True):
    """``(value, functional)`` attaining the family supremum; smallest index wins ties."""
    if fam.kind == A:
        top, idx_top = _a_extreme(fam, f, m, 1, with_functional)
        bot, idx_bot = _a_extreme(fam, f, m, -1, with_functional)
        best, idx = (top, idx_top) if top >= bot else (bot, idx_bot)
        value = fam.coeff * best
        x = Functional(A, tuple((j, fam.coeff) for j in idx)) if with_functional else None
        return value, x
    if fam.kind == B:
        if not f:
            return 0 * fam.coeff, Functional(B, ((1, fam.coeff),))
        j, v = min(f.items(), key=lambda t: (-abs(t[1]), t[0]))
        return fam.coeff * abs(v), Functional(B, ((j, fam.coeff),))
    best_val, best_pair = 0, None
    for n, entries in sorted(_c_blocks(f, m).items()):
        entries.sort(key=lambda t: (-t[0], t[1]))
        a = entries[0]
        if len(entries) > 1:
            b = entries[1]
        else:
            zero = next(j for j in block_indices(n, m) if j != a[1])
            b = (0, zero, 0)
        val = fam.coeff * (a[0] + b[0])
        if best_pair is None or val > best_val:
            best_val, best_pair = val, (a, b)
    if best_pair is None:
        if not with_functional:
            return 0 * fam.coeff, None
        return 0 * fam.coeff, _first_c_functional(m)
    if not with_functional:
        return best_val, None
    (_, l, vl), (_, j, vj) = best_pair
    s = -1 if (vl > 0) != (vj > 0) and vl != 0 and vj != 0 else 1
    lo, hi = sorted((l, j))
    half = Fraction(1, 2)
    return best_val, Functional(C, ((lo, half), (hi, s * half)))


def _first_c_functional(m: int):
    if m < 3:
        return None
    return Functional(C, ((2, Fraction(1, 2)), (3, Fraction(1, 2))))


# float vectors with at least this many nonzeros go through the vectorised path
FAST_PATH_MIN = 256


def eval_norm(space: PolyNormSpace, f: CoordVector):
    """``sup |x(f)|`` over every family of ``space``; exact for exact ``f``."""
    space.check_vector(f)
    if len(f) >= FAST_PATH_MIN and not f.exact:
        return float(batch_norm(space, f.dense(space.m)[None, :])[0])
    return max(family_sup(fam, f, space.m) for fam in space.families)


def norming_functional(space: PolyNormSpace, f: CoordVector):
    """``(||f||, x)`` with ``x`` a functional of the space attaining the norm.

    Families are scanned in declaration order; an earlier family keeps ties.
    """
    space.check_vector(f)
    best = None
    for fam in space.families:
        val, x = family_argmax(fam, f, space.m)
        if x is not None and (best is None or val > best[0]):
            best = (val, x)
    return best


# brute-force oracle ---------------------------------------------------------


def count_functionals(fam: FunctionalFamily, m: int) -> int:
    if fam.kind == A:
        pool = m + fam.size if fam.padded else m
        return math.comb(pool, fam.size)
    if fam.kind == B:
        return m
    return sum(2 * math.comb(len(block_indices(n, m)), 2) for n in range(1, m.bit_length()))


def iter_functionals(fam: FunctionalFamily, m: int) -> Iterator[Functional]:
    """Every functional of ``fam`` on ``{1..m}`` (padded A-subsets reach ``m + q``)."""
    if fam.kind == A:
        pool = range(1, (m + fam.size if fam.padded else m) + 1)
        for subset in itertools.combinations(pool, fam.size):
            yield Functional(A, tuple((j, fam.coeff) for j in subset))
    elif fam.kind == B:
        for j in range(1, m + 1):
            yield Functional(B, ((j, fam.coeff),))
    else:
        half = Fraction(1, 2)
        for n in range(1, m.bit_length()):
            for l, j in itertools.combinations(block_indices(n, m), 2):
                yield Functional(C, ((l, half), (j, half)))
                yield Functional(C, ((l, half), (j, -half)))


def _a_class_count(mults: Sequence[int], q: int) -> int:
    """Number of count vectors ``0 <= c_i <= mults[i]`` summing to ``q``."""
    poly = [1] + [0] * q
    for mu in mults:
        new = [0] * (q + 1)
        for d, coef in enumerate(poly):
            if coef:
                for c in range(min(mu, q - d) + 1):
                    new[d + c] += coef
        poly = new
    return poly[q]


def _a_oracle_grouped(fam: FunctionalFamily, f: CoordVector, m: int, cap: int):
    """Enumerate A-subsets grouped by the multiset of values they pick.

    Subsets picking the same multiset of coordinate values evaluate to the same
    number, so each class is evaluated once; the multiplicities are summed and
    checked against ``C(pool, q)`` so no subset is missed.
    """
    q = fam.size
    pool = m + q if fam.padded else m
    if q > pool:
        raise ConfigurationError(f"A-family size {q} exceeds truncation m={m}")
    counts = Counter(f.values())
    counts[0] += pool - len(f)
    values = list(counts)
    mults = [counts[v] for v in values]
    classes = _a_class_count(mults, q)
    if classes > cap:
        raise EnumerationCapExceeded(classes, cap)
    best = 0
    covered = 0
    suffix = list(itertools.accumulate(reversed(mults)))[::-1] + [0]

    def walk(i, remaining, partial, weight):
        nonlocal best, covered
        if remaining == 0:
            best = max(best, abs(partial))
            covered += weight
            return
        if i == len(values) or suffix[i] < remaining:
            return
        for c in range(min(mults[i], remaining), -1, -1):
            walk(i + 1, remaining - c, partial + c * values[i], weight * math.comb(mults[i], c))

    walk(0, q, 0, 1)
    if covered != math.comb(pool, q):
        raise AssertionError("grouped enumeration missed subsets")
    return fam.coeff * best


def enumerate_oracle(space: PolyNormSpace, f: CoordVector, cap: int = DEFAULT_CAP, grouped: bool = True):
    """Brute-force ``sup |x(f)|`` over every functional of ``space``.

    With ``grouped=False`` every functional is materialised; otherwise A-subsets
    are enumerated by value class (see :func:`_a_oracle_grouped`).  The cap bounds
    the number of evaluations and the oracle refuses rather than sample.
    """
    space.check_vector(f)
    if not grouped:
        total = sum(count_functionals(fam, space.m) for fam in space.families)
        if total > cap:
            raise EnumerationCapExceeded(total, cap)
    best = 0
    for fam in space.families:
        if fam.kind == A and grouped:
            best = max(best, _a_oracle_grouped(fam, f, space.m, cap))
            continue
        if grouped and count_functionals(fam, space.m) > cap:
            raise EnumerationCapExceeded(count_functionals(fam, space.m), cap)
        for x in iter_functionals(fam, space.m):
            best = max(best, abs(x(f)))
    return best


# projections and sums ------------------------------------------------------


def project(f: CoordVector, K: int) -> CoordVector:
    """``P_K f``: keep coordinates ``1..K``."""
    if K < 0:
        raise InputError(f"K={K} must be nonnegative")
    return CoordVector({j: v for j, v in f.items() if j <= K}, f.m)


def monotone_limit_check(space: PolyNormSpace, f: CoordVector, tol: float | None = None) -> dict:
    """Sweep ``||P_K f||`` over ``K = 1..m``.

    Passes when the sweep is nondecreasing and equals ``||f||`` from the last
    support index on.
    """
    exact = f.exact
    if tol is None:
        tol = 0 if exact else space.rtol
    full = eval_norm(space, f)
    values = [eval_norm(space, project(f, K)) for K in range(1, space.m + 1)]
    slack = tol * max(abs(full), 1)
    monotone = all(b >= a - slack for a, b in zip(values, values[1:]))
    K_star = max(f.max_index, 1)
    reaches = all(abs(v - full) <= slack for v in values[K_star - 1:])
    return {
        "values": values,
        "norm": full,
        "support_end": K_star,
        "monotone": monotone,
        "reaches_limit": reaches,
        "passed": monotone and reaches,
    }


SUM_KINDS = ("c0_sum", "linf_sum")


def sum_norm(kind: str, components) -> float:
    """Norm of a finitely supported element of a c0- or l_inf-sum.

    ``components`` is a sequence of ``(space, vector)`` pairs; both kinds take
    the max of component norms at finite truncation.
    """
    if kind not in SUM_KINDS:
        raise InputError(f"sum kind must be one of {SUM_KINDS}, got {kind!r}")
    return max((space.norm(v) for space, v in components), default=0)


# vectorised float evaluation -------------------------------------------------


def batch_norm(space: PolyNormSpace, X: np.ndarray) -> np.ndarray:
    """Float norms of the rows of ``X`` (shape ``(batch, m)``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != space.m:
        raise InputError(f"expected {space.m} columns, got {X.shape[1]}")
    out = np.zeros(X.shape[0])
    absX = np.abs(X)
    for fam in space.families:
        c = float(fam.coeff)
        if fam.kind == A:
            q = fam.size
            if fam.padded:
                q = min(q, space.m)
                top = -np.sort(-np.maximum(X, 0), axis=1)[:, :q].sum(axis=1)
                bot = -np.sort(-np.maximum(-X, 0), axis=1)[:, :q].sum(axis=1)
            else:
                S = np.sort(X, axis=1)
                top = S[:, -q:].sum(axis=1)
                bot = -S[:, :q].sum(axis=1)
            val = c * np.maximum(top, bot)
        elif fam.kind == B:
            val = c * absX.max(axis=1)
        else:
            val = np.zeros(X.shape[0])
            for n in range(1, space.m.bit_length()):
                r = block_indices(n, space.m)
                if len(r) < 2:
                    continue
                blk = absX[:, r.start - 1:r.stop - 1]
                two = -np.partition(-blk, 1, axis=1)[:, :2] if blk.shape[1] > 2 else blk
                val = np.maximum(val, c * two.sum(axis=1))
        out = np.maximum(out, val)
    return out
