"""The concrete spaces: F_{k,n}, X_N, c0-sums, l_inf-sums, and the interleaving map."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .norm import FunctionalFamily, PolyNormSpace, full_blocks, sum_norm
from .vector import CoordVector


def _require_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigurationError(f"{name}={value} violates {name} >= {minimum}")
    return int(value)


def make_fkn(k: int, n: int, m: int) -> PolyNormSpace:
    """``F_{k,n}``: families ``A(1/n, n)`` and ``B(1/k)`` on ``{1..m}``."""
    k, n, m = (_require_int(s, v) for s, v in (("k", k), ("n", n), ("m", m)))
    if not k <= n:
        raise ConfigurationError(f"F_{{k,n}} requires k <= n (k={k}, n={n})")
    if not n <= m:
        raise ConfigurationError(f"F_{{k,n}} requires n <= m (n={n}, m={m})")
    families = (
        FunctionalFamily.averages(Fraction(1, n), n),
        FunctionalFamily.coordinates(k),
    )
    return PolyNormSpace(families, m, label=f"F_{{{k},{n}}}(m={m})", kind="Fkn", k=k, n=n)


def check_lemma22_config(space: PolyNormSpace) -> None:
    """The coordinate-witness configuration ``k^2 <= n`` and ``m = 2n``."""
    if space.kind != "Fkn":
        raise ConfigurationError(f"expected an F_{{k,n}} space, got {space.label}")
    k, n, m = space.k, space.n, space.m
    if k * k > n:
        raise ConfigurationError(f"requires k^2 <= n (k={k}, k^2={k * k}, n={n})")
    if m != 2 * n:
        raise ConfigurationError(f"requires m = 2n (m={m}, n={n})")


def make_xn(k: int, N: int, m: int) -> PolyNormSpace:
    """``X_N``: families ``A(1/N, kN)`` (padded), ``B(1/k)`` and dyadic pairs ``C``."""
    k = _require_int("k", k, 2)
    N = _require_int("N", N, 1)
    m = _require_int("m", m, 2)
    families = (
        FunctionalFamily.averages(Fraction(1, N), k * N, padded=True),
        FunctionalFamily.coordinates(k),
        FunctionalFamily.dyadic_pairs(),
    )
    return PolyNormSpace(families, m, label=f"X_{N}(k={k},m={m})", kind="Xn", k=k, N=N)


@dataclass(frozen=True)
class SumSpace:
    """Finite c0- or l_inf-direct sum; vectors are tuples of component vectors."""

    kind: str
    components: tuple

    @property
    def label(self) -> str:
        inner = ", ".join(c.label for c in self.components)
        return f"{self.kind}[{inner}]"

    @property
    def dims(self) -> list[int]:
        return [c.dim for c in self.components]

    @property
    def dim(self) -> int:
        return sum(self.dims)

    @property
    def Ns(self) -> list[int]:
        return [c.N for c in self.components]

    def check_vector(self, x) -> None:
        if len(x) != len(self.components):
            raise InputError(f"expected {len(self.components)} components, got {len(x)}")
        for space, v in zip(self.components, x):
            space.check_vector(v)

    def norm(self, x):
        self.check_vector(x)
        return sum_norm(self.kind, list(zip(self.components, x)))

    def zero(self):
        return tuple(c.zero() for c in self.components)

    def embed(self, index: int, v) -> tuple:
        """Vector with ``v`` in component ``index`` and zeros elsewhere."""
        out = list(self.zero())
        out[index] = v
        return tuple(out)

    def batch_norm(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        start = 0
        for space, d in zip(self.components, self.dims):
            out = np.maximum(out, space.batch_norm(X[:, start:start + d]))
            start += d
        return out

    def to_array(self, x) -> np.ndarray:
        self.check_vector(x)
        return np.concatenate([space.to_array(v) for space, v in zip(self.components, x)])

    def from_array(self, arr: np.ndarray):
        out, start = [], 0
        for space, d in zip(self.components, self.dims):
            out.append(space.from_array(np.asarray(arr[start:start + d])))
            start += d
        return tuple(out)

    def linf_bounds(self) -> tuple[float, float]:
        bounds = [c.linf_bounds() for c in self.components]
        return min(b[0] for b in bounds), max(b[1] for b in bounds)

    def to_config(self) -> dict:
        kind = "C0Sum" if self.kind == "c0_sum" else "LinfSum"
        return {"kind": kind, "components": [c.to_config() for c in self.components]}


def make_c0_sum(entries: Sequence) -> SumSpace:
    """c0-sum of ``X_N`` spaces; each entry is a space or a ``(k, N, m)`` triple."""
    comps = []
    for entry in entries:
        space = entry if isinstance(entry, PolyNormSpace) else make_xn(*entry)
        if space.kind != "Xn":
            raise ConfigurationError(f"c0-sum components must be X_N spaces, got {space.label}")
        if space.N % 2:
            raise ConfigurationError(f"c0-sum components need even N, got N={space.N}")
        comps.append(space)
    if not comps:
        raise ConfigurationError("c0-sum needs at least one component")
    return SumSpace("c0_sum", tuple(comps))


def make_linf_sum(left, right) -> SumSpace:
    return SumSpace("linf_sum", (left, right))


# interleaving --------------------------------------------------------------
#
# Pairs (c, j) = (component, coordinate) are listed shell by shell,
# s = max(c, j): (s,1), (1,s), (s,2), (2,s), ..., (s,s).  The first five
# positions are (1,1), (2,1), (1,2), (2,2), (3,1).


def pair_to_position(c: int, j: int) -> int:
    s = max(c, j)
    base = (s - 1) ** 2
    if c == j:
        return base + 2 * (s - 1) + 1
    if c == s:
        return base + 2 * (j - 1) + 1
    return base + 2 * (c - 1) + 2


def position_to_pair(p: int) -> tuple[int, int]:
    if p < 1:
        raise InputError(f"position {p} < 1")
    s = math.isqrt(p - 1) + 1
    off = p - (s - 1) ** 2 - 1
    if off == 2 * (s - 1):
        return s, s
    t = off // 2 + 1
    return (s, t) if off % 2 == 0 else (t, s)


def interleave(x: Sequence[CoordVector]) -> CoordVector:
    """``T(x)``: merge component coordinates into one sequence."""
    entries = {}
    m = 1
    for c, v in enumerate(x, start=1):
        m = max(m, pair_to_position(c, v.m), pair_to_position(len(x), 1))
        for j, val in v.items():
            entries[pair_to_position(c, j)] = val
    return CoordVector(entries, m)


def deinterleave(v: CoordVector, truncations: Sequence[int]) -> tuple[CoordVector, ...]:
    parts = [dict() for _ in truncations]
    for p, val in v.items():
        c, j = position_to_pair(p)
        if c > len(truncations) or j > truncations[c - 1]:
            raise InputError(f"position {p} maps outside the component truncations")
        parts[c - 1][j] = val
    return tuple(CoordVector(d, m) for d, m in zip(parts, truncations))


def interleave_bounds_check(space: SumSpace, samples, tol: float = 1e-12) -> dict:
    """Check ``||x||/k <= ||T x||_inf <= k ||x||``, round trip and linearity on samples."""
    k = max(c.k for c in space.components)
    truncs = space.dims
    violations = []
    worst_lower = worst_upper = math.inf
    images = []
    for i, x in enumerate(samples):
        Tx = interleave(x)
        images.append(Tx)
        nx = space.norm(x)
        ninf = Tx.sup_norm()
        slack = tol * max(float(abs(nx)), 1.0) if not Tx.exact else 0
        lower_gap = ninf - Fraction(1, k) * nx if Tx.exact else ninf - nx / k
        upper_gap = k * nx - ninf
        worst_lower = min(worst_lower, float(lower_gap))
        worst_upper = min(worst_upper, float(upper_gap))
        if lower_gap < -slack or upper_gap < -slack:
            violations.append({"sample": i, "norm": nx, "sup": ninf})
        if deinterleave(Tx, truncs) != tuple(x):
            violations.append({"sample": i, "round_trip": False})
    linear = True
    for i in range(len(images) - 1):
        x, y = samples[i], samples[i + 1]
        combo = tuple(2 * a - b for a, b in zip(x, y))
        lhs = interleave(combo)
        rhs = 2 * images[i] - images[i + 1]
        top = max(lhs.m, rhs.m)
        if lhs.with_truncation(top) != rhs.with_truncation(top):
            linear = False
    return {
        "k": k,
        "samples": len(images),
        "min_lower_margin": worst_lower,
        "min_upper_margin": worst_upper,
        "linear": linear,
        "violations": violations,
        "passed": not violations and linear,
    }


# configuration -------------------------------------------------------------


def space_from_config(cfg) -> PolyNormSpace | SumSpace:
    """Build a space from ``{kind, k, n, N, m, components}`` (dict or JSON text)."""
    if isinstance(cfg, str):
        try:
            cfg = json.loads(cfg)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed space JSON: {exc}") from exc
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigurationError("space config must be an object with a 'kind'")
    kind = cfg["kind"]
    try:
        if kind == "Fkn":
            return make_fkn(cfg["k"], cfg["n"], cfg["m"])
        if kind == "Xn":
            return make_xn(cfg["k"], cfg["N"], cfg["m"])
        if kind == "C0Sum":
            if "components" in cfg:
                specs = [space_from_config(c) for c in cfg["components"]]
            else:
                specs = [make_xn(cfg["k"], N, cfg["m"]) for N in cfg["Ns"]]
            return make_c0_sum(specs)
        if kind == "LinfSum":
            if "components" in cfg:
                left, right = cfg["components"]
            else:
                left, right = cfg["left"], cfg["right"]
            return make_linf_sum(space_from_config(left), space_from_config(right))
    except KeyError as exc:
        raise ConfigurationError(f"space config of kind {kind!r} is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad space config: {exc}") from exc
    raise ConfigurationError(f"unknown space kind {kind!r}")
