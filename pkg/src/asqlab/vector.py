"""Finitely supported coordinate vectors on a truncation {1, ..., m}.

Values are either exact (``int``/``Fraction``) or floating point.  A vector
is exact when every stored value is exact; mixing in a single float makes
the arithmetic float, as with Python numbers.
"""

from __future__ import annotations

import csv
import io
import numbers
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import InputError


def is_exact(value) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def parse_number(text: str, exact: bool = True):
    """Parse ``p/q`` or a decimal literal.

    In exact mode decimals are read exactly (``"0.1"`` -> ``1/10``).
    """
    text = text.strip()
    if not text:
        raise InputError("empty numeric field")
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a number: {text!r}") from exc
    if exact:
        return value
    return float(value)


def as_fraction(value) -> Fraction:
    """Exact rational for ``value``; floats go through their decimal repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(repr(float(value)))


class CoordVector:
    """Sparse real vector indexed by 1..m, with no stored zeros.

    Instances are treated as immutable.
    """

    __slots__ = ("_data", "m")

    def __init__(self, entries: Mapping[int, numbers.Real] | Iterable = (), m: int | None = None):
        items = entries.items() if isinstance(entries, Mapping) else entries
        data = {}
        for j, v in items:
            if type(j) is not int:
                if isinstance(j, bool) or not isinstance(j, numbers.Integral):
                    raise InputError(f"index {j!r} is not an integer")
                j = int(j)
            if j < 1:
                raise InputError(f"index {j} < 1")
            if isinstance(v, np.generic):
                v = v.item()
            if v != 0:
                data[j] = data.get(j, 0) + v
        data = {j: data[j] for j in sorted(data) if data[j] != 0}
        if m is None:
            m = max(data, default=1)
        if m < 1:
            raise InputError(f"truncation m={m} must be >= 1")
        if data and max(data) > m:
            raise InputError(f"index {max(data)} exceeds truncation m={m}")
        self._data = data
        self.m = int(m)

    # construction helpers

    @classmethod
    def unit(cls, j: int, m: int, scale=1) -> "CoordVector":
        """``scale * e_j``."""
        return cls({j: scale}, m)

    @classmethod
    def from_dense(cls, values, m: int | None = None) -> "CoordVector":
        """Vector whose j-th coordinate is ``values[j-1]``."""
        values = list(values)
        if m is None:
            m = max(len(values), 1)
        return cls(((j + 1, v) for j, v in enumerate(values)), m)

    # access

    def get(self, j: int):
        return self._data.get(j, 0)

    def __getitem__(self, j: int):
        return self._data.get(j, 0)

    def items(self):
        return self._data.items()

    def values(self):
        return self._data.values()

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self._data)

    @property
    def max_index(self) -> int:
        """Largest support index, 0 for the zero vector."""
        return next(reversed(self._data), 0) if self._data else 0

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in self._data.values())

    def __len__(self):
        return len(self._data)

    def __iter__(self) -> Iterator[int]:
        return iter(self._data)

    def __bool__(self):
        return bool(self._data)

    def sup_norm(self):
        return max((abs(v) for v in self._data.values()), default=0)

    def dense(self, m: int | None = None) -> np.ndarray:
        m = self.m if m is None else m
        out = np.zeros(m)
        for j, v in self._data.items():
            if j <= m:
                out[j - 1] = float(v)
        return out

    # arithmetic

    def _check_compatible(self, other):
        if not isinstance(other, CoordVector):
            return NotImplemented
        return max(self.m, other.m)

    def __add__(self, other):
        m = self._check_compatible(other)
        if m is NotImplemented:
            return m
        data = dict(self._data)
        for j, v in other._data.items():
            data[j] = data.get(j, 0) + v
        return CoordVector(data, m)

    def __sub__(self, other):
        if not isinstance(other, CoordVector):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return CoordVector({j: -v for j, v in self._data.items()}, self.m)

    def __mul__(self, t):
        if not isinstance(t, numbers.Real):
            return NotImplemented
        return CoordVector({j: t * v for j, v in self._data.items()}, self.m)

    __rmul__ = __mul__

    def __truediv__(self, t):
        if not isinstance(t, numbers.Real):
            return NotImplemented
        if t == 0:
            raise ZeroDivisionError("division of a vector by zero")
        if is_exact(t) and self.exact:
            t = Fraction(t)
        return CoordVector({j: v / t for j, v in self._data.items()}, self.m)

    def __eq__(self, other):
        if not isinstance(other, CoordVector):
            return NotImplemented
        return self.m == other.m and self._data == other._data

    def __hash__(self):
        return hash((self.m, tuple(self._data.items())))

    def __repr__(self):
        body = ", ".join(f"{j}: {v}" for j, v in self._data.items())
        return f"CoordVector({{{body}}}, m={self.m})"

    # conversions

    def to_float(self) -> "CoordVector":
        return CoordVector({j: float(v) for j, v in self._data.items()}, self.m)

    def to_exact(self) -> "CoordVector":
        return CoordVector({j: as_fraction(v) for j, v in self._data.items()}, self.m)

    def with_truncation(self, m: int) -> "CoordVector":
        return CoordVector(self._data, m)

    def restrict(self, indices) -> "CoordVector":
        keep = set(indices)
        return CoordVector({j: v for j, v in self._data.items() if j in keep}, self.m)


def format_value(v) -> str:
    """``p/q`` for exact values, 17 significant digits for floats."""
    if is_exact(v):
        v = Fraction(v)
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return format(float(v), ".17g")


def read_vector_csv(text: str, m: int, exact: bool = True) -> CoordVector:
    """Parse the ``index,value`` exchange format (blank lines and ``#`` comments skipped)."""
    entries = []
    for row in csv.reader(io.StringIO(text)):
        if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise InputError(f"expected 'index,value', got {row!r}")
        try:
            j = int(row[0])
        except ValueError as exc:
            raise InputError(f"bad index {row[0]!r}") from exc
        entries.append((j, parse_number(row[1], exact)))
    return CoordVector(entries, m)


def write_vector_csv(f: CoordVector) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for j, v in f.items():
        writer.writerow([j, format_value(v)])
    return buf.getvalue()


def combine(a, b, sign: int = 1):
    """``a + sign * b`` for vectors or (nested) tuples of component vectors."""
    if isinstance(a, CoordVector):
        return a + b if sign > 0 else a - b
    return tuple(combine(x, y, sign) for x, y in zip(a, b))


def scale(t, a):
    if isinstance(a, CoordVector):
        return t * a
    return tuple(scale(t, x) for x in a)


def all_exact(a) -> bool:
    if isinstance(a, CoordVector):
        return a.exact
    return all(all_exact(x) for x in a)
