"""Seeded random vectors for sweeps and property checks.

Every randomized routine takes an explicit ``numpy.random.Generator``;
:func:`trial_rng` derives the per-trial generator as ``seed + trial_index``.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .vector import CoordVector

FLOAT_STYLES = ("dense", "sparse", "spiky", "uniform")


def trial_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed + index)


def random_palette(rng: np.random.Generator, size: int) -> list[Fraction]:
    vals = set()
    while len(vals) < size:
        p = int(rng.integers(-9, 10))
        if p:
            vals.add(Fraction(p, int(rng.integers(1, 7))))
    return sorted(vals)


def random_vector(
    rng: np.random.Generator,
    m: int,
    *,
    exact: bool = False,
    support: int | None = None,
    style: str | None = None,
) -> CoordVector:
    """Random nonzero vector on ``{1..m}`` with entries confined to ``{1..support}``.

    Exact vectors draw coordinates from a small random palette of rationals so
    that ties (the delicate case for closed-form sups) are frequent.
    """
    support = m if support is None else min(support, m)
    while True:
        size = int(rng.integers(1, support + 1))
        idx = rng.choice(np.arange(1, support + 1), size=size, replace=False)
        if exact:
            palette = random_palette(rng, int(rng.integers(1, 6)))
            vals = [palette[int(i)] for i in rng.integers(0, len(palette), size=size)]
        else:
            kind = style or FLOAT_STYLES[int(rng.integers(0, len(FLOAT_STYLES)))]
            if kind == "dense":
                idx = np.arange(1, support + 1)
                vals = rng.normal(size=support)
            elif kind == "uniform":
                idx = np.arange(1, support + 1)
                vals = rng.uniform(-1, 1, size=support)
            elif kind == "spiky":
                vals = rng.normal(scale=0.1, size=size)
                spikes = rng.integers(0, size, size=min(size, 3))
                vals[spikes] += rng.choice([-3.0, 3.0], size=len(spikes))
            else:
                vals = rng.normal(size=size) * rng.exponential(size=size)
        f = CoordVector(zip((int(i) for i in idx), vals), m)
        if f:
            return f


def random_unit(space, rng: np.random.Generator, **kwargs) -> CoordVector:
    """``v / ||v||`` for a random ``v`` (exact when ``exact=True``)."""
    f = random_vector(rng, space.m, **kwargs)
    return f / space.norm(f)


def random_sum_unit(space, rng: np.random.Generator, **kwargs):
    """Unit vector of a sum space; a random nonempty subset of components is nonzero."""
    comps = space.components
    while True:
        active = rng.random(len(comps)) < 0.6
        if active.any():
            break
    parts = tuple(
        random_vector(rng, c.dim, **kwargs) if on else c.zero()
        for c, on in zip(comps, active)
    )
    norm = space.norm(parts)
    return tuple(p / norm for p in parts)


def random_sphere_points(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    g = rng.normal(size=(count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
