import math

import numpy as np
import pytest

from asqlab.constructions import make_fkn, make_xn
from asqlab.errors import InputError, RankError
from asqlab.moduli import (
    Ellipsoid,
    PolytopeNorm,
    SearchConfig,
    asq_modulus,
    contact_point,
    grid_rows,
    john_sandwich_check,
    lasq_modulus,
    mvee,
    mvee_minimality,
    prop21_certificate,
    random_symmetric_polytope,
    sphere_grid,
)
from asqlab.vector import CoordVector

SQUARE = np.array([[1.0, 1.0], [1.0, -1.0]])
CROSS = np.eye(2)


class Euclid:
    dim = 2

    def batch_norm(self, X):
        return np.linalg.norm(np.atleast_2d(X), axis=1)

    def linf_bounds(self):
        return 1.0, math.sqrt(2)


def test_mvee_square_is_circle_radius_sqrt2():
    E = mvee(PolytopeNorm(SQUARE).vertices)
    np.testing.assert_allclose(E.Q, np.eye(2) / 2, atol=1e-6)
    assert mvee_minimality(PolytopeNorm(SQUARE).vertices, E)


def test_mvee_cross_polytope():
    E = mvee(PolytopeNorm(CROSS).vertices)
    np.testing.assert_allclose(E.Q, np.eye(2), atol=1e-6)


def test_polytope_norm():
    sq = PolytopeNorm(SQUARE)
    assert sq.norm([1, 0]) == pytest.approx(1.0)
    assert sq.norm([0.5, 0.5]) == pytest.approx(0.5)
    cross = PolytopeNorm(CROSS)
    assert cross.norm([1, 1]) == pytest.approx(2.0)
    with pytest.raises(RankError):
        PolytopeNorm([[1.0, 1.0], [2.0, 2.0]])


def test_sandwich_and_contact_point():
    V = PolytopeNorm(SQUARE).vertices
    E = mvee(V)
    assert john_sandwich_check(V, E)["passed"]
    assert not john_sandwich_check(V, E.scaled(0.5))["passed"]
    x = contact_point(V, E)
    assert PolytopeNorm(SQUARE).norm(x) == pytest.approx(1.0)
    assert E.norm(x) == pytest.approx(1.0, abs=1e-6)


def test_random_polytopes_sandwich():
    for i in range(5):
        V = random_symmetric_polytope(np.random.default_rng(i), 3)
        E = mvee(V)
        assert john_sandwich_check(V, E, samples=500, seed=i)["passed"]


def test_uniform_bound_square_value_two():
    cert = prop21_certificate(SQUARE, samples=200, seed=0, grid_res=0.01)
    assert cert["passed"]
    assert cert["worst_value"] == pytest.approx(2.0)
    assert cert["bound"] == pytest.approx(math.sqrt(1.5))


def test_lasq_linf_and_euclid():
    linf = make_fkn(1, 1, 2)
    est = lasq_modulus(linf, CoordVector({1: 1, 2: 1}, 2), SearchConfig(starts=5, seed=0, grid_res=0.01))
    assert est.value_upper == pytest.approx(2.0)
    assert est.value_lower <= 2.0
    euc = lasq_modulus(Euclid(), np.array([1.0, 0.0]), SearchConfig(starts=5, seed=0, grid_res=0.01))
    assert euc.value_upper == pytest.approx(math.sqrt(2), rel=1e-6)
    assert euc.value_lower <= math.sqrt(2)


def test_lasq_xn_good_and_bad_points():
    space = make_xn(2, 2, 16)
    good = lasq_modulus(space, CoordVector({4: 1, 5: -1}, 16), SearchConfig(starts=4, iters=100, seed=0))
    assert good.value_upper <= 1.5
    bad = lasq_modulus(space, CoordVector({4: 2}, 16), SearchConfig(starts=4, iters=100, seed=0))
    assert bad.value_upper >= 7 / 6


def test_asq_modulus_requires_unit_inputs():
    with pytest.raises(InputError):
        asq_modulus(make_fkn(1, 1, 2), [CoordVector({1: 2}, 2)])


def test_sphere_grid_mesh_and_rows():
    space = make_fkn(1, 1, 2)
    G, mesh = sphere_grid(space, 0.1)
    np.testing.assert_allclose(space.batch_norm(G), 1)
    assert 0 < mesh <= 0.1 + 1e-12
    rows = list(grid_rows(space, [CoordVector({1: 1, 2: 1}, 2)], 0.5))
    assert len(rows[0]) == 3
    with pytest.raises(InputError):
        sphere_grid(make_fkn(1, 1, 4), 0.5)


def test_search_is_deterministic():
    space = make_xn(2, 2, 16)
    cfg = SearchConfig(starts=3, iters=50, seed=4)
    a = lasq_modulus(space, CoordVector({4: 2}, 16), cfg)
    b = lasq_modulus(space, CoordVector({4: 2}, 16), cfg)
    assert a.value_upper == b.value_upper
    np.testing.assert_array_equal(a.argmin, b.argmin)


def test_ellipsoid_helpers():
    E = Ellipsoid(np.eye(2) / 4)
    assert E.norm([2, 0]) == pytest.approx(1.0)
    pts = E.boundary_points(np.array([[1.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_allclose(E.batch_norm(pts), 1)
