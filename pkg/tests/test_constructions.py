import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from asqlab.constructions import (
    check_lemma22_config,
    deinterleave,
    interleave,
    interleave_bounds_check,
    make_c0_sum,
    make_fkn,
    make_linf_sum,
    make_xn,
    pair_to_position,
    position_to_pair,
    space_from_config,
)
from asqlab.errors import ConfigurationError, InputError
from asqlab.sampling import random_sum_unit, random_vector, trial_rng
from asqlab.vector import CoordVector


def test_make_fkn_validation():
    assert make_fkn(2, 4, 8).label
    with pytest.raises(ConfigurationError):
        make_fkn(4, 3, 8)
    with pytest.raises(ConfigurationError):
        make_fkn(2, 9, 8)


def test_coordinate_witness_configuration():
    check_lemma22_config(make_fkn(3, 9, 18))
    with pytest.raises(ConfigurationError):
        check_lemma22_config(make_fkn(4, 9, 18))
    with pytest.raises(ConfigurationError):
        check_lemma22_config(make_fkn(2, 4, 9))


def test_make_xn_validation():
    space = make_xn(2, 2, 16)
    assert space.norm(CoordVector({4: 2}, 16)) == 1
    for bad in ((1, 2, 16), (2, 0, 16), (2, 2, 1)):
        with pytest.raises(ConfigurationError):
            make_xn(*bad)


def test_c0_sum():
    space = make_c0_sum([(2, 2, 16), (2, 4, 16), (2, 6, 16)])
    z = CoordVector({}, 16)
    x = (CoordVector({4: 1, 5: -1}, 16), z, z)
    assert space.norm(x) == 1
    assert space.norm(space.zero()) == 0
    y = (CoordVector({4: 2}, 16), CoordVector({4: 1}, 16), z)
    assert space.norm(y) == 1
    assert space.Ns == [2, 4, 6]
    with pytest.raises(ConfigurationError):
        make_c0_sum([(2, 3, 16)])
    with pytest.raises(ConfigurationError):
        make_c0_sum([])


def test_linf_sum_norm():
    left, right = make_fkn(2, 4, 8), make_xn(2, 2, 16)
    space = make_linf_sum(left, right)
    w = CoordVector({1: Fraction(9, 5)}, 8)  # norm 9/10
    x = CoordVector({4: 1, 5: -1}, 16)
    assert space.norm((w, x)) == 1


def test_interleave_prefix():
    order = [position_to_pair(p) for p in range(1, 6)]
    assert order == [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1)]
    x = (CoordVector({1: 5}, 4), CoordVector({1: 7}, 4))
    Tx = interleave(x)
    assert Tx.get(1) == 5 and Tx.get(2) == 7
    assert not interleave((CoordVector({}, 4),))


@given(st.integers(1, 5000))
def test_position_bijection(p):
    assert pair_to_position(*position_to_pair(p)) == p


@given(st.integers(1, 60), st.integers(1, 60))
def test_pair_bijection(c, j):
    assert position_to_pair(pair_to_position(c, j)) == (c, j)


def test_deinterleave_rejects_foreign_positions():
    with pytest.raises(InputError):
        deinterleave(CoordVector({5: 1}, 5), [4, 4])


def test_interleave_bounds_report():
    space = make_c0_sum([(2, 2, 16), (2, 4, 16), (2, 6, 16)])
    samples = [random_sum_unit(space, trial_rng(1, i), exact=True) for i in range(100)]
    samples += [tuple(3 * c for c in s) for s in samples[:20]]
    rep = interleave_bounds_check(space, samples)
    assert rep["passed"] and rep["linear"] and rep["samples"] == 120


def test_space_from_config():
    assert space_from_config('{"kind": "Fkn", "k": 2, "n": 4, "m": 8}').kind == "Fkn"
    c0 = space_from_config({"kind": "C0Sum", "k": 2, "m": 16, "Ns": [2, 4]})
    assert c0.Ns == [2, 4]
    c0b = space_from_config({"kind": "C0Sum", "components": [{"kind": "Xn", "k": 2, "N": 2, "m": 8}]})
    assert c0b.dims == [8]
    lsum = space_from_config({"kind": "LinfSum", "left": {"kind": "Fkn", "k": 2, "n": 4, "m": 8},
                              "right": {"kind": "Xn", "k": 2, "N": 2, "m": 16}})
    assert lsum.dims == [8, 16]
    cfg = make_xn(2, 4, 32).to_config()
    assert space_from_config(json.dumps(cfg)).to_config() == cfg


@pytest.mark.parametrize("bad", ["{", '{"k": 2}', '{"kind": "Zz"}', '{"kind": "Xn", "k": 2}',
                                 '{"kind": "Xn", "k": 1, "N": 2, "m": 8}'])
def test_space_from_config_errors(bad):
    with pytest.raises(ConfigurationError):
        space_from_config(bad)


def test_sum_vector_shape_checked():
    space = make_c0_sum([(2, 2, 8)])
    with pytest.raises(InputError):
        space.norm((random_vector(trial_rng(0), 8), random_vector(trial_rng(1), 8)))
