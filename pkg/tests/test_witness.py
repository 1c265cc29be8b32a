from fractions import Fraction

import pytest

from asqlab.constructions import make_c0_sum, make_fkn, make_xn
from asqlab.errors import ConfigurationError, InputError, TruncationTooSmall
from asqlab.sampling import random_sum_unit, random_unit, random_vector, trial_rng
from asqlab.vector import CoordVector
from asqlab.witness import (
    check_block_pair,
    lemma22_witness,
    lemma33_block_pair,
    lemma34_witness,
    lemma43_sequence,
    linf_transfer_witness,
    remark23_witness,
    required_even_N,
    thm35_witness,
    type_tau,
)

F24 = make_fkn(2, 4, 8)
F39 = make_fkn(3, 9, 18)
X2 = make_xn(2, 2, 16)


def test_coordinate_witness_two_e1():
    rep = lemma22_witness(F24, CoordVector({1: 2}, 8))
    assert rep.h == CoordVector({2: 2}, 8)
    assert rep.worst == 1 and rep.h_norm == 1 and rep.verdict


def test_coordinate_witness_all_ones_block():
    f = CoordVector.from_dense([1, 1, 1, 1, 0, 0, 0, 0])
    rep = lemma22_witness(F24, f)
    assert rep.verdict and rep.worst <= Fraction(3, 2)


def test_coordinate_witness_random_exact():
    for i in range(200):
        f = random_unit(F39, trial_rng(3, i), exact=True)
        rep = lemma22_witness(F39, f)
        assert rep.verdict and rep.h_norm == 1 and rep.worst <= Fraction(4, 3)


def test_coordinate_witness_rejects_bad_inputs():
    with pytest.raises(ConfigurationError):
        lemma22_witness(make_fkn(4, 9, 18), CoordVector({1: 4}, 18))
    with pytest.raises(InputError):
        lemma22_witness(F24, CoordVector({1: 1}, 8))


def test_common_coordinate_examples():
    fs = [CoordVector({1: 2}, 8), CoordVector({2: 2}, 8)]
    rep = remark23_witness(F24, fs)
    assert rep.params["l"] == 3 and rep.verdict
    f = random_unit(F24, trial_rng(0), exact=True)
    assert remark23_witness(F24, [f]).verdict == lemma22_witness(F24, f).verdict


def test_common_coordinate_truncation_error():
    fs = [CoordVector({j: 2, j + 1: -2}, 8) for j in (1, 3, 5, 7)]
    with pytest.raises(TruncationTooSmall) as info:
        remark23_witness(F24, fs)
    assert info.value.required_m == 25


def test_block_pair_vacuous_and_first_block():
    assert lemma33_block_pair(X2, [], Fraction(1, 2)) == (1, 2, 3)
    # 2e_4 leaves E_1 untouched, and the first full block wins
    assert lemma33_block_pair(X2, [CoordVector({4: 2}, 16)], Fraction(1, 2)) == (1, 2, 3)


def test_block_pair_skips_large_blocks():
    f = CoordVector({2: 1, 4: Fraction(1, 4), 5: Fraction(-1, 4)}, 16)
    pair = lemma33_block_pair(X2, [f], Fraction(1, 4))
    assert pair == (2, 6, 7) and check_block_pair([f], 2, Fraction(1, 4), pair)


def test_block_pair_random():
    space = make_xn(2, 2, 512)
    for i in range(20):
        rng = trial_rng(8, i)
        fs = [random_unit(space, rng, support=255) for _ in range(2)]
        pair = lemma33_block_pair(space, fs, 0.25)
        assert check_block_pair(fs, 2, 0.25, pair)


def test_block_pair_truncation_error():
    fs = [CoordVector({j: 2}, 15) for j in (2, 4, 8)]
    with pytest.raises(TruncationTooSmall) as info:
        lemma33_block_pair(make_xn(2, 2, 15), fs, Fraction(1, 2))
    assert info.value.required_m >= 32


def test_block_witness_hand_instance():
    rep = lemma34_witness(X2, [CoordVector({4: 2}, 16)])
    assert rep.h == CoordVector({2: 1, 3: -1}, 16)
    assert rep.worst == Fraction(3, 2) == rep.bound and rep.verdict
    rep2 = lemma34_witness(X2, [CoordVector({2: 2}, 16)])
    assert rep2.verdict and rep2.bound == Fraction(3, 2)


def test_block_witness_random():
    space = make_xn(2, 4, 256)
    for i in range(10):
        rng = trial_rng(2, i)
        fs = [random_unit(space, rng, support=127) for _ in range(5)]
        rep = lemma34_witness(space, fs)
        assert rep.verdict and rep.bound == Fraction(5, 4)


def test_c0_component_choice():
    space = make_c0_sum([(2, 2, 64), (2, 4, 64), (2, 6, 64)])
    z = CoordVector({}, 64)
    f = (z, CoordVector({4: 2}, 64), z)
    rep = thm35_witness(space, [f], 0.25)
    assert rep.params["M"] == 6 and rep.verdict and rep.bound == Fraction(7, 6)
    assert thm35_witness(space, [f], 0.6).params["M"] == 2
    with pytest.raises(ConfigurationError) as info:
        thm35_witness(space, [f], 0.05)
    assert info.value.required_N == 22
    assert required_even_N(0.05) == 22 and required_even_N(Fraction(1, 4)) == 6


def test_c0_random_triples():
    space = make_c0_sum([(2, 2, 64), (2, 4, 64), (2, 6, 64)])
    for i in range(20):
        rng = trial_rng(6, i)
        fs = [random_sum_unit(space, rng, support=31) for _ in range(3)]
        rep = thm35_witness(space, fs, 0.25)
        assert rep.verdict and rep.worst <= 7 / 6 + 1e-9


def test_transfer():
    left, right = make_fkn(2, 4, 8), X2
    w = CoordVector({1: Fraction(9, 5)}, 8)
    x = CoordVector({4: 2}, 16)
    rep = linf_transfer_witness(left, [w], right, [x], lemma34_witness)
    assert rep.verdict and rep.notes["identity_exact"] and rep.worst == Fraction(3, 2)
    rep0 = linf_transfer_witness(left, [left.zero()], right, [x], lemma34_witness)
    assert rep0.per_input == lemma34_witness(right, [x]).per_input
    with pytest.raises(InputError):
        linf_transfer_witness(left, [w], right, [x, x], lemma34_witness)


def _dense(space, count, seed, low=2):
    rng = trial_rng(seed)
    pts = []
    for _ in range(count):
        parts = [random_vector(rng, c.dim, exact=True) if j < low else c.zero()
                 for j, c in enumerate(space.components)]
        norm = space.norm(tuple(parts))
        pts.append(tuple(p / norm for p in parts))
    return pts


def test_super_sequence_and_tau():
    space = make_c0_sum([(2, N, 16) for N in range(2, 36, 2)])
    eps = [Fraction(1, 2**n) for n in range(1, 6)]
    pts = _dense(space, 5, 1)
    seq = lemma43_sequence(space, pts, eps)
    assert seq.passed and len(seq.hs) == 5
    tau0 = type_tau(space, space.zero(), seq)
    assert tau0.tau == 1 and tau0.passed
    for x in pts:
        assert type_tau(space, x, seq).passed
        assert type_tau(space, tuple(2 * c for c in x), seq).passed


def test_super_sequence_input_checks():
    space = make_c0_sum([(2, N, 16) for N in (2, 4, 6)])
    pts = _dense(space, 2, 3)
    with pytest.raises(InputError):
        lemma43_sequence(space, pts, [Fraction(1, 4), Fraction(1, 2)])
    with pytest.raises(InputError):
        lemma43_sequence(space, pts[:1], [Fraction(1, 2), Fraction(1, 3)])
    with pytest.raises(InputError):
        lemma43_sequence(space, pts, [])
