"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts.  Tolerances: exact comparisons in rational mode, relative 1e-12
for float sandwiches, 1e-6 for the MVEE, 1e-9 for the contact-point bound.
"""

import math
import time
from fractions import Fraction

import numpy as np

from asqlab.certificates import build_counterexample, refute_lasq_sweep, refute_unit_h, verify_certificate
from asqlab.constructions import make_c0_sum, make_fkn, make_xn
from asqlab.moduli import PolytopeNorm, mvee, prop21_certificate, random_symmetric_polytope
from asqlab.norm import enumerate_oracle, eval_norm, monotone_limit_check
from asqlab.sampling import random_sum_unit, random_unit, random_vector, trial_rng
from asqlab.vector import CoordVector
from asqlab.witness import lemma22_witness, lemma34_witness, lemma43_sequence, linf_transfer_witness, thm35_witness, type_tau


def test_criterion_01_oracle_equivalence(criterion):
    spaces = [make_fkn(2, 4, 8), make_fkn(3, 9, 18), make_xn(2, 2, 16), make_xn(2, 4, 32)]
    start = time.perf_counter()
    mismatches = 0
    for s, space in enumerate(spaces):
        for i in range(1000):
            f = random_vector(trial_rng(1000 * s, i), space.m, exact=True)
            mismatches += eval_norm(space, f) != enumerate_oracle(space, f)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    criterion(1, ok, f"4x1000 rational vectors, mismatches={mismatches}, {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_02_sandwiches(criterion):
    cases = [(make_fkn(2, 4, 8), 1), (make_fkn(3, 9, 18), 1), (make_xn(2, 2, 16), None), (make_xn(2, 4, 32), None)]
    violations = 0
    for s, (space, hi) in enumerate(cases):
        upper = 1 if hi else space.k
        for exact in (True, False):
            for i in range(1000):
                f = random_vector(trial_rng(2000 * s + exact, i), space.m, exact=exact)
                sup, nf = f.sup_norm(), space.norm(f)
                if exact:
                    bad = not (Fraction(sup) / space.k <= nf <= upper * sup)
                else:
                    bad = not (sup / space.k * (1 - 1e-12) <= nf <= upper * sup * (1 + 1e-12))
                violations += bad
    ok = violations == 0
    criterion(2, ok, f"F_(2,4),F_(3,9) upper 1; X_2,X_4 upper k; 1000 exact + 1000 float each, violations={violations}")
    assert ok


def test_criterion_03_coordinate_witness(criterion):
    violations = 0
    for s, space in enumerate((make_fkn(2, 4, 8), make_fkn(3, 9, 18))):
        bound = 1 + Fraction(1, space.k)
        for i in range(1000):
            f = random_unit(space, trial_rng(3000 * s, i), exact=True)
            rep = lemma22_witness(space, f)
            violations += not (rep.h_norm == 1 and rep.worst <= bound and rep.verdict)
    hand = lemma22_witness(make_fkn(2, 4, 8), CoordVector({1: 2}, 8))
    ok = violations == 0 and hand.worst == 1
    criterion(3, ok, f"2x1000 unit f, violations={violations}; f=2e_1 gives {hand.worst}")
    assert ok


def test_criterion_04_block_pair_witness(criterion):
    start = time.perf_counter()
    violations, worst = 0, {}
    for N in (2, 4):
        space = make_xn(2, N, 4096)
        bound = 1 + Fraction(1, N)
        worst[N] = 0
        for i in range(100):
            rng = trial_rng(4000 + N, i)
            fs = [random_unit(space, rng, support=2047) for _ in range(5)]
            rep = lemma34_witness(space, fs)
            worst[N] = max(worst[N], rep.worst)
            violations += not (rep.h_norm == 1 and rep.worst <= bound * (1 + 1e-9) and rep.verdict)
    elapsed = time.perf_counter() - start
    hand = lemma34_witness(make_xn(2, 2, 16), [CoordVector({4: 2}, 16)])
    ok = violations == 0 and hand.worst == Fraction(3, 2) and elapsed < 120
    criterion(4, ok, f"N=2 worst {float(worst[2]):.6f}, N=4 worst {float(worst[4]):.6f}, violations={violations}, "
                     f"hand instance {hand.worst}, {elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_05_lasq_failure(criterion):
    sweep = refute_lasq_sweep(2, 2, 16, starts=200, seed=5)
    space = make_xn(2, 2, 16)
    f = build_counterexample(2, 2, 16)
    eps = Fraction(1, 8)
    failures = 0
    for i in range(200):
        h = random_unit(space, trial_rng(5000, i))
        try:
            cert = refute_unit_h(space, f, h, eps)
            failures += not verify_certificate(space, f, h, cert, eps, use_oracle=True)
        except Exception:
            failures += 1
    ok = sweep["best_value"] >= 7 / 6 and sweep["passed"] and failures == 0
    criterion(5, ok, f"best found {sweep['best_value']:.6f} (>= 7/6), {sweep['refuted']}/{sweep['visited']} visited h "
                     f"refuted, 200 random h: failures={failures}")
    assert ok


def test_criterion_06_c0_component_choice(criterion):
    space = make_c0_sum([(2, N, 2048) for N in (2, 4, 6)])
    Ms, worst, violations = set(), 0, 0
    for i in range(100):
        rng = trial_rng(6000, i)
        fs = [random_sum_unit(space, rng, support=1023) for _ in range(3)]
        rep = thm35_witness(space, fs, 0.25)
        Ms.add(rep.params["M"])
        worst = max(worst, rep.worst)
        violations += not (rep.verdict and rep.worst <= (1 + 1 / 6) * (1 + 1e-9))
    ok = Ms == {6} and violations == 0 and worst < 1.25
    criterion(6, ok, f"M={sorted(Ms)}, worst {worst:.6f} <= 7/6 < 1.25, violations={violations}")
    assert ok


def test_criterion_07_john_ellipsoid(criterion):
    start = time.perf_counter()
    square = np.array([[1.0, 1.0], [1.0, -1.0]])
    E = mvee(PolytopeNorm(square).vertices)
    radius_ok = np.allclose(E.Q, np.eye(2) / 2, atol=1e-6)
    sq = prop21_certificate(square, samples=1000, seed=7, grid_res=1e-3)
    square_ok = sq["worst_value"] >= math.sqrt(1.5) - 1e-9 and sq["violations"] == 0
    violations = 0
    low = math.inf
    for i in range(50):
        V = random_symmetric_polytope(trial_rng(7000, i), 3)
        cert = prop21_certificate(V, samples=10_000, seed=7000 + i)
        violations += cert["violations"]
        low = min(low, cert["worst_value"])
    elapsed = time.perf_counter() - start
    ok = radius_ok and square_ok and violations == 0 and low >= math.sqrt(4 / 3) - 1e-9 and elapsed < 300
    criterion(7, ok, f"square MVEE radius sqrt2 ok={radius_ok}, square worst {sq['worst_value']:.9f}; "
                     f"50 polytopes min {low:.6f} >= {math.sqrt(4 / 3):.6f}, violations={violations}, {elapsed:.1f}s")
    assert ok


def test_criterion_08_projection_monotone(criterion):
    space = make_xn(2, 4, 32)
    failures = sum(not monotone_limit_check(space, random_vector(trial_rng(8000, i), 32, exact=True))["passed"]
                   for i in range(200))
    ok = failures == 0
    criterion(8, ok, f"200 rational f in X_4(m=32), failures={failures}")
    assert ok


def test_criterion_09_tau(criterion):
    space = make_c0_sum([(2, N, 16) for N in range(2, 68, 2)])
    eps_seq = [Fraction(1, 3 * n + 4) for n in range(1, 21)]
    rng = trial_rng(9000)
    dense = []
    for _ in range(20):
        parts = [random_vector(rng, 16, exact=True) if j < 2 else c.zero() for j, c in enumerate(space.components)]
        norm = space.norm(tuple(parts))
        dense.append(tuple(p / norm for p in parts))
    seq = lemma43_sequence(space, dense, eps_seq)
    tests = [space.zero(), *dense, *(tuple(2 * c for c in x) for x in dense)]
    worst_slack, bad = math.inf, 0
    for x in tests:
        est = type_tau(space, x, seq)
        allowed = 2 / 64 + est.density_gap
        slack = allowed - abs(float(est.tau) - float(est.target))
        worst_slack = min(worst_slack, slack)
        bad += slack < 0
    ok = seq.passed and bad == 0 and eps_seq[-1] == Fraction(1, 64)
    criterion(9, ok, f"{len(tests)} test points, eps_last={eps_seq[-1]}, min slack {worst_slack:.6f}, failures={bad}")
    assert ok


def test_criterion_10_linf_transfer(criterion):
    left, right = make_fkn(2, 4, 8), make_xn(2, 2, 64)
    failures, identity = 0, True
    for i in range(100):
        rng = trial_rng(10_000, i)
        w = random_vector(rng, 8, exact=True)
        w = w * (Fraction(int(rng.integers(0, 11)), 10) / left.norm(w))
        x = random_unit(right, rng, exact=True, support=31)
        rep = linf_transfer_witness(left, [w], right, [x], lemma34_witness)
        failures += not (rep.verdict and rep.bound == Fraction(3, 2))
        identity &= rep.notes["identity_exact"]
    ok = failures == 0 and identity
    criterion(10, ok, f"100 rational (w, x) pairs, failures={failures}, exact max identity={identity}")
    assert ok
