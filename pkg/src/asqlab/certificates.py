"""Explicit refutations showing that ``X_N`` (N even, N >= k) is not locally almost square.

For the vector ``f = sum_{j in E} 2 e_j`` (one index per block ``E_2 .. E_{N/2+1}``)
and any unit ``h``, :func:`refute_unit_h` builds a functional ``x`` of the norming
set with ``|(f +- h)(x)| > 1 + eps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .constructions import make_xn
from .errors import CertificateError, ConfigurationError, InputError
from .moduli import SearchConfig, lasq_modulus
from .norm import A, B, C, Functional, block_indices, block_of, enumerate_oracle, norming_functional
from .vector import CoordVector, format_value, is_exact

MARGIN = 1e-9


def build_counterexample(N: int, k: int, m: int) -> CoordVector:
    """``f = 2 * sum of e_{2^n}`` for ``2 <= n <= N/2 + 1``; ``||f||_N = 1``."""
    if N % 2:
        raise ConfigurationError(f"N must be even, got {N}")
    if N < k:
        raise ConfigurationError(f"requires N >= k (N={N}, k={k})")
    need = 2 ** (N // 2 + 3)
    if m < need:
        raise ConfigurationError(f"m={m} too small for N={N}: need m >= {need}")
    f = CoordVector({2**n: 2 for n in range(2, N // 2 + 2)}, m)
    norm = make_xn(k, N, m).norm(f)
    if norm != 1:
        raise AssertionError(f"counterexample has norm {norm}")
    return f


@dataclass
class RefutationCertificate:
    case: str
    functional: Functional
    sign: int
    achieved: object
    threshold: object
    display_bound: object
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "functional": self.functional.to_json(),
            "sign": "+" if self.sign > 0 else "-",
            "achieved": format_value(self.achieved),
            "threshold": format_value(self.threshold),
            "display_bound": format_value(self.display_bound),
            **({"notes": self.notes} if self.notes else {}),
        }


def _sgn(v) -> int:
    return -1 if v < 0 else 1


def _best_sign(x: Functional, f, h):
    xf, xh = x(f), x(h)
    plus, minus = abs(xf + xh), abs(xf - xh)
    return (1, plus) if plus >= minus else (-1, minus)


def _average(indices, N) -> Functional:
    c = Fraction(1, N)
    return Functional(A, tuple((j, c) for j in sorted(indices)))


def _zero_coords(h: CoordVector, m: int, count: int, exclude) -> list[int]:
    """Coordinates where ``h`` vanishes: in-range first, then past the truncation."""
    out, skip = [], set(h.support) | set(exclude)
    j = 1
    while len(out) < count:
        if j not in skip:
            out.append(j)
        j += 1
    return out


def refute_unit_h(space, f: CoordVector, h: CoordVector, eps, rtol: float = MARGIN) -> RefutationCertificate:
    """Functional of the norming set witnessing ``||f +- h||_N > 1 + eps``.

    Tries the block claim first (a pair in some ``E_n``, ``2 <= n <= N/2+1``,
    with ``|h_l| + |h_j| > 2 eps``), then dispatches on the family of a
    norming functional of ``h``: averages (case 1), coordinates (case 2,
    reduced to case 3) or dyadic pairs (case 3).
    """
    N, k, m = space.N, space.k, space.m
    if not 0 < eps < Fraction(1, 3 * N):
        raise InputError(f"eps must lie in (0, 1/(3N)) = (0, 1/{3 * N}), got {eps}")
    E = sorted(f.support)
    blocks = {block_of(j): j for j in E}
    if len(E) != N // 2 or any(f.get(j) != 2 for j in E) or sorted(blocks) != list(range(2, N // 2 + 2)):
        raise InputError("f is not the counterexample sum of 2 e_j over one index per block")
    exact = h.exact and is_exact(eps)
    norm_h, y = norming_functional(space, h)
    if not (norm_h == 1 if exact else abs(norm_h - 1) <= rtol):
        raise InputError(f"||h||_N = {format_value(norm_h)}, expected 1")
    threshold = 1 + eps
    margin = 0 if exact else MARGIN

    def finish(case, x, display, notes=None):
        sign, achieved = _best_sign(x, f, h)
        if not space.contains(x):
            raise CertificateError(f"{case}: constructed functional is not in D_N")
        if not achieved > threshold + margin:
            raise CertificateError(
                f"{case}: achieved {format_value(achieved)} <= 1 + eps; norming gap {float(abs(norm_h - 1)):.3g}"
            )
        return RefutationCertificate(case, x, sign, achieved, threshold, display, notes or {})

    # block claim
    best = None
    for n in range(2, N // 2 + 2):
        l = blocks[n]
        for j in block_indices(n, m):
            if j == l:
                continue
            s = abs(h.get(l)) + abs(h.get(j))
            if best is None or s > best[0]:
                best = (s, l, j)
    if best is not None and best[0] > 2 * eps:
        s, l, j = best
        t = _sgn(h.get(l)) * _sgn(h.get(j))
        half = Fraction(1, 2)
        lo, hi = sorted((l, j))
        x = Functional(C, ((lo, half), (hi, t * half)))
        return finish("blockClaim", x, 1 + s / 2)

    q = k * N
    if y.family == A:
        sgn = _sgn(y(h))
        rest = [j for j in y.indices if j not in blocks.values()]
        rest.sort(key=lambda j: (-sgn * h.get(j), j))
        A1 = rest[: q - N // 2]
        x = _average(E + A1, N)
        display = 2 - 2 * eps - Fraction(1, 2 * k - 1)
        cert = finish("case1_A", x, display)
        return _check_display(cert, display, exact)

    if y.family == B:
        l = y.indices[0]
        case, notes = "case2_B", {"construction": "derived construction (Case 2)"}
    else:
        l = max(y.indices, key=lambda j: (abs(h.get(j)), -j))
        case, notes = "case3_C", {}
    if l in E:
        raise CertificateError(f"{case}: distinguished coordinate {l} lies in E")
    E0 = _zero_coords(h, m, q - len(E) - 1, exclude=E + [l])
    x = _average(E + [l] + E0, N)
    display = 1 + Fraction(1, N) - 2 * eps
    cert = finish(case, x, display, notes)
    return _check_display(cert, display, exact)


def _check_display(cert, display, exact):
    slack = 0 if exact else 1e-9
    if cert.achieved < display - slack:
        raise CertificateError(
            f"{cert.case}: achieved {format_value(cert.achieved)} below the expected {format_value(display)}"
        )
    return cert


def verify_certificate(space, f, h, cert: RefutationCertificate, eps, use_oracle: bool = True) -> bool:
    """Re-check a certificate from scratch.

    Membership in the norming set, the functional's value, and (optionally)
    that the brute-force norm of ``f +- h`` is at least the achieved value.
    """
    if not space.contains(cert.functional):
        return False
    x = cert.functional
    g = f + h if cert.sign > 0 else f - h
    value = abs(x(g))
    margin = 0 if (h.exact and is_exact(eps)) else MARGIN
    if not value > 1 + eps + margin:
        return False
    if value != cert.achieved and abs(value - cert.achieved) > 1e-12:
        return False
    if use_oracle:
        oracle = enumerate_oracle(space, g)
        if oracle < value - 1e-12:
            return False
    return space.norm(g) > 1 + eps


def refute_lasq_sweep(N: int, k: int, m: int, starts: int = 200, seed: int = 0, iters: int = 200,
                      eps=None, f: CoordVector | None = None) -> dict:
    """Search for a good LASQ witness at the counterexample and refute every candidate visited.

    Passing a different ``f`` runs the search as a control, without refutations.
    """
    space = make_xn(k, N, m)
    control = f is not None
    if f is None:
        f = build_counterexample(N, k, m)
    eps = Fraction(1, 4 * N) if eps is None else eps
    cfg = SearchConfig(starts=starts, iters=iters, seed=seed, keep_visited=not control)
    est = lasq_modulus(space, f, cfg)
    threshold = 1 + Fraction(1, 3 * N)
    report = {
        "N": N, "k": k, "m": m, "starts": starts, "seed": seed,
        "best_value": est.value_upper,
        "threshold": threshold,
        "witness_upper": 1 + Fraction(1, N),
        "best_above_threshold": est.value_upper >= float(threshold) - 1e-12,
        "control": control,
    }
    if control:
        report.update(refuted=0, failures=[], critical=[], passed=True)
        return report
    refuted, failures, critical, cases = 0, [], [], {}
    for i, arr in enumerate(est.visited):
        h = CoordVector.from_dense(np.asarray(arr).tolist(), m)
        try:
            cert = refute_unit_h(space, f, h, eps)
        except CertificateError as exc:
            value = max(space.norm(f + h), space.norm(f - h))
            failures.append({"candidate": i, "error": str(exc), "value": value})
            if value < float(threshold):
                critical.append(i)
            continue
        refuted += 1
        cases[cert.case] = cases.get(cert.case, 0) + 1
    report.update(
        eps=eps, visited=len(est.visited), refuted=refuted, cases=cases,
        failures=failures, critical=critical,
        passed=report["best_above_threshold"] and not failures,
    )
    return report
