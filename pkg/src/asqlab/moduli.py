"""Almost-squareness moduli, minimal-volume enclosing ellipsoids and the
uniform lower bound for finite-dimensional spaces.

A "space" here is anything exposing ``dim``, ``batch_norm(X)`` and
``linf_bounds()``: :class:`PolytopeNorm`, :class:`Ellipsoid`, and the
polyhedral/sum spaces from :mod:`asqlab.constructions`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .errors import InputError, InvariantViolation, RankError
from .sampling import random_sphere_points, trial_rng

# norms on R^n ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``J = {x : x^T Q x <= 1}`` with gauge ``||x||_J = sqrt(x^T Q x)``."""

    Q: np.ndarray
    gap: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise InputError("Q must be a square matrix")
        if not np.allclose(Q, Q.T, rtol=1e-12, atol=1e-14):
            raise InputError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise InputError("Q must be positive definite")
        object.__setattr__(self, "Q", (Q + Q.T) / 2)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def batch_norm(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", X, self.Q, X), 0.0))

    def norm(self, x) -> float:
        return float(self.batch_norm(x)[0])

    def scaled(self, t: float) -> "Ellipsoid":
        """The ellipsoid ``t J``."""
        return Ellipsoid(self.Q / t**2)

    def boundary_points(self, directions: np.ndarray) -> np.ndarray:
        """Map Euclidean unit directions onto ``dJ``."""
        L = np.linalg.cholesky(self.Q)
        return np.linalg.solve(L.T, directions.T).T

    def linf_bounds(self) -> tuple[float, float]:
        lo = 1.0 / float(np.sqrt(np.diag(np.linalg.inv(self.Q)).max()))
        hi = float(np.sqrt(np.abs(self.Q).sum()))
        return lo, hi


class PolytopeNorm:
    """Gauge of the symmetric polytope ``conv(+-v)``.

    Facets come from qhull; each facet ``a.x <= 1`` contributes the linear
    functional ``a`` and the norm is the max over them.
    """

    def __init__(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        d = P.shape[1]
        sym = np.vstack([P, -P])
        if np.linalg.matrix_rank(sym) < d:
            raise RankError(f"points span a proper subspace of R^{d}")
        if d == 1:
            r = float(np.abs(sym).max())
            self.facets = np.array([[1 / r], [-1 / r]])
            self.vertices = np.array([[r], [-r]])
        else:
            hull = ConvexHull(sym)
            offsets = -hull.equations[:, -1]
            if (offsets <= 0).any():
                raise RankError("origin is not interior to the symmetrised hull")
            facets = hull.equations[:, :-1] / offsets[:, None]
            self.facets = np.unique(np.round(facets, 12), axis=0)
            self.vertices = sym[np.sort(hull.vertices)]
        self.dim = d

    def batch_norm(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X @ self.facets.T).max(axis=1)

    def norm(self, x) -> float:
        return float(self.batch_norm(x)[0])

    def linf_bounds(self) -> tuple[float, float]:
        lo = 1.0 / float(np.abs(self.vertices).max())
        hi = float(np.abs(self.facets).sum(axis=1).max())
        return lo, hi


def random_symmetric_polytope(rng: np.random.Generator, dim: int) -> np.ndarray:
    """``2 * dim * dim`` random unit-sphere points (symmetrised by PolytopeNorm)."""
    return random_sphere_points(rng, 2 * dim * dim, dim)


# MVEE -------------------------------------------------------------------------


def mvee(points, tol: float = 1e-7, max_iter: int = 100_000) -> Ellipsoid:
    """Minimal-volume origin-centred ellipsoid containing ``+-points``.

    Khachiyan's barycentric ascent from uniform weights.  Stops when the
    duality gap ``max_i p_i^T Q p_i - 1`` is at most ``tol``; ``Q`` is then
    rescaled so that every point lies in ``J`` and the farthest one on ``dJ``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    P = np.vstack([P, -P])
    npts, d = P.shape
    if np.linalg.matrix_rank(P) < d:
        raise RankError(f"points span a proper subspace of R^{d}")
    u = np.full(npts, 1.0 / npts)
    gap = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        X = P.T @ (u[:, None] * P)
        M = np.einsum("ij,ij->i", P, np.linalg.solve(X, P.T).T)
        j = int(np.argmax(M))
        gap = M[j] / d - 1
        if gap <= tol:
            break
        step = (M[j] - d) / (d * (M[j] - 1))
        u *= 1 - step
        u[j] += step
    Q = np.linalg.inv(P.T @ (u[:, None] * P)) / d
    Q /= np.einsum("ij,jk,ik->i", P, Q, P).max()
    return Ellipsoid(Q, gap=float(gap), iterations=it)


def mvee_minimality(points, E: Ellipsoid, tol: float = 1e-7) -> bool:
    """Shrinking ``J`` by ``1 + 2 tol`` must push some point outside."""
    shrunk = E.Q * (1 + 2 * tol)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    return bool((np.einsum("ij,jk,ik->i", P, shrunk, P) > 1).any())


def john_sandwich_check(ball_vertices, E: Ellipsoid, n: int | None = None,
                        samples: int = 2000, seed: int = 0, tol: float = 1e-6) -> dict:
    """Check ``n^{-1/2} J  ⊂  B_X  ⊂  J`` for the polytope ``conv(+-ball_vertices)``.

    Outer inclusion is checked on the vertices.  Inner inclusion is checked
    exactly per facet (support function of ``J``) and on sampled points of
    ``dJ``.
    """
    ball = PolytopeNorm(ball_vertices)
    n = ball.dim if n is None else n
    shrink = 1 / math.sqrt(n)
    out = {"outer_ok": True, "inner_ok": True, "violation": None}
    vj = E.batch_norm(ball.vertices)
    if vj.max() > 1 + tol:
        i = int(np.argmax(vj))
        out.update(outer_ok=False, violation={"kind": "outer", "x": ball.vertices[i].tolist(), "norm_J": float(vj[i])})
    Qinv = np.linalg.inv(E.Q)
    support = np.sqrt(np.einsum("ij,jk,ik->i", ball.facets, Qinv, ball.facets)) * shrink
    if support.max() > 1 + tol and out["violation"] is None:
        i = int(np.argmax(support))
        a = ball.facets[i]
        x = shrink * Qinv @ a / math.sqrt(a @ Qinv @ a)
        out.update(inner_ok=False, violation={"kind": "inner", "x": x.tolist(), "norm": float(ball.norm(x))})
    elif support.max() > 1 + tol:
        out["inner_ok"] = False
    rng = np.random.default_rng(seed)
    pts = shrink * E.boundary_points(random_sphere_points(rng, samples, ball.dim))
    vals = ball.batch_norm(pts)
    if vals.max() > 1 + tol:
        out["inner_ok"] = False
        if out["violation"] is None:
            i = int(np.argmax(vals))
            out["violation"] = {"kind": "inner", "x": pts[i].tolist(), "norm": float(vals[i])}
    out["max_vertex_norm_J"] = float(vj.max())
    out["max_inner_support"] = float(support.max())
    out["passed"] = out["outer_ok"] and out["inner_ok"]
    return out


def contact_point(ball_vertices, E: Ellipsoid, tol: float = 1e-6) -> np.ndarray:
    """A polytope vertex on ``dJ`` (largest ``||v||_J``, first vertex on ties)."""
    ball = PolytopeNorm(ball_vertices)
    vj = E.batch_norm(ball.vertices)
    top = vj.max()
    if top < 1 - tol:
        raise InvariantViolation(f"max ||v||_J = {top:.3g} < 1: MVEE did not converge")
    i = int(np.flatnonzero(vj >= top - 1e-12)[0])
    return ball.vertices[i] / ball.norm(ball.vertices[i])


# sphere search ------------------------------------------------------------------


def _as_array(space, x) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return x.astype(float)
    if hasattr(space, "to_array"):
        return space.to_array(x)
    return np.asarray(x, dtype=float)


def objective(space, X: np.ndarray, H: np.ndarray) -> np.ndarray:
    """``max_i max(||x_i + h||, ||x_i - h||)`` for each row ``h`` of ``H``."""
    H = np.atleast_2d(H)
    out = np.zeros(H.shape[0])
    for x in X:
        out = np.maximum(out, space.batch_norm(x + H))
        out = np.maximum(out, space.batch_norm(x - H))
    return out


def normalize_rows(space, G: np.ndarray) -> np.ndarray:
    norms = space.batch_norm(G)
    return G / norms[:, None]


def sphere_grid(space, res: float) -> tuple[np.ndarray, float]:
    """Points of the unit sphere from a cube-surface grid of spacing ``res``.

    Returns the points and the mesh: every unit vector lies within ``mesh``
    (in the space's norm) of some grid point.
    """
    d = space.dim
    if d > 3:
        raise InputError("grid sweeps are limited to dimension <= 3")
    K = int(math.ceil(2 / res)) + 1
    axis = np.linspace(-1, 1, K)
    spacing = 2 / (K - 1)
    faces = []
    for i, s in itertools.product(range(d), (-1.0, 1.0)):
        rest = np.array(list(itertools.product(axis, repeat=d - 1))).reshape(-1, d - 1)
        pts = np.insert(rest, i, s, axis=1)
        faces.append(pts)
    G = np.vstack(faces)
    lo, hi = space.linf_bounds()
    mesh = hi * spacing / lo
    return normalize_rows(space, G), mesh


@dataclass
class SearchConfig:
    starts: int = 20
    iters: int = 200
    seed: int = 0
    grid_res: float | None = None
    step0: float = 0.5
    min_step: float = 1e-7
    extra_starts: list = field(default_factory=list)
    keep_visited: bool = False


@dataclass
class ModulusEstimate:
    value_upper: float
    value_lower: float | None
    argmin: np.ndarray
    trace: dict
    visited: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "value_upper": format(self.value_upper, ".17g"),
            "value_lower": None if self.value_lower is None else format(self.value_lower, ".17g"),
            "argmin": [format(v, ".17g") for v in self.argmin],
            "trace": self.trace,
        }


def _local_search(space, X, h, cfg: SearchConfig, floor: float, visited: list | None):
    d = space.dim
    eye = np.eye(d)
    moves = np.vstack([eye, -eye])
    val = float(objective(space, X, h)[0])
    step = cfg.step0
    evals = 1
    for _ in range(cfg.iters):
        cand = normalize_rows(space, h + step * moves)
        vals = objective(space, X, cand)
        evals += len(cand)
        i = int(np.argmin(vals))
        if vals[i] < val - 1e-15:
            h, val = cand[i], float(vals[i])
            if val < floor - 1e-12:
                raise InvariantViolation(f"objective {val} below max(||x||, ||h||) = {floor}")
            if visited is not None:
                visited.append(h.copy())
        else:
            step /= 2
            if step < cfg.min_step:
                break
    return h, val, evals


def asq_modulus(space, xs, cfg: SearchConfig | None = None) -> ModulusEstimate:
    """Upper (and for dim <= 3, certified lower) bound on
    ``inf_{||h|| = 1} max_i max ||x_i +- h||``."""
    cfg = cfg or SearchConfig()
    X = np.vstack([_as_array(space, x) for x in xs])
    xnorms = space.batch_norm(X)
    if not np.allclose(xnorms, 1, rtol=1e-9, atol=1e-9):
        raise InputError(f"inputs must be unit vectors, norms {xnorms.tolist()}")
    floor = max(float(xnorms.max()), 1.0)
    d = space.dim
    starts = [_as_array(space, h) for h in cfg.extra_starts]
    starts += [trial_rng(cfg.seed, s).uniform(-1, 1, d) for s in range(cfg.starts)]
    best_val, best_h, best_start, evals = math.inf, None, -1, 0
    visited = [] if cfg.keep_visited else None
    per_start = []
    for s, g in enumerate(starts):
        if not np.any(g):
            g = np.eye(d)[0]
        h0 = g / space.batch_norm(g)[0]
        if visited is not None:
            visited.append(h0.copy())
        h, val, n = _local_search(space, X, h0, cfg, floor, visited)
        evals += n
        per_start.append(val)
        if val < best_val:
            best_val, best_h, best_start = val, h, s
    lower = None
    if cfg.grid_res is not None and d <= 3:
        G, mesh = sphere_grid(space, cfg.grid_res)
        vals = objective(space, X, G)
        i = int(np.argmin(vals))
        lower = float(vals[i]) - mesh
        if vals[i] < best_val:
            best_val, best_h = float(vals[i]), G[i]
    trace = {
        "starts": len(starts),
        "evaluations": evals,
        "best_start": best_start,
        "start_values_min": min(per_start),
        "start_values_max": max(per_start),
    }
    return ModulusEstimate(best_val, lower, best_h, trace, visited or [])


def lasq_modulus(space, x, cfg: SearchConfig | None = None) -> ModulusEstimate:
    """Single-vector case of :func:`asq_modulus`."""
    return asq_modulus(space, [x], cfg)


def grid_rows(space, xs, res: float):
    """``(h_1, ..., h_d, objective)`` rows of a sphere grid sweep, for CSV output."""
    X = np.vstack([_as_array(space, x) for x in xs])
    G, _ = sphere_grid(space, res)
    vals = objective(space, X, G)
    for h, v in zip(G, vals):
        yield [*h.tolist(), float(v)]


# uniform lower bound -------------------------------------------------------------


def prop21_certificate(ball_vertices, n: int | None = None, samples: int = 10_000, seed: int = 0,
                       grid_res: float | None = None, tol: float = 1e-9) -> dict:
    """At the contact point ``x`` of the John ellipsoid, every unit ``h`` has
    ``max ||x +- h|| >= sqrt(1 + 1/n)``; check it on samples and (dim <= 3) a grid."""
    ball = PolytopeNorm(ball_vertices)
    n = ball.dim if n is None else n
    E = mvee(ball.vertices)
    x = contact_point(ball.vertices, E)
    bound = math.sqrt(1 + 1 / n)
    rng = np.random.default_rng(seed)
    H = normalize_rows(ball, rng.normal(size=(samples, ball.dim)))
    if grid_res is not None and ball.dim <= 3:
        G, _ = sphere_grid(ball, grid_res)
        H = np.vstack([H, G])
    vals = objective(ball, x[None, :], H)
    i = int(np.argmin(vals))
    violations = int((vals < bound - tol).sum())
    return {
        "dim": n,
        "contact_point": x.tolist(),
        "mvee_gap": E.gap,
        "bound": bound,
        "worst_value": float(vals[i]),
        "worst_h": H[i].tolist(),
        "checked": int(len(H)),
        "violations": violations,
        "passed": violations == 0,
    }
