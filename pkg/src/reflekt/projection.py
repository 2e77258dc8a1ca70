"""Projections onto sets invariant under a finite reflection group.

A set is handed over as an :class:`InvariantSetOracle`: a membership test
plus a procedure returning its nearest points to a *chamber* point. The full
projection of an arbitrary point is then rebuilt by moving the query into the
chamber, projecting there, spreading the result over the stabilizer of the
chamber point and mapping back.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .chamber import ChamberDecomposition, canonical_representative
from .errors import (
    CharacterizationFailure,
    DykstraNonconvergence,
    GroupTooLargeError,
    NotInChamberError,
    OracleViolationError,
)
from .groups import (
    FiniteGroup,
    GroupElement,
    RootSystem,
    Stabilizer,
    orbit,
    standard_root_system,
    unique_rows,
    wall_stabilizer,
)

MEMBER_TOL = 1e-9
DIST_TOL = 1e-9
SQ_DIST_TOL = 1e-8
IP_TOL = 1e-8
TIE_TOL = 1e-12
MAX_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class InvariantSetOracle:
    """Closed set invariant under the reflection group of ``root_system``.

    ``chamber_project(xc)`` must return the nearest points of the set to the
    chamber point ``xc`` that themselves lie in the chamber (a list; one entry
    for convex sets). ``project`` is an optional global projector for convex
    sets, ``direct`` an optional projection that does not go through the
    chamber, returning ``(distance, points)``; tests use it as an independent
    oracle. ``exact=False`` marks sampled or gridded projectors whose output is
    only approximately in the chamber.
    """

    label: str
    root_system: RootSystem
    contains: Callable
    chamber_project: Callable
    group: FiniteGroup | None = None
    project: Callable | None = None
    direct: Callable | None = None
    convex: bool = False
    exact: bool = True

    @property
    def dimension(self) -> int:
        return self.root_system.dimension


@dataclass(eq=False)
class ProjectionSet:
    """All nearest points of a set to ``query``.

    Stored implicitly as the chamber projections plus the data needed to
    spread them: every projection is ``g^-1 h y`` for ``y`` a chamber
    projection and ``h`` in the stabilizer of the chamber image of the query.
    ``points`` enumerates that set on demand.
    """

    query: np.ndarray
    distance: float
    chamber_projections: list
    decomposition: ChamberDecomposition
    stabilizer: Stabilizer | None = None
    _points: np.ndarray | None = field(default=None, repr=False)

    @property
    def element(self) -> GroupElement:
        return self.decomposition.element

    def enumerate(self, limit=MAX_POINTS) -> np.ndarray:
        if self._points is not None:
            return self._points
        ginv = self.decomposition.element.matrix.T
        chunks = [self.stabilizer.orbit_of(y, cap=limit) for y in self.chamber_projections]
        pts = np.concatenate(chunks) @ ginv.T
        pts = pts[unique_rows(pts)]
        if len(pts) > limit:
            raise GroupTooLargeError(f"projection set has more than {limit} points")
        self._points = pts
        return pts

    @property
    def points(self) -> np.ndarray:
        return self.enumerate()

    def lexmin(self) -> np.ndarray:
        pts = self.points
        return pts[np.lexsort(pts.T[::-1])[0]]


def project_invariant(oracle: InvariantSetOracle, x, verify=True) -> ProjectionSet:
    """Projection of ``x`` onto the invariant set via chamber reduction."""
    x = np.asarray(x, dtype=float)
    if x.shape != (oracle.dimension,):
        raise ValueError("dimension mismatch")
    rs = oracle.root_system
    dec = canonical_representative(rs, x)
    xc = dec.representative
    ys = [np.asarray(y, dtype=float) for y in oracle.chamber_project(xc)]
    if not ys:
        raise OracleViolationError(f"{oracle.label}: empty chamber projection")
    dists = [float(np.linalg.norm(xc - y)) for y in ys]
    distance = min(dists)
    stab = wall_stabilizer(rs, xc)
    result = ProjectionSet(x, distance, ys, dec, stab)
    if verify and oracle.exact:
        if max(dists) - distance > DIST_TOL:
            raise OracleViolationError(f"{oracle.label}: chamber projections at unequal distances")
        for p in result.points:
            if not oracle.contains(p):
                raise OracleViolationError(f"{oracle.label}: reconstructed point outside the set")
            if abs(np.linalg.norm(p - x) - distance) > DIST_TOL:
                raise OracleViolationError(f"{oracle.label}: reconstructed point at wrong distance")
    return result


def in_projection(oracle: InvariantSetOracle, x, y, sq_tol=SQ_DIST_TOL, proj=None) -> bool:
    """Whether ``y`` (a point of the set) is a nearest point to ``x``."""
    proj = proj or project_invariant(oracle, x, verify=False)
    d2 = float(np.sum((np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2))
    return d2 <= proj.distance**2 + sq_tol


def verify_projection_characterization(oracle: InvariantSetOracle, x, y) -> bool:
    """Check ``y in P(x)  <=>  (yc in P(xc) and <xc, yc> == <x, y>)``.

    Returns the shared truth value; raises :class:`CharacterizationFailure`
    with the offending data if the two sides disagree.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not oracle.contains(y):
        raise ValueError("y must lie in the set")
    rs = oracle.root_system
    lhs = in_projection(oracle, x, y)
    xc = canonical_representative(rs, x).representative
    yc = canonical_representative(rs, y).representative
    gap = float(xc @ yc - x @ y)
    rhs = in_projection(oracle, xc, yc) and abs(gap) <= IP_TOL
    if lhs != rhs:
        raise CharacterizationFailure(
            "projection characterization mismatch",
            {"set": oracle.label, "x": x.tolist(), "y": y.tolist(), "lhs": lhs,
             "rhs": rhs, "inner_product_gap": gap},
        )
    return lhs


# ---------------------------------------------------------------------------
# polytopes


def _affine_minimizer(Q):
    """Affine weights (summing to one) of the min-norm point of aff(Q)."""
    if len(Q) == 1:
        return np.ones(1)
    D = (Q[1:] - Q[0]).T
    t, *_ = np.linalg.lstsq(D, -Q[0], rcond=None)
    return np.concatenate([[1.0 - t.sum()], t])


def min_norm_point(P, tol=1e-12, max_iter=10_000):
    """Wolfe's algorithm: the point of ``conv(P)`` closest to the origin.

    Returns ``(point, weights)`` with ``weights`` over the rows of ``P``.
    """
    P = np.asarray(P, dtype=float)
    scale = max(1.0, float(np.max(np.sum(P**2, axis=1))))
    S = [int(np.argmin(np.sum(P**2, axis=1)))]
    lam = np.ones(1)
    x = P[S[0]].copy()
    for _ in range(max_iter):
        g = P @ x
        j = int(np.argmin(g))
        if x @ x - g[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_minimizer(P[S])
            if np.all(mu > tol):
                lam = mu
                break
            neg = mu <= tol
            theta = np.min(lam[neg] / (lam[neg] - mu[neg]))
            lam = lam + theta * (mu - lam)
            keep = lam > tol
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam /= lam.sum()
        x = lam @ P[S]
    weights = np.zeros(len(P))
    weights[S] = lam
    return x, weights


def project_polytope(vertices, z) -> np.ndarray:
    """Euclidean projection of ``z`` onto the convex hull of ``vertices``."""
    z = np.asarray(z, dtype=float)
    p, _ = min_norm_point(np.asarray(vertices, dtype=float) - z)
    return z + p


# ---------------------------------------------------------------------------
# built-in set oracles


def ball_oracle(rs: RootSystem, radius=1.0, group=None) -> InvariantSetOracle:
    def proj(z):
        z = np.asarray(z, dtype=float)
        nz = np.linalg.norm(z)
        return z if nz <= radius else z * (radius / nz)

    def direct(z):
        p = proj(z)
        return float(np.linalg.norm(z - p)), np.array([p])

    return InvariantSetOracle(
        f"ball(r={radius:g})", rs,
        contains=lambda z: bool(np.linalg.norm(z) <= radius + MEMBER_TOL),
        chamber_project=lambda xc: [proj(xc)],
        group=group, project=proj, direct=direct, convex=True,
    )


def sphere_oracle(rs: RootSystem, radius=1.0, group=None) -> InvariantSetOracle:
    def cproj(xc):
        nz = np.linalg.norm(xc)
        if nz == 0.0:
            raise ValueError("every point of the sphere is nearest to the origin")
        return [xc * (radius / nz)]

    return InvariantSetOracle(
        f"sphere(r={radius:g})", rs,
        contains=lambda z: bool(abs(np.linalg.norm(z) - radius) <= MEMBER_TOL),
        chamber_project=cproj, group=group,
        direct=lambda z: (abs(np.linalg.norm(z) - radius), np.array(cproj(np.asarray(z, float)))),
    )


def box_oracle(rs: RootSystem, half_width=1.0, group=None) -> InvariantSetOracle:
    """Box ``[-L, L]^n``; invariant for signed-permutation groups (A, B, D)."""

    def proj(z):
        return np.clip(np.asarray(z, dtype=float), -half_width, half_width)

    return InvariantSetOracle(
        f"box(L={half_width:g})", rs,
        contains=lambda z: bool(np.max(np.abs(z)) <= half_width + MEMBER_TOL),
        chamber_project=lambda xc: [proj(xc)],
        group=group, project=proj,
        direct=lambda z: (float(np.linalg.norm(z - proj(z))), np.array([proj(z)])),
        convex=True,
    )


def _nearest(points, z, tie=SQ_DIST_TOL):
    d2 = np.sum((points - z) ** 2, axis=1)
    best = d2.min()
    near = points[d2 <= best + tie]
    return float(np.sqrt(best)), near[unique_rows(near)]


def finite_orbit_oracle(G: FiniteGroup, seeds) -> InvariantSetOracle:
    """Union of the orbits of ``seeds`` (a finite invariant set)."""
    rs = G.root_system
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    points = np.concatenate([orbit(G, c) for c in seeds])
    points = points[unique_rows(points)]
    reps = np.array([canonical_representative(rs, c).representative for c in seeds])
    reps = reps[unique_rows(reps)]

    def cproj(xc):
        d = np.linalg.norm(reps - xc, axis=1)
        return list(reps[d <= d.min() + TIE_TOL])

    return InvariantSetOracle(
        f"orbits({len(seeds)})", rs,
        contains=lambda z: bool(np.min(np.max(np.abs(points - z), axis=1)) <= MEMBER_TOL),
        chamber_project=cproj, group=G,
        direct=lambda z: _nearest(points, np.asarray(z, dtype=float)),
    )


def hull_union_oracle(G: FiniteGroup, seeds) -> InvariantSetOracle:
    """Union of the convex hulls ``co O(c)`` over ``seeds``.

    Each hull is convex and invariant, so its projection of a chamber point
    stays in the chamber; the union keeps the nearest of these.
    """
    rs = G.root_system
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    hulls = [orbit(G, c) for c in seeds]

    def per_hull(z):
        ps = [project_polytope(V, z) for V in hulls]
        return ps, np.array([np.linalg.norm(p - z) for p in ps])

    def cproj(xc):
        ps, d = per_hull(xc)
        out = np.array([p for p, di in zip(ps, d) if di <= d.min() + TIE_TOL])
        return list(out[unique_rows(out)])

    def contains(z):
        z = np.asarray(z, dtype=float)
        return bool(any(np.linalg.norm(project_polytope(V, z) - z) <= MEMBER_TOL for V in hulls))

    def direct(z):
        z = np.asarray(z, dtype=float)
        ps, d = per_hull(z)
        near = np.array([p for p, di in zip(ps, d) if di <= d.min() + TIE_TOL])
        return float(d.min()), near[unique_rows(near)]

    label = "hull" if len(seeds) == 1 else f"hull_union({len(seeds)})"
    return InvariantSetOracle(
        label, rs, contains=contains, chamber_project=cproj, group=G, direct=direct,
        project=(lambda z: per_hull(np.asarray(z, float))[0][0]) if len(seeds) == 1 else None,
        convex=len(seeds) == 1,
    )


def orbit_hull_oracle(G: FiniteGroup, seed) -> InvariantSetOracle:
    return hull_union_oracle(G, [seed])


# ---------------------------------------------------------------------------
# sparsity


@dataclass(frozen=True)
class SparsityConstraint:
    """``C_s = {x in R^n : ||x||_0 <= s}``."""

    n: int
    s: int

    def __post_init__(self):
        if not 0 <= self.s <= self.n:
            raise ValueError(f"need 0 <= s <= n, got s={self.s}, n={self.n}")

    def contains(self, x, tol=0.0) -> bool:
        return int(np.count_nonzero(np.abs(np.asarray(x)) > tol)) <= self.s


def in_perm2_chamber(x, tol=1e-10) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(x[:-1] >= x[1:] - tol) and x[-1] >= -tol) if x.size else True


def sparse_chamber_project(x, s: int) -> np.ndarray:
    """Projection of a chamber point (descending, nonnegative) onto C_s: keep the first s."""
    x = np.asarray(x, dtype=float)
    if not in_perm2_chamber(x):
        raise NotInChamberError("expected x_1 >= ... >= x_n >= 0")
    SparsityConstraint(len(x), s)
    y = x.copy()
    y[s:] = 0.0
    return y


def _decreasing_fit(v):
    """Least-squares nonincreasing fit (pool adjacent violators)."""
    sums, counts = [], []
    for val in v:
        sums.append(float(val))
        counts.append(1)
        while len(sums) > 1 and sums[-2] / counts[-2] < sums[-1] / counts[-1]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
    return np.repeat([s / c for s, c in zip(sums, counts)], counts)


def project_sparse_chamber_set(z, s: int) -> np.ndarray:
    """Projection of any ``z`` onto ``{y : y_1 >= ... >= y_s >= 0, y_{s+1:} = 0}``."""
    z = np.asarray(z, dtype=float)
    y = np.zeros_like(z)
    if s > 0:
        y[:s] = np.maximum(_decreasing_fit(z[:s]), 0.0)
    return y


def dykstra_intersection(proj_a, proj_b, x, tol=1e-9, max_iter=10_000) -> np.ndarray:
    """Projection of ``x`` onto ``A & B`` by Dykstra's alternating scheme.

    Stops once the iterate is within ``tol`` of both sets and has stopped
    moving; raises :class:`DykstraNonconvergence` after ``max_iter`` cycles.
    """
    xk = np.asarray(x, dtype=float).copy()
    p = np.zeros_like(xk)
    q = np.zeros_like(xk)
    gap = np.inf
    for _ in range(max_iter):
        y = proj_a(xk + p)
        p = xk + p - y
        x_new = proj_b(y + q)
        q = y + q - x_new
        step = np.linalg.norm(x_new - xk)
        xk = x_new
        gap = max(np.linalg.norm(proj_a(xk) - xk), np.linalg.norm(proj_b(xk) - xk), step)
        if gap <= tol:
            return xk
    raise DykstraNonconvergence(f"gap {gap:.3e} after {max_iter} cycles")


def _distinct_arrangements(values):
    """All distinct orderings of a multiset of floats."""
    values = list(values)
    if not values:
        yield ()
        return
    for v in sorted(set(values)):
        rest = list(values)
        rest.remove(v)
        for tail in _distinct_arrangements(rest):
            yield (v,) + tail


def _signed_arrangements(values):
    for arr in _distinct_arrangements(values):
        nz = [i for i, v in enumerate(arr) if v != 0.0]
        for signs in itertools.product((1.0, -1.0), repeat=len(nz)):
            out = list(arr)
            for i, sg in zip(nz, signs):
                out[i] = sg * out[i]
            yield tuple(out)


def _perm2_stabilizer_orbit(xc, p, zero_tol, limit):
    """Images of ``p`` under the stabilizer of the chamber point ``xc`` in Perm2.

    The stabilizer permutes coordinates inside each block of equal entries of
    ``xc`` and additionally flips signs on the block of zero entries. Done
    combinatorially so that zeros stay exactly zero.
    """
    n = len(xc)
    blocks = []
    start = 0
    for k in range(1, n + 1):
        if k == n or xc[k - 1] - xc[k] > np.sqrt(2.0) * zero_tol:
            blocks.append((start, k))
            start = k
    choices = []
    for a, b in blocks:
        vals = [float(v) for v in p[a:b]]
        if xc[a] <= zero_tol:
            choices.append(list(_signed_arrangements(vals)))
        else:
            choices.append(list(_distinct_arrangements(vals)))
    total = int(np.prod([len(c) for c in choices]))
    if total > limit:
        raise GroupTooLargeError(f"projection set has {total} > {limit} points")
    return np.array([sum(combo, ()) for combo in itertools.product(*choices)], dtype=float)


@lru_cache(maxsize=None)
def perm2_root_system(n: int) -> RootSystem:
    """Type-2 symmetry (signed permutations) as the root system B_n."""
    return standard_root_system("B", n)


def perm2_decomposition(x):
    """``(xc, order, signs, Q)`` with ``Q x = xc = |x|`` sorted descending."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(-np.abs(x), kind="stable")
    signs = np.where(x[order] < 0, -1.0, 1.0)
    xc = np.abs(x[order])
    Q = np.zeros((len(x), len(x)))
    Q[np.arange(len(x)), order] = signs
    return xc, order, signs, Q


def sparse_project(x, s: int, B: InvariantSetOracle | None = None, zero_tol=1e-9,
                   tol=1e-9, max_iter=10_000, limit=MAX_POINTS) -> ProjectionSet:
    """Projection onto ``C_s`` (or ``C_s & B``) for type-2 symmetric ``B``.

    The query is moved to ``|x|`` sorted descending, projected onto the
    convex piece of the constraint inside the chamber (plain truncation, or
    Dykstra against ``B``), and the result is spread over the stabilizer and
    mapped back. Without ``B`` this reproduces hard thresholding including
    every tie-broken variant.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    SparsityConstraint(n, s)
    xc, order, signs, Q = perm2_decomposition(x)
    if B is None:
        p = sparse_chamber_project(xc, s)
    else:
        if B.project is None:
            raise ValueError("B needs a global projector")
        p = dykstra_intersection(lambda z: project_sparse_chamber_set(z, s), B.project, xc,
                                 tol=tol, max_iter=max_iter)
        p[s:] = 0.0
        p = np.maximum(p, 0.0)
    chamber_pts = _perm2_stabilizer_orbit(xc, p, zero_tol, limit)
    pts = np.zeros_like(chamber_pts)
    pts[:, order] = chamber_pts * signs
    pts += 0.0  # normalizes -0.0
    dec = ChamberDecomposition(x, xc, GroupElement(Q))
    distance = float(np.linalg.norm(xc - p))
    return ProjectionSet(x, distance, [p], dec, None, _points=pts)


def sparsity_oracle(n: int, s: int, B: InvariantSetOracle | None = None) -> InvariantSetOracle:
    """C_s (optionally intersected with B) as a generic Perm2-invariant oracle."""
    rs = perm2_root_system(n)
    cons = SparsityConstraint(n, s)

    def cproj(xc):
        if B is None:
            return [sparse_chamber_project(np.maximum(xc, 0.0), s)]
        p = dykstra_intersection(lambda z: project_sparse_chamber_set(z, s), B.project, xc)
        p[s:] = 0.0
        return [np.maximum(p, 0.0)]

    def contains(z):
        return cons.contains(z, tol=MEMBER_TOL) and (B is None or B.contains(z))

    label = f"sparse(s={s})" if B is None else f"sparse(s={s})&{B.label}"
    return InvariantSetOracle(label, rs, contains=contains, chamber_project=cproj)


def brute_force_sparse(x, s, tie=1e-12):
    """Nearest s-sparse points by enumerating supports: ``(distance, points)``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    best, cands = np.inf, []
    for S in itertools.combinations(range(n), s):
        y = np.zeros(n)
        y[list(S)] = x[list(S)]
        d2 = float(np.sum((x - y) ** 2))
        cands.append((d2, y))
        best = min(best, d2)
    near = np.array([y for d2, y in cands if d2 <= best + tie]) + 0.0
    return float(np.sqrt(best)), near[unique_rows(near, tol=1e-14)]


__all__ = [
    "InvariantSetOracle",
    "ProjectionSet",
    "SparsityConstraint",
    "project_invariant",
    "verify_projection_characterization",
    "in_projection",
    "sparse_chamber_project",
    "sparse_project",
    "dykstra_intersection",
    "min_norm_point",
    "project_polytope",
    "ball_oracle",
    "sphere_oracle",
    "box_oracle",
    "finite_orbit_oracle",
    "orbit_hull_oracle",
    "hull_union_oracle",
    "sparsity_oracle",
    "brute_force_sparse",
    "perm2_decomposition",
    "perm2_root_system",
    "project_sparse_chamber_set",
]
