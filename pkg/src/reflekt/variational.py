"""Numerical checks of subgradients, proximal normals and Schur convexity.

Everything here is falsification by sampling or gridding: a ``True`` from
:func:`check_subgradient` means "not refuted". The shipped test functions
carry closed-form subdifferentials so callers can drive both directions of
the chamber characterizations with exact inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chamber import canonical_representative, convex_weights, group_majorizes
from .errors import CharacterizationFailure, DimensionCapError, PropertyAViolation
from .groups import FiniteGroup, GroupElement, orbit
from .projection import InvariantSetOracle, project_invariant

SUBGRAD_TOL = 1e-9
TIE_TOL = 1e-9
IP_TOL = 1e-8
NORMAL_TOL = 1e-9
RADII = (0.1, 1.0, 10.0)
# extra short probes catch near-miss candidates at smooth points
SHORT_RADII = (1e-3, 1e-2)


@dataclass(frozen=True, eq=False)
class InvariantFunction:
    """A G-invariant function with optional closed-form subdifferential data.

    ``eval`` is vectorized over the last axis. ``subgradients(x)`` returns an
    array whose convex hull is the subdifferential at ``x`` (its extreme
    points); ``is_subgradient(x, y)`` decides membership exactly.
    """

    label: str
    eval: Callable
    group: FiniteGroup
    subgradients: Callable | None = None
    is_subgradient: Callable | None = None
    convex: bool = False

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    @property
    def root_system(self):
        return self.group.root_system


def _close(a, b, tol=TIE_TOL):
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(b)))


def linf_norm(G: FiniteGroup) -> InvariantFunction:
    n = G.root_system.dimension

    def subgrads(x):
        x = np.asarray(x, dtype=float)
        m = np.max(np.abs(x))
        eye = np.eye(n)
        if m <= TIE_TOL:
            return np.vstack([eye, -eye])
        idx = np.flatnonzero(np.abs(x) >= m - TIE_TOL)
        return eye[idx] * np.sign(x[idx])[:, None]

    def member(x, y):
        return np.sum(np.abs(y)) <= 1 + TIE_TOL and _close(y @ x, np.max(np.abs(x)))

    return InvariantFunction("linf", lambda X: np.max(np.abs(X), axis=-1), G,
                             subgrads, member, convex=True)


def l1_norm(G: FiniteGroup) -> InvariantFunction:
    def subgrads(x):
        x = np.asarray(x, dtype=float)
        zero = np.flatnonzero(np.abs(x) <= TIE_TOL)
        base = np.sign(x) * (np.abs(x) > TIE_TOL)
        out = []
        for signs in itertools.product((1.0, -1.0), repeat=len(zero)):
            y = base.copy()
            y[zero] = signs
            out.append(y)
        return np.array(out)

    def member(x, y):
        return np.max(np.abs(y)) <= 1 + TIE_TOL and _close(y @ x, np.sum(np.abs(x)))

    return InvariantFunction("l1", lambda X: np.sum(np.abs(X), axis=-1), G,
                             subgrads, member, convex=True)


def sum_k_largest(G: FiniteGroup, k: int, magnitudes=False) -> InvariantFunction:
    """Sum of the k largest entries (or of the k largest ``|x_i|``).

    The plain version is invariant under coordinate permutations; the
    magnitude version also under sign changes.
    """
    n = G.root_system.dimension

    def f(X):
        V = np.abs(X) if magnitudes else X
        return np.sum(-np.sort(-V, axis=-1)[..., :k], axis=-1)

    def subgrads(x):
        x = np.asarray(x, dtype=float)
        v = np.abs(x) if magnitudes else x
        best = f(x)
        out = []
        for S in itertools.combinations(range(n), k):
            if not _close(v[list(S)].sum(), best):
                continue
            if not magnitudes:
                y = np.zeros(n)
                y[list(S)] = 1.0
                out.append(y)
                continue
            zero = [i for i in S if abs(x[i]) <= TIE_TOL]
            for signs in itertools.product((1.0, -1.0), repeat=len(zero)):
                y = np.zeros(n)
                y[list(S)] = np.sign(x[list(S)])
                y[zero] = signs
                out.append(y)
        out = np.array(out)
        return np.unique(out, axis=0)

    def member(x, y):
        if magnitudes:
            ok = np.max(np.abs(y)) <= 1 + TIE_TOL and np.sum(np.abs(y)) <= k + TIE_TOL
        else:
            ok = np.min(y) >= -TIE_TOL and np.max(y) <= 1 + TIE_TOL and abs(y.sum() - k) <= TIE_TOL
        return bool(ok) and _close(y @ x, f(x))

    label = f"sum_{k}_largest" + ("_abs" if magnitudes else "")
    return InvariantFunction(label, f, G, subgrads, member, convex=True)


def dist_to_ball(G: FiniteGroup, radius=1.0) -> InvariantFunction:
    n = G.root_system.dimension

    def subgrads(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r > radius + TIE_TOL:
            return (x / r)[None]
        if r < radius - TIE_TOL:
            return np.zeros((1, n))
        return np.vstack([np.zeros(n), x / r])

    def member(x, y):
        r = np.linalg.norm(x)
        if r > radius + TIE_TOL:
            return bool(np.max(np.abs(y - x / r)) <= TIE_TOL)
        if r < radius - TIE_TOL:
            return bool(np.max(np.abs(y)) <= TIE_TOL)
        t = y @ x / r
        return bool(-TIE_TOL <= t <= 1 + TIE_TOL and np.max(np.abs(y - t * x / r)) <= TIE_TOL)

    return InvariantFunction(
        f"dist_ball(r={radius:g})",
        lambda X: np.maximum(np.linalg.norm(X, axis=-1) - radius, 0.0),
        G, subgrads, member, convex=True,
    )


def squared_norm(G: FiniteGroup) -> InvariantFunction:
    return InvariantFunction(
        "sq_norm", lambda X: np.sum(X**2, axis=-1), G,
        lambda x: (2.0 * np.asarray(x, dtype=float))[None],
        lambda x, y: bool(np.max(np.abs(y - 2.0 * x)) <= TIE_TOL * max(1.0, np.max(np.abs(x)))),
        convex=True,
    )


def orbit_support(G: FiniteGroup, seed) -> InvariantFunction:
    """``x -> max_g <g c, x>``: support function of the orbit polytope of ``c``."""
    V = orbit(G, np.asarray(seed, dtype=float))

    def f(X):
        return np.max(X @ V.T, axis=-1)

    def subgrads(x):
        s = V @ np.asarray(x, dtype=float)
        return V[s >= s.max() - TIE_TOL]

    def member(x, y):
        return convex_weights(subgrads(x), y) is not None

    return InvariantFunction("orbit_support", f, G, subgrads, member, convex=True)


def norm_ratio(G: FiniteGroup) -> InvariantFunction:
    """``||x|| / (1 + ||x||)``: quasiconvex but not convex."""
    return InvariantFunction("norm_ratio", lambda X: (r := np.linalg.norm(X, axis=-1)) / (1 + r), G)


def neg_squared_norm(G: FiniteGroup) -> InvariantFunction:
    return InvariantFunction("neg_sq_norm", lambda X: -np.sum(X**2, axis=-1), G)


def neg_l1_norm(G: FiniteGroup) -> InvariantFunction:
    return InvariantFunction("neg_l1", lambda X: -np.sum(np.abs(X), axis=-1), G)


def coordinate_product(G: FiniteGroup) -> InvariantFunction:
    """``x_1 x_2 ... x_n``; permutation invariant, the standard non-example."""
    return InvariantFunction("product", lambda X: np.prod(X, axis=-1), G)


def is_invariant(f: InvariantFunction, rng, samples=20, tol=1e-10) -> bool:
    n = f.root_system.dimension
    for x in rng.standard_normal((samples, n)):
        vals = f.eval(f.group.act(x))
        if np.max(np.abs(vals - f.eval(x))) > tol * max(1.0, abs(float(f.eval(x)))):
            return False
    return True


def sample_subgradient(f: InvariantFunction, x, rng) -> np.ndarray:
    ext = f.subgradients(x)
    if len(ext) == 1 or rng.random() < 0.3:
        return ext[rng.integers(len(ext))].copy()
    return rng.dirichlet(np.ones(len(ext))) @ ext


# ---------------------------------------------------------------------------
# subgradients


def _direction_grid(n):
    """Dense deterministic unit directions for n <= 3 (circle or Fibonacci sphere)."""
    if n == 2:
        t = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        k = np.arange(1000) + 0.5
        z = 1 - 2 * k / 1000
        phi = np.pi * (1 + 5**0.5) * k
        r = np.sqrt(1 - z**2)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.zeros((0, n))


def _probe_points(x, y, samples, rng):
    n = len(x)
    eye = np.eye(n)
    dirs = [eye, -eye, _direction_grid(n)]
    for i, j in itertools.combinations(range(n), 2):
        for sj in (1.0, -1.0):
            d = eye[i] + sj * eye[j]
            dirs.append(np.array([d, -d]) / np.sqrt(2.0))
    for v in (y, np.sign(y), x, np.ones(n)):
        nv = np.linalg.norm(v)
        if nv > 0:
            dirs.append(np.array([v, -v]) / nv)
    rand = rng.standard_normal((samples, n))
    dirs.append(rand / np.linalg.norm(rand, axis=1, keepdims=True))
    D = np.vstack(dirs)
    Z = np.concatenate([x + r * D for r in SHORT_RADII + RADII])
    return np.vstack([Z, np.zeros(n), 2.0 * x])


def check_subgradient(f: InvariantFunction, x, y, samples=128, rng=None) -> bool:
    """``False`` iff a probe z violates ``f(z) >= f(x) + <y, z - x>``.

    Probes are x plus radii {0.001, 0.01, 0.1, 1, 10} times coordinate and
    diagonal directions, a dense direction grid when n <= 3, directions along
    y, sign(y), x and the all-ones vector, and ``samples`` random unit
    directions; plus z = 0 and z = 2x.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    Z = _probe_points(x, y, samples, rng)
    lower = f.eval(x) + (Z - x) @ y
    return bool(np.all(f.eval(Z) >= lower - SUBGRAD_TOL))


def verify_lewis_characterization(f: InvariantFunction, x, y, samples=128, seed=0) -> bool:
    """``y in df(x)  <=>  (yc in df(xc) and <xc, yc> == <x, y>)`` for convex invariant f."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rs = f.root_system
    lhs = check_subgradient(f, x, y, samples, np.random.default_rng(seed))
    xc = canonical_representative(rs, x).representative
    yc = canonical_representative(rs, y).representative
    gap = float(xc @ yc - x @ y)
    rhs = abs(gap) <= IP_TOL and check_subgradient(f, xc, yc, samples, np.random.default_rng(seed))
    if lhs != rhs:
        raise CharacterizationFailure(
            "subdifferential characterization mismatch",
            {"function": f.label, "x": x.tolist(), "y": y.tolist(), "lhs": lhs, "rhs": rhs,
             "inner_product_gap": gap},
        )
    return lhs


# ---------------------------------------------------------------------------
# proximal normals


@dataclass(frozen=True, eq=False)
class ProximalQuery:
    point: np.ndarray
    direction: np.ndarray
    alpha: float
    set_oracle: InvariantSetOracle

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))


def proximal_normal_member(q: ProximalQuery) -> bool:
    """Whether ``x`` is a nearest point of the set to ``x + a y`` for a = alpha and alpha/2."""
    x, y, oracle = q.point, q.direction, q.set_oracle
    if not oracle.contains(x):
        raise ValueError("point must lie in the set")
    for a in (q.alpha, q.alpha / 2):
        z = x + a * y
        proj = project_invariant(oracle, z, verify=False)
        if np.linalg.norm(x - z) > proj.distance + NORMAL_TOL:
            return False
    return True


def verify_proximal_characterization(set_oracle: InvariantSetOracle, x, y, alpha=0.1) -> bool:
    """``y in N(x)  <=>  (yc in N(xc) and <xc, yc> == <x, y>)`` for proximal normals.

    The set must satisfy the orbit-hull property at its boundary (see
    :func:`check_property_A`); that is the caller's responsibility.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rs = set_oracle.root_system
    lhs = proximal_normal_member(ProximalQuery(x, y, alpha, set_oracle))
    xc = canonical_representative(rs, x).representative
    yc = canonical_representative(rs, y).representative
    gap = float(xc @ yc - x @ y)
    rhs = abs(gap) <= IP_TOL and proximal_normal_member(ProximalQuery(xc, yc, alpha, set_oracle))
    if lhs != rhs:
        raise CharacterizationFailure(
            "proximal normal characterization mismatch",
            {"set": set_oracle.label, "x": x.tolist(), "y": y.tolist(), "alpha": alpha,
             "lhs": lhs, "rhs": rhs, "inner_product_gap": gap},
        )
    return lhs


def _random_hull_points(pts, count, rng):
    pairs = count // 2
    i = rng.integers(len(pts), size=(pairs, 2))
    t = rng.random((pairs, 1))
    a = t * pts[i[:, 0]] + (1 - t) * pts[i[:, 1]]
    b = rng.dirichlet(np.full(len(pts), 0.5), size=count - pairs) @ pts
    return np.vstack([a, b])


def check_property_A(set_oracle: InvariantSetOracle, boundary_samples, combos=200, seed=0) -> bool:
    """Sampled test that ``co O(x)`` stays inside the set for each boundary sample."""
    G = set_oracle.group
    if G is None:
        raise ValueError("property A needs an enumerated group on the oracle")
    rng = np.random.default_rng(seed)
    for x in np.atleast_2d(np.asarray(boundary_samples, dtype=float)):
        pts = orbit(G, x)
        if len(pts) == 1:
            continue
        for z in _random_hull_points(pts, combos, rng):
            if not set_oracle.contains(z):
                return False
    return True


# ---------------------------------------------------------------------------
# epigraphs and proximal subgradients


def extend_group(G: FiniteGroup) -> FiniteGroup:
    """Action ``g(x, a) = (g x, a)`` on R^(n+1)."""
    n = G.root_system.dimension
    elements = []
    for g in G.elements:
        m = np.eye(n + 1)
        m[:n, :n] = g.matrix
        elements.append(GroupElement(m, g.word))
    return FiniteGroup(G.root_system.extended(), elements, G.size_cap)


def grid_epigraph_projection(f: InvariantFunction, q, radius=0.5, cell=1e-4, keep=3, points=21):
    """Nearest point of ``epi f`` to ``q = (q_x, q_t)`` by coarse-to-fine grid search.

    Minimizes ``|z - q_x|^2 + max(f(z) - q_t, 0)^2`` over a grid of half-width
    ``radius`` around ``q_x``, refining around the ``keep`` best nodes until
    the spacing drops below ``cell``.
    """
    q = np.asarray(q, dtype=float)
    qx, qt = q[:-1], q[-1]
    n = len(qx)

    def phi(Z):
        return np.sum((Z - qx) ** 2, axis=-1) + np.maximum(f.eval(Z) - qt, 0.0) ** 2

    half = (points - 1) // 2
    offsets1d = np.arange(-half, half + 1, dtype=float)
    mesh = np.stack(np.meshgrid(*([offsets1d] * n), indexing="ij"), axis=-1).reshape(-1, n)
    h = radius / half
    centers = qx[None]
    best_z, best_v = qx.copy(), float(phi(qx))
    while True:
        Z = np.concatenate([c + h * mesh for c in centers])
        v = phi(Z)
        top = np.argsort(v)[:keep]
        if v[top[0]] < best_v:
            best_z, best_v = Z[top[0]].copy(), float(v[top[0]])
        if h <= cell:
            break
        centers = Z[top]
        h = 2 * h / half
    return np.append(best_z, max(float(f.eval(best_z)), qt)), float(np.sqrt(best_v))


def epigraph_oracle(f: InvariantFunction, radius=0.5, cell=1e-4) -> InvariantSetOracle:
    """``epi f`` as a set invariant under the extended action, with a grid projector."""
    n = f.root_system.dimension
    if n > 3:
        raise DimensionCapError("grid epigraph projection supports n <= 3")
    Ge = extend_group(f.group)

    def contains(p):
        p = np.asarray(p, dtype=float)
        return bool(f.eval(p[:-1]) <= p[-1] + NORMAL_TOL)

    def cproj(qc):
        point, _ = grid_epigraph_projection(f, qc, radius, cell)
        return [point]

    return InvariantSetOracle(f"epi({f.label})", Ge.root_system, contains, cproj,
                              group=Ge, exact=False)


def proximal_subgradient_member(f: InvariantFunction, x, y, alpha=0.1, singular=False,
                                oracle: InvariantSetOracle | None = None) -> bool:
    """Whether ``(y, -1)`` (or ``(y, 0)`` when ``singular``) is a proximal normal to epi f at (x, f(x))."""
    x = np.asarray(x, dtype=float)
    if len(x) > 3:
        raise DimensionCapError("proximal subgradient test supports n <= 3")
    fx = float(f.eval(x))
    if not np.isfinite(fx):
        raise ValueError("f must be finite at x")
    oracle = oracle or epigraph_oracle(f)
    d = np.append(np.asarray(y, dtype=float), 0.0 if singular else -1.0)
    nd = np.linalg.norm(d)
    # keep the nearest point inside the grid window around the query
    a = alpha if nd == 0 else min(alpha, 0.4 / nd)
    return proximal_normal_member(ProximalQuery(np.append(x, fx), d, a, oracle))


def epigraph_boundary_samples(f: InvariantFunction, centers, rng, count=20, spread=1.0):
    pts = [np.asarray(c, dtype=float) for c in centers]
    n = f.root_system.dimension
    for c in list(pts):
        pts.extend(c + spread * rng.standard_normal((count // max(len(centers), 1), n)))
    Z = np.array(pts)
    return np.hstack([Z, f.eval(Z)[:, None]])


def verify_proximal_subdiff_characterization(f: InvariantFunction, x, y, singular=False,
                                             alpha=0.1, seed=0, check_precondition=True) -> bool:
    """``y in d_p f(x)  <=>  (yc in d_p f(xc) and <xc, yc> == <x, y>)``.

    With ``singular=True`` the horizontal direction ``(y, 0)`` is tested
    instead. Raises :class:`PropertyAViolation` if the epigraph fails the
    orbit-hull precondition on sampled boundary points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rs = f.root_system
    oracle = epigraph_oracle(f)
    xc = canonical_representative(rs, x).representative
    yc = canonical_representative(rs, y).representative
    if check_precondition:
        samples = epigraph_boundary_samples(f, [x, xc], np.random.default_rng(seed))
        if not check_property_A(oracle, samples, seed=seed):
            raise PropertyAViolation(f"epi {f.label} fails the orbit-hull property",
                                     {"function": f.label, "x": x.tolist()})
    lhs = proximal_subgradient_member(f, x, y, alpha, singular, oracle)
    gap = float(xc @ yc - x @ y)
    rhs = abs(gap) <= IP_TOL and proximal_subgradient_member(f, xc, yc, alpha, singular, oracle)
    if lhs != rhs:
        raise CharacterizationFailure(
            "proximal subdifferential characterization mismatch",
            {"function": f.label, "x": x.tolist(), "y": y.tolist(), "singular": singular,
             "lhs": lhs, "rhs": rhs, "inner_product_gap": gap},
        )
    return lhs


# ---------------------------------------------------------------------------
# Schur convexity


def check_schur_convex(f: InvariantFunction, G: FiniteGroup, trials: int, seed=0,
                       scale=1.0) -> bool:
    """Sampled isotonicity: ``f(x) >= f(w)`` whenever ``w`` lies in ``co O(x)``.

    Each ``w`` is a random convex combination of orbit points of a random
    ``x``, confirmed by :func:`group_majorizes` before use.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = G.root_system.dimension
    for _ in range(trials):
        x = scale * rng.standard_normal(n)
        pts = orbit(G, x)
        w = _random_hull_points(pts, 2, rng)[rng.integers(2)]
        if not group_majorizes(G, x, w).holds:
            raise RuntimeError("generated pair is not a majorization pair")
        if f.eval(x) < f.eval(w) - 1e-10:
            return False
    return True


__all__ = [
    "InvariantFunction",
    "ProximalQuery",
    "check_subgradient",
    "verify_lewis_characterization",
    "proximal_normal_member",
    "verify_proximal_characterization",
    "check_property_A",
    "proximal_subgradient_member",
    "verify_proximal_subdiff_characterization",
    "check_schur_convex",
    "epigraph_oracle",
    "extend_group",
    "grid_epigraph_projection",
    "linf_norm",
    "l1_norm",
    "sum_k_largest",
    "dist_to_ball",
    "squared_norm",
    "orbit_support",
    "norm_ratio",
    "neg_squared_norm",
    "neg_l1_norm",
    "coordinate_product",
    "sample_subgradient",
    "is_invariant",
]
