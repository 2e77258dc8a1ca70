"""Root systems, Householder reflections and explicit finite reflection groups.

Groups are stored as flat lists of dense orthogonal matrices obtained by
breadth-first closure of the positive-root reflections. This is only sensible
at desk scale (n <= 8 or so) and ``size_cap`` guards against runaway closures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GroupTooLargeError,
    NormalizationError,
    StabilizerMismatchError,
    UnsupportedGroupError,
)

UNIT_TOL = 1e-12
CLOSURE_TOL = 1e-10
DEDUP_TOL = 1e-8
ZERO_TOL = 1e-9
FIXED_TOL = 1e-8
DEFAULT_SIZE_CAP = 100_000
FAMILIES = ("A", "B", "D", "I2")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


_FP_WEIGHTS = {}


def _fingerprint(rows):
    """Random positive projection; max-norm distance t bounds fingerprint gap by t*sum(w)."""
    d = rows.shape[1]
    if d not in _FP_WEIGHTS:
        _FP_WEIGHTS[d] = np.random.default_rng(20240611 + d).uniform(1.0, 2.0, d)
    w = _FP_WEIGHTS[d]
    return rows @ w, float(w.sum())


def unique_rows(points, tol=DEDUP_TOL):
    """Indices of the first representative of each cluster of rows.

    Rows closer than ``tol`` in max-norm are considered equal. Order of first
    occurrence is preserved.
    """
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    points = points.reshape(len(points), -1)
    fp, scale = _fingerprint(points)
    order = np.argsort(fp, kind="stable")
    gaps = np.diff(fp[order]) > tol * scale
    runs = np.split(order, np.flatnonzero(gaps) + 1)
    kept = []
    for run in runs:
        if len(run) == 1:
            kept.append(run[0])
            continue
        reps = []
        for i in np.sort(run):
            if not reps or np.min(np.max(np.abs(points[reps] - points[i]), axis=1)) >= tol:
                reps.append(i)
        kept.extend(reps)
    return np.sort(np.array(kept, dtype=int))


class _RowIndex:
    """Tolerance lookup of rows against a fixed reference set."""

    def __init__(self, rows):
        self.rows = np.asarray(rows, dtype=float).reshape(len(rows), -1)
        fp, self.scale = _fingerprint(self.rows)
        self.order = np.argsort(fp)
        self.sorted_fp = fp[self.order]

    def match(self, queries, tol=DEDUP_TOL):
        queries = np.asarray(queries, dtype=float).reshape(len(queries), -1)
        fp, _ = _fingerprint(queries)
        eps = tol * self.scale
        lo = np.searchsorted(self.sorted_fp, fp - eps, side="left")
        hi = np.searchsorted(self.sorted_fp, fp + eps, side="right")
        out = np.full(len(queries), -1)
        for q in np.flatnonzero(hi > lo):
            cand = self.order[lo[q]:hi[q]]
            d = np.max(np.abs(self.rows[cand] - queries[q]), axis=1)
            if np.any(d < tol):
                out[q] = cand[np.argmin(d)]
        return out


def generic_functional(n, roots=None, zero_tol=ZERO_TOL):
    """Deterministic functional ``w`` used to split a root system into +/- halves.

    ``w = (n, n-1, ..., 1)`` normalized; if any root is orthogonal to it, the
    vector is perturbed by ``1e-4 * (1, 1/2, ..., 1/n)``.
    """
    w = np.arange(n, 0, -1, dtype=float)
    w /= np.linalg.norm(w)
    if roots is None or len(roots) == 0:
        return w
    roots = np.asarray(roots, dtype=float)
    if np.all(np.abs(roots @ w) > zero_tol):
        return w
    w = w + 1e-4 / np.arange(1, n + 1)
    if np.any(np.abs(roots @ w) <= zero_tol):
        raise UnsupportedGroupError(
            "default functional is orthogonal to a root; pass an explicit functional"
        )
    return w


@dataclass(frozen=True, eq=False)
class RootSystem:
    """Unit roots ``roots`` closed under negation, with positive half ``positive``.

    ``positive`` holds indices into ``roots``; ``positive_roots`` is the
    corresponding array U, whose order defines the generator indices used in
    group words.
    """

    dimension: int
    roots: np.ndarray
    positive: tuple
    functional: np.ndarray
    family: str = "custom"
    param: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "roots", _frozen(self.roots).reshape(-1, self.dimension))
        object.__setattr__(self, "functional", _frozen(self.functional))
        object.__setattr__(self, "positive", tuple(int(i) for i in self.positive))
        self.validate()

    @property
    def positive_roots(self) -> np.ndarray:
        return self.roots[list(self.positive)]

    @property
    def name(self) -> str:
        if self.param is None:
            return self.family
        return f"{self.family}:{self.param}"

    def validate(self):
        roots = self.roots
        if roots.shape[1] != self.dimension or self.functional.shape != (self.dimension,):
            raise UnsupportedGroupError("root dimension mismatch")
        norms = np.linalg.norm(roots, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise NormalizationError("roots must be unit vectors")
        if len(roots) == 0:
            return
        if unique_rows(roots).size != len(roots):
            raise UnsupportedGroupError("duplicate roots")
        index = _RowIndex(roots)
        if np.any(index.match(-roots, CLOSURE_TOL) < 0):
            raise UnsupportedGroupError("root set is not closed under negation")
        signs = roots @ self.functional
        pos = np.zeros(len(roots), dtype=bool)
        pos[list(self.positive)] = True
        if np.any(signs[pos] <= 0) or np.any(signs[~pos] >= 0):
            raise UnsupportedGroupError("positive subset is not cut out by the functional")
        for u in roots:
            image = roots - 2.0 * np.outer(roots @ u, u)
            if np.any(index.match(image, CLOSURE_TOL) < 0):
                raise UnsupportedGroupError("roots are not permuted by their own reflections")

    def positive_index(self, u, tol=CLOSURE_TOL):
        """Index of ``u`` in U, or ``None``."""
        d = np.max(np.abs(self.positive_roots - np.asarray(u, dtype=float)), axis=1)
        hits = np.flatnonzero(d <= tol)
        return int(hits[0]) if hits.size else None

    def extended(self) -> "RootSystem":
        """Root system of the action ``g(x, a) = (g x, a)`` on R^(n+1)."""
        pad = np.zeros((len(self.roots), 1))
        return RootSystem(
            self.dimension + 1,
            np.hstack([self.roots, pad]),
            self.positive,
            np.append(self.functional, 0.0),
            family=self.family + "+epi",
            param=self.param,
        )

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "family": self.name,
            "roots": self.roots.tolist(),
            "positive": list(self.positive),
        }


def root_system_from_roots(roots, family="custom", param=None, functional=None):
    """Build a root system from a full root list, choosing U by a functional."""
    roots = np.asarray(roots, dtype=float)
    if roots.ndim != 2:
        raise UnsupportedGroupError("roots must be a 2-D array")
    n = roots.shape[1]
    if functional is None:
        functional = generic_functional(n, roots)
    functional = np.asarray(functional, dtype=float)
    positive = tuple(np.flatnonzero(roots @ functional > 0))
    return RootSystem(n, roots, positive, functional, family=family, param=param)


def root_system_from_json(doc) -> RootSystem:
    roots = np.asarray(doc["roots"], dtype=float)
    n = int(doc.get("dimension", roots.shape[1]))
    roots = roots.reshape(-1, n)
    family = doc.get("family", "custom")
    rs = root_system_from_roots(roots, family="custom")
    if "positive" in doc and doc["positive"] is not None:
        given = tuple(sorted(int(i) for i in doc["positive"]))
        if given != tuple(sorted(rs.positive)):
            # Caller's own positive system: any generic functional separating it works.
            w = roots[list(given)].sum(axis=0)
            rs = RootSystem(n, roots, given, w, family="custom")
    if family != "custom":
        object.__setattr__(rs, "family", family)
    return rs


def standard_root_system(family: str, param: int) -> RootSystem:
    """Named families, all roots stored unit norm.

    ``A`` takes the ambient dimension n (A_{n-1} acting on R^n), ``B``/``D``
    take the rank n and ``I2`` the dihedral parameter m.
    """
    family = family.upper()
    param = int(param)
    s = 1.0 / math.sqrt(2.0)
    roots = []
    if family == "A":
        if param < 2:
            raise UnsupportedGroupError("A:n needs n >= 2")
        n = param
        for i in range(n):
            for j in range(n):
                if i != j:
                    r = np.zeros(n)
                    r[i], r[j] = s, -s
                    roots.append(r)
    elif family in ("B", "D"):
        n = param
        if (family == "B" and n < 1) or (family == "D" and n < 2):
            raise UnsupportedGroupError(f"unsupported rank for {family}: {n}")
        if family == "B":
            for i in range(n):
                for sign in (1.0, -1.0):
                    r = np.zeros(n)
                    r[i] = sign
                    roots.append(r)
        for i in range(n):
            for j in range(i + 1, n):
                for si in (1.0, -1.0):
                    for sj in (1.0, -1.0):
                        r = np.zeros(n)
                        r[i], r[j] = si * s, sj * s
                        roots.append(r)
    elif family == "I2":
        m = param
        if m < 2:
            raise UnsupportedGroupError("I2:m needs m >= 2")
        n = 2
        for k in range(2 * m):
            t = k * math.pi / m
            roots.append([math.cos(t), math.sin(t)])
        roots = np.array(roots)
        roots[np.abs(roots) < 1e-15] = 0.0
        roots /= np.linalg.norm(roots, axis=1, keepdims=True)
    else:
        raise UnsupportedGroupError(f"unknown family {family!r}")
    return root_system_from_roots(np.array(roots).reshape(-1, n), family=family, param=param)


def known_order(family: str, param: int) -> int:
    family = family.upper()
    if family == "A":
        return math.factorial(param)
    if family == "B":
        return 2**param * math.factorial(param)
    if family == "D":
        return 2 ** (param - 1) * math.factorial(param)
    if family == "I2":
        return 2 * param
    raise UnsupportedGroupError(family)


def householder_matrix(u):
    u = np.asarray(u, dtype=float)
    return np.eye(len(u)) - 2.0 * np.outer(u, u)


def reflect(u, x):
    """Apply H_u to a point or to the rows of a point array."""
    x = np.asarray(x, dtype=float)
    return x - 2.0 * np.multiply.outer(x @ u, u)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Orthogonal matrix, optionally with a word in the positive-root reflections.

    The word ``(i1, ..., ik)`` means ``H_{U[i1]} @ ... @ H_{U[ik]}``.
    """

    matrix: np.ndarray
    word: tuple | None = None

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("group element must be a square matrix")
        if np.max(np.abs(m.T @ m - np.eye(len(m)))) > CLOSURE_TOL:
            raise ValueError("group element must be orthogonal")
        object.__setattr__(self, "matrix", m)
        if self.word is not None:
            object.__setattr__(self, "word", tuple(int(i) for i in self.word))

    def __call__(self, x):
        return self.matrix @ np.asarray(x, dtype=float)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        word = None
        if self.word is not None and other.word is not None:
            word = self.word + other.word
        return GroupElement(self.matrix @ other.matrix, word)

    def inverse(self) -> "GroupElement":
        word = None if self.word is None else self.word[::-1]
        return GroupElement(self.matrix.T, word)

    def check(self, rs: RootSystem | None = None, tol=CLOSURE_TOL):
        n = self.matrix.shape[0]
        if np.max(np.abs(self.matrix.T @ self.matrix - np.eye(n))) > tol:
            return False
        if rs is not None and self.word is not None:
            return np.max(np.abs(word_matrix(rs, self.word) - self.matrix)) <= tol
        return True


def word_matrix(rs: RootSystem, word) -> np.ndarray:
    m = np.eye(rs.dimension)
    U = rs.positive_roots
    for i in word:
        m = m @ householder_matrix(U[i])
    return m


def householder(u, rs: RootSystem | None = None) -> GroupElement:
    """Reflection ``I - 2 u u^T`` across the hyperplane orthogonal to ``u``."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise NormalizationError(f"|u| = {np.linalg.norm(u)!r}, expected 1")
    word = None
    if rs is not None:
        idx = rs.positive_index(u)
        if idx is not None:
            word = (idx,)
    return GroupElement(householder_matrix(u), word)


def _closure(generators, labels, size_cap):
    """BFS closure; returns (matrices array, words list). Identity first."""
    generators = np.asarray(generators, dtype=float)
    n = generators.shape[-1] if generators.size else None
    if n is None:
        raise ValueError("closure needs at least the dimension")
    mats = [np.eye(n)]
    words = [()]
    frontier = [0]
    while frontier:
        index = _RowIndex(np.array(mats))
        F = np.array([mats[i] for i in frontier])
        prods = np.einsum("kij,fjl->kfil", generators, F).reshape(-1, n, n)
        cand_words = [(labels[k],) + words[f] for k in range(len(generators)) for f in frontier]
        flat = prods.reshape(len(prods), -1)
        fresh = np.flatnonzero(index.match(flat) < 0)
        frontier = []
        if fresh.size:
            for j in fresh[unique_rows(flat[fresh])]:
                mats.append(prods[j])
                words.append(cand_words[j])
                frontier.append(len(mats) - 1)
                if len(mats) > size_cap:
                    raise GroupTooLargeError(f"closure exceeded size_cap={size_cap}")
    return np.array(mats), words


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    root_system: RootSystem
    elements: tuple
    size_cap: int = DEFAULT_SIZE_CAP
    matrices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(
            self, "matrices", _frozen(np.array([g.matrix for g in self.elements]))
        )

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def act(self, x) -> np.ndarray:
        """All images ``g x`` (with repetition), one row per element."""
        return self.matrices @ np.asarray(x, dtype=float)

    def index(self, matrix, tol=DEDUP_TOL):
        d = np.max(np.abs(self.matrices - np.asarray(matrix)), axis=(1, 2))
        hits = np.flatnonzero(d < tol)
        return int(hits[0]) if hits.size else None

    def to_json(self) -> dict:
        doc = self.root_system.to_json()
        doc["elements"] = [m.ravel().tolist() for m in self.matrices]
        return doc


def enumerate_group(rs: RootSystem, size_cap: int = DEFAULT_SIZE_CAP) -> FiniteGroup:
    """Close ``{H_u : u in U}`` under multiplication.

    Raises :class:`GroupTooLargeError` if more than ``size_cap`` distinct
    matrices turn up.
    """
    if size_cap < 1:
        raise ValueError("size_cap must be >= 1")
    U = rs.positive_roots
    if len(U) == 0:
        mats, words = np.eye(rs.dimension)[None], [()]
    else:
        gens = np.array([householder_matrix(u) for u in U])
        mats, words = _closure(gens, list(range(len(U))), size_cap)
    elements = [GroupElement(m, w) for m, w in zip(mats, words)]
    return FiniteGroup(rs, elements, size_cap)


def orbit(G: FiniteGroup, x) -> np.ndarray:
    """Distinct points ``g x``; cardinality divides ``|G|``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (G.root_system.dimension,):
        raise ValueError("dimension mismatch")
    pts = G.act(x)
    return pts[unique_rows(pts)]


def wall_roots(rs: RootSystem, x, zero_tol=ZERO_TOL) -> tuple:
    """Indices into U of the positive roots orthogonal to ``x``."""
    x = np.asarray(x, dtype=float)
    if len(rs.positive) == 0:
        return ()
    return tuple(int(i) for i in np.flatnonzero(np.abs(rs.positive_roots @ x) <= zero_tol))


def reflection_orbit(roots, point, cap=100_000) -> np.ndarray:
    """Orbit of ``point`` under the group generated by reflections in ``roots``."""
    point = np.asarray(point, dtype=float)
    roots = np.asarray(roots, dtype=float).reshape(-1, len(point))
    pts = [point]
    frontier = np.array([point])
    while len(frontier):
        index = _RowIndex(np.array(pts))
        cand = np.concatenate([reflect(u, frontier) for u in roots]) if len(roots) else frontier[:0]
        if not len(cand):
            break
        cand = cand[index.match(cand) < 0]
        cand = cand[unique_rows(cand)] if len(cand) else cand
        pts.extend(cand)
        if len(pts) > cap:
            raise GroupTooLargeError(f"orbit exceeded cap={cap}")
        frontier = cand
    return np.array(pts)


@dataclass(frozen=True, eq=False)
class Stabilizer:
    """Fixed-point subgroup of ``base_point``.

    ``root_subset`` indexes U (the walls through the point). ``elements`` is
    ``None`` when the subgroup was described only by its generating walls.
    """

    base_point: np.ndarray
    root_system: RootSystem
    root_subset: tuple
    elements: tuple | None = None

    @property
    def generators(self) -> np.ndarray:
        return self.root_system.positive_roots[list(self.root_subset)].reshape(
            -1, self.root_system.dimension
        )

    @property
    def order(self) -> int:
        if self.elements is None:
            raise ValueError("stabilizer not enumerated")
        return len(self.elements)

    def orbit_of(self, point, cap=100_000) -> np.ndarray:
        """``C_G(x) * point`` computed from the wall reflections alone."""
        return reflection_orbit(self.generators, point, cap)


def wall_stabilizer(rs: RootSystem, x, zero_tol=ZERO_TOL, enumerate_cap=None) -> Stabilizer:
    """Stabilizer described by its wall reflections; no full group needed.

    With ``enumerate_cap`` set, the subgroup generated by the wall reflections
    is enumerated as well.
    """
    x = np.asarray(x, dtype=float)
    V = wall_roots(rs, x, zero_tol)
    elements = None
    if enumerate_cap is not None:
        if V:
            gens = np.array([householder_matrix(u) for u in rs.positive_roots[list(V)]])
            mats, words = _closure(gens, list(V), enumerate_cap)
        else:
            mats, words = np.eye(rs.dimension)[None], [()]
        elements = tuple(GroupElement(m, w) for m, w in zip(mats, words))
    return Stabilizer(_frozen(x), rs, V, elements)


def stabilizer(G: FiniteGroup, x, zero_tol=ZERO_TOL) -> Stabilizer:
    """Scan ``G`` for elements fixing ``x`` and cross-check against the walls.

    The subgroup generated by reflections in the walls through ``x`` must
    coincide with the scanned fixed-point subgroup; otherwise
    :class:`StabilizerMismatchError` is raised (a tolerance breakdown).
    """
    rs = G.root_system
    x = np.asarray(x, dtype=float)
    if x.shape != (rs.dimension,):
        raise ValueError("dimension mismatch")
    moved = np.linalg.norm(G.act(x) - x, axis=1)
    fixed = [G.elements[i] for i in np.flatnonzero(moved <= FIXED_TOL)]
    walls = wall_stabilizer(rs, x, zero_tol, enumerate_cap=len(G))
    if len(walls.elements) != len(fixed):
        raise StabilizerMismatchError(
            f"wall closure has {len(walls.elements)} elements, fixed-point scan {len(fixed)}"
        )
    fixed_mats = np.array([g.matrix for g in fixed])
    for g in walls.elements:
        if np.min(np.max(np.abs(fixed_mats - g.matrix), axis=(1, 2))) >= DEDUP_TOL:
            raise StabilizerMismatchError("wall reflection product does not fix the point")
    return Stabilizer(_frozen(x), rs, walls.root_subset, tuple(fixed))


def random_points(rs: RootSystem, count, rng, wall_fraction=0.3, max_walls=3, scale=1.0):
    """Gaussian points, a fraction of them placed exactly on 1..max_walls walls.

    Wall points are obtained by removing the component along a random set of
    roots, so they sit on at least those walls (all walls when the roots span).
    """
    n = rs.dimension
    pts = scale * rng.standard_normal((count, n))
    U = rs.positive_roots
    if len(U) == 0:
        return pts
    for i in range(count):
        if rng.random() >= wall_fraction:
            continue
        k = int(rng.integers(1, max_walls + 1))
        S = U[rng.choice(len(U), size=min(k, len(U)), replace=False)]
        q, _ = np.linalg.qr(S.T)
        rank = np.linalg.matrix_rank(S)
        q = q[:, :rank]
        pts[i] = pts[i] - q @ (q.T @ pts[i])
    return pts


def parse_group_spec(spec: str) -> RootSystem:
    """Parse ``A:n | B:n | D:n | I2:m | custom:path.json``."""
    import json

    if ":" not in spec:
        raise UnsupportedGroupError(f"bad group spec {spec!r}")
    family, _, arg = spec.partition(":")
    if family.lower() == "custom":
        with open(arg) as fh:
            return root_system_from_json(json.load(fh))
    try:
        param = int(arg)
    except ValueError:
        raise UnsupportedGroupError(f"bad group parameter in {spec!r}") from None
    return standard_root_system(family, param)


__all__ = [
    "RootSystem",
    "GroupElement",
    "FiniteGroup",
    "Stabilizer",
    "householder",
    "standard_root_system",
    "root_system_from_roots",
    "root_system_from_json",
    "enumerate_group",
    "orbit",
    "stabilizer",
    "wall_stabilizer",
    "known_order",
    "parse_group_spec",
    "random_points",
    "reflect",
]
