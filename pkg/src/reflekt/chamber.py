"""Fundamental chamber geometry and group majorization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IterationCapError
from .groups import (
    FiniteGroup,
    GroupElement,
    RootSystem,
    householder_matrix,
    orbit,
    stabilizer,
)

CHAMBER_TOL = 1e-10
CERT_TOL = 1e-8


def in_chamber(rs: RootSystem, x, tol=CHAMBER_TOL) -> bool:
    """``<x, u> >= -tol`` for every positive root u (closed chamber)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (rs.dimension,):
        raise ValueError("dimension mismatch")
    if len(rs.positive) == 0:
        return True
    return bool(np.all(rs.positive_roots @ x >= -tol))


@dataclass(frozen=True, eq=False)
class ChamberDecomposition:
    """``element(input) == representative`` with the representative in the chamber."""

    input: np.ndarray
    representative: np.ndarray
    element: GroupElement

    @property
    def word(self) -> tuple:
        return self.element.word


def canonical_representative(rs: RootSystem, x, tol=CHAMBER_TOL) -> ChamberDecomposition:
    """Map ``x`` to the unique point of its orbit in the closed fundamental chamber.

    Repeatedly reflects in the most violated positive root (lowest index on
    ties). Each step strictly increases ``<x, w>`` for the interior functional
    ``w``, so the loop terminates on a finite orbit.
    """
    x0 = np.asarray(x, dtype=float)
    if x0.shape != (rs.dimension,):
        raise ValueError("dimension mismatch")
    U = rs.positive_roots
    cur = x0.copy()
    g = np.eye(rs.dimension)
    applied = []
    cap = 50 * max(len(rs.roots), 1)
    while len(U):
        ips = U @ cur
        i = int(np.argmin(ips))  # argmin returns the lowest index among ties
        if ips[i] >= -tol:
            break
        if len(applied) >= cap:
            raise IterationCapError(f"no chamber point after {cap} reflections")
        cur = cur - 2.0 * ips[i] * U[i]
        g = householder_matrix(U[i]) @ g
        applied.append(i)
    # g = H_{ik} ... H_{i1}, so the word lists the applied roots in reverse
    return ChamberDecomposition(x0, cur, GroupElement(g, tuple(reversed(applied))))


def chamber_image(rs: RootSystem, x) -> np.ndarray:
    return canonical_representative(rs, x).representative


def stabilizer_witness(G: FiniteGroup, base, z, target, tol=1e-9):
    """Element q of the stabilizer of ``base`` with ``q z = target``, or ``None``.

    This is the constructive half of the equality case of the orbit
    inner-product inequality, done by scanning the stabilizer.
    """
    stab = stabilizer(G, base)
    z = np.asarray(z, dtype=float)
    target = np.asarray(target, dtype=float)
    for q in stab.elements:
        if np.max(np.abs(q(z) - target)) <= tol:
            return q
    return None


# ---------------------------------------------------------------------------
# group majorization


def _phase_one(A, b, tol=1e-11):
    """Basic feasible ``x >= 0`` with ``A x = b`` by phase-1 simplex, or ``None``.

    Bland's rule (lowest entering index, lowest leaving basis index) rules
    out cycling on degenerate vertices, which are common here because orbit
    points repeat structure.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, N = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(N, N + m))
    cost = np.zeros(N + m + 1)
    cost[N:N + m] = 1.0
    r = cost - T.sum(axis=0)
    scale = max(1.0, float(np.abs(T).max()))
    for _ in range(50 * (N + m) + 100):
        entering = np.flatnonzero(r[: N + m] < -tol * scale)
        if entering.size == 0:
            break
        j = entering[0]
        col = T[:, j]
        rows = np.flatnonzero(col > tol * scale)
        if rows.size == 0:  # unbounded direction; impossible in phase 1
            break
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * scale]
        i = min(ties, key=lambda k: basis[k])
        T[i] /= T[i, j]
        for k in range(m):
            if k != i and T[k, j] != 0.0:
                T[k] -= T[k, j] * T[i]
        r -= r[j] * T[i]
        basis[i] = j
    infeasibility = -r[-1]
    if infeasibility > 1e-9 * max(1.0, float(np.abs(b).sum())):
        return None
    x = np.zeros(N)
    for i, bi in enumerate(basis):
        if bi < N:
            x[bi] = T[i, -1]
    return np.clip(x, 0.0, None)


@dataclass(frozen=True, eq=False)
class MajorizationVerdict:
    dominant: np.ndarray
    dominated: np.ndarray
    holds: bool
    weights: np.ndarray | None = None
    points: np.ndarray | None = None

    def residual(self) -> float:
        if not self.holds:
            return float("inf")
        return float(np.max(np.abs(self.weights @ self.points - self.dominated)))


def convex_weights(points, y):
    """Weights ``lam >= 0``, ``sum lam = 1``, ``lam @ points = y``, or ``None``."""
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([points.T, np.ones(len(points))])
    b = np.append(y, 1.0)
    lam = _phase_one(A, b)
    if lam is None:
        return None
    s = lam.sum()
    if s <= 0:
        return None
    lam = lam / s
    if np.max(np.abs(lam @ points - y)) > CERT_TOL:
        return None
    return lam


def group_majorizes(G: FiniteGroup, x, y) -> MajorizationVerdict:
    """Decide ``y in co O(x)`` over the enumerated orbit of ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape != x.shape:
        raise ValueError("dimension mismatch")
    pts = orbit(G, x)
    lam = convex_weights(pts, y)
    if lam is None:
        return MajorizationVerdict(x, y, False)
    return MajorizationVerdict(x, y, True, lam, pts)


__all__ = [
    "ChamberDecomposition",
    "MajorizationVerdict",
    "in_chamber",
    "canonical_representative",
    "chamber_image",
    "group_majorizes",
    "convex_weights",
    "stabilizer_witness",
]
