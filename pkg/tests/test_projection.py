import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize
from sklearn.isotonic import IsotonicRegression

from reflekt.errors import (
    CharacterizationFailure,
    DykstraNonconvergence,
    GroupTooLargeError,
    NotInChamberError,
    OracleViolationError,
)
from reflekt.groups import random_points, standard_root_system, unique_rows
from reflekt.projection import (
    InvariantSetOracle,
    SparsityConstraint,
    ball_oracle,
    box_oracle,
    brute_force_sparse,
    dykstra_intersection,
    finite_orbit_oracle,
    hull_union_oracle,
    in_projection,
    min_norm_point,
    orbit_hull_oracle,
    project_invariant,
    project_sparse_chamber_set,
    sparse_chamber_project,
    sparse_project,
    sparsity_oracle,
    sphere_oracle,
    verify_projection_characterization,
)

from conftest import group
from oracles import grid_ball_sparse_distance


def same_set(a, b, tol=1e-9):
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if len(a) != len(b):
        return False
    return all(np.min(np.max(np.abs(b - p), axis=1)) <= tol for p in a)


# -- generic chamber reduction ------------------------------------------------

def test_projection_examples():
    B2 = group("B:2")
    rs = B2.root_system
    p = project_invariant(ball_oracle(rs, 1.0, B2), [0.0, 0.0])
    assert p.distance == 0 and np.allclose(p.points, [[0, 0]])
    p = project_invariant(sphere_oracle(rs, 1.0, B2), [3.0, 4.0])
    assert np.allclose(p.points, [[0.6, 0.8]]) and abs(p.distance - 4) <= 1e-12
    orb = finite_orbit_oracle(B2, [[1.0, 0.0]])
    p = project_invariant(orb, [0.9, 0.1])
    assert np.allclose(p.points, [[1, 0]]) and abs(p.distance - np.sqrt(0.02)) <= 1e-12


def test_characterization_examples():
    orb = finite_orbit_oracle(group("B:2"), [[1.0, 0.0]])
    assert verify_projection_characterization(orb, [0.9, 0.1], [1.0, 0.0])
    assert not verify_projection_characterization(orb, [0.9, 0.1], [0.0, -1.0])
    assert verify_projection_characterization(orb, [1.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        verify_projection_characterization(orb, [0.9, 0.1], [0.5, 0.5])


def test_bad_oracle_is_caught():
    G = group("B:2")
    rs = G.root_system
    # projector that ignores the set: returns a point outside the unit disc
    bad = InvariantSetOracle("bad", rs, contains=lambda z: np.linalg.norm(z) <= 1,
                             chamber_project=lambda xc: [xc * 2], group=G)
    with pytest.raises(OracleViolationError):
        project_invariant(bad, [0.6, 0.5])


def test_characterization_failure_payload():
    G = group("B:2")
    rs = G.root_system
    # a projector that reports a far point makes every candidate look near enough on
    # the left, while the inner-product test on the right still sees the mismatch
    lying = InvariantSetOracle("lying", rs, contains=lambda z: True,
                               chamber_project=lambda xc: [np.array([-5.0, 0.0])], group=G)
    with pytest.raises(CharacterizationFailure) as exc:
        verify_projection_characterization(lying, [0.1, 0.9], [1.0, 0.0])
    assert exc.value.counterexample["set"] == "lying"
    assert exc.value.counterexample["lhs"] is True


@pytest.mark.parametrize("spec", ["A:3", "B:2", "I2:5", "D:3"])
def test_finite_orbits_match_brute_force(spec, rng):
    G = group(spec)
    rs = G.root_system
    n = rs.dimension
    for k in (1, 2, 3):
        seeds = rng.standard_normal((k, n))
        orb = finite_orbit_oracle(G, seeds)
        queries = np.vstack([random_points(rs, 30, rng, wall_fraction=0.5),
                             orb.direct(np.zeros(n))[1][:1] * 0.5])
        for x in queries:
            proj = project_invariant(orb, x)
            d, pts = orb.direct(x)
            assert abs(proj.distance - d) <= 1e-9
            assert same_set(proj.points, pts)
            for y in pts[:3]:
                assert verify_projection_characterization(orb, x, y)


def test_ties_spread_over_stabilizer():
    G = group("B:2")
    orb = finite_orbit_oracle(G, [[1.0, 0.0]])
    p = project_invariant(orb, [0.0, 0.0])
    assert len(p.points) == 4
    p = project_invariant(orb, [0.5, 0.5])
    assert same_set(p.points, [[1, 0], [0, 1]])


@pytest.mark.parametrize("spec", ["A:3", "B:3", "I2:6"])
def test_equivariance(spec, rng):
    G = group(spec)
    rs = G.root_system
    n = rs.dimension
    oracles = [finite_orbit_oracle(G, rng.standard_normal((2, n))), ball_oracle(rs, 1.0, G)]
    for oracle in oracles:
        for x in random_points(rs, 10, rng, wall_fraction=0.5, scale=2.0):
            base = project_invariant(oracle, x).points
            for g in G.elements[:: max(1, G.order // 8)]:
                assert same_set(project_invariant(oracle, g(x)).points, base @ g.matrix.T)


@pytest.mark.parametrize("spec", ["B:3", "A:4", "I2:5"])
def test_convex_projection_of_chamber_point_stays_in_chamber(spec, rng):
    G = group(spec)
    rs = G.root_system
    hull = orbit_hull_oracle(G, rng.standard_normal(rs.dimension))
    box = box_oracle(rs, 0.5, G) if rs.family != "I2" else ball_oracle(rs, 0.7, G)
    for oracle in (hull, box):
        for x in rng.standard_normal((20, rs.dimension)) * 2:
            p = project_invariant(oracle, x)
            assert len(p.points) == 1
            y = p.points[0]
            from reflekt.chamber import canonical_representative

            xc = canonical_representative(rs, x).representative
            yc = canonical_representative(rs, y).representative
            py = project_invariant(oracle, xc).points[0]
            assert np.all(rs.positive_roots @ py >= -1e-9)
            assert np.allclose(py, yc, atol=1e-8)
            assert abs(xc @ yc - x @ y) <= 1e-8


# -- polytopes ----------------------------------------------------------------

def slsqp_min_norm(P):
    k = len(P)
    res = minimize(lambda lam: np.sum((lam @ P) ** 2), np.full(k, 1.0 / k),
                   jac=lambda lam: 2 * P @ (lam @ P), method="SLSQP",
                   bounds=[(0, 1)] * k,
                   constraints=[{"type": "eq", "fun": lambda lam: lam.sum() - 1}],
                   options={"ftol": 1e-14, "maxiter": 500})
    return res.x @ P


@pytest.mark.parametrize("dim,k", [(2, 5), (3, 8), (4, 12), (6, 20)])
def test_min_norm_point_matches_slsqp(dim, k, rng):
    for _ in range(10):
        P = rng.standard_normal((k, dim)) + rng.standard_normal(dim)
        x, w = min_norm_point(P)
        assert np.allclose(w @ P, x)
        assert abs(w.sum() - 1) <= 1e-12 and np.all(w >= 0)
        ref = slsqp_min_norm(P)
        assert np.linalg.norm(x) <= np.linalg.norm(ref) + 1e-9
        assert np.linalg.norm(x - ref) <= 1e-5


def test_min_norm_point_origin_inside():
    x, _ = min_norm_point(np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]]))
    assert np.linalg.norm(x) <= 1e-12


def test_hull_union_direct_matches_chamber_route(rng):
    G = group("I2:4")
    union = hull_union_oracle(G, [[2.0, 1.0], [1.4, 1.4]])
    for x in rng.standard_normal((60, 2)) * 3:
        p = project_invariant(union, x)
        d, pts = union.direct(x)
        assert abs(p.distance - d) <= 1e-9
        assert same_set(p.points, pts, tol=1e-8)


# -- sparsity -------------------------------------------------------------------

def test_sparse_chamber_examples():
    assert np.allclose(sparse_chamber_project([3, 2, 1, 0.5], 2), [3, 2, 0, 0])
    assert np.allclose(sparse_chamber_project([3, 2, 0, 0], 2), [3, 2, 0, 0])
    y = sparse_chamber_project([1, 1, 1], 2)
    assert np.allclose(y, [1, 1, 0])
    d, _ = brute_force_sparse(np.ones(3), 2)
    assert abs(np.linalg.norm(np.ones(3) - y) - d) <= 1e-12 and abs(d - 1) <= 1e-12
    with pytest.raises(NotInChamberError):
        sparse_chamber_project([1, 2, 0], 1)
    with pytest.raises(ValueError):
        SparsityConstraint(3, 4)


def test_sparse_project_examples():
    assert np.array_equal(sparse_project([-1, 3, -2], 1).points, [[0, 3, 0]])
    assert same_set(sparse_project([1, -1], 1).points, [[1, 0], [0, -1]])
    rs2 = standard_root_system("B", 2)
    p = sparse_project([5, 0], 2, ball_oracle(rs2, 1.0))
    assert same_set(p.points, [[1, 0]])


values = st.lists(st.integers(-3, 3), min_size=1, max_size=7)


@given(values, st.data())
def test_sparse_project_matches_exhaustive_oracle(vals, data):
    x = np.array(vals, dtype=float) * 0.75
    s = data.draw(st.integers(0, len(x)))
    proj = sparse_project(x, s)
    d, pts = brute_force_sparse(x, s)
    assert abs(proj.distance - d) <= 1e-10
    got = proj.points
    assert len(got) == len(pts)
    assert {tuple(p) for p in got} == {tuple(p) for p in pts}
    assert np.all(np.count_nonzero(got, axis=1) <= s)


def test_sparse_project_limit():
    with pytest.raises(GroupTooLargeError):
        sparse_project(np.ones(12), 6, limit=100)


def test_sparse_chamber_set_matches_isotonic_oracle(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        s = int(rng.integers(0, n + 1))
        z = rng.standard_normal(n) * 2
        ref = np.zeros(n)
        if s:
            iso = IsotonicRegression(increasing=False).fit_transform(np.arange(s), z[:s])
            ref[:s] = np.maximum(iso, 0)
        assert np.allclose(project_sparse_chamber_set(z, s), ref, atol=1e-12)


def test_dykstra_examples():
    ha = lambda z: np.array([max(z[0], 1.0), z[1]])
    hb = lambda z: np.array([z[0], max(z[1], 1.0)])
    assert np.allclose(dykstra_intersection(ha, hb, np.zeros(2)), [1, 1], atol=1e-9)
    assert np.allclose(dykstra_intersection(ha, ha, np.array([0.0, 3.0])), [1, 3])
    disc = lambda z: z if np.linalg.norm(z) <= 1 else z / np.linalg.norm(z)
    line = lambda z: np.array([0.6, z[1]])
    # chord {x1 = 0.6} of the unit disc runs from (0.6, -0.8) to (0.6, 0.8);
    # the nearest chord point to (2, 0.6) is (0.6, 0.6)
    assert np.allclose(dykstra_intersection(disc, line, np.array([2.0, 0.6])), [0.6, 0.6], atol=1e-8)


def test_dykstra_nonconvergence():
    disc = lambda z: z if np.linalg.norm(z) <= 1 else z / np.linalg.norm(z)
    far = lambda z: np.array([5.0, z[1]])  # disjoint from the disc
    with pytest.raises(DykstraNonconvergence):
        dykstra_intersection(disc, far, np.zeros(2), max_iter=200)


def test_sparse_ball_matches_grid_oracle(rng):
    for _ in range(40):
        n = int(rng.integers(1, 4))
        s = int(rng.integers(1, n + 1))
        x = rng.standard_normal(n) * 1.5
        rs = standard_root_system("B", n)
        p = sparse_project(x, s, ball_oracle(rs, 1.0))
        assert abs(p.distance - grid_ball_sparse_distance(x, s)) <= 1e-6
        for y in p.points:
            assert np.count_nonzero(y) <= s and np.linalg.norm(y) <= 1 + 1e-9


def test_convex_combinations_stay_in_sparse_chamber_set(rng):
    # points of C_s & ball & chamber: descending nonnegative, support in the first s
    for _ in range(100):
        n = int(rng.integers(2, 7))
        s = int(rng.integers(1, n + 1))
        P = np.zeros((5, n))
        P[:, :s] = -np.sort(-rng.random((5, s)), axis=1)
        P /= np.maximum(np.linalg.norm(P, axis=1, keepdims=True), 1.0)
        z = rng.dirichlet(np.ones(5)) @ P
        assert np.count_nonzero(z) <= s and np.linalg.norm(z) <= 1 + 1e-12
        assert np.all(np.diff(z) <= 1e-15) and z[-1] >= 0


def test_sparsity_oracle_generic_route_agrees(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        s = int(rng.integers(0, n + 1))
        x = rng.standard_normal(n)
        a = project_invariant(sparsity_oracle(n, s), x)
        b = sparse_project(x, s)
        assert abs(a.distance - b.distance) <= 1e-10
        assert same_set(a.points, b.points)
