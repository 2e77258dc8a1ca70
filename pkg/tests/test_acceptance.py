"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import time

import numpy as np
import pytest

from reflekt.chamber import canonical_representative, stabilizer_witness
from reflekt.groups import enumerate_group, random_points, stabilizer, standard_root_system, wall_roots
from reflekt.harness import product_rejected, run_thm31, run_thm52, run_thm54
from reflekt.projection import (
    ball_oracle,
    brute_force_sparse,
    finite_orbit_oracle,
    project_invariant,
    sparse_project,
    verify_projection_characterization,
)
from reflekt.recovery import generate_problem, iht_solve, relative_error
from reflekt.variational import check_schur_convex, neg_squared_norm, norm_ratio

from conftest import group, orbit_scan_rep
from oracles import grid_ball_sparse_distance, reflection_closure, same_matrix_set

pytestmark = pytest.mark.acceptance

CHAMBER_GROUPS = ["A:3", "A:4", "B:2", "B:3", "D:3"] + [f"I2:{m}" for m in range(3, 9)]


def verdict(number, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    return ok


def test_criterion_01_group_orders():
    rows = []
    ok = True
    for spec, expected in (("I2:4", 8), ("A:3", 6), ("B:3", 48)):
        family, _, p = spec.partition(":")
        rs = standard_root_system(family, int(p))
        t0 = time.perf_counter()
        order = enumerate_group(rs).order
        dt = time.perf_counter() - t0
        ok &= order == expected and dt < 1.0
        rows.append(f"{spec}={order} ({dt:.3f}s)")
    assert verdict(1, ok, "group orders " + ", ".join(rows))


def test_criterion_02_chamber_uniqueness():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    failures = checked = 0
    for spec in CHAMBER_GROUPS:
        G = group(spec)
        rs = G.root_system
        for x in random_points(rs, 1000, rng, wall_fraction=0.4):
            scan = orbit_scan_rep(G, x)
            rep = canonical_representative(rs, x).representative
            checked += 1
            if len(scan) != 1 or np.max(np.abs(scan[0] - rep)) > 1e-10:
                failures += 1
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 30
    assert verdict(2, ok, f"{checked} points over {len(CHAMBER_GROUPS)} groups, "
                          f"{failures} failures, {dt:.1f}s")


def test_criterion_03_stabilizer_generation():
    rng = np.random.default_rng(3)
    failures = checked = walls_seen = 0
    dt = 0.0  # library time only; the brute-force oracle below is not budgeted
    for spec in CHAMBER_GROUPS:
        G = group(spec)
        rs = G.root_system
        n = rs.dimension
        for x in random_points(rs, 1000, rng, wall_fraction=0.6, max_walls=3):
            checked += 1
            t0 = time.perf_counter()
            st = stabilizer(G, x)  # raises on a closure/fixed-point mismatch
            dt += time.perf_counter() - t0
            V = wall_roots(rs, x)
            walls_seen += len(V) > 0
            fixed = [m for m in G.matrices if np.max(np.abs(m @ x - x)) <= 1e-8]
            closure = reflection_closure(rs.positive_roots[list(V)], n)
            if not (same_matrix_set(closure, fixed)
                    and same_matrix_set([g.matrix for g in st.elements], fixed)):
                failures += 1
    ok = failures == 0 and dt < 30
    assert verdict(3, ok, f"{checked} points ({walls_seen} on walls), {failures} failures, {dt:.1f}s")


def test_criterion_04_max_inner_product():
    rng = np.random.default_rng(4)
    failures = equality_cases = nontrivial = 0
    for spec in CHAMBER_GROUPS:
        G = group(spec)
        rs = G.root_system
        X = random_points(rs, 500, rng, wall_fraction=0.5)
        Y = random_points(rs, 500, rng, wall_fraction=0.5)
        for x, y in zip(X, Y):
            xc = canonical_representative(rs, x).representative
            yc = canonical_representative(rs, y).representative
            top = yc @ xc
            vals = G.act(yc) @ xc
            if np.any(vals > top + 1e-10):
                failures += 1
                continue
            for k in np.flatnonzero(np.abs(vals - top) <= 1e-10):
                gy = G.matrices[k] @ yc
                equality_cases += 1
                nontrivial += np.max(np.abs(gy - yc)) > 1e-10
                q = stabilizer_witness(G, xc, gy, yc)
                if q is None:
                    failures += 1
    ok = failures == 0
    assert verdict(4, ok, f"{equality_cases} equality cases ({nontrivial} with g y != y), "
                          f"{failures} failures")


def test_criterion_05_projection_characterization():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    failures = checks = 0
    for spec in ("A:3", "B:2", "I2:5"):
        G = group(spec)
        rs = G.root_system
        n = rs.dimension
        for k in (1, 2, 3):
            oracle = finite_orbit_oracle(G, rng.standard_normal((k, n)))
            members = np.concatenate([G.act(c) for c in oracle.direct(np.zeros(n))[1][:1]])
            queries = random_points(rs, 500, rng, wall_fraction=0.4, scale=1.5)
            for x in queries:
                proj = project_invariant(oracle, x)
                d, pts = oracle.direct(x)
                same = (abs(proj.distance - d) <= 1e-9 and len(proj.points) == len(pts)
                        and all(np.min(np.max(np.abs(proj.points - p), axis=1)) <= 1e-9 for p in pts))
                failures += not same
                other = members[rng.integers(len(members))]
                for y, expected in ((pts[rng.integers(len(pts))], True), (other, None)):
                    checks += 1
                    got = verify_projection_characterization(oracle, x, y)
                    if expected is None:
                        expected = bool(np.sum((x - y) ** 2) <= d * d + 1e-8)
                    failures += got != expected
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 60
    assert verdict(5, ok, f"9 sets x 500 queries, {checks} iff checks, {failures} failures, {dt:.1f}s")


def test_criterion_06_sparse_projection():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    failures = cases = ties = 0
    for n in range(1, 9):
        for s in range(n + 1):
            for t in range(500):
                if t % 3 == 0:
                    x = rng.integers(-2, 3, n) * 0.5  # forces magnitude ties
                else:
                    x = rng.standard_normal(n)
                ties += len(np.unique(np.abs(x))) < n
                cases += 1
                proj = sparse_project(x, s)
                d, pts = brute_force_sparse(x, s)
                got = proj.points
                if (abs(proj.distance - d) > 1e-10 or {tuple(p) for p in got} != {tuple(p) for p in pts}
                        or np.any(np.count_nonzero(got, axis=1) > s)):
                    failures += 1
    grid_cases = grid_worst = 0
    for n in (1, 2, 3):
        rs = standard_root_system("B", n)
        ball = ball_oracle(rs, 1.0)
        for s in range(1, n + 1):
            for _ in range(15):
                x = rng.standard_normal(n) * 1.5
                err = abs(sparse_project(x, s, ball).distance - grid_ball_sparse_distance(x, s))
                grid_worst = max(grid_worst, err)
                grid_cases += 1
                failures += err > 1e-6
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 120
    assert verdict(6, ok, f"{cases} exhaustive cases ({ties} with ties), {grid_cases} ball cases "
                          f"(worst grid gap {grid_worst:.1e}), {failures} failures, {dt:.1f}s")


def test_criterion_07_subdifferential():
    t0 = time.perf_counter()
    total = bad = misses = 0
    for spec in ("A:3", "B:2", "B:3"):
        rep = run_thm31(group(spec), 500, seed=7)
        assert len(rep.details["functions"]) == 4
        total += rep.trials
        bad += rep.counterexamples
        misses += rep.details["refutation_misses"]
    dt = time.perf_counter() - t0
    ok = bad == 0 and misses == 0 and dt < 60
    assert verdict(7, ok, f"{total} trials, {bad} counterexamples, {misses} sampling misses, {dt:.1f}s")


def test_criterion_08_proximal():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for spec in ("I2:5", "A:3", "B:2"):
        rep = run_thm52(group(spec), 200, seed=8)
        ok &= rep.passed
        parts.append(f"thm52 {spec}: {rep.trials} queries/{rep.counterexamples} bad")
    for spec in ("B:2", "A:3"):
        rep = run_thm54(group(spec), 100, seed=8)
        ok &= rep.passed
        parts.append(f"thm54 {spec}: {rep.trials} queries/{rep.counterexamples} bad")
    rejected = product_rejected(group("A:2"))
    ok &= rejected is True
    dt = time.perf_counter() - t0
    ok &= dt < 120
    assert verdict(8, ok, "; ".join(parts) + f"; x1*x2 rejected={rejected}; {dt:.1f}s")


def test_criterion_09_schur():
    parts = []
    ok = True
    for spec in ("A:3", "B:2", "I2:5"):
        G = group(spec)
        good = check_schur_convex(norm_ratio(G), G, 1000, seed=9)
        bad = check_schur_convex(neg_squared_norm(G), G, 1000, seed=9)
        again = (check_schur_convex(norm_ratio(G), G, 1000, seed=9),
                 check_schur_convex(neg_squared_norm(G), G, 1000, seed=9))
        ok &= good and not bad and again == (good, bad)
        parts.append(f"{spec}: pseudo-convex={good}, -|x|^2={bad}")
    assert verdict(9, ok, "; ".join(parts))


def test_criterion_10_sparse_recovery():
    t0 = time.perf_counter()
    errs = []
    sparse_ok = True
    for seed in range(20):
        p = generate_problem(64, 32, 4, seed=seed)
        x, trace = iht_solve(p)
        sparse_ok &= all(it[2] <= 4 for it in trace.iterates)
        errs.append(relative_error(x, p.x_true))
    rate = float(np.mean(np.array(errs) <= 1e-4))
    dt = time.perf_counter() - t0
    ok = rate >= 0.9 and sparse_ok and dt < 60
    assert verdict(10, ok, f"recovery {rate:.0%} of 20 (need >= 90%), iterates s-sparse={sparse_ok}, "
                           f"{dt:.1f}s")
