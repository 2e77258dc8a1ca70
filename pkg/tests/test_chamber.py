import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from reflekt.chamber import (
    canonical_representative,
    convex_weights,
    group_majorizes,
    in_chamber,
    stabilizer_witness,
)
from reflekt.groups import orbit, random_points, standard_root_system, word_matrix

from conftest import group, orbit_scan_rep

vec3 = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3)


def test_in_chamber_examples():
    A2 = standard_root_system("A", 3)
    assert in_chamber(A2, [3, 2, 1])
    assert not in_chamber(A2, [1, 2, 3])
    assert in_chamber(standard_root_system("B", 2), [1, 1])


def test_canonical_examples():
    dec = canonical_representative(standard_root_system("A", 3), [1, 3, 2])
    assert np.allclose(dec.representative, [3, 2, 1])
    assert np.allclose(dec.element(dec.input), dec.representative)
    assert np.allclose(canonical_representative(standard_root_system("B", 2), [-2, 1]).representative,
                       [2, 1])
    G = group("I2:4")
    scan = orbit_scan_rep(G, np.array([0.5, 2.0]))
    assert len(scan) == 1 and np.allclose(scan[0], [2, 0.5])
    assert np.allclose(canonical_representative(G.root_system, [0.5, 2]).representative, [2, 0.5])


@given(vec3)
def test_type_a_rep_is_descending_sort(x):
    rep = canonical_representative(standard_root_system("A", 3), x).representative
    # wall violations up to the 1e-10 chamber tolerance are left in place
    assert np.allclose(rep, np.sort(x)[::-1], rtol=0, atol=2e-10)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4))
def test_type_b_rep_is_sorted_magnitudes(x):
    rep = canonical_representative(standard_root_system("B", 4), x).representative
    assert np.allclose(rep, np.sort(np.abs(x))[::-1], rtol=0, atol=2e-10)


@pytest.mark.parametrize("spec", ["A:3", "A:4", "B:3", "D:3", "D:4", "I2:5", "I2:8"])
def test_rep_properties(spec, rng):
    G = group(spec)
    rs = G.root_system
    for x in random_points(rs, 80, rng, wall_fraction=0.4):
        dec = canonical_representative(rs, x)
        xc = dec.representative
        assert np.all(rs.positive_roots @ xc >= -1e-10)
        assert np.allclose(word_matrix(rs, dec.word), dec.element.matrix, atol=1e-10)
        assert np.max(np.abs(dec.element(x) - xc)) <= 1e-10
        assert abs(np.linalg.norm(xc) - np.linalg.norm(x)) <= 1e-10
        scan = orbit_scan_rep(G, x)
        assert len(scan) == 1 and np.max(np.abs(scan[0] - xc)) <= 1e-9
        again = canonical_representative(rs, xc)
        assert again.word == () and np.allclose(again.representative, xc)
        g = G.elements[rng.integers(G.order)]
        assert np.max(np.abs(canonical_representative(rs, g(x)).representative - xc)) <= 1e-9


@pytest.mark.parametrize("spec", ["A:3", "B:3", "I2:5"])
def test_max_inner_product_at_chamber(spec, rng):
    G = group(spec)
    rs = G.root_system
    for _ in range(50):
        x, y = rng.standard_normal((2, rs.dimension))
        xc = canonical_representative(rs, x).representative
        yc = canonical_representative(rs, y).representative
        assert abs(np.max(G.act(x) @ y) - xc @ yc) <= 1e-10


def test_stabilizer_witness_equality_case():
    G = group("B:2")
    xc = np.array([1.0, 1.0])
    yc = np.array([2.0, 1.0])
    z = np.array([1.0, 2.0])  # same inner product with xc as yc
    q = stabilizer_witness(G, xc, z, yc)
    assert q is not None and np.allclose(q(z), yc) and np.allclose(q(xc), xc)
    assert stabilizer_witness(G, np.array([2.0, 1.0]), z, yc) is None


# -- majorization ---------------------------------------------------------------

def linprog_feasible(points, y):
    k = len(points)
    A = np.vstack([points.T, np.ones(k)])
    res = linprog(np.zeros(k), A_eq=A, b_eq=np.append(y, 1.0), bounds=[(0, None)] * k,
                  method="highs")
    return res.status == 0


def test_majorization_examples():
    A2 = group("A:3")
    v = group_majorizes(A2, [3, 2, 1], [2, 2, 2])
    assert v.holds and v.residual() <= 1e-8
    assert abs(v.weights.sum() - 1) <= 1e-12 and np.all(v.weights >= 0)
    assert not group_majorizes(A2, [3, 2, 1], [4, 1, 1]).holds
    assert group_majorizes(group("B:3"), [0.3, -1, 2], [0.3, -1, 2]).holds


@pytest.mark.parametrize("spec", ["A:3", "B:2", "D:3", "I2:5"])
def test_majorization_matches_linprog(spec, rng):
    G = group(spec)
    n = G.root_system.dimension
    for _ in range(120):
        x = rng.standard_normal(n)
        pts = orbit(G, x)
        y = rng.dirichlet(np.ones(len(pts))) @ pts if rng.random() < 0.5 else rng.standard_normal(n)
        v = group_majorizes(G, x, y)
        assert v.holds == linprog_feasible(pts, y)
        if v.holds:
            assert v.residual() <= 1e-8


def test_majorization_preorder(rng):
    G = group("B:3")
    for _ in range(30):
        x = rng.standard_normal(3)
        y = rng.dirichlet(np.ones(48)) @ G.act(x)
        z = rng.dirichlet(np.ones(48)) @ G.act(y)
        assert group_majorizes(G, x, x).holds
        assert group_majorizes(G, x, y).holds and group_majorizes(G, y, z).holds
        assert group_majorizes(G, x, z).holds


def test_convex_weights_degenerate_points():
    pts = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    lam = convex_weights(pts, [0.5, 0.5])
    assert lam is not None and np.allclose(lam @ pts, [0.5, 0.5])
    assert convex_weights(pts, [1.0, 1.0]) is None
