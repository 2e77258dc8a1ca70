"""Randomized verification runs shared by the CLI and the acceptance tests.

Each ``run_*`` function returns a :class:`Report`; ``report.passed`` is false
as soon as one counterexample is recorded, and the first counterexample is
kept as a JSON-ready dict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chamber import canonical_representative, group_majorizes
from .errors import CharacterizationFailure, PropertyAViolation
from .groups import FiniteGroup, random_points
from .projection import (
    ball_oracle,
    finite_orbit_oracle,
    hull_union_oracle,
    orbit_hull_oracle,
)
from .variational import (
    check_property_A,
    check_schur_convex,
    coordinate_product,
    dist_to_ball,
    is_invariant,
    l1_norm,
    linf_norm,
    neg_squared_norm,
    norm_ratio,
    orbit_support,
    sample_subgradient,
    squared_norm,
    sum_k_largest,
    verify_lewis_characterization,
    verify_proximal_characterization,
    verify_proximal_subdiff_characterization,
)


@dataclass
class Report:
    name: str
    group: str
    trials: int = 0
    counterexamples: int = 0
    first: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.counterexamples == 0

    def fail(self, payload: dict):
        self.counterexamples += 1
        if self.first is None:
            self.first = payload

    def to_json(self) -> dict:
        return {"check": self.name, "group": self.group, "trials": self.trials,
                "counterexamples": self.counterexamples, "passed": self.passed,
                "counterexample": self.first, **self.details}


def _vec(v):
    return [float(t) for t in np.asarray(v).ravel()]


def subdifferential_test_functions(G: FiniteGroup, rng=None):
    """Convex test functions with closed-form subdifferentials that are invariant under G."""
    rng = rng if rng is not None else np.random.default_rng(0)
    rs = G.root_system
    n = rs.dimension
    plain = rs.family == "A"
    k = min(2, n)
    cands = [linf_norm(G), l1_norm(G), sum_k_largest(G, k, magnitudes=not plain), dist_to_ball(G)]
    funcs = [f for f in cands if is_invariant(f, rng)]
    while len(funcs) < 4:
        funcs.append(orbit_support(G, rng.standard_normal(n)))
    return funcs


def run_thm31(G: FiniteGroup, trials: int, seed=0, functions=None) -> Report:
    """Both directions of the convex subdifferential characterization.

    Each trial draws x (a third of them on walls) and y as a known
    subgradient, a perturbed one, or a group image of one; the sampled
    verdict must match on both sides and agree with the exact membership.
    """
    rng = np.random.default_rng(seed)
    rs = G.root_system
    funcs = functions or subdifferential_test_functions(G, rng)
    rep = Report("thm31", rs.name, details={"functions": [f.label for f in funcs]})
    members = misses = 0
    for f in funcs:
        xs = random_points(rs, trials, rng, wall_fraction=0.35, scale=1.0 + rng.random())
        for t, x in enumerate(xs):
            y = sample_subgradient(f, x, rng)
            kind = rng.integers(3)
            if kind == 1:
                y = y + rng.uniform(0.05, 0.5) * rng.standard_normal(len(y))
            elif kind == 2:
                y = G.elements[rng.integers(G.order)](y)
            expected = bool(f.is_subgradient(x, y))
            members += expected
            rep.trials += 1
            try:
                got = verify_lewis_characterization(f, x, y, seed=int(rng.integers(2**31)))
            except CharacterizationFailure as e:
                rep.fail({"kind": "equivalence", **e.counterexample})
                continue
            if got and not expected:
                # one-sided test: an unrefuted non-member is a sampling miss, not a counterexample
                misses += 1
            elif got != expected:
                rep.fail({"kind": "false_refutation", "function": f.label, "x": _vec(x),
                          "y": _vec(y)})
    rep.details["member_fraction"] = members / max(rep.trials, 1)
    rep.details["refutation_misses"] = misses
    return rep


def default_hull_seeds(G: FiniteGroup, rng):
    """A chamber seed and a second one incomparable to it, so the hull union is not convex."""
    rs = G.root_system
    n = rs.dimension
    c1 = canonical_representative(rs, rng.standard_normal(n)).representative
    c1 = c1 / np.linalg.norm(c1)
    for _ in range(500):
        c2 = canonical_representative(rs, rng.standard_normal(n)).representative
        c2 = rng.uniform(0.8, 1.1) * c2 / np.linalg.norm(c2)
        if not group_majorizes(G, c1, c2).holds and not group_majorizes(G, c2, c1).holds:
            return c1, c2
    raise RuntimeError("no incomparable seed pair found")


def boundary_normals(oracle, count, rng, scale=3.0):
    """Boundary points with a proximal normal, from the direct projection of outside points."""
    n = oracle.dimension
    out = []
    while len(out) < count:
        z = scale * rng.standard_normal(n)
        dist, pts = oracle.direct(z)
        if dist < 1e-3:
            continue
        x = pts[0]
        out.append((x, (z - x) / dist, dist))
    return out


def run_thm52(G: FiniteGroup, points: int, seed=0, seeds=None) -> Report:
    """Proximal-normal characterization on an orbit hull and a two-hull union."""
    rng = np.random.default_rng(seed)
    rs = G.root_system
    c1, c2 = seeds if seeds is not None else default_hull_seeds(G, rng)
    rep = Report("thm52", rs.name, details={"seeds": [_vec(c1), _vec(c2)]})
    for oracle in (orbit_hull_oracle(G, c1), hull_union_oracle(G, [c1, c2])):
        samples = boundary_normals(oracle, points, rng)
        if not check_property_A(oracle, [x for x, _, _ in samples[:20]], seed=seed):
            rep.fail({"kind": "property_A", "set": oracle.label})
            continue
        for x, d, dist in samples:
            alpha = min(0.1, dist)
            queries = [(d, True), (G.elements[rng.integers(G.order)](d), None),
                       (rng.standard_normal(len(d)), None)]
            for y, expected in queries:
                rep.trials += 1
                try:
                    got = verify_proximal_characterization(oracle, x, y, alpha)
                except CharacterizationFailure as e:
                    rep.fail({"kind": "equivalence", **e.counterexample})
                    continue
                if expected is not None and got != expected:
                    rep.fail({"kind": "normal_rejected", "set": oracle.label, "x": _vec(x),
                              "y": _vec(y), "alpha": alpha})
    return rep


def run_thm54(G: FiniteGroup, queries: int, seed=0) -> Report:
    """Proximal subdifferential characterization for the infinity norm and squared norm."""
    rng = np.random.default_rng(seed)
    rs = G.root_system
    funcs = [f for f in (linf_norm(G), squared_norm(G)) if is_invariant(f, rng)]
    rep = Report("thm54", rs.name, details={"functions": [f.label for f in funcs]})
    per = -(-queries // len(funcs))
    for f in funcs:
        xs = random_points(rs, per, rng, wall_fraction=0.4)
        for x in xs:
            y = sample_subgradient(f, x, rng)
            kind = rng.integers(3)
            if kind == 1:
                y = y + rng.uniform(0.2, 0.6) * rng.standard_normal(len(y))
            elif kind == 2:
                y = G.elements[rng.integers(G.order)](y)
            expected = bool(f.is_subgradient(x, y))
            rep.trials += 1
            try:
                got = verify_proximal_subdiff_characterization(f, x, y, seed=int(rng.integers(2**31)))
            except (CharacterizationFailure, PropertyAViolation) as e:
                rep.fail({"kind": type(e).__name__, "message": str(e),
                          **(getattr(e, "counterexample", None) or {})})
                continue
            if got != expected:
                rep.fail({"kind": "grid", "function": f.label, "x": _vec(x), "y": _vec(y),
                          "expected": expected, "got": got})
    rejected = product_rejected(G, seed)
    rep.details["product_rejected"] = rejected
    if rejected is False:
        rep.fail({"kind": "precondition", "message": "x1*x2 accepted by the property-A check"})
    return rep


def product_rejected(G: FiniteGroup, seed=0):
    """Whether the coordinate product is rejected by the epigraph property-A check.

    ``None`` when the product is not invariant under G (nothing to test).
    """
    f = coordinate_product(G)
    if not is_invariant(f, np.random.default_rng(seed)):
        return None
    n = G.root_system.dimension
    x = np.arange(1.0, n + 1)
    try:
        verify_proximal_subdiff_characterization(f, x, np.zeros(n), seed=seed)
    except PropertyAViolation:
        return True
    return False


def run_schur(G: FiniteGroup, trials: int, seed=0) -> Report:
    """Schur convexity of ``|x|/(1+|x|)`` and its failure for ``-|x|^2``."""
    rs = G.root_system
    rep = Report("schur", rs.name)
    good = check_schur_convex(norm_ratio(G), G, trials, seed)
    bad = check_schur_convex(neg_squared_norm(G), G, trials, seed)
    rep.trials = 2 * trials
    rep.details.update({"norm_ratio": good, "neg_sq_norm": bad})
    if not good:
        rep.fail({"kind": "schur", "function": "norm_ratio", "expected": True})
    if bad:
        rep.fail({"kind": "schur", "function": "neg_sq_norm", "expected": False})
    return rep


def run_property_A(G: FiniteGroup, samples: int, seed=0) -> Report:
    """Property A holds for convex sets and hull unions and fails for finite orbits."""
    rng = np.random.default_rng(seed)
    rs = G.root_system
    rep = Report("propA", rs.name)
    c1, c2 = default_hull_seeds(G, rng)
    cases = [
        (ball_oracle(rs, 1.0, G), True),
        (orbit_hull_oracle(G, c1), True),
        (hull_union_oracle(G, [c1, c2]), True),
        (finite_orbit_oracle(G, [rng.standard_normal(rs.dimension)]), False),
    ]
    for oracle, expected in cases:
        if oracle.direct is not None:
            pts = [x for x, _, _ in boundary_normals(oracle, samples, rng)]
        else:
            z = rng.standard_normal((samples, rs.dimension))
            pts = z / np.linalg.norm(z, axis=1, keepdims=True)
        got = check_property_A(oracle, pts, seed=seed)
        rep.trials += 1
        rep.details[oracle.label] = got
        if got != expected:
            rep.fail({"kind": "property_A", "set": oracle.label, "expected": expected})
    return rep


RUNNERS = {
    "thm31": run_thm31,
    "thm52": run_thm52,
    "thm54": run_thm54,
    "schur": run_schur,
    "propA": run_property_A,
}
