from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from reflekt.groups import enumerate_group, standard_root_system

settings.register_profile(
    "reflekt", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("reflekt")


@lru_cache(maxsize=None)
def group(spec):
    family, _, param = spec.partition(":")
    return enumerate_group(standard_root_system(family, int(param)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def orbit_scan_rep(G, x, tol=1e-10):
    """All orbit images lying in the closed chamber (brute force)."""
    from reflekt.groups import unique_rows

    imgs = G.act(x)
    U = G.root_system.positive_roots
    inside = imgs[np.all(imgs @ U.T >= -tol, axis=1)]
    return inside[unique_rows(inside)]
