"""Finite reflection groups, chamber reduction and symmetric projections."""

from .chamber import (
    ChamberDecomposition,
    MajorizationVerdict,
    canonical_representative,
    group_majorizes,
    in_chamber,
)
from .groups import (
    FiniteGroup,
    GroupElement,
    RootSystem,
    Stabilizer,
    enumerate_group,
    householder,
    orbit,
    parse_group_spec,
    stabilizer,
    standard_root_system,
)
from .projection import (
    InvariantSetOracle,
    ProjectionSet,
    project_invariant,
    sparse_project,
)
from .recovery import SensingProblem, generate_problem, iht_solve, recovery_sweep

__version__ = "0.1.0"
