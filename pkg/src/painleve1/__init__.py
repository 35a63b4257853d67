"""Elliptic asymptotics for the first Painleve equation y'' = 6 y^2 + x.

The package solves the modulus equations fixing the elliptic curve attached
to a ray direction phi, evaluates the associated theta/Weierstrass kernel,
assembles the degree-one correction to the elliptic leading term, and
cross-checks everything against direct integration of the equation along
complex paths.
"""

__version__ = "0.1.0"

from .errors import (
    BranchPointProximity,
    InvariantViolation,
    NewtonDivergence,
    DegenerateCurve,
    DegenerateInput,
    NonConvergence,
    NonPositiveImagTau,
    OnCut,
    OutsideDomain,
    PainleveError,
    PathBlocked,
    PoleProximity,
    SingularJacobian,
    StepUnderflow,
    ThetaZeroProximity,
    ZeroStokesEntry,
)

__all__ = [
    "__version__",
    "PainleveError",
    "NonConvergence",
    "NewtonDivergence",
    "InvariantViolation",
    "SingularJacobian",
    "StepUnderflow",
    "DegenerateInput",
    "DegenerateCurve",
    "OnCut",
    "PoleProximity",
    "ThetaZeroProximity",
    "BranchPointProximity",
    "NonPositiveImagTau",
    "ZeroStokesEntry",
    "OutsideDomain",
    "PathBlocked",
]
