"""Exception types shared across the package.

Everything numerical that can fail raises a subclass of PainleveError, so
callers (and the CLI) can distinguish "the computation did not converge"
from ordinary misuse of the API.
"""


class PainleveError(Exception):
    """Base class for numerical failures in this package."""


class NonConvergence(PainleveError):
    """An iterative scheme (quadrature refinement, Newton, solver) gave up."""


class SingularJacobian(NonConvergence):
    """Newton's method hit a numerically singular Jacobian."""

    def __init__(self, x, detail=""):
        self.x = x
        super().__init__(f"singular Jacobian at x={x!r} {detail}".rstrip())


class StepUnderflow(PainleveError):
    """Adaptive ODE stepping collapsed, usually on approach to a pole."""

    def __init__(self, location, message="step size underflow"):
        self.location = location
        super().__init__(f"{message} near z={location!r}")


class NewtonDivergence(NonConvergence):
    """Newton refinement left its basin (e.g. a sample too near a fold)."""


class InvariantViolation(PainleveError):
    """A named internal identity failed its tolerance."""

    def __init__(self, name, detail=""):
        self.name = name
        super().__init__(f"invariant violated: {name} {detail}".rstrip())


class DegenerateInput(PainleveError):
    """Input data violates a non-degeneracy precondition."""


class DegenerateCurve(DegenerateInput):
    """Branch points collide (or nearly so); the elliptic curve degenerates."""


class OnCut(PainleveError):
    """Evaluation point lies on a branch cut."""


class PoleProximity(PainleveError):
    """Evaluation point is too close to a lattice pole."""


class ThetaZeroProximity(PainleveError):
    """Evaluation point is too close to a theta zero."""


class BranchPointProximity(PainleveError):
    """Path or point passes too close to a branch point."""


class NonPositiveImagTau(PainleveError):
    """Period ratio landed outside the upper half plane."""


class ZeroStokesEntry(DegenerateInput):
    """Monodromy data has s1*s4 == 0, outside the representable set."""


class OutsideDomain(PainleveError):
    """Point lies outside the strip domain required by the operation."""


class PathBlocked(PainleveError):
    """No admissible integration path could be routed around excluded discs."""
