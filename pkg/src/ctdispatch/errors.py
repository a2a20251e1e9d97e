"""Exception hierarchy shared across the package."""


class CtDispatchError(Exception):
    """Base class for all package errors."""


class DomainError(CtDispatchError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class InfeasibleUncertaintySet(CtDispatchError, ValueError):
    """Step bounds and ramp limits admit no continuous demand trajectory
    (or one the closed-form envelope construction cannot represent)."""


class ModelInfeasible(CtDispatchError):
    """The robust scheduling LP has no feasible decision rule."""


class SolverFailure(CtDispatchError, RuntimeError):
    """The LP solver broke down numerically or hit an iteration cap."""


class IterationLimit(CtDispatchError, RuntimeError):
    """The cutting-plane loop did not converge within its iteration budget."""
