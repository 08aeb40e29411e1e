"""Exception types raised by the variance-form test."""


class VarformError(ValueError):
    """Raised when inputs, fits or test preconditions are invalid."""


class ContractError(VarformError):
    """A caller broke a precondition (shape, range, or grid mismatch)."""


class InvalidDensityError(VarformError):
    """The design density is non-positive or does not integrate to one."""


class InvalidSequenceError(VarformError):
    """Difference-sequence coefficients violate a defining constraint."""


class InsufficientDataError(VarformError):
    """Too few observations for the requested operation."""


class BandwidthTooSmallError(VarformError):
    """A kernel window is empty or degenerate at some design point."""

    def __init__(self, index: int, bandwidth: float, detail: str = "empty kernel window"):
        self.index = index
        self.bandwidth = bandwidth
        super().__init__(f"{detail} at design point i={index + 1} for bandwidth h={bandwidth:g}")


class NoValidBandwidthError(VarformError):
    """Every cross-validation candidate bandwidth failed."""


class DegenerateVarianceError(VarformError):
    """Residuals carry no variance information."""


class CollinearBasisError(VarformError):
    """The Gram matrix of the variance basis is singular or ill-conditioned."""


class FitFailureError(VarformError):
    """Gauss-Newton did not converge for a nonlinear variance family."""

    def __init__(self, message: str, trace: list[float]):
        self.trace = trace
        super().__init__(f"{message} (objective trace tail: {[round(v, 12) for v in trace[-5:]]})")


class SingularFieldError(VarformError):
    """H_n is singular or ill-conditioned at a design point left of t0."""

    def __init__(self, point: float, detail: str):
        self.point = point
        super().__init__(f"H_n singular at t_j={point:.6g}: {detail}; lower t0 to keep more points to the right")


class InvalidScenarioError(VarformError):
    """A simulation scenario has a negative variance function."""


class HarnessError(VarformError):
    """Too many Monte Carlo replications failed."""


class UsageError(VarformError):
    """Command-line input (flags, config file, CSV) is malformed."""
