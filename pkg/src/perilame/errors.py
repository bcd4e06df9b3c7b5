"""Exception and warning types shared across the package."""


class SingularArgumentError(ValueError):
    """Kernel evaluated at a point where it is singular (origin or a lattice point)."""


class CellError(ValueError):
    """Invalid periodicity cell (non-positive edge length)."""


class CurveError(ValueError):
    """Invalid boundary curve: bad node count, vanishing speed, or containment failure."""


class PlanError(RuntimeError):
    """Requested lattice-sum tolerance unattainable within the hard cutoff ceilings."""


class AssemblyError(RuntimeError):
    """Operator assembly failed an internal kernel-split consistency check."""


class AdmissibilityError(ValueError):
    """Robin coefficient data violates one of the solvability conditions.

    The ``condition`` attribute names the failed check.
    """

    def __init__(self, condition, message):
        super().__init__(message)
        self.condition = condition


class ConfigError(ValueError):
    """Run configuration is malformed; the message names the offending field."""


class SolveError(RuntimeError):
    """Discrete system numerically singular or otherwise unsolvable."""


class DomainError(ValueError):
    """Evaluation point lies outside the domain of the requested field."""


class ConvergenceError(RuntimeError):
    """Nonlinear iteration exceeded its budget without meeting the tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class DegenerateProblemError(RuntimeError):
    """Nonlinear system is rank deficient (e.g. nothing constrains the additive constant)."""

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class OracleError(RuntimeError):
    """Brute-force oracle failed its own extrapolation consistency certificate."""


class NearBoundaryWarning(UserWarning):
    """Off-surface evaluation requested closer than three node spacings to the boundary."""
