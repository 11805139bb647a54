"""Exception types shared across the toolkit."""


class RisddError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(RisddError):
    """Operands have incompatible dimensions."""


class GeometryError(RisddError):
    """Invalid geometry (e.g. zero distance between nodes)."""


class RankDeficient(RisddError):
    """Least-squares system is numerically rank deficient.

    Carries the numerical rank found and the required rank.
    """

    def __init__(self, rank: int, required: int):
        self.rank = rank
        self.required = required
        super().__init__(f"rank {rank} < required {required}")


class SingularPowerSplit(RisddError):
    """A reflection/absorption amplitude makes an estimator singular
    (rho=0 on the BS path or rho=1 on the RIS sensing path)."""


class PlanError(RisddError):
    """Protocol plan is infeasible for the given dimensions."""


class NumericsError(RisddError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float = float("nan")):
        self.achieved = achieved
        super().__init__(message)


class SymmetryViolation(RisddError):
    """Probability vector lacks the half-period symmetry the closed
    forms presuppose."""


class ApproximationBreakdown(RisddError):
    """A Gaussian-moment approximation produced an invalid value
    (e.g. negative variance) at extreme parameters."""

    def __init__(self, message: str, value: float):
        self.value = value
        super().__init__(f"{message}: {value}")


class NoCrossover(RisddError):
    """The two spectral-efficiency curves do not cross on the range."""


class ExperimentError(RisddError):
    """Too many trials of an experiment failed."""


class ConfigError(RisddError):
    """Bad scenario/experiment configuration."""
