"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument is outside its documented domain."""


class SingularDensityError(RuntimeError):
    """The density vanished at an interior support point where it must not."""

    def __init__(self, point: float):
        self.point = float(point)
        super().__init__(f"density is zero at interior support point v={self.point!r}")


class NormalizationError(RuntimeError):
    """The monopoly revenue of the highest CDF is zero or unbounded."""


class IntegrationError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_tol: float):
        self.achieved_tol = float(achieved_tol)
        super().__init__(f"{message} (achieved tolerance {achieved_tol:.3e})")


class ContractViolationError(RuntimeError):
    """A user-supplied generator broke its declared contract (e.g. value above cap)."""


class PreconditionError(RuntimeError):
    """A verifier was invoked on an instance that violates its stated preconditions."""


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds the configured resource guard."""
