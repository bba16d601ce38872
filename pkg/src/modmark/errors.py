"""Exception types shared across the package."""


class ModmarkError(Exception):
    """Base class for package errors."""


class ShapeMismatch(ModmarkError):
    """Operands live on different algebras or have inconsistent shapes."""


class NonHermitian(ModmarkError):
    """Input failed the Hermitian symmetry check."""


class NotPositiveDefinite(ModmarkError):
    """An eigenvalue sits at or below the singular floor."""


class NoConvergence(ModmarkError):
    """Iteration budget exhausted.  `payload` may carry the best iterate."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class PowerRangeExceeded(ModmarkError):
    """|Re z| beyond the configured range, tolerance guarantee void."""


class BadQuadrature(ModmarkError):
    """Quadrature grid or samples unusable."""


class EmptyKraus(ModmarkError):
    """A channel needs at least one Kraus operator."""


class NotStatePreserving(ModmarkError):
    """Channel does not carry the source state to the target state."""


class NotMarkov(ModmarkError):
    """Channel failed the unital / completely positive / state checks."""


class BadSchurMatrix(ModmarkError):
    """Entrywise multiplier must be Hermitian psd with unit diagonal."""


class ProjectionsDontCommuteWithDensity(ModmarkError):
    """Conditional expectation needs projections commuting with the density."""


class UnitaryDoesntCommuteWithDensity(ModmarkError):
    """Inner automorphism needs a unitary commuting with the density."""


class PreconditionFailed(ModmarkError):
    """Operation invoked on an input outside its contract."""


class BadWeights(ModmarkError):
    """Convex weights must be nonnegative and sum to one."""


class MalformedInstance(ModmarkError):
    """Instance file does not parse against the JSON schema."""
