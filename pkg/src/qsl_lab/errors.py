"""Exception types shared across the toolkit."""


class InvalidDimensionError(ValueError):
    """Hilbert-space dimension is not usable (e.g. N < 2)."""


class InvalidStateError(ValueError):
    """A matrix fails the density-matrix invariants (Hermitian, unit trace, PSD)."""


class DimensionMismatchError(ValueError):
    """Two operands live in different Hilbert-space dimensions."""


class MaximallyMixedError(ValueError):
    """Bloch-angle quantities are undefined at zero Bloch radius."""


class NonHermitianError(ValueError):
    """A Hamiltonian (possibly evaluated at some time t) is not Hermitian."""


class StepSizeTooLargeError(RuntimeError):
    """Integrator detected trace drift beyond tolerance; refine the grid."""


class UndefinedBoundError(ValueError):
    """Both branches of the Bures-angle bound are degenerate."""


class InvalidProbabilityError(ValueError):
    """A probability or probability vector is outside its physical range."""


class ConfigError(ValueError):
    """Experiment configuration file failed to parse or validate."""
