"""Exception types raised across the package."""


class ScoreLandauError(Exception):
    """Base class for all package errors."""


class DegeneratePair(ScoreLandauError):
    """Kernel evaluated at a pair separation below the singularity floor."""


class ModelDiverged(ScoreLandauError):
    """Score model produced (or contains) non-finite values."""


class GradientDiverged(ScoreLandauError):
    """Optimizer received a non-finite gradient."""


class DegenerateReference(ScoreLandauError):
    """A relative-error denominator is zero."""


class InitialFitNotConverged(ScoreLandauError, UserWarning):
    """Initial score fit hit the iteration cap above tolerance.

    Warning-level: depending on configuration this is raised or emitted
    with ``warnings.warn`` and the run proceeds.
    """


class FixedPointNotConverged(ScoreLandauError):
    """Midpoint fixed-point iteration did not reach tolerance."""


class DensityOverflow(ScoreLandauError):
    """exp() over/underflow while updating tracked densities."""

    def __init__(self, index, value):
        self.index = int(index)
        self.value = float(value)
        super().__init__(
            f"density update overflow at particle {index} (log-argument {value:.3g})"
        )


class DensityInvalid(ScoreLandauError):
    """Nonpositive tracked density encountered."""


class InitialDensityUnavailable(ScoreLandauError):
    """Density tracking requested without closed-form initial densities."""


class ScoreSingular(ScoreLandauError):
    """Analytic score requested where the density vanishes."""


class InvalidTime(ScoreLandauError):
    """Closed-form solution evaluated outside its validity interval."""


class EnvelopeTooLoose(ScoreLandauError):
    """Rejection sampler acceptance rate fell below the safety threshold."""


class InsufficientData(ScoreLandauError):
    """Convergence statistics need >= 3 values spanning >= one decade."""


class ConfigError(ScoreLandauError):
    """Experiment configuration failed validation; message names the field."""
