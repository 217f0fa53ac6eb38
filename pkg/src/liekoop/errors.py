"""Exception types raised across the package."""


class LieKoopError(Exception):
    """Base class for all library errors."""


class OutOfInjectivityDomain(LieKoopError):
    """Group element lies outside the ball on which ``exp`` is invertible."""


class NotTangent(LieKoopError):
    """A matrix failed to project onto the Lie algebra within tolerance."""

    def __init__(self, message, residual=None, index=None):
        super().__init__(message)
        self.residual = residual
        self.index = index


class NotInGroup(LieKoopError):
    """A matrix violates the defining constraints of its group."""


class NonFiniteState(LieKoopError, ValueError):
    """NaN or inf appeared in an input, a trajectory or a difference quotient."""


class MetricError(LieKoopError):
    """Gram matrix is not symmetric positive definite."""


class NotRegular(LieKoopError):
    """The differential has rank below the group dimension."""

    def __init__(self, message, rank=None, singular_values=None):
        super().__init__(message)
        self.rank = rank
        self.singular_values = singular_values


class DirectionMismatch(LieKoopError):
    """Target frequency does not lie on the detected line in the algebra."""


class DivisionNearZero(LieKoopError):
    """A rescaling factor would require dividing by a near-zero quantity."""


class ZeroValue(LieKoopError):
    """A complex-valued observable vanishes at a sample."""


class LiftDomainEmpty(LieKoopError):
    """No admissible radius was found for a local lift."""


class OutsideLiftDomain(LieKoopError):
    """Evaluation point lies outside the domain of a local lift."""


class ConfigError(LieKoopError):
    """Configuration could not be parsed or failed validation."""

    def __init__(self, message, field=None, line=None):
        where = ""
        if field is not None:
            where = f"[{field}] "
        if line is not None:
            where += f"(line {line}) "
        super().__init__(where + message)
        self.message = message
        self.field = field
        self.line = line
