"""Exception types shared across the package."""


class BoxlensError(Exception):
    """Base class for all package errors."""


class ConfigError(BoxlensError):
    """A parameter is outside its valid range or otherwise unusable."""


class RangeError(ConfigError):
    """A numeric argument falls outside the documented interval."""


class DegenerateInstance(BoxlensError):
    """The instance has no active interpretable features, nothing to perturb."""


class UndefinedDistance(BoxlensError):
    """Cosine distance is undefined when both vectors are zero."""


class ParseError(BoxlensError):
    """A dataset line could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"{message} (line {line_number})")
        self.line_number = line_number


class SchemaError(ParseError):
    """A dataset line parsed but violates the expected schema."""


class StratificationError(BoxlensError):
    """A class has no documents, so a stratified split is impossible."""


class CollisionError(BoxlensError):
    """A synthetic token already occurs in the natural vocabulary."""


class DegenerateLabels(BoxlensError):
    """Training data contains a single class."""


class DegenerateFeatures(BoxlensError):
    """All features were removed; the model would have no inputs."""


class ConvergenceError(BoxlensError):
    """An iterative fit failed to reach its stopping condition."""


class InsufficientSamples(BoxlensError):
    """Too few surrogate samples for the requested explanation size."""


class ShapeError(BoxlensError):
    """Matrix dimensions do not agree."""


class SizeError(BoxlensError):
    """Problem too large for an enumeration-based routine."""


class PairSearchTimeout(BoxlensError):
    """Could not find a qualifying classifier pair within the attempt budget."""
