"""Exception hierarchy shared across the pipeline.

Two families matter to the CLI: ``ConfigError`` (and subclasses) signal a
usage or configuration problem, everything else under ``TrollmapError``
signals a data-level validation failure.
"""


class TrollmapError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(TrollmapError):
    """Input file violates the expected schema (fatal for the whole file)."""


class EmptyInputError(TrollmapError):
    """An operation received an empty collection it cannot work with."""


class LabelError(TrollmapError):
    """Malformed or inconsistent label data."""


class FeatureError(TrollmapError):
    """Feature matrix violates a precondition (negative value, zero row, ...)."""


class TrainingError(TrollmapError):
    """A classifier cannot be trained or queried with the given inputs."""


class EvaluationError(TrollmapError):
    """Evaluation inputs are unusable (length mismatch, empty intersection, ...)."""


class ConfigError(TrollmapError):
    """Bad run configuration or CLI usage."""


class SpanConfigError(ConfigError):
    """Time range cannot be tiled into whole six-month spans."""


class DependencyError(ConfigError):
    """A pipeline stage was invoked before the stage it depends on."""
