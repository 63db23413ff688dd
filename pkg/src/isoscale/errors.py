"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`IsoscaleError`
so that callers (notably the CLI) can map error families to exit codes.
"""


class IsoscaleError(Exception):
    """Base class for all package errors."""


class DataError(IsoscaleError):
    """Input data is malformed or violates an invariant."""


class ParseError(DataError):
    """A cell or field could not be parsed."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(DataError):
    """Header or identifier problems, e.g. duplicate item ids."""


class DimensionError(DataError):
    """Too few respondents or items."""


class LabelReferenceError(DataError):
    """A label refers to an item that is not in the matrix."""


class DomainError(DataError, ValueError):
    """Input outside the domain of an operation (empty, non-finite, non-binary)."""


class ConfigurationError(IsoscaleError, ValueError):
    """Invalid combination of options."""


class AggregationError(IsoscaleError):
    """An item has no usable comparisons to aggregate."""


class EvaluationError(IsoscaleError):
    """An evaluation could not be carried out."""


class DegenerateEvaluationError(EvaluationError):
    """Only one label class is present among scored items."""


class SamplingError(IsoscaleError):
    """The resampler ran out of its rejection budget."""


class RegistryError(IsoscaleError, KeyError):
    """Unknown measure or method name."""

    def __init__(self, name, known=(), kind="name"):
        import difflib

        self.name = name
        self.suggestions = difflib.get_close_matches(str(name).lower(), list(known), n=3, cutoff=0.6)
        msg = f"unknown {kind} {name!r}"
        if self.suggestions:
            msg += f"; did you mean {', '.join(self.suggestions)}?"
        super().__init__(msg)

    def __str__(self):
        return self.args[0]
