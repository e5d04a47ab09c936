"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: I/O failures exit 1,
format/schema/shape problems exit 2, selftest failures exit 3.
"""


class XlpoolError(Exception):
    """Base class for all package errors."""


class FormatError(XlpoolError):
    """A file container is malformed (bad magic, truncated, unparsable header)."""


class SchemaError(XlpoolError):
    """Well-formed container with the wrong contents (dtype, rank, metadata)."""


class ShapeError(SchemaError):
    """Operands have incompatible shapes."""


class PairingError(ShapeError):
    """Two layers do not share the same spatial unit grid."""


class ArgumentError(XlpoolError, ValueError):
    """A parameter is outside its documented range."""


class FitError(XlpoolError):
    """Not enough data to fit a model."""


class BuildError(XlpoolError):
    """Index construction failed (duplicate id, inconsistent entry shapes)."""
