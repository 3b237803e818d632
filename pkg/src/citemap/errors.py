"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class CitemapError(Exception):
    """Base class for all citemap errors."""


class MissingInputError(CitemapError):
    """A required input file or directory does not exist."""


class SchemaError(CitemapError):
    """An input file or record violates its declared format or contract."""


class InternalError(CitemapError):
    """An internal invariant was breached; indicates a bug, not bad input."""
