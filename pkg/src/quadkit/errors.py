"""Exception hierarchy shared by the library, the service and the CLI.

Every error carries a short machine-readable ``code`` so the HTTP layer can
map library failures onto structured error payloads without string matching.
"""

from __future__ import annotations


class QuadkitError(Exception):
    """Base class for all library errors."""

    code = "Error"


class NonConvexError(QuadkitError):
    """Corner set is degenerate or does not form a convex quadrilateral."""

    code = "NonConvex"


class NotSimpleError(QuadkitError):
    """Corner sequence self-intersects (bowtie)."""

    code = "NotSimple"


class DegenerateError(QuadkitError):
    """A derived polygon collapsed below the area/cross-product floor."""

    code = "Degenerate"


class InvalidKernelError(QuadkitError):
    """Kernel or grid size outside the supported range."""

    code = "InvalidKernel"


class ShapeMismatchError(QuadkitError):
    """Array arguments have inconsistent shapes."""

    code = "ShapeMismatch"


class ParseError(QuadkitError):
    """Malformed annotation or detection file.

    ``line`` is the 1-based line number when known.
    """

    code = "ParseError"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingFileError(QuadkitError):
    """Dataset directories have unmatched file stems."""

    code = "MissingFile"

    def __init__(self, message: str, stems: list[str] | None = None):
        self.stems = stems or []
        super().__init__(message)


class ConfigError(QuadkitError):
    """Bad configuration file: unknown key, bad value, or unreadable syntax."""

    code = "ConfigError"
