"""Exception hierarchy shared by every cegb module."""

from __future__ import annotations


class CegbError(Exception):
    """Base class for all benchmark-toolkit errors."""


class EmptySample(CegbError, ValueError):
    pass


class NonMonotonicTrace(CegbError, ValueError):
    pass


class WindowOutOfRange(CegbError, ValueError):
    pass


class TraceTooShort(CegbError, ValueError):
    pass


class TraceSpanMismatch(CegbError, ValueError):
    pass


class PhaseInferenceFailed(CegbError, ValueError):
    pass


class InvalidPhaseMarks(CegbError, ValueError):
    pass


class InconsistentOverride(CegbError, ValueError):
    pass


class UnbalancedAttempts(CegbError, ValueError):
    pass


class NegativeDuration(CegbError, ValueError):
    pass


class ZeroNormalForce(CegbError, ValueError):
    pass


class MissingFingerLength(CegbError, ValueError):
    pass


class ZeroMass(CegbError, ValueError):
    pass


class MissingProfile(CegbError, ValueError):
    pass


class UnknownTrace(CegbError, KeyError):
    pass


class SchemaMismatch(CegbError, ValueError):
    pass


# -- ingest ---------------------------------------------------------------


class IngestError(CegbError):
    """Raised when a session bundle cannot be loaded."""


class MissingManifest(IngestError, FileNotFoundError):
    pass


class SchemaVersionUnsupported(IngestError, ValueError):
    pass


class ParseError(IngestError, ValueError):
    def __init__(self, file: str, line: int, column: str | None, reason: str):
        self.file = file
        self.line = line
        self.column = column
        self.reason = reason
        where = f"{file}:{line}"
        if column is not None:
            where += f" [{column}]"
        super().__init__(f"{where}: {reason}")


class UnitError(IngestError, ValueError):
    def __init__(self, file: str, expected: str, found: str):
        self.file = file
        self.expected = expected
        self.found = found
        super().__init__(f"{file}: expected header {expected!r}, found {found!r}")
