"""Gripper benchmark analysis: YCB, NIST, transfer-time, energy and ideal-payload metrics."""

__version__ = "0.1.0"

from .ingest import load_session, write_session  # noqa: E402
from .model import Session, validate_session  # noqa: E402
from .report import AnalysisConfig, Report, analyze_session  # noqa: E402

__all__ = [
    "AnalysisConfig",
    "Report",
    "Session",
    "analyze_session",
    "load_session",
    "validate_session",
    "write_session",
]
