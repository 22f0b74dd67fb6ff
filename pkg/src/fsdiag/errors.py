"""Exception types shared across the package.

Every loader/validation failure carries a stable ``code`` string so the
service layer can map it onto HTTP error payloads without parsing messages.
"""

from __future__ import annotations


class FsdiagError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ManifestError(FsdiagError):
    """Manifest parsing or validation failure."""

    code = "manifest_error"


class FeatureFileError(FsdiagError):
    """Binary feature file is malformed."""

    code = "feature_file_error"


class SessionError(FsdiagError):
    """Invalid session state or edit command."""

    code = "session_error"


class SolverError(FsdiagError):
    """Invalid selection problem or solver misuse."""

    code = "solver_error"
