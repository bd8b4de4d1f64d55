"""Exceptions raised by the simulation library and mapped to exit codes by the CLI"""

from typing import Any, Dict, Optional


class ReservoirError(Exception):
    """Base class for every error raised by this package"""


class ConfigurationError(ReservoirError, ValueError):
    """An input parameter or configuration key is missing or invalid"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


class InvalidStateError(ReservoirError, ValueError):
    """A state vector or density matrix violates its invariants"""


class NumericalQualityError(ReservoirError, RuntimeError):
    """A numerical quality gate (norm drift, cross-method deviation) failed"""

    def __init__(
        self,
        message: str,
        diagnostics: Optional[Dict[str, Any]] = None,
        manifest: Optional[Any] = None,
    ):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        self.manifest = manifest
