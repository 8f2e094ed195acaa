from __future__ import annotations

from typing import Iterable

__all__ = [
    "ShiftbenchError",
    "DomainError",
    "ConfigError",
    "ResourceError",
    "NumericError",
    "FitError",
    "CertificateError",
]


class ShiftbenchError(Exception):
    """Root of the package's errors. ``exit_code`` is what the CLI returns."""

    exit_code = 1


class DomainError(ShiftbenchError, ValueError):
    exit_code = 2


class ConfigError(ShiftbenchError, ValueError):
    exit_code = 2


class ResourceError(ShiftbenchError, RuntimeError):
    exit_code = 3


class NumericError(ShiftbenchError, ArithmeticError):
    exit_code = 1


class FitError(ShiftbenchError, ValueError):
    exit_code = 1


class CertificateError(ShiftbenchError, AssertionError):
    exit_code = 1

    def __init__(self, certificate: str, violated: Iterable[str]):
        self.certificate = certificate
        self.violated = tuple(violated)
        super().__init__(f"{certificate}: violated {', '.join(self.violated)}")
