"""Exception types shared across the package."""

from __future__ import annotations

from typing import Any


class PrivMultError(Exception):
    """Base class for all package errors."""


class ParameterError(PrivMultError):
    """An argument violates a documented precondition."""


class RegimeError(PrivMultError):
    """An operation was invoked for an unsupported (M, N, T) regime."""


class NumericError(PrivMultError):
    """A numerical routine failed to converge or produced an inconsistent result."""


class ConfigError(PrivMultError):
    """A configuration document violates an invariant.

    Carries a machine-readable payload naming the violated invariant, so CLI
    consumers can react without parsing prose.
    """

    def __init__(self, message: str, *, invariant: str, key: str | None = None,
                 value: Any = None):
        super().__init__(message)
        self.invariant = invariant
        self.key = key
        self.value = value

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": "config",
            "invariant": self.invariant,
            "key": self.key,
            "value": self.value,
            "message": str(self),
        }
