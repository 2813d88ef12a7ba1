#!/usr/bin/env python3
"""
Error types for the BEV topology kit

Every failure the library raises derives from KitError and carries a
`kind` code, so callers can branch on the code instead of parsing text.

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""

from enum import Enum
from typing import Optional


class ErrorKind(Enum):
    """Error kind codes."""
    CONTRACT_VIOLATION = "contract_violation"
    DEGENERATE_FIT = "degenerate_fit"
    EMPTY_EXTRACTION = "empty_extraction"
    TOO_FEW_POINTS = "too_few_points"
    INVALID_CONFIGURATION = "invalid_configuration"
    MALFORMED_JSON = "malformed_json"
    SCHEMA_VIOLATION = "schema_violation"
    DANGLING_ID = "dangling_id"
    BAD_MAGIC = "bad_magic"
    BAD_VERSION = "bad_version"
    BAD_DTYPE = "bad_dtype"
    TRUNCATED = "truncated"
    TRAILING_DATA = "trailing_data"


class KitError(ValueError):
    """Base class of all kit errors."""

    default_kind = ErrorKind.CONTRACT_VIOLATION

    def __init__(self, message: str, kind: Optional[ErrorKind] = None):
        super().__init__(message)
        self.kind = kind or self.default_kind

    def __repr__(self):
        return f"{type(self).__name__}({self.kind.value}: {self})"


class ContractViolation(KitError):
    """A precondition of an operation does not hold."""


class DegenerateFitError(KitError):
    """A least-squares fit has no spread along its dominant axis."""

    default_kind = ErrorKind.DEGENERATE_FIT


class DecodeFailure(KitError):
    """A flow-aware mask could not be turned into a centerline."""

    default_kind = ErrorKind.EMPTY_EXTRACTION


class ConfigurationError(KitError):
    """Invalid configuration value."""

    default_kind = ErrorKind.INVALID_CONFIGURATION


class SceneFormatError(KitError):
    """Scene file could not be read or failed validation.

    `pointer` is the JSON pointer of the first offending value.
    """

    default_kind = ErrorKind.SCHEMA_VIOLATION

    def __init__(self, message: str, kind: Optional[ErrorKind] = None,
                 pointer: str = "", frame_id: str = ""):
        where = f"{frame_id}:{pointer}" if frame_id else pointer
        super().__init__(f"{where}: {message}" if where else message, kind)
        self.pointer = pointer
        self.frame_id = frame_id


class TensorFormatError(KitError):
    """BEVT tensor file is malformed."""

    default_kind = ErrorKind.TRUNCATED


def require(condition: bool, message: str):
    """Raise ContractViolation unless condition holds."""
    if not condition:
        raise ContractViolation(message)
