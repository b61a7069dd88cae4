"""Exception hierarchy shared by the library and the command-line scripts.

User errors (bad data, bad config, bad scheme parameters) map to CLI exit code 1;
computational failures map to exit code 2.
"""

from __future__ import annotations

from typing import List, Optional


class PSWError(Exception):
    """Base class for every error raised by this package."""

    kind = "computation"

    def __init__(self, message: str, details: Optional[List[str]] = None):
        super().__init__(message)
        self.details: List[str] = list(details or [])


class UserInputError(PSWError):
    kind = "user"


class ComputationError(PSWError):
    kind = "computation"
