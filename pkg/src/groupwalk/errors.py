"""Error taxonomy shared across the package."""

from __future__ import annotations


class GroupwalkError(Exception):
    pass


class SpecMismatchError(GroupwalkError):
    """Rejected input: element or set does not belong to the expected group."""


class BudgetError(GroupwalkError):
    """A resource cap was exceeded.

    `stage` is set when the overrun happened inside a construction stage.
    """

    def __init__(self, message: str, stage: int | None = None):
        super().__init__(message if stage is None else f"stage {stage}: {message}")
        self.stage = stage
