"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class VulnExploreError(Exception):
    """Base class; ``module`` names the stage that raised it."""

    module = "vulnexplore"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
