"""Scale guards for the exponential enumerations."""

from __future__ import annotations

import os
from dataclasses import dataclass

__all__ = ["ScaleGuard", "ScaleGuardError", "DEFAULT_GUARD", "OVERRIDE_ENV"]

OVERRIDE_ENV = "TROPGALOIS_NO_SCALE_GUARD"


class ScaleGuardError(RuntimeError):
    """An input exceeds the configured desk-scale limits."""


@dataclass(frozen=True)
class ScaleGuard:
    max_edges: int = 12
    max_group_order: int = 2000
    max_degree: int = 12
    max_cells: int = 18
    max_spanning_trees: int = 400

    def check(self, what: str, value: int, limit: int) -> None:
        if value > limit and not os.environ.get(OVERRIDE_ENV):
            raise ScaleGuardError(f"{what} = {value} exceeds the scale guard ({limit}); set {OVERRIDE_ENV}=1 to override")


DEFAULT_GUARD = ScaleGuard()
