from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import BBox


@dataclass(frozen=True)
class ScoredProposal:
    """A candidate box with its ranking scores.

    ``objectness`` is the proposal source's own score (Selective Search merge
    rank or RPN objectness). ``classifier_score`` is filled in when a
    classifier response was computed for the box upstream.
    """

    box: BBox
    objectness: float
    classifier_score: float | None = None
    source: str = "ss"

    def __post_init__(self):
        if not math.isfinite(self.objectness):
            raise ValueError(f"objectness must be finite, got {self.objectness}")
