"""Region proposals: Selective Search and ingestion of external proposal files."""

from .ingest import ingest_proposals
from .segmentation import Segmentation, felzenszwalb_segment
from .selective_search import (
    Region,
    hierarchical_group,
    merge_history,
    selective_search,
    similarity,
)
from .types import ScoredProposal

__all__ = [
    "Region",
    "ScoredProposal",
    "Segmentation",
    "felzenszwalb_segment",
    "hierarchical_group",
    "ingest_proposals",
    "merge_history",
    "selective_search",
    "similarity",
]
