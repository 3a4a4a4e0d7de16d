"""Loading externally produced proposals (RPN, CLIP-derived or cached SS)."""

from __future__ import annotations

from ..formats import RowIssue, group_by_image, read_box_file
from .types import ScoredProposal


def ingest_proposals(
    path,
    image_sizes: dict[str, tuple[int, int]] | None = None,
    strict: bool = True,
) -> tuple[dict[str, list[ScoredProposal]], list[RowIssue]]:
    """Read a proposals JSONL file into per-image proposal lists.

    Boxes are clamped to the image bounds when known (``image_sizes`` or the
    row's ``image_width``/``image_height``). Duplicate boxes are kept. In
    strict mode any bad row raises :class:`~wsoleval.formats.IngestionError`
    listing every offending line; otherwise bad rows are dropped and returned
    as issues.
    """
    records, issues = read_box_file(path, require_scores=True, image_sizes=image_sizes, strict=strict)
    out = {
        image_id: [
            ScoredProposal(r.box, r.objectness, r.classifier_score, r.source) for r in recs
        ]
        for image_id, recs in group_by_image(records).items()
    }
    return out, issues
