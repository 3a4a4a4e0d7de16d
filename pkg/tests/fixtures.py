"""Hand-built pseudo-annotation fixture with known survivors at every stage.

Each image is 64x64 with one reference box G of 24x20 and a Gaussian CAM
centred on G, so the CAM peak lies inside G. Proposals:

* ``p0`` = G, objectness 0.9;
* ``p1`` decoy, objectness 0.8: shifted right by 14 (misses the peak) or, for
  ``i % 4 == 1``, G grown by 4 on every side (contains the peak, lower CAM mean);
* for ``i % 4 == 2`` two more: G grown by 1 (contains the peak, 0.85) and G
  shifted down by 12 (misses the peak, 0.82), plus 16 far boxes instead of 8;
* far 6x6 boxes in the bottom-right corner, objectness below 0.5.

For ``i % 4 == 3`` the CAM also has a single hot pixel at (60, 2) that no
top proposal contains, so the pointing stage empties and falls back.

Expected (ingested, top_fraction, pointing, final) at fraction 0.2:
``i % 4 == 0`` -> (10, 2, 1, 1); ``1`` -> (10, 2, 2, 1); ``2`` -> (20, 4, 2, 1);
``3`` -> (10, 2, 2, 1) with the pointing-empty flag. The final box is G always.
"""

import numpy as np

from wsoleval.geometry import BBox
from wsoleval.heatmap import normalize
from wsoleval.proposals import ScoredProposal
from wsoleval.pseudo_annotator import ImageRecord
from wsoleval.synthetic import gaussian_map

EXPECTED_TRACE = {
    0: (10, 2, 1, 1),
    1: (10, 2, 2, 1),
    2: (20, 4, 2, 1),
    3: (10, 2, 2, 1),
}


def gt_box(i):
    x0 = 8 + (i % 5) * 2
    y0 = 10 + (i % 3) * 2
    return BBox(x0, y0, x0 + 24, y0 + 20)


def _far_boxes(n):
    out = []
    for k in range(n):
        x0 = 42 + (k % 4) * 4
        y0 = 40 + (k // 4) * 4
        out.append(BBox(x0, y0, x0 + 6, y0 + 6))
    return out


def annotation_record(i, source="rpn"):
    g = gt_box(i)
    x0, y0 = g.x_min, g.y_min
    props = [ScoredProposal(g, 0.9, source=source)]
    if i % 4 == 1:
        props.append(ScoredProposal(BBox(x0 - 4, y0 - 4, x0 + 28, y0 + 24), 0.8, source=source))
    else:
        props.append(ScoredProposal(BBox(x0 + 14, y0, x0 + 38, y0 + 20), 0.8, source=source))
    n_far = 8
    if i % 4 == 2:
        props.append(ScoredProposal(BBox(x0 - 1, y0 - 1, x0 + 25, y0 + 21), 0.85, source=source))
        props.append(ScoredProposal(BBox(x0, y0 + 12, x0 + 24, y0 + 32), 0.82, source=source))
        n_far = 16
    for k, b in enumerate(_far_boxes(n_far)):
        props.append(ScoredProposal(b, 0.45 - 0.02 * k, source=source))
    order = np.random.default_rng(i).permutation(len(props))
    props = [props[j] for j in order]

    cx, cy = g.center
    cam = gaussian_map(64, 64, cx, cy, g.width / 4, g.height / 4)
    if i % 4 == 3:
        cam[60, 2] = 2.0
    return ImageRecord(f"img_{i:02d}", 64, 64, proposals=props, cam=normalize(cam), gt_boxes=[g])


def annotation_fixture(n=20, source="rpn"):
    return [annotation_record(i, source) for i in range(n)]
