"""Synthetic fixtures: indicator and Gaussian-blob maps, IoU-controlled maps and
run suites with known structure. Used by the tests, the benchmark and for
trying the CLI without real data."""

from __future__ import annotations

import numpy as np

from .geometry import BBox
from .heatmap import normalize
from .metrics import Sample
from .selection import EpochRecord, RunManifest


def random_box(rng: np.random.Generator, width: int, height: int, min_size: int = 4) -> BBox:
    w = int(rng.integers(min_size, max(min_size + 1, width // 2)))
    h = int(rng.integers(min_size, max(min_size + 1, height // 2)))
    x0 = int(rng.integers(0, width - w + 1))
    y0 = int(rng.integers(0, height - h + 1))
    return BBox(float(x0), float(y0), float(x0 + w), float(y0 + h))


def indicator_map(box: BBox, width: int, height: int) -> np.ndarray:
    m = np.zeros((height, width))
    m[int(box.y_min):int(box.y_max), int(box.x_min):int(box.x_max)] = 1.0
    return m


def indicator_dataset(n: int, width: int = 32, height: int = 32, seed: int = 0) -> list[Sample]:
    """Maps that are exact indicators of their single reference box."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        box = random_box(rng, width, height)
        out.append(Sample(f"img_{i:04d}", normalize(indicator_map(box, width, height)), [box]))
    return out


def gaussian_map(width: int, height: int, cx: float, cy: float, sx: float, sy: float) -> np.ndarray:
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    return np.exp(-0.5 * (((xs[None, :] - cx) / sx) ** 2 + ((ys[:, None] - cy) / sy) ** 2))


def blob_dataset(
    n: int,
    width: int = 48,
    height: int = 48,
    seed: int = 0,
    distractors: int = 1,
    noise: float = 0.05,
) -> list[Sample]:
    """Gaussian-blob maps with a jittered reference box around the main blob,
    weaker distractor blobs and additive noise."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        box = random_box(rng, width, height, min_size=6)
        cx, cy = box.center
        m = gaussian_map(width, height, cx + rng.normal(0, 1.5), cy + rng.normal(0, 1.5),
                         box.width / rng.uniform(2.5, 5.0), box.height / rng.uniform(2.5, 5.0))
        for _ in range(distractors):
            m += rng.uniform(0.2, 0.6) * gaussian_map(
                width, height, rng.uniform(0, width), rng.uniform(0, height),
                rng.uniform(2, 6), rng.uniform(2, 6))
        m += noise * rng.random((height, width))
        out.append(Sample(f"img_{i:04d}", normalize(m), [box]))
    return out


def fixed_iou_sample(image_id: str, target_iou: float, size: int = 32) -> Sample:
    """An indicator map whose extracted box has exactly ``target_iou`` (up to
    rounding) with the reference box at every threshold in (0, 1].

    The map marks a 10x10 block; the reference box shares its left, top and
    right edges and is stretched vertically to area ``100 / target_iou``.
    """
    if not 0.0 < target_iou <= 1.0:
        raise ValueError("target IoU must lie in (0, 1]")
    pred = BBox(4.0, 4.0, 14.0, 14.0)
    gt = BBox(4.0, 4.0, 14.0, 4.0 + 10.0 / target_iou)
    if gt.y_max > size:
        raise ValueError("target IoU too small for the canvas")
    return Sample(image_id, normalize(indicator_map(pred, size, size)), [gt])


# --- run suites -----------------------------------------------------------

def _bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((x - center) / width) ** 2)


def synthetic_run_suite(
    n_runs: int = 20,
    n_epochs: int = 12,
    grid_count: int = 50,
    seed: int = 0,
    sources: tuple[str, ...] = ("oracle", "ss", "rpn", "clip"),
    pseudo_noise: float = 0.05,
    val_equals_test: bool = False,
) -> list[RunManifest]:
    """Runs with BoxAcc curves per epoch and source.

    Test oracle curves peak in threshold around a run-specific value and in
    epoch around a run-specific peak. Validation curves are independent noisy
    copies, with pseudo sources shifted in threshold. The test Otsu score is
    the test curve at a random grid point. Classification accuracy rises
    until the last epoch.
    """
    rng = np.random.default_rng(seed)
    taus = np.arange(grid_count) / grid_count
    epochs = np.arange(n_epochs)
    runs = []
    for r in range(n_runs):
        quality = rng.uniform(0.5, 0.9)
        peak_epoch = rng.uniform(1, n_epochs / 2)
        tau0 = rng.uniform(0.2, 0.6)
        loc = quality * (0.6 + 0.4 * _bump(epochs, peak_epoch, n_epochs / 4))
        cls = 0.4 + 0.5 * (1 - np.exp(-(epochs + 1) / (n_epochs / 3)))
        val, test = [], []
        for e in epochs:
            base = loc[e] * _bump(taus, tau0, 0.15)
            test_curve = np.clip(base + rng.normal(0, 0.01, grid_count), 0, 1)
            j_otsu = int(rng.integers(0, grid_count))
            test.append(EpochRecord(
                epoch=int(e), classification_acc=float(cls[e]),
                curves={"oracle": test_curve.tolist()},
                otsu_scores={"oracle": float(test_curve[j_otsu])},
            ))
            if val_equals_test:
                val_curves = {s: test_curve.tolist() for s in sources}
            else:
                val_curves = {}
                for s in sources:
                    shift = 0.0 if s == "oracle" else rng.normal(0, 0.05)
                    noise = 0.01 if s == "oracle" else pseudo_noise
                    c = loc[e] * _bump(taus, tau0 + shift, 0.15) + rng.normal(0, noise, grid_count)
                    val_curves[s] = np.clip(c, 0, 1).tolist()
            val.append(EpochRecord(epoch=int(e), classification_acc=float(cls[e]),
                                   curves=val_curves))
        runs.append(RunManifest(run_id=f"run_{r:03d}", config={"seed": seed, "index": r},
                                val=val, test=test))
    return runs


def write_demo_workspace(root, n: int = 6, size: int = 48, seed: int = 0) -> dict:
    """Write a small self-consistent workspace for trying the command line.

    Layout under ``root``: ``maps/`` (perfect indicator maps, WSLM),
    ``cams/`` (blurred indicators, WSLM), ``images/`` (PNG images with a
    coloured rectangle on each reference box), ``boxes.jsonl``,
    ``runs.json`` and ``workspace.json``. Returns the paths written.
    """
    import json
    from pathlib import Path

    from PIL import Image
    from scipy import ndimage

    from .formats import BoxRecord, write_box_file
    from .heatmap import write_wslm
    from .selection import save_runs

    root = Path(root)
    for sub in ("maps", "cams", "images"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        image_id = f"img_{i:04d}"
        box = random_box(rng, size, size, min_size=8)
        ind = indicator_map(box, size, size)
        write_wslm(root / "maps" / f"{image_id}.wslm", ind)
        write_wslm(root / "cams" / f"{image_id}.wslm", ndimage.gaussian_filter(ind, 2.0))
        img = np.empty((size, size, 3), dtype=np.uint8)
        img[:] = rng.integers(0, 80, 3)
        img[ind > 0] = rng.integers(150, 256, 3)
        Image.fromarray(img).save(root / "images" / f"{image_id}.png")
        records.append(BoxRecord(image_id, box, source="oracle", image_width=size, image_height=size))
    write_box_file(root / "boxes.jsonl", records)
    save_runs(root / "runs.json", synthetic_run_suite(n_runs=5, n_epochs=8, grid_count=20, seed=seed))
    manifest = {
        "root": ".",
        "splits": {"val": [r.image_id for r in records]},
        "files": [
            {"path": "maps", "format": "map-dir"},
            {"path": "cams", "format": "map-dir"},
            {"path": "boxes.jsonl", "format": "boxes"},
            {"path": "runs.json", "format": "runs"},
        ],
        "defaults": {"grid": 100, "delta": 0.5, "connectivity": 8, "seed": seed},
    }
    (root / "workspace.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return {k: str(root / k) for k in ("maps", "cams", "images", "boxes.jsonl", "runs.json", "workspace.json")}
