"""Time the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--size 128]

Each kernel is run on identical inputs under both backends; outputs are
compared before timing so a speed-up never hides a disagreement.
"""

import argparse
import timeit

import numpy as np

from wsoleval import _pykernels
from wsoleval.geometry import boxes_to_array
from wsoleval.heatmap import ThresholdGrid
from wsoleval.proposals.segmentation import pixel_graph
from wsoleval.synthetic import blob_dataset

try:
    from wsoleval import _ckernels
except ImportError:
    _ckernels = None


def cases(size):
    rng = np.random.default_rng(0)
    mask = np.ascontiguousarray(rng.random((size, size)) < 0.45, dtype=np.uint8)
    sample = blob_dataset(1, width=size, height=size, seed=1, distractors=3)[0]
    values = np.ascontiguousarray(sample.nmap.values, dtype=np.float64)
    gt = boxes_to_array(sample.boxes)
    thr = np.ascontiguousarray(ThresholdGrid(100).thresholds, dtype=np.float64)
    img = (rng.random((size // 2, size // 2, 3)) * 255).astype(np.uint8)
    src, dst, wt = pixel_graph(img)
    n = img.shape[0] * img.shape[1]
    return {
        "label_components": lambda m: m.label_components(mask, 8),
        "sweep_best_iou": lambda m: m.sweep_best_iou(values, gt, thr, 8, False),
        "felzenszwalb_merge": lambda m: m.felzenszwalb_merge(n, src, dst, wt, 300.0, 20),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=128, help="side of the mask and map inputs")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the pure-Python backend is available")
    print(f"{'kernel':<20} {'python (ms)':>12} {'cython (ms)':>12} {'speed-up':>9}")
    for name, call in cases(args.size).items():
        py = min(timeit.repeat(lambda: call(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<20} {py:>12.2f} {'-':>12} {'-':>9}")
            continue
        if not same(call(_pykernels), call(_ckernels)):
            raise SystemExit(f"{name}: backends disagree")
        cy = min(timeit.repeat(lambda: call(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<20} {py:>12.2f} {cy:>12.2f} {py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
