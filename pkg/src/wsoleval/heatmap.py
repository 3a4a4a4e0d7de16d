"""Localization maps: normalization, binarization, Otsu thresholds and file I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WSLM_MAGIC = b"WSLM"
WSLM_VERSION = 1
_WSLM_HEADER = struct.Struct("<4sBII")


class DegenerateMapError(ValueError):
    """Raised when an operation needs a map with some contrast."""


class MapFormatError(ValueError):
    """Raised for unreadable or malformed localization map files."""


@dataclass(frozen=True)
class NormalizedMap:
    """A localization map min-max scaled to [0, 1].

    ``degenerate`` is set when the source map was constant; the values are
    then all zero.
    """

    values: np.ndarray
    degenerate: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def peak(self) -> tuple[int, int]:
        """``(row, col)`` of the maximum; ties go to the lowest raster index."""
        idx = int(np.argmax(self.values))
        return divmod(idx, self.values.shape[1])


@dataclass(frozen=True)
class ThresholdGrid:
    """Evenly spaced thresholds ``i / count`` for ``i = 0 .. count - 1``."""

    count: int = 1000

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"threshold grid needs a positive count, got {self.count}")

    @property
    def thresholds(self) -> np.ndarray:
        return np.arange(self.count, dtype=np.float64) / self.count

    def __len__(self):
        return self.count


def as_locmap(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"localization map must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("localization map contains NaN or infinite values")
    return arr


def normalize(values) -> NormalizedMap:
    if isinstance(values, NormalizedMap):
        values = values.values
    arr = as_locmap(values)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return NormalizedMap(np.zeros_like(arr), degenerate=True)
    out = (arr - lo) / (hi - lo)
    return NormalizedMap(out, degenerate=False)


def binarize(nmap: NormalizedMap, tau: float) -> np.ndarray:
    """Foreground mask ``values >= tau``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {tau}")
    return nmap.values >= tau


def histogram_bins(nmap: NormalizedMap, bins: int = 256) -> np.ndarray:
    """Per-pixel bin index ``min(floor(v * bins), bins - 1)``."""
    idx = np.floor(nmap.values * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def otsu_threshold(nmap: NormalizedMap, bins: int = 256) -> float:
    """Otsu threshold of a normalized map.

    Every bin boundary ``j / bins`` (``j = 1 .. bins - 1``) splits the
    histogram into background bins ``< j`` and foreground bins ``>= j``. The
    boundary with the largest between-class variance wins; the lowest one on
    ties. Bin indices serve as the class values and the comparison is done in
    exact integer arithmetic, so ties are real ties.
    """
    if bins < 2:
        raise ValueError(f"need at least 2 histogram bins, got {bins}")
    if nmap.degenerate:
        raise DegenerateMapError("constant map has no Otsu threshold")
    hist = np.bincount(histogram_bins(nmap, bins).ravel(), minlength=bins).tolist()
    total_n = sum(hist)
    total_s = sum(i * c for i, c in enumerate(hist))

    # maximize S_b^2 / n_b + S_f^2 / n_f, i.e. minimize the within-class sum of squares
    best_j = None
    best_num, best_den = 0, 1
    n_b = s_b = 0
    for j in range(1, bins):
        n_b += hist[j - 1]
        s_b += (j - 1) * hist[j - 1]
        n_f = total_n - n_b
        if n_b == 0:
            continue
        if n_f == 0:
            break
        s_f = total_s - s_b
        num = s_b * s_b * n_f + s_f * s_f * n_b
        den = n_b * n_f
        if best_j is None or num * best_den > best_num * den:
            best_j, best_num, best_den = j, num, den
    if best_j is None:
        raise DegenerateMapError("all values fall in one histogram bin; no Otsu split")
    return best_j / bins


def read_wslm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _WSLM_HEADER.size:
        raise MapFormatError(f"{path}: file too short for a WSLM header")
    magic, version, height, width = _WSLM_HEADER.unpack_from(data)
    if magic != WSLM_MAGIC:
        raise MapFormatError(f"{path}: bad magic {magic!r}, expected {WSLM_MAGIC!r}")
    if version != WSLM_VERSION:
        raise MapFormatError(f"{path}: unsupported WSLM version {version}")
    expected = _WSLM_HEADER.size + 4 * height * width
    if len(data) != expected:
        raise MapFormatError(f"{path}: expected {expected} bytes for {height}x{width}, got {len(data)}")
    if height == 0 or width == 0:
        raise MapFormatError(f"{path}: empty map ({height}x{width})")
    arr = np.frombuffer(data, dtype="<f4", offset=_WSLM_HEADER.size).reshape(height, width)
    if not np.all(np.isfinite(arr)):
        raise MapFormatError(f"{path}: map contains NaN or infinite values")
    return arr.astype(np.float64)


def write_wslm(path, values) -> None:
    arr = as_locmap(values)
    h, w = arr.shape
    Path(path).write_bytes(_WSLM_HEADER.pack(WSLM_MAGIC, WSLM_VERSION, h, w) + arr.astype("<f4").tobytes())


def read_png_map(path) -> np.ndarray:
    """Read an 8- or 16-bit grayscale PNG, scaled to [0, 1]."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64) / 255.0
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return arr / 65535.0
        raise MapFormatError(f"{path}: expected grayscale PNG, got mode {im.mode}")


def load_map(path) -> np.ndarray:
    """Load a localization map from a ``.wslm`` or ``.png`` file."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".wslm":
        return read_wslm(path)
    if suffix == ".png":
        return read_png_map(path)
    raise MapFormatError(f"{path}: unsupported map format {suffix!r}")


def find_map(directory, image_id: str) -> Path:
    directory = Path(directory)
    for suffix in (".wslm", ".png"):
        candidate = directory / f"{image_id}{suffix}"
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no map for image {image_id!r} in {directory}")
