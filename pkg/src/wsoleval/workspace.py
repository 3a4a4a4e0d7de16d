"""Workspace manifests and their validation.

A manifest is a JSON file::

    {
      "root": "data",
      "splits": {"train": [...], "val": ["img_1", ...], "test": [...]},
      "files": [
        {"path": "maps/val", "format": "map-dir"},
        {"path": "val_pseudo.jsonl", "format": "boxes"},
        {"path": "rpn.jsonl", "format": "proposals"},
        {"path": "runs.json", "format": "runs"}
      ],
      "defaults": {"grid": 1000, "delta": 0.5, "connectivity": 8, "seed": 0}
    }

Paths are relative to ``root``, which is relative to the manifest's folder.
Formats: ``wslm``, ``png``, ``map-dir``, ``boxes``, ``proposals``, ``runs``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .formats import read_box_file
from .heatmap import MapFormatError, load_map
from .selection import SelectionError, load_runs

FORMATS = ("wslm", "png", "map-dir", "boxes", "proposals", "runs")
DEFAULTS = {"grid": 1000, "delta": 0.5, "connectivity": 8, "seed": 0}


@dataclass
class WorkspaceManifest:
    root: Path
    splits: dict[str, list[str]] = field(default_factory=dict)
    files: list[dict] = field(default_factory=list)
    defaults: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def load(cls, path) -> "WorkspaceManifest":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"{path}: manifest must be a JSON object")
        root = path.parent / data.get("root", ".")
        splits = {k: [str(i) for i in v] for k, v in data.get("splits", {}).items()}
        defaults = dict(DEFAULTS)
        defaults.update(data.get("defaults", {}))
        return cls(root=root, splits=splits, files=list(data.get("files", [])), defaults=defaults)

    @property
    def known_ids(self) -> set[str]:
        return {i for ids in self.splits.values() for i in ids}


def _check_map(path: Path) -> list[str]:
    try:
        load_map(path)
    except (MapFormatError, OSError, ValueError) as exc:
        return [str(exc)]
    return []


def _check_file(manifest: WorkspaceManifest, entry: dict) -> dict:
    fmt = entry.get("format")
    rel = entry.get("path", "")
    path = manifest.root / rel
    result = {"path": str(path), "format": fmt, "status": "ok", "messages": []}
    msgs = result["messages"]
    if fmt not in FORMATS:
        msgs.append(f"unknown format {fmt!r}")
    elif not path.exists():
        msgs.append("file not found")
    elif fmt in ("wslm", "png"):
        msgs.extend(_check_map(path))
    elif fmt == "map-dir":
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".wslm", ".png"))
        if not files:
            msgs.append("no .wslm or .png maps")
        for p in files:
            msgs.extend(_check_map(p))
            if manifest.splits and p.stem not in manifest.known_ids:
                msgs.append(f"{p.name}: image id {p.stem!r} is not in any split")
    elif fmt in ("boxes", "proposals"):
        records, issues = read_box_file(path, require_scores=(fmt == "proposals"), strict=False)
        msgs.extend(str(i) for i in issues)
        if manifest.splits:
            unknown = sorted({r.image_id for r in records} - manifest.known_ids)
            msgs.extend(f"unknown image id {i!r}" for i in unknown)
    elif fmt == "runs":
        try:
            load_runs(path)
        except (SelectionError, ValueError, KeyError) as exc:
            msgs.append(f"invalid run manifest: {exc}")
    if msgs:
        result["status"] = "error"
    return result


def validate_workspace(manifest: WorkspaceManifest) -> dict:
    """Check every declared file; problems become report entries, not exceptions."""
    report: dict = {"root": str(manifest.root), "files": [], "splits": {}, "errors": []}
    seen: dict[str, str] = {}
    for name, ids in manifest.splits.items():
        report["splits"][name] = len(ids)
        for i in ids:
            if i in seen and seen[i] != name:
                report["errors"].append(f"image id {i!r} is in both {seen[i]!r} and {name!r}")
            seen.setdefault(i, name)
    for entry in manifest.files:
        report["files"].append(_check_file(manifest, entry))
    report["valid"] = not report["errors"] and all(f["status"] == "ok" for f in report["files"])
    return report
