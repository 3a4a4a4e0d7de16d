"""Model selection and threshold estimation over training runs.

A run is a sequence of per-epoch records on a validation and a test split.
Each record carries, per annotation source, either a scalar localization
score or a full BoxAcc curve over a shared threshold grid (the scalar is then
the curve maximum), plus the classification accuracy. Curves are what lets
the protocol matrix move the threshold between splits.

Protocol names: BT/BV select the run and epoch on the test/validation split;
TT/VT/OT take the threshold from the test split, from the validation split,
or per image by Otsu.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import BoxMode, Connectivity
from .heatmap import ThresholdGrid
from .metrics import Sample, box_acc_curve, max_box_acc, otsu_image_scores

CLASSIFICATION = "classification"


class SelectionError(ValueError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    classification_acc: float | None = None
    loc_scores: dict[str, float] = field(default_factory=dict)
    curves: dict[str, list[float]] = field(default_factory=dict)
    otsu_scores: dict[str, float] = field(default_factory=dict)

    def score(self, criterion: str) -> float:
        if criterion == CLASSIFICATION:
            if self.classification_acc is None:
                raise SelectionError(f"epoch {self.epoch}: no classification accuracy")
            return self.classification_acc
        source = criterion[4:] if criterion.startswith("loc:") else criterion
        if source in self.loc_scores:
            return self.loc_scores[source]
        if source in self.curves:
            return max(self.curves[source])
        raise SelectionError(f"epoch {self.epoch}: no {source!r} localization score")

    def to_json(self) -> dict:
        out: dict = {"epoch": self.epoch, "classification_acc": self.classification_acc}
        if self.loc_scores:
            out["loc_scores"] = self.loc_scores
        if self.curves:
            out["curves"] = self.curves
        if self.otsu_scores:
            out["otsu_scores"] = self.otsu_scores
        return out

    @classmethod
    def from_json(cls, d: dict) -> "EpochRecord":
        rec = cls(
            epoch=int(d["epoch"]),
            classification_acc=d.get("classification_acc"),
            loc_scores={k: float(v) for k, v in d.get("loc_scores", {}).items()},
            curves={k: [float(x) for x in v] for k, v in d.get("curves", {}).items()},
            otsu_scores={k: float(v) for k, v in d.get("otsu_scores", {}).items()},
        )
        if rec.epoch < 0:
            raise SelectionError(f"negative epoch {rec.epoch}")
        values = list(rec.loc_scores.values()) + list(rec.otsu_scores.values())
        values += [x for c in rec.curves.values() for x in c]
        if rec.classification_acc is not None:
            values.append(rec.classification_acc)
        if any(not (0.0 <= v <= 1.0) for v in values):
            raise SelectionError(f"epoch {rec.epoch}: scores must lie in [0, 1]")
        return rec


@dataclass
class RunManifest:
    run_id: str
    config: dict = field(default_factory=dict)
    val: list[EpochRecord] = field(default_factory=list)
    test: list[EpochRecord] = field(default_factory=list)

    def __post_init__(self):
        for name in ("val", "test"):
            epochs = [r.epoch for r in getattr(self, name)]
            if any(b <= a for a, b in zip(epochs, epochs[1:])):
                raise SelectionError(f"run {self.run_id!r}: {name} epochs must be strictly increasing")
        if self.val and self.test and [r.epoch for r in self.val] != [r.epoch for r in self.test]:
            raise SelectionError(f"run {self.run_id!r}: val and test epochs are not aligned")

    def split(self, name: str) -> list[EpochRecord]:
        if name not in ("val", "test"):
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)

    def at(self, split: str, epoch: int) -> EpochRecord:
        for rec in self.split(split):
            if rec.epoch == epoch:
                return rec
        raise SelectionError(f"run {self.run_id!r}: no {split} record for epoch {epoch}")

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "splits": {
                "val": [r.to_json() for r in self.val],
                "test": [r.to_json() for r in self.test],
            },
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunManifest":
        splits = d.get("splits", {})
        return cls(
            run_id=str(d["run_id"]),
            config=dict(d.get("config", {})),
            val=[EpochRecord.from_json(e) for e in splits.get("val", [])],
            test=[EpochRecord.from_json(e) for e in splits.get("test", [])],
        )


def load_runs(path) -> list[RunManifest]:
    """Runs from a JSON file holding one run, a list of runs, or ``{"runs": [...]}``,
    or from a directory of such files."""
    path = Path(path)
    if path.is_dir():
        runs = []
        for p in sorted(path.glob("*.json")):
            runs.extend(load_runs(p))
        return runs
    data = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(data, dict) and "runs" in data:
        data = data["runs"]
    if isinstance(data, dict):
        data = [data]
    return [RunManifest.from_json(d) for d in data]


def save_runs(path, runs: Sequence[RunManifest]) -> None:
    Path(path).write_text(
        json.dumps({"runs": [r.to_json() for r in runs]}, indent=1) + "\n", encoding="utf-8"
    )


def early_stop(run: RunManifest, criterion: str, split: str = "val") -> int:
    """Epoch maximizing ``criterion`` on ``split``; the earliest on ties."""
    series = run.split(split)
    if not series:
        raise SelectionError(f"run {run.run_id!r} has no {split} epochs")
    best_epoch, best = None, -math.inf
    for rec in series:
        s = rec.score(criterion)
        if s > best:
            best_epoch, best = rec.epoch, s
    return best_epoch


@dataclass(frozen=True)
class Selection:
    run_id: str
    epoch: int
    score: float


def select_config(runs: Sequence[RunManifest], criterion: str, split: str = "val") -> Selection:
    """Best run after early stopping each one; the smallest run id on ties."""
    if not runs:
        raise SelectionError("no runs to select from")
    best = None
    for run in sorted(runs, key=lambda r: r.run_id):
        epoch = early_stop(run, criterion, split)
        score = run.at(split, epoch).score(criterion)
        if best is None or score > best.score:
            best = Selection(run.run_id, epoch, score)
    return best


def estimate_tau(
    val_samples: Sequence[Sample],
    grid: ThresholdGrid = ThresholdGrid(),
    delta: float = 0.5,
    mode: BoxMode = "all",
    connectivity: Connectivity = 8,
    threads: int = 1,
) -> float:
    """Threshold maximizing BoxAcc on the validation maps and (pseudo) boxes."""
    curve = box_acc_curve(val_samples, grid, delta, mode, connectivity, threads)
    return max_box_acc(curve)[0]


def score_epoch(
    epoch: int,
    samples_by_source: dict[str, Sequence[Sample]],
    grid: ThresholdGrid,
    delta: float = 0.5,
    mode: BoxMode = "all",
    classification_acc: float | None = None,
    with_otsu: bool = True,
) -> EpochRecord:
    """Build an epoch record from one epoch's maps, for each annotation source."""
    rec = EpochRecord(epoch=epoch, classification_acc=classification_acc)
    for source, samples in samples_by_source.items():
        curve = box_acc_curve(samples, grid, delta, mode)
        rec.curves[source] = curve.acc.tolist()
        if with_otsu:
            scores = otsu_image_scores(samples, mode)
            rec.otsu_scores[source] = sum(v >= delta for v in scores) / len(scores)
    return rec


@dataclass
class ProtocolCell:
    config_axis: str  # BT | BV
    tau_axis: str  # TT | VT | OT
    source: str  # validation criterion / annotation source
    value: float | None
    run_id: str | None = None
    epoch: int | None = None
    tau_index: int | None = None
    note: str | None = None

    @property
    def name(self) -> str:
        return f"{self.config_axis}-{self.tau_axis}"

    @property
    def available(self) -> bool:
        return self.value is not None

    def to_json(self) -> dict:
        return {
            "cell": self.name, "source": self.source, "value": self.value,
            "run_id": self.run_id, "epoch": self.epoch, "tau_index": self.tau_index,
            "note": self.note,
        }


def _test_tt(run: RunManifest, epoch: int, oracle: str) -> tuple[float, int]:
    curve = run.at("test", epoch).curves.get(oracle)
    if not curve:
        raise SelectionError(f"run {run.run_id!r} epoch {epoch}: no test {oracle!r} curve")
    j = int(np.argmax(curve))
    return float(curve[j]), j


def _test_vt(run: RunManifest, epoch: int, source: str, oracle: str) -> tuple[float, int]:
    val_curve = run.at("val", epoch).curves.get(source)
    if not val_curve:
        raise SelectionError(f"run {run.run_id!r} epoch {epoch}: no validation {source!r} curve")
    test_curve = run.at("test", epoch).curves.get(oracle)
    if not test_curve:
        raise SelectionError(f"run {run.run_id!r} epoch {epoch}: no test {oracle!r} curve")
    if len(val_curve) != len(test_curve):
        raise SelectionError(f"run {run.run_id!r} epoch {epoch}: val and test grids differ")
    j = int(np.argmax(val_curve))
    return float(test_curve[j]), j


def protocol_matrix(
    runs: Sequence[RunManifest],
    sources: Sequence[str] = ("oracle", "ss", "rpn", "clip"),
    oracle: str = "oracle",
    include_classification: bool = True,
) -> list[ProtocolCell]:
    """Test-set localization under every selection protocol.

    For each validation source ``s``:

    * BT-TT: run and epoch selected on test, threshold optimized on test;
    * BT-VT: selected on test, threshold estimated on validation ``s`` boxes;
    * BV-TT: selected on validation ``s``, threshold optimized on test;
    * BV-VT: selected and thresholded on validation ``s`` (the realistic cell).

    With ``include_classification`` the classification criterion adds BV-TT
    and BV-OT cells (threshold per image by Otsu). Cells whose inputs are
    missing are returned with ``value=None`` and a note.
    """
    runs = sorted(runs, key=lambda r: r.run_id)
    by_id = {r.run_id: r for r in runs}
    cells: list[ProtocolCell] = []

    def cell(config_axis, tau_axis, source, select_fn, value_fn):
        try:
            sel = select_fn()
            value, j = value_fn(by_id[sel.run_id], sel.epoch)
            cells.append(ProtocolCell(config_axis, tau_axis, source, value, sel.run_id, sel.epoch, j))
        except SelectionError as exc:
            cells.append(ProtocolCell(config_axis, tau_axis, source, None, note=str(exc)))

    def bt():
        return select_config(runs, oracle, "test")

    def bv(source):
        return lambda: select_config(runs, source, "val")

    def tt(run, epoch):
        return _test_tt(run, epoch, oracle)

    def vt(source):
        return lambda run, epoch: _test_vt(run, epoch, source, oracle)

    def ot(run, epoch):
        rec = run.at("test", epoch)
        if oracle not in rec.otsu_scores:
            raise SelectionError(f"run {run.run_id!r} epoch {epoch}: no test Otsu score")
        return rec.otsu_scores[oracle], None

    for source in sources:
        cell("BT", "TT", source, bt, tt)
        cell("BT", "VT", source, bt, vt(source))
        cell("BV", "TT", source, bv(source), tt)
        cell("BV", "VT", source, bv(source), vt(source))
    if include_classification:
        cell("BV", "TT", CLASSIFICATION, bv(CLASSIFICATION), tt)
        cell("BV", "OT", CLASSIFICATION, bv(CLASSIFICATION), ot)
    return cells


def matrix_table(cells: Sequence[ProtocolCell]) -> tuple[list[str], list[list[str]]]:
    """Pivot cells into rows (protocol) by columns (source) for CSV output."""
    columns: list[str] = []
    rows: list[str] = []
    values: dict[tuple[str, str], ProtocolCell] = {}
    for c in cells:
        if c.source not in columns:
            columns.append(c.source)
        if c.name not in rows:
            rows.append(c.name)
        values[(c.name, c.source)] = c
    header = ["protocol"] + columns
    body = []
    for r in rows:
        line = [r]
        for col in columns:
            c = values.get((r, col))
            line.append("--" if c is None or c.value is None else repr(c.value))
        body.append(line)
    return header, body


@dataclass
class EpochDiffHistogram:
    counts: dict[int, int]
    mode: int
    mean: float

    def to_json(self) -> dict:
        return {"counts": {str(k): v for k, v in sorted(self.counts.items())},
                "mode": self.mode, "mean": self.mean}


def epoch_diff_histogram(
    runs: Sequence[RunManifest], source_a: str, source_b: str, split: str = "val"
) -> EpochDiffHistogram:
    """Histogram of ``early_stop(a) - early_stop(b)`` over runs.

    The mode prefers the difference closest to zero, then the smaller one.
    """
    if not runs:
        raise SelectionError("no runs")
    diffs = [
        early_stop(r, source_a, split) - early_stop(r, source_b, split)
        for r in sorted(runs, key=lambda r: r.run_id)
    ]
    counts = Counter(diffs)
    top = max(counts.values())
    mode = min((d for d, c in counts.items() if c == top), key=lambda d: (abs(d), d))
    return EpochDiffHistogram(dict(sorted(counts.items())), mode, math.fsum(diffs) / len(diffs))
