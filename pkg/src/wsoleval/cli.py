"""Command-line front-end.

Every subcommand prints a JSON summary on stdout. Exit status is 0 on
success, 1 for invalid input (bad flags, schema violations, unusable data)
and 2 for I/O failures such as missing files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .formats import BoxRecord, IngestionError, dump_json, load_boxes, write_box_file
from .heatmap import (
    DegenerateMapError,
    MapFormatError,
    ThresholdGrid,
    find_map,
    load_map,
    normalize,
)
from .metrics import Sample, evaluate
from .perturb import NoiseSpec, perturb_dataset
from .proposals import ingest_proposals, selective_search
from .pseudo_annotator import ImageRecord, annotate_dataset
from .report import plot_epoch_curves, plot_epoch_diff_histogram, write_csv
from .selection import (
    SelectionError,
    early_stop,
    epoch_diff_histogram,
    estimate_tau,
    load_runs,
    matrix_table,
    protocol_matrix,
    select_config,
)
from .workspace import WorkspaceManifest, validate_workspace

log = logging.getLogger("wsoleval")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
IMAGE_SUFFIXES = (".png", ".ppm", ".pnm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _weights(text: str) -> tuple[float, ...]:
    vals = tuple(float(t) for t in _csv_list(text))
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("need four comma-separated weights")
    return vals


def _image_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected WIDTHxHEIGHT, e.g. 224x224") from None
    return w, h


def _list_images(paths: list[str]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_SUFFIXES))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"image not found: {p}")
    return out


def _read_rgb(path: Path):
    import numpy as np
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def _load_samples(maps_dir, boxes_path) -> list[Sample]:
    boxes = load_boxes(boxes_path)
    if not boxes:
        raise ValueError(f"{boxes_path}: no boxes")
    return [
        Sample(image_id, normalize(load_map(find_map(maps_dir, image_id))), boxes[image_id])
        for image_id in sorted(boxes)
    ]


# --- subcommands ------------------------------------------------------------

def cmd_propose(args) -> dict:
    images = _list_images(args.images)

    def one(path):
        rgb = _read_rgb(path)
        h, w = rgb.shape[:2]
        props = selective_search(rgb, args.k, args.min_size, args.weights, args.seed)
        return [
            BoxRecord(path.stem, p.box, p.objectness, None, "ss", w, h) for p in props
        ]

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        per_image = list(pool.map(one, images))
    records = [r for recs in per_image for r in recs]
    write_box_file(args.out, records)
    return {"images": len(images), "proposals": len(records), "out": str(args.out)}


def cmd_annotate(args) -> dict:
    source = args.source
    records: list[ImageRecord] = []
    if source == "clip":
        if not args.clip_maps:
            raise UsageError("annotate --source clip needs --clip-maps")
        for p in sorted(Path(args.clip_maps).iterdir()):
            if p.suffix.lower() not in (".wslm", ".png"):
                continue
            nmap = normalize(load_map(p))
            records.append(ImageRecord(p.stem, nmap.width, nmap.height, clip_map=nmap))
    else:
        if args.proposals:
            proposals, _ = ingest_proposals(args.proposals)
        elif args.images and source == "ss":
            proposals = {}
            for path in _list_images(args.images):
                proposals[path.stem] = selective_search(
                    _read_rgb(path), args.k, args.min_size, seed=args.seed
                )
        else:
            raise UsageError(f"annotate --source {source} needs --proposals"
                             + (" or --images" if source == "ss" else ""))
        for image_id, props in sorted(proposals.items()):
            cam = None
            if args.cams:
                cam = normalize(load_map(find_map(args.cams, image_id)))
            w = int(max(p.box.x_max for p in props))
            h = int(max(p.box.y_max for p in props))
            if cam is not None:
                h, w = cam.shape
            records.append(ImageRecord(image_id, w, h, proposals=props, cam=cam))
    outcomes, summary = annotate_dataset(
        records, source, args.fraction, args.key, args.largest_by, args.threads
    )
    write_box_file(args.out, [o.to_record() for o in outcomes if o.box is not None])
    if args.summary:
        dump_json(args.summary, summary)
    summary["out"] = str(args.out)
    if records and summary["annotated"] == 0:
        raise ValueError("no image could be annotated: " + "; ".join(e["error"] for e in summary["errors"][:5]))
    return summary


def cmd_perturb(args) -> dict:
    spec = NoiseSpec(level=args.level, seed=args.seed)
    summary = perturb_dataset(args.input, args.out, spec, args.image_size)
    if args.summary:
        dump_json(args.summary, summary)
    summary["out"] = str(args.out)
    return summary


def _resolve_tau(args):
    if args.sweep:
        return "sweep"
    if args.otsu:
        return "otsu"
    if args.tau_from:
        data = json.loads(Path(args.tau_from).read_text(encoding="utf-8"))
        if "tau" not in data:
            raise ValueError(f"{args.tau_from}: no 'tau' entry")
        return float(data["tau"])
    if args.tau == "fixed":
        if args.tau_value is None:
            raise UsageError("--tau fixed needs --tau-value")
        return float(args.tau_value)
    if args.tau == "from-file":
        raise UsageError("--tau from-file needs --tau-from FILE")
    if args.tau_value is not None:
        return float(args.tau_value)
    return args.tau


def cmd_eval(args) -> dict:
    tau = _resolve_tau(args)
    if isinstance(tau, float) and not 0.0 <= tau <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {tau}")
    samples = _load_samples(args.maps, args.boxes)
    result = evaluate(samples, tau, args.delta, ThresholdGrid(args.grid), args.mode,
                      args.connectivity, args.threads)
    full = result.to_dict()
    if args.out:
        dump_json(args.out, full)
    if args.csv:
        write_csv(args.csv, ["image_id", "iou", "hit"], result.per_image_rows())
    summary = {k: v for k, v in full.items() if k != "per_image"}
    summary["grid"] = args.grid
    return summary


def cmd_tau(args) -> dict:
    samples = _load_samples(args.maps, args.boxes)
    tau = estimate_tau(samples, ThresholdGrid(args.grid), args.delta, args.mode,
                       args.connectivity, args.threads)
    out = {"tau": tau, "grid": args.grid, "delta": args.delta, "box_mode": args.mode,
           "num_images": len(samples)}
    if args.out:
        dump_json(args.out, out)
    return out


def _matrix_outputs(runs, sources, json_path=None, csv_path=None) -> dict:
    cells = protocol_matrix(runs, sources)
    data = {"cells": [c.to_json() for c in cells]}
    if json_path:
        dump_json(json_path, data)
    if csv_path:
        header, rows = matrix_table(cells)
        write_csv(csv_path, header, rows)
    return data


def cmd_select(args) -> dict:
    runs = load_runs(args.runs)
    if not runs:
        raise ValueError(f"{args.runs}: no runs")
    if args.what == "early-stop":
        out = {"criterion": args.criterion, "split": args.split,
               "epochs": {r.run_id: early_stop(r, args.criterion, args.split)
                          for r in sorted(runs, key=lambda r: r.run_id)}}
    elif args.what == "config":
        sel = select_config(runs, args.criterion, args.split)
        out = {"criterion": args.criterion, "split": args.split,
               "run_id": sel.run_id, "epoch": sel.epoch, "score": sel.score}
    elif args.what == "matrix":
        out = _matrix_outputs(runs, args.sources, None, args.csv)
    else:
        hist = epoch_diff_histogram(runs, args.source_a, args.source_b, args.split)
        out = {"source_a": args.source_a, "source_b": args.source_b, **hist.to_json()}
    if args.out:
        dump_json(args.out, out)
    return out


def cmd_report(args) -> dict:
    runs = load_runs(args.runs)
    if not runs:
        raise ValueError(f"{args.runs}: no runs")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    _matrix_outputs(runs, args.sources, out_dir / "matrix.json", out_dir / "matrix.csv")
    written += ["matrix.json", "matrix.csv"]
    chosen = [r for r in runs if not args.run or r.run_id in args.run]
    for run in sorted(chosen, key=lambda r: r.run_id):
        name = f"curves_{run.run_id}.svg"
        plot_epoch_curves(run, args.sources, out_dir / name, args.split)
        written.append(name)
    if args.source_a and args.source_b:
        hist = epoch_diff_histogram(runs, args.source_a, args.source_b, args.split)
        dump_json(out_dir / "epoch_diff.json", hist.to_json())
        plot_epoch_diff_histogram(hist, out_dir / "epoch_diff.svg", f"{args.source_a} - {args.source_b}")
        written += ["epoch_diff.json", "epoch_diff.svg"]
    return {"out_dir": str(out_dir), "files": written}


def cmd_validate(args) -> dict:
    report = validate_workspace(WorkspaceManifest.load(args.manifest))
    if not report["valid"]:
        raise _InvalidReport(report)
    return report


class _InvalidReport(Exception):
    def __init__(self, report):
        super().__init__("workspace has invalid entries")
        self.report = report


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="wsoleval", description="Realistic WSOL evaluation toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("propose", parents=[common], help="Selective Search proposals for images")
    s.add_argument("--images", nargs="+", required=True, help="image files or directories (PNG/PPM)")
    s.add_argument("--out", required=True)
    s.add_argument("--k", type=float, default=300.0)
    s.add_argument("--min-size", type=int, default=100)
    s.add_argument("--weights", type=_weights, default=(1.0, 1.0, 1.0, 1.0),
                   help="colour,texture,size,fill similarity weights")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_propose)

    s = sub.add_parser("annotate", parents=[common], help="pseudo boxes from proposals or CLIP maps")
    s.add_argument("--source", choices=("ss", "rpn", "clip"), required=True)
    s.add_argument("--proposals", help="proposals JSONL (ss/rpn)")
    s.add_argument("--images", nargs="+", help="run Selective Search on these images (ss only)")
    s.add_argument("--cams", help="directory of CAMs named <image_id>.wslm|.png")
    s.add_argument("--clip-maps", help="directory of CLIP maps (clip)")
    s.add_argument("--fraction", type=float, default=0.2)
    s.add_argument("--key", choices=("objectness", "classifier_score"), default=None,
                   help="top-fraction ranking score (default: rpn=objectness, ss=classifier_score)")
    s.add_argument("--largest-by", choices=("area", "pixels"), default="area")
    s.add_argument("--k", type=float, default=300.0)
    s.add_argument("--min-size", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--summary")
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("perturb", parents=[common], help="noisy copies of reference boxes")
    s.add_argument("--level", type=int, choices=range(0, 11), required=True, metavar="1..10")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--summary")
    s.add_argument("--image-size", type=_image_size, help="WIDTHxHEIGHT for rows without image size")
    s.set_defaults(func=cmd_perturb)

    def map_args(s):
        s.add_argument("--maps", required=True, help="directory of maps named <image_id>.wslm|.png")
        s.add_argument("--boxes", required=True, help="reference (oracle or pseudo) boxes JSONL")
        s.add_argument("--grid", type=int, default=1000)
        s.add_argument("--delta", type=float, default=0.5)
        s.add_argument("--mode", choices=("all", "largest"), default="all")

    s = sub.add_parser("eval", parents=[common], help="score localization maps")
    map_args(s)
    s.add_argument("--tau", choices=("fixed", "sweep", "otsu", "from-file"), default="sweep")
    s.add_argument("--tau-value", type=float)
    s.add_argument("--tau-from", help="JSON written by `wsoleval tau`")
    s.add_argument("--sweep", action="store_true", help="same as --tau sweep")
    s.add_argument("--otsu", action="store_true", help="same as --tau otsu")
    s.add_argument("--out", help="EvalResult JSON")
    s.add_argument("--csv", help="per-image CSV (image_id,iou,hit)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("tau", parents=[common], help="estimate the threshold on validation data")
    map_args(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_tau)

    s = sub.add_parser("select", parents=[common], help="early stopping, config selection, protocol matrix")
    s.add_argument("--runs", required=True, help="run manifest JSON file or directory")
    s.add_argument("--what", choices=("early-stop", "config", "matrix", "epoch-diff"), default="config")
    s.add_argument("--criterion", default="loc:oracle", help="classification | loc:<source>")
    s.add_argument("--split", choices=("val", "test"), default="val")
    s.add_argument("--sources", type=_csv_list, default=["oracle", "ss", "rpn", "clip"])
    s.add_argument("--source-a")
    s.add_argument("--source-b")
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("report", parents=[common], help="matrix CSV/JSON and SVG plots")
    s.add_argument("--runs", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--sources", type=_csv_list, default=["oracle", "ss", "rpn", "clip"])
    s.add_argument("--run", action="append", help="plot only these run ids")
    s.add_argument("--split", choices=("val", "test"), default="val")
    s.add_argument("--source-a")
    s.add_argument("--source-b")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("validate", parents=[common], help="check a workspace manifest")
    s.add_argument("--manifest", required=True)
    s.set_defaults(func=cmd_validate)
    return p


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def run_command(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _emit({"status": "error", "error": str(exc)})
        return EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "select" and args.what == "epoch-diff" and not (args.source_a and args.source_b):
        _emit({"status": "error", "error": "select --what epoch-diff needs --source-a and --source-b"})
        return EXIT_INVALID
    try:
        summary = args.func(args)
    except _InvalidReport as exc:
        _emit({"status": "invalid", **exc.report})
        return EXIT_INVALID
    except UsageError as exc:
        _emit({"status": "error", "error": str(exc)})
        return EXIT_INVALID
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        _emit({"status": "error", "error": f"{type(exc).__name__}: {exc}"})
        return EXIT_IO
    except (IngestionError, MapFormatError, DegenerateMapError, SelectionError,
            ValueError, KeyError) as exc:
        _emit({"status": "error", "error": f"{type(exc).__name__}: {exc}"})
        return EXIT_INVALID
    except OSError as exc:
        _emit({"status": "error", "error": f"{type(exc).__name__}: {exc}"})
        return EXIT_IO
    _emit({"status": "ok", "command": args.command, **summary})
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
