import json

from wsoleval.heatmap import write_wslm
from wsoleval.workspace import WorkspaceManifest, validate_workspace


def _manifest(tmp_path, data):
    p = tmp_path / "ws.json"
    p.write_text(json.dumps(data))
    return WorkspaceManifest.load(p)


def test_empty_workspace_is_valid(tmp_path):
    report = validate_workspace(_manifest(tmp_path, {}))
    assert report["valid"] and report["files"] == [] and report["errors"] == []


def test_wrong_magic_is_flagged_with_path(tmp_path):
    (tmp_path / "a.wslm").write_bytes(b"ABCD" + bytes(9))
    report = validate_workspace(_manifest(tmp_path, {"files": [{"path": "a.wslm", "format": "wslm"}]}))
    entry = report["files"][0]
    assert not report["valid"] and entry["status"] == "error"
    assert entry["path"].endswith("a.wslm") and "bad magic" in entry["messages"][0]


def test_unknown_image_ids_are_flagged(tmp_path):
    (tmp_path / "b.jsonl").write_text(
        '{"image_id": "ghost", "x_min": 0, "y_min": 0, "x_max": 3, "y_max": 3}\n'
        '{"image_id": "cat", "x_min": 0, "y_min": 0, "x_max": 3, "y_max": 3}\n')
    (tmp_path / "maps").mkdir()
    write_wslm(tmp_path / "maps" / "dog.wslm", [[0.0, 1.0]])
    report = validate_workspace(_manifest(tmp_path, {
        "splits": {"val": ["cat"]},
        "files": [{"path": "b.jsonl", "format": "boxes"}, {"path": "maps", "format": "map-dir"}],
    }))
    assert not report["valid"]
    assert report["files"][0]["messages"] == ["unknown image id 'ghost'"]
    assert "'dog' is not in any split" in report["files"][1]["messages"][0]


def test_split_overlap_and_missing_files(tmp_path):
    report = validate_workspace(_manifest(tmp_path, {
        "splits": {"val": ["a", "b"], "test": ["b"]},
        "files": [{"path": "nope.jsonl", "format": "boxes"}, {"path": "x", "format": "mystery"}],
    }))
    assert report["errors"] == ["image id 'b' is in both 'val' and 'test'"]
    assert report["files"][0]["messages"] == ["file not found"]
    assert "unknown format" in report["files"][1]["messages"][0]
    assert report["splits"] == {"val": 2, "test": 1}


def test_bad_rows_and_runs_are_reported(tmp_path):
    (tmp_path / "p.jsonl").write_text('{"image_id": "a", "x_min": 0, "y_min": 0, "x_max": 2, "y_max": 2}\n')
    (tmp_path / "runs.json").write_text(json.dumps({"run_id": "r", "splits": {"val": [
        {"epoch": 1}, {"epoch": 0}]}}))
    report = validate_workspace(_manifest(tmp_path, {"files": [
        {"path": "p.jsonl", "format": "proposals"}, {"path": "runs.json", "format": "runs"}]}))
    assert "line 1" in report["files"][0]["messages"][0]
    assert "strictly increasing" in report["files"][1]["messages"][0]
