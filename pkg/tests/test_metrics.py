import math

import numpy as np
import pytest

from oracles import nested_loop_ious
from wsoleval.geometry import BBox, iou
from wsoleval.heatmap import NormalizedMap, ThresholdGrid, normalize
from wsoleval.metrics import (
    AnnotatedSample,
    BoxAccCurve,
    MissingAnnotationError,
    Sample,
    box_acc_curve,
    eval_measure,
    evaluate,
    image_loc_score,
    image_scores_at,
    max_box_acc,
    mean_iou_at,
    pointing_accuracy,
    pointing_game,
)
from wsoleval.synthetic import blob_dataset, fixed_iou_sample, indicator_dataset, random_box


def test_image_loc_score_examples():
    g = BBox(2, 2, 8, 8)
    assert image_loc_score([g], [g]) == 1.0
    assert image_loc_score([], [g]) == 0.0
    with pytest.raises(ValueError, match="no reference boxes"):
        image_loc_score([g], [])


def test_image_loc_score_is_max_over_pairs():
    rng = np.random.default_rng(2)
    for _ in range(100):
        preds = [random_box(rng, 40, 40, 2) for _ in range(3)]
        gts = [random_box(rng, 40, 40, 2) for _ in range(2)]
        assert image_loc_score(preds, gts) == max(iou(p, g) for p in preds for g in gts)


def test_perfect_maps_score_one_everywhere(backend):
    ds = indicator_dataset(12)
    curve = box_acc_curve(ds, ThresholdGrid(20))
    assert curve.acc[1:].tolist() == [1.0] * 19
    for tau in curve.thresholds[1:]:
        assert mean_iou_at(ds, float(tau)) == 1.0


def test_degenerate_maps_score_zero(backend):
    ds = [Sample(f"z{i}", normalize(np.zeros((8, 8))), [BBox(1, 1, 4, 4)]) for i in range(3)]
    curve = box_acc_curve(ds, ThresholdGrid(10))
    assert curve.acc[1:].tolist() == [0.0] * 9


@pytest.mark.parametrize("mode", ["all", "largest"])
def test_box_acc_curve_matches_nested_loops(backend, mode):
    ds = blob_dataset(20, width=32, height=32, seed=4, distractors=2)
    grid = ThresholdGrid(10)
    curve = box_acc_curve(ds, grid, mode=mode)
    ref = np.array(nested_loop_ious(ds, grid.thresholds, mode))
    assert np.allclose(curve.ious, ref, rtol=0, atol=1e-12)
    assert np.allclose(curve.acc, (ref >= 0.5).mean(axis=0), atol=1e-12)
    for j, tau in enumerate(grid.thresholds):
        assert mean_iou_at(ds, float(tau), mode) == pytest.approx(ref[:, j].mean(), abs=1e-12)


def test_curve_independent_of_threads_and_order(backend):
    ds = blob_dataset(15, seed=8)
    grid = ThresholdGrid(25)
    a = box_acc_curve(ds, grid, threads=1)
    b = box_acc_curve(ds, grid, threads=4)
    c = box_acc_curve(ds[::-1], grid)
    assert np.array_equal(a.acc, b.acc) and np.array_equal(a.acc, c.acc)
    assert max_box_acc(a) == max_box_acc(c)


def test_duplicating_dataset_keeps_metrics():
    ds = blob_dataset(10, seed=9)
    grid = ThresholdGrid(30)
    a = box_acc_curve(ds, grid)
    b = box_acc_curve(ds + ds, grid)
    assert np.array_equal(a.acc, b.acc)
    assert mean_iou_at(ds, 0.4) == mean_iou_at(ds + ds, 0.4)


def test_all_mode_dominates_largest():
    ds = blob_dataset(20, seed=12, distractors=3)
    grid = ThresholdGrid(20)
    a = box_acc_curve(ds, grid, mode="all")
    lg = box_acc_curve(ds, grid, mode="largest")
    assert np.all(a.ious >= lg.ious)


def test_box_acc_is_monotone_in_delta():
    ds = blob_dataset(20, seed=13)
    grid = ThresholdGrid(20)
    lo = box_acc_curve(ds, grid, delta=0.3).acc
    hi = box_acc_curve(ds, grid, delta=0.7).acc
    assert np.all(lo >= hi)


def test_box_acc_validation():
    with pytest.raises(ValueError):
        box_acc_curve([], ThresholdGrid(5))
    with pytest.raises(ValueError):
        box_acc_curve(indicator_dataset(2), ThresholdGrid(5), delta=1.0)


def _curve(acc, thresholds):
    return BoxAccCurve(np.array(thresholds), np.array(acc), 0.5, "all", np.zeros((1, len(acc))))


def test_max_box_acc_examples():
    assert max_box_acc(_curve([0.7] * 4, [0, 0.25, 0.5, 0.75])) == (0.0, 0.7)
    assert max_box_acc(_curve([0.1, 0.9, 0.3], [0, 1 / 3, 2 / 3])) == (1 / 3, 0.9)
    rng = np.random.default_rng(0)
    acc = rng.integers(0, 50, 1000) / 50
    thr = np.arange(1000) / 1000
    best = 0
    for j in range(1000):
        if acc[j] > acc[best]:
            best = j
    assert max_box_acc(_curve(acc, thr)) == (thr[best], acc[best])


def test_mean_iou_half_perfect_half_empty():
    box = BBox(2, 2, 6, 6)
    good = fixed_iou_sample("a", 1.0)
    empty = Sample("b", normalize(np.zeros((32, 32))), [box])
    assert mean_iou_at([good, empty], 0.5) == 0.5


def test_fixed_iou_samples_have_constant_iou():
    for target in (0.49, 0.501, 0.99):
        s = fixed_iou_sample("x", target)
        ious = image_scores_at([s], 0.3) + image_scores_at([s], 1.0)
        assert all(v == pytest.approx(target, abs=1e-12) for v in ious)


def test_pointing_game_examples():
    box = BBox(10, 10, 20, 20)
    m = np.zeros((32, 32))
    m[15, 15] = 1
    assert pointing_game(normalize(m), [box]).hit
    m2 = np.zeros((32, 32))
    m2[2, 2] = 1
    assert not pointing_game(normalize(m2), [box]).hit
    r = pointing_game(normalize(np.ones((4, 4))), [box])
    assert not r.hit and r.degenerate
    assert pointing_accuracy([pointing_game(normalize(m), [box]), pointing_game(normalize(m2), [box])]) == 0.5


def test_eval_measure_examples():
    one = indicator_dataset(1)
    items = [AnnotatedSample(s.image_id, s.nmap, {"oracle": s.boxes, "ss": s.boxes}) for s in one]
    assert eval_measure(items, "oracle") == 1.0
    # pseudo boxes equal to oracle boxes give exactly the same value
    ds = blob_dataset(10, seed=1)
    items = [AnnotatedSample(s.image_id, s.nmap, {"oracle": s.boxes, "ss": list(s.boxes)}) for s in ds]
    grid = ThresholdGrid(40)
    for policy in ("sweep", "otsu", 0.3):
        for measure in ("iou-at-delta", "raw-iou"):
            assert eval_measure(items, "ss", measure, policy, grid=grid) == \
                eval_measure(items, "oracle", measure, policy, grid=grid)


def test_eval_measure_hand_placed_pseudo_boxes():
    # 10 indicator maps of the block (4,4)-(14,14); pseudo boxes stretched by hand
    pred = BBox(4, 4, 14, 14)
    m = np.zeros((32, 32))
    m[4:14, 4:14] = 1
    nmap = normalize(m)
    heights = [10, 11, 12, 14, 15, 18, 20, 21, 25, 28]
    items = [AnnotatedSample(f"i{k}", nmap, {"ss": [BBox(4, 4, 14, 4 + h)]}) for k, h in enumerate(heights)]
    expected = [10 / h for h in heights]
    assert eval_measure(items, "ss", "raw-iou", 0.5) == pytest.approx(math.fsum(expected) / 10, abs=1e-15)
    assert eval_measure(items, "ss", "iou-at-delta", 0.5) == sum(v >= 0.5 for v in expected) / 10
    assert iou(pred, BBox(4, 4, 14, 14)) == 1.0


def test_eval_measure_missing_source_names_image():
    s = indicator_dataset(1)[0]
    items = [AnnotatedSample("cat_17", s.nmap, {"oracle": s.boxes})]
    with pytest.raises(MissingAnnotationError, match="cat_17"):
        eval_measure(items, "rpn")


def test_evaluate_policies():
    ds = blob_dataset(12, seed=21)
    grid = ThresholdGrid(50)
    sweep = evaluate(ds, "sweep", grid=grid)
    assert sweep.max_box_acc == max_box_acc(box_acc_curve(ds, grid))[1]
    fixed = evaluate(ds, sweep.tau_star, grid=grid)
    assert fixed.max_box_acc == sweep.max_box_acc
    assert fixed.mean_iou_at_tau == pytest.approx(sweep.mean_iou_at_tau, abs=1e-15)
    otsu = evaluate(ds, "otsu")
    assert otsu.tau_star is None and 0 <= otsu.max_box_acc <= 1
    d = sweep.to_dict()
    assert d["num_images"] == 12 and len(sweep.per_image_rows()) == 12


def test_otsu_policy_scores_degenerate_maps_zero():
    ds = [Sample("flat", NormalizedMap(np.zeros((5, 5)), True), [BBox(0, 0, 2, 2)])]
    assert evaluate(ds, "otsu").mean_iou_at_tau == 0.0
