import math

import numpy as np
import pytest

import vital


def test_losses():
    assert vital.cross_entropy(0.5, 1) == pytest.approx(math.log(2), abs=1e-12)
    assert vital.cost_sensitive(0.1, 0) == pytest.approx(0.1 * -math.log(0.9), abs=1e-12)
    assert vital.entropy(0.5) == pytest.approx(math.log(2), abs=1e-12)


def test_canonical_masks():
    masks = vital.canonical_masks()
    assert len(masks) == 9
    assert all(m.sum() == 8 for m in masks)
    assert np.min(np.stack(masks), axis=0).max() == 0


def test_metrics():
    a = vital.BoundingBox(0, 0, 10, 10)
    b = vital.BoundingBox(5, 0, 10, 10)
    assert vital.iou(a, b) == pytest.approx(1 / 3)
    assert vital.center_error(a, vital.BoundingBox(3, 4, 10, 10)) == 5
    assert vital.success_auc([a], [a]) == pytest.approx(20 / 21)
    report = vital.evaluate([a, b], [a, a])
    assert report["precision_20"] == 1.0
    assert len(report["success"]) == 21


def test_config_rejects_unknown_keys():
    cfg = vital.RunConfig()
    cfg.set("train.lambda", "2")
    assert cfg.get("train.lambda") == "2"
    with pytest.raises(vital.ConfigError):
        cfg.set("no.such.key", "1")


def test_generate_and_track_short_sequence():
    names = vital.suite_names(1)
    assert len(names) == 10
    frames, gt = vital.generate_sequence(names[0], 1)
    assert frames[0].shape == (64, 64)
    assert 0.0 <= frames[0].min() and frames[0].max() <= 1.0
    traj = vital.track(frames[:4], gt[0])
    assert len(traj) == 4
    assert traj[0] == gt[0]
    again = vital.track(frames[:4], gt[0])
    assert [(t.x, t.y, t.w, t.h) for t in traj] == [(t.x, t.y, t.w, t.h) for t in again]


def test_gradcheck():
    r = vital.gradcheck(seed=2, configurations=3)
    assert r["passed"]
    assert r["max_rel_error"] < 1e-4
