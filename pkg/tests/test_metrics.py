import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import loop_mse, loop_pdj

from poselift import rotations as rot
from poselift.errors import ContractViolation
from poselift.lifter import LifterConfig, LifterModel
from poselift.metrics import EvalReport, EvalRow, bbox_diagonal, evaluate, mse, pdj


def test_mse_examples():
    gt = np.random.default_rng(0).uniform(size=(4, 13, 3))
    assert mse(gt, gt) == 0.0
    assert np.isclose(mse(gt + 0.2, gt), 0.04)


def test_mse_shape_mismatch():
    with pytest.raises(ContractViolation):
        mse(np.zeros((2, 3, 3)), np.zeros((2, 4, 3)))


def test_pdj_examples():
    gt = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]])  # diagonal 1
    pred = gt.copy()
    assert pdj(pred, gt, 0.05) == 1.0
    pred[0, 0] = [0.1, 0.0, 0.0]
    single = pdj(pred[:, :1], gt[:, :1], 0.2, bbox_diag=1.0)
    assert single == 1.0
    assert pdj(pred[:, :1], gt[:, :1], 0.05, bbox_diag=1.0) == 0.0


def test_pdj_rejects_bad_inputs():
    gt = np.zeros((1, 2, 3))
    with pytest.raises(ContractViolation):
        pdj(gt, gt, 0.2)  # zero-size bounding box
    with pytest.raises(ContractViolation):
        pdj(gt + [[[0, 0, 0], [1, 0, 0]]], gt + [[[0, 0, 0], [1, 0, 0]]], 0.0)


@given(st.integers(0, 2**32 - 1))
def test_metrics_match_loop_oracles(seed):
    rng = np.random.default_rng(seed)
    n, k = rng.integers(1, 6), rng.integers(2, 15)
    gt = rng.uniform(size=(n, k, 3))
    pred = gt + rng.normal(scale=0.1, size=gt.shape)
    assert abs(mse(pred, gt) - loop_mse(pred, gt)) < 1e-12
    for x in (0.05, 0.1, 0.2):
        assert abs(pdj(pred, gt, x) - loop_pdj(pred, gt, x)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_pdj_monotone_in_threshold(seed):
    rng = np.random.default_rng(seed)
    gt = rng.uniform(size=(3, 13, 3))
    pred = gt + rng.normal(scale=0.15, size=gt.shape)
    values = [pdj(pred, gt, x) for x in np.linspace(0.01, 1.0, 25)]
    assert all(b >= a for a, b in zip(values, values[1:]))


@given(st.integers(0, 2**32 - 1))
def test_pdj_rigid_invariance(seed):
    rng = np.random.default_rng(seed)
    gt = rng.uniform(size=(4, 13, 3))
    pred = gt + rng.normal(scale=0.1, size=gt.shape)
    q = rot.random(rng, (4, 1))
    t = rng.normal(size=(4, 1, 3))
    moved_gt, moved_pred = rot.rotate(q, gt) + t, rot.rotate(q, pred) + t
    d = bbox_diagonal(gt)
    assert pdj(moved_pred, moved_gt, 0.1, bbox_diag=d) == pdj(pred, gt, 0.1, bbox_diag=d)


@given(st.integers(0, 2**32 - 1))
def test_mse_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(size=(2, 5, 3)), rng.uniform(size=(2, 5, 3))
    assert mse(a, b) == mse(b, a)
    assert mse(a, a) == 0.0


def test_evaluate_report_rows():
    rng = np.random.default_rng(1)
    x, y = rng.uniform(size=(10, 13, 2)), rng.uniform(size=(10, 13, 3))
    m0 = LifterModel.initialize(LifterConfig(heads=0))
    m4 = LifterModel.initialize(LifterConfig(heads=4))
    report = evaluate([("a", m0), ("b", m4), ("a again", m0)], x, y, "toy", "val")
    assert [r.variant for r in report.rows] == ["a", "b", "a again"]
    first, _, again = report.rows
    assert (first.mse, first.pdj_02, first.pdj_005) == (again.mse, again.pdj_02, again.pdj_005)
    for r in report.rows:
        assert r.mse >= 0 and 0 <= r.pdj_005 <= r.pdj_02 <= 1
    lines = report.to_csv().splitlines()
    assert lines[0] == "variant,mse,pdj@0.2,pdj@0.05" and len(lines) == 4
    assert report.metadata["pdj_bbox"] == "3d"


def test_evaluate_checks_keypoint_count():
    m = LifterModel.initialize(LifterConfig(k_s=16))
    with pytest.raises(ContractViolation):
        evaluate([("m", m)], np.zeros((2, 13, 2)), np.zeros((2, 13, 3)))


def test_text_report_layout():
    report = EvalReport([EvalRow("w/o attention", 0.028, 0.7, 0.2), EvalRow("H=4", 0.016, 0.8, 0.3)], "d", "s")
    text = report.to_text().splitlines()
    assert "MSE" in text[2] and "PDJ@0.2" in text[2] and "PDJ@0.05" in text[2]
    assert text[4].startswith("w/o attention |")
