"""Lifting metrics (MSE, PDJ@x) and the variant comparison report."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ContractViolation(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if pred.ndim == 2:
        pred, gt = pred[None], gt[None]
    if pred.ndim != 3 or pred.shape[0] < 1:
        raise ContractViolation(f"expected (n, k, dim) arrays, got {pred.shape}")
    return pred, gt


def mse(pred, gt) -> float:
    """Mean squared difference over every scalar component."""
    pred, gt = _pair(pred, gt)
    return float(np.mean((pred - gt) ** 2))


def bbox_diagonal(gt) -> np.ndarray:
    """Per-sample diagonal of the ground truth's axis-aligned bounding box."""
    gt = np.asarray(gt, dtype=float)
    if gt.ndim == 2:
        gt = gt[None]
    return np.linalg.norm(gt.max(axis=1) - gt.min(axis=1), axis=-1)


def pdj(pred, gt, x: float, bbox_diag=None) -> float:
    """Fraction of (sample, keypoint) pairs within ``x * d`` of the ground truth.

    ``d`` is the per-sample bounding-box diagonal of ``gt`` unless given.
    """
    pred, gt = _pair(pred, gt)
    if not x > 0:
        raise ContractViolation("threshold fraction must be positive")
    d = bbox_diagonal(gt) if bbox_diag is None else np.broadcast_to(np.asarray(bbox_diag, float), (len(gt),))
    if np.any(d <= 0):
        raise ContractViolation("bounding-box diagonal must be positive")
    dist = np.linalg.norm(pred - gt, axis=-1)
    return float(np.mean(dist <= x * d[:, None]))


@dataclass
class EvalRow:
    variant: str
    mse: float
    pdj_02: float
    pdj_005: float


@dataclass
class EvalReport:
    rows: list[EvalRow]
    dataset_id: str = ""
    split: str = ""
    metadata: dict = field(default_factory=lambda: {"pdj_bbox": "3d"})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "mse", "pdj@0.2", "pdj@0.05"])
        for r in self.rows:
            w.writerow([r.variant, f"{r.mse:.6f}", f"{r.pdj_02:.6f}", f"{r.pdj_005:.6f}"])
        return buf.getvalue()

    def to_text(self) -> str:
        width = max([len("Model")] + [len(r.variant) for r in self.rows])
        head = f"{'Model':<{width}} | {'MSE':>7} {'PDJ@0.2':>8} {'PDJ@0.05':>9}"
        lines = [f"dataset: {self.dataset_id}", f"split: {self.split}", head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.variant:<{width}} | {r.mse:>7.3f} {r.pdj_02:>8.3f} {r.pdj_005:>9.3f}")
        return "\n".join(lines) + "\n"


def evaluate(variants, inputs, targets, dataset_id: str = "", split: str = "") -> EvalReport:
    """Score each ``(name, model)`` on the given validation inputs and targets."""
    from .lifter import lift

    targets = np.asarray(targets, dtype=float)
    rows = []
    for name, model in variants:
        if model.config.k_s != targets.shape[1]:
            raise ContractViolation(f"model {name!r} expects k_s={model.config.k_s}, data has {targets.shape[1]}")
        pred = lift(model, inputs)
        rows.append(EvalRow(name, mse(pred, targets), pdj(pred, targets, 0.2), pdj(pred, targets, 0.05)))
    return EvalReport(rows, dataset_id, split)
