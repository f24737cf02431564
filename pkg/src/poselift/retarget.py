"""Joint-rotation retargeting of matched deep poses, and per-channel tone transfer."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import rotations as rot
from .errors import ContractViolation, SingularBoneError
from .lookup import LookupTable, QueryResult, query, query_many
from .skeleton import PoseAngles, Skeleton, forward_kinematics

RETARGET_FORMAT_VERSION = 1
LEVELS = 256
_ZERO_BONE = 1e-12


def _check_pose(skeleton: Skeleton, pose) -> np.ndarray:
    pose = np.asarray(pose, dtype=float)
    if pose.shape[-2:] != (skeleton.k_d, 3):
        raise ContractViolation(f"pose must be (..., {skeleton.k_d}, 3), got {pose.shape}")
    if not np.all(np.isfinite(pose)):
        raise ContractViolation("pose contains non-finite values")
    return pose


def solve_angles(skeleton: Skeleton, deep_pose) -> PoseAngles:
    """Twist-free per-bone rotations that point every rest bone along the observed one.

    Bones are visited root-first.  Each local rotation is the shortest arc
    from the rest offset to the observed bone direction expressed in the
    parent's accumulated frame.  The root keeps the identity rotation, sits
    at the observed root position and carries the median observed/rest
    bone-length ratio as its scale.  Leading batch axes are supported.
    """
    pose = _check_pose(skeleton, deep_pose)
    parents = skeleton.parents
    offsets = skeleton.offsets
    observed = pose[..., 1:, :] - pose[..., parents[1:], :]
    lengths = np.linalg.norm(observed, axis=-1)
    short = lengths <= _ZERO_BONE
    if np.any(short):
        bone = int(np.argwhere(short)[0][-1]) + 1
        raise SingularBoneError(skeleton.bones[bone].name)
    scale = np.median(lengths / np.linalg.norm(offsets[1:], axis=-1), axis=-1)

    batch = pose.shape[:-2]
    local = np.empty((*batch, skeleton.k_d, 4))
    glob = np.empty_like(local)
    local[..., 0, :] = rot.IDENTITY
    glob[..., 0, :] = rot.IDENTITY
    for i in range(1, skeleton.k_d):
        p = parents[i]
        target = rot.rotate(rot.conjugate(glob[..., p, :]), observed[..., i - 1, :])
        local[..., i, :] = rot.shortest_arc(offsets[i], target)
        glob[..., i, :] = rot.multiply(glob[..., p, :], local[..., i, :])
    return PoseAngles(local, pose[..., 0, :].copy(), scale)


@dataclass(frozen=True)
class RetargetResult:
    angles: PoseAngles
    reconstructed: np.ndarray
    residual: np.ndarray
    match: QueryResult

    def residual_stats(self) -> dict[str, float]:
        r = self.residual
        return {"mean": float(r.mean()), "median": float(np.median(r)), "max": float(r.max())}

    def to_export(self, skeleton: Skeleton, record_id: str = "") -> dict:
        """Engine-neutral JSON document: per-bone quaternions ``[w, x, y, z]`` and root placement."""
        return {
            "format_version": RETARGET_FORMAT_VERSION,
            "id": record_id,
            "species": skeleton.species,
            "skeleton_hash": skeleton.source_hash,
            "bones": [
                {"name": b.name, "quaternion": q.tolist()}
                for b, q in zip(skeleton.bones, self.angles.rotations)
            ],
            "root_translation": self.angles.root_translation.tolist(),
            "root_scale": float(self.angles.root_scale),
            "residual": self.residual_stats(),
            "match": {
                "index": self.match.index,
                "action": self.match.action,
                "distance": self.match.distance,
            },
        }


def _check_table(skeleton: Skeleton, table: LookupTable):
    if table.k_d != skeleton.k_d or table.soft_subset != tuple(skeleton.soft_subset):
        raise ContractViolation("lookup table does not match the skeleton's keypoint layout")


def _reconstruct(skeleton, deep):
    angles = solve_angles(skeleton, deep)
    recon = forward_kinematics(skeleton, angles)
    return angles, recon, np.linalg.norm(recon - deep, axis=-1)


def retarget(skeleton: Skeleton, lifted_soft_pose, table: LookupTable, brute_force: bool = False) -> RetargetResult:
    """Complete a lifted soft pose from the table, then pose the skeleton to match it."""
    _check_table(skeleton, table)
    match = query(table, lifted_soft_pose, brute_force)
    angles, recon, residual = _reconstruct(skeleton, match.deep_pose)
    return RetargetResult(angles, recon, residual, match)


def retarget_many(skeleton: Skeleton, lifted_soft_poses, table: LookupTable, brute_force: bool = False):
    """Batched ``retarget``: returns ``(indices, distances, angles, reconstructed, residuals)``."""
    _check_table(skeleton, table)
    idx, dist = query_many(table, lifted_soft_poses, brute_force)
    angles, recon, residual = _reconstruct(skeleton, table.poses[idx])
    return idx, dist, angles, recon, residual


# ---------------------------------------------------------------- tone transfer


@dataclass(frozen=True)
class ToneMap:
    """One non-decreasing 256-entry lookup per channel, ``tables`` of shape ``(C, 256)``."""

    tables: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tables)
        if t.ndim != 2 or t.shape[1] != LEVELS:
            raise ContractViolation(f"tone tables must be (C, {LEVELS}), got {t.shape}")
        if np.any(np.diff(t.astype(int), axis=1) < 0):
            raise ContractViolation("tone tables must be non-decreasing")
        object.__setattr__(self, "tables", t.astype(np.uint8))

    def apply(self, channels) -> list[np.ndarray]:
        chans = _as_channels(channels)
        if len(chans) != len(self.tables):
            raise ContractViolation(f"expected {len(self.tables)} channels, got {len(chans)}")
        return [table[c] for table, c in zip(self.tables, chans)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.tables.tolist())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ToneMap:
        rows = [[int(v) for v in row] for row in csv.reader(io.StringIO(text)) if row]
        return cls(np.array(rows))


def _as_channels(channels) -> list[np.ndarray]:
    chans = [np.asarray(c) for c in channels]
    for c in chans:
        if c.size == 0:
            raise ContractViolation("empty channel")
        if not np.issubdtype(c.dtype, np.integer) or c.min() < 0 or c.max() >= LEVELS:
            raise ContractViolation("channels must hold 8-bit integer intensities")
    return [c.astype(np.intp) for c in chans]


def match_table(source_hist, target_hist) -> np.ndarray:
    """Histogram specification for one channel.

    Level ``v`` maps to the smallest source level ``u`` with
    ``S(u) >= T(v)``, where ``S`` and ``T`` are the cumulative source and
    target distributions.  A target concentrated on a single level maps to
    the source median instead.
    """
    src = np.asarray(source_hist, dtype=float)
    tgt = np.asarray(target_hist, dtype=float)
    if src.shape != (LEVELS,) or tgt.shape != (LEVELS,):
        raise ContractViolation(f"histograms must have {LEVELS} bins")
    if np.any(src < 0) or src.sum() <= 0 or np.any(tgt < 0) or tgt.sum() <= 0:
        raise ContractViolation("histograms must be non-negative with positive mass")
    s_cdf = np.cumsum(src) / src.sum()
    t_cdf = np.cumsum(tgt) / tgt.sum()
    s_cdf[-1] = t_cdf[-1] = 1.0
    table = np.searchsorted(s_cdf, t_cdf, side="left")
    occupied = np.flatnonzero(tgt)
    if len(occupied) == 1:
        table[occupied[0]] = np.searchsorted(s_cdf, 0.5, side="left")
    return np.minimum(table, LEVELS - 1)


def tone_transfer(source_hist, target_pixels) -> tuple[list[np.ndarray], ToneMap]:
    """Remap each target channel so its histogram follows the matching source histogram.

    ``source_hist`` is ``(C, 256)`` counts; ``target_pixels`` is a sequence of
    ``C`` integer arrays of any shape with values in ``[0, 255]``.
    """
    hist = np.asarray(source_hist, dtype=float)
    chans = _as_channels(target_pixels)
    if hist.ndim != 2 or len(hist) != len(chans):
        raise ContractViolation(f"need one {LEVELS}-bin source histogram per channel")
    tables = [match_table(h, np.bincount(c.ravel(), minlength=LEVELS)) for h, c in zip(hist, chans)]
    tone = ToneMap(np.stack(tables))
    return tone.apply(chans), tone


def channel_histograms(channels) -> np.ndarray:
    """``(C, 256)`` level counts, e.g. to build a source histogram from a reference image."""
    return np.stack([np.bincount(c.ravel(), minlength=LEVELS) for c in _as_channels(channels)])


def export_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"
