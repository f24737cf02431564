"""Species skeletons, joint rotations and forward kinematics.

Every bone doubles as a keypoint: bone ``i`` ends at keypoint ``i`` and its
``rest_offset`` is the vector from the parent keypoint in the rest pose.
Bones are stored root-first so a single pass over the list evaluates FK.
The world frame is y-up with the rest pose facing +z.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np

from . import rotations as rot
from .errors import ContractViolation, FormatVersionError

Species = Literal["macaque", "horse"]
SPECIES = ("macaque", "horse")
SKELETON_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Bone:
    name: str
    parent: int | None
    rest_offset: np.ndarray


@dataclass(frozen=True)
class Skeleton:
    species: str
    bones: tuple[Bone, ...]
    soft_subset: tuple[int, ...]
    correspondence: dict[str, str] = field(default_factory=dict)
    source_hash: str = ""

    def __post_init__(self):
        for i, bone in enumerate(self.bones):
            if bone.parent is None:
                if i != 0:
                    raise ContractViolation(f"bone {bone.name!r} has no parent but is not first")
            elif not 0 <= bone.parent < i:
                raise ContractViolation(f"bone {bone.name!r} is not topologically sorted")
            elif np.linalg.norm(bone.rest_offset) == 0:
                raise ContractViolation(f"bone {bone.name!r} has a zero rest offset")
        soft = np.asarray(self.soft_subset)
        if soft.size and (np.any(np.diff(soft) <= 0) or soft[0] < 0 or soft[-1] >= len(self.bones)):
            raise ContractViolation("soft_subset must be strictly increasing bone indices")

    @property
    def k_d(self) -> int:
        return len(self.bones)

    @property
    def k_s(self) -> int:
        return len(self.soft_subset)

    @property
    def keypoint_names(self) -> list[str]:
        return [b.name for b in self.bones]

    @property
    def parents(self) -> np.ndarray:
        return np.array([-1 if b.parent is None else b.parent for b in self.bones])

    @property
    def offsets(self) -> np.ndarray:
        return np.stack([b.rest_offset for b in self.bones])

    def index(self, name: str) -> int:
        return self.keypoint_names.index(name)

    def rest_pose(self) -> np.ndarray:
        return forward_kinematics(self, PoseAngles.identity(self.k_d))

    def to_dict(self) -> dict:
        return {
            "version": SKELETON_FORMAT_VERSION,
            "species": self.species,
            "bones": [
                {"name": b.name, "parent": b.parent, "rest_offset": [float(v) for v in b.rest_offset]}
                for b in self.bones
            ],
            "soft_subset": list(self.soft_subset),
            "correspondence": dict(self.correspondence),
        }


@dataclass(frozen=True)
class PoseAngles:
    """Per-bone local rotations (unit quaternions ``[w, x, y, z]``) plus root placement.

    ``rotations`` may carry leading batch axes, i.e. shape ``(..., k_d, 4)``.
    """

    rotations: np.ndarray
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    root_scale: float = 1.0

    def __post_init__(self):
        q = np.asarray(self.rotations, dtype=float)
        if q.shape[-1] != 4:
            raise ContractViolation(f"rotations must end in 4 components, got {q.shape}")
        norms = np.linalg.norm(q, axis=-1)
        if not np.all(np.isfinite(q)) or np.any(norms == 0):
            raise ContractViolation("rotations must be finite and non-zero")
        object.__setattr__(self, "rotations", q / norms[..., None])
        object.__setattr__(self, "root_translation", np.asarray(self.root_translation, dtype=float))
        if not np.all(np.asarray(self.root_scale) > 0):
            raise ContractViolation("root_scale must be positive")

    @classmethod
    def identity(cls, k_d: int) -> PoseAngles:
        return cls(np.tile(rot.IDENTITY, (k_d, 1)))

    @classmethod
    def from_matrices(cls, matrices, root_translation=(0.0, 0.0, 0.0), root_scale=1.0) -> PoseAngles:
        mats = np.asarray(matrices, dtype=float)
        try:
            quats = np.stack([rot.from_matrix(m) for m in mats])
        except ValueError as exc:
            raise ContractViolation(str(exc)) from exc
        return cls(quats, np.asarray(root_translation, dtype=float), root_scale)

    def matrices(self) -> np.ndarray:
        return rot.to_matrix(self.rotations)


def forward_kinematics(skeleton: Skeleton, angles: PoseAngles) -> np.ndarray:
    """World keypoint positions, shape ``(..., k_d, 3)``.

    ``pos[i] = pos[parent] + scale * (G[parent] * R[i]) rest_offset[i]`` with
    ``G`` the accumulated rotation and the root placed at ``root_translation``.
    """
    q = angles.rotations
    if q.shape[-2] != skeleton.k_d:
        raise ContractViolation(f"expected {skeleton.k_d} rotations, got {q.shape[-2]}")
    batch = q.shape[:-2]
    scale = np.asarray(angles.root_scale, dtype=float)[..., None]
    glob = np.empty(q.shape)
    pos = np.empty((*batch, skeleton.k_d, 3))
    pos[..., 0, :] = np.broadcast_to(angles.root_translation, (*batch, 3))
    glob[..., 0, :] = q[..., 0, :]
    for i in range(1, skeleton.k_d):
        bone = skeleton.bones[i]
        p = bone.parent
        glob[..., i, :] = rot.multiply(glob[..., p, :], q[..., i, :])
        pos[..., i, :] = pos[..., p, :] + scale * rot.rotate(glob[..., i, :], bone.rest_offset)
    return pos


def soft_projection(skeleton: Skeleton, pose: np.ndarray) -> np.ndarray:
    """Rows of ``pose`` at the skeleton's soft-subset indices, in order."""
    pose = np.asarray(pose)
    if pose.shape[-2] != skeleton.k_d:
        raise ContractViolation(f"pose has {pose.shape[-2]} rows, skeleton has {skeleton.k_d}")
    return pose[..., list(skeleton.soft_subset), :]


def skeleton_from_dict(doc: dict, source_hash: str = "") -> Skeleton:
    if doc.get("version") != SKELETON_FORMAT_VERSION:
        raise FormatVersionError(f"unsupported skeleton version {doc.get('version')!r}")
    bones = tuple(
        Bone(b["name"], b["parent"], np.asarray(b["rest_offset"], dtype=float)) for b in doc["bones"]
    )
    return Skeleton(
        species=doc["species"],
        bones=bones,
        soft_subset=tuple(doc["soft_subset"]),
        correspondence=dict(doc.get("correspondence", {})),
        source_hash=source_hash,
    )


def load_skeleton(path) -> Skeleton:
    raw = Path(path).read_bytes()
    return skeleton_from_dict(json.loads(raw), hashlib.sha256(raw).hexdigest())


def species_skeleton(species: Species) -> Skeleton:
    """The canonical skeleton shipped with the package."""
    if species not in SPECIES:
        raise ContractViolation(f"unknown species {species!r}")
    raw = resources.files("poselift.data").joinpath(f"{species}_skeleton.json").read_bytes()
    return skeleton_from_dict(json.loads(raw), hashlib.sha256(raw).hexdigest())
