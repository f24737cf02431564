"""Synthetic dataset generation: animate, orbit a camera, project, normalize.

Every frame is a pure function of ``(seed, action index, frame index)``, so the
output does not depend on generation order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .animation import ACTION_NAMES, ActionSequence
from .errors import ContractViolation, DegenerateExtentError, DegenerateProjectionError, FormatVersionError
from .skeleton import Skeleton, forward_kinematics, soft_projection

log = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
DEFAULT_COUNTS = {"macaque": 8000, "horse": 6000}
PROJECTION_EPS = 1e-9


@dataclass
class OrbitConfig:
    radius_range: tuple[float, float] = (2.5, 4.0)
    elevation_range: tuple[float, float] = (math.radians(5.0), math.radians(35.0))
    revolutions: float = 2.0


@dataclass
class GenConfig:
    seed: int = 0
    fps: float = 10.0
    target_count: int | None = None  # None -> species default
    scale_range: tuple[float, float] = (0.8, 1.2)
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    image_size: tuple[int, int] = (640, 480)
    fov_margin: float = 0.1

    def __post_init__(self):
        if isinstance(self.orbit, dict):
            self.orbit = OrbitConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in self.orbit.items()})
        self.scale_range = tuple(self.scale_range)
        self.image_size = tuple(self.image_size)
        if not self.fps > 0:
            raise ContractViolation("fps must be positive")
        if not 0 < self.scale_range[0] <= self.scale_range[1]:
            raise ContractViolation("scale_range must be positive and ordered")
        if self.target_count is not None and self.target_count <= 0:
            raise ContractViolation("target_count must be positive")
        if self.seed < 0:
            raise ContractViolation("seed must be non-negative")
        if self.orbit.radius_range[0] <= self.subject_radius * (1 + self.fov_margin):
            raise ContractViolation("orbit radius must keep the camera outside the subject")

    @property
    def subject_radius(self) -> float:
        """Bounding-sphere radius of the largest scaled unit-cube subject."""
        return self.scale_range[1] * math.sqrt(3.0) / 2.0

    def count_for(self, species: str) -> int:
        return self.target_count if self.target_count is not None else DEFAULT_COUNTS[species]


@dataclass(frozen=True)
class Camera:
    position: np.ndarray
    target: np.ndarray
    fov_y: float
    image_size: tuple[int, int]

    def __post_init__(self):
        if np.allclose(self.position, self.target):
            raise ContractViolation("camera position equals its target")
        if not 0 < self.fov_y < math.pi:
            raise ContractViolation("fov_y must lie in (0, pi)")
        if min(self.image_size) <= 0:
            raise ContractViolation("image size must be positive")

    def rotation(self) -> np.ndarray:
        """World-to-camera rotation; rows are (right, down, forward)."""
        forward = np.asarray(self.target, float) - np.asarray(self.position, float)
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, [0.0, 1.0, 0.0])
        if np.linalg.norm(right) < 1e-9:
            right = np.cross(forward, [0.0, 0.0, 1.0])
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        return np.stack([right, down, forward])

    def intrinsics(self) -> tuple[float, float, float, float]:
        w, h = self.image_size
        f = 0.5 * h / math.tan(0.5 * self.fov_y)
        return f, f, 0.5 * w, 0.5 * h

    def to_dict(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "target": [float(v) for v in self.target],
            "fov_y": float(self.fov_y),
            "image_size": [int(v) for v in self.image_size],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Camera:
        return cls(np.asarray(d["position"]), np.asarray(d["target"]), d["fov_y"], tuple(d["image_size"]))


def frame_rng(seed: int, action_index: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, action_index, frame_index])


def orbit_camera(config: GenConfig, t: float, rng: np.random.Generator) -> Camera:
    """Camera on a spherical spiral around the origin, looking at it.

    Azimuth advances linearly with ``t``; elevation and radius are drawn from
    ``rng``.  The vertical fov is the smallest one that keeps the subject's
    bounding sphere (plus margin) inside the frustum on both image axes.
    """
    if not 0.0 <= t <= 1.0:
        raise ContractViolation(f"t must lie in [0, 1], got {t}")
    orbit = config.orbit
    azimuth = 2.0 * math.pi * orbit.revolutions * t
    elevation = rng.uniform(*orbit.elevation_range)
    radius = rng.uniform(*orbit.radius_range)
    position = radius * np.array(
        [math.cos(elevation) * math.sin(azimuth), math.sin(elevation), math.cos(elevation) * math.cos(azimuth)]
    )
    half = math.asin(min(1.0, (1.0 + config.fov_margin) * config.subject_radius / radius))
    w, h = config.image_size
    fov_y = 2.0 * math.atan(math.tan(half) * max(1.0, h / w))
    return Camera(position, np.zeros(3), fov_y, tuple(config.image_size))


def project(camera: Camera, pose) -> np.ndarray:
    """Pinhole projection of world points ``(k, 3)`` to pixel coordinates ``(k, 2)``."""
    pose = np.asarray(pose, dtype=float)
    cam = (pose - camera.position) @ camera.rotation().T
    z = cam[..., 2]
    if np.any(z <= PROJECTION_EPS):
        raise DegenerateProjectionError("point at or behind the camera plane")
    fx, fy, cx, cy = camera.intrinsics()
    return np.stack([fx * cam[..., 0] / z + cx, fy * cam[..., 1] / z + cy], axis=-1)


def _normalize_extent(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ContractViolation("need at least two points")
    lo = points.min(axis=0)
    extent = (points.max(axis=0) - lo).max()
    if not extent > 0:
        raise DegenerateExtentError("all points coincide")
    return (points - lo) / extent


def normalize2d(raw) -> np.ndarray:
    """Shift to the per-axis minimum and divide by the single largest extent."""
    return _normalize_extent(raw)


def normalize3d(pose) -> np.ndarray:
    """Uniformly fit a point cloud into the unit cube, anchored at the minimum corner."""
    return _normalize_extent(pose)


@dataclass
class DatasetRecord:
    id: str
    species: str
    action: str
    frame_index: int
    k2d_norm: np.ndarray
    k3d_norm: np.ndarray
    camera: Camera
    subject_scale: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "species": self.species,
            "action": self.action,
            "frame_index": int(self.frame_index),
            "k2d_norm": self.k2d_norm.tolist(),
            "k3d_norm": self.k3d_norm.tolist(),
            "camera": self.camera.to_dict(),
            "subject_scale": float(self.subject_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DatasetRecord:
        return cls(
            id=d["id"],
            species=d["species"],
            action=d["action"],
            frame_index=d["frame_index"],
            k2d_norm=np.asarray(d["k2d_norm"], dtype=float),
            k3d_norm=np.asarray(d["k3d_norm"], dtype=float),
            camera=Camera.from_dict(d["camera"]),
            subject_scale=d["subject_scale"],
        )


def action_quotas(actions: Sequence[ActionSequence], total: int) -> list[int]:
    """Split ``total`` across actions in proportion to duration (largest remainder)."""
    durations = np.array([a.duration for a in actions], dtype=float)
    exact = total * durations / durations.sum()
    quotas = np.floor(exact).astype(int)
    order = sorted(range(len(actions)), key=lambda i: (-(exact[i] - quotas[i]), i))
    for i in order[: total - quotas.sum()]:
        quotas[i] += 1
    return quotas.tolist()


def _check_coverage(skeleton: Skeleton, actions: Sequence[ActionSequence]):
    expected = ACTION_NAMES.get(skeleton.species)
    names = [a.name for a in actions]
    if len(set(names)) != len(names):
        raise ContractViolation("duplicate action names")
    if expected is not None and set(names) != set(expected):
        missing = sorted(set(expected) - set(names))
        extra = sorted(set(names) - set(expected))
        raise ContractViolation(f"action coverage mismatch: missing {missing}, unexpected {extra}")


def place_subject(pose: np.ndarray, scale: float) -> np.ndarray:
    """Center the pose's bounding box at the origin and fit it in a cube of side ``scale``."""
    lo, hi = pose.min(axis=-2), pose.max(axis=-2)
    return (pose - 0.5 * (lo + hi)) * (scale / (hi - lo).max())


def _make_record(config, skeleton, action, a_idx, f_idx, world, quota) -> DatasetRecord:
    rng = frame_rng(config.seed, a_idx, f_idx)
    camera = orbit_camera(config, (f_idx / quota) % 1.0, rng)
    scale = rng.uniform(*config.scale_range)
    placed = place_subject(world, scale)
    pixels = project(camera, soft_projection(skeleton, placed))
    return DatasetRecord(
        id=f"{skeleton.species}-{a_idx:02d}-{f_idx:05d}",
        species=skeleton.species,
        action=action.name,
        frame_index=f_idx,
        k2d_norm=normalize2d(pixels),
        k3d_norm=normalize3d(placed),
        camera=camera,
        subject_scale=float(scale),
    )


def generate(
    config: GenConfig,
    skeleton: Skeleton,
    actions: Sequence[ActionSequence],
    strict: bool = True,
) -> Iterator[DatasetRecord]:
    """Yield records ordered by (action, frame) until every action's quota is met.

    Frames that fail projection or normalization are skipped with a warning
    and replaced by later frames of the same action.
    """
    if not actions:
        raise ContractViolation("no actions given")
    if strict:
        _check_coverage(skeleton, actions)
    quotas = action_quotas(actions, config.count_for(skeleton.species))
    for a_idx, (action, quota) in enumerate(zip(actions, quotas)):
        emitted, next_frame = 0, 0
        while emitted < quota:
            frames = np.arange(next_frame, next_frame + quota - emitted)
            if next_frame > 10 * quota + 100:
                raise ContractViolation(f"action {action.name!r} keeps producing degenerate frames")
            next_frame += len(frames)
            world = forward_kinematics(skeleton, action.angles(skeleton, frames / config.fps))
            for f_idx, pose in zip(frames, world):
                try:
                    rec = _make_record(config, skeleton, action, a_idx, int(f_idx), pose, quota)
                except (DegenerateProjectionError, DegenerateExtentError) as exc:
                    log.warning("skipping %s frame %d: %s", action.name, f_idx, exc)
                    continue
                emitted += 1
                yield rec


def lint_records(records, skeleton: Skeleton | None = None, tol: float = 0.0) -> list[str]:
    """Return invariant violations found in ``records`` (empty when clean)."""
    problems = []
    for r in records:
        k2, k3 = r.k2d_norm, r.k3d_norm
        if skeleton is not None and (k2.shape != (skeleton.k_s, 2) or k3.shape != (skeleton.k_d, 3)):
            problems.append(f"{r.id}: shape {k2.shape} / {k3.shape}")
            continue
        for name, arr in (("k2d_norm", k2), ("k3d_norm", k3)):
            if not np.all(np.isfinite(arr)) or arr.min() < -tol or arr.max() > 1 + tol:
                problems.append(f"{r.id}: {name} outside [0, 1]")
        ext = np.ptp(k2, axis=0)
        dom = int(np.argmax(ext))
        if abs(k2[:, dom].min()) > tol or abs(k2[:, dom].max() - 1.0) > tol:
            problems.append(f"{r.id}: k2d_norm dominant axis does not span [0, 1]")
    return problems


def variance_report(records) -> dict[str, tuple[float, float, float]]:
    """Per-action (sigma_x, sigma_y, sigma_z) of normalized 3D keypoints.

    Standard deviation over an action's frames per keypoint and axis, then
    averaged over keypoints.  Actions appear in first-seen order.
    """
    groups: dict[str, list[np.ndarray]] = {}
    for r in records:
        groups.setdefault(r.action, []).append(r.k3d_norm)
    if not groups:
        raise ContractViolation("empty dataset")
    report = {}
    for action, poses in groups.items():
        sd = np.stack(poses).std(axis=0).mean(axis=0)
        report[action] = (float(sd[0]), float(sd[1]), float(sd[2]))
    return report


def variance_csv(report: dict[str, tuple[float, float, float]]) -> str:
    lines = ["action,sigma_x,sigma_y,sigma_z"]
    lines += [f"{a},{x:.6f},{y:.6f},{z:.6f}" for a, (x, y, z) in report.items()]
    return "\n".join(lines) + "\n"


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_dataset(path, records, config: GenConfig, skeleton: Skeleton) -> int:
    """Write JSON Lines plus a sidecar manifest; returns the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), separators=(",", ":")) + "\n")
            n += 1
    manifest = {
        "format_version": DATASET_FORMAT_VERSION,
        "species": skeleton.species,
        "config": asdict(config),
        "skeleton_hash": skeleton.source_hash,
        "record_count": n,
    }
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return n


def read_manifest(path) -> dict:
    mpath = manifest_path(path)
    if not mpath.exists():
        raise ContractViolation(f"{path}: missing manifest {mpath.name}")
    manifest = json.loads(mpath.read_text())
    if manifest.get("format_version") != DATASET_FORMAT_VERSION:
        raise FormatVersionError(
            f"{path}: dataset format version {manifest.get('format_version')!r}, "
            f"expected {DATASET_FORMAT_VERSION}"
        )
    return manifest


def read_dataset(path) -> list[DatasetRecord]:
    manifest = read_manifest(path)
    with Path(path).open() as fh:
        records = [DatasetRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
    if len(records) != manifest["record_count"]:
        raise ContractViolation(f"{path}: manifest says {manifest['record_count']} records, found {len(records)}")
    return records
