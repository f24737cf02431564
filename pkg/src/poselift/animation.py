"""Procedural action sequences: per-bone rotation curves evaluated over time.

Each channel drives one bone about one axis (in the bone's rest frame) with an
angle in degrees::

    angle(tau) = base + amp * sin(2*pi*(cycles*tau + phase)) + keys(tau)

where ``tau = t / duration`` and ``keys`` is a cosine-eased keyframe curve.
A bone's local rotation is the product of its channels in file order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import rotations as rot
from .errors import ContractViolation, FormatVersionError
from .skeleton import PoseAngles, Skeleton

ACTIONS_FORMAT_VERSION = 1

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}

MACAQUE_ACTIONS = (
    "Attack", "Climb Down", "Climb Right", "Climb Up", "Climb Left", "Hit Left",
    "Hit Right", "Idle", "Jump Forward", "Jump Inplace", "Jump Run", "Run",
    "Sitting", "Turn Left", "Turn Right", "Walk",
)  # fmt: skip
HORSE_ACTIONS = (
    "Attack", "Buck", "Death", "Eat", "Falling", "Gallop", "Idle", "Jump",
    "Jump Run", "Sleep", "Swim", "Walk",
)  # fmt: skip
ACTION_NAMES = {"macaque": MACAQUE_ACTIONS, "horse": HORSE_ACTIONS}


@dataclass(frozen=True)
class Channel:
    bone: int
    axis: np.ndarray
    base: float = 0.0
    amp: float = 0.0
    cycles: float = 1.0
    phase: float = 0.0
    keys: tuple[tuple[float, float], ...] = ()

    def angle(self, tau):
        tau = np.asarray(tau, dtype=float)
        deg = self.base + self.amp * np.sin(2 * np.pi * (self.cycles * tau + self.phase))
        if self.keys:
            deg = deg + _eased(self.keys, tau)
        return np.radians(deg)


def _eased(keys, tau):
    times = np.array([k[0] for k in keys])
    values = np.array([k[1] for k in keys])
    idx = np.clip(np.searchsorted(times, tau, side="right") - 1, 0, len(times) - 1)
    nxt = np.minimum(idx + 1, len(times) - 1)
    span = times[nxt] - times[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(span > 0, (tau - times[idx]) / np.where(span > 0, span, 1.0), 0.0)
    u = np.clip(u, 0.0, 1.0)
    w = 0.5 - 0.5 * np.cos(np.pi * u)
    return values[idx] + w * (values[nxt] - values[idx])


@dataclass(frozen=True)
class ActionSequence:
    name: str
    duration: float
    channels: tuple[Channel, ...]

    def __post_init__(self):
        if not self.duration > 0:
            raise ContractViolation(f"action {self.name!r} needs a positive duration")

    def angles(self, skeleton: Skeleton, t) -> PoseAngles:
        """Local rotations at times ``t`` (seconds, any shape); the action loops."""
        t = np.asarray(t, dtype=float)
        tau = np.mod(t, self.duration) / self.duration
        q = np.broadcast_to(rot.IDENTITY, (*tau.shape, skeleton.k_d, 4)).copy()
        for ch in self.channels:
            step = rot.from_axis_angle(ch.axis, ch.angle(tau))
            q[..., ch.bone, :] = rot.multiply(q[..., ch.bone, :], step)
        return PoseAngles(q)


def actions_from_dict(doc: dict, skeleton: Skeleton) -> list[ActionSequence]:
    if doc.get("version") != ACTIONS_FORMAT_VERSION:
        raise FormatVersionError(f"unsupported actions version {doc.get('version')!r}")
    if doc.get("species") != skeleton.species:
        raise ContractViolation(
            f"actions are for {doc.get('species')!r}, skeleton is {skeleton.species!r}"
        )
    names = skeleton.keypoint_names
    out = []
    for a in doc["actions"]:
        channels = []
        for c in a["channels"]:
            if c["bone"] not in names:
                raise ContractViolation(f"action {a['name']!r} drives unknown bone {c['bone']!r}")
            axis = _AXES[c["axis"]] if isinstance(c["axis"], str) else c["axis"]
            channels.append(
                Channel(
                    bone=names.index(c["bone"]),
                    axis=np.asarray(axis, dtype=float),
                    base=c.get("base", 0.0),
                    amp=c.get("amp", 0.0),
                    cycles=c.get("cycles", 1.0),
                    phase=c.get("phase", 0.0),
                    keys=tuple(tuple(k) for k in c.get("keys", ())),
                )
            )
        out.append(ActionSequence(a["name"], float(a["duration"]), tuple(channels)))
    return out


def species_actions(skeleton: Skeleton) -> list[ActionSequence]:
    """The procedural action library shipped for the skeleton's species."""
    raw = resources.files("poselift.data").joinpath(f"{skeleton.species}_actions.json").read_text()
    return actions_from_dict(json.loads(raw), skeleton)
