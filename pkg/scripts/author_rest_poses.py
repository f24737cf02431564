"""Write the canonical skeleton files from hand-placed rest-pose joint positions.

Joint positions are authored in an arbitrary length unit (y up, subject facing
+z, left side at +x), then rescaled so the rest pose fits the unit cube.  Run
from the repo root; it overwrites ``src/poselift/data/*_skeleton.json``.
"""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "poselift" / "data"


def mirror(name):
    return name.replace("Left", "Right") if "Left" in name else name.replace("Right", "Left")


# (name, parent, position); "L:" rows are mirrored to the right side (x -> -x).
MACAQUE = [
    ("Pelvis", None, (0.0, 0.48, -0.24)),
    ("Spine Bottom", "Pelvis", (0.0, 0.50, -0.12)),
    ("Spine Middle", "Spine Bottom", (0.0, 0.51, 0.04)),
    ("Spine Top", "Spine Middle", (0.0, 0.51, 0.20)),
    ("Neck", "Spine Top", (0.0, 0.53, 0.34)),
    ("Nose", "Neck", (0.0, 0.57, 0.47)),
    ("L:Left Scapula", "Neck", (0.075, 0.48, 0.30)),
    ("L:Left Humerus", "Left Scapula", (0.085, 0.38, 0.31)),
    ("L:Left Forearm", "Left Humerus", (0.09, 0.26, 0.32)),
    ("L:Left Hand", "Left Forearm", (0.09, 0.08, 0.34)),
    ("L:Left Thigh", "Pelvis", (0.075, 0.45, -0.19)),
    ("L:Left Knee", "Left Thigh", (0.085, 0.28, -0.11)),
    ("L:Left Ankle", "Left Knee", (0.085, 0.11, -0.19)),
    ("L:Left Foot", "Left Ankle", (0.085, 0.01, -0.11)),
    ("Tail Top", "Pelvis", (0.0, 0.50, -0.31)),
    ("Tail Upper", "Tail Top", (0.0, 0.48, -0.39)),
    ("Tail Upper Middle", "Tail Upper", (0.0, 0.44, -0.46)),
    ("Tail Middle", "Tail Upper Middle", (0.0, 0.39, -0.52)),
    ("Tail Lower Middle", "Tail Middle", (0.0, 0.33, -0.56)),
    ("Tail Lower", "Tail Lower Middle", (0.0, 0.27, -0.59)),
    ("Tail End", "Tail Lower", (0.0, 0.21, -0.61)),
]

HORSE = [
    ("Spine End", None, (0.0, 1.18, -0.40)),
    ("Spine Middle", "Spine End", (0.0, 1.14, -0.05)),
    ("Spine Top", "Spine Middle", (0.0, 1.22, 0.28)),
    ("Neck Low", "Spine Top", (0.0, 1.20, 0.48)),
    ("Neck Middle", "Neck Low", (0.0, 1.35, 0.62)),
    ("Neck Top", "Neck Middle", (0.0, 1.50, 0.74)),
    ("Head", "Neck Top", (0.0, 1.58, 0.84)),
    ("Nose", "Head", (0.0, 1.30, 1.06)),
    ("L:Left Clavicle", "Neck Low", (0.15, 1.05, 0.46)),
    ("L:Left Upperarm", "Left Clavicle", (0.17, 0.82, 0.44)),
    ("L:Left Forearm", "Left Upperarm", (0.17, 0.50, 0.46)),
    ("L:Left Foreankle", "Left Forearm", (0.17, 0.20, 0.46)),
    ("L:Left Forefeet", "Left Foreankle", (0.17, 0.02, 0.50)),
    ("Penvis", "Spine End", (0.0, 1.12, -0.62)),
    ("L:Left Thigh", "Spine End", (0.16, 1.00, -0.46)),
    ("L:Left Calf", "Left Thigh", (0.17, 0.76, -0.34)),
    ("L:Left Backarm", "Left Calf", (0.17, 0.46, -0.56)),
    ("L:Left Backankle", "Left Backarm", (0.17, 0.19, -0.51)),
    ("L:Left Backfeet", "Left Backankle", (0.17, 0.02, -0.47)),
    ("Tail Top", "Penvis", (0.0, 1.16, -0.68)),
    ("Tail Middle", "Tail Top", (0.0, 0.96, -0.77)),
    ("Tail Low", "Tail Middle", (0.0, 0.76, -0.80)),
    ("Tail End", "Tail Low", (0.0, 0.56, -0.80)),
]

# deep keypoint -> name in the 2D detector's keypoint set
MACAQUE_CORRESPONDENCE = {
    "Nose": "Nose",
    "Left Scapula": "Left Shoulder",
    "Right Scapula": "Right Shoulder",
    "Left Forearm": "Left Elbow",
    "Right Forearm": "Right Elbow",
    "Left Hand": "Left Wrist",
    "Right Hand": "Right Wrist",
    "Left Thigh": "Left Hip",
    "Right Thigh": "Right Hip",
    "Left Knee": "Left Knee",
    "Right Knee": "Right Knee",
    "Left Ankle": "Left Ankle",
    "Right Ankle": "Right Ankle",
}

HORSE_CORRESPONDENCE = {
    "Nose": "Nose",
    "Head": "Head",
    "Neck Low": "Mid shoulder",
    "Right Forearm": "Nearknee",
    "Right Foreankle": "Nearfrontfetlock",
    "Right Forefeet": "Nearfrontfoot",
    "Left Forearm": "Offknee",
    "Left Foreankle": "Offfrontfetlock",
    "Left Forefeet": "Offfrontfoot",
    "Penvis": "Ischium",
    "Right Backarm": "Nearhindhock",
    "Right Backankle": "Nearhindfetlock",
    "Right Backfeet": "Nearhindfoot",
    "Left Backarm": "Offhindhock",
    "Left Backankle": "Offhindfetlock",
    "Left Backfeet": "Offhindfoot",
}


def expand(rows):
    """Expand mirrored rows so each side's chain stays contiguous (left chain, then right)."""
    out = []
    pending = []
    for name, parent, pos in rows + [(None, None, None)]:
        if name is not None and name.startswith("L:"):
            pending.append((name[2:], parent, pos))
            continue
        if pending:
            out.extend(pending)
            out.extend(
                (mirror(n), mirror(p), (-x, y, z)) for n, p, (x, y, z) in pending
            )
            pending = []
        if name is not None:
            out.append((name, parent, pos))
    return out


def build(species, rows, correspondence, detector):
    rows = expand(rows)
    names = [r[0] for r in rows]
    pos = np.array([r[2] for r in rows], dtype=float)
    pos = pos - pos[0]
    pos /= np.ptp(pos, axis=0).max()
    bones = []
    for i, (name, parent, _) in enumerate(rows):
        if parent is None:
            offset = np.zeros(3)
            pidx = None
        else:
            pidx = names.index(parent)
            assert pidx < i, (name, parent)
            offset = pos[i] - pos[pidx]
        bones.append(
            {"name": name, "parent": pidx, "rest_offset": [round(float(v), 6) for v in offset]}
        )
    soft = [i for i, n in enumerate(names) if n in correspondence]
    assert len(soft) == len(correspondence)
    return {
        "version": 1,
        "species": species,
        "detector_keypoints": detector,
        "bones": bones,
        "soft_subset": soft,
        "correspondence": {names[i]: correspondence[names[i]] for i in soft},
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for species, rows, corr, det in [
        ("macaque", MACAQUE, MACAQUE_CORRESPONDENCE, "MacaquePose"),
        ("horse", HORSE, HORSE_CORRESPONDENCE, "Horse-10"),
    ]:
        doc = build(species, rows, corr, det)
        path = OUT / f"{species}_skeleton.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{path}: {len(doc['bones'])} bones, {len(doc['soft_subset'])} soft")


if __name__ == "__main__":
    main()
