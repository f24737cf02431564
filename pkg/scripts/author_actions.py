"""Write the procedural action libraries to ``src/poselift/data/*_actions.json``.

Angles are degrees in each bone's rest frame (y up, facing +z, left at +x):

* about x, positive swings a hanging limb backward and pitches the nose down
* about y, positive turns toward the left
* about z, positive rolls the top toward the right (abducts a left limb)

Channels on one bone compose in listed order, so the first channel is the
outermost rotation.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "poselift" / "data"


def ch(bone, axis, base=0.0, amp=0.0, cycles=1.0, phase=0.0, keys=None):
    c = {"bone": bone, "axis": axis}
    if base:
        c["base"] = base
    if amp:
        c.update(amp=amp, cycles=cycles, phase=phase % 1.0)
    if keys:
        c["keys"] = [list(k) for k in keys]
    return c


def swap_side(name):
    if name.startswith("Left "):
        return "Right " + name[5:]
    if name.startswith("Right "):
        return "Left " + name[6:]
    return name


def mirrored(channels):
    """Reflect channels through the sagittal plane (x -> -x)."""
    out = []
    for c in channels:
        m = dict(c, bone=swap_side(c["bone"]))
        if c["axis"] in ("y", "z"):
            for k in ("base", "amp"):
                if k in m:
                    m[k] = -m[k]
            if "keys" in m:
                m["keys"] = [[t, -v] for t, v in m["keys"]]
        out.append(m)
    return out


def both(channel_fn, *args, **kw):
    """Apply a left-side channel builder and its mirror."""
    left = channel_fn("Left", *args, **kw)
    return left + mirrored(left)


def action(name, duration, channels):
    return {"name": name, "duration": duration, "channels": channels}


# --------------------------------------------------------------------------- macaque


def macaque_gait(cycles, front, hind, flex_f, flex_h, phases):
    """Oscillating limbs; ``phases`` maps LF, RF, LH, RH to cycle offsets."""
    out = []
    for side in ("Left", "Right"):
        pf, ph = phases[side[0] + "F"], phases[side[0] + "H"]
        out += [
            ch(f"{side} Humerus", "x", amp=front, cycles=cycles, phase=pf),
            ch(f"{side} Hand", "x", base=-flex_f / 2, amp=flex_f / 2, cycles=cycles, phase=pf + 0.25),
            ch(f"{side} Knee", "x", amp=hind, cycles=cycles, phase=ph),
            ch(f"{side} Ankle", "x", base=flex_h / 2, amp=flex_h / 2, cycles=cycles, phase=ph - 0.25),
        ]
    return out


def macaque_tail(lift, curl=0.0, sway=0.0, sway_cycles=1.0):
    segs = ["Tail Upper", "Tail Upper Middle", "Tail Middle", "Tail Lower Middle", "Tail Lower", "Tail End"]
    out = [ch("Tail Top", "x", base=lift)]
    if sway:
        out.append(ch("Tail Top", "y", amp=sway, cycles=sway_cycles))
    if curl:
        out += [ch(s, "x", base=curl) for s in segs]
    return out


LATERAL = {"LH": 0.0, "LF": 0.25, "RH": 0.5, "RF": 0.75}
BOUND = {"LH": 0.0, "RH": 0.06, "LF": 0.5, "RF": 0.56}
DIAGONAL = {"LF": 0.0, "RH": 0.0, "RF": 0.5, "LH": 0.5}


def macaque_hit(side_sign):
    """Left-handed swipe; mirrored for the right hand."""
    ch_ = [
        ch("Pelvis", "y", base=40),
        ch("Pelvis", "x", base=-30),
        ch("Pelvis", "y", keys=[(0, 0), (0.4, -20), (0.6, 30), (1, 0)]),
        ch("Spine Top", "y", keys=[(0, 0), (0.4, -15), (0.6, 20), (1, 0)]),
        ch("Left Humerus", "x", keys=[(0, -20), (0.35, -150), (0.6, -50), (1, -20)]),
        ch("Left Humerus", "z", keys=[(0, 10), (0.35, 45), (0.6, -25), (1, 10)]),
        ch("Left Hand", "x", keys=[(0, -20), (0.35, -60), (0.6, -10), (1, -20)]),
        ch("Right Humerus", "x", base=15),
        ch("Right Humerus", "z", base=-15),
        ch("Left Knee", "x", base=-25),
        ch("Right Knee", "x", base=-15),
        ch("Left Ankle", "x", base=40),
        ch("Right Ankle", "x", base=30),
        ch("Nose", "y", keys=[(0, 0), (0.5, 25), (1, 0)]),
        ch("Tail Top", "x", base=20),
        ch("Tail Top", "y", keys=[(0, 0), (0.6, -40), (1, 0)]),
    ]
    return ch_ if side_sign > 0 else mirrored(ch_)


def macaque_turn(side_sign):
    ch_ = (
        [
            ch("Pelvis", "y", keys=[(0, 30), (1, 80)]),
            ch("Spine Middle", "y", base=14),
            ch("Spine Top", "y", base=14),
            ch("Nose", "y", base=35),
            ch("Nose", "x", base=-10),
        ]
        + macaque_gait(4, 12, 12, 20, 20, DIAGONAL)
        + [ch("Tail Top", "x", base=10), ch("Tail Top", "y", base=-35), ch("Tail Middle", "y", base=-15)]
    )
    return ch_ if side_sign > 0 else mirrored(ch_)


def macaque_climb(roll):
    ch_ = [
        ch("Pelvis", "z", base=roll),
        ch("Pelvis", "x", base=-85),
        ch("Nose", "x", base=25),
    ] + both(lambda s: [ch(f"{s} Humerus", "x", base=-75), ch(f"{s} Humerus", "z", base=25),
                        ch(f"{s} Knee", "x", base=-55), ch(f"{s} Knee", "z", base=20),
                        ch(f"{s} Ankle", "x", base=60)])
    ch_ += macaque_gait(4, 35, 30, 40, 30, DIAGONAL)
    return ch_


def macaque_actions():
    acts = [
        action("Idle", 6.0, [
            ch("Spine Middle", "x", amp=2, cycles=2),
            ch("Nose", "y", keys=[(0, 0), (0.25, 35), (0.5, 0), (0.75, -35), (1, 0)]),
            ch("Nose", "x", base=-20),
        ] + macaque_tail(-70, 0, sway=8, sway_cycles=1)),
        action("Walk", 6.0, macaque_gait(5, 20, 22, 25, 25, LATERAL) + [
            ch("Spine Middle", "y", amp=4, cycles=5),
            ch("Nose", "x", base=10),
        ] + macaque_tail(10)),
        action("Run", 3.6, macaque_gait(6, 40, 45, 50, 50, BOUND) + [
            ch("Pelvis", "x", amp=8, cycles=6),
            ch("Spine Middle", "x", amp=12, cycles=6, phase=0.25),
            ch("Nose", "x", base=10),
            ch("Pelvis", "x", base=12),
        ] + macaque_tail(95, 10)),
        action("Jump Run", 1.6, macaque_gait(2, 30, 35, 40, 40, BOUND) + [
            ch("Pelvis", "x", keys=[(0, 0), (0.55, 0), (0.72, -25), (0.88, 15), (1, 0)]),
            ch("Left Humerus", "x", keys=[(0.55, 0), (0.72, -60), (0.88, -30), (1, 0)]),
            ch("Right Humerus", "x", keys=[(0.55, 0), (0.72, -60), (0.88, -30), (1, 0)]),
            ch("Left Knee", "x", keys=[(0.55, 0), (0.72, 60), (0.88, 20), (1, 0)]),
            ch("Right Knee", "x", keys=[(0.55, 0), (0.72, 60), (0.88, 20), (1, 0)]),
            ch("Nose", "x", base=-20),
        ] + macaque_tail(-55)),
        action("Jump Forward", 1.6, [
            ch("Pelvis", "x", keys=[(0, 10), (0.3, 15), (0.45, -30), (0.6, -5), (0.8, 20), (1, 10)]),
            ch("Nose", "x", keys=[(0, 0), (0.45, -20), (0.8, 10), (1, 0)]),
            ch("Tail Top", "x", keys=[(0, 10), (0.45, 60), (0.8, 20), (1, 10)]),
        ] + both(lambda s: [
            ch(f"{s} Knee", "x", keys=[(0, -30), (0.3, -45), (0.45, 40), (0.6, 60), (0.8, -20), (1, -30)]),
            ch(f"{s} Ankle", "x", keys=[(0, 50), (0.3, 80), (0.45, 0), (0.6, 10), (0.8, 50), (1, 50)]),
            ch(f"{s} Humerus", "x", keys=[(0, 10), (0.3, 25), (0.45, -70), (0.6, -85), (0.8, -30), (1, 10)]),
            ch(f"{s} Hand", "x", keys=[(0, -30), (0.3, -40), (0.45, 0), (0.8, -20), (1, -30)]),
        ])),
        action("Jump Inplace", 1.4, [
            ch("Pelvis", "x", keys=[(0, 0), (0.25, -10), (0.45, -60), (0.6, -60), (0.8, -10), (1, 0)]),
            ch("Nose", "x", keys=[(0, 0), (0.45, 40), (0.6, 40), (1, 0)]),
        ] + macaque_tail(-25, -10) + both(lambda s: [
            ch(f"{s} Knee", "x", keys=[(0, 0), (0.25, -50), (0.45, 10), (0.6, 10), (0.8, -40), (1, 0)]),
            ch(f"{s} Ankle", "x", keys=[(0, 0), (0.25, 90), (0.45, 0), (0.6, 0), (0.8, 70), (1, 0)]),
            ch(f"{s} Humerus", "x", keys=[(0, 0), (0.25, 20), (0.45, -130), (0.6, -140), (0.8, -20), (1, 0)]),
            ch(f"{s} Humerus", "z", keys=[(0, 0), (0.45, 30), (0.6, 30), (1, 0)]),
        ])),
        action("Climb Up", 4.0, macaque_climb(0) + macaque_tail(-50)),
        action("Climb Down", 4.0, [
            ch("Pelvis", "x", base=85),
            ch("Nose", "x", base=-35),
        ] + both(lambda s: [ch(f"{s} Humerus", "x", base=-50), ch(f"{s} Knee", "x", base=-20),
                            ch(f"{s} Ankle", "x", base=50)])
          + macaque_gait(4, 30, 30, 40, 30, DIAGONAL) + macaque_tail(80, 5)),
        action("Climb Left", 4.0, macaque_climb(-90) + macaque_tail(0, 6) + [ch("Nose", "y", base=30)]),
        action("Climb Right", 4.0, macaque_climb(90) + macaque_tail(0, -6) + [ch("Nose", "y", base=-30)]),
        action("Sitting", 5.0, [
            ch("Pelvis", "x", base=-50),
            ch("Nose", "x", base=35),
            ch("Nose", "y", keys=[(0, 0), (0.3, 25), (0.6, -15), (1, 0)]),
            ch("Right Hand", "x", keys=[(0, -20), (0.4, -20), (0.55, -110), (0.7, -20), (1, -20)]),
        ] + macaque_tail(-45, 10) + both(lambda s: [
            ch(f"{s} Knee", "x", base=-40),
            ch(f"{s} Knee", "z", base=15),
            ch(f"{s} Ankle", "x", base=110),
            ch(f"{s} Foot", "x", base=-20),
            ch(f"{s} Humerus", "x", base=40),
        ])),
        action("Attack", 1.5, [
            ch("Pelvis", "x", keys=[(0, 0), (0.3, -10), (0.5, 20), (0.7, 20), (1, 0)]),
            ch("Nose", "x", keys=[(0, 0), (0.3, -25), (0.5, 10), (1, 0)]),
            ch("Tail Top", "x", base=75),
            ch("Tail Upper", "x", base=10),
        ] + both(lambda s: [
            ch(f"{s} Humerus", "x", keys=[(0, 0), (0.3, 30), (0.5, -80), (0.7, -60), (1, 0)]),
            ch(f"{s} Hand", "x", keys=[(0, 0), (0.3, -40), (0.5, -10), (1, 0)]),
            ch(f"{s} Knee", "x", keys=[(0, 0), (0.3, -30), (0.5, 30), (1, 0)]),
            ch(f"{s} Ankle", "x", keys=[(0, 0), (0.3, 60), (0.5, 0), (1, 0)]),
        ])),
        action("Hit Left", 1.2, macaque_hit(+1)),
        action("Hit Right", 1.2, macaque_hit(-1)),
        action("Turn Left", 3.6, macaque_turn(+1)),
        action("Turn Right", 3.6, macaque_turn(-1)),
    ]
    return acts


# --------------------------------------------------------------------------- horse


def horse_gait(cycles, front, hind, flex_f, flex_h, phases):
    out = []
    for side in ("Left", "Right"):
        pf, ph = phases[side[0] + "F"], phases[side[0] + "H"]
        out += [
            ch(f"{side} Upperarm", "x", amp=front, cycles=cycles, phase=pf),
            ch(f"{side} Foreankle", "x", base=flex_f / 2, amp=flex_f / 2, cycles=cycles, phase=pf + 0.25),
            ch(f"{side} Calf", "x", amp=hind, cycles=cycles, phase=ph),
            ch(f"{side} Backankle", "x", base=-flex_h / 2, amp=flex_h / 2, cycles=cycles, phase=ph - 0.25),
        ]
    return out


def horse_tail(lift, swish=0.0, cycles=1.0):
    out = [ch("Tail Top", "x", base=lift)]
    if swish:
        out.append(ch("Tail Top", "z", amp=swish, cycles=cycles))
    return out


GALLOP = {"LH": 0.0, "RH": 0.1, "LF": 0.45, "RF": 0.55}
TROT = {"LF": 0.0, "RH": 0.0, "RF": 0.5, "LH": 0.5}


def horse_actions():
    return [
        action("Idle", 6.0, [
            ch("Neck Middle", "x", keys=[(0, 0), (0.3, 10), (0.6, -5), (1, 0)]),
            ch("Neck Middle", "y", keys=[(0, 0), (0.4, 20), (0.8, -10), (1, 0)]),
        ] + horse_tail(0, swish=15, cycles=2)),
        action("Walk", 2.0, horse_gait(2, 18, 20, 40, 30, LATERAL) + [
            ch("Neck Middle", "x", base=10, amp=5, cycles=4),
        ] + horse_tail(10, swish=6, cycles=2)),
        action("Gallop", 1.2, horse_gait(3, 40, 45, 90, 70, GALLOP) + [
            ch("Spine End", "x", amp=5, cycles=3),
            ch("Neck Middle", "x", base=15, amp=10, cycles=3),
        ] + horse_tail(35)),
        action("Jump Run", 1.5, horse_gait(2, 35, 40, 80, 60, GALLOP) + [
            ch("Spine End", "x", keys=[(0, 0), (0.55, 0), (0.7, -25), (0.85, 15), (1, 0)]),
            ch("Neck Middle", "x", base=10),
        ] + horse_tail(30)),
        action("Jump", 1.6, [
            ch("Spine End", "x", keys=[(0, 0), (0.3, -30), (0.55, 0), (0.8, 20), (1, 0)]),
            ch("Neck Middle", "x", keys=[(0, 0), (0.3, -15), (0.55, 20), (1, 0)]),
        ] + horse_tail(45) + both(lambda s: [
            ch(f"{s} Upperarm", "x", keys=[(0, 0), (0.3, -60), (0.55, -40), (0.8, -20), (1, 0)]),
            ch(f"{s} Foreankle", "x", keys=[(0, 0), (0.3, 120), (0.55, 100), (0.8, 0), (1, 0)]),
            ch(f"{s} Calf", "x", keys=[(0, 0), (0.3, 40), (0.55, 50), (0.8, -10), (1, 0)]),
        ])),
        action("Attack", 1.6, [
            ch("Spine End", "x", keys=[(0, 0), (0.3, -55), (0.7, -55), (1, 0)]),
            ch("Neck Middle", "x", base=-20),
            ch("Nose", "x", base=-15),
        ] + horse_tail(-20) + both(lambda s: [
            ch(f"{s} Upperarm", "x", base=-40),
            ch(f"{s} Foreankle", "x", base=90),
            ch(f"{s} Calf", "x", base=-20),
        ]) + [
            ch("Left Upperarm", "x", amp=35, cycles=3),
            ch("Right Upperarm", "x", amp=35, cycles=3, phase=0.5),
        ]),
        action("Buck", 1.2, [
            ch("Spine End", "x", keys=[(0, 0), (0.35, 30), (0.6, 30), (1, 0)]),
            ch("Neck Middle", "x", keys=[(0, 10), (0.35, 45), (0.6, 45), (1, 10)]),
        ] + horse_tail(60) + both(lambda s: [
            ch(f"{s} Calf", "x", keys=[(0, 0), (0.35, 70), (0.6, 60), (1, 0)]),
            ch(f"{s} Backankle", "x", keys=[(0, 0), (0.2, -50), (0.35, 0), (1, 0)]),
            ch(f"{s} Upperarm", "x", keys=[(0, 0), (0.35, -20), (1, 0)]),
        ])),
        action("Eat", 4.0, [
            ch("Neck Middle", "x", base=70),
            ch("Neck Top", "x", base=20),
            ch("Nose", "x", amp=6, cycles=6),
            ch("Left Upperarm", "x", base=-8),
            ch("Right Upperarm", "x", base=8),
        ] + horse_tail(-5, swish=12, cycles=2)),
        action("Death", 3.0, [
            ch("Spine End", "z", keys=[(0, 0), (0.35, 90), (1, 90)]),
            ch("Neck Middle", "x", keys=[(0, 0), (0.35, 30), (1, 20)]),
            ch("Neck Middle", "y", keys=[(0, 0), (0.4, 30), (1, 30)]),
        ] + horse_tail(-10) + both(lambda s: [
            ch(f"{s} Upperarm", "x", keys=[(0, 0), (0.4, -30), (1, -25)]),
            ch(f"{s} Foreankle", "x", keys=[(0, 0), (0.4, 60), (1, 50)]),
            ch(f"{s} Calf", "x", keys=[(0, 0), (0.4, 30), (1, 35)]),
        ])),
        action("Falling", 1.5, [
            ch("Spine End", "z", keys=[(0, 0), (1, 70)]),
            ch("Spine End", "x", keys=[(0, 0), (0.5, 20), (1, 10)]),
            ch("Neck Middle", "x", base=-30),
        ] + horse_tail(20) + horse_gait(3, 35, 35, 60, 60, TROT)),
        action("Sleep", 4.0, [
            ch("Neck Middle", "x", base=55, amp=2, cycles=2),
            ch("Nose", "x", base=20),
        ] + horse_tail(-30) + both(lambda s: [
            ch(f"{s} Upperarm", "x", base=20),
            ch(f"{s} Foreankle", "x", base=150),
            ch(f"{s} Calf", "x", base=-70),
            ch(f"{s} Backankle", "x", base=-110),
        ])),
        action("Swim", 2.0, horse_gait(2, 35, 35, 80, 60, TROT) + [
            ch("Spine End", "x", base=-10),
            ch("Neck Middle", "x", base=-25),
            ch("Nose", "x", base=-10),
        ] + horse_tail(60)),
    ]


def main():
    for species, acts in (("macaque", macaque_actions()), ("horse", horse_actions())):
        doc = {"version": 1, "species": species, "actions": acts}
        path = OUT / f"{species}_actions.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{path}: {len(acts)} actions")


if __name__ == "__main__":
    main()
