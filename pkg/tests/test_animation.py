import numpy as np
import pytest

from poselift.animation import (
    ACTION_NAMES,
    ActionSequence,
    Channel,
    actions_from_dict,
    species_actions,
)
from poselift.errors import ContractViolation, FormatVersionError
from poselift.skeleton import forward_kinematics


@pytest.mark.parametrize("species,count", [("macaque", 16), ("horse", 12)])
def test_shipped_actions_cover_all_names(species, count, request):
    sk = request.getfixturevalue(species)
    actions = species_actions(sk)
    assert len(actions) == count
    assert {a.name for a in actions} == set(ACTION_NAMES[species])


@pytest.mark.parametrize("species", ["macaque", "horse"])
def test_actions_loop_and_stay_finite(species, request):
    sk = request.getfixturevalue(species)
    for a in species_actions(sk):
        t = np.linspace(0, a.duration, 7, endpoint=False)
        q0 = a.angles(sk, t).rotations
        q1 = a.angles(sk, t + a.duration).rotations
        assert np.allclose(q0, q1, atol=1e-9)
        assert np.all(np.isfinite(forward_kinematics(sk, a.angles(sk, t))))


def test_actions_are_distinct(macaque):
    mean_poses = []
    for a in species_actions(macaque):
        t = np.linspace(0, a.duration, 20, endpoint=False)
        mean_poses.append(forward_kinematics(macaque, a.angles(macaque, t)).mean(axis=0))
    mean_poses = np.stack(mean_poses)
    gaps = [np.abs(x - y).max() for i, x in enumerate(mean_poses) for y in mean_poses[i + 1 :]]
    assert min(gaps) > 1e-3


def test_channel_curve_and_eased_keys():
    ch = Channel(bone=1, axis=np.array([0.0, 0.0, 1.0]), base=10.0, keys=((0.0, 0.0), (0.5, 90.0)))
    assert np.isclose(np.degrees(ch.angle(0.0)), 10.0)
    assert np.isclose(np.degrees(ch.angle(0.25)), 10.0 + 45.0)
    assert np.isclose(np.degrees(ch.angle(0.9)), 100.0)  # holds after the last key
    wave = Channel(bone=1, axis=np.array([1.0, 0.0, 0.0]), amp=30.0, cycles=2.0)
    assert np.isclose(np.degrees(wave.angle(0.125)), 30.0)


def test_zero_duration_rejected():
    with pytest.raises(ContractViolation):
        ActionSequence("Idle", 0.0, ())


def test_actions_file_checks(macaque):
    doc = {"version": 1, "species": "macaque", "actions": [
        {"name": "Idle", "duration": 1.0, "channels": [{"bone": "Neck", "axis": "x", "amp": 5}]}
    ]}  # fmt: skip
    (idle,) = actions_from_dict(doc, macaque)
    assert idle.channels[0].bone == macaque.index("Neck")
    with pytest.raises(FormatVersionError):
        actions_from_dict({**doc, "version": 2}, macaque)
    with pytest.raises(ContractViolation):
        actions_from_dict({**doc, "species": "horse"}, macaque)
    bad = {**doc, "actions": [{"name": "Idle", "duration": 1.0, "channels": [{"bone": "Wing", "axis": "x"}]}]}
    with pytest.raises(ContractViolation):
        actions_from_dict(bad, macaque)
