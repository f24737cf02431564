import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from poselift import rotations as rot
from poselift.errors import ContractViolation, FormatVersionError
from poselift.skeleton import (
    Bone,
    PoseAngles,
    Skeleton,
    forward_kinematics,
    load_skeleton,
    skeleton_from_dict,
    soft_projection,
    species_skeleton,
)

MACAQUE_DETECTOR = [
    "Nose", "Left Shoulder", "Left Elbow", "Left Wrist", "Left Hip", "Left Knee", "Left Ankle",
    "Right Shoulder", "Right Elbow", "Right Wrist", "Right Hip", "Right Knee", "Right Ankle",
]  # fmt: skip
HORSE_DETECTOR = [
    "Mid shoulder", "Head", "Nose", "Offknee", "Offfrontfetlock", "Offfrontfoot", "Nearknee",
    "Nearfrontfetlock", "Nearfrontfoot", "Ischium", "Offhindhock", "Offhindfetlock", "Offhindfoot",
    "Nearhindhock", "Nearhindfetlock", "Nearhindfoot",
]  # fmt: skip


def chain(n=3):
    bones = [Bone("root", None, np.zeros(3))]
    bones += [Bone(f"b{i}", i - 1, np.array([1.0, 0.0, 0.0])) for i in range(1, n)]
    return Skeleton("test", tuple(bones), tuple(range(n)))


@pytest.mark.parametrize("species,k_s,k_d", [("macaque", 13, 29), ("horse", 16, 33)])
def test_species_dimensions(species, k_s, k_d):
    sk = species_skeleton(species)
    assert (sk.k_s, sk.k_d) == (k_s, k_d)


def test_macaque_tail_end_is_deep_only(macaque):
    assert "Tail End" in macaque.keypoint_names
    assert macaque.index("Tail End") not in macaque.soft_subset


@pytest.mark.parametrize("species,detector", [("macaque", MACAQUE_DETECTOR), ("horse", HORSE_DETECTOR)])
def test_soft_subset_is_a_bijection_onto_detector_names(species, detector):
    sk = species_skeleton(species)
    soft_names = [sk.keypoint_names[i] for i in sk.soft_subset]
    mapped = [sk.correspondence[n] for n in soft_names]
    assert sorted(mapped) == sorted(detector)
    assert len(set(mapped)) == len(mapped)
    assert set(sk.correspondence) == set(soft_names)


@pytest.mark.parametrize("species", ["macaque", "horse"])
def test_rest_bone_lengths_are_plausible(species):
    sk = species_skeleton(species)
    rest = sk.rest_pose()
    height = np.ptp(rest[:, 1])
    ratios = np.linalg.norm(sk.offsets[1:], axis=1) / height
    assert ratios.min() >= 0.02 and ratios.max() <= 0.35


def test_identity_angles_give_rest_offsets_summed(macaque):
    rest = forward_kinematics(macaque, PoseAngles.identity(macaque.k_d))
    for i, b in enumerate(macaque.bones[1:], 1):
        assert np.allclose(rest[i] - rest[b.parent], b.rest_offset, atol=1e-15)


def test_single_bone_quarter_turn():
    sk = chain(2)
    q = np.stack([rot.IDENTITY, rot.from_axis_angle([0, 0, 1], math.pi / 2)])
    pos = forward_kinematics(sk, PoseAngles(q))
    assert np.allclose(pos[1], [0, 1, 0], atol=1e-15)


def _matrix_chain_oracle(sk, mats, translation, scale):
    pos = [np.asarray(translation, float)]
    glob = [mats[0]]
    for i in range(1, sk.k_d):
        p = sk.bones[i].parent
        g = glob[p] @ mats[i]
        glob.append(g)
        pos.append(pos[p] + scale * g @ sk.bones[i].rest_offset)
    return np.array(pos)


def test_fk_matches_matrix_chain_oracle(rng):
    sk = chain(3)
    for _ in range(20):
        q = rot.random(rng, 3)
        t, s = rng.normal(size=3), rng.uniform(0.2, 3)
        fk = forward_kinematics(sk, PoseAngles(q, t, s))
        assert np.allclose(fk, _matrix_chain_oracle(sk, rot.to_matrix(q), t, s), atol=1e-12)


def test_fk_matches_oracle_on_species_skeleton(macaque, rng):
    q = rot.random(rng, macaque.k_d)
    fk = forward_kinematics(macaque, PoseAngles(q, [1, 2, 3], 0.7))
    assert np.allclose(fk, _matrix_chain_oracle(macaque, rot.to_matrix(q), [1, 2, 3], 0.7), atol=1e-12)


def test_fk_batches_over_leading_axes(macaque, rng):
    q = rot.random(rng, (4, macaque.k_d))
    batched = forward_kinematics(macaque, PoseAngles(q))
    single = np.stack([forward_kinematics(macaque, PoseAngles(x)) for x in q])
    assert np.allclose(batched, single, atol=1e-15)


def test_fk_length_mismatch(macaque):
    with pytest.raises(ContractViolation):
        forward_kinematics(macaque, PoseAngles.identity(5))


@given(st.integers(0, 2**32 - 1))
def test_fk_root_rotation_equivariance(seed):
    sk = species_skeleton("horse")
    rng = np.random.default_rng(seed)
    q = rot.random(rng, sk.k_d)
    r = rot.random(rng)
    t = rng.normal(size=3)
    base = forward_kinematics(sk, PoseAngles(q, t))
    q2 = q.copy()
    q2[0] = rot.multiply(r, q[0])
    turned = forward_kinematics(sk, PoseAngles(q2, t))
    assert np.allclose(turned - t, rot.rotate(r, base - t), atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 20))
def test_fk_scale_about_root(seed, s):
    sk = species_skeleton("macaque")
    rng = np.random.default_rng(seed)
    q = rot.random(rng, sk.k_d)
    t = rng.normal(size=3)
    unit = forward_kinematics(sk, PoseAngles(q, t, 1.0))
    scaled = forward_kinematics(sk, PoseAngles(q, t, s))
    assert np.allclose(scaled - t, s * (unit - t), atol=1e-12 * max(1.0, s))


def test_soft_projection_selects_rows_in_order(macaque):
    pose = np.arange(macaque.k_d * 3, dtype=float).reshape(-1, 3)
    soft = soft_projection(macaque, pose)
    assert soft.shape == (13, 3)
    assert np.array_equal(soft[:, 0] // 3, np.array(macaque.soft_subset))


def test_soft_projection_full_subset_is_identity():
    sk = chain(4)
    pose = np.random.default_rng(0).normal(size=(4, 3))
    assert np.array_equal(soft_projection(sk, pose), pose)


def test_horse_rest_soft_rows(horse):
    rest = horse.rest_pose()
    soft = soft_projection(horse, rest)
    for row, i in zip(soft, horse.soft_subset):
        assert np.array_equal(row, rest[horse.index(horse.keypoint_names[i])])


def test_soft_projection_commutes_with_rigid_motion(macaque, rng):
    pose = macaque.rest_pose()
    r = rot.random(rng)
    t = rng.normal(size=3)
    moved = rot.rotate(r, pose) + t
    assert np.allclose(soft_projection(macaque, moved), rot.rotate(r, soft_projection(macaque, pose)) + t)


def test_pose_angles_normalizes_and_validates():
    pa = PoseAngles(np.array([[2.0, 0, 0, 0]]))
    assert np.allclose(pa.rotations, [[1, 0, 0, 0]])
    with pytest.raises(ContractViolation):
        PoseAngles(np.zeros((1, 4)))
    with pytest.raises(ContractViolation):
        PoseAngles(np.array([[1.0, 0, 0, 0]]), root_scale=0.0)


def test_pose_angles_from_matrices(rng):
    q = rot.random(rng, 5)
    pa = PoseAngles.from_matrices(rot.to_matrix(q))
    assert np.allclose(pa.matrices(), rot.to_matrix(q), atol=1e-12)
    with pytest.raises(ContractViolation):
        PoseAngles.from_matrices(np.stack([np.diag([1.0, 1.0, -1.0])]))


def test_skeleton_validation():
    with pytest.raises(ContractViolation):
        Skeleton("x", (Bone("a", None, np.zeros(3)), Bone("b", 2, np.ones(3))), ())
    with pytest.raises(ContractViolation):
        Skeleton("x", (Bone("a", None, np.zeros(3)), Bone("b", 0, np.zeros(3))), ())
    with pytest.raises(ContractViolation):
        Skeleton("x", (Bone("a", None, np.zeros(3)), Bone("b", 0, np.ones(3))), (1, 0))


def test_skeleton_file_round_trip(tmp_path, macaque):
    path = tmp_path / "sk.json"
    path.write_text(json.dumps(macaque.to_dict()))
    loaded = load_skeleton(path)
    assert loaded.keypoint_names == macaque.keypoint_names
    assert np.array_equal(loaded.offsets, macaque.offsets)
    assert loaded.soft_subset == macaque.soft_subset
    assert len(loaded.source_hash) == 64


def test_skeleton_version_check(macaque):
    doc = macaque.to_dict()
    doc["version"] = 99
    with pytest.raises(FormatVersionError):
        skeleton_from_dict(doc)


def test_unknown_species():
    with pytest.raises(ContractViolation):
        species_skeleton("cat")
