"""Record serialization round trips, posed-hand export, and statistics."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dexsynth.dataset import (SCHEMA_VERSION, GraspRecord, dataset_stats,
                              export_posed_hand, format_stats_table,
                              read_records, write_records)
from dexsynth.errors import RecordError
from dexsynth.geometry import load_mesh
from dexsynth.hand import GraspPose, forward_kinematics
from dexsynth.quality import joint_entropy
from dexsynth.rotations import quat_from_axis_angle


def _record(seed=0, q1=0.1, object_id="cube", valid=True, d=6):
    rng = np.random.default_rng(seed)
    quat = quat_from_axis_angle(rng.normal(size=3), rng.uniform(0, 3))
    return GraspRecord(
        object_id=object_id,
        scale=0.08,
        translation=[float(x) for x in rng.normal(size=3)],
        rotation_quat_wxyz=[float(x) for x in quat],
        joint_angles=[float(x) for x in rng.uniform(-0.5, 1.5, size=d)],
        energy={"fc": 0.5, "dis": 0.01, "pen": 0.0, "spen": 0.0,
                "joints": 0.0, "total": 1.5},
        q1=q1,
        penetration_cm=0.05,
        flags={"penetration_ok": True, "has_contacts": True,
               "q1_positive": q1 > 0, "valid": valid},
        seed=seed,
        meta={"schema_version": SCHEMA_VERSION, "weights": {}, "q1_config": {},
              "iterations": 100, "master_seed": 0},
    )


# -- round trips ----------------------------------------------------------------


def test_write_read_round_trip(tmp_path):
    records = [_record(i) for i in range(3)]
    path = tmp_path / "data.jsonl"
    assert write_records(records, path) == 3
    back = read_records(path)
    assert [r.__dict__ for r in back] == [r.__dict__ for r in records]


def test_read_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert read_records(path) == []


def test_nan_energy_strict_error(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = json.dumps({**_record(0).__dict__})
    bad = good.replace('"fc": 0.5', '"fc": NaN')
    path.write_text(good + "\n" + bad + "\n")
    with pytest.raises(RecordError, match=":2:"):
        read_records(path, strict=True)
    assert len(read_records(path, strict=False)) == 1


def test_malformed_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(_record(0).__dict__) + "\nnot json\n")
    with pytest.raises(RecordError, match=":2:"):
        read_records(path, strict=True)
    assert len(read_records(path, strict=False)) == 1


def test_missing_field(tmp_path):
    data = _record(0).__dict__.copy()
    del data["q1"]
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(data) + "\n")
    with pytest.raises(RecordError, match="missing"):
        read_records(path, strict=True)


def test_unknown_major_version_rejected_even_lenient(tmp_path):
    rec = _record(0)
    rec.meta = {**rec.meta, "schema_version": "2.0"}
    path = tmp_path / "future.jsonl"
    path.write_text(json.dumps(rec.__dict__) + "\n")
    for strict in (True, False):
        with pytest.raises(RecordError, match="schema version"):
            read_records(path, strict=strict)


def test_write_rejects_nonfinite(tmp_path):
    rec = _record(0)
    rec.energy = {**rec.energy, "fc": float("nan")}
    with pytest.raises(RecordError):
        write_records([rec], tmp_path / "x.jsonl")


def test_write_rejects_bad_quaternion(tmp_path):
    rec = _record(0)
    rec.rotation_quat_wxyz = [1.0, 1.0, 0.0, 0.0]
    with pytest.raises(RecordError, match="quaternion"):
        write_records([rec], tmp_path / "x.jsonl")


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_round_trip_bit_exact_floats(seed):
    rec = _record(seed)
    again = GraspRecord.from_dict(json.loads(json.dumps(rec.__dict__)))
    assert again.translation == rec.translation
    assert again.rotation_quat_wxyz == rec.rotation_quat_wxyz
    assert again.joint_angles == rec.joint_angles


# -- posed hand export -------------------------------------------------------------


def test_export_identity_pose(toy_hand, tmp_path):
    pose = GraspPose(np.zeros(3), [1, 0, 0, 0], np.zeros(toy_hand.dof))
    path = export_posed_hand(toy_hand, pose, tmp_path / "hand.obj")
    text = path.read_text()
    for name in toy_hand.link_names:
        assert f"g {name}" in text


def test_export_translated_pose(toy_hand, tmp_path):
    t = np.array([0.3, -0.1, 0.2])
    p0 = export_posed_hand(
        toy_hand, GraspPose(np.zeros(3), [1, 0, 0, 0], toy_hand.theta_ref),
        tmp_path / "a.obj")
    p1 = export_posed_hand(
        toy_hand, GraspPose(t, [1, 0, 0, 0], toy_hand.theta_ref),
        tmp_path / "b.obj")
    va = load_mesh(p0).vertices
    vb = load_mesh(p1).vertices
    np.testing.assert_allclose(vb - va, np.tile(t, (len(va), 1)), atol=1e-12)


def test_export_reimport_matches_fk(toy_hand, tmp_path):
    pose = GraspPose([0.05, 0.02, -0.01],
                     quat_from_axis_angle([0.1, 1.0, 0.3], 0.8),
                     toy_hand.theta_ref)
    path = export_posed_hand(toy_hand, pose, tmp_path / "hand.obj")
    merged = load_mesh(path)
    posed = forward_kinematics(toy_hand, pose)
    expected = np.concatenate([
        mesh.vertices @ posed.rot[link].T + posed.pos[link]
        for link, mesh in enumerate(toy_hand.link_meshes) if mesh is not None])
    np.testing.assert_allclose(merged.vertices, expected, atol=1e-6)


# -- statistics ---------------------------------------------------------------------


def test_stats_all_valid_uniform_q1(toy_hand):
    records = [_record(i, q1=0.1) for i in range(10)]
    stats = dataset_stats(records, toy_hand)
    assert stats["mean_q1"] == pytest.approx(0.1)
    assert stats["valid_fraction"] == 1.0
    assert stats["count"] == 10


def test_stats_best10_matches_sort_oracle(toy_hand):
    rng = np.random.default_rng(8)
    records = [_record(i, q1=float(rng.uniform(0, 0.5))) for i in range(100)]
    stats = dataset_stats(records, toy_hand)
    q1s = sorted((r.q1 for r in records), reverse=True)
    assert stats["best10_q1"] == pytest.approx(float(np.mean(q1s[:10])), abs=1e-15)


def test_stats_entropy_matches_quality_module(toy_hand):
    records = [_record(i) for i in range(40)]
    stats = dataset_stats(records, toy_hand)
    thetas = np.array([r.joint_angles for r in records])
    mean_h, _ = joint_entropy(thetas, toy_hand.lower, toy_hand.upper, bins=100)
    assert stats["entropy_mean"] == pytest.approx(mean_h, abs=1e-15)


def test_stats_permutation_invariant(toy_hand):
    records = [_record(i, q1=float(i) / 50) for i in range(50)]
    a = dataset_stats(records, toy_hand)
    b = dataset_stats(records[::-1], toy_hand)
    assert a == b


def test_stats_empty_errors(toy_hand):
    with pytest.raises(RecordError):
        dataset_stats([], toy_hand)


def test_stats_table_mentions_reference(toy_hand):
    text = format_stats_table(dataset_stats([_record(0)], toy_hand))
    assert "0.1145" in text and "5.962" in text
    assert "not a pass/fail gate" in text
