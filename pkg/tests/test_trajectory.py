import json

import numpy as np
import pytest

from simready.trajectory import (
    Trajectory,
    TrajectoryFormatError,
    canonical_json,
    load_trajectory,
    run_config_hash,
    save_trajectory,
)


def make_traj(T=5, N=12, seed=0):
    rng = np.random.default_rng(seed)
    frames = rng.uniform(0, 2, size=(T, N, 3)).astype(np.float32)
    ts = np.arange(T) / 24.0
    return Trajectory.from_frames(
        asset_id="asset-1",
        scenario={"type": "drop", "drop_height": 0.5},
        sim_config={"grid_res": 32, "domain_size": 2.0},
        timestamps=ts,
        frames=frames,
    )


def test_roundtrip_bit_for_bit(tmp_path):
    traj = make_traj()
    p1 = tmp_path / "a.trj"
    p2 = tmp_path / "b.trj"
    save_trajectory(traj, p1)
    back = load_trajectory(p1)
    assert np.array_equal(back.frames, traj.frames)
    assert np.array_equal(back.timestamps, traj.timestamps)
    assert back.asset_id == traj.asset_id
    assert back.scenario == traj.scenario
    assert back.config_hash == traj.config_hash
    save_trajectory(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_timestamps_survive_at_full_precision(tmp_path):
    ts = np.array([0.0, 1 / 3, 2 / 3 + 1e-16, 1.0000000001])
    traj = Trajectory.from_frames(
        "a", {"type": "drop"}, {}, ts, np.zeros((4, 3, 3), np.float32)
    )
    p = tmp_path / "t.trj"
    save_trajectory(traj, p)
    np.testing.assert_array_equal(load_trajectory(p).timestamps, ts)


def test_config_hash_depends_on_content():
    h1 = run_config_hash("a", {"type": "drop"}, {"grid_res": 32})
    h2 = run_config_hash("a", {"type": "drop"}, {"grid_res": 64})
    h3 = run_config_hash("b", {"type": "drop"}, {"grid_res": 32})
    assert h1 != h2 and h1 != h3
    assert h1 == run_config_hash("a", {"type": "drop"}, {"grid_res": 32})


def test_canonical_json_key_order_invariant():
    assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1})


def test_rejects_nonincreasing_timestamps():
    with pytest.raises(TrajectoryFormatError, match="increasing"):
        Trajectory.from_frames(
            "a", {}, {}, [0.0, 0.2, 0.2], np.zeros((3, 2, 3), np.float32)
        )


def test_rejects_nan_positions():
    frames = np.zeros((2, 2, 3), np.float32)
    frames[1, 0, 0] = np.nan
    with pytest.raises(TrajectoryFormatError, match="finite"):
        Trajectory.from_frames("a", {}, {}, [0.0, 0.1], frames)


def test_rejects_truncated_blob(tmp_path):
    traj = make_traj()
    p = tmp_path / "t.trj"
    save_trajectory(traj, p)
    data = p.read_bytes()
    p.write_bytes(data[:-8])
    with pytest.raises(TrajectoryFormatError, match="blob"):
        load_trajectory(p)


def test_rejects_bad_magic(tmp_path):
    p = tmp_path / "x.trj"
    p.write_bytes(b'{"format":"NOPE"}\n')
    with pytest.raises(TrajectoryFormatError, match="format"):
        load_trajectory(p)


def test_rejects_tampered_config(tmp_path):
    # editing the header without rehashing must be detected
    traj = make_traj()
    p = tmp_path / "t.trj"
    save_trajectory(traj, p)
    head, _, blob = p.read_bytes().partition(b"\n")
    header = json.loads(head)
    header["sim_config"]["grid_res"] = 99
    p.write_bytes(json.dumps(header, separators=(",", ":")).encode() + b"\n" + blob)
    with pytest.raises(TrajectoryFormatError, match="config_hash"):
        load_trajectory(p)


def test_rejects_missing_header_field(tmp_path):
    traj = make_traj()
    p = tmp_path / "t.trj"
    save_trajectory(traj, p)
    head, _, blob = p.read_bytes().partition(b"\n")
    header = json.loads(head)
    del header["timestamps"]
    p.write_bytes(json.dumps(header, separators=(",", ":")).encode() + b"\n" + blob)
    with pytest.raises(TrajectoryFormatError, match="timestamps"):
        load_trajectory(p)
