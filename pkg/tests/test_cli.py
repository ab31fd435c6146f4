import hashlib
import json
import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from simready.assets import (
    AssetMetadata,
    BehaviorType,
    MaterialParams,
    PartInfo,
    SimReadyAsset,
    load_asset,
    save_asset,
)
from simready.cli import main
from simready.metrics import compare_assets
from simready.trajectory import load_trajectory

DESC = {
    "shape_name": "pillow",
    "parts": [
        {"name": "cover", "coarse_material": "fabric", "color": "red"},
        {"name": "filling", "coarse_material": "fabric", "color": "white"},
    ],
}


@pytest.fixture(scope="module")
def fixture_asset(tmp_path_factory) -> Path:
    rng = np.random.default_rng(11)
    n = 300
    pts = rng.uniform(0.25, 0.75, (n, 3)).astype(np.float32)
    cols = rng.uniform(0, 1, (n, 3)).astype(np.float32)
    labels = (pts[:, 1] > 0.5).astype(np.int32)
    mats = [
        MaterialParams(E=5e5, nu=0.3, rho=300, behavior=BehaviorType.from_name("M0")),
        MaterialParams(
            E=1e7, nu=0.35, rho=900, behavior=BehaviorType.from_name("M1"), sigma_y=1e6
        ),
    ]
    meta = AssetMetadata(
        category="pillow",
        parts=(PartInfo("base", "fabric"), PartInfo("top", "leather")),
        world_scale=0.3,
        asset_id="clifixture",
    )
    asset = SimReadyAsset.from_materials(
        pts, cols, labels, [mats[i] for i in labels], meta
    )
    path = tmp_path_factory.mktemp("asset") / "fixture.sra"
    save_asset(asset, path)
    return path


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


# ---------------------------------------------------------------- simulate


def test_simulate_writes_trajectory(fixture_asset, tmp_path, capsys):
    out = tmp_path / "run.trj"
    code = run_cli(
        "simulate", "--asset", fixture_asset, "--scenario", "drop",
        "--param", "drop_height=0.4", "--sim-opt", "grid_res=32",
        "--duration", "0.25", "--out", out,
    )
    assert code == 0
    traj = load_trajectory(out)
    assert traj.n_frames == round(0.25 * 24) + 1
    assert traj.scenario == {"type": "drop", "drop_height": 0.4}
    text = capsys.readouterr().out
    assert "substeps" in text and "wall" in text
    assert str(out) in text


def test_simulate_bad_asset_path_names_it(tmp_path, capsys):
    missing = tmp_path / "ghost.sra"
    code = run_cli("simulate", "--asset", missing)
    assert code != 0
    assert str(missing) in capsys.readouterr().err


def test_simulate_requires_asset(capsys):
    assert run_cli("simulate") != 0
    assert "asset" in capsys.readouterr().err


def test_deterministic_repeat_runs_hash_identical(fixture_asset, tmp_path):
    hashes = []
    for name in ("a.trj", "b.trj"):
        out = tmp_path / name
        code = run_cli(
            "simulate", "--asset", fixture_asset, "--deterministic",
            "--sim-opt", "grid_res=32", "--duration", "0.2", "--out", out,
        )
        assert code == 0
        hashes.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert hashes[0] == hashes[1]


def test_print_config_resolves_and_skips_run(fixture_asset, tmp_path, capsys):
    out = tmp_path / "never.trj"
    code = run_cli(
        "simulate", "--asset", fixture_asset, "--print-config",
        "--sim-opt", "grid_res=48", "--out", out,
    )
    assert code == 0
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["sim"]["grid_res"] == 48
    assert resolved["sim"]["dt"] is None
    assert resolved["scenario"] == {"type": "drop", "drop_height": 0.5}
    assert not out.exists()


def test_config_file_precedence(fixture_asset, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "asset": str(fixture_asset),
        "scenario": {"type": "drop", "drop_height": 0.7},
        "sim": {"grid_res": 32},
        "duration": 0.5,
    }))
    code = run_cli(
        "simulate", "--config", cfg, "--print-config",
        "--param", "drop_height=0.3", "--duration", "0.25",
    )
    assert code == 0
    resolved = json.loads(capsys.readouterr().out)
    # flag beats file, file beats default
    assert resolved["scenario"]["drop_height"] == 0.3
    assert resolved["duration"] == 0.25
    assert resolved["sim"]["grid_res"] == 32
    assert resolved["fps"] == 24


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"grid": 32}))
    assert run_cli("simulate", "--config", cfg) != 0
    assert "grid" in capsys.readouterr().err


def test_simulate_renders_frames(fixture_asset, tmp_path):
    out = tmp_path / "run.trj"
    frames = tmp_path / "frames"
    code = run_cli(
        "simulate", "--asset", fixture_asset, "--sim-opt", "grid_res=32",
        "--duration", "0.2", "--out", out, "--frames", frames,
    )
    assert code == 0
    pngs = sorted(frames.glob("frame_*.png"))
    assert len(pngs) == round(0.2 * 24) + 1


# ---------------------------------------------------------------- metrics


def test_metrics_identical_trajectories_zero(fixture_asset, tmp_path, capsys):
    out = tmp_path / "x.trj"
    run_cli("simulate", "--asset", fixture_asset, "--sim-opt", "grid_res=32",
            "--duration", "0.2", "--out", out)
    capsys.readouterr()
    code = run_cli("metrics", "--pred", out, "--truth", out)
    assert code == 0
    assert "sim_chamfer 0\n" in capsys.readouterr().out


def test_metrics_identical_assets_perfect(fixture_asset, tmp_path, capsys):
    record = tmp_path / "rec.json"
    code = run_cli("metrics", "--pred", fixture_asset, "--truth", fixture_asset,
                   "--record", record)
    assert code == 0
    text = capsys.readouterr().out
    for line in ("geometry.chamfer 0", "geometry.iou 1", "material.mae_log10_E 0",
                 "material.behavior_accuracy 1"):
        assert line in text
    stored = json.loads(record.read_text())
    assert stored["metrics"]["material"]["behavior_accuracy"] == 1.0


def test_metrics_matches_library_calls(fixture_asset, tmp_path, capsys):
    shifted = tmp_path / "shifted.sra"
    asset = load_asset(fixture_asset)
    moved = SimReadyAsset(
        points=asset.points + np.float32(0.01),
        colors=asset.colors,
        part_labels=asset.part_labels,
        E=asset.E, nu=asset.nu, sigma_y=asset.sigma_y, phi=asset.phi,
        rho=asset.rho, behavior=asset.behavior, metadata=asset.metadata,
    )
    save_asset(moved, shifted)
    record = tmp_path / "rec.json"
    assert run_cli("metrics", "--pred", shifted, "--truth", fixture_asset,
                   "--record", record) == 0
    stored = json.loads(record.read_text())["metrics"]
    expected = compare_assets(moved, asset).to_dict()
    assert stored["geometry"] == pytest.approx(expected["geometry"])
    assert stored["material"] == pytest.approx(expected["material"])


def test_metrics_incomparable_inputs(fixture_asset, tmp_path, capsys):
    out = tmp_path / "x.trj"
    run_cli("simulate", "--asset", fixture_asset, "--sim-opt", "grid_res=32",
            "--duration", "0.2", "--out", out)
    capsys.readouterr()
    assert run_cli("metrics", "--pred", out, "--truth", fixture_asset) != 0
    assert "both" in capsys.readouterr().err


# ---------------------------------------------------------------- annotate


def write_desc(tmp_path) -> Path:
    path = tmp_path / "desc.json"
    path.write_text(json.dumps(DESC))
    return path


def test_annotate_mock_accepted_proposal(tmp_path, capsys):
    desc = write_desc(tmp_path)
    code = run_cli("annotate", desc, "--mock", "--out-dir", tmp_path / "sess")
    assert code == 0
    text = capsys.readouterr().out
    assert "proposal: ok" in text
    records = list((tmp_path / "sess").glob("*.json"))
    assert len(records) == 1
    stored = json.loads(records[0].read_text())
    assert stored["fine_assignments"] == {"cover": "cotton", "filling": "cotton"}
    assert len(stored["iterations"]) == 1


def test_annotate_prose_response_recorded(tmp_path, capsys):
    desc = write_desc(tmp_path)
    mock = tmp_path / "mock"
    mock.mkdir()
    (mock / "00_fine.txt").write_text('{"cover": "cotton", "filling": "wool"}')
    (mock / "01_params.txt").write_text(
        "I think the pillow is probably quite soft, maybe like foam."
    )
    code = run_cli("annotate", desc, "--mock-dir", mock, "--out-dir", tmp_path / "sess")
    assert code == 0
    text = capsys.readouterr().out
    assert "parse error" in text
    assert "re-queryable" in text
    stored = json.loads(next((tmp_path / "sess").glob("*.json")).read_text())
    assert stored["iterations"][0]["parse_error"] is not None


def test_annotate_transport_exhaustion_exits_nonzero(tmp_path, capsys):
    desc = write_desc(tmp_path)
    mock = tmp_path / "empty-mock"
    mock.mkdir()
    code = run_cli("annotate", desc, "--mock-dir", mock, "--out-dir", tmp_path / "sess")
    assert code == 1
    assert "transport" in capsys.readouterr().err
    stored = json.loads(next((tmp_path / "sess").glob("*.json")).read_text())
    assert stored["transport_error"]


def test_annotate_record_stable_apart_from_timestamps(tmp_path, capsys):
    desc = write_desc(tmp_path)
    texts = []
    for sub in ("one", "two"):
        out = tmp_path / sub
        assert run_cli("annotate", desc, "--mock", "--session-id", "pinnedsession",
                       "--out-dir", out) == 0
        data = json.loads((out / "pinnedsession.json").read_text())
        data.pop("created_at")
        texts.append(json.dumps(data, sort_keys=True))
    assert texts[0] == texts[1]


def test_annotate_invalid_description(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"shape_name": "x", "parts": []}))
    assert run_cli("annotate", bad, "--mock") != 0
    assert "description" in capsys.readouterr().err


# ---------------------------------------------------------------- convert


def test_convert_roundtrip_bit_identical(fixture_asset, tmp_path):
    text = tmp_path / "t.sra"
    binary = tmp_path / "b.sra"
    assert run_cli("convert", fixture_asset, text) == 0
    assert run_cli("convert", text, binary) == 0
    assert binary.read_bytes() == fixture_asset.read_bytes()
    # sniffing flipped modes automatically
    header = json.loads(text.read_bytes().split(b"\n", 1)[0])
    assert header["mode"] == "text"


def test_convert_explicit_mode(fixture_asset, tmp_path):
    out = tmp_path / "same.sra"
    assert run_cli("convert", fixture_asset, out, "--mode", "binary") == 0
    assert out.read_bytes() == fixture_asset.read_bytes()


def test_convert_missing_input(tmp_path, capsys):
    assert run_cli("convert", tmp_path / "no.sra", tmp_path / "o.sra") != 0
    assert "no.sra" in capsys.readouterr().err


# ---------------------------------------------------------------- serve

SERVE_TIMEOUT = 60.0


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class ServerProc:
    def __init__(self, data_dir: Path, port: int):
        self.port = port
        self.base = f"http://127.0.0.1:{port}"
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "simready.cli", "serve", "--port", str(port),
             "--data-dir", str(data_dir), "--mock"],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
        )

    def wait_ready(self):
        import httpx

        deadline = time.time() + SERVE_TIMEOUT
        while time.time() < deadline:
            if self.proc.poll() is not None:
                out = self.proc.stdout.read().decode()
                raise RuntimeError(f"server exited early:\n{out}")
            try:
                httpx.get(f"{self.base}/api/sessions", timeout=2.0)
                return self
            except httpx.TransportError:
                time.sleep(0.2)
        raise TimeoutError("server did not come up")

    def stop(self, sig=signal.SIGTERM):
        if self.proc.poll() is None:
            self.proc.send_signal(sig)
            try:
                self.proc.wait(timeout=SERVE_TIMEOUT)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


@pytest.fixture()
def httpx_client():
    import httpx

    with httpx.Client(timeout=10.0) as client:
        yield client


def test_serve_empty_then_restart_preserves(tmp_path, httpx_client):
    data = tmp_path / "data"
    port = free_port()
    server = ServerProc(data, port).wait_ready()
    try:
        assert httpx_client.get(f"{server.base}/api/sessions").json() == {"sessions": []}
        r = httpx_client.post(f"{server.base}/api/sessions", json={"description": DESC})
        assert r.status_code == 201
        sid = r.json()["session_id"]
    finally:
        server.stop()

    server = ServerProc(data, free_port()).wait_ready()
    try:
        listed = httpx_client.get(f"{server.base}/api/sessions").json()["sessions"]
        assert [s["session_id"] for s in listed] == [sid]
    finally:
        server.stop()


def test_serve_interrupt_never_loses_job(tmp_path, httpx_client):
    data = tmp_path / "data"
    server = ServerProc(data, free_port()).wait_ready()
    try:
        r = httpx_client.post(f"{server.base}/api/sessions", json={"description": DESC})
        sid = r.json()["session_id"]
        httpx_client.post(f"{server.base}/api/sessions/{sid}/annotate")
        r = httpx_client.post(
            f"{server.base}/api/sessions/{sid}/simulate",
            json={"scenario": {"type": "drop"}, "duration": 1.0,
                  "config": {"grid_res": 32}},
        )
        assert r.status_code == 202
        job_id = r.json()["job_id"]
        deadline = time.time() + SERVE_TIMEOUT
        while time.time() < deadline:
            if httpx_client.get(f"{server.base}/api/jobs/{job_id}").json()["status"] == "running":
                break
            time.sleep(0.05)
        server.stop(signal.SIGINT)
    finally:
        server.stop()

    stored = json.loads((data / "jobs" / f"{job_id}.json").read_text())
    # graceful shutdown drains the pool; the record never sticks mid-flight
    assert stored["status"] in ("done", "failed")


def test_serve_refuses_taken_port(tmp_path, capsys):
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        code = run_cli("serve", "--port", port, "--data-dir", tmp_path / "d")
        assert code != 0
        assert str(port) in capsys.readouterr().err
    finally:
        blocker.close()


# ---------------------------------------------------------------- misc


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
    assert "simready" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit):
        run_cli("frobnicate")
