"""Command-line front end.

Subcommands: simulate, metrics, annotate, serve, convert. Each command is
reproducible from a config file alone; flags override file values which
override defaults. simulate --print-config echoes the fully resolved run
configuration for provenance.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import socket
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .annotation import (
    AnnotationError,
    AnnotationSession,
    ChatClientError,
    HttpChatClient,
    MockChatClient,
    ObjectDescription,
    run_annotation_round,
    scripted_responses,
)
from .assets import AssetError, load_asset, save_asset
from .metrics import (
    DEFAULT_F_SCORE_TAU,
    DEFAULT_VOXEL_RES,
    MetricsError,
    compare_assets,
    compare_trajectories,
)
from .mpm import ConfigError, SimulationError
from .scenarios import ScenarioError, scenario_from_dict, scenario_to_dict
from .simulate import sim_config_from_dict, sim_config_to_dict, simulate_with_diagnostics
from .trajectory import TrajectoryFormatError, load_trajectory, save_trajectory


class CliError(Exception):
    """User-facing failure; main prints it and exits nonzero."""


# ---------------------------------------------------------------- run config


@dataclass
class RunConfig:
    """Everything a simulate or metrics invocation needs, file-serializable."""

    asset: str | None = None
    scenario: dict = field(default_factory=lambda: {"type": "drop"})
    sim: dict = field(default_factory=dict)
    duration: float = 1.0
    fps: int = 24
    out: str | None = None
    frames_dir: str | None = None
    pred: str | None = None
    truth: str | None = None
    voxel_res: int = DEFAULT_VOXEL_RES
    f_score_tau: float = DEFAULT_F_SCORE_TAU
    record: str | None = None


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise CliError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise CliError(f"unknown config keys in {path}: {', '.join(sorted(unknown))}")
    return data


def _parse_kv(pairs: list[str], flag: str) -> dict:
    out = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise CliError(f"{flag} expects key=value, got {pair!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then flags."""
    data = dataclasses.asdict(RunConfig())
    if getattr(args, "config", None):
        data.update(_load_config_file(args.config))

    if getattr(args, "asset", None) is not None:
        data["asset"] = args.asset
    if getattr(args, "scenario", None) is not None:
        if data["scenario"].get("type") != args.scenario:
            data["scenario"] = {"type": args.scenario}
    data["scenario"].update(_parse_kv(getattr(args, "param", None) or [], "--param"))
    data["sim"].update(_parse_kv(getattr(args, "sim_opt", None) or [], "--sim-opt"))
    for name, attr in (
        ("duration", "duration"),
        ("fps", "fps"),
        ("out", "out"),
        ("frames_dir", "frames"),
        ("pred", "pred"),
        ("truth", "truth"),
        ("voxel_res", "voxel_res"),
        ("f_score_tau", "tau"),
        ("record", "record"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            data[name] = value
    if getattr(args, "deterministic", False):
        data["sim"]["deterministic"] = True
    return RunConfig(**data)


# ---------------------------------------------------------------- simulate


def cmd_simulate(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    if not rc.asset:
        raise CliError("an asset is required (--asset or 'asset' in the config file)")
    asset_path = Path(rc.asset)
    if not asset_path.is_file():
        raise CliError(f"asset file not found: {rc.asset}")

    scenario = scenario_from_dict(rc.scenario)
    cfg = sim_config_from_dict(rc.sim)
    out = Path(rc.out) if rc.out else Path(f"{asset_path.stem}_{rc.scenario['type']}.trj")

    if args.print_config:
        resolved = dataclasses.asdict(rc)
        resolved["scenario"] = scenario_to_dict(scenario)
        resolved["sim"] = sim_config_to_dict(cfg)
        resolved["out"] = str(out)
        print(json.dumps(resolved, indent=2, sort_keys=True))
        return 0

    asset = load_asset(asset_path)
    print(f"asset: {rc.asset} ({asset.n_points} particles, {len(asset.metadata.parts)} parts)")
    print(f"scenario: {json.dumps(scenario_to_dict(scenario), sort_keys=True)}")
    t0 = time.perf_counter()
    traj, diag = simulate_with_diagnostics(
        asset, scenario, cfg=cfg, duration=rc.duration, fps=rc.fps
    )
    wall = time.perf_counter() - t0
    save_trajectory(traj, out)
    digest = hashlib.sha256(out.read_bytes()).hexdigest()

    if rc.frames_dir:
        from .service.render import render_trajectory

        n = render_trajectory(traj, asset.colors, rc.frames_dir)
        print(f"frames: {n} PNGs in {rc.frames_dir}")
    print(f"run: {traj.n_frames} frames, {diag.n_substeps} substeps, "
          f"{diag.n_clamped} deformation clamps, {wall:.2f} s wall")
    print(f"wrote {out} (sha256 {digest})")
    return 0


# ---------------------------------------------------------------- metrics


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, float]]:
    items = []
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(_flatten(value, f"{name}."))
        elif value is not None:
            items.append((name, value))
    return items


def cmd_metrics(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    if not rc.pred or not rc.truth:
        raise CliError("metrics needs --pred and --truth (or config fields)")
    for label, path in (("pred", rc.pred), ("truth", rc.truth)):
        if not Path(path).is_file():
            raise CliError(f"{label} file not found: {path}")

    kinds = {Path(rc.pred).suffix, Path(rc.truth).suffix}
    if kinds == {".sra"}:
        report = compare_assets(
            load_asset(rc.pred), load_asset(rc.truth),
            res=rc.voxel_res, tau=rc.f_score_tau,
        )
    elif kinds == {".trj"}:
        report = compare_trajectories(load_trajectory(rc.pred), load_trajectory(rc.truth))
    else:
        raise CliError(
            f"cannot compare {rc.pred} with {rc.truth}: inputs must both be "
            ".sra assets or both .trj trajectories"
        )

    for name, value in _flatten(report.to_dict()):
        print(f"{name} {value:.10g}")
    if rc.record:
        payload = {
            "pred": rc.pred,
            "truth": rc.truth,
            "options": {"voxel_res": rc.voxel_res, "f_score_tau": rc.f_score_tau},
            "metrics": report.to_dict(),
        }
        Path(rc.record).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {rc.record}")
    return 0


# ---------------------------------------------------------------- annotate


def _load_description(path: str) -> ObjectDescription:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"description file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise CliError(f"description file {path} is not valid JSON: {e}")
    try:
        return ObjectDescription.from_dict(data).validate()
    except (AnnotationError, KeyError, TypeError) as e:
        raise CliError(f"invalid description in {path}: {e}")


def _print_proposal_summary(session: AnnotationSession) -> None:
    if session.fine_assignments:
        pairs = ", ".join(f"{k}={v}" for k, v in sorted(session.fine_assignments.items()))
        print(f"fine materials: {pairs}")
    it = session.latest_iteration
    if it is None:
        print("proposal: none")
        return
    if it.parse_error:
        print(f"proposal: parse error: {it.parse_error}")
        print("the raw response is recorded; the session stays re-queryable")
        return
    v = it.validation
    if v is None:
        print("proposal: not validated")
        return
    if v.ok:
        print("proposal: ok")
        for name in sorted(v.materials):
            m = v.materials[name]
            extra = ""
            if m.sigma_y is not None:
                extra += f"  sigma_y={m.sigma_y:g} Pa"
            if m.phi is not None:
                extra += f"  phi={m.phi:.4f} rad"
            print(f"  {name}: {m.behavior.name}  E={m.E:g} Pa  nu={m.nu:g}  "
                  f"rho={m.rho:g} kg/m^3{extra}")
    else:
        print(f"proposal: {len(v.errors)} validation errors")
        for err in v.errors:
            print(f"  - {err}")
    for clamp in (v.clamps if v else ()):
        print(f"  clamped: {clamp}")
    for warning in (it.proposal.warnings if it.proposal else ()):
        print(f"  warning: {warning}")


def cmd_annotate(args: argparse.Namespace) -> int:
    desc = _load_description(args.description)
    if args.mock_dir:
        client = MockChatClient.from_dir(args.mock_dir)
    elif args.mock:
        client = MockChatClient(responses=scripted_responses(desc))
    else:
        client = HttpChatClient()

    session = AnnotationSession.new(desc, session_id=args.session_id)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        run_annotation_round(session, client)
    except ChatClientError as e:
        path = session.save(out_dir)
        print(f"error: annotation transport failed: {e}", file=sys.stderr)
        print(f"partial session record in {path}", file=sys.stderr)
        return 1
    path = session.save(out_dir)
    print(f"session: {session.session_id}")
    _print_proposal_summary(session)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------- serve


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as e:
        raise CliError(f"cannot bind {args.host}:{args.port}: {e}")

    app = create_app(
        data_dir=args.data_dir,
        mock=args.mock,
        mock_dir=args.mock_dir,
        n_workers=args.workers,
        static_dir=args.static,
    )
    print(f"data dir: {app.state.store.root}")
    if args.mock or args.mock_dir:
        print("annotation backend: mock")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------- convert


def _sniff_asset_mode(path: Path) -> str:
    try:
        with open(path, "rb") as f:
            header = json.loads(f.readline().decode("utf-8"))
        mode = header.get("mode")
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read asset header from {path}: {e}")
    if mode not in ("binary", "text"):
        raise CliError(f"asset header of {path} has no usable storage mode")
    return mode


def cmd_convert(args: argparse.Namespace) -> int:
    src = Path(args.input)
    if not src.is_file():
        raise CliError(f"asset file not found: {args.input}")
    mode = args.mode or {"binary": "text", "text": "binary"}[_sniff_asset_mode(src)]
    asset = load_asset(src)
    save_asset(asset, args.output, mode=mode)
    print(f"wrote {args.output} ({mode}, {asset.n_points} points)")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simready",
        description="simulation-ready asset toolkit: simulate, score, annotate, review",
    )
    parser.add_argument("--version", action="version", version=f"simready {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario on an asset, write a trajectory")
    p.add_argument("--config", help="JSON run-config file; flags override its fields")
    p.add_argument("--asset", help="input .sra asset")
    p.add_argument("--scenario", help="scenario type (drop, throw, tilt, drag, wind)")
    p.add_argument("--param", action="append", metavar="K=V",
                   help="scenario parameter override, repeatable")
    p.add_argument("--sim-opt", action="append", metavar="K=V",
                   help="simulation config override, repeatable")
    p.add_argument("--duration", type=float, help="simulated seconds (default 1.0)")
    p.add_argument("--fps", type=int, help="trajectory sampling rate (default 24)")
    p.add_argument("--out", help="output .trj path")
    p.add_argument("--frames", help="also render per-frame PNGs into this directory")
    p.add_argument("--deterministic", action="store_true",
                   help="record deterministic mode (runs are always bit-stable)")
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved run config and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="compare two assets or two trajectories")
    p.add_argument("--config", help="JSON run-config file; flags override its fields")
    p.add_argument("--pred", help="predicted .sra or .trj")
    p.add_argument("--truth", help="reference .sra or .trj")
    p.add_argument("--voxel-res", type=int, dest="voxel_res",
                   help=f"occupancy grid resolution (default {DEFAULT_VOXEL_RES})")
    p.add_argument("--tau", type=float, help=f"f-score threshold (default {DEFAULT_F_SCORE_TAU})")
    p.add_argument("--record", help="also write a JSON metrics record here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("annotate", help="run the two-round material annotation")
    p.add_argument("description", help="JSON object description file")
    p.add_argument("--mock", action="store_true",
                   help="answer from the built-in reference table instead of a live model")
    p.add_argument("--mock-dir", help="answer from response files in this directory")
    p.add_argument("--out-dir", default=".", help="directory for the session record")
    p.add_argument("--session-id", help="pin the session id (default: random)")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("serve", help="run the HTTP review service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8151)
    p.add_argument("--data-dir", help="persistent state directory (default $SIMREADY_DATA_DIR)")
    p.add_argument("--mock", action="store_true", help="mock annotation backend")
    p.add_argument("--mock-dir", help="canned annotation responses directory")
    p.add_argument("--workers", type=int, default=2, help="simulation worker threads")
    p.add_argument("--static", help="static workbench bundle to mount at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("convert", help="convert an asset between text and binary storage")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mode", choices=("binary", "text"),
                   help="target storage mode (default: the opposite of the input)")
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (AssetError, TrajectoryFormatError, ScenarioError, ConfigError,
            SimulationError, MetricsError, AnnotationError, ChatClientError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
