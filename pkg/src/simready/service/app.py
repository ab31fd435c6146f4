"""HTTP review service: session CRUD, simulation jobs, verdicts, re-queries.

All API routes live under /api and speak JSON; errors use a flat
{code, message, details} shape. A static directory (the workbench bundle) can
be mounted at /. State machine per session:

    created -> proposed -> simulated -> accepted
                   ^            |
                   +-- awaiting_requery (implausible verdict, then re-query)

Expert parameter override is an extension endpoint that bypasses the VLM and
re-proposes directly.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import HTTPException
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..annotation import (
    AnnotationError,
    AnnotationSession,
    ChatClientError,
    HttpChatClient,
    IterationRecord,
    MockChatClient,
    ChatMessage,
    parse_parameter_response,
    ResponseParseError,
    run_annotation_round,
    scripted_responses,
    validate_proposal,
)
from ..annotation.defaults import reference_parameter_response
from ..annotation.session import ObjectDescription
from ..assets import AssetError, load_asset
from ..mpm import ConfigError, SimConfig, SimulationError
from ..scenarios import ScenarioError, scenario_from_dict, scenario_name, scenario_to_dict
from ..simulate import run_simulation, sim_config_from_dict
from ..trajectory import canonical_json
from .geometry import apply_materials, placeholder_cloud
from .jobs import JobManager, ReviewJob, new_job_id
from .render import render_trajectory
from .store import DataStore, ServiceSession, StateError

ENV_DATA_DIR = "SIMREADY_DATA_DIR"


class ApiError(HTTPException):
    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        super().__init__(
            status_code=status,
            detail={"code": code, "message": message, "details": details or {}},
        )


def _not_found(kind: str, ident: str) -> ApiError:
    return ApiError(404, "not_found", f"unknown {kind} {ident!r}")


def _conflict(message: str, **details) -> ApiError:
    return ApiError(409, "conflict", message, details or None)


def _invalid(message: str, **details) -> ApiError:
    return ApiError(400, "validation_error", message, details or None)


# ------------------------------------------------------------------ views


def _iteration_view(index: int, it: IterationRecord) -> dict:
    validation = None
    if it.validation is not None:
        validation = {
            "ok": it.validation.ok,
            "errors": list(it.validation.errors),
            "clamps": list(it.validation.clamps),
            "materials": {
                name: {
                    "behavior": m.behavior.name,
                    "E": m.E,
                    "nu": m.nu,
                    "rho": m.rho,
                    "sigma_y": m.sigma_y,
                    "phi": m.phi,
                }
                for name, m in it.validation.materials.items()
            },
        }
    return {
        "index": index,
        "messages": [{"role": m.role, "text": m.text} for m in it.messages],
        "response": it.raw_response,
        "parse_error": it.parse_error,
        "warnings": list(it.proposal.warnings) if it.proposal else [],
        "validation": validation,
        "verdict": it.verdict,
        "test_case": it.test_case,
        "expert_comment": it.expert_comment,
    }


def _job_view(job: ReviewJob) -> dict:
    return {
        "job_id": job.job_id,
        "session_id": job.session_id,
        "scenario": job.scenario,
        "status": job.status,
        "error": job.error,
        "n_frames": job.n_frames,
        "duration": job.duration,
        "fps": job.fps,
        "created_at": job.created_at,
        "finished_at": job.finished_at,
    }


def _session_summary(s: ServiceSession) -> dict:
    return {
        "session_id": s.session_id,
        "state": s.state,
        "shape_name": s.annotation.description.shape_name,
        "n_parts": len(s.annotation.description.parts),
        "rectification_count": s.annotation.rectification_count,
        "n_jobs": len(s.job_ids),
        "created_at": s.annotation.created_at,
    }


def _session_view(s: ServiceSession, store: DataStore) -> dict:
    a = s.annotation
    jobs = []
    for job_id in s.job_ids:
        try:
            jobs.append(_job_view(store.get_job(job_id)))
        except KeyError:
            continue
    return {
        **_session_summary(s),
        "description": a.description.to_dict(),
        "fine": {
            "assignments": dict(a.fine_assignments),
            "warnings": list(a.fine_warnings),
            "parse_error": a.fine_parse_error,
        },
        "iterations": [_iteration_view(i, it) for i, it in enumerate(a.iterations)],
        "verdicts": list(s.verdicts),
        "jobs": jobs,
    }


# ------------------------------------------------------------------ app


def create_app(
    data_dir: str | Path | None = None,
    mock: bool = False,
    mock_dir: str | Path | None = None,
    n_workers: int = 2,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the review service.

    mock=True answers annotation queries from the deterministic reference
    table (re-queries soften E by halving per rectification); mock_dir replays
    canned responses from files instead. Without either, the live endpoint
    from SIMREADY_VLM_URL is used.
    """
    root = Path(data_dir) if data_dir else Path(os.environ.get(ENV_DATA_DIR, "simready-data"))
    store = DataStore(root)
    manager = JobManager(store.save_job, n_workers=n_workers)
    app = FastAPI(title="simready review service", docs_url=None, redoc_url=None)

    def chat_client(desc: ObjectDescription, requery_index: int | None = None):
        if mock_dir is not None:
            return MockChatClient.from_dir(mock_dir)
        if mock:
            if requery_index is None:
                return MockChatClient(responses=scripted_responses(desc))
            scale = 0.5 ** requery_index
            return MockChatClient(
                responses=[reference_parameter_response(desc, scale=scale)]
            )
        try:
            return HttpChatClient()
        except ChatClientError as e:
            raise ApiError(503, "not_configured", str(e)) from e

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict) or "code" not in detail:
            detail = {"code": "error", "message": str(detail), "details": {}}
        return JSONResponse(status_code=exc.status_code, content=detail)

    def get_session_or_404(session_id: str) -> ServiceSession:
        try:
            return store.get_session(session_id)
        except KeyError:
            raise _not_found("session", session_id) from None

    def get_job_or_404(job_id: str) -> ReviewJob:
        try:
            return store.get_job(job_id)
        except KeyError:
            raise _not_found("job", job_id) from None

    # -- sessions

    @app.get("/api/sessions")
    def list_sessions():
        return {"sessions": [_session_summary(s) for s in store.list_sessions()]}

    @app.post("/api/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        if "description" not in payload:
            raise _invalid("body must contain a 'description' object")
        try:
            desc = ObjectDescription.from_dict(payload["description"]).validate()
        except (AnnotationError, KeyError, TypeError) as e:
            raise _invalid(f"invalid description: {e}") from None

        asset_path = payload.get("asset_path")
        if asset_path is not None:
            path = Path(asset_path)
            if not path.is_file():
                raise _invalid(f"asset file not found: {asset_path}")
            try:
                asset = load_asset(path)
            except AssetError as e:
                raise _invalid(f"unreadable asset {asset_path}: {e}") from None
            if len(asset.metadata.parts) != len(desc.parts):
                raise _invalid(
                    "asset part count does not match description",
                    asset_parts=len(asset.metadata.parts),
                    description_parts=len(desc.parts),
                )
            asset_path = str(path.resolve())

        session = store.create_session(desc, asset_path=asset_path)
        return _session_view(session, store)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_view(get_session_or_404(session_id), store)

    @app.post("/api/sessions/{session_id}/annotate")
    def annotate(session_id: str):
        with store.session_lock(session_id):
            session = get_session_or_404(session_id)
            if session.state != "created":
                raise _conflict(
                    f"session already annotated (state {session.state})",
                    state=session.state,
                )
            client = chat_client(session.annotation.description)
            try:
                run_annotation_round(session.annotation, client)
            except ChatClientError as e:
                store.save_session(session)
                raise ApiError(502, "upstream_error", str(e)) from e
            session.set_state("proposed")
            store.save_session(session)
            return _session_view(session, store)

    # -- simulation

    @app.post("/api/sessions/{session_id}/simulate", status_code=202)
    def simulate(session_id: str, payload: dict = Body(default={})):
        with store.session_lock(session_id):
            session = get_session_or_404(session_id)
            if session.state not in ("proposed", "simulated"):
                raise _conflict(
                    f"cannot simulate in state {session.state}", state=session.state
                )
            materials = session.annotation.latest_materials
            if materials is None:
                raise _conflict("session has no validated proposal to simulate")

            try:
                scenario = scenario_from_dict(payload.get("scenario", {"type": "drop"}))
                cfg = sim_config_from_dict(payload.get("config", {}))
            except (ScenarioError, ConfigError, ValueError) as e:
                raise _invalid(str(e)) from None
            duration = float(payload.get("duration", 1.0))
            fps = int(payload.get("fps", 24))
            if duration <= 0 or fps < 1:
                raise _invalid("duration must be > 0 and fps >= 1")

            desc = session.annotation.description
            try:
                if session.asset_path:
                    stored = load_asset(session.asset_path)
                    points, colors, labels = stored.points, stored.colors, stored.part_labels
                    world_scale = stored.metadata.world_scale
                else:
                    points, colors, labels = placeholder_cloud(desc)
                    world_scale = 0.4
                asset = apply_materials(
                    points, colors, labels, desc, materials,
                    asset_id=session.session_id, world_scale=world_scale,
                )
            except (AssetError, ValueError) as e:
                raise _invalid(f"cannot build simulation asset: {e}") from None

            job = ReviewJob(
                job_id=new_job_id(),
                session_id=session_id,
                scenario=scenario_to_dict(scenario),
                sim_config=payload.get("config", {}),
                duration=duration,
                fps=fps,
            )
            session.job_ids.append(job.job_id)
            session.set_state("simulated")
            store.save_session(session)

            def payload_fn(
                asset=asset, scenario=scenario, cfg=cfg, duration=duration,
                fps=fps, job_id=job.job_id, colors=asset.colors,
            ):
                traj = run_simulation(asset, scenario, cfg=cfg, duration=duration, fps=fps)
                traj_path = store.trajectory_path(job_id)
                from ..trajectory import save_trajectory

                save_trajectory(traj, traj_path)
                frames = store.frames_dir(job_id)
                n = render_trajectory(traj, colors, frames)
                return str(traj_path), str(frames), n

            manager.submit(job, payload_fn)
            return _job_view(job)

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        return _job_view(get_job_or_404(job_id))

    @app.get("/api/jobs/{job_id}/frames/{k}")
    def get_frame(job_id: str, k: int):
        job = get_job_or_404(job_id)
        if job.status != "done":
            raise _conflict(f"job is {job.status}, frames not available", status=job.status)
        if k < 0 or k >= job.n_frames:
            raise _not_found("frame", f"{job_id}/{k}")
        path = Path(job.frames_dir) / f"frame_{k:04d}.png"
        if not path.is_file():
            raise _not_found("frame", f"{job_id}/{k}")
        return FileResponse(path, media_type="image/png")

    @app.get("/api/jobs/{job_id}/trajectory")
    def get_trajectory(job_id: str):
        job = get_job_or_404(job_id)
        if job.status != "done":
            raise _conflict(f"job is {job.status}, trajectory not available", status=job.status)
        return FileResponse(
            job.trajectory_path,
            media_type="application/octet-stream",
            filename=f"{job_id}.trj",
        )

    # -- verdicts and re-queries

    @app.post("/api/sessions/{session_id}/verdict")
    def record_verdict(session_id: str, payload: dict = Body(...)):
        decision = payload.get("decision")
        if decision not in ("plausible", "implausible"):
            raise _invalid("decision must be 'plausible' or 'implausible'")
        job_id = payload.get("job_id")
        if not job_id:
            raise _invalid("body must reference the reviewed 'job_id'")

        comments = payload.get("comments", [])
        if not isinstance(comments, list):
            raise _invalid("comments must be a list")
        parsed_comments = []
        for c in comments:
            if isinstance(c, str):
                part, text = "", c
            elif isinstance(c, dict):
                part, text = str(c.get("part", "")), str(c.get("text", ""))
            else:
                raise _invalid("each comment must be a string or {part, text}")
            if text.strip():
                parsed_comments.append({"part": part, "text": text.strip()})
        if decision == "implausible" and not parsed_comments:
            raise _invalid("an implausible verdict requires at least one comment")

        with store.session_lock(session_id):
            session = get_session_or_404(session_id)
            job = get_job_or_404(job_id)
            if job.session_id != session_id:
                raise _invalid(f"job {job_id!r} does not belong to session {session_id!r}")
            if job.status != "done":
                raise _conflict(f"job is {job.status}; verdicts need a finished run")
            if session.state != "simulated":
                raise _conflict(
                    f"cannot record a verdict in state {session.state}",
                    state=session.state,
                )

            comment_text = "; ".join(
                f"the {c['part']} {c['text']}" if c["part"] else c["text"]
                for c in parsed_comments
            )
            test_case = job.scenario.get("type", "drop")
            try:
                session.annotation.record_verdict(
                    decision, test_case=test_case, comment=comment_text
                )
            except AnnotationError as e:
                raise _conflict(str(e)) from None

            from datetime import datetime, timezone

            session.verdicts.append(
                {
                    "job_id": job_id,
                    "scenario": test_case,
                    "decision": decision,
                    "comments": parsed_comments,
                    "reviewer": str(payload.get("reviewer", "")),
                    "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                }
            )
            session.set_state("accepted" if decision == "plausible" else "awaiting_requery")
            store.save_session(session)
            return _session_view(session, store)

    @app.post("/api/sessions/{session_id}/requery")
    def requery(session_id: str):
        with store.session_lock(session_id):
            session = get_session_or_404(session_id)
            if session.state != "awaiting_requery":
                raise _conflict(
                    f"cannot re-query in state {session.state}", state=session.state
                )
            client = chat_client(
                session.annotation.description,
                requery_index=session.annotation.rectification_count + 1,
            )
            try:
                run_annotation_round(session.annotation, client)
            except ChatClientError as e:
                store.save_session(session)
                raise ApiError(502, "upstream_error", str(e)) from e
            except AnnotationError as e:
                raise _conflict(str(e)) from None
            session.set_state("proposed")
            store.save_session(session)
            return _session_view(session, store)

    @app.post("/api/sessions/{session_id}/override")
    def override(session_id: str, payload: dict = Body(...)):
        """Extension: direct expert parameter edit, bypassing the VLM."""
        materials = payload.get("materials")
        if not isinstance(materials, dict) or not materials:
            raise _invalid("body must contain a non-empty 'materials' map")

        with store.session_lock(session_id):
            session = get_session_or_404(session_id)
            if session.state == "accepted":
                raise _conflict("session already accepted; materials are frozen")
            raw = json.dumps(materials, indent=2)
            try:
                proposal = parse_parameter_response(raw)
            except ResponseParseError as e:
                raise _invalid(f"unparseable override: {e}") from None
            result = validate_proposal(session.annotation.description, proposal, strict=True)
            if not result.ok:
                raise _invalid(
                    "override failed validation", errors=list(result.errors)
                )

            a = session.annotation
            last = a.latest_iteration
            if last is not None and last.verdict == "pending":
                a.record_verdict(
                    "implausible", comment="superseded by an expert parameter override"
                )
            a.iterations.append(
                IterationRecord(
                    messages=(ChatMessage("user", "expert parameter override"),),
                    raw_response=canonical_json(materials),
                    proposal=proposal,
                    validation=result,
                )
            )
            session.set_state("proposed")
            store.save_session(session)
            return _session_view(session, store)

    # -- static workbench bundle

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="workbench")
    else:

        @app.get("/")
        def index():
            return {"service": "simready review service", "api": "/api/sessions"}

    @app.on_event("shutdown")
    def _shutdown():
        manager.shutdown(wait=True)

    app.state.store = store
    app.state.jobs = manager
    return app
