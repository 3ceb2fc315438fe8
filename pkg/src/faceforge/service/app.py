"""HTTP API over the retargeting engine.

Routes follow the workbench session flow: create a project from asset
files, initialize (per-frame estimation), then edit frames, keyframes, and
preferences; finetune runs as a background job polled via /jobs/{id}.
"""

from __future__ import annotations

import json
import os
import time

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse

from ..animation import (add_keyframe, estimate_track, export_track,
                         single_image_ramp)
from ..fitter import FitConfig, landmark_sequence_from_dict
from ..hitl import apply_ledger_preference, clear_preference, record_adjustment
from ..model import model_from_dict
from ..rig import rig_from_dict, validate_rig
from ..adapter import checkpoint_from_dict
from . import schemas
from .store import ProjectStore

DEFAULT_STORE_ENV = "FACEFORGE_STORE"


def _load_doc(value):
    if isinstance(value, str):
        with open(value) as f:
            return json.load(f)
    return value


def create_app(store_path=None) -> FastAPI:
    store = ProjectStore(store_path
                         or os.environ.get(DEFAULT_STORE_ENV, "faceforge-store"))
    app = FastAPI(title="faceforge")
    app.state.store = store

    def get_project(project_id: str) -> None:
        if not store.exists(project_id):
            raise HTTPException(404, f"no such project: {project_id}")

    def require_initialized(project_id: str):
        if not store.has_track(project_id):
            raise HTTPException(409, "project is not initialized")

    @app.post("/projects", response_model=schemas.CreateProjectResponse)
    def create_project(req: schemas.CreateProjectRequest):
        try:
            model_doc = _load_doc(req.model)
            rig_doc = _load_doc(req.rig)
            checkpoint_doc = _load_doc(req.checkpoint)
            landmarks_doc = _load_doc(req.landmarks)
        except OSError as exc:
            raise HTTPException(400, f"cannot read asset file: {exc}")

        diagnostics = []
        try:
            model = model_from_dict(model_doc)
            rig = rig_from_dict(rig_doc)
            net = checkpoint_from_dict(checkpoint_doc)
            landmark_sequence_from_dict(landmarks_doc)
        except (ValueError, KeyError) as exc:
            raise HTTPException(400, f"invalid asset: {exc}")

        diagnostics += [f"{d.level}: {d.message}" for d in validate_rig(rig)
                        if d.level == "error"]
        if rig.channel_count != net.config.out_dim:
            diagnostics.append(
                f"error: rig has K={rig.channel_count} blendshapes but the "
                f"checkpoint outputs K={net.config.out_dim}")
        if model.vertex_count < 68:
            diagnostics.append("error: model vertex count below 68")
        if diagnostics:
            raise HTTPException(400, detail=diagnostics)

        project_id = store.create(model_doc, rig_doc, checkpoint_doc,
                                  landmarks_doc)
        return {"id": project_id, "status": "created"}

    @app.get("/projects/{project_id}", response_model=schemas.ProjectInfo)
    def project_info(project_id: str):
        get_project(project_id)
        manifest = store.manifest(project_id)
        rig = store.load_rig(project_id)
        frame_count = None
        if store.has_track(project_id):
            frame_count = len(store.load_track(project_id))
        return {"id": project_id, "status": manifest["status"],
                "rig_name": rig.name, "channels": list(rig.blendshape_names),
                "frame_count": frame_count}

    @app.post("/projects/{project_id}/initialize",
              response_model=schemas.InitializeResponse)
    def initialize(project_id: str, ramp_frames: int = Query(default=0, ge=0)):
        get_project(project_id)
        with store.lock(project_id):
            status = store.manifest(project_id)["status"]
            if status == "finetuning":
                raise HTTPException(409, "finetune job in progress")
            model = store.load_model(project_id)
            net = store.load_checkpoint(project_id)
            frames, fps = landmark_sequence_from_dict(
                store.load_landmarks(project_id))
            t0 = time.perf_counter()
            try:
                track = estimate_track(
                    frames, model, np.zeros(model.id_dim), net,
                    FitConfig(reg_lambda=1e-6), fps=fps or 25.0)
            except Exception as exc:
                raise HTTPException(422, f"estimation failed: {exc}")
            if len(track) == 1 and ramp_frames >= 3:
                peak = track.frames[0]
                track = single_image_ramp(
                    peak.alpha_auto, ramp_frames, gamma=peak.gamma,
                    pose=peak.pose, fps=track.fps)
            seconds = time.perf_counter() - t0
            store.save_track(project_id, track)
            store.set_status(project_id, "initialized")
            return {"frame_count": len(track),
                    "keyframes": list(track.keyframes), "seconds": seconds}

    @app.get("/projects/{project_id}/diagram",
             response_model=list[schemas.DiagramPoint])
    def frame_diagram(project_id: str):
        get_project(project_id)
        require_initialized(project_id)
        track = store.load_track(project_id)
        points = []
        keyframes = set(track.keyframes)
        for i, frame in enumerate(track.frames):
            kind = ("adjusted" if i in track.adjusted
                    else "keyframe" if i in keyframes else "plain")
            points.append({"frame_index": i,
                           "mean_alpha": float(frame.alpha_current.mean()),
                           "kind": kind})
        return points

    @app.get("/projects/{project_id}/frames/{frame}/mesh",
             response_model=schemas.MeshResponse)
    def frame_mesh(project_id: str, frame: int):
        get_project(project_id)
        require_initialized(project_id)
        track = store.load_track(project_id)
        if frame < 0 or frame >= len(track):
            raise HTTPException(400, f"frame {frame} out of range")
        rig = store.load_rig(project_id)
        state = track.frames[frame]
        from ..rig import apply_blendweights
        vertices = apply_blendweights(rig, state.alpha_current)
        return {
            "vertices": vertices.tolist(),
            "faces": rig.faces.tolist(),
            "channel_names": list(rig.blendshape_names),
            "channel_values": state.alpha_current.tolist(),
            "pose": {"rotation": state.pose.rotation.tolist(),
                     "translation": state.pose.translation.tolist(),
                     "scale": state.pose.scale},
        }

    @app.post("/projects/{project_id}/adjust",
              response_model=schemas.AdjustResponse)
    def adjust(project_id: str, req: schemas.AdjustRequest):
        get_project(project_id)
        require_initialized(project_id)
        if not 0.0 <= req.value <= 1.0:
            raise HTTPException(
                400, f"value must lie in [0, 1], got {req.value}")
        with store.lock(project_id):
            track = store.load_track(project_id)
            ledger = store.load_ledger(project_id)
            if req.frame < 0 or req.frame >= len(track):
                raise HTTPException(400, f"frame {req.frame} out of range")
            if req.target < 0 or req.target >= track.channel_count:
                raise HTTPException(400, f"target {req.target} out of range")
            record = record_adjustment(ledger, track, req.frame, req.target,
                                       req.value)
            store.save_track(project_id, track)
            store.save_ledger(project_id, ledger)
            return {"frame": req.frame, "target": req.target,
                    "value": req.value, "previous": record.auto_value}

    @app.post("/projects/{project_id}/preference/apply",
              response_model=schemas.ApplyPreferenceResponse)
    def apply_pref(project_id: str):
        get_project(project_id)
        require_initialized(project_id)
        with store.lock(project_id):
            track = store.load_track(project_id)
            ledger = store.load_ledger(project_id)
            pref = apply_ledger_preference(track, ledger)
            if pref is None:
                return {"applied": False}
            store.save_track(project_id, track)
            store.save_ledger(project_id, ledger)
            return {"applied": True, "delta": pref.delta.tolist(),
                    "touched": pref.touched.tolist()}

    @app.post("/projects/{project_id}/preference/clear",
              response_model=schemas.ClearPreferenceResponse)
    def clear_pref(project_id: str):
        get_project(project_id)
        with store.lock(project_id):
            ledger = store.load_ledger(project_id)
            count = len(ledger.records)
            clear_preference(ledger)
            store.save_ledger(project_id, ledger)
            return {"cleared_records": count}

    @app.post("/projects/{project_id}/keyframes",
              response_model=schemas.KeyframesResponse)
    def add_keyframe_endpoint(project_id: str, req: schemas.AddKeyframeRequest):
        get_project(project_id)
        require_initialized(project_id)
        with store.lock(project_id):
            track = store.load_track(project_id)
            if req.frame < 0 or req.frame >= len(track):
                raise HTTPException(400, f"frame {req.frame} out of range")
            add_keyframe(track, req.frame)
            store.save_track(project_id, track)
            return {"keyframes": list(track.keyframes)}

    @app.post("/projects/{project_id}/finetune",
              response_model=schemas.JobResponse, status_code=202)
    def start_finetune(project_id: str, req: schemas.FinetuneRequest = None):
        get_project(project_id)
        require_initialized(project_id)
        extra = (req.projects if req and req.projects else [])
        for pid in extra:
            get_project(pid)
            require_initialized(pid)
        ids = [project_id] + [p for p in extra if p != project_id]
        total_adjusted = 0
        for pid in ids:
            track = store.load_track(pid)
            ledger = store.load_ledger(pid)
            total_adjusted += len({r.frame_index for r in ledger.records}
                                  | track.adjusted)
        if total_adjusted == 0:
            raise HTTPException(
                409, "no adjusted frames; nothing to finetune on")
        try:
            job = store.start_finetune(project_id, extra)
        except RuntimeError as exc:
            raise HTTPException(409, str(exc))
        return job.to_dict()

    @app.get("/jobs/{job_id}", response_model=schemas.JobResponse)
    def job_status(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"no such job: {job_id}")
        return job.to_dict()

    @app.get("/projects/{project_id}/export")
    def export(project_id: str):
        get_project(project_id)
        require_initialized(project_id)
        track = store.load_track(project_id)
        rig = store.load_rig(project_id)
        ledger = store.load_ledger(project_id)
        doc = export_track(track, rig,
                           ledger_records=[r.to_dict() for r in ledger.records])
        return JSONResponse(doc, headers={
            "Content-Disposition":
                f'attachment; filename="{project_id}-animation.json"'})

    return app
