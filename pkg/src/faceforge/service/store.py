"""Disk-backed project store.

A project is a directory of the engine's own file formats (model, rig,
checkpoint, landmarks) plus a manifest and the mutable session state
(track + ledger).  Every write goes through a temp-file rename, so a crash
mid-request leaves the last consistent snapshot.  Mutations to one project
serialize through a per-project lock; a project runs at most one finetune
job at a time.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

import numpy as np

from ..adapter import (AdapterNet, TrainConfig, checkpoint_from_dict,
                       checkpoint_to_dict, evaluate_mae, finetune)
from ..animation import FrameTrack, FrameState
from ..fitter import Pose
from ..hitl import PreferenceLedger, PreferenceRecord, assemble_finetune_set
from ..model import MorphableModel, model_from_dict
from ..rig import CharacterRig, rig_from_dict, rig_to_dict


def _atomic_write_json(path: Path, doc) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(doc, f)
    os.replace(tmp, path)


def _read_json(path: Path):
    with open(path) as f:
        return json.load(f)


def track_to_state(track: FrameTrack) -> dict:
    return {
        "fps": track.fps,
        "keyframes": list(track.keyframes),
        "adjusted": sorted(track.adjusted),
        "applied_delta": (track.applied_delta.tolist()
                          if track.applied_delta is not None else None),
        "frames": [{
            "alpha_auto": f.alpha_auto.tolist(),
            "alpha_current": f.alpha_current.tolist(),
            "gamma": f.gamma.tolist() if f.gamma is not None else None,
            "pose": {
                "rotation": f.pose.rotation.tolist(),
                "translation": f.pose.translation.tolist(),
                "scale": f.pose.scale,
            },
        } for f in track.frames],
    }


def track_from_state(doc: dict) -> FrameTrack:
    frames = []
    for f in doc["frames"]:
        frames.append(FrameState(
            alpha_auto=np.array(f["alpha_auto"], dtype=float),
            alpha_current=np.array(f["alpha_current"], dtype=float),
            gamma=(np.array(f["gamma"], dtype=float)
                   if f["gamma"] is not None else None),
            pose=Pose(np.array(f["pose"]["rotation"], dtype=float),
                      np.array(f["pose"]["translation"], dtype=float),
                      f["pose"]["scale"]),
        ))
    delta = doc.get("applied_delta")
    return FrameTrack(
        frames=frames, keyframes=list(doc["keyframes"]),
        adjusted=set(doc.get("adjusted", [])), fps=doc.get("fps", 25.0),
        applied_delta=np.array(delta, dtype=float) if delta is not None else None)


def ledger_to_doc(ledger: PreferenceLedger) -> dict:
    return {"records": [r.to_dict() for r in ledger.records],
            "applied": ledger.applied}


def ledger_from_doc(doc: dict) -> PreferenceLedger:
    return PreferenceLedger(
        records=[PreferenceRecord.from_dict(r) for r in doc.get("records", [])],
        applied=bool(doc.get("applied", False)))


class Job:
    def __init__(self, project_ids):
        self.id = uuid.uuid4().hex
        self.project_ids = project_ids
        self.status = "created"   # created -> running -> done | failed
        self.error = None
        self.mae_before = None
        self.mae_after = None

    def to_dict(self):
        return {"id": self.id, "project_ids": self.project_ids,
                "status": self.status, "error": self.error,
                "mae_before": self.mae_before, "mae_after": self.mae_after}


class ProjectStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks = {}
        self._locks_guard = threading.Lock()
        self.jobs = {}
        self._active_finetunes = set()

    def lock(self, project_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(project_id, threading.Lock())

    # -- lifecycle -----------------------------------------------------------

    def create(self, model_doc, rig_doc, checkpoint_doc, landmarks_doc) -> str:
        project_id = uuid.uuid4().hex
        pdir = self.root / project_id
        pdir.mkdir()
        _atomic_write_json(pdir / "model.json", model_doc)
        _atomic_write_json(pdir / "rig.json", rig_doc)
        _atomic_write_json(pdir / "checkpoint.json", checkpoint_doc)
        _atomic_write_json(pdir / "landmarks.json", landmarks_doc)
        _atomic_write_json(pdir / "manifest.json", {
            "id": project_id, "status": "created",
            "rig_name": rig_doc.get("name", "")})
        _atomic_write_json(pdir / "ledger.json",
                           ledger_to_doc(PreferenceLedger()))
        return project_id

    def exists(self, project_id: str) -> bool:
        return (self.root / project_id / "manifest.json").is_file()

    def _pdir(self, project_id: str) -> Path:
        return self.root / project_id

    def manifest(self, project_id: str) -> dict:
        return _read_json(self._pdir(project_id) / "manifest.json")

    def set_status(self, project_id: str, status: str) -> None:
        doc = self.manifest(project_id)
        doc["status"] = status
        _atomic_write_json(self._pdir(project_id) / "manifest.json", doc)

    # -- assets --------------------------------------------------------------

    def load_model(self, project_id: str) -> MorphableModel:
        return model_from_dict(_read_json(self._pdir(project_id) / "model.json"))

    def load_rig(self, project_id: str) -> CharacterRig:
        return rig_from_dict(_read_json(self._pdir(project_id) / "rig.json"))

    def load_checkpoint(self, project_id: str) -> AdapterNet:
        return checkpoint_from_dict(
            _read_json(self._pdir(project_id) / "checkpoint.json"))

    def save_checkpoint(self, project_id: str, net: AdapterNet) -> None:
        _atomic_write_json(self._pdir(project_id) / "checkpoint.json",
                           checkpoint_to_dict(net))

    def load_landmarks(self, project_id: str) -> dict:
        return _read_json(self._pdir(project_id) / "landmarks.json")

    # -- session state -------------------------------------------------------

    def has_track(self, project_id: str) -> bool:
        return (self._pdir(project_id) / "track.json").is_file()

    def load_track(self, project_id: str) -> FrameTrack:
        return track_from_state(_read_json(self._pdir(project_id) / "track.json"))

    def save_track(self, project_id: str, track: FrameTrack) -> None:
        _atomic_write_json(self._pdir(project_id) / "track.json",
                           track_to_state(track))

    def load_ledger(self, project_id: str) -> PreferenceLedger:
        return ledger_from_doc(_read_json(self._pdir(project_id) / "ledger.json"))

    def save_ledger(self, project_id: str, ledger: PreferenceLedger) -> None:
        _atomic_write_json(self._pdir(project_id) / "ledger.json",
                           ledger_to_doc(ledger))

    # -- finetune jobs -------------------------------------------------------

    def start_finetune(self, project_id: str, extra_project_ids=None) -> Job:
        project_ids = [project_id] + [p for p in (extra_project_ids or [])
                                      if p != project_id]
        with self._locks_guard:
            busy = [p for p in project_ids if p in self._active_finetunes]
            if busy:
                raise RuntimeError(f"finetune already running for {busy[0]}")
            self._active_finetunes.update(project_ids)
        job = Job(project_ids)
        self.jobs[job.id] = job
        thread = threading.Thread(target=self._run_finetune,
                                  args=(job, project_id), daemon=True)
        thread.start()
        return job

    def _run_finetune(self, job: Job, target_project: str) -> None:
        job.status = "running"
        try:
            for pid in job.project_ids:
                self.set_status(pid, "finetuning")
            ledgers, tracks = [], []
            for pid in job.project_ids:
                ledgers.append(self.load_ledger(pid))
                tracks.append(self.load_track(pid))
            pairs = assemble_finetune_set(ledgers, tracks)
            net = self.load_checkpoint(target_project)
            job.mae_before = evaluate_mae(net, pairs)
            tuned = finetune(net, pairs, TrainConfig(epochs=50, seed=0))
            job.mae_after = evaluate_mae(tuned, pairs)
            for pid in job.project_ids:
                self.save_checkpoint(pid, tuned)
            job.status = "done"
        except Exception as exc:  # surfaces through job polling
            job.error = str(exc)
            job.status = "failed"
        finally:
            for pid in job.project_ids:
                try:
                    self.set_status(pid, "initialized")
                except OSError:
                    pass
            with self._locks_guard:
                self._active_finetunes.difference_update(job.project_ids)
