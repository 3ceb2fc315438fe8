"""Per-frame animation tracks: estimation, keyframes, interpolation, export.

A track stores, per frame, the raw model output (``alpha_auto``) and the
value actually shown (``alpha_current``), which reflects keyframe
interpolation, user edits, and applied preferences.  The first and last
frames are always keyframes so interpolation is total.  Only blend weights
are interpolated; per-frame pose is stored and exported untouched.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .fitter import (FitConfig, Pose, axis_angle_to_rotation, fit,
                     rotation_to_axis_angle)
from .adapter import AdapterNet, forward
from .model import MorphableModel
from .rig import CharacterRig

DEFAULT_KEYFRAME_INTERVAL = 5
DEFAULT_FPS = 25.0


@dataclass(eq=False)
class FrameState:
    alpha_auto: np.ndarray       # model output, never mutated after estimation
    alpha_current: np.ndarray    # after interpolation / edits / preferences
    gamma: np.ndarray | None
    pose: Pose


@dataclass(eq=False)
class FrameTrack:
    frames: list                    # list[FrameState]
    keyframes: list                 # sorted frame indices, includes 0 and last
    adjusted: set = field(default_factory=set)
    fps: float = DEFAULT_FPS
    applied_delta: np.ndarray | None = None   # cumulative applied preference

    def __len__(self):
        return len(self.frames)

    @property
    def channel_count(self) -> int:
        return self.frames[0].alpha_auto.shape[0]

    def applied_shift(self) -> np.ndarray:
        if self.applied_delta is None:
            return np.zeros(self.channel_count)
        return self.applied_delta


def sample_keyframes(frame_count: int, interval: int = DEFAULT_KEYFRAME_INTERVAL):
    """Every ``interval``-th frame plus the last frame."""
    if interval < 1:
        raise ContractError("keyframe interval must be at least 1")
    keys = sorted(set(range(0, frame_count, interval)) | {frame_count - 1})
    return keys


def interpolate(track: FrameTrack) -> FrameTrack:
    """Segmented linear interpolation of alpha_current between keyframes.

    Keyframe values (possibly user-edited) are authoritative and unchanged.
    """
    keys = track.keyframes
    if not keys or keys[0] != 0 or keys[-1] != len(track) - 1:
        raise ContractError("keyframes must include the first and last frame")
    for a, b in zip(keys, keys[1:]):
        va = track.frames[a].alpha_current
        vb = track.frames[b].alpha_current
        for f in range(a + 1, b):
            t = (f - a) / (b - a)
            track.frames[f].alpha_current = va + t * (vb - va)
    return track


def estimate_track(landmark_frames, model: MorphableModel, beta,
                   net: AdapterNet, fit_config: FitConfig | None = None,
                   keyframe_interval: int = DEFAULT_KEYFRAME_INTERVAL,
                   fps: float = DEFAULT_FPS,
                   frame_seconds: list | None = None) -> FrameTrack:
    """Fit every frame, run the adapter, and initialize keyframe interpolation.

    When ``frame_seconds`` is given, the per-frame fit+inference wall time is
    appended to it (used by the timing report).
    """
    if len(landmark_frames) == 0:
        raise ContractError("landmark sequence is empty")
    frames = []
    for i, lms in enumerate(landmark_frames):
        t0 = time.perf_counter()
        try:
            result = fit(model, beta, lms, fit_config)
        except Exception as exc:
            raise type(exc)(f"frame {i}: {exc}") from exc
        alpha = np.clip(forward(net, result.gamma), 0.0, 1.0)
        if frame_seconds is not None:
            frame_seconds.append(time.perf_counter() - t0)
        frames.append(FrameState(alpha_auto=alpha, alpha_current=alpha.copy(),
                                 gamma=result.gamma, pose=result.pose))
    track = FrameTrack(frames=frames,
                       keyframes=sample_keyframes(len(frames), keyframe_interval),
                       fps=fps)
    return interpolate(track)


def add_keyframe(track: FrameTrack, index: int) -> FrameTrack:
    """Insert a user keyframe; idempotent.

    The frame's alpha_current snaps to its model output plus any applied
    preference, then both adjacent segments are re-interpolated.
    """
    if index < 0 or index >= len(track):
        raise ContractError(f"keyframe index {index} out of range")
    if index in track.keyframes:
        return track
    frame = track.frames[index]
    frame.alpha_current = np.clip(frame.alpha_auto + track.applied_shift(),
                                  0.0, 1.0)
    track.keyframes = sorted(set(track.keyframes) | {index})
    return interpolate(track)


def single_image_ramp(alpha_peak, total_frames: int, gamma=None,
                      pose: Pose | None = None,
                      fps: float = DEFAULT_FPS) -> FrameTrack:
    """Zero -> peak -> zero linear ramp; peak at floor(total/2)."""
    if total_frames < 3:
        raise ContractError("a ramp needs at least 3 frames")
    peak = np.asarray(alpha_peak, dtype=float)
    pose = pose or Pose.identity()
    mid = total_frames // 2
    last = total_frames - 1
    frames = []
    for f in range(total_frames):
        t = f / mid if f <= mid else (last - f) / (last - mid)
        alpha = t * peak
        frames.append(FrameState(alpha_auto=alpha, alpha_current=alpha.copy(),
                                 gamma=gamma if f == mid else None, pose=pose))
    return FrameTrack(frames=frames, keyframes=sorted({0, mid, last}), fps=fps)


def export_track(track: FrameTrack, rig: CharacterRig, fps: float | None = None,
                 destination=None, ledger_records=None) -> dict:
    """Build the export document; write it to ``destination`` when given."""
    doc = {
        "rig_name": rig.name,
        "fps": fps if fps is not None else track.fps,
        "channels": list(rig.blendshape_names),
        "frames": [f.alpha_current.tolist() for f in track.frames],
        "poses": [{
            "axis_angle": rotation_to_axis_angle(f.pose.rotation).tolist(),
            "translation": f.pose.translation.tolist(),
            "scale": f.pose.scale,
        } for f in track.frames],
        "keyframes": list(track.keyframes),
        "adjustments": ledger_records if ledger_records is not None else [],
    }
    if destination is not None:
        with open(destination, "w") as f:
            json.dump(doc, f)
    return doc


def import_track(source) -> FrameTrack:
    """Rebuild a track from an export file (alpha values round-trip exactly)."""
    if isinstance(source, dict):
        doc = source
    else:
        with open(source) as f:
            doc = json.load(f)
    frames = []
    for alpha, pose in zip(doc["frames"], doc["poses"]):
        a = np.array(alpha, dtype=float)
        frames.append(FrameState(
            alpha_auto=a.copy(), alpha_current=a, gamma=None,
            pose=Pose(axis_angle_to_rotation(np.array(pose["axis_angle"])),
                      np.array(pose["translation"], dtype=float),
                      pose["scale"])))
    adjusted = {int(r["frame_index"]) for r in doc.get("adjustments", [])}
    return FrameTrack(frames=frames, keyframes=list(doc["keyframes"]),
                      adjusted=adjusted, fps=doc.get("fps", DEFAULT_FPS))
