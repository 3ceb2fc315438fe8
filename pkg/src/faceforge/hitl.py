"""Human-in-the-loop preference engine.

Online mode: every manual edit is recorded as (value before, value after)
for one (frame, channel) cell; the per-channel average of the differences is
the preference delta, which one click shifts onto every frame (clamped to
[0, 1]).  Offline mode: adjusted frames become (gamma, alpha) supervision
pairs for adapter finetuning.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .animation import FrameTrack, interpolate
from .datagen import SamplePair
from .errors import ContractError


@dataclass
class PreferenceRecord:
    frame_index: int
    channel_index: int
    auto_value: float      # value before this adjustment
    adjusted_value: float
    timestamp: float = 0.0

    def to_dict(self):
        return {"frame_index": self.frame_index,
                "channel_index": self.channel_index,
                "auto_value": self.auto_value,
                "adjusted_value": self.adjusted_value,
                "timestamp": self.timestamp}

    @staticmethod
    def from_dict(doc):
        return PreferenceRecord(
            int(doc["frame_index"]), int(doc["channel_index"]),
            float(doc["auto_value"]), float(doc["adjusted_value"]),
            float(doc.get("timestamp", 0.0)))


@dataclass
class PreferenceLedger:
    records: list = field(default_factory=list)
    applied: bool = False


@dataclass(eq=False)
class PreferenceDelta:
    delta: np.ndarray     # (K,), zero where untouched
    touched: np.ndarray   # (K,) bool


def record_adjustment(ledger: PreferenceLedger, track: FrameTrack,
                      frame: int, channel: int, new_value: float,
                      timestamp: float | None = None) -> PreferenceRecord:
    """Apply one manual edit; the frame becomes an adjusted keyframe.

    The record's auto_value is the cell's value at the moment of the edit,
    so repeated edits of one cell compose sequentially.
    """
    if frame < 0 or frame >= len(track):
        raise ContractError(f"frame index {frame} out of range")
    if channel < 0 or channel >= track.channel_count:
        raise ContractError(f"channel index {channel} out of range")
    if not 0.0 <= new_value <= 1.0:
        raise ContractError(f"value {new_value} outside [0, 1]")

    state = track.frames[frame]
    record = PreferenceRecord(
        frame_index=frame, channel_index=channel,
        auto_value=float(state.alpha_current[channel]),
        adjusted_value=float(new_value),
        timestamp=time.time() if timestamp is None else timestamp)
    ledger.records.append(record)
    ledger.applied = False

    state.alpha_current = state.alpha_current.copy()
    state.alpha_current[channel] = new_value
    track.adjusted.add(frame)
    if frame not in track.keyframes:
        # Promote without snapping, so the edit survives re-interpolation.
        track.keyframes = sorted(set(track.keyframes) | {frame})
    interpolate(track)
    return record


def compute_preference(ledger: PreferenceLedger, k: int) -> PreferenceDelta:
    """Per-channel arithmetic mean of (adjusted - auto) differences."""
    sums = np.zeros(k)
    counts = np.zeros(k)
    for r in ledger.records:
        sums[r.channel_index] += r.adjusted_value - r.auto_value
        counts[r.channel_index] += 1
    touched = counts > 0
    delta = np.where(touched, sums / np.maximum(counts, 1), 0.0)
    return PreferenceDelta(delta=delta, touched=touched)


def apply_preference(track: FrameTrack, pref: PreferenceDelta) -> FrameTrack:
    """Shift every frame's touched channels by delta, clamped to [0, 1].

    Interpolation is deliberately not re-run: the shift is uniform, so
    relative motion between frames is preserved.
    """
    if pref.delta.shape[0] != track.channel_count:
        raise ContractError("preference delta length does not match track")
    shift = np.where(pref.touched, pref.delta, 0.0)
    for state in track.frames:
        state.alpha_current = np.clip(state.alpha_current + shift, 0.0, 1.0)
    track.applied_delta = track.applied_shift() + shift
    return track


def apply_ledger_preference(track: FrameTrack,
                            ledger: PreferenceLedger) -> PreferenceDelta | None:
    """Apply the ledger's pending preference once; no-op when already applied."""
    if ledger.applied or not ledger.records:
        return None
    pref = compute_preference(ledger, track.channel_count)
    apply_preference(track, pref)
    ledger.applied = True
    return pref


def clear_preference(ledger: PreferenceLedger) -> PreferenceLedger:
    """Drop pending records; edits already written to frames remain."""
    ledger.records = []
    ledger.applied = False
    return ledger


def assemble_finetune_set(ledgers, tracks) -> list:
    """One (gamma, final alpha) pair per adjusted frame, across sessions.

    Repeated adjustments of one frame collapse to its latest state.
    """
    pairs = []
    for ledger, track in zip(ledgers, tracks):
        frames = sorted({r.frame_index for r in ledger.records} | track.adjusted)
        for f in frames:
            state = track.frames[f]
            if state.gamma is None:
                raise ContractError(
                    f"adjusted frame {f} has no expression parameters")
            pairs.append(SamplePair(gamma=np.asarray(state.gamma, dtype=float),
                                    alpha=state.alpha_current.copy()))
    return pairs
