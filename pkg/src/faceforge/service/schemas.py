"""Request and response models for the HTTP API."""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel


class CreateProjectRequest(BaseModel):
    """Each asset is either an inline document or a server-side file path."""
    model: Union[dict, str]
    rig: Union[dict, str]
    checkpoint: Union[dict, str]
    landmarks: Union[dict, str]


class CreateProjectResponse(BaseModel):
    id: str
    status: str


class ProjectInfo(BaseModel):
    id: str
    status: str
    rig_name: str
    channels: list[str]
    frame_count: Optional[int] = None


class InitializeResponse(BaseModel):
    frame_count: int
    keyframes: list[int]
    seconds: float


class DiagramPoint(BaseModel):
    frame_index: int
    mean_alpha: float
    kind: str   # plain | keyframe | adjusted


class MeshResponse(BaseModel):
    vertices: list[float]
    faces: list[list[int]]
    channel_names: list[str]
    channel_values: list[float]
    pose: dict


class AdjustRequest(BaseModel):
    frame: int
    target: int
    value: float


class AdjustResponse(BaseModel):
    frame: int
    target: int
    value: float
    previous: float


class ApplyPreferenceResponse(BaseModel):
    applied: bool
    delta: Optional[list[float]] = None
    touched: Optional[list[bool]] = None


class ClearPreferenceResponse(BaseModel):
    cleared_records: int


class AddKeyframeRequest(BaseModel):
    frame: int


class KeyframesResponse(BaseModel):
    keyframes: list[int]


class FinetuneRequest(BaseModel):
    projects: Optional[list[str]] = None


class JobResponse(BaseModel):
    id: str
    status: str
    project_ids: list[str]
    error: Optional[str] = None
    mae_before: Optional[float] = None
    mae_after: Optional[float] = None
