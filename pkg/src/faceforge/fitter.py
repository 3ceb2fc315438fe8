"""Expression and head-pose recovery from 68 observed 2D landmarks.

The solver alternates two exact subproblem solves until the landmark
residual stops improving:

  * pose step -- weak-perspective Procrustes alignment of the current 3D
    landmarks to the observations (centroid translation, least-squares
    2x3 map, SVD projection to scale * partial rotation);
  * expression step -- the projection is affine in gamma, so the Tikhonov-
    regularized landmark objective is a linear least-squares problem solved
    in closed form.

The residual reported everywhere is the mean Euclidean landmark distance
(loss over the 68 points), not the sum of squares the subproblems minimize;
the alternation keeps the last iterate whenever a step would increase it,
which makes the residual sequence non-increasing by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DegenerateGeometryError, IllConditionedError
from .model import (MorphableModel, NUM_LANDMARKS, landmark_rows,
                    select_landmarks, synthesize_shape)


@dataclass(eq=False)
class Pose:
    """Weak-perspective camera: 2D point = scale * R[:2] @ X + translation."""
    rotation: np.ndarray      # (3, 3), orthonormal, det +1
    translation: np.ndarray   # (2,), image plane
    scale: float

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        self.scale = float(self.scale)
        if self.rotation.shape != (3, 3):
            raise ContractError("rotation must be 3x3")
        if self.translation.shape != (2,):
            raise ContractError("translation must be a 2-vector")
        if self.scale <= 0:
            raise ContractError("scale must be positive")

    def validate(self, tol: float = 1e-8) -> None:
        r = self.rotation
        if not np.allclose(r.T @ r, np.eye(3), atol=tol):
            raise ContractError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > tol:
            raise ContractError("rotation determinant is not +1")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(2), 1.0)


@dataclass
class FitConfig:
    max_iters: int = 20
    tol: float = 1e-8
    reg_lambda: float = 0.0   # Tikhonov weight on gamma; 0 = unregularized

    def __post_init__(self):
        if self.max_iters < 1:
            raise ContractError("max_iters must be positive")
        if self.tol <= 0:
            raise ContractError("tol must be positive")
        if self.reg_lambda < 0:
            raise ContractError("reg_lambda must be nonnegative")


@dataclass(eq=False)
class FitResult:
    gamma: np.ndarray
    pose: Pose
    residual: float
    iterations: int
    residual_history: list = field(default_factory=list)


def _check_landmarks(points, dim, name):
    pts = np.asarray(points, dtype=float)
    if pts.shape != (NUM_LANDMARKS, dim):
        raise ContractError(
            f"{name} must have shape ({NUM_LANDMARKS}, {dim}), got {pts.shape}")
    return pts


def project_weak_perspective(points3d: np.ndarray, pose: Pose) -> np.ndarray:
    """Project (68, 3) landmarks to (68, 2) through the weak-perspective camera."""
    pts = _check_landmarks(points3d, 3, "points3d")
    return pose.scale * pts @ pose.rotation[:2].T + pose.translation


def landmark_loss(predicted: np.ndarray, observed: np.ndarray) -> float:
    """Mean Euclidean distance over the 68 landmark pairs."""
    p = _check_landmarks(predicted, 2, "predicted")
    q = _check_landmarks(observed, 2, "observed")
    return float(np.mean(np.linalg.norm(p - q, axis=1)))


def fit_pose(model_landmarks: np.ndarray, observed: np.ndarray) -> Pose:
    """Weak-perspective Procrustes alignment of 3D landmarks to 2D observations."""
    x = _check_landmarks(model_landmarks, 3, "model_landmarks")
    q = _check_landmarks(observed, 2, "observed")

    xc = x.mean(axis=0)
    qc = q.mean(axis=0)
    x0 = x - xc
    q0 = q - qc

    if np.linalg.matrix_rank(x0, tol=1e-9 * max(1.0, np.abs(x0).max())) < 2:
        raise DegenerateGeometryError("3D landmarks are collinear or coincident")

    # Best unconstrained 2x3 linear map, then project to scale * partial rotation.
    a, *_ = np.linalg.lstsq(x0, q0, rcond=None)
    a = a.T                                        # (2, 3)
    u, sigma, vt = np.linalg.svd(a, full_matrices=False)
    r2 = u @ vt                                    # orthonormal rows
    scale = float(sigma.mean())
    if scale <= 0:
        raise DegenerateGeometryError("degenerate projection: zero scale")
    r3 = np.cross(r2[0], r2[1])
    rotation = np.vstack([r2, r3])
    translation = qc - scale * r2 @ xc
    return Pose(rotation, translation, scale)


def fit_expression(model: MorphableModel, beta: np.ndarray, pose: Pose,
                   observed: np.ndarray, reg_lambda: float = 0.0) -> np.ndarray:
    """Closed-form gamma minimizing the regularized squared landmark objective."""
    q = _check_landmarks(observed, 2, "observed")
    base3d = select_landmarks(
        model.mean_shape + model.id_basis @ np.asarray(beta, dtype=float), model)
    e = landmark_rows(model)                       # (68, 3, 64)

    sr2 = pose.scale * pose.rotation[:2]           # (2, 3)
    design = np.einsum("ij,njk->nik", sr2, e).reshape(2 * NUM_LANDMARKS, -1)
    rhs = (q - base3d @ sr2.T - pose.translation).reshape(-1)

    normal = design.T @ design
    if reg_lambda > 0:
        normal = normal + reg_lambda * np.eye(normal.shape[0])
    try:
        gamma = np.linalg.solve(normal, design.T @ rhs)
    except np.linalg.LinAlgError:
        raise IllConditionedError(
            "normal equations are singular; pass reg_lambda > 0") from None
    if reg_lambda == 0 and np.linalg.cond(normal) > 1e12:
        raise IllConditionedError(
            "landmark system is ill-conditioned; pass reg_lambda > 0")
    return gamma


def fit(model: MorphableModel, beta: np.ndarray, observed: np.ndarray,
        config: FitConfig | None = None) -> FitResult:
    """Alternate pose and expression solves from gamma = 0.

    Stops when the relative residual change drops below ``config.tol``, when
    ``max_iters`` is reached, or when a step would increase the residual (the
    previous iterate is kept, so the history is non-increasing).
    """
    config = config or FitConfig()
    q = _check_landmarks(observed, 2, "observed")
    beta = np.asarray(beta, dtype=float)

    gamma = np.zeros(model.expr_basis.shape[1])
    lms3d = select_landmarks(synthesize_shape(model, beta, gamma), model)
    pose = fit_pose(lms3d, q)
    residual = landmark_loss(project_weak_perspective(lms3d, pose), q)
    history = [residual]

    iterations = 0
    for _ in range(config.max_iters):
        gamma_new = fit_expression(model, beta, pose, q, config.reg_lambda)
        lms_new = select_landmarks(synthesize_shape(model, beta, gamma_new), model)
        pose_new = fit_pose(lms_new, q)
        res_new = landmark_loss(project_weak_perspective(lms_new, pose_new), q)
        if res_new > residual:
            break
        gamma, pose = gamma_new, pose_new
        iterations += 1
        improved = residual - res_new
        residual = res_new
        history.append(residual)
        if improved <= config.tol * max(residual, 1e-30):
            break

    return FitResult(gamma=gamma, pose=pose, residual=residual,
                     iterations=iterations, residual_history=history)


# -- pose serialization helpers ------------------------------------------------

def rotation_to_axis_angle(rotation: np.ndarray) -> np.ndarray:
    """Convert a rotation matrix to an axis-angle 3-vector (angle = norm)."""
    r = np.asarray(rotation, dtype=float)
    cos = (np.trace(r) - 1.0) / 2.0
    angle = float(np.arccos(np.clip(cos, -1.0, 1.0)))
    if angle < 1e-12:
        return np.zeros(3)
    if np.pi - angle < 1e-6:
        # Near pi the off-diagonal formula degenerates; use the symmetric part.
        m = (r + np.eye(3)) / 2.0
        axis = np.sqrt(np.clip(np.diag(m), 0.0, None))
        # Fix signs from the largest component.
        k = int(np.argmax(axis))
        axis = m[k] / axis[k]
        axis /= np.linalg.norm(axis)
        return angle * axis
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    axis /= 2.0 * np.sin(angle)
    return angle * axis


def axis_angle_to_rotation(axis_angle: np.ndarray) -> np.ndarray:
    v = np.asarray(axis_angle, dtype=float)
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        return np.eye(3)
    k = v / angle
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * kx @ kx


def geodesic_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """Rotation angle between two rotation matrices, in radians."""
    cos = (np.trace(r1.T @ r2) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


# -- landmark sequence file ----------------------------------------------------

def save_landmark_sequence(frames, path, fps: float | None = None) -> None:
    """Write a landmark sequence file: frames of 68 x 2 pixel coordinates."""
    doc = {
        "convention": "pixel units, origin top-left, y downward",
        "frames": [np.asarray(f, dtype=float).tolist() for f in frames],
    }
    if fps is not None:
        doc["fps"] = fps
    with open(path, "w") as f:
        json.dump(doc, f)


def landmark_sequence_from_dict(doc: dict):
    frames = [_check_landmarks(f, 2, "frame") for f in doc["frames"]]
    if not frames:
        raise ContractError("landmark sequence contains no frames")
    return frames, doc.get("fps")


def load_landmark_sequence(path):
    """Read a landmark sequence file; returns (frames, fps or None)."""
    with open(path) as f:
        return landmark_sequence_from_dict(json.load(f))
