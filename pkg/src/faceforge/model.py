"""Parametric linear face model: mean shape plus identity and expression bases.

A face shape is synthesized as ``mean + id_basis @ beta + expr_basis @ gamma``,
with all vertex coordinates stored x,y,z interleaved in one flat vector of
length 3*V.  The expression basis always has 64 columns; that width is the
input size of the adapter network downstream.

Since the licensed morphable-model assets cannot ship with this package, a
seeded synthetic generator produces models with the same dimensional
interface: an ellipsoidal frontal "face" mean shape, orthonormalized random
bases, and 68 well-spread landmark vertices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

EXPR_DIM = 64
NUM_LANDMARKS = 68


@dataclass(eq=False)
class MorphableModel:
    mean_shape: np.ndarray      # (3V,)
    id_basis: np.ndarray        # (3V, D_id), orthonormal columns
    expr_basis: np.ndarray      # (3V, 64), orthonormal columns
    landmark_indices: np.ndarray  # (68,) distinct vertex indices
    vertex_count: int

    def __post_init__(self):
        self.mean_shape = np.asarray(self.mean_shape, dtype=float)
        self.id_basis = np.asarray(self.id_basis, dtype=float)
        self.expr_basis = np.asarray(self.expr_basis, dtype=float)
        self.landmark_indices = np.asarray(self.landmark_indices, dtype=int)
        v = int(self.vertex_count)
        if self.mean_shape.shape != (3 * v,):
            raise ContractError(
                f"mean_shape has length {self.mean_shape.shape}, expected {3 * v}")
        if self.expr_basis.shape != (3 * v, EXPR_DIM):
            raise ContractError(
                f"expr_basis has shape {self.expr_basis.shape}, "
                f"expected ({3 * v}, {EXPR_DIM})")
        if self.id_basis.shape[0] != 3 * v or self.id_basis.ndim != 2:
            raise ContractError(
                f"id_basis has shape {self.id_basis.shape}, expected ({3 * v}, D_id)")
        if self.landmark_indices.shape != (NUM_LANDMARKS,):
            raise ContractError("landmark_indices must have exactly 68 entries")
        if len(set(self.landmark_indices.tolist())) != NUM_LANDMARKS:
            raise ContractError("landmark_indices must be distinct")
        if self.landmark_indices.min() < 0 or self.landmark_indices.max() >= v:
            raise ContractError("landmark_indices out of range")

    @property
    def id_dim(self) -> int:
        return self.id_basis.shape[1]


def synthesize_shape(model: MorphableModel, beta: np.ndarray,
                     gamma: np.ndarray) -> np.ndarray:
    """Return the flat vertex vector ``mean + B_id @ beta + B_exp @ gamma``."""
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if beta.shape != (model.id_dim,):
        raise ContractError(
            f"beta has length {beta.shape}, id basis expects {model.id_dim}")
    if gamma.shape != (EXPR_DIM,):
        raise ContractError(
            f"gamma has length {gamma.shape}, expression basis expects {EXPR_DIM}")
    return model.mean_shape + model.id_basis @ beta + model.expr_basis @ gamma


def select_landmarks(vertices: np.ndarray, model: MorphableModel) -> np.ndarray:
    """Gather the 68 landmark vertices as a (68, 3) array, in index-list order."""
    vertices = np.asarray(vertices, dtype=float)
    if vertices.shape != (3 * model.vertex_count,):
        raise ContractError(
            f"vertex vector length {vertices.shape} does not match model "
            f"({3 * model.vertex_count})")
    pts = vertices.reshape(model.vertex_count, 3)
    return pts[model.landmark_indices]


def landmark_rows(model: MorphableModel) -> np.ndarray:
    """Expression basis restricted to landmark vertices, shape (68, 3, 64)."""
    return model.expr_basis.reshape(model.vertex_count, 3, EXPR_DIM)[
        model.landmark_indices]


def face_width(model: MorphableModel) -> float:
    """Horizontal extent of the neutral landmarks (x span)."""
    lms = select_landmarks(model.mean_shape, model)
    return float(lms[:, 0].max() - lms[:, 0].min())


def _farthest_point_sample(points: np.ndarray, count: int) -> np.ndarray:
    """Greedy farthest-point sampling; deterministic given the point order."""
    n = points.shape[0]
    chosen = np.empty(count, dtype=int)
    chosen[0] = 0
    dist = np.linalg.norm(points - points[0], axis=1)
    for i in range(1, count):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return np.sort(chosen)


def generate_synthetic_model(seed: int, vertex_count: int = 300,
                             id_dim: int = 80) -> MorphableModel:
    """Build a deterministic synthetic morphable model.

    The mean shape is the frontal half of an ellipsoid (a coarse face), so
    weak-perspective landmark projections are non-degenerate.  Both bases are
    QR-orthonormalized Gaussian matrices; landmarks are 68 farthest-point
    sampled vertices.
    """
    if vertex_count < NUM_LANDMARKS:
        raise ContractError(
            f"vertex_count must be at least {NUM_LANDMARKS}, got {vertex_count}")
    if id_dim < 1:
        raise ContractError("id_dim must be positive")
    rng = np.random.default_rng(seed)

    # Golden-spiral points on the z >= 0 half of an ellipsoid, width ~180.
    a, b, c = 90.0, 120.0, 75.0
    idx = np.arange(vertex_count, dtype=float)
    phi = np.pi * (3.0 - np.sqrt(5.0))
    z_unit = idx / max(vertex_count - 1, 1)          # 0..1, frontal half
    r = np.sqrt(np.clip(1.0 - z_unit ** 2, 0.0, 1.0))
    theta = phi * idx
    pts = np.stack([a * r * np.cos(theta),
                    b * r * np.sin(theta),
                    c * z_unit], axis=1)
    pts += rng.normal(scale=0.5, size=pts.shape)      # break exact symmetry

    landmark_indices = _farthest_point_sample(pts, NUM_LANDMARKS)

    def ortho(cols):
        q, _ = np.linalg.qr(rng.standard_normal((3 * vertex_count, cols)))
        return q

    return MorphableModel(
        mean_shape=pts.reshape(-1),
        id_basis=ortho(id_dim),
        expr_basis=ortho(EXPR_DIM),
        landmark_indices=landmark_indices,
        vertex_count=vertex_count,
    )


def model_to_dict(model: MorphableModel) -> dict:
    return {
        "vertex_count": model.vertex_count,
        "mean_shape": model.mean_shape.tolist(),
        "id_basis": model.id_basis.tolist(),
        "expr_basis": model.expr_basis.tolist(),
        "landmark_indices": model.landmark_indices.tolist(),
    }


def save_model(model: MorphableModel, path) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f)


def model_from_dict(doc: dict) -> MorphableModel:
    return MorphableModel(
        mean_shape=np.array(doc["mean_shape"], dtype=float),
        id_basis=np.array(doc["id_basis"], dtype=float),
        expr_basis=np.array(doc["expr_basis"], dtype=float),
        landmark_indices=np.array(doc["landmark_indices"], dtype=int),
        vertex_count=int(doc["vertex_count"]),
    )


def load_model(path) -> MorphableModel:
    with open(path) as f:
        return model_from_dict(json.load(f))
