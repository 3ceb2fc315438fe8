"""Character rigs: a base mesh plus named blendshape delta vectors.

A rig's expression is ``base + sum_k alpha_k * delta_k`` with blend weights
alpha in [0, 1]^K.  The ordering of the blendshape list defines channel
indices everywhere (API "target" fields, exported tracks).

Synthetic rigs are built on a morphable model's mesh with every delta lying
inside the expression-basis column space, which makes the gamma -> alpha
mapping linear (and hence learnable) by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .model import (MorphableModel, NUM_LANDMARKS, face_width, landmark_rows)


@dataclass(eq=False)
class CharacterRig:
    name: str
    base_vertices: np.ndarray       # (3W,)
    faces: np.ndarray               # (F, 3) int, viewport rendering only
    blendshape_names: list          # K names, unique
    blendshape_deltas: np.ndarray   # (K, 3W)
    landmark_map: np.ndarray        # (68,) vertex indices

    def __post_init__(self):
        self.base_vertices = np.asarray(self.base_vertices, dtype=float)
        self.faces = np.asarray(self.faces, dtype=int).reshape(-1, 3)
        self.blendshape_deltas = np.asarray(self.blendshape_deltas, dtype=float)
        self.landmark_map = np.asarray(self.landmark_map, dtype=int)
        if self.blendshape_deltas.ndim != 2 or self.blendshape_deltas.shape[0] < 1:
            raise ContractError("rig needs at least one blendshape")
        if self.blendshape_deltas.shape[1] != self.base_vertices.shape[0]:
            raise ContractError("blendshape delta length does not match mesh")
        if len(self.blendshape_names) != self.blendshape_deltas.shape[0]:
            raise ContractError("blendshape names and deltas disagree in count")

    @property
    def vertex_count(self) -> int:
        return self.base_vertices.shape[0] // 3

    @property
    def channel_count(self) -> int:
        return self.blendshape_deltas.shape[0]


def check_blendweights(alpha, k: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (k,):
        raise ContractError(f"blend weights have length {a.shape}, rig has K={k}")
    if np.any(a < 0) or np.any(a > 1):
        raise ContractError("blend weights must lie in [0, 1]")
    return a


def apply_blendweights(rig: CharacterRig, alpha) -> np.ndarray:
    """Deform the base mesh: base + sum_k alpha_k * delta_k."""
    a = check_blendweights(alpha, rig.channel_count)
    return rig.base_vertices + a @ rig.blendshape_deltas


def rig_landmarks(rig: CharacterRig, alpha) -> np.ndarray:
    """68 x 3 landmark positions of the deformed mesh."""
    verts = apply_blendweights(rig, alpha).reshape(-1, 3)
    return verts[rig.landmark_map]


@dataclass
class Diagnostic:
    level: str    # "error" or "warning"
    message: str


def validate_rig(rig: CharacterRig) -> list:
    """Structural diagnostics; never raises."""
    out = []
    seen = set()
    for name in rig.blendshape_names:
        if name in seen:
            out.append(Diagnostic("error", f"duplicate blendshape name: {name!r}"))
        seen.add(name)
    w = rig.vertex_count
    if rig.landmark_map.shape != (NUM_LANDMARKS,):
        out.append(Diagnostic("error", "landmark_map must have 68 entries"))
    else:
        if len(set(rig.landmark_map.tolist())) != NUM_LANDMARKS:
            out.append(Diagnostic("error", "landmark_map indices must be distinct"))
        if rig.landmark_map.min() < 0 or rig.landmark_map.max() >= w:
            out.append(Diagnostic("error", "landmark_map index out of range"))
        else:
            deltas = rig.blendshape_deltas.reshape(rig.channel_count, w, 3)
            for k, name in enumerate(rig.blendshape_names):
                lm_motion = np.linalg.norm(deltas[k][rig.landmark_map])
                if lm_motion <= 1e-12:
                    out.append(Diagnostic(
                        "warning",
                        f"unobservable channel {k} ({name!r}) - zero landmark "
                        "motion; adapter cannot learn it"))
    return out


def generate_synthetic_rig(model: MorphableModel, k: int, seed: int,
                           mix_sparsity: float = 0.25) -> CharacterRig:
    """Deterministic rig on the model's mesh with deltas in the expression span.

    Each delta is ``expr_basis @ m_k`` for a sparse random 64-vector m_k,
    rescaled so every channel moves the landmarks by the same amount
    (8% of the face width).
    """
    if k < 1:
        raise ContractError("K must be at least 1")
    rng = np.random.default_rng(seed)
    expr_dim = model.expr_basis.shape[1]
    support = max(1, int(round(mix_sparsity * expr_dim)))
    e_lm = landmark_rows(model).reshape(-1, expr_dim)   # (204, 64)
    target = 0.08 * face_width(model)

    mixing = np.zeros((expr_dim, k))
    for j in range(k):
        cols = rng.choice(expr_dim, size=support, replace=False)
        m = np.zeros(expr_dim)
        m[cols] = rng.standard_normal(support)
        m *= target / np.linalg.norm(e_lm @ m)
        mixing[:, j] = m

    deltas = (model.expr_basis @ mixing).T              # (K, 3V)
    faces = _triangulate_frontal(model.mean_shape.reshape(-1, 3))
    return CharacterRig(
        name=f"synthetic-k{k}-seed{seed}",
        base_vertices=model.mean_shape.copy(),
        faces=faces,
        blendshape_names=[f"bs_{j:03d}" for j in range(k)],
        blendshape_deltas=deltas,
        landmark_map=model.landmark_indices.copy(),
    )


def mixing_matrix(rig: CharacterRig, model: MorphableModel) -> np.ndarray:
    """Project rig deltas onto the expression basis: columns are m_k."""
    return model.expr_basis.T @ rig.blendshape_deltas.T


def _triangulate_frontal(points: np.ndarray) -> np.ndarray:
    """Triangulate the frontal (x, y) projection for viewport rendering."""
    from scipy.spatial import Delaunay
    tri = Delaunay(points[:, :2])
    return tri.simplices.astype(int)


def save_rig(rig: CharacterRig, path) -> None:
    doc = rig_to_dict(rig)
    with open(path, "w") as f:
        json.dump(doc, f)


def rig_to_dict(rig: CharacterRig) -> dict:
    return {
        "name": rig.name,
        "vertex_count": rig.vertex_count,
        "base_vertices": rig.base_vertices.tolist(),
        "faces": rig.faces.tolist(),
        "blendshapes": [
            {"name": n, "delta": d.tolist()}
            for n, d in zip(rig.blendshape_names, rig.blendshape_deltas)
        ],
        "landmark_map": rig.landmark_map.tolist(),
    }


def rig_from_dict(doc: dict) -> CharacterRig:
    return CharacterRig(
        name=doc["name"],
        base_vertices=np.array(doc["base_vertices"], dtype=float),
        faces=np.array(doc["faces"], dtype=int),
        blendshape_names=[b["name"] for b in doc["blendshapes"]],
        blendshape_deltas=np.array([b["delta"] for b in doc["blendshapes"]],
                                   dtype=float),
        landmark_map=np.array(doc["landmark_map"], dtype=int),
    )


def load_rig(path) -> CharacterRig:
    with open(path) as f:
        return rig_from_dict(json.load(f))
