"""Character-dependent training data: (expression parameters, blend weights).

Each sample draws rule-constrained random blend weights, deforms the rig,
projects its landmarks through a canonical frontal camera, and fits the
expression parameters back from the 2D landmarks.  The stored pair is
(fitted gamma, sampled alpha); alpha is the ground-truth label.

Per-sample RNG streams are keyed by (seed, sample index), so parallel and
serial generation produce identical datasets.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DatasetQualityError
from .fitter import FitConfig, Pose, fit, project_weak_perspective
from .model import MorphableModel
from .rig import CharacterRig, rig_landmarks

log = logging.getLogger(__name__)

DEFAULT_SPLIT = (8000, 1000, 1000)


@dataclass
class RuleGroup:
    channel_indices: list
    max_sum: float


@dataclass
class RuleSet:
    groups: list = field(default_factory=list)

    def validate(self, k: int) -> None:
        for g in self.groups:
            idx = list(g.channel_indices)
            if len(set(idx)) != len(idx):
                raise ContractError("rule group has duplicate channel indices")
            if any(i < 0 or i >= k for i in idx):
                raise ContractError("rule group index out of range")
            if g.max_sum <= 0:
                raise ContractError("rule group max_sum must be positive")

    def to_dict(self) -> dict:
        return {"groups": [
            {"channel_indices": list(g.channel_indices), "max_sum": g.max_sum}
            for g in self.groups]}

    @staticmethod
    def from_dict(doc: dict) -> "RuleSet":
        return RuleSet([RuleGroup(g["channel_indices"], g["max_sum"])
                        for g in doc.get("groups", [])])


@dataclass(eq=False)
class SamplePair:
    gamma: np.ndarray   # (64,)
    alpha: np.ndarray   # (K,), ground-truth label


@dataclass(eq=False)
class Split:
    gammas: np.ndarray  # (N, 64)
    alphas: np.ndarray  # (N, K)

    def __len__(self):
        return self.gammas.shape[0]

    def pairs(self):
        return [SamplePair(g, a) for g, a in zip(self.gammas, self.alphas)]


@dataclass(eq=False)
class GeneratedDataset:
    train: Split
    val: Split
    test: Split
    rig_name: str
    seed: int
    rules: RuleSet = field(default_factory=RuleSet)

    @property
    def channel_count(self) -> int:
        return self.train.alphas.shape[1]


def sample_blendweights(k: int, rules: RuleSet, rng) -> np.ndarray:
    """Uniform [0,1] draws with multiplicative repair of violated groups."""
    rules.validate(k)
    alpha = rng.uniform(0.0, 1.0, k)
    for g in rules.groups:
        idx = np.asarray(g.channel_indices, dtype=int)
        s = alpha[idx].sum()
        if s > g.max_sum:
            alpha[idx] *= g.max_sum / s
    return alpha


def canonical_frontal_pose(rig: CharacterRig) -> Pose:
    """Identity rotation, face width scaled to 200 units, centered landmarks."""
    neutral = rig_landmarks(rig, np.zeros(rig.channel_count))
    width = neutral[:, 0].max() - neutral[:, 0].min()
    scale = 200.0 / width
    translation = -scale * neutral[:, :2].mean(axis=0)
    return Pose(np.eye(3), translation, scale)


def generate_dataset(rig: CharacterRig, model: MorphableModel,
                     rules: RuleSet | None = None, count: int = 10000,
                     split=DEFAULT_SPLIT, fit_config: FitConfig | None = None,
                     seed: int = 0) -> GeneratedDataset:
    """Generate ``count`` (gamma, alpha) pairs, split train/val/test in order."""
    rules = rules or RuleSet()
    fit_config = fit_config or FitConfig(reg_lambda=1e-6)
    if sum(split) != count:
        raise ContractError(f"split {split} does not sum to count {count}")
    k = rig.channel_count
    beta = np.zeros(model.id_dim)
    pose = canonical_frontal_pose(rig)

    gammas = np.empty((count, model.expr_basis.shape[1]))
    alphas = np.empty((count, k))
    resamples = 0
    for i in range(count):
        rng = np.random.default_rng((seed, i))
        for _ in range(3):
            alpha = sample_blendweights(k, rules, rng)
            lms2d = project_weak_perspective(rig_landmarks(rig, alpha), pose)
            try:
                result = fit(model, beta, lms2d, fit_config)
            except Exception:
                resamples += 1
                log.warning("sample %d failed to fit; resampling", i)
                continue
            break
        else:
            raise DatasetQualityError(f"sample {i} failed to fit repeatedly")
        gammas[i] = result.gamma
        alphas[i] = alpha

    if resamples > 0.01 * count:
        raise DatasetQualityError(
            f"{resamples} of {count} samples needed resampling (> 1%)")

    n_train, n_val, n_test = split
    return GeneratedDataset(
        train=Split(gammas[:n_train], alphas[:n_train]),
        val=Split(gammas[n_train:n_train + n_val], alphas[n_train:n_train + n_val]),
        test=Split(gammas[n_train + n_val:], alphas[n_train + n_val:]),
        rig_name=rig.name, seed=seed, rules=rules,
    )


def save_dataset(dataset: GeneratedDataset, path) -> None:
    def split_doc(s: Split):
        return [{"gamma": g.tolist(), "alpha": a.tolist()}
                for g, a in zip(s.gammas, s.alphas)]
    doc = {
        "rig_name": dataset.rig_name,
        "seed": dataset.seed,
        "rules": dataset.rules.to_dict(),
        "train": split_doc(dataset.train),
        "val": split_doc(dataset.val),
        "test": split_doc(dataset.test),
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_dataset(path) -> GeneratedDataset:
    with open(path) as f:
        doc = json.load(f)

    def split_from(rows):
        return Split(np.array([r["gamma"] for r in rows], dtype=float),
                     np.array([r["alpha"] for r in rows], dtype=float))

    return GeneratedDataset(
        train=split_from(doc["train"]),
        val=split_from(doc["val"]),
        test=split_from(doc["test"]),
        rig_name=doc["rig_name"],
        seed=int(doc["seed"]),
        rules=RuleSet.from_dict(doc.get("rules", {})),
    )
