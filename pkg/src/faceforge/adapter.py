"""The expression-to-blendweight translator network.

Two linear layers with a rectifier (plain or leaky) between them and an
optional [0, 1] clamp on the output.  The network is small enough that
forward, backward, and the Adam update are written directly in numpy;
the finite-difference suite in the tests certifies the gradients.

Training minimizes mean squared error; evaluation reports mean absolute
error averaged over channels and samples, which stays comparable across
blendshape topologies of different sizes.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .datagen import Split
from .errors import ContractError, DivergenceError

RELU = "relu"
LEAKY_RELU = "leaky_relu"


@dataclass
class AdapterConfig:
    in_dim: int = 64
    hidden_dim: int = 256
    out_dim: int = 25
    activation: str = LEAKY_RELU
    leaky_slope: float = 0.01
    clamp_output: bool = True

    def __post_init__(self):
        if self.in_dim != 64:
            raise ContractError("adapter input width is fixed at 64")
        if self.hidden_dim < 1 or self.out_dim < 1:
            raise ContractError("dimensions must be positive")
        if self.activation not in (RELU, LEAKY_RELU):
            raise ContractError(f"unknown activation {self.activation!r}")

    def label(self) -> str:
        act = "LeakyReLU" if self.activation == LEAKY_RELU else "ReLU"
        clamp = "+Clamp" if self.clamp_output else ""
        return f"Linear-{act}-Linear{clamp} h={self.hidden_dim}"


@dataclass(eq=False)
class AdapterNet:
    w1: np.ndarray   # (hidden, 64)
    b1: np.ndarray   # (hidden,)
    w2: np.ndarray   # (K, hidden)
    b2: np.ndarray   # (K,)
    config: AdapterConfig

    def __post_init__(self):
        c = self.config
        if (self.w1.shape != (c.hidden_dim, c.in_dim)
                or self.b1.shape != (c.hidden_dim,)
                or self.w2.shape != (c.out_dim, c.hidden_dim)
                or self.b2.shape != (c.out_dim,)):
            raise ContractError("weight shapes disagree with config")

    def copy(self) -> "AdapterNet":
        return AdapterNet(self.w1.copy(), self.b1.copy(),
                          self.w2.copy(), self.b2.copy(), copy.copy(self.config))


def init_net(config: AdapterConfig, seed: int = 0) -> AdapterNet:
    """Seeded uniform initialization scaled by 1/sqrt(fan_in)."""
    rng = np.random.default_rng(seed)
    lim1 = 1.0 / np.sqrt(config.in_dim)
    lim2 = 1.0 / np.sqrt(config.hidden_dim)
    return AdapterNet(
        w1=rng.uniform(-lim1, lim1, (config.hidden_dim, config.in_dim)),
        b1=rng.uniform(-lim1, lim1, config.hidden_dim),
        w2=rng.uniform(-lim2, lim2, (config.out_dim, config.hidden_dim)),
        b2=rng.uniform(-lim2, lim2, config.out_dim),
        config=config,
    )


def _activate(net: AdapterNet, z):
    if net.config.activation == RELU:
        return np.maximum(z, 0.0)
    return np.where(z > 0, z, net.config.leaky_slope * z)


def _activation_grad(net: AdapterNet, z):
    # Subgradient at exactly 0 is taken as 0 (leaky: the slope).
    if net.config.activation == RELU:
        return (z > 0).astype(float)
    return np.where(z > 0, 1.0, net.config.leaky_slope)


def forward(net: AdapterNet, gamma: np.ndarray) -> np.ndarray:
    """Predict blend weights from a gamma vector or a (N, 64) batch."""
    g = np.asarray(gamma, dtype=float)
    if g.shape[-1] != net.config.in_dim:
        raise ContractError(
            f"gamma width {g.shape[-1]} != adapter input {net.config.in_dim}")
    z1 = g @ net.w1.T + net.b1
    z2 = _activate(net, z1) @ net.w2.T + net.b2
    if net.config.clamp_output:
        z2 = np.clip(z2, 0.0, 1.0)
    return z2


def loss_mse(predicted, target) -> float:
    p = np.asarray(predicted, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise ContractError(f"shape mismatch {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def backward(net: AdapterNet, gamma, target):
    """Analytic gradients of loss_mse(forward(gamma), target).

    Accepts a single sample or a batch; batch gradients are the mean over
    samples.  Clamp is identity inside (0, 1) and blocks the gradient in
    saturation.  Returns (dw1, db1, dw2, db2).
    """
    g = np.atleast_2d(np.asarray(gamma, dtype=float))
    t = np.atleast_2d(np.asarray(target, dtype=float))
    n = g.shape[0]

    z1 = g @ net.w1.T + net.b1
    a1 = _activate(net, z1)
    z2 = a1 @ net.w2.T + net.b2
    out = np.clip(z2, 0.0, 1.0) if net.config.clamp_output else z2

    dout = 2.0 * (out - t) / (t.shape[1] * n)
    if net.config.clamp_output:
        dout = dout * ((z2 > 0.0) & (z2 < 1.0))
    dw2 = dout.T @ a1
    db2 = dout.sum(axis=0)
    da1 = dout @ net.w2
    dz1 = da1 * _activation_grad(net, z1)
    dw1 = dz1.T @ g
    db1 = dz1.sum(axis=0)
    return dw1, db1, dw2, db2


def evaluate_mae(net: AdapterNet, pairs) -> float:
    """Mean absolute error over samples and channels."""
    gammas, alphas = _as_arrays(pairs)
    if gammas.shape[0] == 0:
        raise ContractError("cannot evaluate on an empty sample set")
    return float(np.mean(np.abs(forward(net, gammas) - alphas)))


def _as_arrays(pairs):
    # Accepts a datagen.Split or a list of SamplePair.
    if hasattr(pairs, "gammas"):
        return pairs.gammas, pairs.alphas
    gammas = np.array([np.asarray(p.gamma, dtype=float) for p in pairs])
    alphas = np.array([np.asarray(p.alpha, dtype=float) for p in pairs])
    return gammas, alphas


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 200
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 1:
            raise ContractError("invalid training hyperparameters")


@dataclass
class TrainReport:
    train_mse: list = field(default_factory=list)   # per epoch
    val_mae: list = field(default_factory=list)     # per epoch
    test_mae: float | None = None
    best_epoch: int = -1
    wall_seconds: float = 0.0


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1 - c.beta1) * g
            v *= c.beta2
            v += (1 - c.beta2) * g * g
            mhat = m / (1 - c.beta1 ** self.t)
            vhat = v / (1 - c.beta2 ** self.t)
            p -= c.learning_rate * mhat / (np.sqrt(vhat) + c.eps)


def _train_loop(net: AdapterNet, gammas, alphas, tconfig: TrainConfig,
                val_split=None, epochs=None):
    """Mini-batch Adam over (gammas, alphas); mutates net in place.

    Returns (per-epoch train MSE, per-epoch val MAE, best net copy, best epoch).
    With no validation split the final weights are the "best" checkpoint.
    """
    epochs = epochs or tconfig.epochs
    rng = np.random.default_rng(tconfig.seed)
    params = [net.w1, net.b1, net.w2, net.b2]
    opt = _Adam(params, tconfig)
    n = gammas.shape[0]

    train_mse, val_mae = [], []
    best_net, best_epoch, best_score = net.copy(), 0, np.inf
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, tconfig.batch_size):
            batch = order[start:start + tconfig.batch_size]
            grads = backward(net, gammas[batch], alphas[batch])
            opt.step(params, grads)
        mse = loss_mse(forward(net, gammas), alphas)
        if not np.isfinite(mse):
            raise DivergenceError("training loss is not finite",
                                  epoch=epoch, learning_rate=tconfig.learning_rate)
        train_mse.append(mse)
        if val_split is not None:
            mae = evaluate_mae(net, val_split)
            val_mae.append(mae)
            if mae < best_score:
                best_score, best_epoch, best_net = mae, epoch, net.copy()
        else:
            best_net, best_epoch = net.copy(), epoch
    return train_mse, val_mae, best_net, best_epoch


def input_stats(gammas):
    """Per-entry mean and std of the training gammas (std floored at 1e-8)."""
    mu = gammas.mean(axis=0)
    sigma = np.maximum(gammas.std(axis=0), 1e-8)
    return mu, sigma


def fold_input_standardization(net: AdapterNet, mu, sigma) -> AdapterNet:
    """Absorb an input standardization (g - mu) / sigma into the first layer.

    Exact algebra: the folded net applied to raw gammas computes what the
    original net computed on standardized gammas.
    """
    folded = net.copy()
    folded.w1 = net.w1 / sigma[None, :]
    folded.b1 = net.b1 - folded.w1 @ mu
    return folded


def train(config: AdapterConfig, tconfig: TrainConfig, dataset):
    """Train from seeded initialization; returns (best net, TrainReport).

    Optimization runs on standardized inputs (per-entry mean/std of the
    training gammas), which keeps the clamp from saturating permanently on
    large expression coefficients; the standardization is folded into the
    returned checkpoint's first layer, so the net consumes raw gammas.
    The checkpoint with the best validation MAE is returned; test MAE is
    evaluated on that checkpoint.
    """
    if dataset.channel_count != config.out_dim:
        raise ContractError(
            f"dataset has K={dataset.channel_count}, config expects {config.out_dim}")
    t0 = time.perf_counter()
    mu, sigma = input_stats(dataset.train.gammas)
    std = lambda g: (g - mu) / sigma
    net = init_net(config, tconfig.seed)
    val = Split(std(dataset.val.gammas), dataset.val.alphas)
    train_mse, val_mae, best_net, best_epoch = _train_loop(
        net, std(dataset.train.gammas), dataset.train.alphas, tconfig,
        val_split=val)
    best_net = fold_input_standardization(best_net, mu, sigma)
    report = TrainReport(
        train_mse=train_mse, val_mae=val_mae,
        test_mae=evaluate_mae(best_net, dataset.test),
        best_epoch=best_epoch,
        wall_seconds=time.perf_counter() - t0,
    )
    return best_net, report


def finetune(net: AdapterNet, pairs, tconfig: TrainConfig,
             lr_factor: float = 0.1, max_epochs: int = 50) -> AdapterNet:
    """Continue training from current weights at a reduced learning rate."""
    gammas, alphas = _as_arrays(pairs)
    if gammas.shape[0] == 0:
        raise ContractError("finetune requires at least one sample pair")
    tuned = net.copy()
    sub = copy.copy(tconfig)
    sub.learning_rate = tconfig.learning_rate * lr_factor
    _train_loop(tuned, gammas, alphas, sub,
                epochs=min(tconfig.epochs, max_epochs))
    return tuned


def run_ablation_grid(dataset, configs, tconfig: TrainConfig):
    """Train every config with the same seed and data; returns (config, MAE) rows."""
    rows = []
    for config in configs:
        _, report = train(config, tconfig, dataset)
        rows.append((config, report.test_mae))
    return rows


def reference_grid(out_dim: int):
    """The six activation/width/clamp variants compared by the ablate command."""
    return [
        AdapterConfig(hidden_dim=256, out_dim=out_dim, activation=RELU,
                      clamp_output=False),
        AdapterConfig(hidden_dim=100, out_dim=out_dim, activation=RELU,
                      clamp_output=False),
        AdapterConfig(hidden_dim=384, out_dim=out_dim, activation=RELU,
                      clamp_output=False),
        AdapterConfig(hidden_dim=256, out_dim=out_dim, activation=LEAKY_RELU,
                      clamp_output=False),
        AdapterConfig(hidden_dim=256, out_dim=out_dim, activation=RELU,
                      clamp_output=True),
        AdapterConfig(hidden_dim=256, out_dim=out_dim, activation=LEAKY_RELU,
                      clamp_output=True),
    ]


def save_checkpoint(net: AdapterNet, path, seed: int | None = None,
                    report: TrainReport | None = None) -> None:
    doc = checkpoint_to_dict(net, seed, report)
    with open(path, "w") as f:
        json.dump(doc, f)


def checkpoint_to_dict(net: AdapterNet, seed=None, report=None) -> dict:
    c = net.config
    doc = {
        "config": {
            "in_dim": c.in_dim, "hidden_dim": c.hidden_dim, "out_dim": c.out_dim,
            "activation": c.activation, "leaky_slope": c.leaky_slope,
            "clamp_output": c.clamp_output,
        },
        "w1": net.w1.tolist(), "b1": net.b1.tolist(),
        "w2": net.w2.tolist(), "b2": net.b2.tolist(),
    }
    if seed is not None:
        doc["seed"] = seed
    if report is not None:
        doc["report"] = {
            "train_mse": report.train_mse, "val_mae": report.val_mae,
            "test_mae": report.test_mae, "best_epoch": report.best_epoch,
            "wall_seconds": report.wall_seconds,
        }
    return doc


def checkpoint_from_dict(doc: dict) -> AdapterNet:
    c = doc["config"]
    config = AdapterConfig(
        in_dim=c["in_dim"], hidden_dim=c["hidden_dim"], out_dim=c["out_dim"],
        activation=c["activation"], leaky_slope=c.get("leaky_slope", 0.01),
        clamp_output=c["clamp_output"])
    return AdapterNet(
        w1=np.array(doc["w1"], dtype=float), b1=np.array(doc["b1"], dtype=float),
        w2=np.array(doc["w2"], dtype=float), b2=np.array(doc["b2"], dtype=float),
        config=config)


def load_checkpoint(path) -> AdapterNet:
    with open(path) as f:
        return checkpoint_from_dict(json.load(f))
