import numpy as np
import pytest

from faceforge.adapter import (AdapterConfig, TrainConfig, backward,
                               checkpoint_from_dict, checkpoint_to_dict,
                               evaluate_mae, finetune, fold_input_standardization,
                               forward, init_net, input_stats, load_checkpoint,
                               loss_mse, reference_grid, save_checkpoint, train)
from faceforge.datagen import SamplePair
from faceforge.errors import ContractError


def tiny_config(**kw):
    kw.setdefault("hidden_dim", 4)
    kw.setdefault("out_dim", 3)
    kw.setdefault("activation", "relu")
    return AdapterConfig(**kw)


def test_forward_manual_oracle():
    # Hidden width 2, output 1, hand-computed ReLU pass.
    net = init_net(tiny_config(hidden_dim=2, out_dim=1), seed=0)
    net.w1[:] = 0.0
    net.w1[0, 0], net.w1[1, 1] = 1.0, -1.0
    net.b1[:] = [0.5, 0.0]
    net.w2[:] = [[2.0, 3.0]]
    net.b2[:] = [0.25]
    g = np.zeros(64)
    g[0], g[1] = 1.0, 2.0
    # z1 = (1.5, -2) -> relu (1.5, 0) -> 2*1.5 + 0.25 = 3.25 -> clamp to 1
    assert forward(net, g)[0] == 1.0
    net.config.clamp_output = False
    assert abs(forward(net, g)[0] - 3.25) < 1e-14


def test_forward_batch_matches_single(rng):
    net = init_net(tiny_config(), seed=1)
    gs = rng.normal(size=(5, 64))
    batch = forward(net, gs)
    for i in range(5):
        np.testing.assert_allclose(batch[i], forward(net, gs[i]), atol=1e-12)


def test_forward_rejects_wrong_width(rng):
    net = init_net(tiny_config(), seed=1)
    with pytest.raises(ContractError):
        forward(net, rng.normal(size=32))


def test_leaky_relu_negative_slope(rng):
    net = init_net(tiny_config(activation="leaky_relu", clamp_output=False),
                   seed=2)
    g = rng.normal(size=64)
    z1 = net.w1 @ g + net.b1
    a1 = np.where(z1 > 0, z1, 0.01 * z1)
    np.testing.assert_allclose(forward(net, g), net.w2 @ a1 + net.b2,
                               atol=1e-14)


def test_loss_mse_oracle():
    assert loss_mse(np.array([1.0, 2.0]), np.array([0.0, 4.0])) == 2.5
    with pytest.raises(ContractError):
        loss_mse(np.zeros(3), np.zeros(4))


@pytest.mark.parametrize("activation", ["relu", "leaky_relu"])
@pytest.mark.parametrize("clamp", [False, True])
def test_backward_matches_finite_differences(activation, clamp, rng):
    config = tiny_config(activation=activation, clamp_output=clamp)
    net = init_net(config, seed=3)
    g = rng.normal(size=64)
    t = rng.uniform(0, 1, 3)
    grads = backward(net, g, t)
    h = 1e-6
    for pname, grad in zip(("w1", "b1", "w2", "b2"), grads):
        param = getattr(net, pname)
        flat_grad = np.asarray(grad).ravel()
        idx = rng.choice(param.size, size=min(10, param.size), replace=False)
        for j in idx:
            orig = param.flat[j]
            param.flat[j] = orig + h
            up = loss_mse(forward(net, g), t)
            param.flat[j] = orig - h
            dn = loss_mse(forward(net, g), t)
            param.flat[j] = orig
            num = (up - dn) / (2 * h)
            assert abs(num - flat_grad[j]) < 1e-5 * max(1.0, abs(num))


def test_backward_batch_is_mean_of_singles(rng):
    net = init_net(tiny_config(), seed=4)
    gs = rng.normal(size=(4, 64))
    ts = rng.uniform(0, 1, (4, 3))
    batch = backward(net, gs, ts)
    singles = [backward(net, gs[i], ts[i]) for i in range(4)]
    for p in range(4):
        mean = np.mean([s[p] for s in singles], axis=0)
        np.testing.assert_allclose(batch[p], mean, atol=1e-12)


def test_clamp_blocks_gradient_in_saturation():
    net = init_net(tiny_config(out_dim=1), seed=5)
    net.b2[:] = 50.0  # output deep in clamp saturation regardless of input
    grads = backward(net, np.zeros(64), np.array([0.5]))
    for g in grads:
        np.testing.assert_array_equal(g, np.zeros_like(g))


def test_init_deterministic_and_seed_sensitive():
    a = init_net(tiny_config(), seed=9)
    b = init_net(tiny_config(), seed=9)
    c = init_net(tiny_config(), seed=10)
    np.testing.assert_array_equal(a.w1, b.w1)
    np.testing.assert_array_equal(a.w2, b.w2)
    assert not np.array_equal(a.w1, c.w1)


def test_fold_input_standardization_exact(rng):
    net = init_net(tiny_config(), seed=6)
    gs = rng.normal(loc=3.0, scale=7.0, size=(40, 64))
    mu, sigma = input_stats(gs)
    folded = fold_input_standardization(net, mu, sigma)
    np.testing.assert_allclose(forward(folded, gs),
                               forward(net, (gs - mu) / sigma), atol=1e-10)


def test_evaluate_mae_oracle():
    net = init_net(tiny_config(out_dim=2), seed=7)
    net.w1[:] = 0.0
    net.w2[:] = 0.0
    net.b1[:] = 0.0
    net.b2[:] = [0.5, 0.5]
    pairs = [SamplePair(np.zeros(64), np.array([0.0, 1.0])),
             SamplePair(np.zeros(64), np.array([0.5, 0.7]))]
    # |0.5-0| |0.5-1| |0.5-0.5| |0.5-0.7| -> mean 0.3
    assert abs(evaluate_mae(net, pairs) - 0.3) < 1e-14
    with pytest.raises(ContractError):
        evaluate_mae(net, [])


def test_train_learns_small_dataset(trained_net, small_dataset):
    net, report = trained_net
    assert report.test_mae < 0.05
    assert min(report.val_mae) < 0.05
    assert 0 <= report.best_epoch < 40
    assert evaluate_mae(net, small_dataset.test) == report.test_mae


def test_train_rejects_mismatched_out_dim(small_dataset):
    config = AdapterConfig(hidden_dim=8, out_dim=small_dataset.channel_count + 1)
    with pytest.raises(ContractError):
        train(config, TrainConfig(seed=0, epochs=1), small_dataset)


def test_train_deterministic(small_dataset):
    config = AdapterConfig(hidden_dim=16, out_dim=small_dataset.channel_count)
    tconfig = TrainConfig(seed=21, epochs=5)
    net_a, rep_a = train(config, tconfig, small_dataset)
    net_b, rep_b = train(config, tconfig, small_dataset)
    np.testing.assert_array_equal(net_a.w1, net_b.w1)
    np.testing.assert_array_equal(net_a.w2, net_b.w2)
    assert rep_a.test_mae == rep_b.test_mae
    assert rep_a.best_epoch == rep_b.best_epoch


def test_finetune_improves_on_shifted_labels(trained_net, small_dataset):
    net, _ = trained_net
    shifted = [SamplePair(p.gamma, np.clip(p.alpha + 0.15, 0, 1))
               for p in small_dataset.val.pairs()[:50]]
    before = evaluate_mae(net, shifted)
    tuned = finetune(net, shifted, TrainConfig(seed=1, epochs=200))
    after = evaluate_mae(tuned, shifted)
    assert after < before


def test_finetune_requires_samples(trained_net):
    net, _ = trained_net
    with pytest.raises(ContractError):
        finetune(net, [], TrainConfig(seed=0))


def test_reference_grid_variants():
    grid = reference_grid(25)
    labels = [c.label() for c in grid]
    assert len(grid) == 6 and len(set(labels)) == 6
    assert sum(c.clamp_output for c in grid) == 2
    assert {c.hidden_dim for c in grid} == {100, 256, 384}
    assert all(c.out_dim == 25 for c in grid)


def test_checkpoint_round_trip(trained_net, tmp_path, small_dataset):
    net, report = trained_net
    path = tmp_path / "ckpt.json"
    save_checkpoint(net, path, seed=11, report=report)
    back = load_checkpoint(path)
    np.testing.assert_array_equal(back.w1, net.w1)
    np.testing.assert_array_equal(back.b1, net.b1)
    np.testing.assert_array_equal(back.w2, net.w2)
    np.testing.assert_array_equal(back.b2, net.b2)
    assert back.config == net.config
    gs = small_dataset.test.gammas[:5]
    np.testing.assert_array_equal(forward(back, gs), forward(net, gs))


def test_checkpoint_dict_round_trip(rng):
    net = init_net(tiny_config(activation="leaky_relu"), seed=12)
    back = checkpoint_from_dict(checkpoint_to_dict(net))
    assert back.config.activation == "leaky_relu"
    np.testing.assert_array_equal(back.w1, net.w1)


def test_config_validation():
    with pytest.raises(ContractError):
        AdapterConfig(hidden_dim=0, out_dim=3)
    with pytest.raises(ContractError):
        AdapterConfig(hidden_dim=4, out_dim=3, activation="tanh")
