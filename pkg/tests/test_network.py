import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gazerate.agreement import quadratic_weighted_kappa
from gazerate.errors import DomainError, FormatError, TrainingError
from gazerate.network import (
    Network, Standardizer, TrainConfig, decode_ordinal, forward, grad_check, init_network, load_model,
    loss_and_gradients, predict_ordinal, save_model, train,
)


def test_init_deterministic_and_bounded():
    a, b = init_network(360, 5), init_network(360, 5)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.w2, b.w2)
    assert not np.array_equal(a.W1, init_network(360, 6).W1)
    assert np.all(a.b1 == 0) and a.b2 == 0
    assert np.abs(a.W1).max() <= math.sqrt(6 / (360 + 100))
    assert a.W1.shape == (100, 360) and a.n_parameters() == 360 * 100 + 100 + 100 + 1


def test_forward_constant_network():
    net = Network(np.zeros((3, 2)), np.zeros(3), np.zeros(3), 2.5, 0)
    assert forward(net, [1.0, -7.0]) == 2.5
    assert np.all(forward(net, np.ones((4, 2))) == 2.5)


def test_forward_hand_sized_network():
    W1 = np.array([[1.0, -1.0], [0.5, 2.0]])
    b1 = np.array([0.0, -1.0])
    w2 = np.array([2.0, -3.0])
    net = Network(W1, b1, w2, 0.5, 0)
    x = [1.0, 0.5]
    sig = lambda z: 1 / (1 + math.exp(-z))
    h1 = sig(1 * 1 + -1 * 0.5 + 0)
    h2 = sig(0.5 * 1 + 2 * 0.5 - 1)
    assert forward(net, x) == pytest.approx(2 * h1 - 3 * h2 + 0.5, abs=1e-15)
    tanh_net = replace(net, activation="tanh")
    assert forward(tanh_net, x) == pytest.approx(2 * math.tanh(0.5) - 3 * math.tanh(0.5) + 0.5, abs=1e-15)


def test_forward_hidden_permutation_symmetry():
    net = init_network(7, 1, hidden=9)
    x = np.random.default_rng(0).standard_normal(7)
    p = np.random.default_rng(1).permutation(9)
    permuted = Network(net.W1[p], net.b1[p], net.w2[p], net.b2, 0)
    assert forward(permuted, x) == pytest.approx(forward(net, x), abs=1e-12)


def test_forward_errors():
    net = init_network(3, 0)
    with pytest.raises(DomainError):
        forward(net, [1.0, 2.0])
    with pytest.raises(DomainError):
        forward(net, [1.0, np.nan, 0.0])


def test_train_single_example_converges():
    net = init_network(4, 0, hidden=10)
    x = np.array([[0.3, -0.2, 0.9, 0.1]])
    out = train(net, x, [2.0], TrainConfig(epochs=3000, learning_rate=0.05, batches=1, dtype="float64"))
    assert (forward(out, x[0]) - 2.0) ** 2 < 1e-4
    assert len(out.loss_trace) == 3000


def test_train_deterministic():
    rng = np.random.default_rng(0)
    X, y = rng.standard_normal((30, 5)), rng.integers(1, 5, 30).astype(float)
    cfg = TrainConfig(epochs=50, learning_rate=0.01, batches=3, seed=4)
    a = train(init_network(5, 1), X, y, cfg)
    b = train(init_network(5, 1), X, y, cfg)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.w2, b.w2) and a.b2 == b.b2
    c = train(init_network(5, 1), X, y, replace(cfg, seed=5))
    assert not np.array_equal(a.W1, c.W1)


def test_train_reaches_perfect_training_qwk():
    rng = np.random.default_rng(2)
    # class centres 1..4 with a margin around the rounding boundaries
    x1 = rng.integers(1, 5, 60) + rng.uniform(-0.3, 0.3, 60)
    X = np.column_stack([x1, rng.standard_normal(60)])
    y = np.clip(np.floor(x1 + 0.5), 1, 4)
    std = Standardizer.fit(X)
    cfg = TrainConfig(epochs=4000, learning_rate=0.05, batches=4, hidden=20, dtype="float64")
    net = train(init_network(2, 0, hidden=20), std.transform(X), y, cfg)
    pred = predict_ordinal(net, std.transform(X), (1, 4))
    assert quadratic_weighted_kappa(y.astype(int), pred, 4) == 1.0


def test_train_errors():
    net = init_network(2, 0)
    with pytest.raises(DomainError):
        train(net, np.ones((3, 2)), [1, 2, 3], TrainConfig(batches=4, epochs=1))
    with pytest.raises(DomainError):
        train(net, np.ones((3, 2)), [1, 2], TrainConfig(epochs=1))
    with pytest.raises(TrainingError) as info:
        train(net, np.ones((4, 2)) * 1e3, [1e30] * 4, TrainConfig(epochs=5, learning_rate=10.0, batches=2))
    assert info.value.epoch is not None and info.value.batch is not None


@pytest.mark.parametrize("kwargs", [dict(epochs=0), dict(learning_rate=0), dict(batches=0),
                                    dict(activation="relu"), dict(dtype="float16")])
def test_train_config_validation(kwargs):
    with pytest.raises(DomainError):
        TrainConfig(**kwargs)


def test_one_small_step_decreases_loss():
    rng = np.random.default_rng(3)
    for _ in range(20):
        net = init_network(6, int(rng.integers(1000)), hidden=8)
        x, y = rng.standard_normal((1, 6)), rng.uniform(1, 4, 1)
        before, _ = loss_and_gradients(net, x, y)
        after = train(net, x, y, TrainConfig(epochs=1, learning_rate=1e-4, batches=1, dtype="float64"))
        assert loss_and_gradients(after, x, y)[0] < before


@pytest.mark.parametrize("dim", [11, 349, 360])
@pytest.mark.parametrize("activation", ["sigmoid", "tanh"])
def test_grad_check(dim, activation):
    rng = np.random.default_rng(dim)
    for s in range(3):
        net = init_network(dim, s, activation=activation)
        net = replace(net, b1=rng.standard_normal(100) * 0.1, b2=0.3)
        x = rng.standard_normal(dim)
        assert grad_check(net, x, float(rng.uniform(1, 10))) < 1e-4


def test_grad_check_converges_with_h():
    net = init_network(11, 0, hidden=20)
    x = np.random.default_rng(1).standard_normal(11)
    errs = [grad_check(net, x, 2.0, h=h) for h in (1e-3, 1e-4, 1e-5)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-6


def test_zero_network_has_zero_output_gradient():
    net = Network(np.zeros((5, 3)), np.zeros(5), np.zeros(5), 0.0, 0)
    _, (dW1, db1, dw2, db2) = loss_and_gradients(net, np.zeros(3), 0.0)
    assert np.all(dw2 == 0) and db2 == 0


def test_decode_examples():
    assert decode_ordinal(3.4, 1, 4) == 3
    assert decode_ordinal(12.2, 1, 10) == 10
    assert decode_ordinal(2.5, 1, 4) == 3
    assert decode_ordinal(-3.0, 1, 4) == 1
    assert list(decode_ordinal([0.2, 1.5, 9.49], 1, 10)) == [1, 2, 9]


@given(st.floats(-1e6, 1e6), st.sampled_from([(1, 4), (1, 10)]))
def test_decoded_class_in_scale(raw, scale):
    v = decode_ordinal(raw, *scale)
    assert scale[0] <= v <= scale[1]


def test_predict_ordinal_scales():
    net = Network(np.zeros((2, 1)), np.zeros(2), np.zeros(2), 12.2, 0)
    assert predict_ordinal(net, [0.0], 10) == 10
    assert predict_ordinal(net, [0.0], (1, 4)) == 4


def test_standardizer():
    X = np.array([[1.0, 5.0, 0.1], [3.0, 5.0, 0.1], [5.0, 5.0, 0.1]])
    s = Standardizer.fit(X)
    Z = s.transform(X)
    assert np.allclose(Z[:, 0], [-1.2247448714, 0, 1.2247448714])
    assert np.all(Z[:, 1:] == 0.0) and np.all(s.std[1:] == 1)


@settings(max_examples=30)
@given(st.integers(2, 500), st.floats(-1e3, 1e3, allow_subnormal=False))
def test_constant_column_standardizes_to_exact_zero(n, value):
    assert np.all(Standardizer.fit(np.full((n, 1), value)).transform(np.full((3, 1), value)) == 0.0)


@pytest.mark.parametrize("dtype", ["float64", "float32"])
def test_model_round_trip(dtype):
    net = init_network(6, 2**40 + 3, hidden=7, activation="tanh", dtype=dtype)
    std = Standardizer(np.arange(6.0), np.arange(1.0, 7.0))
    data = save_model(net, std)
    back, s2 = load_model(data)
    for a, b in zip(back.parameters(), net.parameters()):
        assert a.dtype == b.dtype and np.array_equal(a, b)
    assert (back.seed, back.activation, back.dtype) == (net.seed, net.activation, net.dtype)
    assert np.array_equal(s2.mean, std.mean) and np.array_equal(s2.std, std.std)
    assert save_model(back, s2) == data
    with pytest.raises(FormatError):
        load_model(data[:-1])
    with pytest.raises(FormatError):
        load_model(b"XXXX" + data[4:])
