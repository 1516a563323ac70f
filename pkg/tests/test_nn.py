import math

import numpy as np
import pytest

from crtml.errors import ContractError, TrainingError
from crtml.nn import (MlpArchitecture, TrainConfig, TrainedMlp, bce_loss, collapse_linear, forward,
                      forward_batch, gradient_check, gradients, init_mlp, logistic, predict_batch, predict_mlp,
                      train)


def test_architecture_contract():
    with pytest.raises(ContractError):
        MlpArchitecture((3, 2))
    with pytest.raises(ContractError):
        MlpArchitecture((3, 1), "tanh")
    assert MlpArchitecture((5, 4, 1)).hidden == (4,)


def test_init_examples():
    zero = init_mlp(MlpArchitecture((3, 4, 1)), seed=0, init_scale=0.0)
    assert all((w == 0).all() for w in zero.weights)
    np.testing.assert_array_equal(forward_batch(zero, np.random.default_rng(0).normal(size=(5, 3))), 0.5)
    a, b = init_mlp(MlpArchitecture((3, 4, 1)), 9), init_mlp(MlpArchitecture((3, 4, 1)), 9)
    assert all(np.array_equal(x, y) for x, y in zip(a.parameters(), b.parameters()))
    tiny = init_mlp(MlpArchitecture((2, 1)))
    assert [w.shape for w in tiny.weights] == [(1, 2)] and [b.shape for b in tiny.biases] == [(1,)]


def test_forward_by_hand():
    arch = MlpArchitecture((1, 1, 1))
    w, b, w2, b2, x = 0.7, -0.2, 1.3, 0.4, 2.5
    m = TrainedMlp(arch, [np.array([[w]]), np.array([[w2]])], [np.array([b]), np.array([b2])])
    assert forward(m, [x]) == pytest.approx(1 / (1 + math.exp(-(w2 * (w * x + b) + b2))), abs=1e-15)
    with pytest.raises(ContractError):
        forward(m, [1.0, 2.0])


def test_logistic_extremes():
    out = logistic(np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_array_equal(out, [0.0, 0.5, 1.0])


def test_bce_examples():
    assert bce_loss(0.5, 1) == pytest.approx(math.log(2))
    assert bce_loss(0.5, 0) == pytest.approx(math.log(2))
    assert bce_loss(0.9, 1) == pytest.approx(0.10536, abs=1e-5)
    assert bce_loss(1.0 - 1e-15, 1) < 1e-11
    assert math.isfinite(bce_loss(0.0, 1))


def test_collapse_equivalence(rng):
    m = init_mlp(MlpArchitecture((6, 5, 3, 1)), seed=4, init_scale=0.5)
    w, b = collapse_linear(m)
    X = rng.normal(size=(100, 6))
    np.testing.assert_allclose(forward_batch(m, X), logistic(X @ w + b), rtol=0, atol=1e-12)
    with pytest.raises(ContractError):
        collapse_linear(init_mlp(MlpArchitecture((2, 2, 1), "rectified")))


@pytest.mark.parametrize("act", ["linear", "logistic", "rectified"])
def test_gradient_check(act, rng):
    m = init_mlp(MlpArchitecture((4, 5, 3, 1), act), seed=11, init_scale=0.5)
    m.biases = [rng.uniform(-0.5, 0.5, size=b.shape) for b in m.biases]
    X = rng.normal(size=(6, 4))
    y = rng.integers(0, 2, size=6)
    assert gradient_check(m, X, y) < 1e-4


def test_output_bias_gradient_closed_form():
    m = init_mlp(MlpArchitecture((3, 2, 1)), init_scale=0.0)
    y = np.array([1, 0, 1, 1])
    _, g = gradients(m, np.zeros((4, 3)), y)
    assert g[-1][0] == pytest.approx(np.mean(0.5 - y))


def test_fresh_smooth_models_pass_gradient_check(rng):
    for act in ("linear", "logistic"):
        for seed in range(5):
            m = init_mlp(MlpArchitecture((4, 5, 3, 1), act), seed=seed, init_scale=0.5)
            assert gradient_check(m, rng.normal(size=(6, 4)), rng.integers(0, 2, size=6)) < 1e-4


def test_gradient_check_step_convergence(rng):
    m = init_mlp(MlpArchitecture((3, 4, 1), "logistic"), seed=2, init_scale=1.0)
    X, y = rng.normal(size=(5, 3)), rng.integers(0, 2, size=5)
    assert gradient_check(m, X, y, 1e-5) < gradient_check(m, X, y, 1e-3)


def _blobs(rng, n=200, gap=4.0):
    y = np.arange(n) % 2
    X = rng.normal(size=(n, 2)) + np.outer(y - 0.5, [gap, gap])
    return X, y


def test_small_lr_loss_non_increasing(rng):
    X, y = _blobs(rng)
    m = train(init_mlp(MlpArchitecture((2, 3, 1)), 0), (X, y), TrainConfig(learning_rate=1e-3, epochs=10))
    c = m.training_loss_curve
    assert len(c) == 10 and all(b <= a for a, b in zip(c, c[1:]))


def test_separable_training_accuracy(rng):
    X, y = _blobs(rng)
    m = train(init_mlp(MlpArchitecture((2, 4, 1)), 0), (X, y))
    assert np.mean(predict_batch(m, X) == y) >= 0.99


def test_zero_epochs_and_determinism(rng):
    X, y = _blobs(rng, 40)
    m0 = init_mlp(MlpArchitecture((2, 3, 1)), 1)
    same = train(m0, (X, y), TrainConfig(epochs=0))
    assert all(np.array_equal(a, b) for a, b in zip(same.parameters(), m0.parameters()))
    a = train(m0, (X, y), TrainConfig(epochs=5, seed=3))
    b = train(m0, (X, y), TrainConfig(epochs=5, seed=3))
    assert a.training_loss_curve == b.training_loss_curve


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_error_on_divergence(rng):
    X = rng.normal(size=(20, 2)) * 1e200
    y = np.arange(20) % 2
    with pytest.raises(TrainingError) as err:
        train(init_mlp(MlpArchitecture((2, 3, 1)), 0, 1.0), (X, y), TrainConfig(learning_rate=1e3, epochs=3))
    assert err.value.epoch is not None


def test_prediction_threshold():
    zero = init_mlp(MlpArchitecture((2, 1)), init_scale=0.0)
    assert predict_mlp(zero, [1.0, 2.0]) == 1
    np.testing.assert_array_equal(predict_batch(zero, np.ones((3, 2))), 1)
    np.testing.assert_array_equal(predict_batch(zero, np.ones((3, 2)), threshold=0.0), 1)
    assert predict_mlp(zero, [1.0, 2.0], threshold=0.6) == 0


def test_serialization_roundtrip(rng):
    m = init_mlp(MlpArchitecture((3, 4, 2, 1), "rectified"), 5)
    back = TrainedMlp.from_dict(m.to_dict())
    X = rng.normal(size=(8, 3))
    np.testing.assert_array_equal(forward_batch(back, X), forward_batch(m, X))
