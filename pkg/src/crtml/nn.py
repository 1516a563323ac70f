"""Feedforward binary classifier: configurable hidden layers, logistic output,
mean binary cross-entropy trained by mini-batch gradient descent."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, TrainingError

HIDDEN_ACTIVATIONS = ("linear", "logistic", "rectified")
CLAMP_EPS = 1e-12


@dataclass(frozen=True)
class MlpArchitecture:
    layer_sizes: tuple
    hidden_activation: str = "linear"
    output_activation: str = "logistic"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise ContractError(f"invalid layer sizes {sizes}: need [input, hidden..., 1], all >= 1")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ContractError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation != "logistic":
            raise ContractError("output activation is fixed to logistic")

    @property
    def hidden(self):
        return self.layer_sizes[1:-1]

    def to_dict(self):
        return {"layer_sizes": list(self.layer_sizes), "hidden_activation": self.hidden_activation,
                "output_activation": self.output_activation}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    init_scale: float = 0.1
    loss: str = "bce"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0 or self.init_scale < 0:
            raise ContractError("learning_rate and batch_size must be positive, epochs and init_scale >= 0")


@dataclass
class TrainedMlp:
    architecture: MlpArchitecture
    weights: list  # weights[l] has shape (layer_sizes[l+1], layer_sizes[l])
    biases: list
    training_loss_curve: list = field(default_factory=list)

    def copy(self):
        return TrainedMlp(self.architecture, [w.copy() for w in self.weights],
                          [b.copy() for b in self.biases], list(self.training_loss_curve))

    def parameters(self):
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def to_dict(self):
        params = []
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            params.append({"name": f"W{l}", "shape": list(w.shape), "data": w.ravel().tolist()})
            params.append({"name": f"b{l}", "shape": list(b.shape), "data": b.tolist()})
        return {"architecture": self.architecture.to_dict(), "parameters": params,
                "training_loss_curve": list(self.training_loss_curve)}

    @classmethod
    def from_dict(cls, data):
        arch = MlpArchitecture(**{k: (tuple(v) if k == "layer_sizes" else v)
                                  for k, v in data["architecture"].items()})
        arrays = {p["name"]: np.asarray(p["data"], dtype=np.float64).reshape(p["shape"]) for p in data["parameters"]}
        n = len(arch.layer_sizes) - 1
        return cls(arch, [arrays[f"W{l}"] for l in range(n)], [arrays[f"b{l}"] for l in range(n)],
                   list(data.get("training_loss_curve", [])))


def logistic(z):
    # split form keeps exp() from overflowing for large |z|
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z, kind):
    if kind == "linear":
        return z
    if kind == "logistic":
        return logistic(z)
    return np.maximum(z, 0.0)


def _activation_grad(z, a, kind):
    if kind == "linear":
        return np.ones_like(z)
    if kind == "logistic":
        return a * (1.0 - a)
    return (z > 0.0).astype(np.float64)


def init_mlp(arch, seed=0, init_scale=0.1):
    """Uniform ``[-init_scale, init_scale]`` weights, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = arch.layer_sizes
    weights = [rng.uniform(-init_scale, init_scale, size=(sizes[l + 1], sizes[l])) for l in range(len(sizes) - 1)]
    biases = [np.zeros(sizes[l + 1]) for l in range(len(sizes) - 1)]
    return TrainedMlp(arch, weights, biases)


def _check_input(mlp, X):
    X = np.asarray(X, dtype=np.float64)
    width = mlp.architecture.layer_sizes[0]
    if X.shape[-1] != width:
        raise ContractError(f"input has {X.shape[-1]} features, network expects {width}")
    return X


def _forward_cache(mlp, X):
    kind = mlp.architecture.hidden_activation
    acts, pre = [X], []
    last = len(mlp.weights) - 1
    for l, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = acts[-1] @ W.T + b
        pre.append(z)
        acts.append(logistic(z) if l == last else _activate(z, kind))
    return pre, acts


def forward_batch(mlp, X):
    """Responder probability for each row of ``X``."""
    X = _check_input(mlp, np.atleast_2d(X))
    return _forward_cache(mlp, X)[1][-1][:, 0]


def forward(mlp, row):
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise ContractError("forward takes a single row; use forward_batch for matrices")
    return float(forward_batch(mlp, row[None, :])[0])


def bce_loss(prediction, label):
    """Binary cross-entropy with the prediction clamped to [eps, 1 - eps]."""
    p = np.clip(np.asarray(prediction, dtype=np.float64), CLAMP_EPS, 1.0 - CLAMP_EPS)
    y = np.asarray(label, dtype=np.float64)
    loss = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(loss) if loss.ndim == 0 else loss


def mean_loss(mlp, X, y):
    return float(np.mean(bce_loss(forward_batch(mlp, X), y)))


def gradients(mlp, X, y):
    """Backpropagated gradients of the mean BCE; returns ``(loss, [dW, db, ...])``."""
    X = _check_input(mlp, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.float64)
    kind = mlp.architecture.hidden_activation
    pre, acts = _forward_cache(mlp, X)
    p = acts[-1][:, 0]
    loss = float(np.mean(bce_loss(p, y)))
    m = X.shape[0]
    delta = ((p - y) / m)[:, None]
    grads = [None] * (2 * len(mlp.weights))
    for l in range(len(mlp.weights) - 1, -1, -1):
        grads[2 * l] = delta.T @ acts[l]
        grads[2 * l + 1] = delta.sum(axis=0)
        if l:
            delta = (delta @ mlp.weights[l]) * _activation_grad(pre[l - 1], acts[l], kind)
    return loss, grads


def epoch_orders(seed, n, epochs):
    """Row visiting order per epoch; depends only on ``(seed, n)``."""
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        yield rng.permutation(n)


def train(mlp, train_data, config=TrainConfig()):
    """Mini-batch gradient descent on mean BCE.

    ``train_data`` is a Cohort or an ``(X, y)`` pair. The loss curve holds the
    full-training-set loss after each epoch.
    """
    X, y = train_data if isinstance(train_data, tuple) else (train_data.features, train_data.labels)
    X = _check_input(mlp, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.float64)
    model = mlp.copy()
    model.training_loss_curve = []
    params = model.parameters()
    lr, bs = config.learning_rate, config.batch_size
    for epoch, order in enumerate(epoch_orders(config.seed, X.shape[0], config.epochs)):
        for b, start in enumerate(range(0, len(order), bs)):
            rows = order[start:start + bs]
            loss, grads = gradients(model, X[rows], y[rows])
            if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads):
                raise TrainingError("non-finite loss or gradient", epoch=epoch, batch=b)
            for p, g in zip(params, grads):
                p -= lr * g
        epoch_loss = mean_loss(model, X, y)
        if not np.isfinite(epoch_loss):
            raise TrainingError("non-finite epoch loss", epoch=epoch, batch=None)
        model.training_loss_curve.append(epoch_loss)
    return model


def predict_mlp(mlp, row, threshold=0.5):
    return int(forward(mlp, row) >= threshold)


def predict_batch(mlp, X, threshold=0.5):
    return (forward_batch(mlp, X) >= threshold).astype(np.int64)


def collapse_linear(mlp):
    """Fold a linear-hidden network into one affine map ``(w, b)`` before the logistic."""
    if mlp.architecture.hidden_activation != "linear":
        raise ContractError("only linear hidden layers collapse to an affine map")
    W = np.eye(mlp.architecture.layer_sizes[0])
    b = np.zeros(mlp.architecture.layer_sizes[0])
    for Wl, bl in zip(mlp.weights, mlp.biases):
        W, b = Wl @ W, Wl @ b + bl
    return W[0], float(b[0])


def gradient_check(mlp, X, y, step=1e-5):
    """Max relative error between backprop and central-difference gradients."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] > 8:
        raise ContractError("gradient_check expects a small batch (<= 8 rows)")
    _, analytic = gradients(mlp, X, y)
    probe = mlp.copy()
    worst = 0.0
    for p, g in zip(probe.parameters(), analytic):
        flat = p.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            up = mean_loss(probe, X, y)
            flat[i] = saved - step
            down = mean_loss(probe, X, y)
            flat[i] = saved
            numeric = (up - down) / (2.0 * step)
            a = g.reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(1e-8, abs(a) + abs(numeric)))
    return worst

