"""One-hidden-layer feed-forward regressor used as an ordinal scorer.

The network maps a feature vector to one real number, is trained with
mean squared error by mini-batch gradient descent, and its output is decoded
to an ordinal class by rounding and clamping.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, FormatError, TrainingError

MODEL_MAGIC = b"GZRN"
MODEL_VERSION = 1

_ACTIVATIONS = ("sigmoid", "tanh")
_DTYPES = ("float64", "float32")


def _act(name, z):
    if name == "sigmoid":
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-z))
    return np.tanh(z)


def _act_grad(name, a):
    """Derivative expressed through the activation value."""
    if name == "sigmoid":
        return a * (1.0 - a)
    return 1.0 - a * a


@dataclass
class Network:
    W1: np.ndarray  # hidden x input
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    seed: int
    activation: str = "sigmoid"
    dtype: str = "float64"
    loss_trace: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.dtype not in _DTYPES:
            raise DomainError(f"unsupported dtype {self.dtype!r}")
        h, d = np.shape(self.W1)
        if np.shape(self.b1) != (h,) or np.shape(self.w2) != (h,):
            raise DomainError("inconsistent parameter shapes")

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def parameters(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.w2, np.array([self.b2])]

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def astype(self, dtype: str) -> "Network":
        t = np.dtype(dtype)
        return replace(self, W1=self.W1.astype(t), b1=self.b1.astype(t), w2=self.w2.astype(t),
                       b2=float(t.type(self.b2)), dtype=dtype)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10000
    learning_rate: float = 0.001
    batches: int = 10
    seed: int = 0
    standardize: bool = True
    hidden: int = 100
    activation: str = "sigmoid"
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be positive")
        if self.batches < 1:
            raise DomainError("batches must be >= 1")
        if self.hidden < 1:
            raise DomainError("hidden must be >= 1")
        if self.activation not in _ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.dtype not in _DTYPES:
            raise DomainError(f"unsupported dtype {self.dtype!r}")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        # constant columns map to exactly zero; a float mean of n equal
        # values is not always that value, so take it from the data
        const = X.max(axis=0) == X.min(axis=0)
        mean = np.where(const, X[0], X.mean(axis=0))
        std = np.where(const, 1.0, X.std(axis=0))
        return cls(mean, std)

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


def init_network(input_dim: int, seed: int, hidden: int = 100, activation: str = "sigmoid",
                 dtype: str = "float64") -> Network:
    """Glorot-uniform weights from a seeded generator, zero biases."""
    if input_dim < 1:
        raise DomainError("input_dim must be >= 1")
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (input_dim + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 1))
    W1 = rng.uniform(-lim1, lim1, size=(hidden, input_dim))
    w2 = rng.uniform(-lim2, lim2, size=hidden)
    net = Network(W1, np.zeros(hidden), w2, 0.0, seed, activation, "float64")
    return net.astype(dtype) if dtype != "float64" else net


def _check_input(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=net.dtype)
    if X.shape[-1] != net.input_dim:
        raise DomainError(f"expected {net.input_dim} features, got {X.shape[-1]}")
    if not np.all(np.isfinite(X)):
        raise DomainError("non-finite input")
    return X


def forward(net: Network, x):
    """Network output for one vector (float) or a batch of rows (array)."""
    X = _check_input(net, x)
    a = _act(net.activation, X @ net.W1.T + net.b1)
    out = a @ net.w2 + np.asarray(net.b2, dtype=net.dtype)
    return float(out) if np.ndim(out) == 0 else out


def loss_and_gradients(net: Network, X, y):
    """MSE over the rows of ``X`` and its gradient w.r.t. every parameter.

    Returns ``(loss, (dW1, db1, dw2, db2))``.
    """
    X = np.atleast_2d(X)
    y = np.atleast_1d(y)
    return _backprop(net.W1, net.b1, net.w2, net.b2, X, y, net.activation)


def _backprop(W1, b1, w2, b2, X, y, activation):
    a = _act(activation, X @ W1.T + b1)
    err = a @ w2 + b2 - y
    m = len(y)
    loss = float(err @ err) / m
    d = err * (2.0 / m)
    dw2 = d @ a
    db2 = d.sum()
    da = np.outer(d, w2) * _act_grad(activation, a)
    dW1 = da.T @ X
    db1 = da.sum(axis=0)
    return loss, (dW1, db1, dw2, db2)


def train(net: Network, X, y, cfg: TrainConfig) -> Network:
    """Mini-batch gradient descent on mean squared error.

    Every epoch reshuffles the rows with a generator seeded from
    ``cfg.seed`` and splits them into ``cfg.batches`` contiguous batches.
    The returned network carries ``loss_trace`` (mean batch loss per epoch).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise DomainError("training data must be a non-empty 2-D array")
    if len(y) != len(X):
        raise DomainError("features and labels differ in length")
    if cfg.batches > len(X):
        raise DomainError(f"{cfg.batches} batches requested for {len(X)} examples")
    net = net.astype(cfg.dtype)
    X = _check_input(net, X)
    y = y.astype(net.dtype)
    W1, b1, w2 = net.W1.copy(), net.b1.copy(), net.w2.copy()
    b2 = net.b2
    lr = net.W1.dtype.type(cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    n = len(X)
    bounds = [(int(s[0]), int(s[-1]) + 1) for s in np.array_split(np.arange(n), cfg.batches)]
    trace = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        Xp, yp = X[perm], y[perm]
        total = 0.0
        for bi, (s, e) in enumerate(bounds):
            with np.errstate(over="ignore", invalid="ignore"):
                loss, (dW1, db1, dw2, db2) = _backprop(W1, b1, w2, b2, Xp[s:e], yp[s:e], net.activation)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}", epoch, bi)
            W1 -= lr * dW1
            b1 -= lr * db1
            w2 -= lr * dw2
            b2 = b2 - lr * db2
            total += loss
        trace[epoch] = total / len(bounds)
    out = Network(W1, b1, w2, float(b2), net.seed, net.activation, cfg.dtype)
    out.loss_trace = trace
    return out


def _act_diff(name, z, delta):
    """``act(z + delta) - act(z - delta)`` evaluated without cancellation."""
    if name == "sigmoid":
        with np.errstate(over="ignore"):
            return 2.0 * np.sinh(delta) * _act(name, z + delta) / (np.exp(z) + np.exp(delta))
    return np.sinh(2.0 * delta) / (np.cosh(z + delta) * np.cosh(z - delta))


def grad_check(net: Network, x, y, h: float = 1e-5) -> float:
    """Largest relative gap between backprop and central differences.

    Works in float64 on the squared error of one example. The numeric side
    is the central quotient ``(L(p + h) - L(p - h)) / 2h`` for every
    parameter ``p``. Perturbing a first-layer parameter only moves one
    hidden unit, so the perturbed outputs are rebuilt from that unit alone,
    and the difference of the two activations is taken in closed form so
    that float64 cancellation does not swamp tiny gradients.
    """
    net = net.astype("float64")
    x = np.asarray(x, dtype=float)
    y = float(y)
    act = net.activation
    _, (gW1, gb1, gw2, gb2) = loss_and_gradients(net, x, y)

    z = net.W1 @ x + net.b1
    a = _act(act, z)
    out = float(a @ net.w2 + net.b2)

    def central(diff, plus, minus):
        # L+ - L- = (o+ - o-)(o+ + o- - 2y)
        return diff * (plus + minus - 2.0 * y) / (2.0 * h)

    w2 = net.w2[:, None]
    Z = np.broadcast_to(z[:, None], gW1.shape)
    D = np.broadcast_to(h * x[None, :], gW1.shape)
    base = out - (net.w2 * a)[:, None]
    nW1 = central(w2 * _act_diff(act, Z, D), base + w2 * _act(act, Z + D), base + w2 * _act(act, Z - D))

    base1 = out - net.w2 * a
    nb1 = central(net.w2 * _act_diff(act, z, h), base1 + net.w2 * _act(act, z + h),
                  base1 + net.w2 * _act(act, z - h))
    nw2 = central(2.0 * h * a, out + h * a, out - h * a)
    nb2 = central(2.0 * h, out + h, out - h)

    worst = 0.0
    for an, nu in ((gW1, nW1), (gb1, nb1), (gw2, nw2), (np.array([gb2]), np.array([nb2]))):
        denom = np.maximum(np.maximum(np.abs(an), np.abs(nu)), 1e-8)
        worst = max(worst, float(np.max(np.abs(an - nu) / denom)))
    return worst


def decode_ordinal(raw, lo: int, hi: int):
    """Round half-up and clamp into ``lo..hi``."""
    v = np.clip(np.floor(np.asarray(raw, dtype=float) + 0.5), lo, hi).astype(int)
    return int(v) if v.ndim == 0 else v


def predict_ordinal(net: Network, x, scale=(1, 4)):
    """Ordinal class for ``x``; ``scale`` is ``(lo, hi)`` or the top class ``k`` of 1..k."""
    lo, hi = (1, scale) if np.isscalar(scale) else scale
    return decode_ordinal(forward(net, x), lo, hi)


_HEADER = struct.Struct("<4sIIIQBB")


def save_model(net: Network, standardizer: Standardizer | None = None) -> bytes:
    """Flat little-endian binary: header, standardizer, then all parameters."""
    if standardizer is None:
        standardizer = Standardizer.identity(net.input_dim)
    head = _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, net.input_dim, net.hidden, net.seed & (2**64 - 1),
                        _ACTIVATIONS.index(net.activation), _DTYPES.index(net.dtype))
    body = [np.asarray(a, dtype="<f8").ravel().tobytes() for a in
            (standardizer.mean, standardizer.std, net.W1, net.b1, net.w2, [net.b2])]
    return head + b"".join(body)


def load_model(data: bytes) -> tuple[Network, Standardizer]:
    if len(data) < _HEADER.size:
        raise FormatError("model file shorter than its header")
    magic, version, d, h, seed, act, dt = _HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported model version {version}")
    sizes = [d, d, h * d, h, h, 1]
    expected = _HEADER.size + 8 * sum(sizes)
    if len(data) != expected:
        raise FormatError(f"model payload is {len(data)} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    mean, std, W1, b1, w2, b2 = parts
    dtype = _DTYPES[dt]
    t = np.dtype(dtype)
    net = Network(W1.reshape(h, d).astype(t), b1.astype(t), w2.astype(t), float(b2[0]), int(seed),
                  _ACTIVATIONS[act], dtype)
    return net, Standardizer(mean, std)
