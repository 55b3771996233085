"""Hand-rolled MLP autoencoder: init, forward, Adam training, gradient checks.

No deep-learning framework is used; weights are plain numpy arrays and the
backward pass is written out.  Hidden layers are ReLU except the latent
bottleneck, which is linear like the output layer, so latent codes keep sign
information.  ``train`` never mutates its input model; it returns a freshly
trained copy plus a loss history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, TrainingDiverged

DEFAULT_LAYER_DIMS = (700, 512, 128, 32, 128, 512, 700)
DEFAULT_LATENT_DIM = 32


@dataclass
class MlpModel:
    """Fully-connected autoencoder parameters.

    weights[l] has shape (dims[l+1], dims[l]); biases[l] has shape
    (dims[l+1],).  latent_index is the position of the bottleneck in
    layer_dims; layers up to and including it form the encoder.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    latent_index: int

    def __post_init__(self) -> None:
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2:
            raise ConfigError("need at least an input and an output layer")
        if any(d < 1 for d in self.layer_dims):
            raise ConfigError("layer widths must be positive")
        if not (1 <= self.latent_index < len(self.layer_dims)):
            raise ConfigError("latent_index out of range")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ConfigError("parameter count does not match layer_dims")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[l + 1], self.layer_dims[l]):
                raise ConfigError(f"weight {l} has shape {w.shape}")
            if b.shape != (self.layer_dims[l + 1],):
                raise ConfigError(f"bias {l} has shape {b.shape}")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def latent_dim(self) -> int:
        return self.layer_dims[self.latent_index]

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_dims, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.latent_index)


def init_model(layer_dims, rng: np.random.Generator,
               latent_dim: int | None = None) -> MlpModel:
    """Glorot-uniform weights, zero biases, symmetric-autoencoder validation.

    layer_dims must start and end at the same width and contain latent_dim at
    a unique narrowest position, which becomes the bottleneck.  latent_dim
    defaults to the narrowest width in layer_dims.
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 3:
        raise ConfigError("an autoencoder needs at least one hidden layer")
    if dims[0] != dims[-1]:
        raise ConfigError("input and output widths must match")
    if latent_dim is None:
        latent_dim = min(dims)
    if latent_dim not in dims:
        raise ConfigError(f"layer_dims must contain the latent width {latent_dim}")
    if min(dims) != latent_dim:
        raise ConfigError("the latent width must be the narrowest layer")
    if dims.count(latent_dim) != 1:
        raise ConfigError("the latent width must appear exactly once")
    latent_index = dims.index(latent_dim)

    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(dims, weights, biases, latent_index)


def _layer_is_linear(model: MlpModel, layer: int) -> bool:
    # layer is 1-based (output of weights[layer-1]); bottleneck and final are linear
    return layer == model.latent_index or layer == len(model.layer_dims) - 1


def _forward(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Returns (activations a_0..a_D, pre-activations z_1..z_D)."""
    a = [x]
    zs = []
    for l in range(1, len(model.layer_dims)):
        z = a[-1] @ model.weights[l - 1].T + model.biases[l - 1]
        zs.append(z)
        a.append(z if _layer_is_linear(model, l) else np.maximum(z, 0.0))
    return a, zs


def _as_batch(x: np.ndarray, dim: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise DataError(f"{what} must have width {dim}, got shape {x.shape}")
    return x, single


def encode(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Latent code for one vector or a batch (rows).

    Inputs are cast to the stored weight dtype so feature values do not
    depend on the caller's input precision.
    """
    xb, single = _as_batch(x, model.input_dim, "encoder input")
    a = xb.astype(model.weights[0].dtype, copy=False)
    for l in range(1, model.latent_index + 1):
        z = a @ model.weights[l - 1].T + model.biases[l - 1]
        a = z if _layer_is_linear(model, l) else np.maximum(z, 0.0)
    return a[0] if single else a


def decode(model: MlpModel, z: np.ndarray) -> np.ndarray:
    """Reconstruction from a latent code or a batch of codes."""
    zb, single = _as_batch(z, model.latent_dim, "decoder input")
    a = zb.astype(model.weights[0].dtype, copy=False)
    for l in range(model.latent_index + 1, len(model.layer_dims)):
        zz = a @ model.weights[l - 1].T + model.biases[l - 1]
        a = zz if _layer_is_linear(model, l) else np.maximum(zz, 0.0)
    return a[0] if single else a


def reconstruct(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return decode(model, encode(model, x))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))


def _loss_and_grads(model: MlpModel, x: np.ndarray
                    ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean-squared reconstruction loss and its gradients for one batch."""
    n_layers = len(model.layer_dims) - 1
    a, zs = _forward(model, x)
    batch, dim = x.shape
    diff = a[-1] - x
    loss = float(np.mean(diff ** 2))

    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    delta = (2.0 / (batch * dim)) * diff  # output layer is linear
    for l in range(n_layers, 0, -1):
        grad_w[l - 1] = delta.T @ a[l - 1]
        grad_b[l - 1] = delta.sum(axis=0)
        if l > 1:
            delta = delta @ model.weights[l - 1]
            if not _layer_is_linear(model, l - 1):
                delta = delta * (zs[l - 2] > 0)
    return loss, grad_w, grad_b


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    split_ratio: float = 0.9
    shuffle_seed: int = 0
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not (0.0 < self.split_ratio < 1.0):
            raise ConfigError("split_ratio must be in (0, 1)")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")


def train(model: MlpModel, data: np.ndarray, cfg: TrainConfig = TrainConfig()
          ) -> tuple[MlpModel, dict]:
    """Adam-train a copy of the model; returns (trained copy, history).

    data rows are both input and target.  An internal shuffled split holds
    out 1 - split_ratio of the rows for the per-epoch test loss.  Non-finite
    losses or parameters abort with TrainingDiverged.
    """
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != model.input_dim:
        raise DataError(f"training data must be (n, {model.input_dim})")
    n = data.shape[0]
    n_train = int(n * cfg.split_ratio)
    if n_train < 1 or n - n_train < 1:
        raise DataError("not enough rows to split into train and test parts")

    dtype = np.float32 if cfg.dtype == "float32" else np.float64
    rng = np.random.default_rng(cfg.shuffle_seed)
    perm = rng.permutation(n)
    train_x = np.ascontiguousarray(data[perm[:n_train]], dtype=dtype)
    test_x = np.ascontiguousarray(data[perm[n_train:]], dtype=dtype)

    out = MlpModel(model.layer_dims,
                   [w.astype(dtype) for w in model.weights],
                   [b.astype(dtype) for b in model.biases],
                   model.latent_index)
    m_w = [np.zeros_like(w) for w in out.weights]
    v_w = [np.zeros_like(w) for w in out.weights]
    m_b = [np.zeros_like(b) for b in out.biases]
    v_b = [np.zeros_like(b) for b in out.biases]
    step = 0

    def eval_loss(x: np.ndarray) -> float:
        total = 0.0
        for i in range(0, len(x), 4096):
            chunk = x[i: i + 4096]
            a, _ = _forward(out, chunk)
            total += float(np.sum((a[-1] - chunk) ** 2))
        return total / x.size

    history = {"train_loss": [], "test_loss": [], "initial_test_loss": eval_loss(test_x)}
    for _epoch in range(cfg.epochs):
        order = rng.permutation(n_train)
        total, seen = 0.0, 0
        for i in range(0, n_train, cfg.batch_size):
            batch = train_x[order[i: i + cfg.batch_size]]
            loss, grad_w, grad_b = _loss_and_grads(out, batch)
            total += loss * len(batch)
            seen += len(batch)
            step += 1
            correct1 = 1.0 - cfg.beta1 ** step
            correct2 = 1.0 - cfg.beta2 ** step
            for params, grads, ms, vs in ((out.weights, grad_w, m_w, v_w),
                                          (out.biases, grad_b, m_b, v_b)):
                for p, g, m1, v1 in zip(params, grads, ms, vs):
                    g = g.astype(p.dtype, copy=False)
                    m1 *= cfg.beta1
                    m1 += (1.0 - cfg.beta1) * g
                    v1 *= cfg.beta2
                    v1 += (1.0 - cfg.beta2) * g * g
                    p -= cfg.learning_rate * (m1 / correct1) / (
                        np.sqrt(v1 / correct2) + cfg.adam_eps)
        train_loss = total / max(seen, 1)
        test_loss = eval_loss(test_x)
        history["train_loss"].append(train_loss)
        history["test_loss"].append(test_loss)
        if not (math.isfinite(train_loss) and math.isfinite(test_loss)):
            raise TrainingDiverged(f"non-finite loss in epoch {_epoch + 1}")
        if any(not np.all(np.isfinite(w)) for w in out.weights):
            raise TrainingDiverged(f"non-finite weights in epoch {_epoch + 1}")
    return out, history


def gradient_check(model: MlpModel, x: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in float64 regardless of the model's stored dtype.  Intended for
    small models; the finite-difference sweep touches every parameter twice.
    Evaluate at a generic point: a unit sitting exactly on its ReLU kink
    (possible with all-zero biases) makes the central difference one-sided.
    """
    xb, _ = _as_batch(x, model.input_dim, "gradient-check input")
    xb = xb.astype(np.float64)
    work = MlpModel(model.layer_dims,
                    [w.astype(np.float64) for w in model.weights],
                    [b.astype(np.float64) for b in model.biases],
                    model.latent_index)
    _, grad_w, grad_b = _loss_and_grads(work, xb)

    def loss_only() -> float:
        a, _ = _forward(work, xb)
        return float(np.mean((a[-1] - xb) ** 2))

    worst = 0.0
    for params, grads in ((work.weights, grad_w), (work.biases, grad_b)):
        for p, g in zip(params, grads):
            flat_p = p.reshape(-1)
            flat_g = g.reshape(-1)
            for i in range(flat_p.size):
                orig = flat_p[i]
                flat_p[i] = orig + step
                up = loss_only()
                flat_p[i] = orig - step
                down = loss_only()
                flat_p[i] = orig
                fd = (up - down) / (2.0 * step)
                denom = max(abs(fd), abs(flat_g[i]), 1e-10)
                worst = max(worst, abs(fd - flat_g[i]) / denom)
    return worst


def complexity_from_dims(layer_dims) -> tuple[int, int]:
    """(multiply-add flops per forward pass, stored parameter count)."""
    dims = tuple(int(d) for d in layer_dims)
    c_time = sum((2 * i - 1) * j for i, j in zip(dims[:-1], dims[1:]))
    c_time += sum(dims[1:-1])  # one activation op per hidden unit
    c_space = sum((i + 1) * j for i, j in zip(dims[:-1], dims[1:]))
    return c_time, c_space


def complexity(model: MlpModel) -> tuple[int, int]:
    return complexity_from_dims(model.layer_dims)
