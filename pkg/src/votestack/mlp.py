"""The homogeneous base learner: a feed-forward net trained by mini-batch SGD.

Hidden layers use the rectifier, the output layer a stable softmax, and the
loss is mean cross-entropy with the true-class probability clamped at 1e-12
before the log. Gradients are exact analytic backpropagation of that loss.
Everything runs in double precision so finite-difference checks are
meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, DataError, TrainingDivergenceError
from .numerics import LOG_CLAMP, cross_entropy, softmax
from .seeding import child_rng
from .serialize import read_model_file, write_model_file

MLP_MAGIC = b"VSTKMLP\x00"
MLP_FORMAT_VERSION = 1

DEFAULT_HIDDEN_SIZES = (1200, 800)


@dataclass(frozen=True)
class MlpConfig:
    """Architecture and optimizer settings for one base learner.

    layer_sizes runs input -> hidden... -> output, e.g. (57, 1200, 800, 2).
    """

    layer_sizes: tuple[int, ...]
    epochs: int = 25
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    hidden_activation: str = "relu"
    init: str = "he_uniform"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 3:
            raise ConfigError("need at least one hidden layer")
        if any(s < 1 for s in self.layer_sizes):
            raise ConfigError("all layer sizes must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError("momentum must lie in [0, 1)")
        if self.hidden_activation != "relu":
            raise ConfigError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.init != "he_uniform":
            raise ConfigError(f"unsupported init scheme {self.init!r}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "hidden_activation": self.hidden_activation,
            "init": self.init,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpConfig":
        return cls(**{**d, "layer_sizes": tuple(d["layer_sizes"])})


@dataclass
class MlpModel:
    """Weights/biases of one learner plus its training-loss trace.

    Mutable only inside train(); afterwards treat as immutable and share
    freely across threads.
    """

    config: MlpConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    loss_trace: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float | None:
        return self.loss_trace[-1] if self.loss_trace else None

    def parameter_vector(self) -> np.ndarray:
        """All parameters flattened, for comparisons and diagnostics."""
        return np.concatenate(
            [w.ravel() for w in self.weights] + [b.ravel() for b in self.biases]
        )


def init(config: MlpConfig) -> MlpModel:
    """Fresh model: He-uniform weights (variance 2/fan_in), zero biases."""
    rng = child_rng(config.seed, "init")
    weights, biases = [], []
    for fan_in, fan_out in zip(config.layer_sizes, config.layer_sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(config=config, weights=weights, biases=biases)


def _as_features(data) -> np.ndarray:
    feats = getattr(data, "features", data)
    return np.asarray(feats, dtype=np.float64)


def _check_input_dim(model: MlpModel, X: np.ndarray) -> None:
    if X.shape[-1] != model.config.n_inputs:
        raise ContractError(
            f"model expects {model.config.n_inputs} inputs, got {X.shape[-1]}"
        )


def _forward_cached(model: MlpModel, X: np.ndarray):
    """Forward pass keeping pre-activations for backprop.

    Returns (pre_activations, activations, probs); activations[0] is X.
    """
    pre, acts = [], [X]
    a = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W.T + b
        pre.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
            acts.append(a)
    return pre, acts, softmax(pre[-1])


def forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Per-class probabilities for a single feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise ContractError("forward expects a single 1-D feature vector")
    _check_input_dim(model, x)
    _, _, probs = _forward_cached(model, x[None, :])
    return probs[0]


def predict_proba(model: MlpModel, data) -> np.ndarray:
    """S x C probability matrix; accepts a Dataset or a raw feature matrix."""
    X = _as_features(data)
    if X.ndim != 2:
        raise ContractError("predict_proba expects a 2-D feature matrix")
    _check_input_dim(model, X)
    _, _, probs = _forward_cached(model, X)
    return probs


def predict_label(model: MlpModel, data) -> np.ndarray:
    """Per-row argmax labels; ties break toward the lowest class index."""
    return np.argmax(predict_proba(model, data), axis=1)


def loss(model: MlpModel, features, labels) -> float:
    """Mean clamped cross-entropy over a batch."""
    X = _as_features(features)
    y = np.asarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise ContractError("loss needs a non-empty batch")
    return cross_entropy(predict_proba(model, X), y)


def _loss_and_gradients(model: MlpModel, X: np.ndarray, y: np.ndarray):
    n = X.shape[0]
    pre, acts, probs = _forward_cached(model, X)
    p_true = probs[np.arange(n), y]
    batch_loss = float(-np.log(np.maximum(p_true, LOG_CLAMP)).mean())

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    # Where the clamp is active the loss is locally flat, so no gradient flows.
    delta[p_true <= LOG_CLAMP] = 0.0
    delta /= n

    grad_w = [np.empty_like(w) for w in model.weights]
    grad_b = [np.empty_like(b) for b in model.biases]
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = delta.T @ acts[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i]) * (pre[i - 1] > 0.0)
    return batch_loss, grad_w, grad_b


def gradients(model: MlpModel, features, labels):
    """Analytic gradients of the batch loss w.r.t. every weight and bias."""
    X = _as_features(features)
    y = np.asarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise ContractError("gradients need a non-empty batch")
    _check_input_dim(model, X)
    _, grad_w, grad_b = _loss_and_gradients(model, X, y)
    return grad_w, grad_b


def train(model: MlpModel, features, labels) -> MlpModel:
    """Shuffled mini-batch gradient descent with momentum, in place.

    Runs config.epochs passes, records per-epoch mean loss, and raises
    TrainingDivergenceError naming the epoch and batch if the loss goes
    non-finite. Deterministic for a fixed config seed.
    """
    X = _as_features(features)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ContractError("features and labels must agree on sample count")
    if X.shape[0] == 0:
        raise ContractError("cannot train on an empty dataset")
    _check_input_dim(model, X)
    if y.min() < 0 or y.max() >= model.config.n_classes:
        raise ContractError("label index outside the model's output range")

    cfg = model.config
    rng = child_rng(cfg.seed, "shuffle")
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    n = X.shape[0]

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        running = 0.0
        for batch_no, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            batch_loss, grad_w, grad_b = _loss_and_gradients(model, X[idx], y[idx])
            if not np.isfinite(batch_loss):
                raise TrainingDivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {batch_no}"
                )
            running += batch_loss * len(idx)
            for i in range(len(model.weights)):
                vel_w[i] = cfg.momentum * vel_w[i] - cfg.learning_rate * grad_w[i]
                vel_b[i] = cfg.momentum * vel_b[i] - cfg.learning_rate * grad_b[i]
                model.weights[i] += vel_w[i]
                model.biases[i] += vel_b[i]
        model.loss_trace.append(running / n)
    return model


def save(model: MlpModel, path: str | Path) -> Path:
    header = {
        "config": model.config.to_dict(),
        "loss_trace": model.loss_trace,
    }
    arrays: list[np.ndarray] = []
    for w, b in zip(model.weights, model.biases):
        arrays.append(w)
        arrays.append(b)
    return write_model_file(path, MLP_MAGIC, MLP_FORMAT_VERSION, header, arrays)


def load(path: str | Path) -> MlpModel:
    header, arrays = read_model_file(path, MLP_MAGIC, MLP_FORMAT_VERSION)
    config = MlpConfig.from_dict(header["config"])
    n_layers = len(config.layer_sizes) - 1
    if len(arrays) != 2 * n_layers:
        raise DataError(f"{path}: parameter count does not match the stored config")
    weights = [arrays[2 * i] for i in range(n_layers)]
    biases = [arrays[2 * i + 1] for i in range(n_layers)]
    for i, (fan_in, fan_out) in enumerate(zip(config.layer_sizes, config.layer_sizes[1:])):
        if weights[i].shape != (fan_out, fan_in) or biases[i].shape != (fan_out,):
            raise DataError(f"{path}: parameter shapes do not match the stored config")
    return MlpModel(
        config=config,
        weights=weights,
        biases=biases,
        loss_trace=[float(v) for v in header.get("loss_trace", [])],
    )


def default_layer_sizes(n_features: int, n_classes: int,
                        hidden: tuple[int, ...] = DEFAULT_HIDDEN_SIZES) -> tuple[int, ...]:
    return (n_features, *hidden, n_classes)


def with_seed(config: MlpConfig, seed: int) -> MlpConfig:
    return replace(config, seed=seed)
