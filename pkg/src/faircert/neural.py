"""Minimal fully-connected network machinery.

Exactly what the training pipeline needs and nothing more: softplus
hidden layers, linear or sigmoid outputs, squared-error and
cross-entropy losses with reverse-mode gradients, Adam, a seeded
minibatch loop, and a finite-difference gradient audit.  Everything is
plain NumPy and deterministic given the seed, which is what makes the
end-to-end experiment reproducible byte-for-byte.

Loss conventions:
  - squared_error: mean over the batch of the squared Euclidean norm
    of (prediction - target).  Training uses the squared norm for
    smooth gradients; reported reconstruction statistics elsewhere use
    the unsquared norm.
  - cross_entropy: mean over the batch, in bits.  Requires a sigmoid
    output layer, whose activations are clamped away from {0, 1} by
    1e-12 so saturated units yield finite loss.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

ACTIVATIONS = ("softplus", "sigmoid", "linear")
SIGMOID_CLAMP = 1e-12

Loss = Literal["squared_error", "cross_entropy"]


class TrainingDivergedError(RuntimeError):
    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, order="C")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Mlp:
    """Fully-connected network parameters plus architecture descriptor.

    weights[i] has shape (layer_dims[i], layer_dims[i+1]); activations[i]
    is applied to layer i's pre-activation.
    """

    layer_dims: tuple[int, ...]
    activations: tuple[str, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    seed: int

    def __post_init__(self) -> None:
        if len(self.layer_dims) < 2:
            raise ValueError("need at least an input and an output layer")
        n_layers = len(self.layer_dims) - 1
        if len(self.activations) != n_layers:
            raise ValueError("one activation tag per weight layer required")
        for tag in self.activations:
            if tag not in ACTIVATIONS:
                raise ValueError(f"unknown activation {tag!r}")
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ValueError("weights/biases must match the layer count")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != expected:
                raise ValueError(f"layer {i} weight shape {w.shape} != {expected}")
            if b.shape != (self.layer_dims[i + 1],):
                raise ValueError(f"layer {i} bias shape {b.shape} mismatched")
        object.__setattr__(self, "weights", tuple(_frozen(w) for w in self.weights))
        object.__setattr__(self, "biases", tuple(_frozen(b) for b in self.biases))

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]


def init_mlp(layer_dims, activations, seed: int) -> Mlp:
    """Fan-balanced uniform weight init in +-sqrt(6/(fan_in+fan_out)),
    zero biases; deterministic given the seed."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ValueError("need at least an input and an output layer")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(
        layer_dims=dims,
        activations=tuple(activations),
        weights=tuple(weights),
        biases=tuple(biases),
        seed=int(seed),
    )


def _apply_activation(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "softplus":
        return _softplus(z)
    if tag == "sigmoid":
        return np.clip(_sigmoid(z), SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
    return z


def _activation_derivative(tag: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if tag == "softplus":
        return _sigmoid(z)
    if tag == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def _forward_cached(m: Mlp, batch: np.ndarray):
    acts = [batch]
    pre = []
    h = batch
    for w, b, tag in zip(m.weights, m.biases, m.activations):
        z = h @ w + b
        h = _apply_activation(tag, z)
        pre.append(z)
        acts.append(h)
    return pre, acts


def forward(m: Mlp, batch) -> np.ndarray:
    """Run the network on a (rows, input_dim) batch."""
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    if x.shape[1] != m.input_dim:
        raise ValueError(f"batch has {x.shape[1]} columns, model expects {m.input_dim}")
    _, acts = _forward_cached(m, x)
    return acts[-1]


@dataclass(frozen=True)
class Gradients:
    """Per-layer parameter gradients plus the gradient at the input,
    which is what lets an upstream network receive the chain."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    inputs: np.ndarray

    def scaled_add(self, other: "Gradients", scale: float) -> "Gradients":
        return Gradients(
            weights=tuple(a + scale * b for a, b in zip(self.weights, other.weights)),
            biases=tuple(a + scale * b for a, b in zip(self.biases, other.biases)),
            inputs=self.inputs + scale * other.inputs,
        )


def _backprop(m: Mlp, pre, acts, d_out: np.ndarray) -> Gradients:
    grad_w = [None] * len(m.weights)
    grad_b = [None] * len(m.biases)
    delta = d_out
    for i in reversed(range(len(m.weights))):
        dz = delta * _activation_derivative(m.activations[i], pre[i], acts[i + 1])
        grad_w[i] = acts[i].T @ dz
        grad_b[i] = dz.sum(axis=0)
        delta = dz @ m.weights[i].T
    return Gradients(weights=tuple(grad_w), biases=tuple(grad_b), inputs=delta)


def loss_value(prediction: np.ndarray, targets: np.ndarray, loss: Loss, scale: float = 1.0) -> float:
    if loss == "squared_error":
        return scale * float(np.mean(np.sum((prediction - targets) ** 2, axis=1)))
    if loss == "cross_entropy":
        p = prediction
        t = targets
        return scale * float(
            -np.mean(np.sum(t * np.log2(p) + (1.0 - t) * np.log2(1.0 - p), axis=1))
        )
    raise ValueError(f"unknown loss {loss!r}")


def _loss_gradient(prediction: np.ndarray, targets: np.ndarray, loss: Loss, scale: float) -> np.ndarray:
    n = prediction.shape[0]
    if loss == "squared_error":
        return scale * 2.0 * (prediction - targets) / n
    if loss == "cross_entropy":
        p = prediction
        t = targets
        return scale * (-(t / p) + (1.0 - t) / (1.0 - p)) / (n * np.log(2.0))
    raise ValueError(f"unknown loss {loss!r}")


def _coerce_targets(m: Mlp, targets, loss: Loss) -> np.ndarray:
    t = np.asarray(targets, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    if loss == "cross_entropy":
        if m.activations[-1] != "sigmoid":
            raise ValueError("cross_entropy requires a sigmoid output layer")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise ValueError("cross_entropy targets must be in [0, 1]")
    if t.shape[1] != m.output_dim:
        raise ValueError(f"targets have {t.shape[1]} columns, model outputs {m.output_dim}")
    return t


def loss_and_gradients(
    m: Mlp, batch, targets, loss: Loss, scale: float = 1.0
) -> tuple[float, Gradients]:
    """Mean-over-batch loss times scale, with reverse-mode gradients for
    every parameter and for the batch itself."""
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    if x.shape[1] != m.input_dim:
        raise ValueError(f"batch has {x.shape[1]} columns, model expects {m.input_dim}")
    t = _coerce_targets(m, targets, loss)
    pre, acts = _forward_cached(m, x)
    value = loss_value(acts[-1], t, loss, scale)
    grads = _backprop(m, pre, acts, _loss_gradient(acts[-1], t, loss, scale))
    return value, grads


def backprop_from_output_gradient(m: Mlp, batch, d_out: np.ndarray) -> Gradients:
    """Reverse-mode pass given an externally supplied gradient at the
    output; used to chain a frozen downstream network into this one."""
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    pre, acts = _forward_cached(m, x)
    return _backprop(m, pre, acts, d_out)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    step_count: int
    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def for_model(cls, m: Mlp, learning_rate: float, **kwargs) -> "AdamState":
        zeros = tuple(np.zeros_like(w) for w in m.weights) + tuple(
            np.zeros_like(b) for b in m.biases
        )
        return cls(
            step_count=0,
            first_moment=zeros,
            second_moment=tuple(np.zeros_like(z) for z in zeros),
            learning_rate=float(learning_rate),
            **kwargs,
        )


def adam_step(state: AdamState, m: Mlp, grads: Gradients) -> tuple[Mlp, AdamState]:
    """One bias-corrected Adam update; returns the updated model and
    state without mutating the inputs."""
    params = list(m.weights) + list(m.biases)
    gs = list(grads.weights) + list(grads.biases)
    if len(gs) != len(params):
        raise ValueError("gradient set does not match parameter set")
    for p, g in zip(params, gs):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_m = []
    new_v = []
    new_params = []
    for p, g, m1, v1 in zip(params, gs, state.first_moment, state.second_moment):
        m2 = b1 * m1 + (1.0 - b1) * g
        v2 = b2 * v1 + (1.0 - b2) * g * g
        m_hat = m2 / (1.0 - b1**t)
        v_hat = v2 / (1.0 - b2**t)
        new_params.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_hat))
        new_m.append(m2)
        new_v.append(v2)
    k = len(m.weights)
    model = replace(
        m,
        weights=tuple(new_params[:k]),
        biases=tuple(new_params[k:]),
    )
    new_state = replace(
        state,
        step_count=t,
        first_moment=tuple(new_m),
        second_moment=tuple(new_v),
    )
    return model, new_state


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    """Seeded minibatch schedule.

    The published schedule ("100 iterations") is ambiguous between
    epochs and raw minibatch updates; epochs is the default reading,
    and max_steps (0 = no cap) expresses the other one.
    """

    epochs: int = 100
    batch_size: int = 100
    learning_rate: float = 0.0001
    seed: int = 0
    shuffle: bool = True
    max_steps: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")


@dataclass(frozen=True)
class TrainResult:
    model: Mlp
    loss_trace: tuple[float, ...]
    used_full_batch: bool
    steps: int = 0


def minibatch_indices(n: int, batch_size: int, rng: np.random.Generator, shuffle: bool):
    order = rng.permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train(m: Mlp, data, targets, loss: Loss, config: TrainConfig) -> TrainResult:
    """Seeded minibatch Adam; returns the trained model and the
    per-epoch mean loss trace.  A batch size larger than the sample
    count falls back to full-batch updates, flagged in the result."""
    x = np.atleast_2d(np.asarray(data, dtype=float))
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty training data")
    t = np.asarray(targets, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    if t.shape[0] != n:
        raise ValueError("data and targets must have equal row counts")
    used_full_batch = config.batch_size > n
    batch_size = min(config.batch_size, n)
    rng = np.random.default_rng(config.seed)
    state = AdamState.for_model(m, config.learning_rate)
    trace: list[float] = []
    capped = False
    for _ in range(config.epochs):
        epoch_losses = []
        for idx in minibatch_indices(n, batch_size, rng, config.shuffle):
            if config.max_steps and state.step_count >= config.max_steps:
                capped = True
                break
            value, grads = loss_and_gradients(m, x[idx], t[idx], loss)
            if not np.isfinite(value):
                raise TrainingDivergedError("training diverged: non-finite loss", trace)
            m, state = adam_step(state, m, grads)
            epoch_losses.append(value)
        if epoch_losses:
            trace.append(float(np.mean(epoch_losses)))
        if capped:
            break
    return TrainResult(
        model=m,
        loss_trace=tuple(trace),
        used_full_batch=used_full_batch,
        steps=state.step_count,
    )


def train_sigmoid_classifier(
    features, labels, config: TrainConfig, hidden_units: int = 100
) -> TrainResult:
    """One softplus hidden layer, single sigmoid output, cross-entropy
    loss: the estimator shape used for every conditional-probability
    network in the pipeline."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    net = init_mlp([x.shape[1], hidden_units, 1], ["softplus", "sigmoid"], seed=config.seed)
    return train(net, x, labels, "cross_entropy", config)


def predict_proba(m: Mlp, features) -> np.ndarray:
    """Flattened sigmoid outputs of a single-output classifier."""
    out = forward(m, features)
    if out.shape[1] != 1:
        raise ValueError("predict_proba requires a single-output model")
    return out[:, 0]


# ---------------------------------------------------------------------------
# Finite-difference audit
# ---------------------------------------------------------------------------


def gradient_check(m: Mlp, batch, targets, loss: Loss, h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central
    finite-difference gradients over every parameter."""
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    t = np.asarray(targets, dtype=float)
    _, grads = loss_and_gradients(m, x, t, loss)
    analytic = list(grads.weights) + list(grads.biases)

    def loss_at(params: list[np.ndarray]) -> float:
        k = len(m.weights)
        probe = replace(m, weights=tuple(params[:k]), biases=tuple(params[k:]))
        out = forward(probe, x)
        tt = t[:, None] if t.ndim == 1 else t
        return loss_value(out, tt, loss)

    params = [w.copy() for w in m.weights] + [b.copy() for b in m.biases]
    worst = 0.0
    for pi, p in enumerate(params):
        flat = p.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss_at(params)
            flat[j] = orig - h
            down = loss_at(params)
            flat[j] = orig
            numeric = (up - down) / (2.0 * h)
            a = analytic[pi].reshape(-1)[j]
            worst = max(worst, abs(a - numeric) / max(abs(a) + abs(numeric), 1e-8))
    return worst


def gradient_audit(n_architectures: int = 20, seed: int = 0) -> float:
    """Finite-difference audit over random small architectures, batches
    and both losses; returns the worst relative error observed."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(n_architectures):
        depth = int(rng.integers(1, 4))
        dims = [int(rng.integers(2, 6))]
        for _ in range(depth):
            dims.append(int(rng.integers(2, 7)))
        use_ce = case % 2 == 0
        if use_ce:
            dims[-1] = 1
        acts = ["softplus"] * (len(dims) - 2)
        acts.append("sigmoid" if use_ce else rng.choice(["linear", "sigmoid", "softplus"]))
        net = init_mlp(dims, acts, seed=int(rng.integers(0, 2**31)))
        batch = rng.normal(size=(int(rng.integers(2, 8)), dims[0]))
        if use_ce:
            targets = rng.integers(0, 2, size=(batch.shape[0], 1)).astype(float)
            worst = max(worst, gradient_check(net, batch, targets, "cross_entropy"))
        else:
            targets = rng.normal(size=(batch.shape[0], dims[-1]))
            worst = max(worst, gradient_check(net, batch, targets, "squared_error"))
    return worst


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

MODEL_FORMAT_VERSION = 1


def mlp_to_arrays(prefix: str, m: Mlp) -> dict[str, np.ndarray]:
    arrays: dict[str, np.ndarray] = {
        f"{prefix}layer_dims": np.asarray(m.layer_dims, dtype=np.int64),
        f"{prefix}activations": np.asarray(m.activations, dtype="U16"),
        f"{prefix}seed": np.asarray(m.seed, dtype=np.int64),
    }
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        arrays[f"{prefix}w{i}"] = np.asarray(w)
        arrays[f"{prefix}b{i}"] = np.asarray(b)
    return arrays


def mlp_from_arrays(prefix: str, data) -> Mlp:
    dims = tuple(int(d) for d in data[f"{prefix}layer_dims"])
    acts = tuple(str(a) for a in data[f"{prefix}activations"])
    weights = tuple(np.asarray(data[f"{prefix}w{i}"]) for i in range(len(dims) - 1))
    biases = tuple(np.asarray(data[f"{prefix}b{i}"]) for i in range(len(dims) - 1))
    return Mlp(
        layer_dims=dims,
        activations=acts,
        weights=weights,
        biases=biases,
        seed=int(data[f"{prefix}seed"]),
    )


def save_mlp(path, m: Mlp) -> None:
    """Versioned binary model file with exact float64 round-trip."""
    arrays = mlp_to_arrays("", m)
    arrays["format_version"] = np.asarray(MODEL_FORMAT_VERSION, dtype=np.int64)
    np.savez(path, **arrays)


def load_mlp(path) -> Mlp:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        return mlp_from_arrays("", data)
