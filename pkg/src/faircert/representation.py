"""Adversarial reconstruction training of the representation function.

The data producer learns an autoencoder f whose output lives in the
same space as its input, so cleaned data stays interpretable.  A
sigmoid adversary tries to recover the sensitive bit from f(x); the
encoder is trained to reconstruct x while making the adversary's job
hard, with the trade-off set by lam:

    encoder objective   mean ||x - f(x)||^2  -  lam * adversary cross-entropy
    adversary objective adversary cross-entropy

Updates alternate strictly per minibatch: one Adam step for the
adversary (encoder frozen), then one for the encoder (adversary
frozen).  The adversary used during training is NOT the one used for
certification; a fresh estimator is always retrained from scratch on
the cleaned data, because a weak training adversary would make the
representation look fairer than it is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neural import (
    AdamState,
    Mlp,
    TrainConfig,
    TrainResult,
    TrainingDivergedError,
    adam_step,
    backprop_from_output_gradient,
    forward,
    init_mlp,
    loss_and_gradients,
    minibatch_indices,
    mlp_from_arrays,
    mlp_to_arrays,
    train_sigmoid_classifier,
)

REPRESENTATION_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RepresentationModel:
    """Trained encoder f plus its training adversary and provenance.

    The per-column scaler that produced the training features travels
    with the model so cleaned data can be produced from raw inputs.
    """

    encoder: Mlp
    adversary: Mlp
    lam: float
    train_seed: int
    scaler_mean: np.ndarray | None = None
    scaler_scale: np.ndarray | None = None
    schema_hash: str = ""

    def __post_init__(self) -> None:
        if self.encoder.input_dim != self.encoder.output_dim:
            raise ValueError("encoder must map the input space to itself")
        if self.adversary.input_dim != self.encoder.output_dim:
            raise ValueError("adversary input dim must equal encoder output dim")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class RepresentationTraining:
    model: RepresentationModel
    encoder_trace: tuple[float, ...]
    adversary_trace: tuple[float, ...]
    encoder_steps: int = 0
    adversary_steps: int = 0


def train_fair_representation(
    train_features,
    s_labels,
    lam: float,
    config: TrainConfig,
    hidden_units: int = 100,
) -> RepresentationTraining:
    """Alternating adversarial training, deterministic given the seed.

    Per minibatch, in this order:
      1. adversary Adam step minimizing cross-entropy on (f(x), s),
         encoder frozen;
      2. encoder Adam step minimizing reconstruction - lam * adversary
         cross-entropy, adversary frozen.

    At lam = 0 the encoder update carries no adversary contribution at
    all (the sensitive labels are never read on that path), reducing to
    plain autoencoder training; the adversary is still trained so its
    trace remains comparable across lam values.
    """
    if lam < 0.0:
        raise ValueError("lam must be >= 0")
    x = np.atleast_2d(np.asarray(train_features, dtype=float))
    s = np.asarray(s_labels, dtype=float).reshape(-1, 1)
    n, dim = x.shape
    if s.shape[0] != n:
        raise ValueError("features and sensitive labels must have equal row counts")

    encoder = init_mlp([dim, hidden_units, dim], ["softplus", "linear"], seed=config.seed + 1)
    adversary = init_mlp([dim, hidden_units, 1], ["softplus", "sigmoid"], seed=config.seed + 2)
    enc_state = AdamState.for_model(encoder, config.learning_rate)
    adv_state = AdamState.for_model(adversary, config.learning_rate)

    rng = np.random.default_rng(config.seed)
    batch_size = min(config.batch_size, n)
    enc_trace: list[float] = []
    adv_trace: list[float] = []
    capped = False
    for _ in range(config.epochs):
        enc_losses = []
        adv_losses = []
        for idx in minibatch_indices(n, batch_size, rng, config.shuffle):
            if config.max_steps and enc_state.step_count >= config.max_steps:
                capped = True
                break
            xb, sb = x[idx], s[idx]

            cleaned = forward(encoder, xb)
            adv_loss, adv_grads = loss_and_gradients(adversary, cleaned, sb, "cross_entropy")
            if not np.isfinite(adv_loss):
                raise TrainingDivergedError("training diverged: adversary loss", adv_trace)
            adversary, adv_state = adam_step(adv_state, adversary, adv_grads)

            recon_loss, enc_grads = loss_and_gradients(encoder, xb, xb, "squared_error")
            enc_loss = recon_loss
            if lam > 0.0:
                # encoder unchanged since the forward above; the updated
                # adversary is the frozen opponent for this step
                ce_loss, ce_grads = loss_and_gradients(adversary, cleaned, sb, "cross_entropy")
                adversarial = backprop_from_output_gradient(encoder, xb, -lam * ce_grads.inputs)
                enc_grads = enc_grads.scaled_add(adversarial, 1.0)
                enc_loss = recon_loss - lam * ce_loss
            if not np.isfinite(enc_loss):
                raise TrainingDivergedError("training diverged: encoder loss", enc_trace)
            encoder, enc_state = adam_step(enc_state, encoder, enc_grads)

            enc_losses.append(enc_loss)
            adv_losses.append(adv_loss)
        if enc_losses:
            enc_trace.append(float(np.mean(enc_losses)))
            adv_trace.append(float(np.mean(adv_losses)))
        if capped:
            break

    model = RepresentationModel(
        encoder=encoder, adversary=adversary, lam=float(lam), train_seed=config.seed
    )
    return RepresentationTraining(
        model=model,
        encoder_trace=tuple(enc_trace),
        adversary_trace=tuple(adv_trace),
        encoder_steps=enc_state.step_count,
        adversary_steps=adv_state.step_count,
    )


def apply_representation(model: RepresentationModel, features) -> np.ndarray:
    """Deterministic forward pass producing cleaned data with the same
    column layout as the input."""
    return forward(model.encoder, features)


def train_sensitive_estimator(
    cleaned_features, s_labels, config: TrainConfig, hidden_units: int = 100
) -> TrainResult:
    """Fresh estimator of p(S=1 | cleaned x), independent of the
    training adversary.  This is the honest auditor whose outputs feed
    the certificates."""
    cleaned = np.atleast_2d(np.asarray(cleaned_features, dtype=float))
    if cleaned.shape[0] == 0:
        raise ValueError("empty training data")
    return train_sigmoid_classifier(cleaned, s_labels, config, hidden_units=hidden_units)


def save_representation(path, model: RepresentationModel) -> None:
    arrays = {"format_version": np.asarray(REPRESENTATION_FORMAT_VERSION, dtype=np.int64)}
    arrays.update(mlp_to_arrays("enc_", model.encoder))
    arrays.update(mlp_to_arrays("adv_", model.adversary))
    arrays["lam"] = np.asarray(model.lam)
    arrays["train_seed"] = np.asarray(model.train_seed, dtype=np.int64)
    arrays["schema_hash"] = np.asarray(model.schema_hash, dtype="U64")
    if model.scaler_mean is not None:
        arrays["scaler_mean"] = np.asarray(model.scaler_mean)
        arrays["scaler_scale"] = np.asarray(model.scaler_scale)
    np.savez(path, **arrays)


def load_representation(path) -> RepresentationModel:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != REPRESENTATION_FORMAT_VERSION:
            raise ValueError(f"unsupported representation format version {version}")
        return RepresentationModel(
            encoder=mlp_from_arrays("enc_", data),
            adversary=mlp_from_arrays("adv_", data),
            lam=float(data["lam"]),
            train_seed=int(data["train_seed"]),
            scaler_mean=np.asarray(data["scaler_mean"]) if "scaler_mean" in data else None,
            scaler_scale=np.asarray(data["scaler_scale"]) if "scaler_scale" in data else None,
            schema_hash=str(data["schema_hash"]),
        )
