"""Adam training on cross-entropy, fixed-length crops, and evaluation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DivergenceError
from .models import Model, ModelSpec, build_model


@dataclass(frozen=True)
class TrainConfig:
    arch: str = "TDNN-1"
    lr: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    crop_frames: int = 200

    @classmethod
    def from_dict(cls, d) -> "TrainConfig":
        return cls(**d)

    def to_dict(self):
        return asdict(self)


class Adam:
    def __init__(self, model: Model, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.model = model
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {n: np.zeros_like(p) for n, p in model.named_params()}
        self.v = {n: np.zeros_like(p) for n, p in model.named_params()}

    def step(self, grads: dict):
        self.t += 1
        for i, layer in enumerate(self.model.layers):
            for name in layer.param_names:
                key = f"layer{i}.{name}"
                g = grads[key]
                self.m[key] = self.beta1 * self.m[key] + (1 - self.beta1) * g
                self.v[key] = self.beta2 * self.v[key] + (1 - self.beta2) * g * g
                m_hat = self.m[key] / (1 - self.beta1 ** self.t)
                v_hat = self.v[key] / (1 - self.beta2 ** self.t)
                p = getattr(layer, name)
                setattr(layer, name, p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch; returns (loss, dlogits)."""
    B = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(B), labels].mean()
    p = np.exp(logp)
    dlogits = p.copy()
    dlogits[np.arange(B), labels] -= 1.0
    return loss, dlogits / B


def train_step(model: Model, xb: np.ndarray, labels: np.ndarray, opt: Adam) -> float:
    """One Adam update on the mean cross-entropy of the batch."""
    trace = model.forward_batch(xb)
    loss, dlogits = cross_entropy(trace.logits, np.asarray(labels))
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss} at step {opt.t + 1}")
    grads, _ = model.backward(trace, dlogits)
    opt.step(grads)
    return float(loss)


def crop_or_tile(values: np.ndarray, crop: int, rng) -> np.ndarray:
    """Random fixed-length time crop; shorter inputs are tiled to length."""
    T = values.shape[0]
    if T >= crop:
        start = int(rng.integers(0, T - crop + 1))
        return values[start : start + crop]
    reps = -(-crop // T)
    return np.tile(values, (reps, 1))[:crop]


def train(spec: ModelSpec, dataset, cfg: TrainConfig, log=None) -> Model:
    """Train a fresh model on `dataset` = list of ((T, F) array, label).

    Shuffling, cropping, and init all derive from cfg.seed, so a rerun
    reproduces the parameters bit for bit.
    """
    model = build_model(spec, seed=cfg.seed)
    opt = Adam(model, lr=cfg.lr)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x747261696E]))
    n = len(dataset)
    losses = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            xb = np.stack([model.prepare_input(crop_or_tile(dataset[i][0], cfg.crop_frames, rng))
                           for i in idx])
            labels = np.array([dataset[i][1] for i in idx])
            epoch_loss += train_step(model, xb, labels, opt) * len(idx)
        losses.append(epoch_loss / n)
        if log:
            log(f"epoch {epoch + 1}/{cfg.epochs}  loss {losses[-1]:.4f}")
    model.train_losses = losses
    return model


def top1_accuracy(model: Model, dataset) -> float:
    """Fraction of utterances whose argmax posterior matches the label."""
    if not dataset:
        raise ValueError("empty evaluation set")
    hits = 0
    for values, label in dataset:
        trace = model.forward(values)
        hits += int(np.argmax(trace.posteriors[0]) == label)
    return hits / len(dataset)
