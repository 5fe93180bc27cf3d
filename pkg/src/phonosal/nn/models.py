"""Model specs (the four fixed architectures), forward traces, and backprop.

Architecture table, all conv strides 1:
    TDNN-1  conv 5@512,  ReLU, conv 3@512,  ReLU            (1-D over time)
    TDNN-2  conv 5@512,  ReLU, conv 3@1024, ReLU
    CNN-3   conv 3x3@32, ReLU, 2x2 pool, conv 3x3@64, ReLU, 2x2 pool
    CNN-4   conv 3x3@64, ReLU, 2x2 pool, conv 3x3@64, ReLU, 2x2 pool
then temporal statistics pooling, dense to the 128-d embedding, ReLU, and
a dense classifier over speakers.  The post-ReLU output of the last conv
layer is the designated explanation layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, PreconditionError
from .layers import Conv1D, Conv2D, Dense, MaxPool2D, MergeFreqIntoChannels, ReLU, StatsPool

TDNN_ARCHES = {"TDNN-1": ((5, 512), (3, 512)), "TDNN-2": ((5, 512), (3, 1024))}
CNN_ARCHES = {"CNN-3": (32, 64), "CNN-4": (64, 64)}
ARCH_NAMES = tuple(TDNN_ARCHES) + tuple(CNN_ARCHES)


def canonical_arch(name: str) -> str:
    key = name.upper().replace("_", "-")
    if key not in ARCH_NAMES:
        raise ValueError(f"unknown architecture {name!r}; expected one of {ARCH_NAMES}")
    return key


@dataclass(frozen=True)
class ModelSpec:
    arch: str
    n_speakers: int
    n_mels: int = 64
    embed_dim: int = 128

    def __post_init__(self):
        object.__setattr__(self, "arch", canonical_arch(self.arch))
        if self.n_speakers < 1:
            raise ValueError("n_speakers must be positive")

    @property
    def is_tdnn(self) -> bool:
        return self.arch in TDNN_ARCHES


@dataclass
class ForwardTrace:
    """Per-layer outputs and caches of one forward pass, plus the head outputs."""

    activations: list  # post-layer outputs, one per layer
    caches: list
    logits: np.ndarray  # (B, N)
    posteriors: np.ndarray  # (B, N)
    x: np.ndarray  # network input as fed to layer 0


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Model:
    """A layer stack with a designated explanation layer.

    `input_kind` is "tdnn" (mel bins become conv channels) or "cnn"
    (single-channel image, mel on the height axis).  `explain_index`
    points at the activation of the last conv layer's ReLU.
    """

    def __init__(self, layers, input_kind, explain_index, spec: ModelSpec | None = None, seed: int | None = None):
        if input_kind not in ("tdnn", "cnn"):
            raise ValueError("input_kind must be 'tdnn' or 'cnn'")
        self.layers = layers
        self.input_kind = input_kind
        self.explain_index = explain_index
        self.spec = spec
        self.seed = seed
        self.forward_items = 0  # counts single forward passes, batched or not

    # -- parameters ----------------------------------------------------
    def named_params(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name in layer.param_names:
                out.append((f"layer{i}.{name}", getattr(layer, name)))
        return out

    def set_named_params(self, mapping):
        for i, layer in enumerate(self.layers):
            for name in layer.param_names:
                setattr(layer, name, np.asarray(mapping[f"layer{i}.{name}"], dtype=np.float64))

    # -- forward -------------------------------------------------------
    def prepare_input(self, mel_values: np.ndarray) -> np.ndarray:
        """(T, F) spectrogram -> network input without the batch axis."""
        v = np.asarray(mel_values, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionError(f"expected (T, F) spectrogram, got shape {v.shape}")
        if self.spec is not None and v.shape[1] != self.spec.n_mels:
            raise DimensionError(f"expected {self.spec.n_mels} mel bins, got {v.shape[1]}")
        if self.input_kind == "tdnn":
            return v.T  # (F, T)
        return v.T[None, :, :]  # (1, F, T)

    def forward_batch(self, xb: np.ndarray) -> ForwardTrace:
        self.forward_items += xb.shape[0]
        activations, caches = [], []
        h = xb
        for layer in self.layers:
            h, cache = layer.forward(h)
            activations.append(h)
            caches.append(cache)
        logits = h
        return ForwardTrace(activations, caches, logits, softmax(logits), xb)

    def forward(self, mel_values: np.ndarray) -> ForwardTrace:
        """Single-utterance forward; arrays in the trace keep the batch axis (B=1)."""
        return self.forward_batch(self.prepare_input(mel_values)[None])

    def logits_batch(self, mels: np.ndarray) -> np.ndarray:
        """(B, T, F) spectrograms -> (B, N) logits; used by occlusion scans."""
        xb = np.stack([self.prepare_input(m) for m in mels])
        return self.forward_batch(xb).logits

    @property
    def n_outputs(self):
        return self.layers[-1].d_out

    # -- backward ------------------------------------------------------
    def backward(self, trace: ForwardTrace, dlogits: np.ndarray, stop_index: int = 0,
                 want_param_grads: bool = True):
        """Backprop dlogits down to (and including) layer `stop_index`.

        Returns (param_grads, d_activation) where d_activation is the
        gradient wrt the output of layer stop_index - 1 (i.e. the input
        of stop_index), and param_grads maps named params to arrays for
        layers >= stop_index.
        """
        grads = {}
        d = dlogits
        for i in range(len(self.layers) - 1, stop_index - 1, -1):
            d, layer_grads = self.layers[i].backward(d, trace.caches[i])
            if want_param_grads:
                for name, g in zip(self.layers[i].param_names, layer_grads):
                    grads[f"layer{i}.{name}"] = g
        return grads, d

    def backward_to_layer(self, trace: ForwardTrace, c: int, score: str = "posterior") -> np.ndarray:
        """Gradient of class c's score at the designated explanation layer.

        score: "posterior" differentiates the softmax output, "logit" the
        raw class logit.
        """
        n = trace.logits.shape[1]
        if not 0 <= c < n:
            raise IndexError(f"target class {c} out of range [0, {n})")
        if score == "posterior":
            p = trace.posteriors
            dlogits = p[:, c : c + 1] * (np.eye(n)[c][None, :] - p)
        elif score == "logit":
            dlogits = np.zeros_like(trace.logits)
            dlogits[:, c] = 1.0
        else:
            raise ValueError("score must be 'posterior' or 'logit'")
        _, d = self.backward(trace, dlogits, stop_index=self.explain_index + 1,
                             want_param_grads=False)
        return d

    def explain_activation(self, trace: ForwardTrace) -> np.ndarray:
        return trace.activations[self.explain_index]


def build_model(spec: ModelSpec, seed: int = 0) -> Model:
    """Instantiate one of the four fixed architectures with seeded init."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6D6F64]))
    layers = []
    if spec.is_tdnn:
        chans = spec.n_mels
        for k, c_out in TDNN_ARCHES[spec.arch]:
            layers += [Conv1D(chans, c_out, k, rng), ReLU()]
            chans = c_out
        explain_index = len(layers) - 1  # last conv's ReLU
        layers.append(StatsPool())
        feat = 2 * chans
    else:
        c1, c2 = CNN_ARCHES[spec.arch]
        layers += [Conv2D(1, c1, 3, rng), ReLU(), MaxPool2D(),
                   Conv2D(c1, c2, 3, rng), ReLU()]
        explain_index = len(layers) - 1
        layers += [MaxPool2D(), MergeFreqIntoChannels(), StatsPool()]
        feat = 2 * c2 * (spec.n_mels // 4)
    layers += [Dense(feat, spec.embed_dim, rng), ReLU(), Dense(spec.embed_dim, spec.n_speakers, rng)]
    return Model(layers, "tdnn" if spec.is_tdnn else "cnn", explain_index, spec=spec, seed=seed)


def receptive_field(model_or_spec, after_final_pool: bool = False) -> int:
    """Time-axis receptive field of one unit of the last conv layer.

    With after_final_pool=True (CNN only), the field of a unit after the
    trailing max pool instead.
    """
    model = model_or_spec
    if isinstance(model_or_spec, ModelSpec):
        model = build_model(model_or_spec)
    target = None
    for i, layer in enumerate(model.layers):
        if isinstance(layer, (Conv1D, Conv2D)):
            target = i
    if target is None:
        raise PreconditionError("model has no conv layer")
    if after_final_pool:
        for i in range(target + 1, len(model.layers)):
            if isinstance(model.layers[i], MaxPool2D):
                target = i
    rf = 1
    for layer in reversed(model.layers[: target + 1]):
        k, s = layer.time_geometry()
        rf = (rf - 1) * s + k
    return rf


def purity_receptive_field(model_or_spec) -> int:
    """Receptive field rounded up to odd, as the frame-purity filter needs."""
    rf = receptive_field(model_or_spec)
    return rf if rf % 2 == 1 else rf + 1
