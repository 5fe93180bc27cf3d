"""Per-frame saliency: LayerCAM and time-aligned occlusion.

LayerCAM weights the designated conv layer's activations by the ReLU-ed
gradient of the target score at each location, sums over channels, and
ReLUs again; the CNN variant min-max normalizes the 2-D map, upsamples it
to the spectrogram grid, and sums over frequency.  The occlusion method
(TAO) Gaussian-blurs a sliding 7-frame window and records the drop in the
target logit, one full forward pass per frame; it runs identically on
every architecture.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, MethodMismatchError
from .nn.models import Model

TAO_WINDOW = 7  # frames; matches the TDNN receptive field
TAO_SIGMA = 2.0  # frames


@dataclass(frozen=True)
class SaliencyVector:
    xi: np.ndarray  # (T,)
    method: str  # "layercam" | "tao"
    target: int
    normalization: str  # "minmax" | "none"

    def __post_init__(self):
        if self.xi.ndim != 1:
            raise DimensionError(f"saliency must be 1-D, got shape {self.xi.shape}")
        if not np.all(np.isfinite(self.xi)):
            raise ValueError("non-finite saliency values")

    def __len__(self):
        return self.xi.size


def normalize_saliency(values: np.ndarray) -> np.ndarray:
    """Min-max map to [0, 1]; a constant input maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def bilinear_upsample(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel bilinear resize of a 2-D array to (out_h, out_w)."""
    h, w = values.shape
    sy = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    sx = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (sy - y0)[:, None]
    wx = (sx - x0)[None, :]
    return ((1 - wy) * (1 - wx) * values[np.ix_(y0, x0)]
            + (1 - wy) * wx * values[np.ix_(y0, x1)]
            + wy * (1 - wx) * values[np.ix_(y1, x0)]
            + wy * wx * values[np.ix_(y1, x1)])


def _cam_weights(model: Model, mel_values, c: int, score: str):
    trace = model.forward(np.asarray(mel_values, dtype=np.float64))
    A = model.explain_activation(trace)[0]
    dA = model.backward_to_layer(trace, c, score=score)[0]
    return A, np.maximum(dA, 0.0)


def layercam_tdnn(model: Model, mel_values, c: int, score: str = "posterior") -> SaliencyVector:
    """TDNN LayerCAM: one value per frame, no upsampling involved."""
    if model.input_kind != "tdnn":
        raise MethodMismatchError(f"layercam_tdnn needs a TDNN, got {model.input_kind}")
    A, w = _cam_weights(model, mel_values, c, score)  # both (K, T)
    xi = np.maximum((w * A).sum(axis=0), 0.0)
    return SaliencyVector(normalize_saliency(xi), "layercam", c, "minmax")


def layercam_cnn(model: Model, mel_values, c: int, score: str = "posterior") -> SaliencyVector:
    """CNN LayerCAM: normalized 2-D map, upsampled and summed over frequency."""
    if model.input_kind != "cnn":
        raise MethodMismatchError(f"layercam_cnn needs a CNN, got {model.input_kind}")
    T, F = np.asarray(mel_values).shape
    A, w = _cam_weights(model, mel_values, c, score)  # both (K, H', W')
    smap = np.maximum((w * A).sum(axis=0), 0.0)
    smap = normalize_saliency(smap)
    xi = bilinear_upsample(smap, F, T).sum(axis=0)
    return SaliencyVector(xi, "layercam", c, "minmax")


def layercam(model: Model, mel_values, c: int, score: str = "posterior") -> SaliencyVector:
    fn = layercam_tdnn if model.input_kind == "tdnn" else layercam_cnn
    return fn(model, mel_values, c, score=score)


def saliency_map_cnn(model: Model, mel_values, c: int, score: str = "posterior") -> np.ndarray:
    """The normalized 2-D CNN saliency map on the conv layer's grid."""
    if model.input_kind != "cnn":
        raise MethodMismatchError(f"saliency_map_cnn needs a CNN, got {model.input_kind}")
    A, w = _cam_weights(model, mel_values, c, score)
    return normalize_saliency(np.maximum((w * A).sum(axis=0), 0.0))


# ---------------------------------------------------------------------------
# Time-aligned occlusion

def blur_window_matrix(length: int, sigma: float = TAO_SIGMA, radius: int = (TAO_WINDOW - 1) // 2) -> np.ndarray:
    """Row-stochastic matrix applying a truncated 1-D Gaussian inside a window.

    Taps are limited to the window and to +-radius, then renormalized, so
    a time-constant signal passes through unchanged.
    """
    d = np.arange(length)[:, None] - np.arange(length)[None, :]
    g = np.where(np.abs(d) <= radius, np.exp(-(d.astype(np.float64) ** 2) / (2 * sigma * sigma)), 0.0)
    return g / g.sum(axis=1, keepdims=True)


def occlude_frames(mel_values: np.ndarray, center: int, window: int = TAO_WINDOW,
                   sigma: float = TAO_SIGMA) -> np.ndarray:
    """Copy of the spectrogram with the window around `center` blurred in time."""
    T = mel_values.shape[0]
    half = (window - 1) // 2
    lo, hi = max(0, center - half), min(T, center + half + 1)
    out = np.array(mel_values, dtype=np.float64)
    out[lo:hi] = blur_window_matrix(hi - lo, sigma) @ mel_values[lo:hi]
    return out


def tao(model, mel_values, c: int, window: int = TAO_WINDOW, sigma: float = TAO_SIGMA,
        score: str = "logit", batch_size: int = 32) -> SaliencyVector:
    """Occlusion saliency: xi_t = score_c(x) - score_c(x with frame window
    t blurred).  Runs 1 + T forward passes; architecture-agnostic (only
    needs `model.logits_batch`)."""
    mel_values = np.asarray(mel_values, dtype=np.float64)
    T = mel_values.shape[0]
    use_posterior = score == "posterior"
    if score not in ("logit", "posterior"):
        raise ValueError("score must be 'logit' or 'posterior'")

    def score_of(logits):
        if use_posterior:
            z = logits - logits.max(axis=1, keepdims=True)
            e = np.exp(z)
            return (e / e.sum(axis=1, keepdims=True))[:, c]
        return logits[:, c]

    clean = score_of(model.logits_batch(mel_values[None]))[0]
    xi = np.empty(T)
    for lo in range(0, T, batch_size):
        centers = range(lo, min(lo + batch_size, T))
        occluded = np.stack([occlude_frames(mel_values, t, window, sigma) for t in centers])
        xi[lo : lo + len(occluded)] = clean - score_of(model.logits_batch(occluded))
    return SaliencyVector(xi, "tao", c, "none")


# ---------------------------------------------------------------------------
# Saliency dump: CSV rows utterance_id, method, target_speaker, frame_index, value

def write_saliency_csv(path, utterance_id: str, sv: SaliencyVector) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["utterance_id", "method", "target_speaker", "frame_index", "value"])
        for t, v in enumerate(sv.xi):
            writer.writerow([utterance_id, sv.method, sv.target, t, repr(float(v))])


def read_saliency_csv(path):
    """Returns (utterance_id, SaliencyVector)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise FormatError(f"{path}: empty saliency dump")
    uid = rows[0]["utterance_id"]
    method = rows[0]["method"]
    target = int(rows[0]["target_speaker"])
    xi = np.empty(len(rows))
    for r in rows:
        xi[int(r["frame_index"])] = float(r["value"])
    norm = "minmax" if method == "layercam" else "none"
    return uid, SaliencyVector(xi, method, target, norm)
