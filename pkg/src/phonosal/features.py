"""WAV loading, resampling, and log-Mel spectrogram extraction.

The feature pipeline is deterministic: identical waveform and config give
a bit-identical spectrogram.  Default parameters: 16 kHz, 25 ms Hamming
frames every 10 ms, FFT 512, 64 triangular mel filters from 20 Hz to
Nyquist, log floor 1e-10, then per-utterance mean/variance normalization
over time in each mel bin.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import FormatError, TooShortError, UnsupportedCodecError


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray  # float64 in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.size == 0:
            raise ValueError("empty waveform")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class MelSpectrogram:
    values: np.ndarray  # (T frames, F mel bins)
    frame_hop_s: float
    frame_len_s: float

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_mels(self) -> int:
        return self.values.shape[1]

    def frame_center_s(self, t) -> float:
        """Center time of frame t (also accepts arrays)."""
        return t * self.frame_hop_s + self.frame_len_s / 2.0


@dataclass(frozen=True)
class FeatureConfig:
    sample_rate: int = 16_000
    frame_len_ms: float = 25.0
    hop_ms: float = 10.0
    n_fft: int = 512
    n_mels: int = 64
    fmin: float = 20.0
    fmax: float | None = None  # None -> Nyquist
    log_floor: float = 1e-10
    cmvn: bool = True

    @property
    def frame_len(self) -> int:
        return int(round(self.sample_rate * self.frame_len_ms / 1000.0))

    @property
    def hop(self) -> int:
        return int(round(self.sample_rate * self.hop_ms / 1000.0))

    @property
    def frame_len_s(self) -> float:
        return self.frame_len / self.sample_rate

    @property
    def hop_s(self) -> float:
        return self.hop / self.sample_rate

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json_file(cls, path) -> "FeatureConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls(**json.load(f))


# ---------------------------------------------------------------------------
# WAV I/O (RIFF, PCM16)

def load_wav(path) -> Waveform:
    """Read a RIFF/WAVE PCM16 file; channel 0 of multi-channel files.

    Raises FormatError on a malformed container and UnsupportedCodecError
    on non-PCM16 encodings.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        pos += 8
        if cid == b"fmt ":
            if size < 16 or pos + 16 > len(data):
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", data, pos)
        elif cid == b"data":
            if fmt is None:
                raise FormatError(f"{path}: data chunk before fmt chunk")
            audio_format, n_channels, sample_rate, _, _, bits = fmt
            if audio_format != 1 or bits != 16:
                raise UnsupportedCodecError(
                    f"{path}: only PCM16 supported (format={audio_format}, bits={bits})"
                )
            if n_channels < 1:
                raise FormatError(f"{path}: zero channels")
            if pos + size > len(data):
                raise FormatError(
                    f"{path}: data chunk declares {size} bytes, file has {len(data) - pos}"
                )
            raw = np.frombuffer(data, dtype="<i2", count=size // 2, offset=pos)
            samples = raw[::n_channels].astype(np.float64) / 32768.0
            if samples.size == 0:
                raise FormatError(f"{path}: empty data chunk")
            return Waveform(samples, sample_rate)
        pos += size + (size & 1)  # chunks are word-aligned
    raise FormatError(f"{path}: no data chunk found")


def write_wav(path, w: Waveform) -> None:
    """Write a mono PCM16 RIFF/WAVE file (samples clipped to [-1, 1])."""
    clipped = np.clip(w.samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    data = pcm.tobytes()
    hdr = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE", b"fmt ", 16,
        1, 1, w.sample_rate, w.sample_rate * 2, 2, 16,
        b"data", len(data),
    )
    Path(path).write_bytes(hdr + data)


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Linear-interpolation resampling; duration kept within one sample period."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.sample_rate:
        return w
    n_out = int(round(w.samples.size * target_rate / w.sample_rate))
    n_out = max(n_out, 1)
    src_t = np.arange(w.samples.size) / w.sample_rate
    out_t = np.arange(n_out) / target_rate
    return Waveform(np.interp(out_t, src_t, w.samples), target_rate)


# ---------------------------------------------------------------------------
# Mel filterbank + spectrogram

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int, fmin: float, fmax: float) -> np.ndarray:
    """Triangular mel filters on the rfft bin grid; shape (n_mels, n_fft//2 + 1)."""
    n_bins = n_fft // 2 + 1
    freqs = np.arange(n_bins) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, ctr, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (freqs - lo) / (ctr - lo)
        down = (hi - freqs) / (hi - ctr)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def filter_center_freqs(cfg: FeatureConfig) -> np.ndarray:
    """Center frequency (Hz) of each triangular filter under cfg."""
    fmax = cfg.fmax if cfg.fmax is not None else cfg.sample_rate / 2.0
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(fmax), cfg.n_mels + 2))
    return edges[1:-1]


def frame_count(n_samples: int, cfg: FeatureConfig) -> int:
    """Closed-form frame count; no partial trailing frame."""
    if n_samples < cfg.frame_len:
        raise TooShortError(
            f"signal of {n_samples} samples shorter than one {cfg.frame_len}-sample frame"
        )
    return (n_samples - cfg.frame_len) // cfg.hop + 1


def mel_spectrogram(w: Waveform, cfg: FeatureConfig | None = None, normalize: bool | None = None) -> MelSpectrogram:
    """Log-Mel spectrogram of a waveform.

    `normalize` overrides cfg.cmvn (useful for inspecting raw energies).
    Raises TooShortError if the signal does not cover one frame.
    """
    cfg = cfg or FeatureConfig()
    if w.sample_rate != cfg.sample_rate:
        w = resample(w, cfg.sample_rate)
    T = frame_count(w.samples.size, cfg)
    flen, hop = cfg.frame_len, cfg.hop
    idx = np.arange(flen)[None, :] + hop * np.arange(T)[:, None]
    frames = w.samples[idx] * np.hamming(flen)[None, :]
    spec = np.abs(np.fft.rfft(frames, n=cfg.n_fft, axis=1)) ** 2
    fmax = cfg.fmax if cfg.fmax is not None else cfg.sample_rate / 2.0
    fb = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.fmin, fmax)
    energies = spec @ fb.T
    values = np.log(np.maximum(energies, cfg.log_floor))
    do_norm = cfg.cmvn if normalize is None else normalize
    if do_norm:
        values = cmvn(values)
    return MelSpectrogram(values, cfg.hop_s, cfg.frame_len_s)


def cmvn(values: np.ndarray) -> np.ndarray:
    """Per-bin mean/variance normalization over time; constant bins go to zero."""
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    out = np.zeros_like(values)
    live = std > 0.0
    out[:, live] = (values[:, live] - mean[live]) / std[live]
    return out


# ---------------------------------------------------------------------------
# Binary feature dump: header (T: u32, F: u32, little-endian) + T*F float32

def dump_features(path, mel: MelSpectrogram) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<II", mel.n_frames, mel.n_mels))
        f.write(mel.values.astype("<f4").tobytes(order="C"))


def load_features(path, cfg: FeatureConfig | None = None) -> MelSpectrogram:
    cfg = cfg or FeatureConfig()
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise FormatError(f"{path}: feature dump too short for header")
    T, F = struct.unpack_from("<II", data, 0)
    need = 8 + 4 * T * F
    if len(data) < need:
        raise FormatError(f"{path}: expected {need} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", count=T * F, offset=8).reshape(T, F)
    return MelSpectrogram(values.astype(np.float64), cfg.hop_s, cfg.frame_len_s)
