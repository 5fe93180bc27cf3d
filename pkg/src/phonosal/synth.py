"""Deterministic synthetic digit corpus with exact phoneme boundaries.

Each phoneme is a fixed-duration template: voiced sounds are harmonic
stacks shaped by formant envelopes, fricatives are band-limited noise,
stops are closure + burst.  A speaker is a deterministic transform of the
templates (pitch, vocal-tract scale, spectral tilt, and a per-phoneme
formant signature); takes differ by seeded jitter and noise draws.
Because segment durations are fixed, boundary files are exact ground
truth and partition every recording.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .alignment import PhonemeAlignment, PhonemeSegment, write_boundary_csv
from .errors import PreconditionError
from .features import Waveform, write_wav
from .inventory import Inventory, load_inventory

# seconds per phoneme kind; every segment is long enough to host at least
# one receptive-field-pure frame under the 25 ms / 10 ms framing
KIND_DURATION = {
    "vowel": 0.13,
    "approximant": 0.11,
    "nasal": 0.11,
    "fricative": 0.10,
    "stop": 0.10,
    "glottal": 0.09,
}

# formant targets (Hz) per base phone; pairs mean a start->end glide
FORMANTS = {
    "I": (430, 1900, 2500),
    "ow": ((500, 1100, 2400), (420, 850, 2350)),
    "5": (620, 1220, 2550),
    "0": (360, 1700, 2300),
    "i:": (300, 2250, 2950),
    "6": (700, 1320, 2500),
    "aj": ((750, 1300, 2450), (420, 1950, 2600)),
    "E": (560, 1800, 2550),
    "ej": ((480, 1900, 2500), (360, 2200, 2650)),
    "r": (350, 1150, 1650),
    "w": (320, 720, 2250),
    "n": (280, 1100, 2450),
    "n=": (280, 1050, 2400),
}

# noise bands (Hz) per fricative-ish base; third entry flags voicing
NOISE_BANDS = {
    "s": (3500, 7400, False),
    "z": (2800, 7200, True),
    "f": (1200, 7000, False),
    "v": (600, 4200, True),
    "T": (1600, 6500, False),
}

BURSTS = {"t^h": (2000, 7000), "k": (800, 3600)}

VOICED_GAIN = 0.28
NOISE_GAIN = 0.09
FLOOR_GAIN = 0.002  # keeps no column exactly silent


@dataclass(frozen=True)
class SpeakerVoice:
    f0: float
    vtln: float  # formant scale factor
    tilt_db_oct: float
    signature: dict  # base symbol -> per-formant multipliers


def _speaker_voices(n_speakers: int, seed: int, inventory: Inventory) -> list[SpeakerVoice]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x766F78]))
    f0s = 108.0 * (215.0 / 108.0) ** (np.arange(n_speakers) / max(1, n_speakers - 1))
    vtln = rng.permutation(np.linspace(0.86, 1.14, n_speakers))
    tilt = rng.permutation(np.linspace(-4.0, 4.0, n_speakers))
    bases = sorted({p.base for p in inventory.symbols})
    voices = []
    for i in range(n_speakers):
        sig = {b: 1.0 + rng.uniform(-0.06, 0.06, size=3) for b in bases}
        voices.append(SpeakerVoice(float(f0s[i]), float(vtln[i]), float(tilt[i]), sig))
    return voices


def _tilt_gain(freqs, tilt_db_oct):
    ref = np.maximum(freqs, 1.0) / 500.0
    return 10.0 ** (tilt_db_oct * np.log2(ref) / 20.0)


def _formant_env(freqs, formants, weights=(1.0, 0.63, 0.38)):
    env = np.full_like(freqs, 0.02, dtype=np.float64)
    for F, wgt in zip(formants, weights):
        env += wgt * np.exp(-0.5 * ((freqs - F) / (0.13 * F)) ** 2)
    return env / (1.0 + (freqs / 4200.0) ** 2)


def _harmonic(n, sr, f0, formants_start, formants_end, voice, rng, gain=VOICED_GAIN):
    t = np.arange(n) / sr
    u = np.linspace(0.0, 1.0, n)
    sig = np.zeros(n)
    k_max = int(7400 // f0)
    fs = np.array(formants_start, dtype=np.float64)
    fe = np.array(formants_end, dtype=np.float64)
    for k in range(1, k_max + 1):
        f = k * f0
        a0 = _formant_env(np.array([f]), fs)[0] * _tilt_gain(np.array([f]), voice.tilt_db_oct)[0]
        a1 = _formant_env(np.array([f]), fe)[0] * _tilt_gain(np.array([f]), voice.tilt_db_oct)[0]
        amp = (1.0 - u) * a0 + u * a1
        sig += amp * np.sin(2.0 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) / np.sqrt(k)
    peak = np.abs(sig).max()
    return gain * sig / peak if peak > 0 else sig


def _band_noise(n, sr, lo, hi, voice, rng, gain=NOISE_GAIN):
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.arange(spec.size) * sr / n
    edge = 0.08 * (hi - lo)
    mask = np.clip((freqs - lo) / edge, 0, 1) * np.clip((hi - freqs) / edge, 0, 1)
    spec *= mask * _tilt_gain(freqs, 0.35 * voice.tilt_db_oct)
    sig = np.fft.irfft(spec, n)
    peak = np.abs(sig).max()
    return gain * sig / peak if peak > 0 else sig


def _fade(sig, sr, ms=8.0):
    n = min(int(sr * ms / 1000.0), sig.size // 2)
    if n > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(n) / n)
        sig[:n] *= ramp
        sig[-n:] *= ramp[::-1]
    return sig


def _render_phoneme(info, n, sr, voice: SpeakerVoice, rng) -> np.ndarray:
    base = info.base
    f0 = voice.f0 * rng.uniform(0.985, 1.015)
    amp_jit = rng.uniform(0.9, 1.1)
    if base in FORMANTS:
        spec = FORMANTS[base]
        start, end = (spec, spec) if not isinstance(spec[0], tuple) else spec
        scale = voice.vtln * voice.signature[base]
        fs = np.array(start) * scale
        fe = np.array(end) * scale
        sig = _harmonic(n, sr, f0, fs, fe, voice, rng)
        if info.kind in ("nasal",):
            sig *= 0.7  # murmur is weaker than a vowel
    elif base in NOISE_BANDS:
        lo, hi, voiced = NOISE_BANDS[base]
        sig = _band_noise(n, sr, lo, hi, voice, rng)
        if voiced:
            buzz = _harmonic(n, sr, f0, np.array([300.0, 1100.0, 2400.0]) * voice.vtln,
                             np.array([300.0, 1100.0, 2400.0]) * voice.vtln,
                             voice, rng, gain=0.35 * NOISE_GAIN)
            sig += buzz
    elif base in BURSTS:
        lo, hi = BURSTS[base]
        closure = int(0.4 * n)
        burst = _band_noise(n - closure, sr, lo, hi, voice, rng, gain=1.4 * NOISE_GAIN)
        burst *= np.exp(-np.arange(n - closure) / (0.35 * (n - closure) + 1))
        sig = np.concatenate([np.zeros(closure), burst])
    elif base == "P":
        # glottal stop: sparse low pulses
        sig = np.zeros(n)
        period = max(int(sr / (0.5 * f0)), 1)
        for p in range(0, n, period):
            tail = min(40, n - p)
            sig[p : p + tail] += np.exp(-np.arange(tail) / 8.0)
        sig *= 0.5 * NOISE_GAIN / max(np.abs(sig).max(), 1e-9)
    else:
        raise ValueError(f"no template for base phone {base!r}")
    sig = sig * amp_jit + FLOOR_GAIN * rng.standard_normal(n)
    return _fade(sig, sr)


def render_digit(digit: int, speaker_idx: int, take: int, seed: int,
                 voice: SpeakerVoice, inventory: Inventory, sample_rate: int):
    """One digit recording; returns (Waveform, PhonemeAlignment)."""
    segments, chunks, pos = [], [], 0
    for seg_idx, symbol in enumerate(inventory.digit_symbols(digit)):
        info = inventory.info(symbol)
        n = int(round(KIND_DURATION[info.kind] * sample_rate))
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, speaker_idx, digit, take, seg_idx])
        )
        chunks.append(_render_phoneme(info, n, sample_rate, voice, rng))
        segments.append(PhonemeSegment(symbol, pos / sample_rate, (pos + n) / sample_rate))
        pos += n
    wave = Waveform(np.concatenate(chunks), sample_rate)
    return wave, segments


def synth_corpus(root, n_speakers: int = 10, takes: int = 10, seed: int = 0,
                 sample_rate: int = 16_000, inventory: Inventory | None = None) -> dict:
    """Generate the corpus under `root`; returns the manifest dict.

    Writes Audio-MNIST-layout WAVs, a ground-truth ``alignments.csv``
    (boundary CSV keyed by ``speaker/stem``), and ``synth_manifest.json``.
    """
    if n_speakers < 2:
        raise PreconditionError("need at least 2 speakers for an identification task")
    if takes < 1:
        raise PreconditionError("need at least 1 take")
    inventory = inventory or load_inventory()
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    voices = _speaker_voices(n_speakers, seed, inventory)
    alignments, file_hashes = [], {}
    for spk_idx in range(n_speakers):
        speaker_id = f"{spk_idx + 1:02d}"
        spk_dir = root / speaker_id
        spk_dir.mkdir(exist_ok=True)
        for digit in range(10):
            for take in range(takes):
                wave, segments = render_digit(
                    digit, spk_idx, take, seed, voices[spk_idx], inventory, sample_rate
                )
                stem = f"{digit}_{speaker_id}_{take}"
                path = spk_dir / f"{stem}.wav"
                write_wav(path, wave)
                uid = f"{speaker_id}/{stem}"
                alignments.append(
                    PhonemeAlignment(uid, tuple(segments), wave.duration_s)
                )
                file_hashes[uid] = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
    write_boundary_csv(root / "alignments.csv", alignments)
    manifest = {
        "generator": "phonosal.synth",
        "seed": seed,
        "n_speakers": n_speakers,
        "takes": takes,
        "sample_rate": sample_rate,
        "inventory": inventory.name,
        "files": file_hashes,
    }
    with open(root / "synth_manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest
