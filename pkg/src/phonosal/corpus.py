"""Corpus handling: scanning, train/test splitting, test-utterance assembly.

Expects the Audio-MNIST directory layout: one subdirectory per speaker,
files named ``<digit>_<speaker>_<take>.wav``.  Test utterances are the
ten digits of one take index concatenated in digit order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConstructionError, SplitError
from .features import Waveform, load_wav, resample


@dataclass(frozen=True)
class Recording:
    speaker_id: str
    digit: int
    take: int
    path: Path

    def __post_init__(self):
        if not 0 <= self.digit <= 9:
            raise ValueError(f"digit {self.digit} out of range")


@dataclass
class Catalog:
    recordings: list
    skipped: list  # paths that did not parse

    @property
    def speakers(self) -> list[str]:
        return sorted({r.speaker_id for r in self.recordings})

    def cell(self, speaker_id: str, digit: int) -> list[Recording]:
        out = [r for r in self.recordings if r.speaker_id == speaker_id and r.digit == digit]
        return sorted(out, key=lambda r: r.take)

    def describe(self) -> dict:
        return {
            "n_recordings": len(self.recordings),
            "n_speakers": len(self.speakers),
            "n_skipped": len(self.skipped),
        }


def scan_corpus(root) -> Catalog:
    """Build a catalog from a corpus directory; unparsable names are
    collected in the skip report, not fatal."""
    root = Path(root)
    recordings, skipped = [], []
    for path in sorted(root.rglob("*.wav")):
        parts = path.stem.split("_")
        try:
            digit, speaker, take = int(parts[0]), parts[1], int(parts[2])
            if len(parts) != 3:
                raise ValueError
            recordings.append(Recording(speaker, digit, take, path))
        except (ValueError, IndexError):
            skipped.append(path)
    return Catalog(recordings, skipped)


def split_catalog(catalog: Catalog, seed: int):
    """Half/half train/test split inside every (speaker, digit) cell.

    Deterministic in `seed`; raises SplitError when a cell has an odd
    take count (an even split is impossible there).
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x73706C69]))
    train, test = [], []
    for speaker in catalog.speakers:
        for digit in range(10):
            cell = catalog.cell(speaker, digit)
            if not cell:
                continue
            if len(cell) % 2:
                raise SplitError(
                    f"speaker {speaker} digit {digit}: {len(cell)} takes cannot split evenly"
                )
            order = rng.permutation(len(cell))
            half = len(cell) // 2
            train += [cell[i] for i in sorted(order[:half])]
            test += [cell[i] for i in sorted(order[half:])]
    return train, test


@dataclass(frozen=True)
class TestUtterance:
    speaker_id: str
    index: int
    parts: tuple  # ten Recordings, digit order 0..9

    @property
    def utterance_id(self) -> str:
        return f"{self.speaker_id}_u{self.index}"


def build_test_utterances(test_recordings) -> list[TestUtterance]:
    """Pair the i-th test take of every digit into utterance i per speaker."""
    by_speaker: dict[str, dict[int, list[Recording]]] = {}
    for r in test_recordings:
        by_speaker.setdefault(r.speaker_id, {}).setdefault(r.digit, []).append(r)
    utterances = []
    for speaker in sorted(by_speaker):
        digits = by_speaker[speaker]
        missing = [d for d in range(10) if d not in digits]
        if missing:
            raise ConstructionError(f"speaker {speaker} has no test takes for digits {missing}")
        counts = {d: len(v) for d, v in digits.items()}
        if len(set(counts.values())) != 1:
            raise ConstructionError(
                f"speaker {speaker} has unequal test takes per digit: {counts}"
            )
        for d in digits:
            digits[d].sort(key=lambda r: r.take)
        for i in range(counts[0]):
            parts = tuple(digits[d][i] for d in range(10))
            utterances.append(TestUtterance(speaker, i, parts))
    return utterances


def assemble_utterance(utt: TestUtterance, sample_rate: int):
    """Load, resample, and concatenate the ten digit recordings.

    Returns (Waveform, offsets) with offsets the start sample of each
    digit segment (length 10, strictly increasing).
    """
    chunks, offsets, pos = [], [], 0
    for rec in utt.parts:
        w = resample(load_wav(rec.path), sample_rate)
        offsets.append(pos)
        chunks.append(w.samples)
        pos += w.samples.size
    return Waveform(np.concatenate(chunks), sample_rate), offsets


def write_manifest(path, catalog: Catalog, train, test, utterances, seed: int) -> None:
    """Corpus manifest: recordings, split assignment, utterance composition."""
    def rec_key(r):
        return f"{r.speaker_id}/{r.digit}_{r.speaker_id}_{r.take}"

    manifest = {
        "seed": seed,
        "counts": catalog.describe(),
        "train": sorted(rec_key(r) for r in train),
        "test": sorted(rec_key(r) for r in test),
        "utterances": {
            u.utterance_id: [rec_key(r) for r in u.parts] for u in utterances
        },
        "skipped": sorted(str(p.name) for p in catalog.skipped),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
