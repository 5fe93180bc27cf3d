"""Phoneme boundary annotations: TextGrid/CSV parsing and frame selection.

Boundaries come either from Praat TextGrid files (as produced by forced
aligners) or from the boundary CSV format used by the synthetic corpus
generator.  `frames_for_phonemes` maps segments to the frame sets whose
whole receptive field sits inside one segment.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, PreconditionError, ValidationError
from .inventory import Inventory

SILENCE_LABELS = frozenset({"", "sil", "sp", "spn", "<eps>"})


@dataclass(frozen=True)
class PhonemeSegment:
    label: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ValidationError(
                f"segment {self.label!r}: end {self.end_s} not after start {self.start_s}"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class PhonemeAlignment:
    utterance_id: str
    segments: tuple
    duration_s: float

    def __post_init__(self):
        prev_end = 0.0
        for seg in self.segments:
            if seg.start_s < prev_end - 1e-9:
                raise ValidationError(
                    f"{self.utterance_id}: segment {seg.label!r} at {seg.start_s} "
                    f"overlaps previous segment ending {prev_end}"
                )
            prev_end = seg.end_s
        if self.segments and self.duration_s < self.segments[-1].end_s - 1e-9:
            raise ValidationError(
                f"{self.utterance_id}: last segment ends at {self.segments[-1].end_s} "
                f"beyond duration {self.duration_s}"
            )

    def labels(self) -> list[str]:
        return [s.label for s in self.segments]

    def shifted(self, offset_s: float) -> "PhonemeAlignment":
        segs = tuple(PhonemeSegment(s.label, s.start_s + offset_s, s.end_s + offset_s)
                     for s in self.segments)
        return PhonemeAlignment(self.utterance_id, segs, self.duration_s + offset_s)


# ---------------------------------------------------------------------------
# TextGrid parsing (Praat text format, long and short variants)

_QUOTED = re.compile(r'"((?:[^"]|"")*)"')


def _read_text(path) -> str:
    raw = Path(path).read_bytes()
    if raw.startswith(b"\xff\xfe") or raw.startswith(b"\xfe\xff"):
        return raw.decode("utf-16")
    return raw.decode("utf-8-sig")


def _unquote(line: str) -> str:
    m = _QUOTED.search(line)
    if m is None:
        raise FormatError(f"expected quoted string in TextGrid line: {line!r}")
    return m.group(1).replace('""', '"')


def _parse_long(lines):
    """Yield (tier_name, [(xmin, xmax, text), ...]) from long-form lines."""
    tiers = []
    cur_name, cur_intervals, cur_class = None, None, None
    pending = {}
    for line in lines:
        if line.startswith("class ="):
            if cur_name is not None and cur_class == "IntervalTier":
                tiers.append((cur_name, cur_intervals))
            cur_class = _unquote(line)
            cur_name, cur_intervals, pending = None, [], {}
        elif line.startswith("name ="):
            cur_name = _unquote(line)
        elif line.startswith("intervals [") or line.startswith("points ["):
            pending = {}
        elif line.startswith("xmin =") and cur_name is not None:
            pending["xmin"] = float(line.split("=", 1)[1])
        elif line.startswith("xmax =") and cur_name is not None:
            pending["xmax"] = float(line.split("=", 1)[1])
        elif line.startswith("text =") and cur_name is not None:
            if "xmin" in pending and "xmax" in pending:
                cur_intervals.append((pending["xmin"], pending["xmax"], _unquote(line)))
            pending = {}
    if cur_name is not None and cur_class == "IntervalTier":
        tiers.append((cur_name, cur_intervals))
    return tiers


def _parse_short(lines):
    """Short form: positional values after the <exists> marker."""
    try:
        start = next(i for i, l in enumerate(lines) if "<exists>" in l)
    except StopIteration:
        raise FormatError("short TextGrid missing <exists> marker")
    vals = [l for l in lines[start + 1 :] if l]
    tiers = []
    i = 1  # vals[0] is the tier count
    while i < len(vals):
        klass = _unquote(vals[i])
        name = _unquote(vals[i + 1])
        size = int(vals[i + 4])
        i += 5
        if klass == "IntervalTier":
            intervals = []
            for _ in range(size):
                intervals.append((float(vals[i]), float(vals[i + 1]), _unquote(vals[i + 2])))
                i += 3
            tiers.append((name, intervals))
        else:  # point tier: (time, mark) pairs
            i += 2 * size
    return tiers


def parse_textgrid(path, tier: str = "phones", label_map: dict | None = None,
                   utterance_id: str | None = None) -> PhonemeAlignment:
    """Parse a Praat TextGrid's interval tier into a PhonemeAlignment.

    Empty and silence labels are dropped; remaining labels pass through
    label_map when given.  Raises FormatError if the tier is missing and
    ValidationError on overlapping intervals.
    """
    text = _read_text(path)
    lines = [l.strip() for l in text.splitlines()]
    if not lines or "ooTextFile" not in lines[0]:
        raise FormatError(f"{path}: not a Praat text file")
    if len(lines) < 2 or "TextGrid" not in lines[1]:
        raise FormatError(f"{path}: not a TextGrid")
    is_long = any(l.startswith("item [") or l.startswith("class =") for l in lines)
    tiers = _parse_long(lines) if is_long else _parse_short(lines)
    by_name = dict(tiers)
    if tier not in by_name:
        raise FormatError(
            f"{path}: no interval tier named {tier!r} (found {sorted(by_name)})"
        )
    segments = []
    duration = 0.0
    for xmin, xmax, raw_label in by_name[tier]:
        duration = max(duration, xmax)
        label = raw_label.strip()
        if label.lower() in SILENCE_LABELS:
            continue
        if label_map is not None:
            label = label_map.get(label, label)
        segments.append(PhonemeSegment(label, xmin, xmax))
    segments.sort(key=lambda s: s.start_s)
    uid = utterance_id if utterance_id is not None else Path(path).stem
    return PhonemeAlignment(uid, tuple(segments), duration)


def assign_context_variants(alignment: PhonemeAlignment, inventory: Inventory) -> PhonemeAlignment:
    """Relabel base phones to per-occurrence variants (f -> f, f_2, ...).

    Occurrence order over the utterance is the disambiguation rule, which
    matches the fixed 0-9 digit sequence of the concatenated test
    utterances; it is not meaningful for single digits out of context.
    Labels already naming a variant are kept.
    """
    seen: dict[str, int] = {}
    segs = []
    for seg in alignment.segments:
        label = seg.label
        variants = inventory.variants_of(label)
        if variants:
            idx = seen.get(label, 0)
            if idx >= len(variants):
                raise ValidationError(
                    f"{alignment.utterance_id}: {label!r} occurs {idx + 1} times, "
                    f"inventory has {len(variants)} variants"
                )
            seen[label] = idx + 1
            label = variants[idx]
        elif label not in inventory:
            raise ValidationError(f"{alignment.utterance_id}: label {label!r} not in inventory")
        segs.append(PhonemeSegment(label, seg.start_s, seg.end_s))
    return PhonemeAlignment(alignment.utterance_id, tuple(segs), alignment.duration_s)


# ---------------------------------------------------------------------------
# Boundary CSV: columns utterance_id,label,start_s,end_s

def load_boundary_table(path) -> dict[str, PhonemeAlignment]:
    """All alignments in a boundary CSV, keyed by utterance id."""
    rows: dict[str, list[PhonemeSegment]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        need = {"utterance_id", "label", "start_s", "end_s"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise FormatError(f"{path}: expected columns {sorted(need)}")
        for rec in reader:
            seg = PhonemeSegment(rec["label"], float(rec["start_s"]), float(rec["end_s"]))
            prev = rows.setdefault(rec["utterance_id"], [])
            if prev and seg.start_s < prev[-1].end_s - 1e-9:
                raise ValidationError(
                    f"{path}: non-monotone rows for {rec['utterance_id']!r} "
                    f"at {seg.start_s}"
                )
            prev.append(seg)
    return {
        uid: PhonemeAlignment(uid, tuple(segs), segs[-1].end_s)
        for uid, segs in rows.items()
    }


def parse_boundary_csv(path, utterance_id: str | None = None) -> PhonemeAlignment:
    """One alignment from a boundary CSV; the id is required when the file
    holds several utterances."""
    table = load_boundary_table(path)
    if utterance_id is not None:
        if utterance_id not in table:
            raise FormatError(f"{path}: no rows for utterance {utterance_id!r}")
        return table[utterance_id]
    if len(table) != 1:
        raise FormatError(
            f"{path}: holds {len(table)} utterances, pass utterance_id to pick one"
        )
    return next(iter(table.values()))


def write_boundary_csv(path, alignments) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["utterance_id", "label", "start_s", "end_s"])
        for a in alignments:
            for seg in a.segments:
                writer.writerow([a.utterance_id, seg.label, f"{seg.start_s:.7f}", f"{seg.end_s:.7f}"])


# ---------------------------------------------------------------------------
# Receptive-field-pure frame selection

@dataclass
class FrameAssignment:
    """Frame sets per phoneme; a frame belongs to a phoneme only if its
    whole receptive field sits inside one of that phoneme's segments."""

    frames: dict  # symbol -> sorted int array
    missing: set  # symbols present in the alignment but with no pure frame
    n_frames: int
    rf: int

    def count(self, symbol: str) -> int:
        return len(self.frames.get(symbol, ()))

    @property
    def present(self) -> list[str]:
        return [s for s, f in self.frames.items() if len(f)]


def frames_for_phonemes(alignment: PhonemeAlignment, n_frames: int, hop_s: float,
                        frame_len_s: float, rf: int) -> FrameAssignment:
    """Select, per phoneme, the frames whose rf-window stays inside the segment.

    Frame t's center sits at t*hop + frame_len/2; membership in a segment
    is by center time in [start, end).  rf must be odd so the window is
    center-aligned.  Phonemes whose segments are too short to host a full
    window come back in `missing` instead of with empty entries.
    """
    if rf % 2 == 0:
        raise PreconditionError(f"receptive field must be odd, got {rf}")
    if rf < 1 or n_frames < 1:
        raise PreconditionError("rf and n_frames must be positive")
    half = (rf - 1) // 2
    centers = np.arange(n_frames) * hop_s + frame_len_s / 2.0
    frames: dict[str, list] = {}
    missing: set[str] = set()
    for seg in alignment.segments:
        inside = (centers >= seg.start_s) & (centers < seg.end_s)
        # centers of runs of rf consecutive in-segment frames
        run = np.convolve(inside.astype(np.int64), np.ones(rf, dtype=np.int64), "valid")
        pure = np.flatnonzero(run == rf) + half
        if pure.size:
            frames.setdefault(seg.label, []).append(pure)
        else:
            missing.add(seg.label)
    missing -= frames.keys()
    merged = {
        label: np.unique(np.concatenate(chunks)) for label, chunks in frames.items()
    }
    return FrameAssignment(merged, missing, n_frames, rf)
