"""Phoneme-importance aggregation and rank-correlation statistics.

Utterance PIDs average frame saliency over each phoneme's pure frame set;
global PIDs average utterance PIDs per phoneme.  All consistency numbers
(method-level r1/r2/r3, the cross-model matrix, within/between-speaker
r_w/r_b) are Spearman correlations with average ranks for ties and
pairwise deletion of missing phonemes.  Undefined correlations (fewer
than two shared entries, or zero rank variance) are NaN and excluded
from means, with exclusion counts reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .alignment import FrameAssignment
from .errors import DimensionError
from .explain import SaliencyVector


@dataclass(frozen=True)
class PID:
    """Per-phoneme importance; phonemes without data are absent, never zero."""

    values: dict  # symbol -> float
    counts: dict  # symbol -> frames (utterance scope) or utterances (global)
    scope: str  # "utterance" | "global"
    model: str = ""
    method: str = ""

    def vector(self, symbols) -> np.ndarray:
        """Align to a symbol order; missing phonemes become NaN."""
        return np.array([self.values.get(s, np.nan) for s in symbols])

    @property
    def present(self) -> list[str]:
        return sorted(self.values)


def utterance_pid(sv: SaliencyVector, fa: FrameAssignment, model: str = "",
                  method: str = "") -> PID:
    """Mean saliency over each phoneme's pure frames."""
    if len(sv) != fa.n_frames:
        raise DimensionError(
            f"saliency has {len(sv)} frames, frame assignment expects {fa.n_frames}"
        )
    values, counts = {}, {}
    for symbol, frames in fa.frames.items():
        values[symbol] = float(sv.xi[frames].mean())
        counts[symbol] = len(frames)
    return PID(values, counts, "utterance", model, method or sv.method)


def global_pid(pids) -> PID:
    """Average utterance PIDs per phoneme over the utterances that have it."""
    pids = list(pids)
    if not pids:
        raise ValueError("need at least one utterance PID")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for pid in pids:
        for symbol, v in pid.values.items():
            sums[symbol] = sums.get(symbol, 0.0) + v
            counts[symbol] = counts.get(symbol, 0) + 1
    values = {s: sums[s] / counts[s] for s in sums}
    first = pids[0]
    return PID(values, counts, "global", first.model, first.method)


# ---------------------------------------------------------------------------
# Spearman correlation

def spearman(a, b) -> float:
    """Spearman correlation with average ranks for ties.

    Positions that are NaN in either input are dropped pairwise.  Returns
    NaN (not 0) when fewer than two shared positions remain or either
    side has zero rank variance.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    keep = ~(np.isnan(a) | np.isnan(b))
    a, b = a[keep], b[keep]
    if a.size < 2:
        return math.nan
    ra, rb = rankdata(a), rankdata(b)
    sa, sb = ra.std(), rb.std()
    if sa == 0.0 or sb == 0.0:
        return math.nan
    return float(((ra - ra.mean()) * (rb - rb.mean())).mean() / (sa * sb))


def _mean_defined(values):
    """(mean of non-NaN values or NaN, number excluded)."""
    vals = [v for v in values if not math.isnan(v)]
    excluded = len(values) - len(vals)
    if not vals:
        return math.nan, excluded
    return sum(vals) / len(vals), excluded


# ---------------------------------------------------------------------------
# Method consistency (r1, r2, r3)

@dataclass(frozen=True)
class MethodConsistency:
    r1: float  # mean Spearman of per-utterance saliency vectors
    r2: float  # mean Spearman of per-utterance PIDs
    r3: float  # Spearman of global PIDs
    excluded_r1: int
    excluded_r2: int
    n_utterances: int


def method_consistency(saliency_a: dict, saliency_b: dict, pids_a: dict,
                       pids_b: dict, symbols) -> MethodConsistency:
    """Compare two explanation methods over a common set of utterances.

    All four dicts are keyed by utterance id; both methods must cover the
    same utterances with the same target speakers.
    """
    uids = sorted(saliency_a)
    if set(uids) != set(saliency_b) or set(uids) != set(pids_a) or set(uids) != set(pids_b):
        raise DimensionError("method comparison needs identical utterance sets")
    per_utt_sal, per_utt_pid = [], []
    for uid in uids:
        sa, sb = saliency_a[uid], saliency_b[uid]
        if sa.target != sb.target:
            raise DimensionError(f"{uid}: target speakers differ ({sa.target} vs {sb.target})")
        per_utt_sal.append(spearman(sa.xi, sb.xi))
        per_utt_pid.append(spearman(pids_a[uid].vector(symbols), pids_b[uid].vector(symbols)))
    r1, ex1 = _mean_defined(per_utt_sal)
    r2, ex2 = _mean_defined(per_utt_pid)
    ga = global_pid([pids_a[u] for u in uids])
    gb = global_pid([pids_b[u] for u in uids])
    r3 = spearman(ga.vector(symbols), gb.vector(symbols))
    return MethodConsistency(r1, r2, r3, ex1, ex2, len(uids))


# ---------------------------------------------------------------------------
# Cross-model consistency

def model_consistency(global_pids: dict, symbols):
    """Pairwise Spearman of global PIDs; returns (labels, matrix)."""
    labels = sorted(global_pids)
    if len(labels) < 2:
        raise DimensionError("need at least two global PIDs to compare")
    n = len(labels)
    mat = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            r = spearman(global_pids[labels[i]].vector(symbols),
                         global_pids[labels[j]].vector(symbols))
            mat[i, j] = mat[j, i] = r
    return labels, mat


# ---------------------------------------------------------------------------
# Phoneme ranking

@dataclass(frozen=True)
class Ranking:
    top: list
    bottom: list
    degenerate: bool  # all values tied
    tied_at_cut: bool  # ties broken by inventory order at either boundary


def rank_phonemes(pid: PID, k: int, inventory_order) -> Ranking:
    """Top-k and bottom-k phonemes by importance.

    Ties break by the inventory order (deterministic) and are flagged.
    """
    present = [s for s in inventory_order if s in pid.values]
    if k > len(present):
        raise DimensionError(f"k={k} exceeds {len(present)} present phonemes")
    order_idx = {s: i for i, s in enumerate(inventory_order)}
    by_top = sorted(present, key=lambda s: (-pid.values[s], order_idx[s]))
    by_bottom = sorted(present, key=lambda s: (pid.values[s], order_idx[s]))
    vals = [pid.values[s] for s in present]
    degenerate = len(set(vals)) == 1

    def tied(order, kk):
        return kk < len(order) and pid.values[order[kk - 1]] == pid.values[order[kk]]

    return Ranking(by_top[:k], by_bottom[:k], degenerate,
                   tied(by_top, k) or tied(by_bottom, k))


def rank_unions(pids: dict, k: int, inventory_order):
    """Per-PID rankings plus top/bottom unions across PIDs (sorted)."""
    rankings = {name: rank_phonemes(pid, k, inventory_order) for name, pid in sorted(pids.items())}
    order_idx = {s: i for i, s in enumerate(inventory_order)}
    top_union = sorted({s for r in rankings.values() for s in r.top}, key=order_idx.get)
    bottom_union = sorted({s for r in rankings.values() for s in r.bottom}, key=order_idx.get)
    return rankings, top_union, bottom_union


# ---------------------------------------------------------------------------
# Within/between-speaker correlations

@dataclass(frozen=True)
class SpeakerCorrelations:
    r_w: float
    r_b: float
    excluded_within: int
    excluded_between: int
    n_between_pairs: int
    sampled: bool


def speaker_correlations(pids: dict, speaker_of: dict, symbols, rb_mode: str = "auto",
                         rb_sample: int = 100_000, seed: int = 0) -> SpeakerCorrelations:
    """r_w and r_b over utterance PIDs.

    r_w: per speaker, the mean pairwise Spearman among that speaker's
    utterance PIDs, then averaged over speakers.  r_b: mean Spearman over
    cross-speaker utterance pairs -- all of them, or a seeded sample of
    rb_sample pairs (rb_mode "auto" samples only when there are more
    pairs than rb_sample; "all" and "sample" force the choice).
    """
    if rb_mode not in ("auto", "all", "sample"):
        raise ValueError(f"bad rb_mode {rb_mode!r}")
    uids = sorted(pids)
    vecs = {u: pids[u].vector(symbols) for u in uids}
    by_speaker: dict[str, list] = {}
    for u in uids:
        by_speaker.setdefault(speaker_of[u], []).append(u)

    per_speaker, excluded_w = [], 0
    for speaker in sorted(by_speaker):
        group = by_speaker[speaker]
        if len(group) < 2:
            continue
        corrs = [spearman(vecs[a], vecs[b])
                 for i, a in enumerate(group) for b in group[i + 1 :]]
        mean, ex = _mean_defined(corrs)
        excluded_w += ex
        if not math.isnan(mean):
            per_speaker.append(mean)
    r_w = sum(per_speaker) / len(per_speaker) if per_speaker else math.nan

    cross = [(a, b) for i, a in enumerate(uids) for b in uids[i + 1 :]
             if speaker_of[a] != speaker_of[b]]
    n_pairs = len(cross)
    sample = rb_mode == "sample" or (rb_mode == "auto" and n_pairs > rb_sample)
    if sample and n_pairs > rb_sample:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7262]))
        idx = rng.choice(n_pairs, size=rb_sample, replace=False)
        cross = [cross[i] for i in sorted(idx)]
    r_b, excluded_b = _mean_defined([spearman(vecs[a], vecs[b]) for a, b in cross])
    return SpeakerCorrelations(r_w, r_b, excluded_w, excluded_b, len(cross), sample)
