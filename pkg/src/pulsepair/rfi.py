"""Segment-count RFI discovery with look-forward excision.

Every detection in a four-hour file window is counted into its 256-bin
spectral segment.  Flags come from the completed window map, so a segment that
turns noisy late in the window also removes records logged before the
interference started.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .config import SEGMENT_BINS
from .records import PulsePairRecord, file_index


@dataclass(frozen=True)
class SegmentMap:
    file_window: int
    counts: dict[int, int] = field(default_factory=dict)

    def flagged(self, count_criterion: int) -> np.ndarray:
        return np.array(sorted(s for s, c in self.counts.items() if c >= count_criterion), dtype=np.int64)


@dataclass
class ExcisionReport:
    file_window: int
    flagged: dict[int, int]  # segment -> detection count
    removed: dict[int, int]  # flagged segment -> records removed
    n_in: int
    n_kept: int

    def to_text(self) -> str:
        lines = [f"# file_window {self.file_window}",
                 f"# records_in {self.n_in} records_kept {self.n_kept}",
                 "segment count removed"]
        for s in sorted(self.flagged):
            lines.append(f"{s} {self.flagged[s]} {self.removed.get(s, 0)}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


def accumulate_segments(detections, file_window: int | None = None) -> SegmentMap:
    """Count detections per segment; all must share one file window."""
    counts: dict[int, int] = {}
    for d in detections:
        w = file_index(d.mjd)
        if file_window is None:
            file_window = w
        elif w != file_window:
            raise ValueError("detections span more than one file window")
        s = d.bin_index // SEGMENT_BINS
        counts[s] = counts.get(s, 0) + 1
    return SegmentMap(file_window if file_window is not None else 0, counts)


def merge_counts(maps: dict[int, SegmentMap], window: int, extra: dict[int, int]) -> None:
    base = dict(maps[window].counts) if window in maps else {}
    for s, c in extra.items():
        base[s] = base.get(s, 0) + c
    maps[window] = SegmentMap(window, base)


def _nearest_flag(seg: np.ndarray, flagged: np.ndarray):
    """Distance to, and identity of, the nearest flagged segment."""
    pos = np.clip(np.searchsorted(flagged, seg), 1, len(flagged) - 1) if len(flagged) > 1 else np.zeros_like(seg)
    left = flagged[pos - 1] if len(flagged) > 1 else flagged[pos]
    right = flagged[pos]
    dl, dr = np.abs(seg - left), np.abs(seg - right)
    return np.minimum(dl, dr), np.where(dl <= dr, left, right)


def excise(records, segmap: SegmentMap, count_criterion: int, margin_segments: int):
    """Drop records with either pulse within ``margin_segments`` (inclusive) of a
    flagged segment.  Returns (kept records, ExcisionReport)."""
    records = list(records)
    flagged = segmap.flagged(count_criterion)
    report = ExcisionReport(segmap.file_window,
                            {int(s): segmap.counts[int(s)] for s in flagged}, {}, len(records), len(records))
    if flagged.size == 0 or not records:
        return records, report
    s1 = np.array([r.first.bin_index // SEGMENT_BINS for r in records], dtype=np.int64)
    s2 = np.array([r.second.bin_index // SEGMENT_BINS for r in records], dtype=np.int64)
    d1, n1 = _nearest_flag(s1, flagged)
    d2, n2 = _nearest_flag(s2, flagged)
    hit = (d1 <= margin_segments) | (d2 <= margin_segments)
    blame = np.where(d1 <= d2, n1, n2)
    for s in blame[hit]:
        report.removed[int(s)] = report.removed.get(int(s), 0) + 1
    kept = [r for r, h in zip(records, hit) if not h]
    report.n_kept = len(kept)
    return kept, report


def excise_windows(records, maps: dict[int, SegmentMap], count_criterion: int, margin_segments: int):
    """Apply :func:`excise` window by window; records keep their input order."""
    records = list(records)
    by_window: dict[int, list[PulsePairRecord]] = {}
    for r in records:
        by_window.setdefault(r.file_index, []).append(r)
    keep_ids: set[int] = set()
    reports = []
    for w in sorted(set(by_window) | set(maps)):
        subset = by_window.get(w, [])
        kept, rep = excise(subset, maps.get(w, SegmentMap(w)), count_criterion, margin_segments)
        keep_ids.update(id(r) for r in kept)
        reports.append(rep)
    return [r for r in records if id(r) in keep_ids], reports


def false_flag_probability(mean_count: float, count_criterion: int) -> float:
    """Poisson probability that a pure-noise segment reaches the criterion."""
    return float(stats.poisson.sf(count_criterion - 1, mean_count))


def write_segment_counts(path, counts: dict[int, dict[int, int]]) -> None:
    """``window segment count`` lines, sorted."""
    with open(path, "w") as fh:
        fh.write("window segment count\n")
        for w in sorted(counts):
            for seg in sorted(counts[w]):
                fh.write(f"{w} {seg} {counts[w][seg]}\n")


def read_segment_counts(path) -> dict[int, dict[int, int]]:
    counts: dict[int, dict[int, int]] = {}
    with open(path) as fh:
        next(fh, None)
        for line in fh:
            if line.strip():
                w, seg, c = (int(x) for x in line.split())
                counts.setdefault(w, {})[seg] = c
    return counts
