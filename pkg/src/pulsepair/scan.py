"""Exposure-weighted binomial RA-bin statistics and the sorted incremental scan.

For the k-th record of the sorted heap landing in bin b, with c records of
that bin seen so far (itself included) and exposure probability p,

    d_k = (c - k p) / sqrt(k p (1 - p)).

A bin's peak is the largest d_k among its records; its final value uses k = N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .records import PulsePairRecord, wrap
from .skygeom import SIDEREAL_RATE, record_ra

KEYS = ("abs_d_df_d_ew_phi", "abs_d_ew_phi_plus_offset")


@dataclass(frozen=True, eq=False)
class ExposureModel:
    bin_probability: np.ndarray
    observed_duration: float  # days
    dwell: np.ndarray  # sidereal hours per bin, all bins
    analyzed: np.ndarray  # bool mask of bins inside the analysed RA range

    @property
    def n_bins(self) -> int:
        return self.bin_probability.shape[0]

    @property
    def bin_width(self) -> float:
        return 24.0 / self.n_bins


def ra_bin(ra, n_bins: int):
    b = np.floor(np.asarray(ra) * n_bins / 24.0).astype(np.int64) % n_bins
    return int(b) if np.ndim(b) == 0 else b


def analyzed_mask(n_bins: int, ra_range=(0.0, 24.0)) -> np.ndarray:
    lo = math.ceil(ra_range[0] * n_bins / 24.0 - 1e-9)
    hi = math.floor(ra_range[1] * n_bins / 24.0 + 1e-9)
    mask = np.zeros(n_bins, dtype=bool)
    mask[lo:hi] = True
    return mask


def _bin_dwell(start_ra: float, sweep: float, n_bins: int) -> np.ndarray:
    """Sidereal hours spent in each bin while RA sweeps [start, start + sweep)."""
    w = 24.0 / n_bins
    left = np.arange(n_bins) * w

    def g(x):
        cycles, rem = np.divmod(x, 24.0)
        return cycles * w + np.clip(rem - left, 0.0, w)

    return g(start_ra + sweep) - g(start_ra)


def compute_exposure(coverage, ra_bins_per_24h: int, array, ra_range=(0.0, 24.0)) -> ExposureModel:
    """Bin probabilities proportional to the sidereal dwell time of the
    coverage intervals, normalized over the analysed RA range."""
    dwell = np.zeros(ra_bins_per_24h)
    duration = 0.0
    for start, end in coverage:
        if end <= start:
            continue
        duration += end - start
        sweep = (end - start) * 24.0 * SIDEREAL_RATE
        dwell += _bin_dwell(record_ra(start, array), sweep, ra_bins_per_24h)
    mask = analyzed_mask(ra_bins_per_24h, ra_range)
    total = dwell[mask].sum()
    if total <= 0:
        raise ValueError("zero total coverage")
    p = np.where(mask, dwell, 0.0) / total
    return ExposureModel(p, duration, dwell, mask)


def uniform_exposure(n_bins: int, ra_range=(0.0, 24.0)) -> ExposureModel:
    mask = analyzed_mask(n_bins, ra_range)
    p = mask / mask.sum()
    return ExposureModel(p, math.nan, mask.astype(float), mask)


def post_filter(records, post, ra_range=None) -> list[PulsePairRecord]:
    """Keep records passing the Δf, phase-window and likelihood filters (and the
    analysed RA range, when given)."""
    lo, hi = post.delta_f_range
    out = []
    for r in records:
        if not lo <= r.delta_f <= hi:
            continue
        if abs(r.d_df_d_ew_phi) > post.d_df_d_ew_phi_window:
            continue
        if abs(wrap(r.d_ew_phi_first - post.d_ew_phi_offset)) > post.d_ew_phi_window:
            continue
        if r.llsnr_pulse > post.llsnr_pulse_threshold or r.llsnr_pair > post.llsnr_pair_threshold:
            continue
        if ra_range is not None and not ra_range[0] <= r.ra < ra_range[1]:
            continue
        out.append(r)
    return out


def sort_key(records, key: str, offset: float = 0.0) -> np.ndarray:
    if key == "abs_d_df_d_ew_phi":
        return np.abs(np.array([r.d_df_d_ew_phi for r in records], dtype=float))
    if key == "abs_d_ew_phi_plus_offset":
        return np.abs(wrap(np.array([r.d_ew_phi_first for r in records], dtype=float) + offset))
    raise ValueError(f"unknown sort key {key!r}")


def running_d(bins: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Per-point d along an already-sorted sequence of bin indices.  All of
    ``p[bins]`` must be positive."""
    n = bins.shape[0]
    if n == 0:
        return np.empty(0)
    order = np.argsort(bins, kind="stable")
    sb = bins[order]
    starts = np.concatenate(([0], np.flatnonzero(np.diff(sb)) + 1))
    run = np.arange(n) - np.repeat(starts, np.diff(np.concatenate((starts, [n]))))
    count = np.empty(n)
    count[order] = run + 1
    k = np.arange(1, n + 1)
    pb = p[bins]
    return (count - k * pb) / np.sqrt(k * pb * (1 - pb))


def final_d(counts: np.ndarray, p: np.ndarray) -> np.ndarray:
    n = counts.sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        d = (counts - n * p) / np.sqrt(n * p * (1 - p))
    return np.where(p > 0, d, np.nan)


@dataclass(eq=False)
class BinScanResult:
    per_point: list[tuple[int, int, float]]  # (record index, ra bin, d) in heap order
    per_bin_max_d: np.ndarray  # nan where a bin received no record
    per_bin_count: np.ndarray
    per_bin_final_d: np.ndarray
    sort_key_name: str
    offset: float = 0.0
    keys: np.ndarray = field(default_factory=lambda: np.empty(0))  # heap order
    excluded: list[int] = field(default_factory=list)  # records in zero-probability bins

    def top_bins(self, n: int = 5) -> list[int]:
        m = np.where(np.isnan(self.per_bin_max_d), -np.inf, self.per_bin_max_d)
        order = np.lexsort((np.arange(m.size), -m))
        return [int(b) for b in order[:n] if np.isfinite(m[b])]


def sorted_scan(records, key: str, offset: float, exposure: ExposureModel) -> BinScanResult:
    """Sort ascending by ``key`` (ties by MJD, then RF) and accumulate d."""
    records = list(records)
    nb = exposure.n_bins
    p = exposure.bin_probability
    keys = sort_key(records, key, offset) if records else np.empty(0)
    mjd = np.array([r.mjd for r in records], dtype=float)
    rf = np.array([r.first.rf_frequency for r in records], dtype=float)
    order = np.lexsort((rf, mjd, keys)) if records else np.empty(0, dtype=int)
    bins_all = ra_bin(np.array([r.ra for r in records], dtype=float), nb) if records else np.empty(0, dtype=np.int64)
    bins_sorted = np.atleast_1d(bins_all)[order]
    ok = p[bins_sorted] > 0
    used = order[ok]
    b = bins_sorted[ok]
    d = running_d(b, p)
    max_d = np.full(nb, -np.inf)
    np.maximum.at(max_d, b, d)
    max_d[np.isinf(max_d)] = np.nan
    counts = np.bincount(b, minlength=nb)
    return BinScanResult(
        per_point=[(int(i), int(j), float(x)) for i, j, x in zip(used, b, d)],
        per_bin_max_d=max_d,
        per_bin_count=counts,
        per_bin_final_d=final_d(counts, p),
        sort_key_name=key,
        offset=offset,
        keys=keys[used] if records else np.empty(0),
        excluded=[int(i) for i in order[~ok]],
    )


@dataclass(frozen=True)
class PhaseOffsetEstimate:
    mode: float
    n: int
    excess: int  # records within half a kernel width of the mode
    p_value: float  # binomial tail of ``excess`` under uniform phases over the window
    confident: bool

    @property
    def offset(self) -> float:
        """Offset to add to West-East phase before sorting."""
        return -self.mode


def triangular_kde(values: np.ndarray, grid: np.ndarray, width: float) -> np.ndarray:
    u = np.abs(grid[:, None] - values[None, :]) / width
    return np.clip(1 - u, 0, None).sum(axis=1) / (values.size * width)


def estimate_phase_offset(records, candidate_bin: int, kernel_width: float = 0.05,
                          n_bins: int = 1600, support: float = math.pi,
                          alpha: float = 0.01) -> PhaseOffsetEstimate:
    """Mode of a triangular-kernel density of the first-pulse West-East phase
    over the candidate bin's records.  ``support`` is the half-width of the
    phase window the records were filtered to; confidence is a binomial test
    of the count near the mode against uniform phases on that window."""
    vals = np.array([r.d_ew_phi_first for r in records if ra_bin(r.ra, n_bins) == candidate_bin], dtype=float)
    if vals.size < 5:
        raise ValueError(f"too few records in bin {candidate_bin}: {vals.size} < 5")
    # the density is piecewise linear with its peaks at the samples, so the
    # mode is the densest sample; ties go to the value nearest zero
    dens = triangular_kde(vals, vals, kernel_width)
    top = np.flatnonzero(dens >= dens.max() * (1 - 1e-9))
    mode = float(vals[top[np.argmin(np.abs(vals[top]))]])
    excess = int(np.sum(np.abs(vals - mode) <= kernel_width / 2))
    frac = min(kernel_width / 2 / support, 1.0)
    p_value = float(stats.binom.sf(excess - 1, vals.size, frac))
    return PhaseOffsetEstimate(mode, int(vals.size), excess, p_value, p_value < alpha)
