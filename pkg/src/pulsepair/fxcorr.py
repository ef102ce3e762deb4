"""Small FX correlator: band-averaged continuum power and visibility traces."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .skygeom import record_ra


@dataclass(frozen=True, eq=False)
class VisibilityPoint:
    mjd: float
    power_east: float
    power_west: float
    visibility: complex | np.ndarray  # array when per-sub-band
    subband_frequencies: np.ndarray | None = None  # MHz centres, per-sub-band mode only


def cross_correlate(frames, integration_count: int, n_subbands: int = 1,
                    per_channel: bool = False) -> list[VisibilityPoint]:
    """Average ``integration_count`` consecutive frames per output point.

    Power is the mean |bin|^2 over band and frames; visibility the mean of
    east * conj(west).  With ``n_subbands > 1`` (or ``per_channel``) the
    visibility is returned per contiguous sub-band instead of band-averaged.
    A trailing partial group is averaged over the frames it has.
    """
    if integration_count < 1:
        raise ValueError("integration_count must be >= 1")
    out: list[VisibilityPoint] = []
    acc = None
    n = 0
    t0 = 0.0
    freqs = None
    for fr in frames:
        e, w = fr.east, fr.west
        if per_channel:
            groups = e.shape[0]
        else:
            groups = n_subbands
        if acc is None:
            acc = [0.0, 0.0, np.zeros(groups, dtype=complex)]
            t0 = fr.mjd
            splits = np.array_split(np.arange(e.shape[0]), groups)
            freqs = np.array([fr.frequencies[s].mean() for s in splits])
        cross = e * np.conj(w)
        acc[0] += float(np.mean(np.abs(e) ** 2))
        acc[1] += float(np.mean(np.abs(w) ** 2))
        acc[2] += np.array([c.mean() for c in np.array_split(cross, groups)])
        n += 1
        if n == integration_count:
            out.append(_point(acc, n, t0, groups, freqs))
            acc, n = None, 0
    if acc is not None:
        out.append(_point(acc, n, t0, acc[2].shape[0], freqs))
    if not out:
        raise ValueError("empty frame stream")
    return out


def _point(acc, n, t0, groups, freqs):
    vis = acc[2] / n
    if groups == 1:
        return VisibilityPoint(t0, acc[0] / n, acc[1] / n, complex(vis[0]))
    return VisibilityPoint(t0, acc[0] / n, acc[1] / n, vis, freqs)


def delay_from_subbands(point: VisibilityPoint) -> float:
    """Delay (us) from the visibility phase slope across sub-bands."""
    if point.subband_frequencies is None:
        raise ValueError("point has no sub-band visibilities")
    phase = np.unwrap(np.angle(point.visibility))
    slope = np.polyfit(point.subband_frequencies, phase, 1)[0]
    return slope / (2 * math.pi)


def fringe_period_from_trace(points, array, min_power_ratio: float = 0.0) -> float:
    """RA period (hours) of the visibility phase: 2*pi over the fitted slope
    of the unwrapped phase against record RA."""
    pts = [p for p in points if np.ndim(p.visibility) == 0]
    if len(pts) < 3:
        raise ValueError("need at least three band-averaged points")
    vis = np.array([p.visibility for p in pts])
    power = np.sqrt(np.array([p.power_east * p.power_west for p in pts]))
    keep = np.abs(vis) >= min_power_ratio * power
    if keep.sum() < 3:
        raise ValueError("too few points above the correlation floor")
    ra = np.unwrap(np.atleast_1d(record_ra(np.array([p.mjd for p in pts]), array)) * (math.pi / 12)) * (12 / math.pi)
    phase = np.unwrap(np.angle(vis[keep]))
    slope = np.polyfit(ra[keep], phase, 1)[0]
    return 2 * math.pi / abs(slope)


def write_trace_csv(points, path, array) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["mjd", "ra", "power_east", "power_west", "vis_real", "vis_imag"])
        for p in points:
            v = complex(np.mean(p.visibility))
            wr.writerow([f"{p.mjd:.6f}", f"{float(record_ra(p.mjd, array)):.6f}", f"{p.power_east:.6g}",
                         f"{p.power_west:.6g}", f"{v.real:.6g}", f"{v.imag:.6g}"])
