"""Monte-Carlo null calibration and full-scale constant cross-checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .config import FULL_SCALE_BIN_WIDTH, FULL_SCALE_FFT_LENGTH, SAMPLE_RATE_MSPS, SEGMENT_BINS
from .pairer import LLSNR_OFFSET, LOG10_E
from .scan import ExposureModel, final_d, running_d
from .skygeom import FringeModel, fringe_period

QUANTILE_LEVELS = (0.5, 0.9, 0.99, 0.999)


@dataclass(frozen=True, eq=False)
class NullDistribution:
    n_records: int
    n_runs: int
    run_max_d: np.ndarray  # per run: max over bins of the incremental per-bin max d
    run_max_final_d: np.ndarray  # per run: max over bins of the final d
    bin_max_d: np.ndarray  # (runs, analysed bins); -inf where a bin got nothing
    bin_final_d: np.ndarray  # (runs, analysed bins)
    bin_probability: np.ndarray | None = None  # analysed bins

    def quantiles(self, which: str = "run_max_d", levels=QUANTILE_LEVELS) -> dict[float, float]:
        data = getattr(self, which).ravel()
        data = data[np.isfinite(data)]  # bins that received no record have no max
        return {q: float(np.quantile(data, q)) for q in levels}

    def fraction_below(self, level: float = 4.4) -> np.ndarray:
        """Per run, fraction of analysed bins whose max d stays below ``level``."""
        return (self.bin_max_d < level).mean(axis=1)

    def p_value(self, d: float, which: str = "run_max_d") -> float:
        """Empirical probability of a null value at least ``d`` (add-one)."""
        data = getattr(self, which).ravel()
        data = data[np.isfinite(data)]
        return float((np.sum(data >= d) + 1) / (data.size + 1))


def null_distribution(n_records: int, exposure: ExposureModel, n_runs: int = 1000,
                      seed=0) -> NullDistribution:
    """Pure-noise scans: ``n_records`` bins drawn from the exposure
    probabilities per run, already in heap order (noise keys are exchangeable)."""
    if n_runs < 10:
        raise ValueError("n_runs must be >= 10")
    p = exposure.bin_probability
    idx = np.flatnonzero(p > 0)
    pa = p[idx]
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_runs)]
    bmax = np.empty((n_runs, idx.size))
    bfin = np.empty((n_runs, idx.size))
    for i, rng in enumerate(rngs):
        b = rng.choice(idx.size, n_records, p=pa / pa.sum())
        d = running_d(b, pa)
        m = np.full(idx.size, -np.inf)
        np.maximum.at(m, b, d)
        bmax[i] = m
        bfin[i] = final_d(np.bincount(b, minlength=idx.size), pa)
    return NullDistribution(n_records, n_runs, bmax.max(axis=1), bfin.max(axis=1), bmax, bfin, pa)


def _continuous_final_d(null: NullDistribution, rng) -> np.ndarray:
    """Final d with each count spread uniformly over +-1/2 (randomized
    continuity), which removes the lattice that depends on the exposure."""
    p = null.bin_probability
    sigma = np.sqrt(null.n_records * p * (1 - p))
    return (null.bin_final_d + rng.uniform(-0.5, 0.5, null.bin_final_d.shape) / sigma).ravel()


def compare_null(a: NullDistribution, b: NullDistribution, which: str = "bin_final_d", seed=0):
    """Two-sample KS test of two null distributions.  ``bin_final_d`` is
    compared after randomized continuity so that nulls on different exposures
    are not told apart by their count lattices alone."""
    if which == "bin_final_d" and a.bin_probability is not None and b.bin_probability is not None:
        rng = np.random.default_rng(seed)
        return stats.ks_2samp(_continuous_final_d(a, rng), _continuous_final_d(b, rng))
    return stats.ks_2samp(getattr(a, which).ravel(), getattr(b, which).ravel())


def write_calibration_csv(null: NullDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["statistic", "quantile", "value"])
        for which in ("run_max_d", "run_max_final_d", "bin_max_d", "bin_final_d"):
            for q, v in null.quantiles(which).items():
                wr.writerow([which, f"{q:g}", f"{v:.6f}"])


@dataclass(frozen=True)
class ConstantCheck:
    name: str
    computed: float
    target: float
    decimals: int

    @property
    def ok(self) -> bool:
        """The computed value rounds to the stated target."""
        return round(self.computed, self.decimals) == round(self.target, self.decimals)

    @property
    def within_last_digit(self) -> bool:
        return abs(self.computed - self.target) < 10.0 ** -self.decimals


def fullscale_constants_check() -> list[ConstantCheck]:
    bw = SAMPLE_RATE_MSPS * 1e6 / FULL_SCALE_FFT_LENGTH
    return [
        ConstantCheck("fft_bin_width_hz", bw, 3.7253, 4),
        ConstantCheck("integration_time_s", 1 / bw, 0.2684, 4),
        ConstantCheck("noise_window_hz", SEGMENT_BINS * bw, 953.7, 1),
        ConstantCheck("fringe_period_hr", fringe_period(FringeModel(33.0, -7.6)), 0.1167, 4),
        ConstantCheck("delay_phase_7mhz_1ns_rad", 2 * math.pi * 7e6 * 1e-9, 0.0440, 4),
        ConstantCheck("llsnr_offset", 2 * LOG10_E * 10 ** 0.85, LLSNR_OFFSET, 3),
        ConstantCheck("bin_width_times_length_hz", FULL_SCALE_BIN_WIDTH * FULL_SCALE_FFT_LENGTH,
                      SAMPLE_RATE_MSPS * 1e6, 6),
    ]


def constants_report(checks=None) -> str:
    checks = fullscale_constants_check() if checks is None else checks
    lines = []
    for c in checks:
        flag = "ok" if c.ok else "FAIL"
        note = " (within one unit of the last digit)" if not c.ok and c.within_last_digit else ""
        lines.append(f"{c.name}: {c.computed:.{c.decimals + 2}f} vs {c.target:.{c.decimals}f} {flag}{note}")
    return "\n".join(lines) + "\n"
