"""FFT channelization, local-noise SNR estimation and both-antenna thresholding."""

from __future__ import annotations

import numpy as np

from .config import SEGMENT_BINS
from .frames import ChannelFrame
from .records import PulseDetection, wrap

HALF_WINDOW = SEGMENT_BINS // 2
GUARD = 1  # neighbours excluded on each side of the bin under test


def channelize(east, west, fft_length: int, mjd: float, sample_rate: float = 62.5,
               lo_frequency: float = 1425.0) -> ChannelFrame:
    """Transform the first ``fft_length`` IQ samples of each antenna.

    Bins are ordered by increasing frequency (bin 0 at ``lo - fs/2``) and scaled
    by 1/N, so a bin-centred tone of amplitude A reads back as magnitude A.
    """
    if fft_length <= 0 or fft_length & (fft_length - 1):
        raise ValueError("fft_length must be a power of two")
    east = np.asarray(east)
    west = np.asarray(west)
    if east.shape != west.shape:
        raise ValueError("length mismatch between antennas")
    if east.shape[0] < fft_length:
        raise ValueError("fewer samples than fft_length")
    e = np.fft.fftshift(np.fft.fft(east[:fft_length])) / fft_length
    w = np.fft.fftshift(np.fft.fft(west[:fft_length])) / fft_length
    width = sample_rate * 1e6 / fft_length
    bin0 = lo_frequency - sample_rate / 2
    return ChannelFrame(mjd, e, w, bin0, width)


def local_noise_mean(power: np.ndarray) -> np.ndarray:
    """Mean power of the 256-bin window around each bin, less the bin and its
    two neighbours; the window is clipped at the band edges."""
    n = power.shape[0]
    idx = np.arange(n)
    lo = np.maximum(idx - HALF_WINDOW, 0)
    hi = np.minimum(idx + HALF_WINDOW, n)
    cs = np.concatenate(([0.0], np.cumsum(power, dtype=float)))
    total = cs[hi] - cs[lo]
    count = (hi - lo).astype(float)
    for k in range(-GUARD, GUARD + 1):
        j = idx + k
        inside = (j >= lo) & (j < hi)
        total = total - np.where(inside, power[np.clip(j, 0, n - 1)], 0.0)
        count = count - inside
    with np.errstate(invalid="ignore", divide="ignore"):
        return total / count


def snr_db(power: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        return 10 * np.log10(power / local_noise_mean(power))


def estimate_snr(frame: ChannelFrame, bin_index: int, antenna: str) -> float:
    data = {"east": frame.east, "west": frame.west}[antenna]
    power = np.abs(data) ** 2
    n = power.shape[0]
    lo, hi = max(bin_index - HALF_WINDOW, 0), min(bin_index + HALF_WINDOW, n)
    keep = [j for j in range(lo, hi) if abs(j - bin_index) > GUARD]
    return float(10 * np.log10(power[bin_index] / power[keep].mean()))


def detect_pulses(frame: ChannelFrame, threshold: float) -> list[PulseDetection]:
    """Bins whose East and West SNR both reach ``threshold`` dB."""
    if not np.isfinite(threshold) and threshold > 0:
        return []
    se = snr_db(np.abs(frame.east) ** 2)
    sw = snr_db(np.abs(frame.west) ** 2)
    hits = np.flatnonzero((se >= threshold) & (sw >= threshold))
    if hits.size == 0:
        return []
    freqs = frame.bin0_frequency + hits * (frame.bin_width * 1e-6)
    pe = wrap(np.angle(frame.east[hits]))
    pw = wrap(np.angle(frame.west[hits]))
    return [
        PulseDetection(frame.mjd, float(f), float(a), float(b), float(x), float(y), int(i))
        for f, a, b, x, y, i in zip(freqs, se[hits], sw[hits], pe, pw, hits)
    ]
