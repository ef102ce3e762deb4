"""Seeded scenario synthesis.

Two paths share one measurement model:

* :func:`synthesize_run` emits channel-level :class:`ChannelFrame` objects
  (unit-power circular Gaussian noise per bin plus injected emitters) for a
  small contiguous sub-band.
* :func:`synthesize_records` skips the FFT bins and draws the stored pulse
  pairs directly over the full band plan.  Noise detections use the exact
  conditional tail of the local-noise SNR estimate; injected pulses go through
  :func:`measure_pulses`, the same noisy-bin model the frames carry.

:func:`raw_sample_oracle` produces time-domain IQ samples for validating the
channel-level injection against :func:`pulsepair.channelizer.channelize`.

Phase conventions: the West antenna of a pulse at RF ``f`` (MHz) carries the
geometric phase, ``-2*pi*f*tau_int`` from the instrument delay, and the phase
detector offset, so West-minus-East = geometric - 2*pi*f*tau + offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .config import (
    FILES_PER_DAY,
    SEGMENT_BINS,
    ContinuumSource,
    InjectedSource,
    Law,
    RFISource,
    ScenarioConfig,
)
from .frames import ChannelFrame
from .pairer import correct_pair_phase, llsnr_pair, llsnr_pulse, make_pair
from .records import PulseDetection, PulsePairRecord, wrap
from .skygeom import (
    SIDEREAL_DAY,
    FringeModel,
    fringe_period,
    interferometer_phase,
    next_lst_crossing,
    perpendicular_hour_angle,
    record_ra,
)
from .channelizer import HALF_WINDOW, GUARD

TWO_PI = 2 * math.pi
NOISE_WINDOW = 2 * HALF_WINDOW - (2 * GUARD + 1)  # bins averaged by the SNR estimate

__all__ = [
    "InjectedSource",
    "RFISource",
    "ContinuumSource",
    "ChannelFrame",
    "SynthResult",
    "frame_times",
    "beam_gain",
    "measure_pulses",
    "tone_bin_values",
    "raw_sample_oracle",
    "synthesize_run",
    "synthesize_records",
]


def frame_times(coverage, interval_s: float) -> np.ndarray:
    """MJD of every triggered integration inside the coverage intervals."""
    step = interval_s / 86400.0
    out = []
    for start, end in coverage:
        n = int(math.ceil((end - start) / step - 1e-9))
        out.append(start + step * np.arange(max(n, 0)))
    return np.concatenate(out) if out else np.empty(0)


def default_fwhm(array) -> float:
    """Element beam FWHM in degrees of RA arc: four fringe periods."""
    return 4 * fringe_period(FringeModel.from_array(array)) * 15.0


def beam_gain(offset_hours, fwhm_deg: float):
    """Gaussian power response to an RA offset (hours)."""
    x = np.asarray(offset_hours) * 15.0 / fwhm_deg
    return np.exp(-4 * math.log(2) * x * x)


def _source_offset(mjd, ra_source, array):
    """Hour-angle offset of a source from the baseline-perpendicular plane."""
    return (np.asarray(record_ra(mjd, array)) - ra_source + 12.0) % 24.0 - 12.0


def _west_phase_terms(config: ScenarioConfig, offset_hours, rf):
    model = FringeModel.from_array(config.array)
    geo = interferometer_phase(offset_hours, model, rf)
    ins = config.instrument
    return geo - TWO_PI * np.asarray(rf) * ins.tau_int + ins.phase_detector_offset


def measure_pulses(amplitude, west_phase, rng, n_window: int = NOISE_WINDOW):
    """Noisy measurement of narrowband pulses of per-antenna ``amplitude``
    (noise-power units).  Returns (snr_e, snr_w, phase_e, phase_w) arrays."""
    amplitude = np.asarray(amplitude, dtype=float)
    shape = amplitude.shape
    carrier = rng.uniform(-math.pi, math.pi, shape)
    noise = (rng.standard_normal((4,) + shape)) / math.sqrt(2)
    east = amplitude * np.exp(1j * carrier) + noise[0] + 1j * noise[1]
    west = amplitude * np.exp(1j * (carrier + west_phase)) + noise[2] + 1j * noise[3]
    means = rng.gamma(n_window, 1.0 / n_window, (2,) + shape)
    snr_e = 10 * np.log10(np.abs(east) ** 2 / means[0])
    snr_w = 10 * np.log10(np.abs(west) ** 2 / means[1])
    return snr_e, snr_w, wrap(np.angle(east)), wrap(np.angle(west))


def _draw(law: Law, rng, size, tau_int=None, bands=None):
    if law.kind == "fixed":
        return np.full(size, law.params[0])
    if law.kind == "uniform":
        if law.params:
            return rng.uniform(law.params[0], law.params[1], size)
        return _uniform_in_bands(bands, rng, size)
    # comb: frequencies where 2*pi*f*tau is a multiple of 2*pi
    if not tau_int:
        raise ValueError("comb frequency law needs a nonzero tau_int")
    spacing = 1.0 / abs(tau_int)
    teeth = [k * spacing for lo, hi in bands
             for k in range(math.ceil(lo / spacing), math.floor(hi / spacing) + 1)]
    if not teeth:
        raise ValueError("no comb frequency inside the band")
    jitter = law.params[0] if law.params else 0.0
    return rng.choice(np.array(teeth), size) + rng.uniform(-jitter, jitter, size)


def _uniform_in_bands(bands, rng, size):
    bands = np.asarray(bands, dtype=float)
    widths = bands[:, 1] - bands[:, 0]
    x = rng.uniform(0, widths.sum(), size)
    edges = np.concatenate(([0.0], np.cumsum(widths)))
    k = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(widths) - 1)
    return bands[k, 0] + (x - edges[k])


def _in_bands(f, bands):
    f = np.asarray(f)
    ok = np.zeros(f.shape, dtype=bool)
    for lo, hi in bands:
        ok |= (f >= lo) & (f < hi)
    return ok


def _event_rng(entropy, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=key)))


def _active(src, mjd, array, fwhm):
    off = _source_offset(mjd, src.ra, array)
    ok = np.abs(off) * 15.0 <= 2 * fwhm
    if src.hour_angle_window is not None:
        ok &= np.abs(off) <= src.hour_angle_window
    if src.active is not None:
        ok &= (mjd >= src.active[0]) & (mjd < src.active[1])
    return ok, off


def _active_intervals(src, coverage, array, fwhm):
    """Sub-intervals of coverage during which ``src`` may emit."""
    half = 2 * fwhm / 15.0
    if src.hour_angle_window is not None:
        half = min(half, src.hour_angle_window)
    half_days = half / 24.0 * SIDEREAL_DAY
    ha_perp = perpendicular_hour_angle(array)
    out = []
    for start, end in coverage:
        if src.active is not None:
            start, end = max(start, src.active[0]), min(end, src.active[1])
            if start >= end:
                continue
        if half >= 12:
            out.append((start, end))
            continue
        t = next_lst_crossing(start - SIDEREAL_DAY, (src.ra + ha_perp) % 24.0, array.site_longitude)
        while t - half_days < end:
            a, b = max(start, t - half_days), min(end, t + half_days)
            if a < b:
                out.append((a, b))
            t += SIDEREAL_DAY
    return out


def _frames_in(intervals, grid):
    idx = [np.arange(np.searchsorted(grid, a), np.searchsorted(grid, b)) for a, b in intervals]
    return np.unique(np.concatenate(idx)) if idx else np.empty(0, dtype=int)


@dataclass
class _Event:
    frame: int
    f1: float
    f2: float
    amplitude: float
    offset: float  # hours from the perpendicular plane
    rng: np.random.Generator


def _source_events(config, src, si, entropy, grid, bands, frame_subset=None):
    """Pulse-pair emissions of one source, nested in its rate: raising
    ``emission_schedule`` only ever adds events."""
    array, ins = config.array, config.instrument
    fwhm = src.beam_fwhm or default_fwhm(array)
    if frame_subset is None:
        frame_subset = _frames_in(_active_intervals(src, config.synth.coverage, array, fwhm), grid)
    if frame_subset.size == 0 or src.emission_schedule <= 0:
        return []
    ok, off = _active(src, grid[frame_subset], array, fwhm)
    frames, off = frame_subset[ok], off[ok]
    lam = src.emission_schedule * ins.integration_interval / 3600.0
    # one uniform per candidate frame, independent of the rate
    u = _event_rng(entropy, si, 0).random(frame_subset.size)[ok]
    counts = stats.poisson.ppf(u, lam).astype(int)
    gain = beam_gain(off, fwhm)
    events = []
    for k, n, g, h in zip(frames, counts, gain, off):
        for slot in range(n):
            rng = _event_rng(entropy, si, int(k) + 1, slot)
            f1 = float(_draw(src.frequency_law, rng, 1, ins.tau_int, bands)[0])
            f2 = f1 + float(_draw(src.delta_f_law, rng, 1)[0])
            amp = math.sqrt(10 ** (src.amplitude_snr / 10) * g) if math.isfinite(src.amplitude_snr) else 0.0
            events.append(_Event(int(k), f1, f2, amp, float(h), rng))
    return events


# --------------------------------------------------------------------------
# time-domain oracle


def tone_bin_values(config: ScenarioConfig, frequency: float, amplitude: float,
                    delay_east: float = 0.0, delay_west: float = 0.0):
    """Noise-free bin value of a bin-centred tone, as the channel-level model
    injects it: amplitude with phase -2*pi*f*delay per antenna."""
    e = amplitude * np.exp(-1j * TWO_PI * frequency * delay_east)
    w = amplitude * np.exp(-1j * TWO_PI * frequency * delay_west)
    return complex(e), complex(w)


def raw_sample_oracle(config: ScenarioConfig, frequency: float, amplitude: float,
                      delay_east: float = 0.0, delay_west: float = 0.0,
                      n_samples: int = 4096):
    """Complex baseband samples of an RF tone seen through two delays (us)."""
    if n_samples <= 0 or n_samples & (n_samples - 1) or n_samples > 2**20:
        raise ValueError("n_samples must be a power of two <= 2**20")
    ins = config.instrument
    f_bb = frequency - ins.lo_frequency
    if not -ins.sample_rate / 2 <= f_bb < ins.sample_rate / 2:
        raise ValueError("tone outside band")
    t = np.arange(n_samples) / ins.sample_rate  # microseconds
    base = TWO_PI * f_bb * t
    east = amplitude * np.exp(1j * (base - TWO_PI * frequency * delay_east))
    west = amplitude * np.exp(1j * (base - TWO_PI * frequency * delay_west))
    return east, west


# --------------------------------------------------------------------------
# channel-level frames


def _rfi_bins(r: RFISource, bin0, width_hz, n):
    lo = (r.center_frequency - bin0) * 1e6 / width_hz - r.bandwidth / width_hz / 2
    hi = lo + r.bandwidth / width_hz
    a, b = int(math.floor(lo + 0.5)), int(math.ceil(hi - 0.5))
    b = max(b, a + 1)
    return np.arange(max(a, 0), min(b, n))


def synthesize_run(config: ScenarioConfig, sources=None, rfi=None, seed=None, continuum=None):
    """Yield one ChannelFrame per triggered integration."""
    ins = config.instrument
    if not ins.rf_bands:
        raise ValueError("empty band plan")
    sources = config.sources if sources is None else tuple(sources)
    rfi = config.rfi if rfi is None else tuple(rfi)
    continuum = config.continuum if continuum is None else tuple(continuum)
    seed = config.synth.seed if seed is None else seed
    n = ins.channel_count
    bin0, width = ins.channel_start_frequency, ins.fft_bin_width
    freqs = bin0 + np.arange(n) * (width * 1e-6)
    sub_band = [(bin0, bin0 + n * width * 1e-6)]
    grid = frame_times(config.synth.coverage, ins.integration_interval)

    root = np.random.SeedSequence(seed)
    noise_ss, src_ss, rfi_ss, cont_ss = root.spawn(4)
    noise_rng = np.random.default_rng(noise_ss)
    rfi_rngs = [np.random.default_rng(s) for s in rfi_ss.spawn(max(len(rfi), 1))]
    cont_rngs = [np.random.default_rng(s) for s in cont_ss.spawn(max(len(continuum), 1))]

    by_frame: dict[int, list[_Event]] = {}
    for si, src in enumerate(sources):
        for ev in _source_events(config, src, si, src_ss.entropy, grid, sub_band):
            by_frame.setdefault(ev.frame, []).append(ev)

    array = config.array
    for k, mjd in enumerate(grid):
        z = noise_rng.standard_normal((4, n)) / math.sqrt(2)
        east = z[0] + 1j * z[1]
        west = z[2] + 1j * z[3]

        for ev in by_frame.get(k, ()):
            for f in (ev.f1, ev.f2):
                b = int(round((f - bin0) * 1e6 / width))
                if not 0 <= b < n or ev.amplitude == 0.0:
                    continue
                fb = freqs[b]
                carrier = ev.rng.uniform(-math.pi, math.pi)
                phase = _west_phase_terms(config, ev.offset, fb)
                east[b] += ev.amplitude * np.exp(1j * carrier)
                west[b] += ev.amplitude * np.exp(1j * (carrier + phase))

        for r, rng in zip(rfi, rfi_rngs):
            on = rng.random() < r.on_fraction
            if r.active is not None:
                on = on and r.active[0] <= mjd < r.active[1]
            if not on:
                continue
            bins = _rfi_bins(r, bin0, width, n)
            amp = math.sqrt(10 ** (r.snr / 10))
            carrier = rng.uniform(-math.pi, math.pi, bins.size)
            east[bins] += amp * np.exp(1j * carrier)
            west[bins] += amp * np.exp(1j * (carrier - TWO_PI * freqs[bins] * ins.tau_int))

        for c, rng in zip(continuum, cont_rngs):
            fwhm = c.beam_fwhm or default_fwhm(array)
            off = float(_source_offset(mjd, c.ra, array))
            s = rng.standard_normal((2, n)) / math.sqrt(2)
            if abs(off) * 15.0 > 2 * fwhm:
                continue
            amp = math.sqrt(10 ** (c.snr / 10) * float(beam_gain(off, fwhm)))
            sig = amp * (s[0] + 1j * s[1])
            east += sig
            west += sig * np.exp(1j * _west_phase_terms(config, off, freqs))

        yield ChannelFrame(float(mjd), east, west, bin0, width)


# --------------------------------------------------------------------------
# record-level synthesis


@dataclass
class SynthResult:
    records: list[PulsePairRecord]
    coverage: tuple[tuple[float, float], ...]
    n_frames: int
    # file window -> segment index -> detection count
    segment_counts: dict[int, dict[int, int]] = field(default_factory=dict)
    n_noise_pairs: int = 0
    n_source_pairs: int = 0


def full_band_origin(config: ScenarioConfig) -> float:
    """RF (MHz) of bin 0 of the full-scale transform."""
    ins = config.instrument
    return ins.lo_frequency - ins.sample_rate / 2


def _noise_snr(rng, size, threshold_db):
    """SNR (dB) of noise bins that passed the threshold against a local-noise
    estimate: power = M*T + Exp(1) given M, by memorylessness."""
    t = 10 ** (threshold_db / 10)
    m = rng.gamma(NOISE_WINDOW, 1.0 / NOISE_WINDOW, size)
    return 10 * np.log10(t + rng.exponential(1.0, size) / m)


def _noise_pairs(config: ScenarioConfig, rng, grid):
    ins, post = config.instrument, config.post
    syn = config.synth
    window = post.d_ew_phi_window if syn.noise_prefilter else math.pi
    thin = min(window / math.pi, 1.0)
    n = int(rng.poisson(syn.noise_pair_rate * grid.size * thin))
    origin = full_band_origin(config)
    width = ins.fft_bin_width * 1e-6
    lo, hi = post.delta_f_range
    f1 = np.empty(0)
    f2 = np.empty(0)
    while f1.size < n:
        m = 2 * (n - f1.size) + 16
        a = _uniform_in_bands(ins.rf_bands, rng, m)
        b = _uniform_in_bands(ins.rf_bands, rng, m)
        a = origin + np.floor((a - origin) / width + 0.5) * width
        b = origin + np.floor((b - origin) / width + 0.5) * width
        a, b = np.minimum(a, b), np.maximum(a, b)
        keep = (b - a >= lo) & (b - a <= hi)
        f1 = np.concatenate((f1, a[keep]))
        f2 = np.concatenate((f2, b[keep]))
    f1, f2 = f1[:n], f2[:n]
    frame = rng.integers(0, grid.size, n) if grid.size else np.zeros(0, dtype=int)
    snr = _noise_snr(rng, (4, n), ins.snr_threshold)
    pe1 = rng.uniform(-math.pi, math.pi, n)
    d1 = post.d_ew_phi_offset + rng.uniform(-window, window, n)
    pw1 = wrap(pe1 + d1)
    pe2 = rng.uniform(-math.pi, math.pi, n)
    pw2 = rng.uniform(-math.pi, math.pi, n)
    bins1 = np.rint((f1 - origin) / width).astype(np.int64)
    bins2 = np.rint((f2 - origin) / width).astype(np.int64)
    return dict(frame=frame, f1=f1, f2=f2, snr=snr, pe1=pe1, pw1=pw1, pe2=pe2, pw2=pw2,
                bin1=bins1, bin2=bins2)


def _count_segments(counts, mjd, bins):
    mjd = np.asarray(mjd, dtype=float)
    win = np.floor(mjd * FILES_PER_DAY).astype(np.int64)
    win += mjd >= (win + 1) / FILES_PER_DAY
    win -= mjd < win / FILES_PER_DAY
    seg = np.asarray(bins) // SEGMENT_BINS
    if win.size == 0:
        return
    keys, n = np.unique(win * (1 << 32) + seg, return_counts=True)
    w_all, s_all = np.divmod(keys, 1 << 32)
    for w in np.unique(w_all).tolist():
        sel = w_all == w
        d = counts.setdefault(w, {})
        for s, c in zip(s_all[sel].tolist(), n[sel].tolist()):
            d[s] = d.get(s, 0) + c


def synthesize_records(config: ScenarioConfig, seed=None, sources=None) -> SynthResult:
    """Pulse-pair records for the whole coverage, drawn without FFT frames.

    With ``noise_prefilter`` the noise pairs are thinned to those whose first
    pulse passes the West-East phase window and then to those passing the
    remaining phase and likelihood post-filters.  Noise phases are uniform and
    independent of all other fields, so the surviving set is distributed
    exactly as the post-filtered output of an unthinned run.
    """
    syn, ins, post = config.synth, config.instrument, config.post
    seed = syn.seed if seed is None else seed
    sources = config.sources if sources is None else tuple(sources)
    grid = frame_times(syn.coverage, ins.integration_interval)
    root = np.random.SeedSequence(seed)
    noise_ss, src_ss, _, _ = root.spawn(4)
    rng = np.random.default_rng(noise_ss)

    nz = _noise_pairs(config, rng, grid)
    mjd = grid[nz["frame"]] if grid.size else np.zeros(0)
    counts: dict[int, dict[int, int]] = {}
    _count_segments(counts, np.concatenate((mjd, mjd)), np.concatenate((nz["bin1"], nz["bin2"])))

    keep = np.ones(mjd.size, dtype=bool)
    if syn.noise_prefilter:
        d1 = wrap(nz["pw1"] - nz["pe1"])
        d2 = wrap(nz["pw2"] - nz["pe2"])
        dd = correct_pair_phase(d1, d2, nz["f2"] - nz["f1"], ins.tau_int)
        s = nz["snr"]
        keep &= np.abs(dd) <= post.d_df_d_ew_phi_window
        keep &= llsnr_pulse(s[0], s[1]) <= post.llsnr_pulse_threshold
        keep &= llsnr_pair(s) <= post.llsnr_pair_threshold

    records = []
    for i in np.flatnonzero(keep):
        s = nz["snr"][:, i]
        a = PulseDetection(float(mjd[i]), float(nz["f1"][i]), float(s[0]), float(s[1]),
                           float(nz["pe1"][i]), float(nz["pw1"][i]), int(nz["bin1"][i]))
        b = PulseDetection(float(mjd[i]), float(nz["f2"][i]), float(s[2]), float(s[3]),
                           float(nz["pe2"][i]), float(nz["pw2"][i]), int(nz["bin2"][i]))
        records.append(make_pair(a, b, ins.tau_int))
    n_noise = len(records)

    origin = full_band_origin(config)
    width = ins.fft_bin_width * 1e-6
    threshold = ins.snr_threshold
    lo, hi = post.delta_f_range
    src_mjd, src_bins = [], []
    for si, src in enumerate(sources):
        for ev in _source_events(config, src, si, src_ss.entropy, grid, ins.rf_bands):
            f = origin + np.rint((np.array([ev.f1, ev.f2]) - origin) / width) * width
            if not _in_bands(f, ins.rf_bands).all() or ev.amplitude == 0.0:
                continue
            phase = _west_phase_terms(config, ev.offset, f)
            se, sw, pe, pw = measure_pulses(np.full(2, ev.amplitude), phase, ev.rng)
            det = (se >= threshold) & (sw >= threshold)
            bins = np.rint((f - origin) / width).astype(np.int64)
            t = float(grid[ev.frame])
            for j in np.flatnonzero(det):
                src_mjd.append(t)
                src_bins.append(bins[j])
            if not det.all() or not lo <= f[1] - f[0] <= hi:
                continue
            dets = [PulseDetection(t, float(f[j]), float(se[j]), float(sw[j]), float(pe[j]),
                                   float(pw[j]), int(bins[j])) for j in (0, 1)]
            records.append(make_pair(dets[0], dets[1], ins.tau_int))
    _count_segments(counts, np.array(src_mjd), np.array(src_bins, dtype=np.int64))

    records.sort(key=lambda r: (r.mjd, r.first.rf_frequency, r.second.rf_frequency))
    if records:
        ras = np.atleast_1d(record_ra(np.array([r.mjd for r in records]), config.array))
        records = [PulsePairRecord(**{**r.__dict__, "ra": float(x)}) for r, x in zip(records, ras)]
    return SynthResult(records, tuple(syn.coverage), int(grid.size), counts,
                       n_noise, len(records) - n_noise)
