"""Ready-made scenarios used by the experiment scripts and the test suite."""

from __future__ import annotations

from .config import RECONCILED_LONGITUDE, ContinuumSource, InjectedSource, Law, RFISource, ScenarioConfig
from .records import file_window
from .skygeom import next_lst_crossing, record_ra

# Observing intervals of the modelled 92-day run, with its two-week outage.
RUN_COVERAGE = ((60498.499, 60517.663), (60532.329, 60603.653))

# Noise pairs per frame (records mode) giving about 3417 accepted pairs in
# the analysed RA range over RUN_COVERAGE.
RUN_NOISE_PAIR_RATE = 7.27

INJECTED_RA = 5.1675  # centre of RA bin 344
INJECTED_OFFSET = 0.07  # radians, phase detector offset


def base_config(**overrides) -> ScenarioConfig:
    return ScenarioConfig().replace(site_longitude=RECONCILED_LONGITUDE, **overrides)


def beacon(rate: float = 1300.0, snr: float = 60.0, window: float = 1e-4, ra: float = INJECTED_RA) -> InjectedSource:
    """A repeating emitter locked to transit.

    First pulses sit on RF frequencies where the instrument-delay phase is a
    whole number of turns, and emission only happens within ``window`` hours
    of the perpendicular plane, so the West-East phase of the first pulse
    clusters tightly at the phase detector offset.
    """
    return InjectedSource(ra=ra, amplitude_snr=snr, frequency_law=Law("comb", ()),
                          hour_angle_window=window, emission_schedule=rate, name="beacon")


def null_run(seed: int = 0) -> ScenarioConfig:
    return base_config(coverage=RUN_COVERAGE, noise_pair_rate=RUN_NOISE_PAIR_RATE, seed=seed)


def injection_run(seed: int = 4, rate: float = 1300.0) -> ScenarioConfig:
    return base_config(coverage=RUN_COVERAGE, noise_pair_rate=RUN_NOISE_PAIR_RATE,
                       phase_detector_offset=INJECTED_OFFSET, seed=seed, sources=(beacon(rate),))


def fringe_transit(ra: float = 5.5, half_span_hours: float = 0.4, channel_count: int = 1024,
                   snr: float = 0.0, mjd: float = 60564.0) -> ScenarioConfig:
    """Broadband continuum source crossing the perpendicular plane."""
    t0 = next_lst_crossing(mjd, ra, RECONCILED_LONGITUDE)
    cov = ((t0 - half_span_hours / 24, t0 + half_span_hours / 24),)
    return base_config(coverage=cov, channel_count=channel_count, synth_mode="frames",
                       continuum=(ContinuumSource(ra=ra, snr=snr, name="nebula"),))


def rfi_window(window_index: int = 363386, interval_s: float = 30.0, channel_count: int = 4096,
               margin: int = 2) -> ScenarioConfig:
    """One four-hour file window.  An interferer in segment 5 switches on at
    the half-way point; a victim emitter puts pairs in segment 5 only during
    the first half, and a control emitter puts pairs in segment 12 all along."""
    start, end = file_window(window_index)
    mid = (start + end) / 2
    cfg = base_config(coverage=((start, end),), channel_count=channel_count, integration_interval=interval_s,
                      synth_mode="frames", rfi_margin_segments=margin)
    ins = cfg.instrument
    bw_mhz = ins.fft_bin_width * 1e-6

    def seg_freq(seg: int, frac: float) -> float:
        return ins.channel_start_frequency + (seg * 256 + frac * 256) * bw_mhz

    ra_mid = float(record_ra(mid, cfg.array))
    wide = 360.0  # beam wide enough to cover the whole window
    victim = InjectedSource(ra=ra_mid, amplitude_snr=20.0, delta_f_law=Law("fixed", (40 * bw_mhz,)),
                            frequency_law=Law("uniform", (seg_freq(5, 0.1), seg_freq(5, 0.6))),
                            emission_schedule=4.0, beam_fwhm=wide, active=(start, mid), name="victim")
    control = InjectedSource(ra=ra_mid, amplitude_snr=20.0, delta_f_law=Law("fixed", (40 * bw_mhz,)),
                             frequency_law=Law("uniform", (seg_freq(12, 0.1), seg_freq(12, 0.6))),
                             emission_schedule=1.5, beam_fwhm=wide, name="control")
    radar = RFISource(center_frequency=seg_freq(5, 0.9), snr=30.0, active=(mid, end), name="radar")
    return cfg.replace(sources=(victim, control), rfi=(radar,))
