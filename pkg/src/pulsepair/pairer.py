"""Same-integration pulse pairing, instrument-delay correction and SNR likelihoods."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .records import PulseDetection, PulsePairRecord, partition_by_file, with_ra, wrap
from .skygeom import record_ra

# log10 likelihood of an exponential-power noise sample exceeding x is
# -x*log10(e); pulses are zero-referenced at two 8.5 dB samples, so
# 6.149 = 2 * log10(e) * 10**0.85.  Kept literal.
LLSNR_OFFSET = 6.149
LOG10_E = 0.4343


def llsnr_pulse(snr_east, snr_west):
    return LLSNR_OFFSET - LOG10_E * (10 ** (np.asarray(snr_east) / 10) + 10 ** (np.asarray(snr_west) / 10))


def llsnr_pair(snrs):
    """Four-pulse composite, zero at four 8.5 dB samples."""
    s = np.asarray(snrs, dtype=float)
    return 2 * LLSNR_OFFSET - LOG10_E * np.sum(10 ** (s / 10), axis=0)


def correct_pair_phase(d_ew_phi_first, d_ew_phi_second, delta_f, tau_int):
    """Difference of the pulses' West-East phases with the 2*pi*df*tau term
    (MHz times microseconds) added back, wrapped to [-pi, pi)."""
    return wrap(np.asarray(d_ew_phi_second) - d_ew_phi_first + 2 * math.pi * np.asarray(delta_f) * tau_int)


def make_pair(a: PulseDetection, b: PulseDetection, tau_int: float) -> PulsePairRecord:
    first, second = (a, b) if a.rf_frequency <= b.rf_frequency else (b, a)
    p1, p2 = first.d_ew_phi, second.d_ew_phi
    df = second.rf_frequency - first.rf_frequency
    return PulsePairRecord(
        first=first,
        second=second,
        delta_f=df,
        d_ew_phi_first=p1,
        d_ew_phi_second=p2,
        d_df_d_ew_phi=float(correct_pair_phase(p1, p2, df, tau_int)),
        llsnr_pulse=float(llsnr_pulse(first.snr_east, first.snr_west)),
        llsnr_pair=float(llsnr_pair([first.snr_east, first.snr_west, second.snr_east, second.snr_west])),
    )


def form_pairs(detections, delta_f_range, tau_int: float = 0.0) -> list[PulsePairRecord]:
    """Every two-detection combination from one integration whose frequency
    separation lies in ``delta_f_range`` (MHz, inclusive)."""
    dets = sorted(detections, key=lambda d: (d.rf_frequency, d.bin_index))
    if len({d.mjd for d in dets}) > 1:
        raise ValueError("detections span more than one integration")
    lo, hi = delta_f_range
    out = []
    for a, b in combinations(dets, 2):
        df = b.rf_frequency - a.rf_frequency
        if lo <= df <= hi:
            out.append(make_pair(a, b, tau_int))
    return out


def assign_ra_and_partition(records, array) -> dict[int, list[PulsePairRecord]]:
    """Fill ``ra`` from each record's MJD and group by four-hour file window."""
    records = list(records)
    if not records:
        return {}
    ras = np.atleast_1d(record_ra(np.array([r.mjd for r in records]), array))
    return partition_by_file(with_ra(r, float(ra)) for r, ra in zip(records, ras))
