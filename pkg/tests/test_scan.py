import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import rec
from pulsepair.config import ArrayConfig, PostFilterConfig, RECONCILED_LONGITUDE
from pulsepair.scan import (
    analyzed_mask,
    compute_exposure,
    estimate_phase_offset,
    final_d,
    post_filter,
    ra_bin,
    running_d,
    sorted_scan,
    uniform_exposure,
)
from pulsepair.skygeom import SIDEREAL_RATE, record_ra

ARRAY = ArrayConfig(site_longitude=RECONCILED_LONGITUDE)


def test_first_point_d():
    p = np.full(1600, 1 / 1600)
    assert running_d(np.array([7]), p)[0] == pytest.approx(math.sqrt(1599), abs=1e-9)
    assert math.sqrt(1599) == pytest.approx(39.99, abs=0.005)


def test_final_d_reference_sized_bin():
    p = np.full(1600, 1 / 1600)
    counts = np.zeros(1600, dtype=int)
    counts[344] = 21
    counts[0] = 3417 - 21
    d = final_d(counts, p)
    assert d[344] == pytest.approx(12.91, abs=0.01)


def test_running_d_matches_direct_loop():
    rng = np.random.default_rng(0)
    p = rng.dirichlet(np.ones(30))
    b = rng.integers(0, 30, 400)
    got = running_d(b, p)
    c = np.zeros(30)
    for k, (bi, g) in enumerate(zip(b, got), 1):
        c[bi] += 1
        assert g == pytest.approx((c[bi] - k * p[bi]) / math.sqrt(k * p[bi] * (1 - p[bi])))


def test_proportional_spread_has_zero_final_d():
    p = np.full(500, 1 / 500)
    d = final_d(np.full(500, 7), p)
    assert np.allclose(d, 0.0)


def test_uniform_exposure_from_full_days():
    sid = 1 / SIDEREAL_RATE  # one sidereal day in solar days
    exp = compute_exposure(((60000.0, 60000.0 + 5 * sid),), 1600, ARRAY)
    assert np.allclose(exp.bin_probability, 1 / 1600, rtol=1e-9)
    assert exp.bin_probability.sum() == pytest.approx(1.0, abs=1e-9)


def test_exposure_sliver():
    start = 60000.0
    r0 = float(record_ra(start, ARRAY))
    # move to the start of the next bin and stay for exactly one bin width
    lead = (math.ceil(r0 / 0.015) * 0.015 - r0 + 1e-7) / SIDEREAL_RATE / 24
    t0 = start + lead
    t1 = t0 + (0.015 - 2e-7) / SIDEREAL_RATE / 24
    exp = compute_exposure(((t0, t1),), 1600, ARRAY)
    target = ra_bin(float(record_ra(t0, ARRAY)), 1600)
    assert exp.bin_probability[target] == pytest.approx(1.0, abs=1e-9)
    assert np.count_nonzero(exp.bin_probability) == 1


def test_exposure_gap_lowers_transited_bins():
    from pulsepair.scenarios import RUN_COVERAGE
    full = compute_exposure(((RUN_COVERAGE[0][0], RUN_COVERAGE[1][1]),), 1600, ARRAY, (1.5, 9.0))
    gapped = compute_exposure(RUN_COVERAGE, 1600, ARRAY, (1.5, 9.0))
    assert gapped.bin_probability.sum() == pytest.approx(1.0, abs=1e-9)
    ratio = gapped.bin_probability[gapped.analyzed] / full.bin_probability[full.analyzed]
    # a 14.7-day outage in a 105-day run shifts the shape by a few percent, not uniformly
    assert ratio.max() - ratio.min() > 1e-3
    assert np.all(np.abs(ratio - 1) < 0.2)
    assert not gapped.bin_probability[~gapped.analyzed].any()


def test_exposure_errors():
    with pytest.raises(ValueError, match="zero total"):
        compute_exposure((), 1600, ARRAY)


def test_analyzed_range_has_500_bins():
    assert analyzed_mask(1600, (1.5, 9.0)).sum() == 500


def _bins_to_ra(bins):
    return (np.asarray(bins) + 0.5) * 0.015


def test_sorted_scan_order_and_ties():
    exp = uniform_exposure(1600)
    recs = [rec(mjd=60564.5, ra=1.0, dd=0.3), rec(mjd=60564.4, ra=2.0, dd=-0.3), rec(mjd=60564.3, ra=3.0, dd=0.1)]
    s = sorted_scan(recs, "abs_d_df_d_ew_phi", 0.0, exp)
    assert [i for i, _, _ in s.per_point] == [2, 1, 0]
    assert s.per_point[0][2] == pytest.approx(math.sqrt(1599))
    assert s.per_bin_count.sum() == 3


def test_sorted_scan_zero_probability_excluded():
    exp = uniform_exposure(1600, (1.5, 9.0))
    recs = [rec(ra=0.5), rec(ra=5.0, mjd=60564.5)]
    s = sorted_scan(recs, "abs_d_ew_phi_plus_offset", 0.0, exp)
    assert s.excluded == [0]
    assert len(s.per_point) == 1 and np.isfinite(s.per_point[0][2])


def test_phase_key_uses_offset():
    exp = uniform_exposure(1600)
    recs = [rec(ra=1.0, phi1=0.07), rec(ra=2.0, phi1=0.0, mjd=60564.5)]
    s = sorted_scan(recs, "abs_d_ew_phi_plus_offset", -0.07, exp)
    assert s.per_point[0][0] == 0 and s.keys[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        sorted_scan(recs, "nonsense", 0.0, exp)


@given(st.lists(st.tuples(st.integers(0, 49), st.floats(-3, 3)), min_size=1, max_size=60))
def test_scan_deterministic_and_count_sum(items):
    exp = uniform_exposure(50)
    recs = [rec(mjd=60564 + i * 1e-3, ra=(b + 0.5) * 24 / 50, dd=dd) for i, (b, dd) in enumerate(items)]
    a = sorted_scan(recs, "abs_d_df_d_ew_phi", 0.0, exp)
    b = sorted_scan(recs, "abs_d_df_d_ew_phi", 0.0, exp)
    assert a.per_point == b.per_point
    assert a.per_bin_count.sum() == len(recs)
    assert all(np.isfinite(d) for _, _, d in a.per_point)


def test_final_d_monotone_in_injected_count():
    p = np.full(500, 1 / 500)
    base = np.random.default_rng(1).multinomial(3000, p)
    prev = -np.inf
    for extra in range(0, 30, 3):
        c = base.copy()
        c[10] += extra
        d = final_d(c, p)[10]
        assert d >= prev
        prev = d


def _bin_records(phases, b=344):
    ra = (b + 0.5) * 0.015
    return [rec(mjd=60564 + i * 1e-3, ra=ra, phi1=float(x)) for i, x in enumerate(phases)]


def test_phase_offset_cluster():
    rng = np.random.default_rng(2)
    ph = np.concatenate((rng.uniform(-0.07, 0.2, 10), 0.07 + rng.uniform(-0.02, 0.02, 15)))
    est = estimate_phase_offset(_bin_records(ph), 344, 0.05, support=0.7)
    assert est.mode == pytest.approx(0.07, abs=0.01)
    assert est.offset == pytest.approx(-est.mode)
    assert est.confident


def test_phase_offset_symmetric_uniform():
    ph = np.linspace(-0.7, 0.7, 40)
    est = estimate_phase_offset(_bin_records(ph), 344, 0.05, support=0.7)
    assert abs(est.mode) <= 0.05
    assert not est.confident


def test_phase_offset_all_zero_and_too_few():
    est = estimate_phase_offset(_bin_records(np.zeros(8)), 344)
    assert est.mode == 0.0
    with pytest.raises(ValueError, match="too few"):
        estimate_phase_offset(_bin_records(np.zeros(4)), 344)


def test_post_filter():
    post = PostFilterConfig()
    good = rec(mjd=60564.4, ra=5.0)
    bad_df = rec(bin1=0, bin2=2**23)
    bad_dd = rec(dd=1.0)
    bad_phase = rec(phi1=2.0)
    bad_snr = rec(snr=8.0)
    out = post_filter([good, bad_df, bad_dd, bad_phase, bad_snr], post)
    assert out == [good]
    assert post_filter([good], post, (6.0, 9.0)) == []
