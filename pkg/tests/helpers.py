"""Small record builders shared by the tests."""

import math

from hypothesis import strategies as st

from pulsepair.records import PulseDetection, PulsePairRecord

ORIGIN = 1425.0 - 62.5 / 2  # RF of full-band bin 0
WIDTH = 62.5 / 2**24  # MHz


def rec(mjd=60564.44, bin1=1000, bin2=2000, ra=5.0, phi1=0.0, dd=0.0, snr=10.0):
    f1 = ORIGIN + bin1 * WIDTH
    f2 = ORIGIN + bin2 * WIDTH
    a = PulseDetection(mjd, f1, snr, snr, 0.0, phi1, bin1)
    b = PulseDetection(mjd, f2, snr, snr, 0.0, phi1, bin2)
    lp = 6.149 - 0.4343 * 2 * 10 ** (snr / 10)
    return PulsePairRecord(a, b, f2 - f1, phi1, phi1, dd, lp, 2 * lp, ra)


def seg_bin(seg, offset=10):
    return seg * 256 + offset


def sqrt_p(p):
    return math.sqrt(p * (1 - p))


def reference_record():
    a = PulseDetection(60564.439135, 1419.207393, 11.79, 11.44, 0.1234, 0.2345, 12345)
    b = PulseDetection(60564.439135, 1421.460992, 9.1, 8.9, -1.0, 2.0, 617300)
    return PulsePairRecord(a, b, 2.253599, 0.1111, -3.0, 0.41, -6.4603, -8.9, 5.160117)


def q(x, d):
    return round(x, d)


phase = st.floats(-math.pi, math.pi - 1e-3).map(lambda x: q(x, 4))
snr = st.floats(8.5, 60).map(lambda x: q(x, 4))


@st.composite
def records(draw):
    mjd = q(draw(st.floats(50000, 70000)), 6)
    f1 = q(draw(st.floats(1405, 1450)), 6)
    df = q(draw(st.floats(1e-6, 7)), 6)
    pulses = [PulseDetection(mjd, f, draw(snr), draw(snr), draw(phase), draw(phase), draw(st.integers(0, 2**24)))
              for f in (f1, q(f1 + df, 6))]
    return PulsePairRecord(pulses[0], pulses[1], df, draw(phase), draw(phase), draw(phase),
                           q(draw(st.floats(-400, 0)), 4), q(draw(st.floats(-800, 0)), 4),
                           q(draw(st.floats(0, 24 - 1e-6)), 6))


# acceptance criterion number -> PASS/FAIL line, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}
N_CRITERIA = 10


def report(number, title, checks, elapsed, limit_s, details=""):
    """Record one acceptance line and fail the calling test if any check (or
    the runtime budget) fails."""
    checks = dict(checks)
    checks[f"runtime < {limit_s:g} s"] = elapsed < limit_s
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} ({title}) {elapsed:.2f} s"
    if details:
        line += f" | {details}"
    if failed:
        line += " | failed: " + "; ".join(failed)
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def random_records(rng, n):
    """``n`` records with every field drawn at its stored precision."""
    out = []
    ph = lambda: round(float(rng.uniform(-math.pi, math.pi - 1e-3)), 4)  # noqa: E731
    sn = lambda: round(float(rng.uniform(8.5, 60)), 4)  # noqa: E731
    for _ in range(n):
        mjd = round(float(rng.uniform(50000, 70000)), 6)
        f1 = round(float(rng.uniform(1405, 1450)), 6)
        df = round(float(rng.uniform(1e-6, 7)), 6)
        pulses = [PulseDetection(mjd, f, sn(), sn(), ph(), ph(), int(rng.integers(0, 2**24 + 1)))
                  for f in (f1, round(f1 + df, 6))]
        out.append(PulsePairRecord(pulses[0], pulses[1], df, ph(), ph(), ph(),
                                   round(float(rng.uniform(-400, 0)), 4), round(float(rng.uniform(-800, 0)), 4),
                                   round(float(rng.uniform(0, 24 - 1e-6)), 6)))
    return out
