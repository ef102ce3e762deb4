"""Solve for the site longitude that maps the reference record's MJD to its
stored RA under mean sidereal time and the baseline-perpendicular hour angle."""

import argparse

from scipy.optimize import brentq

from pulsepair.config import RECONCILED_LONGITUDE, ArrayConfig
from pulsepair.skygeom import perpendicular_hour_angle, record_ra

MJD, RA = 60564.439135, 5.160117


def residual(lon: float) -> float:
    r = float(record_ra(MJD, ArrayConfig(site_longitude=lon))) - RA
    return (r + 12) % 24 - 12


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=-80.0)
    ap.add_argument("--hi", type=float, default=-60.0)
    args = ap.parse_args()
    lon = brentq(residual, args.lo, args.hi, xtol=1e-10)
    arr = ArrayConfig(site_longitude=lon)
    print(f"perpendicular hour angle: {perpendicular_hour_angle(arr):.6f} hr")
    print(f"solved longitude: {lon:.6f} deg (configured {RECONCILED_LONGITUDE})")
    print(f"record RA at configured longitude: "
          f"{float(record_ra(MJD, ArrayConfig(site_longitude=RECONCILED_LONGITUDE))):.6f} hr (target {RA})")


if __name__ == "__main__":
    main()
