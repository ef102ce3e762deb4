"""Sidereal time and two-element interferometer geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import wrap

JD_MJD_OFFSET = 2400000.5
J2000_JD = 2451545.0
SIDEREAL_RATE = 1.00273790935  # sidereal hours per solar hour
SIDEREAL_DAY = 1.0 / SIDEREAL_RATE  # solar days
RAD_TO_HOURS = 24.0 / (2 * math.pi)


@dataclass(frozen=True)
class FringeModel:
    baseline_lambda: float
    declination: float  # degrees
    reference_frequency: float = 1425.0  # MHz

    def __post_init__(self):
        if not self.baseline_lambda > 0:
            raise ValueError("baseline_lambda must be > 0")
        if not abs(self.declination) < 90:
            raise ValueError("declination must satisfy |dec| < 90")

    @classmethod
    def from_array(cls, array) -> "FringeModel":
        return cls(array.baseline_length, array.declination_pointing, array.reference_frequency)


def _check_mjd(mjd):
    m = np.asarray(mjd)
    if np.any((m < 40000) | (m > 80000)):
        raise ValueError("mjd out of range [40000, 80000]")


def gmst_hours(mjd):
    """Greenwich mean sidereal time (IAU 1982 polynomial), hours in [0, 24)."""
    _check_mjd(mjd)
    d = np.asarray(mjd, dtype=float) + (JD_MJD_OFFSET - J2000_JD)
    t = d / 36525.0
    deg = 280.46061837 + 360.98564736629 * d + t * t * (0.000387933 - t / 38710000.0)
    out = (deg % 360.0) / 15.0
    return float(out) if np.ndim(out) == 0 else out


def mjd_to_lst(mjd, site_longitude: float):
    """Local mean sidereal time in hours for a site at ``site_longitude`` degrees east."""
    lst = (np.asarray(gmst_hours(mjd)) + site_longitude / 15.0) % 24.0
    return float(lst) if np.ndim(lst) == 0 else lst


def next_lst_crossing(mjd: float, lst_target: float, site_longitude: float) -> float:
    """First MJD >= ``mjd`` at which the local sidereal time equals ``lst_target``."""
    ahead = (lst_target - mjd_to_lst(mjd, site_longitude)) % 24.0
    t = mjd + ahead / 24.0 * SIDEREAL_DAY
    # one Newton step absorbs the rate's slow drift
    err = (lst_target - mjd_to_lst(t, site_longitude) + 12.0) % 24.0 - 12.0
    return t + err / 24.0 * SIDEREAL_DAY


def perpendicular_hour_angle(array) -> float:
    """Hour angle (hours) where the baseline-perpendicular plane meets the pointing
    declination.  Zero for the meridian (azimuth 180 degrees)."""
    az = array.perpendicular_azimuth % 360.0
    if abs(az - 180.0) < 1e-12:
        return 0.0
    from scipy.optimize import brentq

    lat = math.radians(array.site_latitude)
    dec = math.radians(array.declination_pointing)

    def azimuth(h_hours):
        h = h_hours * math.pi / 12
        # azimuth measured from north through east
        y = -math.cos(dec) * math.sin(h)
        x = math.sin(dec) * math.cos(lat) - math.cos(dec) * math.cos(h) * math.sin(lat)
        return math.degrees(math.atan2(y, x)) % 360.0

    def f(h):
        return (azimuth(h) - az + 180.0) % 360.0 - 180.0

    grid = np.linspace(-5.99, 5.99, 1199)
    vals = np.array([f(h) for h in grid])
    # sign changes that are not the 360-degree wrap
    idx = np.flatnonzero((np.sign(vals[:-1]) != np.sign(vals[1:])) & (np.abs(vals[:-1] - vals[1:]) < 90))
    if idx.size == 0:
        raise ValueError("baseline-perpendicular plane does not meet the pointing declination")
    i = idx[np.argmin(np.abs(grid[idx]))]
    return brentq(f, grid[i], grid[i + 1])


def record_ra(mjd, array):
    """RA (hours) of the sky direction in the baseline-perpendicular plane at ``mjd``."""
    lst = np.asarray(mjd_to_lst(mjd, array.site_longitude))
    ra = (lst - perpendicular_hour_angle(array)) % 24.0
    return float(ra) if np.ndim(ra) == 0 else ra


def fringe_period(model: FringeModel) -> float:
    """RA hours between integer-wavelength geometric-delay aliases."""
    c = math.cos(math.radians(model.declination))
    if c <= 0.05:
        raise ValueError("fringe period undefined near pole")
    return RAD_TO_HOURS / (model.baseline_lambda * c)


def interferometer_phase(hour_angle_offset, model: FringeModel, rf_frequency):
    """West-minus-East geometric phase (radians, wrapped) for a source
    ``hour_angle_offset`` hours past the perpendicular plane."""
    h = np.asarray(hour_angle_offset, dtype=float)
    if np.any(np.abs(h) >= 6):
        raise ValueError("|hour_angle_offset| must be < 6 hr")
    scale = 2 * math.pi * model.baseline_lambda * math.cos(math.radians(model.declination))
    phase = wrap(scale * (np.asarray(rf_frequency) / model.reference_frequency) * np.sin(h / RAD_TO_HOURS))
    return float(phase) if np.ndim(phase) == 0 else phase


def delay_phase_sensitivity(frequency_scale: float, delay_uncertainty: float) -> float:
    """Phase error bound 2*pi*f*dtau, MHz times microseconds."""
    if frequency_scale < 0 or delay_uncertainty < 0:
        raise ValueError("inputs must be >= 0")
    return 2 * math.pi * frequency_scale * delay_uncertainty


def doppler_spread(circumference_lambda: float, revolutions_per_second: float) -> float:
    """Half-width (Hz) of the Doppler spread of a rotating radiator."""
    if circumference_lambda < 0 or revolutions_per_second < 0:
        raise ValueError("inputs must be >= 0")
    return circumference_lambda * revolutions_per_second


def hour_angle(mjd, ra, site_longitude):
    """Hour angle LST - RA folded into [-12, 12)."""
    return (np.asarray(mjd_to_lst(mjd, site_longitude)) - ra + 12.0) % 24.0 - 12.0
