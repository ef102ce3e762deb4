"""Scenario configuration: typed, frozen dataclasses and the key=value text format.

A configuration file holds one ``key = value`` pair per line; ``#`` starts a
comment.  Scalar keys name a field of one of the sub-configs below (names are
unique across them).  Injected emitters use dotted keys, e.g.
``source.beacon.ra = 5.1675`` or ``rfi.radar.snr = 30``.  List-valued fields
use JSON syntax (``rf_bands = [[1405, 1424], [1426, 1455]]``).

Omitted fields take the values of the observing run this package models
(33 wavelength East-West baseline, -82 ns instrument delay, 8.5 dB threshold,
1600 RA bins per day, ...).  ``site_longitude`` has no such default and must
be given.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, fields
from typing import Any

FULL_SCALE_FFT_LENGTH = 2**24
SAMPLE_RATE_MSPS = 62.5
FULL_SCALE_BIN_WIDTH = SAMPLE_RATE_MSPS * 1e6 / FULL_SCALE_FFT_LENGTH  # 3.7253 Hz
SEGMENT_BINS = 256
FILES_PER_DAY = 6  # four-hour record files

# Site longitude at which the MJD 60564.439135 / RA 5.160117 hr record of the
# modelled run is reproduced by mean sidereal time.
RECONCILED_LONGITUDE = -71.6267


class ConfigError(ValueError):
    """Raised by :func:`validate_config`; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Law:
    """A scalar distribution: ``fixed v``, ``uniform lo hi`` or ``comb [jitter]``."""

    kind: str
    params: tuple[float, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Law":
        parts = str(text).replace(",", " ").split()
        if not parts:
            raise ValueError("empty distribution")
        kind = parts[0].lower()
        params = tuple(float(p) for p in parts[1:])
        want = {"fixed": (1, 1), "uniform": (2, 2), "comb": (0, 1)}
        if kind not in want:
            raise ValueError(f"unknown distribution {kind!r}")
        lo, hi = want[kind]
        if not lo <= len(params) <= hi:
            raise ValueError(f"{kind} takes {lo}-{hi} parameters")
        if kind == "uniform" and params[0] > params[1]:
            raise ValueError("uniform low > high")
        return cls(kind, params)

    def __str__(self):
        return " ".join([self.kind, *(repr(p) for p in self.params)])


@dataclass(frozen=True)
class ArrayConfig:
    baseline_length: float = 33.0  # wavelengths at reference_frequency
    reference_frequency: float = 1425.0  # MHz
    perpendicular_azimuth: float = 180.0  # degrees
    site_longitude: float = math.nan  # degrees east, required
    declination_pointing: float = -7.6  # degrees
    site_latitude: float = 38.43  # degrees, only used off-meridian


@dataclass(frozen=True)
class InstrumentConfig:
    tau_int: float = -0.082  # microseconds, West minus East
    phase_detector_offset: float = 0.0  # radians
    snr_threshold: float = 8.5  # dB
    integration_interval: float = 3.0  # seconds between triggered integrations
    fft_bin_width: float = FULL_SCALE_BIN_WIDTH  # Hz
    integration_time: float = 1.0 / FULL_SCALE_BIN_WIDTH  # seconds
    rf_bands: tuple[tuple[float, float], ...] = ((1405.0, 1424.0), (1426.0, 1455.0))
    sample_rate: float = SAMPLE_RATE_MSPS  # Msps
    lo_frequency: float = 1425.0  # MHz
    channel_count: int = 2**14  # bins per synthesized frame
    channel_start_frequency: float = 1419.0  # MHz, RF of bin 0 in frames


@dataclass(frozen=True)
class PostFilterConfig:
    delta_f_range: tuple[float, float] = (1e-6, 7.0)  # MHz
    d_df_d_ew_phi_window: float = 0.8
    d_ew_phi_window: float = 0.1
    d_ew_phi_offset: float = 0.0
    rfi_margin_segments: int = 500
    llsnr_pulse_threshold: float = -1.6
    llsnr_pair_threshold: float = -2.7
    ra_bins_per_24h: int = 1600


@dataclass(frozen=True)
class AnalysisConfig:
    ra_range: tuple[float, float] = (1.5, 9.0)  # hours, analyzed RA range
    rfi_count_criterion: int = 20  # detections per segment per file window
    kernel_width: float = 0.05  # radians, step-2 mode estimator
    phase_offset_override: float | None = None  # manual step-4 offset
    candidate_quantile: float = 0.999
    null_runs: int = 1000


@dataclass(frozen=True)
class SynthConfig:
    synth_mode: str = "records"  # "records" (fast) or "frames"
    coverage: tuple[tuple[float, float], ...] = ((60564 + 2 / 6, 60564 + 3 / 6),)
    noise_pair_rate: float = 16.5  # noise pairs per frame, records mode
    noise_prefilter: bool = True
    seed: int = 0


@dataclass(frozen=True)
class InjectedSource:
    ra: float  # hours
    amplitude_snr: float  # dB per antenna at beam centre
    delta_f_law: Law = Law("uniform", (3.0, 6.5))  # MHz
    emission_schedule: float = 1.0  # pulse-pair events per active hour
    beam_fwhm: float | None = None  # degrees of RA arc; None = 4 fringe periods
    frequency_law: Law = Law("uniform")  # RF of the first pulse
    hour_angle_window: float | None = None  # hours; emit only this close to transit
    active: tuple[float, float] | None = None  # MJD interval
    name: str = ""


@dataclass(frozen=True)
class RFISource:
    center_frequency: float  # MHz
    bandwidth: float = 3.7253  # Hz
    on_fraction: float = 1.0
    snr: float = 30.0  # dB per bin
    active: tuple[float, float] | None = None  # MJD interval
    name: str = ""


@dataclass(frozen=True)
class ContinuumSource:
    """Broadband emitter (nebula-like); drives the cross-correlator traces."""

    ra: float
    snr: float = 0.0  # dB per bin at beam centre
    beam_fwhm: float | None = None
    name: str = ""


@dataclass(frozen=True)
class ScenarioConfig:
    array: ArrayConfig = field(default_factory=ArrayConfig)
    instrument: InstrumentConfig = field(default_factory=InstrumentConfig)
    post: PostFilterConfig = field(default_factory=PostFilterConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    sources: tuple[InjectedSource, ...] = ()
    rfi: tuple[RFISource, ...] = ()
    continuum: tuple[ContinuumSource, ...] = ()

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with flat field overrides, e.g. ``replace(tau_int=0.0)``."""
        parts = {name: {} for name in _SECTIONS}
        for key, value in changes.items():
            if key in ("sources", "rfi", "continuum"):
                continue
            if key not in _FIELD_SECTION:
                raise KeyError(key)
            parts[_FIELD_SECTION[key]][key] = value
        new = {
            name: dataclasses.replace(getattr(self, name), **kw)
            for name, kw in parts.items()
        }
        for key in ("sources", "rfi", "continuum"):
            new[key] = tuple(changes.get(key, getattr(self, key)))
        return ScenarioConfig(**new)


_SECTIONS = {
    "array": ArrayConfig,
    "instrument": InstrumentConfig,
    "post": PostFilterConfig,
    "analysis": AnalysisConfig,
    "synth": SynthConfig,
}
_FIELD_SECTION = {f.name: sec for sec, cls in _SECTIONS.items() for f in fields(cls)}
_GROUPS = {"source": InjectedSource, "rfi": RFISource, "continuum": ContinuumSource}


def _field_types(cls):
    return {f.name: f.type for f in fields(cls)}


def _coerce(raw: str, type_name: str) -> Any:
    text = raw.strip()
    optional = "None" in type_name
    if optional and text.lower() in ("none", ""):
        return None
    base = type_name.replace(" | None", "")
    if base == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    if base == "str":
        return text
    if base == "Law":
        return Law.parse(text)
    if base.startswith("tuple[tuple"):
        value = json.loads(text)
        return tuple((float(a), float(b)) for a, b in value)
    if base.startswith("tuple"):
        a, b = json.loads(text)
        return (float(a), float(b))
    raise TypeError(base)


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return json.dumps(value).replace("(", "[").replace(")", "]")
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> dict[str, str]:
    """Split config text into an ordered key -> raw value mapping."""
    items: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected key = value"])
        key, value = line.split("=", 1)
        items[key.strip()] = value.strip()
    return items


def validate_config(text: str | dict[str, str]) -> ScenarioConfig:
    """Parse and check configuration text; raises :class:`ConfigError`."""
    raw = parse_config_text(text) if isinstance(text, str) else dict(text)
    errors: list[str] = []
    flat: dict[str, dict[str, Any]] = {name: {} for name in _SECTIONS}
    groups: dict[str, dict[str, dict[str, Any]]] = {g: {} for g in _GROUPS}

    for key, value in raw.items():
        if "." in key:
            group, _, rest = key.partition(".")
            name, _, attr = rest.rpartition(".")
            if group not in _GROUPS or not name:
                errors.append(f"unknown key: {key}")
                continue
            types = _field_types(_GROUPS[group])
            if attr not in types or attr == "name":
                errors.append(f"unknown key: {key}")
                continue
            try:
                groups[group].setdefault(name, {})[attr] = _coerce(value, types[attr])
            except (ValueError, TypeError) as exc:
                errors.append(f"{key}: {exc}")
            continue
        section = _FIELD_SECTION.get(key)
        if section is None:
            errors.append(f"unknown key: {key}")
            continue
        try:
            flat[section][key] = _coerce(value, _field_types(_SECTIONS[section])[key])
        except (ValueError, TypeError) as exc:
            errors.append(f"{key}: {exc}")

    parts = {}
    for name, cls in _SECTIONS.items():
        parts[name] = cls(**flat[name])
    emitters = {}
    for group, cls in _GROUPS.items():
        built = []
        for name, kw in groups[group].items():
            try:
                built.append(cls(name=name, **kw))
            except TypeError as exc:
                errors.append(f"{group}.{name}: {exc}")
        emitters[{"source": "sources"}.get(group, group)] = tuple(built)
    cfg = ScenarioConfig(**parts, **emitters)
    errors.extend(check_invariants(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def check_invariants(cfg: ScenarioConfig) -> list[str]:
    errors = []
    a, ins, post, an, syn = cfg.array, cfg.instrument, cfg.post, cfg.analysis, cfg.synth
    if not math.isfinite(a.site_longitude):
        errors.append("site_longitude is required")
    if not a.baseline_length > 0:
        errors.append("baseline_length must be > 0")
    if not a.reference_frequency > 0:
        errors.append("reference_frequency must be > 0")
    if not 0 <= a.perpendicular_azimuth < 360:
        errors.append("perpendicular_azimuth must be in [0, 360)")
    if not abs(a.declination_pointing) < 90:
        errors.append("declination_pointing must satisfy |dec| < 90")

    if not ins.fft_bin_width > 0:
        errors.append("fft_bin_width must be > 0")
    elif abs(ins.integration_time * ins.fft_bin_width - 1) > 0.05:
        errors.append("integration_time must be within 5% of 1/fft_bin_width")
    if not math.isfinite(ins.tau_int):
        errors.append("tau_int must be finite")
    if not ins.rf_bands:
        errors.append("rf_bands must not be empty")
    for lo, hi in ins.rf_bands:
        if not lo < hi:
            errors.append(f"band ({lo}, {hi}) must have low < high")
    for (lo1, hi1), (lo2, hi2) in zip(ins.rf_bands, ins.rf_bands[1:]):
        if lo2 < hi1:
            errors.append("bands overlap" if lo2 >= lo1 else "bands must be ascending")
    if ins.channel_count < 1:
        errors.append("channel_count must be >= 1")
    sub_lo = ins.channel_start_frequency
    sub_hi = sub_lo + ins.channel_count * ins.fft_bin_width * 1e-6
    if not any(lo <= sub_lo and sub_hi <= hi for lo, hi in ins.rf_bands):
        errors.append("channel sub-band must lie inside one rf_band")

    for name in ("d_df_d_ew_phi_window", "d_ew_phi_window"):
        if getattr(post, name) < 0:
            errors.append(f"{name} must be >= 0")
    if post.rfi_margin_segments < 0:
        errors.append("rfi_margin_segments must be >= 0")
    if post.ra_bins_per_24h <= 0:
        errors.append("ra_bins_per_24h must be > 0")
    if not post.delta_f_range[0] < post.delta_f_range[1]:
        errors.append("delta_f_range must have low < high")

    if not 0 <= an.ra_range[0] < an.ra_range[1] <= 24:
        errors.append("ra_range must satisfy 0 <= low < high <= 24")
    if an.kernel_width <= 0:
        errors.append("kernel_width must be > 0")
    if not 0 < an.candidate_quantile < 1:
        errors.append("candidate_quantile must be in (0, 1)")

    if syn.synth_mode not in ("records", "frames"):
        errors.append("synth_mode must be 'records' or 'frames'")
    if not syn.coverage:
        errors.append("coverage must not be empty")
    for (s1, e1) in syn.coverage:
        if not s1 < e1:
            errors.append(f"coverage interval ({s1}, {e1}) must have start < end")
    for (_, e1), (s2, _) in zip(syn.coverage, syn.coverage[1:]):
        if s2 < e1:
            errors.append("coverage intervals must be ascending and non-overlapping")
    if syn.noise_pair_rate < 0:
        errors.append("noise_pair_rate must be >= 0")

    for s in cfg.sources:
        if s.emission_schedule < 0:
            errors.append(f"source.{s.name}: emission_schedule must be >= 0")
        if s.amplitude_snr < ins.snr_threshold:
            errors.append(f"source.{s.name}: amplitude_snr below snr_threshold")
    for r in cfg.rfi:
        if not 0 <= r.on_fraction <= 1:
            errors.append(f"rfi.{r.name}: on_fraction must be in [0, 1]")
        if not 0 < r.bandwidth <= 10 * SEGMENT_BINS * FULL_SCALE_BIN_WIDTH:
            errors.append(f"rfi.{r.name}: bandwidth must be in (0, 10 segments]")
    return errors


def config_to_text(cfg: ScenarioConfig) -> str:
    """Canonical text form; ``validate_config(config_to_text(c)) == c``."""
    lines = []
    for name in _SECTIONS:
        lines.append(f"# {name}")
        sub = getattr(cfg, name)
        for f in fields(sub):
            lines.append(f"{f.name} = {_render(getattr(sub, f.name))}")
    for group, attr in (("source", "sources"), ("rfi", "rfi"), ("continuum", "continuum")):
        for i, item in enumerate(getattr(cfg, attr)):
            label = item.name or f"{group}{i}"
            for f in fields(item):
                if f.name == "name":
                    continue
                lines.append(f"{group}.{label}.{f.name} = {_render(getattr(item, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return validate_config(fh.read())
