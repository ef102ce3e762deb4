"""Detection and pulse-pair record types, plus the ``PPRv1`` text file format.

A record file starts with the header line ``PPRv1`` followed by one pair per
line, fields single-space separated in this order::

    mjd
    f1 snr_e1 snr_w1 phase_e1 phase_w1 bin1     (first = lower RF pulse)
    f2 snr_e2 snr_w2 phase_e2 phase_w2 bin2
    delta_f d_ew_phi_first d_ew_phi_second d_df_d_ew_phi
    llsnr_pulse llsnr_pair ra

MJD is written with 6 decimals, frequencies and RA with 6, SNRs, phases and
log-likelihoods with 4.  The segment index is not stored; it is derived from
the bin index.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .config import FILES_PER_DAY, SEGMENT_BINS

HEADER = "PPRv1"
TWO_PI = 2 * math.pi
_PI4 = round(math.pi, 4)  # 3.1416, the stored form of +-pi


def wrap(phase):
    """Wrap radians into [-pi, pi); works on floats and numpy arrays."""
    return (phase + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class PulseDetection:
    mjd: float
    rf_frequency: float  # MHz
    snr_east: float  # dB
    snr_west: float  # dB
    phase_east: float  # radians
    phase_west: float
    bin_index: int

    @property
    def segment_index(self) -> int:
        return self.bin_index // SEGMENT_BINS

    @property
    def d_ew_phi(self) -> float:
        """West-minus-East phase, wrapped."""
        return wrap(self.phase_west - self.phase_east)


@dataclass(frozen=True)
class PulsePairRecord:
    first: PulseDetection
    second: PulseDetection
    delta_f: float
    d_ew_phi_first: float
    d_ew_phi_second: float
    d_df_d_ew_phi: float
    llsnr_pulse: float
    llsnr_pair: float
    ra: float = math.nan

    @property
    def mjd(self) -> float:
        return self.first.mjd

    @property
    def file_index(self) -> int:
        return file_index(self.first.mjd)


def file_index(mjd: float) -> int:
    """Four-hour file window holding ``mjd``; windows are half-open [k/6, (k+1)/6)
    with the edges as computed by :func:`file_window`."""
    k = math.floor(mjd * FILES_PER_DAY)
    if mjd >= (k + 1) / FILES_PER_DAY:
        return k + 1
    if mjd < k / FILES_PER_DAY:
        return k - 1
    return k


def file_window(index: int) -> tuple[float, float]:
    return index / FILES_PER_DAY, (index + 1) / FILES_PER_DAY


class RecordFormatError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


def _phase(x: float) -> str:
    q = round(x, 4)
    if q >= _PI4:
        q = -_PI4
    return f"{q:.4f}".replace("-0.0000", "0.0000")


def _f(x: float, digits: int) -> str:
    s = f"{x:.{digits}f}"
    # -0.0 and values rounding to zero print without sign
    if s.lstrip("-").strip("0.") == "":
        s = s.lstrip("-")
    return s


def _pulse_fields(p: PulseDetection) -> list[str]:
    return [
        _f(p.rf_frequency, 6),
        _f(p.snr_east, 4),
        _f(p.snr_west, 4),
        _phase(p.phase_east),
        _phase(p.phase_west),
        str(int(p.bin_index)),
    ]


def encode_pair_record(r: PulsePairRecord) -> str:
    parts = [_f(r.first.mjd, 6)]
    parts += _pulse_fields(r.first)
    parts += _pulse_fields(r.second)
    parts += [
        _f(r.delta_f, 6),
        _phase(r.d_ew_phi_first),
        _phase(r.d_ew_phi_second),
        _phase(r.d_df_d_ew_phi),
        _f(r.llsnr_pulse, 4),
        _f(r.llsnr_pair, 4),
        _f(r.ra, 6) if math.isfinite(r.ra) else "nan",
    ]
    return " ".join(parts)


N_FIELDS = 1 + 6 + 6 + 4 + 3


def _check_phase(x, name, lineno):
    if not -math.pi - 1e-4 <= x < math.pi:
        raise RecordFormatError(f"{name} out of [-pi, pi): {x}", lineno)


def decode_pair_record(line: str, lineno: int | None = None) -> PulsePairRecord:
    tokens = line.split()
    if len(tokens) != N_FIELDS:
        raise RecordFormatError(f"expected {N_FIELDS} fields, got {len(tokens)}", lineno)
    try:
        mjd = float(tokens[0])
        pulses = []
        for off in (1, 7):
            f, se, sw, pe, pw = (float(t) for t in tokens[off : off + 5])
            b = int(tokens[off + 5])
            _check_phase(pe, "phase_east", lineno)
            _check_phase(pw, "phase_west", lineno)
            pulses.append(PulseDetection(mjd, f, se, sw, pe, pw, b))
        df, p1, p2, pp, lp, lpp = (float(t) for t in tokens[13:19])
        ra = float(tokens[19])
    except ValueError as exc:
        if isinstance(exc, RecordFormatError):
            raise
        raise RecordFormatError(str(exc), lineno) from None
    for x, name in ((p1, "d_ew_phi_first"), (p2, "d_ew_phi_second"), (pp, "d_df_d_ew_phi")):
        _check_phase(x, name, lineno)
    if not df > 0:
        raise RecordFormatError("delta_f must be > 0", lineno)
    return PulsePairRecord(pulses[0], pulses[1], df, p1, p2, pp, lp, lpp, ra)


def quantize(r: PulsePairRecord) -> PulsePairRecord:
    """The record as it reads back from a file."""
    return decode_pair_record(encode_pair_record(r))


def write_records(path, records) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(HEADER + "\n")
        for r in records:
            fh.write(encode_pair_record(r) + "\n")
    os.replace(tmp, path)


def read_records(path, errors: list | None = None) -> list[PulsePairRecord]:
    """Read a record file.  Malformed lines are skipped and appended to
    ``errors`` when given, otherwise the first one is raised."""
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise RecordFormatError(f"bad header {header!r}", 1)
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                out.append(decode_pair_record(line, lineno))
            except RecordFormatError as exc:
                if errors is None:
                    raise
                errors.append(exc)
    return out


def record_filename(index: int) -> str:
    return f"ppr_{index}.txt"


def partition_by_file(records) -> dict[int, list[PulsePairRecord]]:
    groups: dict[int, list[PulsePairRecord]] = {}
    for r in records:
        groups.setdefault(r.file_index, []).append(r)
    return dict(sorted(groups.items()))


def with_ra(r: PulsePairRecord, ra: float) -> PulsePairRecord:
    return replace(r, ra=ra)
