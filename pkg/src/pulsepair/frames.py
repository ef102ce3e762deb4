"""ChannelFrame and its little-endian binary dump.

Dump layout: header ``<4s H I d d`` (magic ``PPCF``, version 1, bin count,
bin0 frequency in MHz, bin width in Hz), then per frame a float64 MJD followed
by ``bin count`` groups of four float32 (East re, East im, West re, West im).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"PPCF"
VERSION = 1
_HEADER = struct.Struct("<4sHIdd")


@dataclass(frozen=True, eq=False)
class ChannelFrame:
    mjd: float
    east: np.ndarray
    west: np.ndarray
    bin0_frequency: float  # MHz
    bin_width: float  # Hz

    def __post_init__(self):
        if self.east.shape != self.west.shape or self.east.ndim != 1:
            raise ValueError("east and west must be equal-length 1-D arrays")
        self.east.flags.writeable = False
        self.west.flags.writeable = False

    def __len__(self):
        return self.east.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        return self.bin0_frequency + np.arange(len(self)) * (self.bin_width * 1e-6)


def write_frames(path, frames) -> int:
    n = 0
    with open(path, "wb") as fh:
        head = None
        for fr in frames:
            if head is None:
                head = (len(fr), fr.bin0_frequency, fr.bin_width)
                fh.write(_HEADER.pack(MAGIC, VERSION, *head))
            elif (len(fr), fr.bin0_frequency, fr.bin_width) != head:
                raise ValueError("frames in one dump must share the bin layout")
            body = np.empty((len(fr), 4), dtype="<f4")
            body[:, 0], body[:, 1] = fr.east.real, fr.east.imag
            body[:, 2], body[:, 3] = fr.west.real, fr.west.imag
            fh.write(struct.pack("<d", fr.mjd))
            fh.write(body.tobytes())
            n += 1
    return n


def read_frames(path):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if not raw:
            return
        magic, version, nbins, bin0, width = _HEADER.unpack(raw)
        if magic != MAGIC or version != VERSION:
            raise ValueError("not a PPCF v1 frame dump")
        size = nbins * 16
        while True:
            t = fh.read(8)
            if not t:
                return
            body = np.frombuffer(fh.read(size), dtype="<f4").reshape(nbins, 4)
            east = (body[:, 0] + 1j * body[:, 1]).astype(np.complex128)
            west = (body[:, 2] + 1j * body[:, 3]).astype(np.complex128)
            yield ChannelFrame(struct.unpack("<d", t)[0], east, west, bin0, width)
