"""Narrowband pulse-pair discovery with a two-element interferometer.

Synthesize observations, channelize and threshold, pair same-integration
pulses, excise RFI, bin by right ascension and rank bins with a sorted
binomial scan.  See :mod:`pulsepair.pipeline` for the end-to-end run.
"""

from .config import ScenarioConfig, load_config, validate_config
from .records import PulseDetection, PulsePairRecord, read_records, write_records

__all__ = [
    "ScenarioConfig",
    "load_config",
    "validate_config",
    "PulseDetection",
    "PulsePairRecord",
    "read_records",
    "write_records",
]
