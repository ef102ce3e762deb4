"""End-to-end discovery: synthesis or record input, excision, post-filters,
the four scans and the associated-measurement tables.

Step order is enforced by :class:`Discovery`: the step-4 offset can only come
from step 2 on the same filtered dataset (or from an explicit override that
is recorded in the manifest).
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import NullDistribution, null_distribution, write_calibration_csv
from .channelizer import detect_pulses
from .config import ScenarioConfig, config_to_text
from .pairer import form_pairs
from .records import (
    PulsePairRecord,
    file_index,
    partition_by_file,
    quantize,
    read_records,
    record_filename,
    with_ra,
    write_records,
)
from .rfi import SegmentMap, excise_windows, read_segment_counts, write_segment_counts
from .scan import (
    BinScanResult,
    ExposureModel,
    PhaseOffsetEstimate,
    compute_exposure,
    estimate_phase_offset,
    post_filter,
    ra_bin,
    sorted_scan,
    triangular_kde,
)
from .skygeom import record_ra
from .synthgen import synthesize_records, synthesize_run

STEP1_KEY = "abs_d_df_d_ew_phi"
PHASE_KEY = "abs_d_ew_phi_plus_offset"


# --------------------------------------------------------------------------
# inputs


@dataclass
class Observation:
    records: list[PulsePairRecord]
    segment_counts: dict[int, dict[int, int]]
    coverage: tuple[tuple[float, float], ...]


def frames_to_observation(config: ScenarioConfig, frames) -> Observation:
    """Detect, count and pair every frame of a channel-level stream."""
    ins, post = config.instrument, config.post
    counts: dict[int, dict[int, int]] = {}
    records = []
    for fr in frames:
        dets = detect_pulses(fr, ins.snr_threshold)
        if not dets:
            continue
        seg = counts.setdefault(file_index(fr.mjd), {})
        for d in dets:
            seg[d.segment_index] = seg.get(d.segment_index, 0) + 1
        records.extend(form_pairs(dets, post.delta_f_range, ins.tau_int))
    if records:
        ras = np.atleast_1d(record_ra(np.array([r.mjd for r in records]), config.array))
        records = [with_ra(r, float(x)) for r, x in zip(records, ras)]
    return Observation(records, counts, tuple(config.synth.coverage))


def synthesize(config: ScenarioConfig, seed=None) -> Observation:
    seed = config.synth.seed if seed is None else seed
    if config.synth.synth_mode == "frames":
        obs = frames_to_observation(config, synthesize_run(config, seed=seed))
    elif config.synth.synth_mode == "records":
        res = synthesize_records(config, seed=seed)
        obs = Observation(res.records, res.segment_counts, res.coverage)
    else:
        raise ValueError(f"unknown synth_mode {config.synth.synth_mode!r}")
    obs.records = [quantize(r) for r in obs.records]
    return obs


def write_observation(obs: Observation, out_dir, config: ScenarioConfig) -> list[Path]:
    """Record files (one per four-hour window), segment counts and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for idx, recs in sorted(partition_by_file(obs.records).items()):
        p = out / record_filename(idx)
        write_records(p, recs)
        paths.append(p)
    write_segment_counts(out / "segments.txt", obs.segment_counts)
    (out / "manifest.txt").write_text(config_to_text(config))
    return paths


def load_observation(records_dir, config: ScenarioConfig) -> Observation:
    d = Path(records_dir)
    files = sorted(d.glob("ppr_*.txt"))
    if not files:
        raise FileNotFoundError(f"no record files in {d}")
    records = []
    for f in files:
        records.extend(read_records(f))
    seg_path = d / "segments.txt"
    counts = read_segment_counts(seg_path) if seg_path.exists() else _counts_from_records(records)
    return Observation(records, counts, tuple(config.synth.coverage))


def _counts_from_records(records) -> dict[int, dict[int, int]]:
    """Fallback when detection counts were not stored: count the pulses of
    stored records, each distinct detection once."""
    seen = set()
    counts: dict[int, dict[int, int]] = {}
    for r in records:
        for p in (r.first, r.second):
            key = (p.mjd, p.bin_index)
            if key in seen:
                continue
            seen.add(key)
            seg = counts.setdefault(file_index(p.mjd), {})
            seg[p.segment_index] = seg.get(p.segment_index, 0) + 1
    return counts


def input_digest(records_dir) -> str:
    h = hashlib.sha256()
    for f in sorted(Path(records_dir).glob("*.txt")):
        if f.name == "manifest.txt":
            continue
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()


# --------------------------------------------------------------------------
# the discovery steps


class StepOrderError(RuntimeError):
    pass


class Discovery:
    """Steps 1-4 over one filtered dataset, in order."""

    def __init__(self, records, exposure: ExposureModel, config: ScenarioConfig):
        self.records = list(records)
        self.exposure = exposure
        self.config = config
        self.step1: BinScanResult | None = None
        self.estimate: PhaseOffsetEstimate | None = None
        self.offset: float | None = None
        self.offset_source = ""
        self.candidate_bin: int | None = None
        self.step3: BinScanResult | None = None
        self.step4: BinScanResult | None = None

    def run_step1(self) -> BinScanResult:
        self.step1 = sorted_scan(self.records, STEP1_KEY, 0.0, self.exposure)
        top = self.step1.top_bins(1)
        self.candidate_bin = top[0] if top else None
        return self.step1

    def run_step2(self) -> float:
        if self.step1 is None:
            raise StepOrderError("step 2 needs step 1")
        an = self.config.analysis
        self.estimate = None
        if self.candidate_bin is not None:
            try:
                self.estimate = estimate_phase_offset(
                    self.records, self.candidate_bin, an.kernel_width,
                    self.exposure.n_bins, self.config.post.d_ew_phi_window)
            except ValueError:
                self.estimate = None
        if an.phase_offset_override is not None:
            self.offset, self.offset_source = float(an.phase_offset_override), "override"
        elif self.estimate is not None and self.estimate.confident:
            self.offset, self.offset_source = self.estimate.offset, "estimated"
        else:
            self.offset, self.offset_source = 0.0, "low_confidence"
        return self.offset

    def run_step3(self) -> BinScanResult:
        if self.step1 is None:
            raise StepOrderError("step 3 needs step 1")
        self.step3 = sorted_scan(self.records, PHASE_KEY, 0.0, self.exposure)
        return self.step3

    def run_step4(self) -> BinScanResult:
        if self.offset is None:
            raise StepOrderError("step 4 needs the step-2 offset")
        self.step4 = sorted_scan(self.records, PHASE_KEY, self.offset, self.exposure)
        return self.step4

    def run(self) -> "Discovery":
        self.run_step1()
        self.run_step2()
        self.run_step3()
        self.run_step4()
        return self


@dataclass
class DiscoveryResult:
    config: ScenarioConfig
    seed: int | None
    discovery: Discovery
    null: NullDistribution | None
    threshold: float
    no_candidate: bool
    n_input: int
    n_after_excision: int
    excision_reports: list = field(default_factory=list)
    input_note: str = ""

    @property
    def records(self) -> list[PulsePairRecord]:
        return self.discovery.records

    @property
    def exposure(self) -> ExposureModel:
        return self.discovery.exposure

    def top_candidates(self, n: int = 5) -> list[int]:
        return self.discovery.step1.top_bins(n)


def analyze(obs: Observation, config: ScenarioConfig, seed=None, input_note: str = "") -> DiscoveryResult:
    post, an = config.post, config.analysis
    maps = {w: SegmentMap(w, c) for w, c in obs.segment_counts.items()}
    kept, reports = excise_windows(obs.records, maps, an.rfi_count_criterion, post.rfi_margin_segments)
    accepted = post_filter(kept, post, an.ra_range)
    exposure = compute_exposure(obs.coverage, post.ra_bins_per_24h, config.array, an.ra_range)
    disc = Discovery(accepted, exposure, config).run()
    null = None
    threshold = math.inf
    if accepted and an.null_runs >= 10:
        null = null_distribution(len(accepted), exposure, an.null_runs,
                                 seed=config.synth.seed if seed is None else seed)
        threshold = null.quantiles("run_max_d", (an.candidate_quantile,))[an.candidate_quantile]
    top = disc.step1.per_bin_max_d
    best = float(np.nanmax(top)) if np.any(np.isfinite(top)) else -math.inf
    return DiscoveryResult(config, seed, disc, null, threshold, not best > threshold,
                           len(obs.records), len(kept), reports, input_note)


def run_discovery(config: ScenarioConfig, seed=None, records_dir=None, out_dir=None,
                  figures: bool = True) -> DiscoveryResult:
    """Synthesize (or read) a dataset, run steps 1-4 and write the bundle."""
    if records_dir is not None:
        obs = load_observation(records_dir, config)
        note = f"records sha256 {input_digest(records_dir)}"
    else:
        obs = synthesize(config, seed)
        note = f"synthesized seed {config.synth.seed if seed is None else seed}"
    result = analyze(obs, config, seed, note)
    if out_dir is not None:
        write_bundle(result, out_dir)
        if figures:
            from .figures import emit_figures
            emit_figures(out_dir)
    return result


# --------------------------------------------------------------------------
# report bundle


def _fmt(x, digits=6) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "nan" if x is None or math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.{digits}f}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def write_scan_csv(scan: BinScanResult, records, exposure: ExposureModel, stem: Path) -> None:
    """``<stem>_points.csv`` (heap order) and ``<stem>_bins.csv``."""
    bw = exposure.bin_width
    rows = [[k + 1, _fmt(float(key)), _fmt(records[i].ra), b, _fmt(d)]
            for k, ((i, b, d), key) in enumerate(zip(scan.per_point, scan.keys))]
    _write_csv(stem.with_name(stem.name + "_points.csv"), ["rank", "key", "ra", "bin", "d"], rows)
    brows = []
    for b in np.flatnonzero(exposure.analyzed):
        brows.append([int(b), _fmt(b * bw, 4), int(scan.per_bin_count[b]), _fmt(float(exposure.bin_probability[b]), 8),
                      _fmt(float(scan.per_bin_max_d[b])), _fmt(float(scan.per_bin_final_d[b]))])
    _write_csv(stem.with_name(stem.name + "_bins.csv"), ["bin", "ra_start", "count", "p", "max_d", "final_d"], brows)


def _summary(result: DiscoveryResult) -> str:
    d = result.discovery
    est = d.estimate
    cb = d.candidate_bin
    bw = result.exposure.bin_width

    def at(scan):
        return _fmt(float(scan.per_bin_max_d[cb])) if cb is not None else "nan"

    lines = [
        f"input = {result.input_note}",
        f"records_in = {result.n_input}",
        f"records_after_excision = {result.n_after_excision}",
        f"records_accepted = {len(d.records)}",
        f"excluded_zero_probability = {len(d.step1.excluded)}",
        f"candidate_bin = {cb if cb is not None else 'none'}",
        f"candidate_ra = {_fmt(cb * bw, 4) if cb is not None else 'nan'}",
        f"top_candidates = {' '.join(str(b) for b in result.top_candidates())}",
        f"step1_max_d = {at(d.step1)}",
        f"step3_max_d_candidate = {at(d.step3)}",
        f"step4_max_d_candidate = {at(d.step4)}",
        f"phase_mode = {_fmt(est.mode) if est else 'nan'}",
        f"phase_mode_p_value = {_fmt(est.p_value, 8) if est else 'nan'}",
        f"offset = {_fmt(d.offset)}",
        f"offset_source = {d.offset_source}",
        f"null_threshold = {_fmt(result.threshold)}",
        f"candidate_status = {'no candidate' if result.no_candidate else 'candidate'}",
    ]
    if result.null is not None and cb is not None:
        lines.append(f"step1_empirical_p = {_fmt(result.null.p_value(float(d.step1.per_bin_max_d[cb])), 8)}")
    return "\n".join(lines) + "\n"


def write_bundle(result: DiscoveryResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = result.discovery
    recs, exp = d.records, result.exposure
    cfg = result.config if result.seed is None else result.config.replace(seed=result.seed)
    manifest = config_to_text(cfg)
    (out / "manifest.txt").write_text(f"# {result.input_note}\n" + manifest)
    (out / "summary.txt").write_text(_summary(result))
    for name, scan in (("step1", d.step1), ("step3", d.step3), ("step4", d.step4)):
        write_scan_csv(scan, recs, exp, out / name)

    # step 2: phases in the candidate bin and their density
    cb = d.candidate_bin
    w = result.config.analysis.kernel_width
    vals = np.array([r.d_ew_phi_first for r in recs if cb is not None and ra_bin(r.ra, exp.n_bins) == cb])
    _write_csv(out / "step2_phases.csv", ["d_ew_phi_first"], [[_fmt(float(v))] for v in np.sort(vals)])
    win = result.config.post.d_ew_phi_window
    grid = np.round(np.arange(-win - w, win + w + 5e-4, 1e-3), 6)
    dens = triangular_kde(vals, grid, w) if vals.size else np.zeros_like(grid)
    _write_csv(out / "step2_kde.csv", ["phase", "density"], [[_fmt(g), _fmt(float(x))] for g, x in zip(grid, dens)])

    # step 5: associated measurements
    nb = exp.n_bins
    cand = [cb is not None and ra_bin(r.ra, nb) == cb for r in recs]
    rows = [[_fmt(r.ra), ra_bin(r.ra, nb), int(c), _fmt(r.delta_f), _fmt(r.first.rf_frequency), _fmt(r.mjd)]
            for r, c in zip(recs, cand)]
    _write_csv(out / "assoc_ra.csv", ["ra", "bin", "candidate", "delta_f", "rf_frequency", "mjd"], rows)
    zoom = [[_fmt(r.mjd), _fmt(r.ra), _fmt(r.first.rf_frequency), _fmt(r.delta_f), _fmt(r.first.snr_east, 4),
             _fmt(r.first.snr_west, 4), _fmt(r.d_ew_phi_first, 4), _fmt(r.d_df_d_ew_phi, 4), _fmt(r.llsnr_pulse, 4),
             _fmt(r.llsnr_pair, 4)] for r, c in zip(recs, cand) if c]
    _write_csv(out / "candidate_bin.csv", ["mjd", "ra", "rf_frequency", "delta_f", "snr_east", "snr_west",
                                           "d_ew_phi_first", "d_df_d_ew_phi", "llsnr_pulse", "llsnr_pair"], zoom)
    _write_csv(out / "exposure.csv", ["bin", "ra_start", "dwell_hours", "p"],
               [[int(b), _fmt(b * exp.bin_width, 4), _fmt(float(exp.dwell[b])), _fmt(float(exp.bin_probability[b]), 8)]
                for b in range(nb)])
    edges = np.round(np.arange(-40.0, 0.0 + 1e-9, 0.5), 3)
    for name, attr in (("llsnr_pulse", "llsnr_pulse"), ("llsnr_pair", "llsnr_pair")):
        v = np.array([getattr(r, attr) for r in recs])
        vc = np.array([getattr(r, attr) for r, c in zip(recs, cand) if c])
        h_all = np.histogram(np.clip(v, edges[0], edges[-1]), edges)[0] if v.size else np.zeros(edges.size - 1, int)
        h_c = np.histogram(np.clip(vc, edges[0], edges[-1]), edges)[0] if vc.size else np.zeros(edges.size - 1, int)
        _write_csv(out / f"{name}_hist.csv", ["lo", "hi", "all", "candidate"],
                   [[_fmt(a, 2), _fmt(b, 2), int(x), int(y)] for a, b, x, y in zip(edges[:-1], edges[1:], h_all, h_c)])
    counts = d.step4.per_bin_count
    n = counts.sum()
    p = exp.bin_probability
    _write_csv(out / "bin_counts.csv", ["bin", "ra_start", "count", "expected", "sigma"],
               [[int(b), _fmt(b * exp.bin_width, 4), int(counts[b]), _fmt(n * p[b], 4),
                 _fmt(math.sqrt(n * p[b] * (1 - p[b])), 4)] for b in np.flatnonzero(exp.analyzed)])
    if result.null is not None:
        write_calibration_csv(result.null, out / "calibration.csv")
    with open(out / "excision.txt", "w") as fh:
        for rep in result.excision_reports:
            if rep.flagged:
                fh.write(rep.to_text())
    return out
