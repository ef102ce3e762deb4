"""Static SVG renderings of a report bundle.

Every figure is drawn from the bundle's CSV tables alone, with fixed
matplotlib settings (Agg backend, fixed hash salt, no timestamp, text kept
as text) so the same bundle always yields byte-identical SVGs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REFERENCE_D = 4.4

_RC = {
    "svg.hashsalt": "pulsepair",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "path.simplify": False,
}

PANEL_KEYS = (
    "baseline_length", "declination_pointing", "tau_int", "snr_threshold", "delta_f_range",
    "d_df_d_ew_phi_window", "d_ew_phi_window", "rfi_margin_segments", "llsnr_pulse_threshold",
    "llsnr_pair_threshold", "ra_bins_per_24h", "ra_range",
)
SUMMARY_KEYS = ("records_accepted", "candidate_bin", "offset", "offset_source", "candidate_status")


def _read(path: Path):
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _col(rows, name, cast=float):
    return [cast(r[name]) for r in rows]


def _kv(path: Path) -> dict[str, str]:
    out = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if "=" in line and not line.startswith("#"):
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def _panel_text(bundle: Path) -> str:
    man = _kv(bundle / "manifest.txt")
    summ = _kv(bundle / "summary.txt")
    lines = [f"{k} = {man[k]}" for k in PANEL_KEYS if k in man]
    lines += [f"{k} = {summ[k]}" for k in SUMMARY_KEYS if k in summ]
    return "\n".join(lines)


def _figure(panel: str):
    fig = plt.figure(figsize=(9, 4.5))
    ax = fig.add_axes((0.08, 0.12, 0.6, 0.8))
    fig.text(0.71, 0.92, panel, va="top", ha="left", family="monospace", fontsize=6)
    return fig, ax


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _scan_figure(bundle, stem, title, panel, out):
    rows = _read(bundle / f"{stem}_points.csv")
    fig, ax = _figure(panel)
    ra = _col(rows, "ra")
    d = _col(rows, "d")
    ax.scatter(ra, d, s=4, c="tab:blue", linewidths=0)
    ax.axhline(REFERENCE_D, color="tab:red", lw=0.8, ls="--", label=f"d = {REFERENCE_D}")
    ax.set_xlabel("RA (hr)")
    ax.set_ylabel("Cohen's d")
    ax.set_title(title)
    ax.legend(loc="upper right")
    _save(fig, out / f"{stem}_d_vs_ra.svg")


def _xy_figure(rows, x, y, xlabel, ylabel, title, panel, path, highlight="candidate"):
    fig, ax = _figure(panel)
    xs, ys = _col(rows, x), _col(rows, y)
    ax.scatter(xs, ys, s=3, c="tab:gray", linewidths=0, label="all")
    if rows and highlight in rows[0]:
        sel = [r for r in rows if r[highlight] == "1"]
        ax.scatter(_col(sel, x), _col(sel, y), s=8, c="tab:red", linewidths=0, label="candidate bin")
        ax.legend(loc="upper right")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path)


def _hist_figure(rows, xlabel, title, panel, path):
    fig, ax = _figure(panel)
    lo = _col(rows, "lo")
    hi = _col(rows, "hi")
    width = [b - a for a, b in zip(lo, hi)]
    ax.bar(lo, _col(rows, "all", int), width=width, align="edge", color="tab:gray", label="all")
    ax.bar(lo, _col(rows, "candidate", int), width=width, align="edge", color="tab:red", label="candidate bin")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("pulse pairs")
    ax.set_title(title)
    ax.legend(loc="upper left")
    _save(fig, path)


def emit_figures(bundle_dir) -> list[Path]:
    """Write one SVG per figure analogue into the bundle directory."""
    bundle = Path(bundle_dir)
    out = bundle
    panel = _panel_text(bundle)
    with plt.rc_context(_RC):
        _scan_figure(bundle, "step1", "Step 1: sorted by |corrected pair phase difference|", panel, out)
        _scan_figure(bundle, "step3", "Step 3: sorted by |West-East phase|", panel, out)
        _scan_figure(bundle, "step4", "Step 4: sorted by |West-East phase + offset|", panel, out)

        kde = _read(bundle / "step2_kde.csv")
        ph = _read(bundle / "step2_phases.csv")
        fig, ax = _figure(panel)
        ax.plot(_col(kde, "phase"), _col(kde, "density"), color="tab:blue", lw=1)
        vals = _col(ph, "d_ew_phi_first")
        ax.plot(vals, [0.0] * len(vals), "|", color="tab:red", ms=12)
        ax.set_xlabel("West-East phase of first pulse (rad)")
        ax.set_ylabel("kernel density")
        ax.set_title("Step 2: phase cluster in candidate bin")
        _save(fig, out / "step2_phase_kde.svg")

        assoc = _read(bundle / "assoc_ra.csv")
        _xy_figure(assoc, "ra", "delta_f", "RA (hr)", "pair separation (MHz)", "Pair separation vs RA",
                   panel, out / "delta_f_vs_ra.svg")
        _xy_figure(assoc, "ra", "rf_frequency", "RA (hr)", "RF of first pulse (MHz)", "RF vs RA",
                   panel, out / "rf_vs_ra.svg")
        _xy_figure(assoc, "ra", "mjd", "RA (hr)", "MJD", "Detection time vs RA", panel, out / "mjd_vs_ra.svg")

        zoom = _read(bundle / "candidate_bin.csv")
        _xy_figure(zoom, "ra", "d_ew_phi_first", "RA (hr)", "West-East phase (rad)", "Candidate bin",
                   panel, out / "candidate_bin.svg", highlight="")

        exp = _read(bundle / "exposure.csv")
        fig, ax = _figure(panel)
        ax.plot(_col(exp, "ra_start"), _col(exp, "p"), color="tab:blue", lw=0.8)
        ax.set_xlabel("RA (hr)")
        ax.set_ylabel("bin event probability")
        ax.set_title("Exposure")
        _save(fig, out / "exposure.svg")

        _hist_figure(_read(bundle / "llsnr_pulse_hist.csv"), "pulse log10 likelihood",
                     "First-pulse likelihood", panel, out / "llsnr_pulse.svg")
        _hist_figure(_read(bundle / "llsnr_pair_hist.csv"), "pair log10 likelihood",
                     "Pair likelihood", panel, out / "llsnr_pair.svg")

        bc = _read(bundle / "bin_counts.csv")
        fig, ax = _figure(panel)
        ra = _col(bc, "ra_start")
        ax.step(ra, _col(bc, "count", int), where="post", color="tab:blue", lw=0.8, label="count")
        ax.plot(ra, _col(bc, "expected"), color="tab:orange", lw=0.8, label="expected")
        ax.set_xlabel("RA (hr)")
        ax.set_ylabel("pulse pairs per bin")
        ax.set_title("Bin counts")
        ax.legend(loc="upper right")
        _save(fig, out / "bin_counts.svg")
    return sorted(out.glob("*.svg"))
