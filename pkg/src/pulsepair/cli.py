"""Command-line entry point.

Exit codes: 0 ran, 2 configuration error, 3 no candidate found.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import ConfigError, PostFilterConfig, ScenarioConfig, config_to_text, parse_config_text, validate_config

EXIT_OK, EXIT_CONFIG, EXIT_NO_CANDIDATE = 0, 2, 3


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value scenario file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    g = p.add_argument_group("post-filters")
    for f in fields(PostFilterConfig):
        g.add_argument(_flag(f.name), dest=f"pf_{f.name}", metavar="VALUE",
                       help=f"config key {f.name} (default {getattr(PostFilterConfig(), f.name)})")


def build_config(args) -> ScenarioConfig:
    raw: dict[str, str] = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError([f"config file not found: {args.config}"])
        raw.update(parse_config_text(args.config.read_text()))
    for f in fields(PostFilterConfig):
        v = getattr(args, f"pf_{f.name}", None)
        if v is not None:
            raw[f.name] = v
    for item in args.set:
        if "=" not in item:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    if getattr(args, "seed", None) is not None:
        raw["seed"] = str(args.seed)
    return validate_config(raw)


def cmd_synth(args) -> int:
    from .pipeline import synthesize, write_observation

    cfg = build_config(args)
    obs = synthesize(cfg)
    paths = write_observation(obs, args.out, cfg)
    print(f"{len(obs.records)} records in {len(paths)} files -> {args.out}")
    return EXIT_OK


def cmd_scan(args) -> int:
    from .pipeline import run_discovery

    cfg = build_config(args)
    res = run_discovery(cfg, records_dir=args.records, out_dir=args.out, figures=args.figures)
    print((Path(args.out) / "summary.txt").read_text(), end="")
    return EXIT_NO_CANDIDATE if res.no_candidate else EXIT_OK


def cmd_report(args) -> int:
    from .figures import emit_figures

    bundle = Path(args.bundle)
    if not (bundle / "summary.txt").exists():
        print(f"error: {bundle} is not a report bundle", file=sys.stderr)
        return EXIT_CONFIG
    for p in emit_figures(bundle):
        print(p)
    return EXIT_OK


def cmd_rfi(args) -> int:
    from .pipeline import load_observation
    from .records import partition_by_file, record_filename, write_records
    from .rfi import SegmentMap, excise_windows

    cfg = build_config(args)
    obs = load_observation(args.records, cfg)
    maps = {w: SegmentMap(w, c) for w, c in obs.segment_counts.items()}
    kept, reports = excise_windows(obs.records, maps, cfg.analysis.rfi_count_criterion,
                                   cfg.post.rfi_margin_segments)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx, recs in sorted(partition_by_file(kept).items()):
        write_records(out / record_filename(idx), recs)
    with open(out / "excision.txt", "w") as fh:
        for rep in reports:
            fh.write(rep.to_text())
    flagged = sum(len(r.flagged) for r in reports)
    print(f"kept {len(kept)} of {len(obs.records)} records; {flagged} segments flagged")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .channelizer import channelize
    from .synthgen import raw_sample_oracle, tone_bin_values

    cfg = build_config(args)
    ins = cfg.instrument
    e, w = raw_sample_oracle(cfg, args.frequency, args.amplitude, args.delay_east, args.delay_west, args.fft_length)
    frame = channelize(e, w, args.fft_length, 60000.0, ins.sample_rate, ins.lo_frequency)
    b = int(round((args.frequency - frame.bin0_frequency) * 1e6 / frame.bin_width))
    model_e, model_w = tone_bin_values(cfg, args.frequency, args.amplitude, args.delay_east, args.delay_west)
    worst = 0.0
    for name, got, want in (("east", frame.east[b], model_e), ("west", frame.west[b], model_w)):
        dmag = abs(abs(got) - abs(want)) / abs(want)
        dph = abs(math.remainder(np.angle(got) - np.angle(want), 2 * math.pi))
        worst = max(worst, dmag)
        print(f"{name}: bin {b} magnitude rel err {dmag:.3e}, phase err {dph:.3e} rad")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calibration import null_distribution, write_calibration_csv
    from .scan import compute_exposure, uniform_exposure

    cfg = build_config(args)
    if args.uniform_bins:
        exp = uniform_exposure(args.uniform_bins)
    else:
        exp = compute_exposure(cfg.synth.coverage, cfg.post.ra_bins_per_24h, cfg.array, cfg.analysis.ra_range)
    null = null_distribution(args.n_records, exp, args.runs, cfg.synth.seed)
    write_calibration_csv(null, args.out)
    frac = null.fraction_below(4.4)
    print(f"bins below d=4.4: mean {frac.mean():.4f} over {args.runs} runs")
    for q, v in null.quantiles("run_max_d").items():
        print(f"max-over-bins d q{q:g} = {v:.4f}")
    return EXIT_OK


def cmd_config(args) -> int:
    print(config_to_text(build_config(args)), end="")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pulsepair", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate record files from a scenario")
    _add_config_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("scan", help="run discovery steps 1-4 and write a report bundle")
    _add_config_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--records", type=Path, help="directory of record files (default: synthesize)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--figures", action="store_true", help="also render the SVG figures")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("report", help="render the SVG figures of a bundle")
    p.add_argument("--bundle", required=True, type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rfi", help="standalone look-forward excision of record files")
    _add_config_args(p)
    p.add_argument("--records", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_rfi)

    p = sub.add_parser("oracle", help="compare channel-level injection with raw samples")
    _add_config_args(p)
    p.add_argument("--frequency", type=float, default=1425.0 + 62.5 * 100 / 4096)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--delay-east", type=float, default=0.0)
    p.add_argument("--delay-west", type=float, default=-0.082)
    p.add_argument("--fft-length", type=int, default=4096)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("calibrate", help="Monte-Carlo null distribution")
    _add_config_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-records", type=int, default=3417)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--uniform-bins", type=int, default=0, help="use uniform exposure over this many bins")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("config", help="print the validated, canonical configuration")
    _add_config_args(p)
    p.set_defaults(func=cmd_config)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
