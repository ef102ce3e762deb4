"""One four-hour file window with a late interferer: look-forward excision."""

import argparse
from pathlib import Path

from pulsepair.pipeline import synthesize, write_observation
from pulsepair.rfi import SegmentMap, excise_windows
from pulsepair.scenarios import rfi_window


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--margin", type=int, default=2)
    ap.add_argument("--out", type=Path, default=Path("results/rfi"))
    args = ap.parse_args()
    cfg = rfi_window(margin=args.margin)
    obs = synthesize(cfg)
    write_observation(obs, args.out, cfg)
    maps = {w: SegmentMap(w, c) for w, c in obs.segment_counts.items()}
    kept, reports = excise_windows(obs.records, maps, cfg.analysis.rfi_count_criterion, args.margin)
    for rep in reports:
        print(rep.to_text(), end="")
        rep.write(args.out / f"excision_{rep.file_window}.txt")
    print(f"kept {len(kept)} of {len(obs.records)} records")


if __name__ == "__main__":
    main()
