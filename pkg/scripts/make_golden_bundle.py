"""Regenerate the small report bundle checked in under tests/data/golden_bundle.

Six days of the injection scenario with a short null calibration.  The SVGs
in it are the golden files for the figure test; rerun this after any
intentional change to the figures (or a matplotlib upgrade) and review the
diff.
"""

import shutil
from pathlib import Path

from pulsepair.pipeline import run_discovery
from pulsepair.scenarios import injection_run

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "golden_bundle"


def golden_config():
    return injection_run(seed=1).replace(coverage=((60564.0, 60570.0),), null_runs=100)


def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    res = run_discovery(golden_config(), out_dir=OUT, figures=True)
    print(f"{OUT}: {len(list(OUT.iterdir()))} files, candidate bin {res.discovery.candidate_bin}")


if __name__ == "__main__":
    main()
