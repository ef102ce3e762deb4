import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

from pulsepair.cli import EXIT_CONFIG, EXIT_NO_CANDIDATE, EXIT_OK, main
from pulsepair.config import load_config
from pulsepair.figures import emit_figures
from pulsepair.pipeline import Discovery, StepOrderError, analyze, run_discovery, synthesize
from pulsepair.scan import post_filter, uniform_exposure
from pulsepair.scenarios import base_config

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))
from make_golden_bundle import golden_config  # noqa: E402

GOLDEN = Path(__file__).parent / "data" / "golden_bundle"
SITE = ["--set", "site_longitude=-71.6267"]


def _noise_cfg(**kw):
    return base_config(coverage=((60564.0, 60570.0),), noise_pair_rate=7.27, null_runs=100, seed=1, **kw)


def test_step_order_enforced():
    cfg = _noise_cfg()
    recs = post_filter(synthesize(cfg).records, cfg.post, cfg.analysis.ra_range)
    d = Discovery(recs, uniform_exposure(1600, (1.5, 9.0)), cfg)
    with pytest.raises(StepOrderError):
        d.run_step4()
    with pytest.raises(StepOrderError):
        d.run_step2()
    with pytest.raises(StepOrderError):
        d.run_step3()
    d.run_step1()
    with pytest.raises(StepOrderError):
        d.run_step4()
    d.run_step2()
    assert d.run_step4().offset == d.offset


def test_override_offset():
    cfg = _noise_cfg(phase_offset_override=-0.07)
    res = analyze(synthesize(cfg), cfg)
    assert res.discovery.offset == -0.07 and res.discovery.offset_source == "override"
    assert res.discovery.step4.offset == -0.07


def test_noise_only_reports_no_candidate(tmp_path):
    res = run_discovery(_noise_cfg(), out_dir=tmp_path, figures=False)
    assert res.no_candidate
    assert "candidate_status = no candidate" in (tmp_path / "summary.txt").read_text()
    assert res.discovery.offset_source == "low_confidence"


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_discovery(golden_config(), out_dir=a)
    run_discovery(golden_config(), out_dir=b)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_manifest_reproduces_run(tmp_path):
    first = tmp_path / "first"
    run_discovery(golden_config(), out_dir=first, figures=False)
    cfg = load_config(first / "manifest.txt")
    second = tmp_path / "second"
    run_discovery(cfg, out_dir=second, figures=False)
    for p in first.iterdir():
        assert p.read_bytes() == (second / p.name).read_bytes(), p.name


def test_golden_svgs(tmp_path):
    bundle = tmp_path / "bundle"
    shutil.copytree(GOLDEN, bundle, ignore=shutil.ignore_patterns("*.svg"))
    made = emit_figures(bundle)
    golden = sorted(GOLDEN.glob("*.svg"))
    assert [p.name for p in made] == [p.name for p in golden]
    for p in golden:
        assert (bundle / p.name).read_bytes() == p.read_bytes(), p.name


def test_bundle_csvs_match_golden(tmp_path):
    run_discovery(golden_config(), out_dir=tmp_path, figures=False)
    for p in GOLDEN.glob("*.csv"):
        assert (tmp_path / p.name).read_bytes() == p.read_bytes(), p.name


def test_step1_figure_has_reference_line():
    svg = (GOLDEN / "step1_d_vs_ra.svg").read_text()
    assert "d = 4.4" in svg and "baseline_length = 33.0" in svg


def test_empty_candidate_figures(tmp_path):
    # a bundle with no records still renders every figure
    cfg = base_config(coverage=((60564.0, 60565.0),), noise_pair_rate=0.0, null_runs=100)
    res = run_discovery(cfg, out_dir=tmp_path)
    assert res.no_candidate
    svgs = list(tmp_path.glob("*.svg"))
    assert len(svgs) == 12
    assert all(s.read_text().rstrip().endswith("</svg>") for s in svgs)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("recs")
    code = main(["synth", "--out", str(out), "--set", "coverage=[[60564.0, 60570.0]]",
                 "--set", "noise_pair_rate=7.27", "--seed", "1", *SITE])
    assert code == EXIT_OK
    return out


def test_cli_scan_no_candidate(synth_dir, tmp_path, capsys):
    code = main(["scan", "--records", str(synth_dir), "--out", str(tmp_path / "b"),
                 "--set", "coverage=[[60564.0, 60570.0]]", "--set", "null_runs=100", *SITE])
    assert code == EXIT_NO_CANDIDATE
    assert "no candidate" in capsys.readouterr().out


def test_cli_scan_candidate(tmp_path):
    cfg_file = tmp_path / "golden.cfg"
    cfg_file.write_text((GOLDEN / "manifest.txt").read_text())
    assert main(["scan", "--config", str(cfg_file), "--out", str(tmp_path / "b")]) == EXIT_OK
    assert main(["report", "--bundle", str(tmp_path / "b")]) == EXIT_OK
    assert len(list((tmp_path / "b").glob("*.svg"))) == 12


def test_cli_config_errors(tmp_path, capsys):
    assert main(["config", "--set", "snr_threshold=banana", *SITE]) == EXIT_CONFIG
    assert main(["config"]) == EXIT_CONFIG  # no site longitude
    assert main(["config", "--delta-f-range", "[7, 1]"]) == EXIT_CONFIG
    assert main(["config", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main(["report", "--bundle", str(tmp_path)]) == EXIT_CONFIG
    assert main(["scan", "--records", str(tmp_path / "nothing"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "config error" in err


def test_cli_flags_mirror_config(capsys):
    assert main(["config", "--llsnr-pulse-threshold", "-1.5", "--set", "kernel_width=0.04", *SITE]) == EXIT_OK
    out = capsys.readouterr().out
    assert "llsnr_pulse_threshold = -1.5" in out and "kernel_width = 0.04" in out


def test_cli_rfi_and_calibrate(synth_dir, tmp_path, capsys):
    assert main(["rfi", "--records", str(synth_dir), "--out", str(tmp_path / "r"), *SITE]) == EXIT_OK
    assert "kept" in capsys.readouterr().out
    out = tmp_path / "cal.csv"
    assert main(["calibrate", "--n-records", "500", "--runs", "20", "--uniform-bins", "100",
                 "--out", str(out), *SITE]) == EXIT_OK
    assert out.read_text().startswith("statistic,quantile,value")


def test_cli_oracle(capsys):
    assert main(["oracle", *SITE]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    errs = [float(x.split("rel err ")[1].split(",")[0]) for x in lines]
    assert max(errs) < 1e-6


def test_pipeline_records_roundtrip(synth_dir):
    from pulsepair.pipeline import load_observation
    cfg = base_config(coverage=((60564.0, 60570.0),), noise_pair_rate=7.27, seed=1)
    obs = load_observation(synth_dir, cfg)
    direct = synthesize(cfg)
    assert obs.records == direct.records
    assert obs.segment_counts == direct.segment_counts
    assert np.isclose(obs.coverage[0][0], 60564.0)
