import math

import pytest

from pulsepair.config import (
    ConfigError,
    Law,
    ScenarioConfig,
    config_to_text,
    validate_config,
)
from pulsepair.skygeom import FringeModel, fringe_period

LON = "site_longitude = -71.6267\n"


def test_defaults_match_run_parameters():
    cfg = validate_config(LON)
    assert cfg.array.baseline_length == 33.0
    assert cfg.array.reference_frequency == 1425.0
    assert cfg.array.perpendicular_azimuth == 180.0
    assert cfg.instrument.tau_int == -0.082
    assert cfg.instrument.snr_threshold == 8.5
    assert cfg.instrument.rf_bands == ((1405.0, 1424.0), (1426.0, 1455.0))
    assert cfg.post.delta_f_range == (1e-6, 7.0)
    assert cfg.post.d_df_d_ew_phi_window == 0.8
    assert cfg.post.d_ew_phi_window == 0.1
    assert cfg.post.rfi_margin_segments == 500
    assert cfg.post.ra_bins_per_24h == 1600
    assert cfg.analysis.ra_range == (1.5, 9.0)


def test_geometry_gives_fringe_period():
    cfg = validate_config(LON + "baseline_length = 33.0\nreference_frequency = 1425\n")
    assert round(fringe_period(FringeModel.from_array(cfg.array)), 3) == 0.117


@pytest.mark.parametrize("text, message", [
    ("baseline_length = 0", "baseline_length must be > 0"),
    ("rf_bands = [[1405, 1424], [1420, 1455]]", "bands overlap"),
    ("no_such_key = 1", "unknown key: no_such_key"),
    ("source.x.bogus = 1", "unknown key: source.x.bogus"),
])
def test_invalid_config_reports(text, message):
    with pytest.raises(ConfigError) as err:
        validate_config(LON + text)
    assert any(message in e for e in err.value.errors)


def test_site_longitude_required():
    with pytest.raises(ConfigError) as err:
        validate_config("")
    assert any("site_longitude" in e for e in err.value.errors)


def test_errors_are_collected():
    with pytest.raises(ConfigError) as err:
        validate_config(LON + "baseline_length = -1\nfoo = 2\n")
    assert len(err.value.errors) >= 2


def test_emitters_parse_and_roundtrip():
    text = LON + "\n".join([
        "source.beacon.ra = 5.1675",
        "source.beacon.amplitude_snr = 30",
        "source.beacon.frequency_law = comb",
        "source.beacon.delta_f_law = fixed 2.25",
        "rfi.radar.center_frequency = 1419.5",
        "continuum.neb.ra = 5.5",
    ])
    cfg = validate_config(text)
    (src,) = cfg.sources
    assert src.name == "beacon" and src.frequency_law == Law("comb", ())
    assert src.delta_f_law == Law("fixed", (2.25,))
    assert cfg.rfi[0].center_frequency == 1419.5
    assert validate_config(config_to_text(cfg)) == cfg


def test_source_below_threshold_rejected():
    with pytest.raises(ConfigError):
        validate_config(LON + "source.a.ra = 1\nsource.a.amplitude_snr = 5\n")


def test_replace_is_a_copy():
    base = validate_config(LON)
    other = base.replace(tau_int=0.0)
    assert base.instrument.tau_int == -0.082 and other.instrument.tau_int == 0.0
    with pytest.raises(KeyError):
        base.replace(not_a_field=1)


def test_config_is_frozen():
    cfg = ScenarioConfig()
    with pytest.raises(Exception):
        cfg.array.baseline_length = 1.0


def test_law_text():
    assert str(Law.parse("uniform 3 6.5")) == "uniform 3.0 6.5"
    assert Law.parse("fixed 1").params == (1.0,)
    with pytest.raises(ValueError):
        Law.parse("gaussian 1 2")
    assert math.isnan(ScenarioConfig().array.site_longitude)
