import numpy as np
import pytest

from mimonoma.config import SystemConfig, db_grid, load_config, parse_key_values
from mimonoma.exceptions import ConfigurationError
from mimonoma.report import CURVE_COLUMNS, curve_csv, fmt, manifest_text
from mimonoma.simulator import run_sweep


def test_grid():
    assert db_grid(0, 50, 5) == tuple(float(v) for v in range(0, 55, 5))
    assert db_grid(10, 10, 5) == (10.0,)
    with pytest.raises(ConfigurationError):
        db_grid(0, 10, 0)


def test_scalar_rates_broadcast():
    cfg = SystemConfig(rates_u1=1.5, rates_u2="2")
    assert cfg.rates_u1 == (1.5, 1.5, 1.5) and cfg.rates_u2 == (2.0, 2.0, 2.0)


@pytest.mark.parametrize("kw,needle", [
    (dict(m=2, n=3), "M >= N"),
    (dict(rates_u1=(0.0,)), "positive"),
    (dict(rates_u1=(1.0, 2.0)), "rates"),
    (dict(policy=3), "policy"),
    (dict(scheme="tdma"), "scheme"),
    (dict(detector_u1="mmse"), "detector"),
    (dict(target_multiplier=0.5), "multiplier"),
    (dict(target_multiplier=None, target_fixed=(0.01,)), "feasible range"),
    (dict(m=4, scheme="zf-noma"), "M"),
    (dict(trials=0), "trials"),
])
def test_invalid_configs_name_the_constraint(kw, needle):
    with pytest.raises(ConfigurationError, match=needle):
        SystemConfig(**kw)


def test_fixed_target_form():
    cfg = SystemConfig(target_multiplier=None, target_fixed=0.5, rho_db=(10.0, 20.0))
    np.testing.assert_allclose(cfg.user1_target(10.0), 0.5)


def test_text_round_trip(tmp_path):
    cfg = SystemConfig(m=4, n=2, rates_u1=(1.0, 1.5), rates_u2=(2.0, 4.0), policy=2,
                       rho_db=(0.0, 7.5), trials=123, seed=9, detector_u1="qr")
    path = tmp_path / "c.txt"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg


def test_grid_keys_and_unknown_keys():
    cfg = SystemConfig.from_mapping({"rho_db_start": "10", "rho_db_stop": "20", "rho_db_step": "5"})
    assert cfg.rho_db == (10.0, 15.0, 20.0)
    with pytest.raises(ConfigurationError, match="unknown"):
        SystemConfig.from_mapping({"antennas": "3"})
    with pytest.raises(ConfigurationError):
        SystemConfig.from_mapping({"m": "three"})


def test_parse_key_values():
    got = parse_key_values("# c\nm = 3  # antennas\n\nscheme=oma\n")
    assert got == {"m": "3", "scheme": "oma"}
    with pytest.raises(ConfigurationError):
        parse_key_values("m 3")


def test_fmt():
    assert fmt(0.1234567891234) == "0.123456789"
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(7) == "7" and fmt(1e-12) == "1e-12"


def test_curve_csv_schema():
    sw = run_sweep(SystemConfig(policy=2, rho_db=(0.0, 10.0), trials=500, seed=1))
    text = curve_csv(sw, 2)
    lines = text.split("\n")
    assert lines[0] == ",".join(CURVE_COLUMNS) and text.endswith("\n") and "\r" not in text
    row = lines[1].split(",")
    assert len(row) == len(CURVE_COLUMNS)
    assert row[4] == "" and row[5] != "" and row[6] != ""
    u1 = curve_csv(sw, 1).split("\n")[1].split(",")
    assert u1[4] != "" and u1[5] == "" and u1[6] == ""


def test_manifest_loads_back(tmp_path):
    cfg = SystemConfig(rho_db=(5.0,), trials=10)
    path = tmp_path / "m.txt"
    path.write_text(manifest_text(cfg, {"user1": "noma_user1.csv"}, timestamp="T"))
    assert load_config(path) == cfg
