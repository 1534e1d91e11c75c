import shutil
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from debond import build_grid
from debond.cli import main
from debond.config import load_config, parse_config
from debond.errors import ConfigError
from debond.io import (
    LEDGER_COLUMNS,
    read_field_csv,
    read_mask_pgm,
    read_rows,
    write_field_csv,
    write_mask_pgm,
)

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
DEMOS = HERE.parent / "demos" / "configs"


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 10**6), st.booleans())
def test_mask_round_trip(tmp_path, seed, two_d):
    rng = np.random.default_rng(seed)
    g = build_grid("annulus", (0.2, 1.0), 0.1) if two_d else build_grid("interval", 1.0, 0.05)
    m = g.mask(rng.random(g.shape) < 0.5)
    p = write_mask_pgm(tmp_path / "m.pgm", m)
    assert read_mask_pgm(p, g) == m


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=12, max_size=12))
def test_field_round_trip(tmp_path, vals):
    a = np.array(vals).reshape(3, 4)
    p = write_field_csv(tmp_path / "f.csv", a)
    assert np.array_equal(read_field_csv(p, a.shape), a)


def test_ledger_schema_is_pinned(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(GOLDEN / "small.toml"), "--out", str(out)]) == 0
    head, rows = read_rows(out / "ledger.csv")
    ghead, grows = read_rows(GOLDEN / "ledger_small.csv")
    assert head == ghead == LEDGER_COLUMNS
    assert np.allclose(np.array(rows), np.array(grows), rtol=1e-12, atol=1e-14)


def _raw():
    return {
        "domain": {"shape": "interval", "extents": 1.0, "spacing": 0.1},
        "physics": {
            "kappa": {"type": "constant", "value": 0.5},
            "a0": {"type": "interval", "length": 0.2},
            "drive": {"type": "samples", "samples": [[0.0, 0.0], [1.0, 0.3]]},
        },
    }


@pytest.mark.parametrize("where", [(), ("domain",), ("physics",), ("physics", "kappa"), ("physics", "drive")])
def test_unknown_keys_rejected(where):
    raw = _raw()
    t = raw
    for k in where:
        t = t[k]
    t["bogus"] = 1
    with pytest.raises(ConfigError, match="bogus"):
        parse_config(raw)


def test_config_defaults_and_overrides():
    cfg = parse_config(_raw())
    assert cfg.scheme.steps == 100 and cfg.a0_length == 0.2
    cfg2 = cfg.with_overrides(steps=7, seed=3)
    assert cfg2.scheme.steps == 7 and cfg2.scheme.competitors.seed == 3
    assert cfg.scheme.steps == 100


def test_demo_configs_parse():
    for p in DEMOS.glob("*.toml"):
        if p.stem in ("bad_toughness",):
            continue
        load_config(p)


def _cli(*args):
    return main([str(a) for a in args])


def test_cli_bad_toughness(tmp_path, capsys):
    assert _cli("run", "--config", DEMOS / "bad_toughness.toml", "--out", tmp_path) == 2
    assert "node" in capsys.readouterr().out


def test_cli_no_admissible_field(tmp_path):
    assert _cli("run", "--config", DEMOS / "no_admissible.toml", "--out", tmp_path) == 2


def test_cli_oracle_and_unsupported(tmp_path):
    assert _cli("oracle1d", "--config", DEMOS / "jump.toml", "--out", tmp_path) == 0
    head, rows = read_rows(tmp_path / "trajectory.csv")
    assert head == ("t", "front", "elastic", "dissipated", "work", "residual")
    assert max(abs(r[-1]) for r in rows) <= 1e-12
    assert _cli("oracle1d", "--config", DEMOS / "annulus.toml", "--out", tmp_path) == 2


def test_cli_verify_and_sweep(tmp_path, capsys):
    assert _cli("verify", "--config", DEMOS / "moving_front.toml", "--out", tmp_path) == 0
    assert "verify: pass" in capsys.readouterr().out
    assert _cli("sweep", "--config", DEMOS / "moving_front.toml", "--out", tmp_path, "--steps", 10, 20) == 0
    head, rows = read_rows(tmp_path / "sweep.csv")
    assert [r[0] for r in rows] == [10, 20]


def test_cli_verify_constant_drive(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    text = (GOLDEN / "small.toml").read_text().replace("[[0.0, 0.0], [0.8, 0.8]]", "[[0.0, 0.05], [0.8, 0.05]]")
    cfg.write_text(text)
    assert _cli("verify", "--config", cfg, "--out", tmp_path) == 0
    assert "max front deviation: 0.0000e+00" in capsys.readouterr().out


def test_cli_dump_every(tmp_path):
    assert _cli("run", "--config", GOLDEN / "small.toml", "--out", tmp_path, "--dump-every", 4) == 0
    assert sorted(p.name for p in (tmp_path / "masks").iterdir()) == ["set_00004.pgm", "set_00008.pgm"]


def test_cli_parse_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[domain\nshape=")
    assert _cli("run", "--config", bad) == 2
