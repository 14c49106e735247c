import csv

import pytest

from sieuler import cli
from sieuler.config import ConfigError, RunConfig, dump_config, parse_config, parse_xi0


def test_defaults_fill_in():
    cfg = parse_config("mode = converge\n")
    assert cfg == RunConfig(mode="converge")
    assert cfg.levels == (16, 32, 64, 128, 256, 512)
    assert cfg.study().n_ref == 2048


def test_negative_decay_names_the_key():
    with pytest.raises(ConfigError, match="'r'.*decay exponent must be positive"):
        parse_config("mode = simulate\nr = -1\n")


def test_duplicate_key_reports_both_lines():
    with pytest.raises(ConfigError, match=r"run.cfg:3: duplicate key 'N' \(first set at run.cfg:2\)"):
        parse_config("mode = simulate\nN = 8\nN = 4\n", source="run.cfg")


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key 'tau'"):
        parse_config("mode = simulate\ntau = 0.1\n")


def test_bad_value_reports_location():
    with pytest.raises(ConfigError, match="cfg:2: bad value for 'N'"):
        parse_config("mode = simulate\nN = many\n", source="cfg")


@pytest.mark.parametrize(
    "text",
    [
        "mode = converge\nlevels = 16..48\n",
        "mode = converge\nlevels = 16,64\n",
        "mode = prob-order\nbetas = 0.5,1.2\n",
        "mode = simulate\nsolver = cg\n",
        "mode = plot\n",
        "N = 4\n",
    ],
)
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides_win():
    cfg = parse_config("mode = simulate\nN = 8\n", {"N": "4", "c0": 0.5})
    assert cfg.N == 4 and cfg.c0 == 0.5


def test_levels_syntax():
    assert parse_config("mode = converge\nlevels = 8..64\n").levels == (8, 16, 32, 64)
    assert parse_config("mode = converge\nlevels = 8, 16\n").levels == (8, 16)


def test_xi0_syntax():
    assert parse_xi0("random-smooth(3.5, 7)") == ("random-smooth", 3.5, 7)
    with pytest.raises(ConfigError):
        parse_xi0("gaussian")


def test_dump_roundtrip():
    cfg = parse_config("mode = prob-order\nc0 = 0.1\nbetas = 0.6, 0.75\nxi0 = random-smooth(2, 3)\n")
    assert parse_config(dump_config(cfg)) == cfg


# --- command line ------------------------------------------------------------------


def test_selfcheck_exits_zero(capsys):
    assert cli.main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_config_error_exit_code(capsys):
    assert cli.main(["simulate", "--r", "-1"]) == 2
    assert "decay exponent must be positive" in capsys.readouterr().err


def test_config_mode_conflict(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("mode = converge\n")
    with pytest.raises(ConfigError, match="conflicts"):
        cli.config_from_args(["simulate", "--config", str(path)])


def test_simulate_zero_noise(tmp_path):
    out = tmp_path / "sim"
    status = cli.main(["simulate", "--N", "4", "--n", "32", "--c0", "0", "--out", str(out), "--diagnostics"])
    assert status == 0
    assert not (out / "INCOMPLETE").exists()
    assert (out / "trajectory.sie").exists()
    with open(out / "diagnostics.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 33
    l2 = [float(r["l2"]) for r in rows]
    assert all(b <= a * (1 + 1e-13) for a, b in zip(l2, l2[1:]))
    assert parse_config((out / "config.txt").read_text()).n == 32


def test_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("N = 8\nT = 0.25\n# comment\nc0 = 0.05\n")
    cfg = cli.config_from_args(["converge", "--config", str(cfg_path), "--N", "4"])
    assert (cfg.mode, cfg.N, cfg.T, cfg.c0) == ("converge", 4, 0.25, 0.05)


def test_converge_is_reproducible(tmp_path):
    args = ["--N", "3", "--T", "0.25", "--levels", "4..16", "--ref-extra", "1", "--paths", "2", "--seed", "9"]
    assert cli.main(["converge", *args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["converge", *args, "--out", str(tmp_path / "b")]) == 0
    for name in ("errors.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(tmp_path / "a" / "errors.csv") as f:
        rows = list(csv.DictReader(f))
    assert [int(r["level"]) for r in rows] == [4, 8, 16] * 2


def test_prob_order_writes_exceedance(tmp_path):
    out = tmp_path / "p"
    args = ["--N", "3", "--T", "0.25", "--levels", "4..16", "--ref-extra", "1", "--paths", "4", "--betas", "0.6,0.9"]
    assert cli.main(["prob-order", *args, "--out", str(out)]) == 0
    with open(out / "exceedance.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 6
    assert all(0.0 <= float(r["ci_low"]) <= float(r["fraction"]) <= float(r["ci_high"]) <= 1.0 for r in rows)
