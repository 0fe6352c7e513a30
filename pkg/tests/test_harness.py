import csv
import os
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from purecav import cli, purify, resources
from purecav.config import ConfigError, env_overrides, normalize_key, parse_bool, read_config
from purecav.sweep import SweepConfig, columns, run_sweep, write_sweep


def read_rows(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("PURECAV_"):
            monkeypatch.delenv(key)


# sweep -----------------------------------------------------------------------

def test_sweep_grid():
    assert list(SweepConfig().grid()) == pytest.approx([0.55 + 0.05 * k for k in range(10)])
    assert list(SweepConfig(f_min=0.7, f_max=0.7).grid()) == [0.7]


@pytest.mark.parametrize("kwargs", [dict(scheme="x"), dict(f_min=0.5), dict(f_max=1.1), dict(f_step=0),
                                    dict(rounds=0), dict(n=-1), dict(f_min=0.9, f_max=0.8)])
def test_sweep_config_validation(kwargs):
    with pytest.raises(ValueError):
        SweepConfig(**kwargs)


def test_sweep_columns():
    assert columns(SweepConfig(rounds=2)) == ["f", "F1", "F2", "fhat_2", "P_succ_1", "P_succ_2"]
    assert columns(SweepConfig(rounds=1, init=True)) == ["f", "F0", "F1", "fhat_1", "G_1", "P_succ_0", "P_succ_1"]


def test_sweep_matches_iterate():
    cfg = SweepConfig(scheme="original", f_min=0.6, f_max=0.9, f_step=0.1, rounds=3)
    for row in run_sweep(cfg):
        seq = purify.iterate("original", row["f"], 3)
        assert row["F3"] == pytest.approx(seq.final, abs=1e-10)
        assert row["fhat_3"] == pytest.approx(seq.final - row["f"], abs=1e-10)


def test_sweep_csv_header_and_determinism(tmp_path):
    cfg = SweepConfig(rounds=1, f_step=0.15, seed=42)
    a = write_sweep(cfg, tmp_path / "a.csv")
    b = (tmp_path / "a.csv").read_text()
    assert a == b == write_sweep(cfg)
    assert a.splitlines()[0].endswith("seed=42")
    assert len(read_rows(a)) == len(cfg.grid())


# config ----------------------------------------------------------------------

def test_config_file_parsing(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\n\n--f-min = 0.6\nrounds=2\n")
    assert read_config(p) == {"f_min": "0.6", "rounds": "2"}
    p.write_text("rounds 2\n")
    with pytest.raises(ConfigError):
        read_config(p)


def test_env_overrides_and_keys():
    env = {"PURECAV_F_MIN": "0.7", "PURECAV_CONFIG": "x", "OTHER": "1"}
    assert env_overrides(env) == {"f_min": "0.7"}
    assert normalize_key("--F-Min") == "f_min"
    assert parse_bool("yes") and not parse_bool("0")
    with pytest.raises(ConfigError):
        parse_bool("maybe")


def test_precedence_file_env_flag(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("f_min = 0.9\nrounds = 2\n")
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_rows(out.read_text())
    assert rows[0]["f"] == "0.9" and "F2" in rows[0]

    monkeypatch.setenv("PURECAV_F_MIN", "0.95")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_rows(out.read_text())[0]["f"] == "0.95"

    assert cli.main(["sweep", "--config", str(cfg), "--f-min", "0.8", "--out", str(out)]) == 0
    assert read_rows(out.read_text())[0]["f"] == "0.8"


def test_env_boolean_flag(tmp_path, monkeypatch):
    monkeypatch.setenv("PURECAV_INIT", "true")
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--f-min", "0.9", "--rounds", "1", "--out", str(out)]) == 0
    assert "F0" in read_rows(out.read_text())[0]


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = blue\n")
    assert cli.main(["sweep", "--config", str(cfg)]) == cli.EXIT_USAGE
    assert "unknown config keys" in capsys.readouterr().err


def test_bad_env_value_is_usage_error(monkeypatch):
    monkeypatch.setenv("PURECAV_ROUNDS", "three")
    assert cli.main(["sweep"]) == cli.EXIT_USAGE


# CLI -------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["sweep", "--seed", "-1"],
    ["sweep", "--seed", "abc"],
    ["sweep", "--f-min", "0.4"],
    ["sweep", "--scheme", "better"],
    ["fusion", "--f", "0.3"],
    ["fusion", "--kappa", "0"],
    ["resources", "--trials", "10"],
    ["resources", "--force-p", "0"],
    ["verify-appendix", "--ladder", ""],
    ["verify-appendix", "--ladder", "a,b"],
])
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == cli.EXIT_USAGE


def test_seed_accepts_full_uint64():
    assert cli.seed_type(str(2 ** 64 - 1)) == 2 ** 64 - 1


def test_sweep_stdout(capsys):
    assert cli.main(["sweep", "--f-min", "0.8", "--f-max", "0.8", "--rounds", "1", "--seed", "9"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# purecav sweep") and "seed=9" in out


def test_fusion_command(tmp_path, capsys):
    out = tmp_path / "f.csv"
    assert cli.main(["fusion", "--j2", "2", "--f", "0.75", "--out", str(out)]) == 0
    row = read_rows(out.read_text())[0]
    assert float(row["alpha_abs"]) == pytest.approx(4.0)
    assert float(row["trace_distance"]) < 1e-3
    assert cli.main(["fusion", "--j2", "0.5", "--tol", "1e-6"]) == cli.EXIT_FAIL
    err = capsys.readouterr().err
    assert "strong-coupling assumption violated" in err
    assert "FAIL" in err


def test_verify_appendix_command(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert cli.main(["verify-appendix", "--which", "C", "--ladder", "1,2", "--out", str(out)]) == 0
    rows = read_rows(out.read_text())
    assert [float(r["multiplier"]) for r in rows] == [1.0, 2.0]
    assert float(rows[1]["trace_distance"]) < float(rows[0]["trace_distance"])


def test_verify_appendix_bad_parameters(capsys):
    assert cli.main(["verify-appendix", "--which", "C", "--delta", "-1"]) == cli.EXIT_USAGE


def test_selftest_subset(capsys):
    assert cli.main(["selftest", "--only", "4,9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and all(line.startswith("[PASS]") for line in lines)


# resources -------------------------------------------------------------------

def test_chain_shapes():
    c = resources.build_chain(0.8, 4)
    assert c.labels == ("init", "round1", "round2", "round3")
    assert c.cost == (2.0,) * 4
    c = resources.build_chain(0.8, 3, policy="round1")
    assert c.labels == ("round1", "round2", "round3")
    with pytest.raises(ValueError):
        resources.build_chain(0.8, 0)
    with pytest.raises(ValueError):
        resources.build_chain(0.8, 2, policy="never")


def test_forced_probabilities():
    c = resources.build_chain(0.8, 4, force_p=1.0)
    assert resources.analytic_expectation(c) == (8.0, 4.0)
    est = resources.monte_carlo(c, 500, 3)
    assert est.expected_temporary_pairs == 8.0 and est.half_width == 0.0
    single = resources.build_chain(0.8, 1, force_p=0.5)
    assert resources.analytic_expectation(single)[0] == pytest.approx(4.0)
    assert resources.monte_carlo(single, 100_000, 1).deviation_in_half_widths < 3


def test_fusion_failures_raise_cost():
    plain = resources.build_chain(0.8, 3)
    lossy = resources.build_chain(0.8, 3, fusion_alpha=2.0)
    assert lossy.fusion_probability < 1
    assert lossy.cost[1] == pytest.approx(2 / lossy.fusion_probability)
    assert resources.analytic_expectation(lossy)[0] > resources.analytic_expectation(plain)[0]
    est = resources.monte_carlo(lossy, 30_000, 8)
    assert est.deviation_in_half_widths < 3


@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5))
def test_expectation_formula(ps):
    c = resources.ChainSpec(tuple(ps), (2.0,) * len(ps))
    e, _ = resources.analytic_expectation(c)
    # recursive form: E_k = (E_{k-1} + c_k) / p_k
    r = 0.0
    for p in ps:
        r = (r + 2.0) / p
    assert e == pytest.approx(r, rel=1e-12)


def test_monte_carlo_determinism_and_shrinking_interval():
    c = resources.build_chain(0.8, 3)
    a = resources.monte_carlo(c, 12_345, 77)
    b = resources.monte_carlo(c, 12_345, 77)
    assert a == b
    assert resources.monte_carlo(c, 12_345, 78).expected_temporary_pairs != a.expected_temporary_pairs
    big = resources.monte_carlo(c, 4 * 12_345, 77)
    assert big.half_width < 0.6 * a.half_width
    with pytest.raises(ValueError):
        resources.monte_carlo(c, 50, 1)


def test_resources_command(tmp_path):
    out = tmp_path / "r.csv"
    args = ["resources", "--trials", "20000", "--seed", "5", "--out", str(out)]
    assert cli.main(args) == 0
    first = out.read_text()
    assert cli.main(args) == 0
    assert out.read_text() == first
    lines = first.splitlines()
    assert "seed=5" in lines[0]
    assert lines[1].startswith("# assumption")
    row = read_rows(first)[0]
    assert abs(float(row["mc_pairs"]) - float(row["analytic_pairs"])) <= 3 * float(row["half_width"])


@pytest.mark.parametrize("scheme,F3", [("modified", 0.99774), ("original", 0.904)])
def test_sweep_reference_rows(scheme, F3):
    rows = {round(r["f"], 2): r for r in run_sweep(SweepConfig(scheme=scheme, f_min=0.8, f_step=0.2))}
    assert rows[0.8]["F3"] == pytest.approx(F3, abs=1e-3)
    assert all(rows[1.0][f"F{k}"] == pytest.approx(1.0, abs=1e-12) for k in (1, 2, 3))
