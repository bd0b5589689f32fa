import csv
import json

import numpy as np
import pytest

from numeraire_mot import lp_oracle as lp
from numeraire_mot.cli import main

LN = ["--mu", "lognormal:sigma=0.2", "--nu", "lognormal:sigma=0.3"]
TWO_BY_THREE = ["--mu", "atoms:0.9=1/2,1.1=1/2", "--nu", "atoms:0.5=1/4,1.0=1/2,1.5=1/4"]


def run_json(capsys, *argv):
    code = main(list(argv) + ["--json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if code == 0 or out.strip().startswith("{") else None


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# ---- profile


def test_profile(tmp_path, capsys):
    code, info = run_json(capsys, "profile", *LN, "--out", str(tmp_path))
    assert code == 0
    saved = json.loads((tmp_path / "extremizers.json").read_text())
    assert saved["m"] == pytest.approx(0.783887, abs=1e-6)
    assert abs(saved["m"] * saved["m_tilde"] - 1) <= 1e-6
    assert saved["closed_form"]["m"] == pytest.approx(saved["m"], abs=1e-6)
    header, data = read_csv(tmp_path / "deltaF.csv")
    assert header == ["x", "deltaF", "deltaG"] and data.shape[1] == 3
    assert info["m"] == saved["m"]


def test_profile_of_equal_laws_exits_2(tmp_path, capsys):
    assert main(["profile", "--mu", "lognormal:sigma=0.2", "--nu", "lognormal:sigma=0.2",
                 "--out", str(tmp_path)]) == 2


# ---- build


def test_build_hk(tmp_path, capsys):
    assert main(["build", *LN, "--plan", "hk", "--grid", "256", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "hk.csv")
    assert header == ["x", "p", "q", "l", "u"]
    assert np.all(np.diff(data[:, 1]) < 0) and np.all(np.diff(data[:, 2]) < 0)


def test_build_left_has_identity_rows(tmp_path, capsys):
    assert main(["build", *LN, "--plan", "left", "--grid", "128", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "left.csv")
    assert header == ["x", "Ld", "Lu", "qL"]
    below = data[data[:, 0] <= 0.783887]
    assert below.shape[0] > 0
    np.testing.assert_array_equal(below[:, 1], below[:, 0])
    np.testing.assert_array_equal(below[:, 2], below[:, 0])


def test_build_right_has_identity_rows(tmp_path, capsys):
    assert main(["build", *LN, "--plan", "right", "--grid", "128", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "right.csv")
    assert header == ["x", "Rd", "Ru", "qR"]
    above = data[data[:, 0] >= 1.275694]
    assert above.shape[0] > 0
    np.testing.assert_array_equal(above[:, 1], above[:, 0])


def test_build_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["build", *LN, "--plan", "left", "--grid", "128", "--out", str(d)]) == 0
    assert (a / "left.csv").read_bytes() == (b / "left.csv").read_bytes()
    assert b"\r\n" not in (a / "left.csv").read_bytes()


def test_too_coarse_plan_exits_3(tmp_path, capsys):
    assert main(["build", *LN, "--plan", "left", "--grid", "16", "--out", str(tmp_path)]) == 3


# ---- price and bounds


def test_price_forward_is_zero(capsys):
    code, info = run_json(capsys, "price", *LN, "--plan", "left", "--grid", "128", "--payoff", "forward")
    assert code == 0 and abs(info["value"]) <= 1e-9


def test_price_type_I_equals_type_II_of_reflected_pair(capsys):
    # the log-normal pair is its own reflection
    _, one = run_json(capsys, "price", *LN, "--payoff", "straddle1:alpha=1", "--grid", "256")
    _, two = run_json(capsys, "price", *LN, "--payoff", "straddle2:alpha=1", "--grid", "256")
    assert one["value"] == pytest.approx(two["value"], abs=1e-7)


def test_price_matches_lp_lower_bound(capsys):
    _, p = run_json(capsys, "price", *LN, "--payoff", "straddle2:alpha=1")
    _, b = run_json(capsys, "bounds", *LN, "--payoff", "straddle2:alpha=1", "--atoms", "200")
    assert abs(p["value"] - b["min"]) / b["min"] <= 0.01


def test_bounds_on_exact_instance(tmp_path, capsys):
    code, info = run_json(capsys, "bounds", *TWO_BY_THREE, "--payoff", "straddle1:alpha=1",
                          "--out", str(tmp_path))
    assert code == 0
    assert info["min"] == pytest.approx(134 / 495, abs=1e-9)
    assert info["max"] == pytest.approx(146 / 495, abs=1e-9)
    assert info["duality_gap"] <= 1e-8 and info["hedge_violation"] <= 1e-8
    inst = lp.load_instance(tmp_path / "instance.txt")
    assert lp.solve_bounds(inst, lp.MIN).value == pytest.approx(134 / 495, abs=1e-9)
    header, data = read_csv(tmp_path / "hedge_min_x.csv")
    assert header == ["x", "phi", "h"] and data.shape == (2, 3)


# ---- verify


def test_verify_oracle_passes(capsys):
    code, info = run_json(capsys, "verify", "--suite", "oracle")
    assert code == 0 and info["passed"]


def test_verify_symmetry_passes(capsys):
    code, info = run_json(capsys, "verify", *LN, "--suite", "symmetry")
    assert code == 0, [c for c in info["checks"] if not c["passed"]]


def test_verify_reports_corrupted_fixture(tmp_path, capsys):
    good = lp.fixture_instances()["two-by-two"]
    bad = lp.DiscreteMOTInstance(good.x_atoms, good.x_weights, good.y_atoms, good.y_weights, good.cost,
                                 cost_spec=good.cost_spec, expected={"min": 0.4, "max": 5 / 12})
    path = tmp_path / "broken.txt"
    lp.dump_instance(bad, path)
    assert main(["verify", "--suite", "oracle", "--fixture", str(path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL broken-min-value" in out
    assert "PASS broken-max-value" in out


# ---- configuration


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[mu]\nspec = atoms:0.9=0.5,1.1=0.5\n[nu]\nspec = atoms:0.5=0.25,1.0=0.5,1.5=0.25\n"
                   "[payoff]\nspec = straddle1:alpha=1\n[run]\natoms = 10\njson = true\n")
    assert main(["bounds", "--config", str(cfg)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["max"] == pytest.approx(146 / 495, abs=1e-9)


@pytest.mark.parametrize("argv", [
    ["price", "--mu", "lognormal:sigma=abc"],
    ["price", "--payoff", "straddle9"],
    ["bounds", "--atoms", "1"],
    ["build", "--config", "/nonexistent/run.ini"],
])
def test_bad_configuration_exits_4(argv, capsys):
    assert main(argv) == 4


def test_unknown_config_key_exits_4(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ncolour = blue\n")
    assert main(["price", "--config", str(cfg)]) == 4


def test_infeasible_bounds_exit_2(capsys):
    argv = ["bounds", "--mu", "atoms:0.5=0.5,1.5=0.5", "--nu", "atoms:1=1"]
    assert main(argv) == 2
