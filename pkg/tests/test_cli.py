import csv
import os

import pytest

from bivisar.cli import DEFAULT_SEED, main
from bivisar.estimation import MODELS
from bivisar.qcatalog import KINDS

HERE = os.path.dirname(__file__)
GOLDEN = os.path.join(HERE, "..", "docs", "example.model")


@pytest.fixture(scope="module")
def league(tmp_path_factory):
    from scripts_helper import make_league
    return make_league(tmp_path_factory.mktemp("league"))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_help_lists_models_and_kinds(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for m in MODELS:
        assert m.name in out and m.alias in out
    for k in KINDS:
        assert k in out


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["compare"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 2


def test_validate_q_tilde_nb(capsys):
    assert main(["validate-q", "--q", "tilde_nb", "--marginal", "negbin:1.2,2"]) == 1
    out = capsys.readouterr().out
    assert "residual: -0.630615" in out
    assert "repair suggestion" in out and "6.82667" in out
    assert main(["validate-q", "--q", "repaired:tilde_nb", "--marginal", "negbin:1.2,2"]) == 0
    assert main(["validate-q", "--q", "ans", "--marginal", "negbin:1.2,2"]) == 0


def test_validate_q_bad_input(capsys):
    assert main(["validate-q", "--q", "dc", "--marginal", "negbin:1.2,2"]) == 1
    assert main(["validate-q", "--q", "bogus", "--marginal", "poisson:1"]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_model_lists_names(league, capsys):
    assert main(["compare", "--data", league["league"], "--models", "nope"]) == 1
    err = capsys.readouterr().err
    assert "double Poisson" in err and "Alternative Negative binomial Sarmanov" in err


def test_compare_all(league, tmp_path, capsys):
    out = tmp_path / "aic.csv"
    assert main(["compare", "--data", league["league"], "--models", "all", "--n-starts", "1",
                 "--out", str(out)]) == 0
    assert f"seed: {DEFAULT_SEED}" in capsys.readouterr().err
    rows = read_csv(out)
    assert len(rows) == len(MODELS)
    assert sum(r["preferred"] == "True" for r in rows) == 1
    aics = [float(r["aic"]) for r in rows]
    assert aics == sorted(aics)
    assert rows[0]["preferred"] == "True"


def test_compare_txt(league, capsys):
    assert main(["compare", "--data", league["league"], "--models", "dp,dc", "--format", "txt",
                 "--n-starts", "1"]) == 0
    out = capsys.readouterr().out
    assert "Dixon and Coles Poisson" in out


def test_fit_then_simulate_byte_identical(league, tmp_path, capsys):
    model = tmp_path / "fit.model"
    assert main(["fit", "--data", league["league"], "--model", "dnb", "--n-starts", "1",
                 "--out", str(model)]) == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["simulate", "--fit", str(model), "--fixtures", league["rest"], "--data", league["league"],
              "--n", "300", "--seed", "7"]
    assert main(common + ["--out", str(a)]) == 0
    assert main(common + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "seed: 7" in capsys.readouterr().err
    rows = read_csv(a)
    assert list(rows[0]) == ["team", "current_points", "lo", "hi", "mean"]
    assert all(int(r["lo"]) <= int(r["hi"]) for r in rows)
    assert all(int(r["lo"]) >= int(r["current_points"]) for r in rows)


def test_simulate_current_points_from_latest_season(league, tmp_path):
    from bivisar.data_io import load_matches
    from bivisar.season_sim import points_table
    out = tmp_path / "s.csv"
    assert main(["simulate", "--fit", GOLDEN, "--fixtures", league["rest"], "--data", league["league"],
                 "--n", "20", "--out", str(out)]) == 0
    current = points_table([m for m in load_matches(league["league"]).matches if m.season == "cur"])
    assert {r["team"]: int(r["current_points"]) for r in read_csv(out)} == current
    assert main(["simulate", "--fit", GOLDEN, "--fixtures", league["rest"], "--data", league["league"],
                 "--season", "s0", "--n", "20", "--out", str(out)]) == 0
    s0 = points_table([m for m in load_matches(league["league"]).matches if m.season == "s0"])
    assert {r["team"]: int(r["current_points"]) for r in read_csv(out)} == s0


def test_simulate_observed_column(league, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--fit", GOLDEN, "--fixtures", league["rest"], "--n", "50",
                 "--observed", league["full6"], "--out", str(out)]) == 0
    assert "observed" in read_csv(out)[0]


def test_diagnose(league, tmp_path, capsys):
    d = tmp_path / "diag"
    assert main(["diagnose", "--data", league["league"], "--bootstrap-B", "50", "--out", str(d)]) == 0
    out = capsys.readouterr().out
    assert "chi-squared" in out
    for name in ("ratios.csv", "chisq.csv", "season_correlation.csv", "mean_variance.csv", "envelope.csv"):
        assert (d / name).exists()
    assert len(read_csv(d / "ratios.csv")) == 25


def test_scores_parametric(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["scores", "--model", "dc", "--means", "1.3,1.2", "--omega", "-0.1", "--max-goals", "10",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    p00 = [float(r["probability"]) for r in rows if r["home_goals"] == "0" and r["away_goals"] == "0"][0]
    assert p00 == pytest.approx(0.06927973883857058, abs=1e-12)
    assert main(["scores", "--model", "ans", "--means", "1.3,1.2", "--phi", "2", "--omega", "1",
                 "--format", "txt"]) == 0
    assert "truncated mass" in capsys.readouterr().out


def test_scores_from_fit(capsys):
    assert main(["scores", "--fit", GOLDEN, "--home", "Team00", "--away", "Team01", "--max-goals", "5"]) == 0
    assert main(["scores", "--fit", GOLDEN, "--home", "Team00", "--away", "Nobody"]) == 1


def test_scores_infeasible_omega(capsys):
    assert main(["scores", "--model", "dc", "--omega", "5"]) == 1


def test_corr_range(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["corr-range", "--q", "ans", "--family", "negbin", "--envelope", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert all(float(r["rho_min"]) < 0 < float(r["rho_max"]) for r in rows)


def test_missing_file_exit_1(capsys):
    assert main(["diagnose", "--data", "/nonexistent.csv"]) == 1
