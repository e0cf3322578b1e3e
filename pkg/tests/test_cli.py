import csv
import json
import subprocess
import sys

import pytest

from auctionkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestBid:
    def test_uniform(self, capsys):
        out = run_json(capsys, "bid", "--dist", "uniform", "--omega", "1", "--bidders", "4", "--valuation", "0.8")
        assert out["bid"] == pytest.approx(0.6)
        assert out["method"] == "closed_form"

    def test_lognormal_params_json(self, capsys):
        out = run_json(capsys, "bid", "--dist", "lognormal", "--params", '{"mu": 0, "sigma": 0.5}',
                       "--bidders", "3", "--valuation", "1.2")
        assert 0 < out["bid"] < 1.2
        assert out["dist"]["params"]["sigma"] == 0.5

    def test_below_reserve_reports_reason(self, capsys):
        out = run_json(capsys, "bid", "--bidders", "2", "--reserve", "0.5", "--valuation", "0.3")
        assert out["bid"] is None and "reserve" in out["reason"]

    def test_literal_flag(self, capsys):
        a = run_json(capsys, "bid", "--bidders", "3", "--reserve", "0.4", "--valuation", "0.4")
        b = run_json(capsys, "bid", "--bidders", "3", "--reserve", "0.4", "--valuation", "0.4", "--printed-variant")
        assert a["bid"] == pytest.approx(0.4) and b["bid"] != pytest.approx(0.4)

    def test_pmf_mode(self, capsys):
        out = run_json(capsys, "bid", "--bidders", "3", "--valuation", "1", "--pmf", "symmetric")
        assert out["bid"] == pytest.approx(7 / 12)

    def test_emit_curve(self, capsys, tmp_path):
        path = tmp_path / "curve.csv"
        out = run_json(capsys, "bid", "--bidders", "2", "--emit-curve", str(path), "--curve-points", "11")
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["x", "bid"] and len(rows) == 12
        assert float(rows[-1][1]) == pytest.approx(0.5 * float(rows[-1][0]))
        assert out["curve"] == str(path)

    @pytest.mark.parametrize("argv", [
        ("bid", "--bidders", "1", "--valuation", "0.5"),
        ("bid", "--bidders", "2", "--valuation", "1.5"),
        ("bid", "--bidders", "2"),
        ("bid", "--bidders", "2", "--valuation", "0.5", "--params", "{bad"),
        ("bid", "--bidders", "2", "--valuation", "0.5", "--params", '{"nu": 1}'),
        ("bid", "--bidders", "2", "--valuation", "0.5", "--method", "approx"),
        ("bid", "--dist", "cauchy", "--bidders", "2", "--valuation", "0.5"),
        ("nosuchcommand",),
    ])
    def test_invalid_input_exits_2(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2
        assert out == ""


def test_pmf_csv(capsys):
    code, out, _ = run(capsys, "pmf", "--bidders", "4")
    assert code == 0
    assert out.splitlines() == ["rivals,p", "0,0.0", "1,0.25", "2,0.5", "3,0.25"]


def test_pmf_json(capsys):
    out = run_json(capsys, "pmf", "--bidders", "7", "--json")
    assert out["delta_p"] == "1/12"
    assert sum(out["p"]) == pytest.approx(1.0)


def test_asym(capsys, tmp_path):
    out = run_json(capsys, "asym", "--omega1", "1", "--omega2", "2", "--bidders", "2", "--group", "2",
                   "--valuation", "1.0", "--emit-curve", str(tmp_path / "t.csv"))
    assert out["b_bar"] == pytest.approx(2 / 3, abs=1e-8)
    assert out["max_residual"] <= 1e-6
    assert 0 < out["bid"] < 1.0
    assert (tmp_path / "t.csv").read_text().startswith("b,phi1,phi2")


def test_asym_no_equilibrium_exits_1(capsys):
    code, _, err = run(capsys, "asym", "--omega1", "1", "--omega2", "2", "--K", "1", "--bidders", "4")
    assert code == 1
    assert "numerical failure" in err


class TestInterdep:
    def test_quadrature_and_closed(self, capsys):
        q = run_json(capsys, "interdep", "--bidders", "3", "--valuation", "1.5")
        c = run_json(capsys, "interdep", "--bidders", "3", "--valuation", "1.5", "--method", "closed")
        assert q["bid"] == pytest.approx(c["bid"], abs=1e-9)

    def test_reserve(self, capsys):
        out = run_json(capsys, "interdep", "--bidders", "2", "--reserve", str(5 / 6), "--valuation", "1.0")
        assert out["x_star"] == pytest.approx(1.0, abs=1e-8)
        assert out["bid"] == pytest.approx(5 / 6, abs=1e-8)
        low = run_json(capsys, "interdep", "--bidders", "2", "--reserve", str(5 / 6), "--valuation", "0.5")
        assert low["bid"] is None

    def test_curve_with_pmf(self, capsys, tmp_path):
        path = tmp_path / "c.csv"
        run_json(capsys, "interdep", "--bidders", "4", "--pmf", "symmetric", "--reserve", "0.4",
                 "--emit-curve", str(path), "--curve-points", "9")
        assert len(path.read_text().splitlines()) == 10

    def test_unreachable_reserve(self, capsys):
        code, _, err = run(capsys, "interdep", "--bidders", "2", "--reserve", "1.9", "--valuation", "1.0")
        assert code == 2 and "achievable range" in err


def test_fit_round_trip(capsys, tmp_path):
    table, model = tmp_path / "design.csv", tmp_path / "model.json"
    out = run_json(capsys, "fit", "--sample", "300", "--seed", "2", "--holdout-seed", "3",
                   "--output-table", str(table), "--model-out", str(model))
    assert out["power_corr_in"] > 0.8
    assert "power_corr_out" in out
    again = run_json(capsys, "fit", "--input", str(table))
    assert again["power"]["a1"] == pytest.approx(out["power"]["a1"], rel=1e-12)
    assert set(json.loads(model.read_text())) >= {"C", "a1", "a2", "a3", "a4"}


def test_fit_config_and_env_seed(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sample": 120, "seed": 4, "linear-order": 2}))
    a = run_json(capsys, "fit", "--config", str(cfg))
    b = run_json(capsys, "fit", "--sample", "120", "--seed", "4", "--linear-order", "2")
    assert a == b
    monkeypatch.setenv("AUCTIONKIT_SEED", "5")
    c = run_json(capsys, "fit", "--config", str(cfg))
    monkeypatch.delenv("AUCTIONKIT_SEED")
    d = run_json(capsys, "fit", "--sample", "120", "--seed", "5", "--linear-order", "2")
    assert c == d and c != a


def test_config_rejects_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "pmf", "--bidders", "3", "--config", str(cfg))
    assert code == 2 and "bogus" in err


def test_command_line_beats_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bidders": 2}))
    out = run_json(capsys, "bid", "--config", str(cfg), "--bidders", "4", "--valuation", "0.8")
    assert out["bid"] == pytest.approx(0.6)


def test_simulate(capsys):
    out = run_json(capsys, "simulate", "--bidders", "2", "--reserve", "0.5", "--rounds", "20000", "--seed", "1")
    assert abs(out["no_sale_rate"] - out["theory_no_sale"]) <= 4 * out["no_sale_se"]
    assert abs(out["mean_revenue"] - out["theory_revenue"]) <= 4 * out["revenue_se"]


def test_reserve(capsys):
    out = run_json(capsys, "reserve", "--bidders", "2")
    assert out["r_star"] == pytest.approx(0.5)
    assert out["expected_revenue"] == pytest.approx(5 / 12)


def test_check(capsys):
    out = run_json(capsys, "check")
    assert out["failed"] == []


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "auctionkit.cli", "pmf", "--bidders", "2"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.strip().splitlines()[-1] == "1,1.0"
