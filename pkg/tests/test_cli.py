import json

import pytest

from stableponzi.cli import main


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_spiral(capsys, fixtures, tmp_path):
    out = tmp_path / "run.json"
    code, stdout, _ = run_cli(
        capsys, "simulate", "--protocol", "dual", "--mode", "endogenous", "--periods", 230,
        "--scenario", fixtures / "spiral.toml", "--out", out,
    )
    assert code == 0
    assert out.exists()
    assert "periods=230" in stdout and "rational=" in stdout


def test_simulate_without_scenario(capsys, tmp_path):
    code, stdout, _ = run_cli(capsys, "simulate", "--protocol", "tritoken", "--periods", 5, "--out", tmp_path / "r.json")
    assert code == 0 and "periods=5" in stdout


def test_unknown_protocol_is_usage_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "simulate", "--protocol", "nope", "--out", tmp_path / "r.json")
    assert code == 1
    assert "usage" in err


def test_missing_subcommand_is_usage_error(capsys):
    assert run_cli(capsys)[0] == 1


def test_missing_protocol_and_scenario(capsys, tmp_path):
    assert run_cli(capsys, "simulate", "--out", tmp_path / "r.json")[0] == 1


def test_horizon_zero_is_data_error(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('protocol = "dual"\nmode = "endogenous"\nhorizon = 0\n')
    assert run_cli(capsys, "simulate", "--scenario", cfg, "--out", tmp_path / "r.json")[0] == 2


def test_unparseable_scenario(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("protocol = \n")
    assert run_cli(capsys, "simulate", "--scenario", cfg, "--out", tmp_path / "r.json")[0] == 2


def test_replay_ampl(capsys, fixtures, tmp_path):
    code, _, _ = run_cli(capsys, "replay", "--protocol", "rebase", "--stable-csv", fixtures / "ampl.csv", "--out", tmp_path / "a.json")
    assert code == 0


def test_replay_ust_and_evaluate(capsys, fixtures, tmp_path):
    report = tmp_path / "ust_run.json"
    code, stdout, _ = run_cli(
        capsys, "replay", "--protocol", "dual", "--stable-csv", fixtures / "ust.csv",
        "--share-csv", fixtures / "luna.csv", "--out", report,
    )
    assert code == 0 and "rational=false" in stdout
    code, stdout, _ = run_cli(capsys, "evaluate", "--run", report)
    assert code == 0
    verdict = json.loads(stdout)
    assert verdict["rational"] is False and verdict["condition_ii"] is False
    assert verdict["worst_cohort"]["id"] == "c1"


def test_evaluate_idealized_ampl(capsys, fixtures, tmp_path):
    report = tmp_path / "ampl.json"
    code, _, _ = run_cli(
        capsys, "replay", "--scenario", fixtures / "ampl_idealized.toml", "--stable-csv", fixtures / "ampl.csv", "--out", report,
    )
    assert code == 0
    code, stdout, _ = run_cli(capsys, "evaluate", "--run", report, "--window", 10, "--epsilon", "1e-3")
    assert code == 0
    assert json.loads(stdout)["condition_ii"] is True


def test_replay_missing_csv(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "replay", "--protocol", "rebase", "--stable-csv", tmp_path / "nope.csv", "--out", tmp_path / "r.json")
    assert code == 2


def test_replay_gap_is_data_error(capsys, tmp_path):
    csv = tmp_path / "gap.csv"
    csv.write_text("timestamp,price_usd,total_supply,market_cap\n2022-01-01T00:00:00Z,1,,\n2022-01-09T00:00:00Z,1,,\n")
    code, _, _ = run_cli(capsys, "replay", "--protocol", "rebase", "--stable-csv", csv, "--out", tmp_path / "r.json")
    assert code == 2


def test_replay_rejects_endogenous_mode(capsys, fixtures, tmp_path):
    code, _, _ = run_cli(
        capsys, "replay", "--scenario", fixtures / "spiral.toml", "--stable-csv", fixtures / "ust.csv", "--out", tmp_path / "r.json",
    )
    assert code == 2


def test_evaluate_corrupt_report(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(capsys, "evaluate", "--run", bad)[0] == 2


def test_evaluate_schema_mismatch(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 0}))
    assert run_cli(capsys, "evaluate", "--run", bad)[0] == 2


@pytest.fixture
def ust_report(capsys, fixtures, tmp_path):
    report = tmp_path / "ust.json"
    main(["replay", "--protocol", "dual", "--stable-csv", str(fixtures / "ust.csv"),
          "--share-csv", str(fixtures / "luna.csv"), "--out", str(report)])
    capsys.readouterr()
    return report


def test_plot_writes_four_series(capsys, ust_report, tmp_path):
    out = tmp_path / "plots"
    code, _, _ = run_cli(capsys, "plot", "--run", ust_report, "--out", out)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["amounts.csv", "gamma_d.csv", "price.csv", "utility.csv"]
    for name in names:
        lines = (out / name).read_text().splitlines()
        assert lines[0] == "period,value"
        assert len(lines) == 231 + 1
        assert lines[1].startswith("1,")


def test_plot_is_byte_stable(capsys, ust_report, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(capsys, "plot", "--run", ust_report, "--out", a)[0] == 0
    assert run_cli(capsys, "plot", "--run", ust_report, "--out", b)[0] == 0
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_plot_unknown_cohort(capsys, ust_report, tmp_path):
    assert run_cli(capsys, "plot", "--run", ust_report, "--out", tmp_path / "p", "--cohort", "zz")[0] == 2


def test_plot_unwritable_dir(capsys, ust_report, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run_cli(capsys, "plot", "--run", ust_report, "--out", blocker / "sub")[0] == 2


def test_plot_empty_run(capsys, ust_report, tmp_path):
    d = json.loads(ust_report.read_text())
    d["horizon"] = 0
    d["series"] = {k: [] for k in d["series"]}
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps(d))
    assert run_cli(capsys, "plot", "--run", empty, "--out", tmp_path / "p")[0] == 2


def test_fetch_bad_date_is_usage_error(capsys, tmp_path):
    assert run_cli(capsys, "fetch", "--coin", "x", "--from", "2022/01/01", "--to", "2022-02-01")[0] == 1


def test_fetch_unreachable_is_data_error(capsys, tmp_path):
    code = run_cli(
        capsys, "fetch", "--api-base", "http://127.0.0.1:9", "--coin", "x",
        "--from", "2022-01-01", "--to", "2022-01-05", "--cache-dir", tmp_path,
    )[0]
    assert code == 2


def test_internal_error_exit_code(capsys, monkeypatch, tmp_path):
    def boom(*a, **k):
        raise ZeroDivisionError("boom")

    monkeypatch.setattr("stableponzi.cli.run_scenario", boom)
    assert run_cli(capsys, "simulate", "--protocol", "dual", "--periods", 2, "--out", tmp_path / "r.json")[0] == 3
