import csv
import io
import json

import numpy as np
import pytest

from conftest import write_price_csv
from emhkit import cli, hurst, market, synth
from emhkit import pipeline as P
from emhkit.series import PriceSeries, log_returns

SUBCOMMANDS = ("ingest", "returns", "hurst", "embed", "bds", "lyapunov", "garch", "entropy", "hhi",
               "report", "synth", "pipeline")


@pytest.fixture
def prices(tmp_path):
    p = synth.gen_gbm(1200, seed=3)
    return p, write_price_csv(tmp_path / "gbm.csv", p)


def run(argv, capsys):
    rc = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_help_lists_all_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for name in SUBCOMMANDS:
        assert name in text


def test_unknown_flag_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["hurst", "x.csv", "--no-such-flag"])
    assert exc.value.code != 0
    assert "unrecognized arguments" in capsys.readouterr().err


@pytest.mark.parametrize("method", ["dfa", "rs-al", "gph"])
def test_hurst_matches_library_bytes(method, prices, capsys):
    p, path = prices
    rc, out, _ = run(["hurst", path, "--method", method], capsys)
    assert rc == 0
    r = log_returns(PriceSeries(p)).values
    lib = {"dfa": hurst.dfa, "rs-al": hurst.rs_hurst_corrected, "gph": hurst.gph}[method](r)
    assert out == P.dump_json(lib.to_dict())


def test_hurst_csv_points(prices, capsys):
    _, path = prices
    rc, out, _ = run(["hurst", path, "--method", "dfa", "--csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rc == 0 and rows[0] == ["log_x", "log_y"] and len(rows) > 5


def test_hurst_rolling(prices, capsys):
    _, path = prices
    rc, out, _ = run(["hurst", path, "--method", "dfa", "--window", 400, "--step", 200], capsys)
    d = json.loads(out)
    assert rc == 0 and len(d["rolling"]) == (1199 - 400) // 200 + 1


def test_out_file(prices, tmp_path, capsys):
    _, path = prices
    target = tmp_path / "h.json"
    rc, out, _ = run(["hurst", path, "--method", "dfa", "--out", target], capsys)
    assert rc == 0 and out == ""
    assert json.loads(target.read_text())["method"]


def test_ingest_and_returns(prices, capsys):
    p, path = prices
    rc, out, _ = run(["ingest", path], capsys)
    assert rc == 0 and json.loads(out)["n"] == len(p)
    rc, out, _ = run(["returns", path, "--csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["timestamp", "return"] and len(rows) == len(p)
    assert float(rows[1][1]) == pytest.approx(np.log(p[1] / p[0]), abs=1e-15)


def test_bds_subcommand(prices, capsys):
    _, path = prices
    rc, out, _ = run(["bds", path, "--mmax", 3], capsys)
    assert rc == 0 and "dimensions" in json.loads(out)


def test_hhi_subcommand(capsys):
    rc, out, _ = run(["hhi", "0.5", "0.5", "--fraction"], capsys)
    d = json.loads(out)
    assert rc == 0 and d["HHI"] == pytest.approx(5000.0) and d["class"] == "concentrated"


def test_hhi_error_exit(capsys):
    rc, _, err = run(["hhi", "1.5", "--fraction"], capsys)
    assert rc == 1 and "error" in err


def test_missing_input_exit(tmp_path, capsys):
    rc, _, err = run(["hurst", tmp_path / "absent.csv"], capsys)
    assert rc == 1 and "error" in err


def test_synth_writes_csv(tmp_path, capsys):
    target = tmp_path / "sub" / "fgn.csv"
    rc, _, _ = run(["synth", "--kind", "fgn", "--H", 0.7, "--n", 512, "--seed", 42, "--out", target], capsys)
    assert rc == 0
    rows = list(csv.reader(target.open()))
    assert rows[0] == ["timestamp", "value"] and len(rows) == 513
    values = np.array([float(r[1]) for r in rows[1:]])
    assert np.array_equal(values, synth.gen_fgn(0.7, 512, 42))


def test_report_panel(data_dir, capsys):
    rc, out, _ = run(["report", "--panel", data_dir / "annual_panel_2005_2013.csv", "--json"], capsys)
    d = json.loads(out)
    panel = market.load_panel(data_dir / "annual_panel_2005_2013.csv")
    mat, _ = market.correlation_matrix(panel)
    assert rc == 0 and d["correlation"]["columns"] == list(mat.columns)
    assert np.allclose(np.array(d["correlation"]["matrix"], dtype=float), mat.to_numpy(), equal_nan=True)


def test_report_needs_input(capsys):
    rc, _, err = run(["report"], capsys)
    assert rc == 1 and "--bundle" in err


def test_env_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(tmp_path / "runs"))
    assert cli.default_output_dir() == tmp_path / "runs"


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
