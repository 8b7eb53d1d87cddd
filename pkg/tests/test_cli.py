"""Command-line entry points: run, sweep, gof; exit codes and file outputs."""

import csv
import json

import numpy as np
import pytest

from riskengine.cli import main

from conftest import make_panel


def write_prices(path, n_rows=200, tickers=("AA", "BB"), seed=7):
    panel = make_panel(n_rows, tickers, seed)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date", *panel.tickers])
        for i, d in enumerate(panel.dates):
            w.writerow([d, *[repr(float(v)) for v in panel.prices[i]]])
    return panel


@pytest.fixture
def prices_csv(tmp_path):
    p = tmp_path / "prices.csv"
    write_prices(p)
    return str(p)


RUN_FLAGS = [
    "--models", "gmm,hs,param",
    "--components", "2",
    "--alpha", "0.05",
    "--window-long", "120",
    "--window-short", "40",
    "--paths", "300",
    "--days", "25",
    "--seed", "5",
]


def test_run_writes_report(prices_csv, tmp_path, capsys):
    out = tmp_path / "run_out"
    code = main(["run", "--prices", prices_csv, "--out", str(out), *RUN_FLAGS,
                 "--portfolio", "equal"])
    assert code == 0
    text = capsys.readouterr().out
    assert "25 evaluation days" in text
    est = (out / "estimates.csv").read_text().splitlines()
    assert est[0] == "date,ticker,model_tag,alpha,var,es,n_tail,seed"
    # 3 models x (2 tickers + portfolio) x 1 alpha x 25 days
    assert len(est) == 1 + 3 * 3 * 25
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["portfolio"] is not None


def test_run_without_portfolio(prices_csv, tmp_path):
    out = tmp_path / "solo"
    code = main(["run", "--prices", prices_csv, "--out", str(out), *RUN_FLAGS])
    assert code == 0
    est = (out / "estimates.csv").read_text()
    assert "PORTFOLIO" not in est


def test_run_deterministic_bytes(prices_csv, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--prices", prices_csv, "--out", str(a), *RUN_FLAGS]) == 0
    assert main(["run", "--prices", prices_csv, "--out", str(b), *RUN_FLAGS]) == 0
    assert (a / "estimates.csv").read_bytes() == (b / "estimates.csv").read_bytes()
    assert (a / "backtest.csv").read_bytes() == (b / "backtest.csv").read_bytes()


def test_run_dump_scenarios(prices_csv, tmp_path):
    out = tmp_path / "dump"
    code = main([
        "run", "--prices", prices_csv, "--out", str(out), "--models", "gmm",
        "--components", "2", "--alpha", "0.05", "--window-long", "120",
        "--window-short", "40", "--paths", "150", "--days", "2", "--seed", "1",
        "--dump-scenarios",
    ])
    assert code == 0
    files = list((out / "scenarios").iterdir())
    assert len(files) == 2
    header = files[0].read_text().splitlines()[0]
    assert header == "path,step,ticker,log_return"


def test_run_missing_prices_file(tmp_path):
    code = main(["run", "--prices", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "o"), *RUN_FLAGS])
    assert code == 3


def test_run_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,X\n2020-01-01,abc\n")
    code = main(["run", "--prices", str(bad), "--out", str(tmp_path / "o"), *RUN_FLAGS])
    assert code == 3


def test_run_config_errors_exit_2(prices_csv, tmp_path):
    # window longer than the panel
    code = main(["run", "--prices", prices_csv, "--out", str(tmp_path / "o"),
                 "--window-long", "150", "--window-short", "40", "--days", "500",
                 "--paths", "150", "--seed", "0"])
    assert code == 2
    # unparsable component list
    code = main(["run", "--prices", prices_csv, "--out", str(tmp_path / "o"),
                 "--components", "two", *["--paths", "150"]])
    assert code == 2


def test_argparse_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run"])  # --prices and --out are required
    assert exc.value.code == 2
    capsys.readouterr()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "riskengine" in capsys.readouterr().out


def test_config_file_with_flag_overrides(prices_csv, tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "models": ["hs"], "alphas": [0.05], "long_len": 120, "short_len": 40,
        "paths": 200, "eval_days": 10, "seed": 3,
    }))
    out = tmp_path / "cfgrun"
    code = main(["run", "--prices", prices_csv, "--config", str(cfg_path),
                 "--out", str(out), "--days", "5"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["eval_days"] == 5  # flag wins over file
    assert manifest["config"]["models"] == ["hs"]


def test_config_file_unknown_key(prices_csv, tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"models": ["hs"], "mystery": 1}))
    code = main(["run", "--prices", prices_csv, "--config", str(cfg_path),
                 "--out", str(tmp_path / "o")])
    assert code == 2


def test_sweep_grid_colon_syntax(prices_csv, tmp_path):
    out = tmp_path / "sweep"
    code = main([
        "sweep", "--prices", prices_csv, "--out", str(out),
        "--param", "sigma-short", "--grid", "20:40:10",
        "--models", "gmm", "--components", "2", "--alpha", "0.05",
        "--window-long", "120", "--paths", "200", "--days", "10", "--seed", "2",
    ])
    assert code == 0
    subdirs = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert subdirs == ["short_020", "short_030", "short_040"]
    rows = (out / "sweep_verdicts.csv").read_text().splitlines()
    assert rows[0].startswith("sigma_short,")
    assert len(rows) == 1 + 3 * 1 * 2 * 1  # grid x model x tickers x alpha


def test_sweep_bad_grid(prices_csv, tmp_path):
    code = main(["sweep", "--prices", prices_csv, "--out", str(tmp_path / "s"),
                 "--param", "sigma-short", "--grid", "40:20:10",
                 "--window-long", "120", "--paths", "200", "--days", "5"])
    assert code == 2


def test_gof_table_and_csv(prices_csv, tmp_path, capsys):
    out = tmp_path / "gof.csv"
    code = main(["gof", "--prices", prices_csv, "--components", "2,3",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "normal" in text and "gmm2" in text
    rows = out.read_text().splitlines()
    assert rows[0] == "ticker,model,loglik_per_sample,ks_stat,ks_pvalue,pdf_rmse"
    # 2 tickers x (normal + gmm2 + gmm3)
    assert len(rows) == 1 + 2 * 3
    for row in rows[1:]:
        fields = row.split(",")
        assert float(fields[3]) <= 1.0
        assert 0.0 <= float(fields[4]) <= 1.0


def test_gof_mixture_beats_normal_on_mixture_data(tmp_path, capsys):
    # returns drawn from a two-regime mixture: the 2-component fit should
    # dominate the single normal in log-likelihood
    rng = np.random.default_rng(3)
    n = 500
    pick = rng.random(n) < 0.75
    steps = np.where(pick, rng.normal(0.001, 0.006, n), rng.normal(-0.002, 0.03, n))
    prices = 100 * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    p = tmp_path / "mix.csv"
    import datetime as dt

    d0 = dt.date(2017, 1, 1)
    with open(p, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date", "MIX"])
        for i, v in enumerate(prices):
            w.writerow([(d0 + dt.timedelta(days=i)).isoformat(), repr(float(v))])
    out = tmp_path / "gof.csv"
    assert main(["gof", "--prices", str(p), "--components", "2", "--seed", "0",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    rows = [r.split(",") for r in out.read_text().splitlines()[1:]]
    ll = {r[1]: float(r[2]) for r in rows}
    assert ll["gmm2"] > ll["normal"]
