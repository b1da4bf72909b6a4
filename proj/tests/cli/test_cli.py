"""End-to-end checks of the cpss command-line tool."""

import csv
import io
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("CPSS_BIN", "cpss")
DATA = Path(__file__).resolve().parents[1] / "data"
TOY = str(DATA / "toy_regression.csv")
TOY_BIN = str(DATA / "toy_classification.csv")


def cli(*args, check=True):
    res = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if check and res.returncode != 0:
        raise AssertionError(f"exit {res.returncode}: {res.stderr}")
    return res


def report(text):
    header = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("# "):
            for item in line[2:].split():
                if "=" in item:
                    k, v = item.split("=", 1)
                    header[k] = v
        else:
            rows.append(line)
    return header, list(csv.DictReader(io.StringIO("\n".join(rows))))


def golden_table():
    cells = {}
    with open(DATA / "min_d_table.csv") as f:
        for r in csv.DictReader(f):
            cells[(float(r["theta"]), round(float(r["tau"]), 2))] = float(r["value"])
    return cells


def test_dtable_reproduces_every_printed_cell():
    out = cli("dtable", "--reference").stdout
    rows = list(csv.reader(io.StringIO(out)))
    thetas = [float(t) for t in rows[0][1:]]
    assert thetas == pytest.approx([i / 100 for i in range(1, 11)])
    assert len(rows) == 1 + 61
    golden = golden_table()
    assert len(golden) == 610
    for r in rows[1:]:
        tau = round(float(r[0]), 2)
        for th, cell in zip(thetas, r[1:]):
            assert "e" in cell
            assert float(cell) == pytest.approx(golden[(th, tau)], rel=5e-3), (th, tau)


def test_dtable_spot_cells_and_fixed_width():
    out = cli("dtable", "--reference", "--theta", "0.01", "0.03", "0.06", "--format", "fixed").stdout
    lines = out.splitlines()
    assert len({len(l) for l in lines}) == 1
    table = {l.split()[0]: l.split()[1:] for l in lines[1:]}
    assert table["0.30"][0] == "6.11e-04"
    assert table["0.90"][1] == "5.80e-05"
    assert table["0.59"][2] == "4.39e-03"


def test_dtable_rejects_off_grid_range():
    assert cli("dtable", "--tau-min", "0.305", check=False).returncode == 2


def test_bounds_compare_curves():
    out = cli("bounds-compare", "--p", 1000, "--q", 50, "--B", 50).stdout
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["tau"]) == pytest.approx(0.51)
    assert float(rows[-1]["tau"]) == pytest.approx(1.0)
    at = {round(float(r["tau"]), 2): r for r in rows}
    r = at[0.9]
    assert float(r["r_concave"]) < float(r["unimodal"]) < float(r["worst_case"]) <= float(r["mb"])
    # 1/(2 tau - 1) blows up near 1/2 and is clipped at p.
    assert float(at[0.51]["mb"]) <= 1000
    for col in ("mb", "worst_case", "unimodal", "r_concave"):
        vals = [float(r[col]) for r in rows if r[col] != ""]
        assert all(0 <= v <= 1000 for v in vals)
        assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:])), col


def test_run_selects_the_signals(tmp_path):
    res = cli("run", "--input", TOY, "--q", 4, "--level", 1, "--output", tmp_path / "a.csv")
    assert res.stdout == ""
    text = (tmp_path / "a.csv").read_text()
    header, rows = report(text)
    assert header["q"] == "4"
    assert float(header["theta"]) == pytest.approx(0.2)
    assert float(header["bound"]) <= 1.0
    assert list(rows[0]) == ["variable", "pi_hat", "pi_tilde", "selected"]
    chosen = [r["variable"] for r in rows if r["selected"] == "1"]
    assert chosen == ["x3", "x8", "x14"]
    for r in rows:
        if r["variable"] in chosen:
            assert float(r["pi_hat"]) >= 0.95
        assert float(r["pi_hat"]) >= float(r["pi_tilde"])

    cli("run", "--input", TOY, "--q", 4, "--level", 1, "--output", tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_bytes() == text.encode()


def test_run_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {TOY_BIN}\nresponse = label\nfamily = binomial\nq = 3\nstratify = true\nseed = 11\n")
    header, rows = report(cli("run", "--config", cfg).stdout)
    assert header["selector"] == "lasso(binomial,"
    assert header["seed"] == "11"
    assert "x3" in [r["variable"] for r in rows if r["selected"] == "1"]
    header2, _ = report(cli("run", "--config", cfg, "--seed", 12).stdout)
    assert header2["seed"] == "12"


def test_run_with_fixed_lambda_estimates_q():
    header, rows = report(cli("run", "--input", TOY, "--lambda", 0.5).stdout)
    q_hat = float(header["q_hat"])
    assert q_hat == pytest.approx(sum(float(r["pi_hat"]) for r in rows))
    assert float(header["theta"]) == pytest.approx(q_hat / 20)


def test_generous_level_keeps_everything_selected():
    header, rows = report(cli("run", "--input", TOY, "--q", 4, "--level", 20).stdout)
    assert float(header["tau"]) == 0.0
    assert all(r["selected"] == "1" for r in rows)


def test_exit_codes(tmp_path):
    assert cli("run", "--input", tmp_path / "missing.csv", "--q", 2, check=False).returncode == 2
    assert cli("run", "--input", TOY, "--q", 2, "--lambda", 0.1, check=False).returncode == 2
    assert cli("run", "--input", TOY, check=False).returncode == 2
    assert cli("run", "--input", TOY, "--q", 2, "--family", "poisson", check=False).returncode == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x1,x2\n1,2,a\n2,3,4\n3,1,1\n")
    res = cli("run", "--input", bad, "--q", 1, check=False)
    assert res.returncode == 2 and "not numeric" in res.stderr
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    assert cli("run", "--config", cfg, "--input", TOY, "--q", 2, check=False).returncode == 2

    res = cli("run", "--input", TOY, "--q", 4, "--level", 1e-4, check=False)
    assert res.returncode == 3
    assert "smallest achievable" in res.stderr
    assert res.stdout == ""

    res = cli("simulate", "--family", "binomial", "--bayes-error", 1e-9, "--n", 40, "--p", 20,
              "--replications", 2, "--oracle-replications", 10, "--B", 5, check=False)
    assert res.returncode == 4


SMALL = ["--n", 60, "--p", 30, "--s", 4, "--B", 20, "--replications", 20, "--oracle-replications", 200]


def test_simulate_smoke_runs(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("id = smoke\nseed = 5\n")
    out = cli("simulate", "--config", cfg, *SMALL, "--family", "gaussian", "--rho", 0, 0.5).stdout
    out += "".join(cli("simulate", "--config", cfg, *SMALL, "--family", "binomial", "--rho", 0,
                       "--bayes-error", 0.15).stdout.splitlines(True)[1:])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["scenario_id", "method", "ratio", "realized_control", "control_se", "level",
                             "threshold"]
    assert {r["scenario_id"] for r in rows} == {"smoke-gaussian-rho0", "smoke-gaussian-rho0.5", "smoke"}
    assert len(rows) == 12
    for r in rows:
        assert float(r["ratio"]) >= 0
        assert float(r["control_se"]) >= 0
        if r["method"] == "oracle_cpss":
            assert float(r["ratio"]) == 1.0

    again = cli("simulate", "--config", cfg, *SMALL, "--family", "gaussian", "--rho", 0, 0.5).stdout
    assert again == out[: len(again)]


def test_check_shape(tmp_path):
    prof = tmp_path / "profile.csv"
    cli("run", "--input", TOY, "--q", 4, "--profile-out", prof)
    out = cli("check-shape", "--profile", prof, "--r", -0.5).stdout
    header, rows = report(out)
    assert header["statistic"] == "pi_tilde"
    assert header["values"] == "20"
    assert header["unimodal"] in ("yes", "no")
    assert "r_concave(-0.5)" in header
    masses = [float(r["mass"]) for r in rows]
    assert len(masses) == 51
    assert sum(masses) == pytest.approx(1.0)

    out = cli("check-shape", "--profile", prof, "--statistic", "pi_hat", "--variables", "x3", "x8").stdout
    header, rows = report(out)
    assert header["grid"] == "1/100"
    assert float(rows[-1]["mass"]) == pytest.approx(1.0)
    assert header["unimodal"] == "yes"
    assert cli("check-shape", "--profile", prof, "--variables", "nope", check=False).returncode == 2
