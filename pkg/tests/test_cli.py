from __future__ import annotations

import json
import math

import pytest

from charge_meter import cli
from charge_meter.exact import T_CRITICAL
from charge_meter.report import parse_csv


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exact_json(capsys):
    code, out, _ = run(capsys, "exact", "--ell", "4", "--L", "4", "--t", repr(T_CRITICAL), "--form", "ff")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == "1"
    assert set(rep) >= {"sign", "log_abs", "log10_abs"}
    assert rep["log10_abs"] == pytest.approx(rep["log_abs"] / math.log(10))


def test_exact_forms_agree(capsys):
    vals = []
    for form in ("product", "pfaffian"):
        _, out, _ = run(capsys, "exact", "--ell", "4", "--L", "2", "--beta", "0.3", "--J", "1.2", "--form", form)
        vals.append(json.loads(out)["log_abs"])
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["exact", "--t", "1.5"],
    ["exact", "--t", "0.3", "--beta", "0.2"],
    ["exact", "--t", "0.3", "--form", "ff"],
    ["exact", "--sector", "zz", "--t", "0.3"],
    ["bogus"],
    ["strip", "--ell-list", "6,8"],
    ["charge", "--lambda", "0.2"],
    ["oracle", "--ell", "6", "--L", "6", "--t", "0.2"],
])
def test_validation_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err


def test_malformed_config_writes_nothing(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[lattice]\nell = 4\nfoo = 1\n[output]\npath = %s\n" % (tmp_path / "r.json"), encoding="utf-8")
    code, out, _ = run(capsys, "exact", "--config", str(cfg), "--t", "0.3")
    assert code == 2 and out == ""
    assert not (tmp_path / "r.json").exists()


def test_config_values_and_cli_override(tmp_path, capsys):
    out_path = tmp_path / "r.json"
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[lattice]\nell = 2\nL = 4\n[run]\nt = 0.3\nform = pfaffian\n[output]\npath = {out_path}\n",
                   encoding="utf-8")
    assert run(capsys, "exact", "--config", str(cfg))[0] == 0
    rep = json.loads(out_path.read_text(encoding="utf-8"))
    assert (rep["ell"], rep["L"], rep["t"], rep["form"]) == (2, 4, 0.3, "pfaffian")
    assert run(capsys, "exact", "--config", str(cfg), "--L", "2")[0] == 0
    assert json.loads(out_path.read_text(encoding="utf-8"))["L"] == 2


def test_oracle_checks(tmp_path, capsys):
    for check in ("signs", "combine", "lemma1-free"):
        code, out, _ = run(capsys, "oracle", "--ell", "2", "--L", "2", "--t", "0.4", "--check", check)
        assert code == 0 and json.loads(out)["ok"] is True
    coup = tmp_path / "t.csv"
    coup.write_text("bond_index,t_b\n" + "".join(f"{b},{0.1 + 0.05 * b}\n" for b in range(8)), encoding="utf-8")
    code, out, _ = run(capsys, "oracle", "--couplings-file", str(coup), "--check", "signs")
    assert code == 0 and json.loads(out)["ok"] is True
    coup.write_text("bond_index,t_b\n0,0.5\n", encoding="utf-8")
    assert run(capsys, "oracle", "--couplings-file", str(coup))[0] == 2


def test_lemma1_csv(capsys):
    code, out, _ = run(capsys, "lemma1", "--lambda", "0.3", "--beta-grid", "0.2,0.7")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == list(cli.LEMMA1_COLUMNS)
    assert [r["beta"] for r in rows] == [0.2, 0.7]
    assert all(r["verdicts"] == "lower=pass;upper=pass;sumpos=pass" for r in rows)


def test_strip_csv(capsys):
    code, out, _ = run(capsys, "strip", "--ell-list", "4,6", "--beta", "0.44")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == list(cli.STRIP_COLUMNS)
    assert [r["ell"] for r in rows] == [4, 6]


def test_charge_analytic(tmp_path, capsys):
    table = tmp_path / "c.csv"
    code, out, _ = run(capsys, "charge", "--mode", "analytic", "--ell-list", "64,128,256,512", "--csv", str(table))
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["c_hat"] - 0.5) < 1e-4
    assert set(rep) >= {"c_hat", "spread", "beta_c_used"}
    header, rows = parse_csv(table.read_text(encoding="utf-8"))
    assert header == list(cli.CHARGE_COLUMNS) and len(rows) == 4


def test_charge_strip(capsys):
    code, out, _ = run(capsys, "charge", "--mode", "strip", "--ell-list", "6,8,10")
    assert code == 0
    assert abs(json.loads(out)["c_hat"] - 0.5) < 0.01


def test_rg_check(capsys):
    code, out, _ = run(capsys, "rg-check", "--ell", "64", "--L", "64", "--checks", "unity,rotation,localization")
    assert code == 0
    rep = json.loads(out)
    assert rep["unity_error"] < 1e-12 and rep["unitarity_error"] < 1e-15
    assert "poisson_defect" not in rep


def test_reproduce_single_suite(capsys):
    code, out, err = run(capsys, "reproduce", "--suite", "onsager")
    assert code == 0
    assert json.loads(out)["verdict"] == "PASS"
    assert "[PASS] onsager" in err


def test_reports_are_deterministic(tmp_path, capsys):
    texts = []
    for i in range(2):
        path = tmp_path / f"r{i}.csv"
        run(capsys, "lemma1", "--lambda", "0.1", "--beta-grid", "0.3", "--output", str(path))
        texts.append(path.read_bytes())
    assert texts[0] == texts[1]


def test_numerical_failure_exit_3(monkeypatch, capsys):
    from charge_meter.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("no")
    monkeypatch.setattr(cli.strip, "dominant_pair", boom)
    code, _, err = run(capsys, "strip", "--ell-list", "4", "--beta", "0.4")
    assert code == 3 and "ConvergenceError" in err


def test_io_failure_exit_3(tmp_path, capsys):
    code, _, _ = run(capsys, "exact", "--t", "0.3", "--output", str(tmp_path / "missing" / "r.json"))
    assert code == 3


def test_thread_cap(monkeypatch):
    from charge_meter.parallel import thread_cap
    monkeypatch.setenv("CHARGE_METER_THREADS", "2")
    assert thread_cap(5) == 2 and thread_cap(1) == 1
    monkeypatch.setenv("CHARGE_METER_THREADS", "0")
    with pytest.raises(ValueError):
        thread_cap()
