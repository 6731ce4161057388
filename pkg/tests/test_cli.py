import json
import subprocess
import sys

import pytest

from cbqsdc.cli import main, render_text


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def test_run_bell_reports_table_values(capsys):
    code, rep = run_json(capsys, "run", "--scenario", "bell", "--pairs", "1", "--check", "0", "--seed", "7")
    assert code == 0
    assert set(rep) == {"config", "verdicts", "decode", "error_rates", "efficiency"}
    assert rep["efficiency"]["eta2_percent"] == 100.0
    assert rep["efficiency"]["eta1_percent"] == 33.33
    assert rep["decode"]["success_rate"] == 1


def test_intercept_resend_aborts_every_run(capsys):
    code, rep = run_json(capsys, "run", "--attack", "intercept-resend", "--check", "200", "--trials", "30")
    assert code == 0
    assert rep["verdicts"]["ABORT"] == 30
    assert rep["error_rates"]["per_check"]["rate"] == pytest.approx(0.25, abs=0.02)


def test_no_permission(capsys):
    code, rep = run_json(capsys, "run", "--no-permission", "--trials", "4")
    assert code == 0
    assert rep["decode"]["success_rate"] == "n/a"
    assert rep["decode"]["withheld"] == 4


def test_optional_sections(capsys):
    code, rep = run_json(capsys, "run", "--leakage", "--verify-tables")
    assert code == 0
    mi = rep["leakage"]["mutual_information_bits"]
    assert mi["joint"]["with_permission"] == 2 and mi["alice"]["with_permission"] == 0
    assert all(c["status"] == "verified" for c in rep["table_checks"])


def test_tables_default_and_flags(capsys):
    code, rep = run_json(capsys, "tables", "--ghz", "--ghz-bell", "--encoding", "--decodability")
    assert code == 0 and rep["all_verified"]
    names = [s["name"] for s in rep["table_checks"]]
    assert names == ["swap groups", "encoding tables", "GHZ swap table", "GHZ to Bell", "layout decodability"]
    ghz = rep["table_checks"][2]
    assert len(ghz["rows"]) == 8 and all(r["status"] == "verified" for r in ghz["rows"])
    triples = rep["table_checks"][3]["triples"]
    assert len(triples) == 8 and all(t["probability"] == 0.125 for t in triples)


def test_sweep_columns(capsys):
    code, rep = run_json(capsys, "attack-sweep", "--attack", "entangle-measure", "--beta2", "0.1,0.5",
                         "--check", "500", "--trials", "10", "--check-bases", "Z")
    assert code == 0
    for row in rep["error_rates"]:
        z = row["z_error"]
        assert z["ci95"][0] - 0.02 <= row["beta2"] <= z["ci95"][1] + 0.02
    code, rep = run_json(capsys, "attack-sweep", "--attack", "none", "--trials", "3", "--check", "100")
    assert rep["error_rates"][0]["per_check"]["rate"] == 0


def test_sweep_cnot(capsys):
    code, rep = run_json(capsys, "attack-sweep", "--attack", "cnot", "--trials", "10", "--check", "500")
    row = rep["error_rates"][0]
    assert row["z_error"]["rate"] == 0
    assert row["x_error"]["rate"] == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("argv", [
    ["run", "--pairs", "0"],
    ["run", "--threshold", "1.5"],
    ["run", "--scenario", "qkd"],
    ["attack-sweep", "--attack", "entangle-measure", "--beta2", "0.2,x"],
    ["attack-sweep", "--attack", "entangle-measure", "--beta2", "1.2"],
])
def test_config_errors_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1


def test_json_is_byte_identical(tmp_path):
    args = ["run", "--scenario", "network", "--trials", "5", "--check", "4", "--seed", "13", "--format", "json"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_text_and_json_carry_same_numbers(capsys):
    args = ["run", "--trials", "3", "--check", "10", "--attack", "cnot", "--seed", "4"]
    main([*args, "--format", "json"])
    rep = json.loads(capsys.readouterr().out)
    main([*args, "--format", "text"])
    text = capsys.readouterr().out
    assert text.splitlines() == render_text(rep)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "cbqsdc", "tables", "--format", "json"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["all_verified"]
