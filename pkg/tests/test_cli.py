import subprocess
import sys

import pytest

from risdd.cli import main

CFG = """
[scenario]
K = 1
M = 1
N = 50
N_A = 1
rho_A = 0.5
P_dBm = 10.0
D = 8
tau_c = 500
noise_dbm_per_hz = -169.0
ris_noise_dbm_per_hz = -124.8
beta_ub = 0.0
beta_ur = 3.9810717055349695e-7
beta_rb = 3.9810717055349695e-7
seed = 20

[experiment]
protocol = "pd"
sweep = "P_dBm"
values = [0.0, 10.0]
trials = 4

[analysis]
p_dbm = [0.0, 10.0]
bracket_dbm = [-2.0, 15.0]
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "link.toml"
    p.write_text(CFG)
    return str(p)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_columns(cfg_file, capsys):
    code, out, _ = _run(["analyze", cfg_file], capsys)
    assert code == 0
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert lines[0] == "P_dBm,SE_PD,SE_DD,BER_PD,BER_DD1,BER_DD2"
    row = lines[1].split(",")
    assert len(row) == 6 and float(row[0]) == 0.0


def test_analyze_config_echo_roundtrip(cfg_file, capsys, tmp_path):
    code, out, _ = _run(["analyze", cfg_file, "--mod", "16"], capsys)
    assert code == 0
    echoed = "\n".join(ln[4:] for ln in out.splitlines()
                       if ln.startswith("# | ")) + "\n"
    again = tmp_path / "echo.toml"
    again.write_text(echoed)
    code2, out2, _ = _run(["analyze", str(again)], capsys)
    assert code2 == 0
    assert out2 == out


def test_simulate_csv(cfg_file, capsys):
    code, out, _ = _run(["simulate", cfg_file, "--trials", "3",
                         "--threads", "1"], capsys)
    assert code == 0
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert lines[0].startswith("sweep,")
    assert lines[0].endswith("trials,failures")
    assert lines[1].split(",")[-2:] == ["3", "0"]
    assert len(lines) == 3


def test_simulate_deterministic(cfg_file, capsys):
    code1, out1, _ = _run(["simulate", cfg_file], capsys)
    code2, out2, _ = _run(["simulate", cfg_file], capsys)
    assert code1 == code2 == 0
    assert out1 == out2


def test_seed_override_changes_output(cfg_file, capsys):
    _, out1, _ = _run(["simulate", cfg_file], capsys)
    _, out2, _ = _run(["simulate", cfg_file, "--seed", "99"], capsys)
    assert out1 != out2


def test_crossover_value(cfg_file, capsys):
    code, out, _ = _run(["crossover", cfg_file], capsys)
    assert code == 0
    last = out.strip().splitlines()[-1]
    key, _, val = last.partition(" = ")
    assert key == "crossover_dbm"
    assert float(val) == pytest.approx(2.15, abs=0.2)


def test_crossover_without_sign_change_exits_3(cfg_file, capsys):
    code, _, err = _run(["crossover", cfg_file,
                         "--P_dBm=10", "--tau_c=500",
                         "--ris_noise_dbm_per_hz=-169"], capsys)
    assert code == 3
    assert "NoCrossover" in err


def test_missing_config_exits_2(capsys):
    code, _, err = _run(["analyze", "no-such-file.toml"], capsys)
    assert code == 2
    assert "error" in err


def test_bad_override_exits_2(cfg_file, capsys):
    code, _, _ = _run(["analyze", cfg_file, "--carrier=28e9"], capsys)
    assert code == 2


def test_validate_passes(capsys):
    code, out, _ = _run(["validate"], capsys)
    assert code == 0
    assert "PASS" in out
    assert "FAIL" not in out


def test_out_file(cfg_file, tmp_path, capsys):
    dest = tmp_path / "res.csv"
    code, out, _ = _run(["analyze", cfg_file, "--out", str(dest)], capsys)
    assert code == 0 and out == ""
    assert dest.read_text().splitlines()[0].startswith("# | ")


def test_console_entry_point(cfg_file):
    proc = subprocess.run([sys.executable, "-m", "risdd.cli",
                           "crossover", cfg_file],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "crossover_dbm" in proc.stdout
