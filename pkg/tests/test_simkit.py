import numpy as np
import pytest

from risdd.errors import ConfigError, ExperimentError
from risdd.linalg import SeededStream
from risdd.model import Scenario, dbm_to_watts
from risdd.simkit import (Experiment, fair_rotation, run, sim_dd_single,
                          sim_pd_single, single_user_se_curves, write_csv)

BETA = 3.9810717055349695e-07
N0 = 1.2589254117941663e-14


def _scenario(K=1, M=2, N=16, tau_c=200, seed=5, **kw):
    args = dict(K=K, M=M, N=N, N_A=K, rho_A=0.5, P=dbm_to_watts(10.0),
                N0_BS=1e-3, N0_RIS=1e-3, D=8, tau_c=tau_c,
                beta_ub=[1.0] * K, beta_ur=[1.0] * K, beta_rb=1.0, seed=seed)
    args.update(kw)
    return Scenario(**args)


def _exp(**kw):
    args = dict(scenario=_scenario(), protocol="pd", sweep="P_dBm",
                values=[0.0, 10.0], trials=6, threads=1)
    args.update(kw)
    return Experiment(**args)


def test_experiment_validation():
    with pytest.raises(ConfigError):
        _exp(protocol="mle")
    with pytest.raises(ConfigError):
        _exp(sweep="bandwidth")
    with pytest.raises(ConfigError):
        _exp(values=[10.0, 0.0])          # unsorted
    with pytest.raises(ConfigError):
        _exp(trials=0)
    with pytest.raises(ConfigError):
        _exp(metrics=("SE", "EVM"))


def test_run_is_deterministic():
    rows_a = run(_exp())
    rows_b = run(_exp())
    for a, b in zip(rows_a, rows_b):
        assert a.means == b.means
        assert a.stderrs == b.stderrs


def test_thread_count_does_not_change_results():
    rows_1 = run(_exp(threads=1))
    rows_4 = run(_exp(threads=4))
    for a, b in zip(rows_1, rows_4):
        assert a.means == b.means


def test_dd_protocol_reports_stage_metrics():
    rows = run(_exp(protocol="dd", trials=4))
    for r in rows:
        assert set(r.means) == {"NMSE", "BER_stage1", "BER_stage2",
                                "SE", "SER_RIS"}
        assert r.failures == 0
        assert r.means["SE"] > 0


def test_se_improves_with_power():
    rows = run(_exp(values=[-20.0, 20.0], trials=10))
    assert rows[1].means["SE"] > rows[0].means["SE"]


def test_overhead_exceeding_block_fails_trials():
    exp = _exp(scenario=_scenario(tau_c=17), trials=4)
    with pytest.raises(ExperimentError):
        run(exp)


def test_fair_rotation_requires_multiuser():
    with pytest.raises(ConfigError):
        fair_rotation(_exp(protocol="dd-fair"))


def test_fair_rotation_runs_and_balances():
    sc = _scenario(K=2, M=4, N=12, N_A=2, tau_c=300,
                   beta_ub=[1.0, 1.0], beta_ur=[1.0, 1.0])
    rows = run(Experiment(scenario=sc, protocol="dd-fair", sweep="P_dBm",
                          values=[10.0], trials=4, threads=1))
    assert rows[0].failures == 0
    assert rows[0].means["SE"] > 0
    # statistically identical users: per-user averages stay comparable
    # (rotation removes the typical-user advantage in expectation)


def test_write_csv_roundtrip(tmp_path):
    rows = run(_exp(trials=4))
    path = tmp_path / "out.csv"
    text = write_csv(rows, path, metrics=["SE", "NMSE"],
                     metadata={"seed": 5})
    assert path.read_text() == text
    lines = text.strip().splitlines()
    assert lines[0] == "# seed = 5"
    assert lines[1] == "sweep,SE_mean,NMSE_mean,SE_se,NMSE_se,trials,failures"
    cells = lines[2].split(",")
    assert float(cells[0]) == 0.0
    assert cells[-2:] == ["4", "0"]


def test_sim_pd_single_error_stats():
    out = sim_pd_single(N=32, P=1.0, N0=0.5, sigma_g2=1.0, sigma_h2=1.0,
                        D=8, n_channels=200, n_symbols=50,
                        stream=SeededStream(3, 0))
    assert 0 <= out["ber"] <= out["ser"] <= 1
    assert out["ber_se"] > 0


def test_sim_dd_single_stages():
    out = sim_dd_single(N=32, P=1.0, N0_BS=0.1, N0_RIS=0.1, sigma_g2=1.0,
                        sigma_h2=1.0, D=8, n_channels=200, n_symbols=50,
                        stream=SeededStream(4, 0))
    assert set(out) == {"stage1", "stage2"}
    assert 0 <= out["stage2"]["ber"] <= 1


def test_single_user_se_curves_shape():
    grid = [0.0, 5.0, 10.0]
    out = single_user_se_curves(N=50, N0_BS=N0, N0_RIS=N0 * 1e4,
                                sigma_g2=BETA, sigma_h2=BETA, D=8,
                                tau_c=500, p_dbm_grid=grid,
                                n_channels=300, n_symbols=100, seed=9)
    assert out["P_dBm"] == grid
    assert len(out["SE_PD"]) == len(out["SE_DD"]) == 3
    # more power never hurts on this link
    assert out["SE_PD"][-1] >= out["SE_PD"][0]
