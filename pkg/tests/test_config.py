import math

import pytest

from risdd.config import (analysis_grid, config_path, crossover_bracket,
                          experiment_from_config, load_config,
                          scenario_from_config)
from risdd.errors import ConfigError

GOOD = """
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
ris_noise_dbm_per_hz = -125.0
bandwidth_hz = 1e6
beta_ub = 0.0
beta_ur = 3.9810717055349695e-7
beta_rb = 3.9810717055349695e-7
seed = 20

[experiment]
protocol = "dd"
sweep = "P_dBm"
values = { start = -5.0, stop = 15.0, step = 5.0 }
trials = 4

[analysis]
p_dbm = [0.0, 5.0, 10.0]
bracket_dbm = [-10.0, 20.0]
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "scn.toml"
    p.write_text(GOOD)
    return load_config(str(p))


def test_shipped_configs_load_and_build():
    for name in ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7"):
        cfg = load_config(config_path(name))
        sc = scenario_from_config(cfg)
        experiment_from_config(cfg, sc)


def test_config_path_rejects_unknown():
    with pytest.raises(ConfigError):
        config_path("no-such-config")


def test_unit_conversions(cfg):
    sc = scenario_from_config(cfg)
    assert sc.P == pytest.approx(10.0 ** ((10.0 - 30.0) / 10.0))
    # -169 dBm/Hz over 1 MHz
    assert sc.N0_BS == pytest.approx(10.0 ** ((-169.0 - 30.0) / 10.0) * 1e6)
    assert sc.N0_RIS == pytest.approx(10.0 ** ((-125.0 - 30.0) / 10.0) * 1e6)
    assert sc.D == 8 and sc.seed == 20


def test_scenario_overrides(cfg):
    sc = scenario_from_config(cfg, overrides={"D": 16, "P_dBm": 0.0})
    assert sc.D == 16
    assert sc.P == pytest.approx(1e-3)
    with pytest.raises(ConfigError):
        scenario_from_config(cfg, overrides={"bandwidth": 2e6})


def test_experiment_grid_expansion(cfg):
    sc = scenario_from_config(cfg)
    exp = experiment_from_config(cfg, sc)
    assert exp.values == [-5.0, 0.0, 5.0, 10.0, 15.0]
    assert exp.trials == 4
    assert exp.protocol == "dd"


def test_analysis_grid_and_bracket(cfg):
    assert analysis_grid(cfg) == [0.0, 5.0, 10.0]
    assert crossover_bracket(cfg) == (-10.0, 20.0)
    cfg2 = {k: dict(v) for k, v in cfg.items() if isinstance(v, dict)}
    del cfg2["analysis"]
    assert analysis_grid(cfg2) == [-5.0, 0.0, 5.0, 10.0, 15.0]
    assert crossover_bracket(cfg2) == (-5.0, 15.0)


def test_unknown_keys_rejected(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[scenario]\nfrequency = 2.4\n")
    with pytest.raises(ConfigError):
        load_config(str(p))
    p.write_text("[channel]\nK = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(p))
    p.write_text("[scenario\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_grid_validation(cfg):
    cfg["experiment"]["values"] = {"start": 5.0, "stop": 0.0, "step": 1.0}
    sc = scenario_from_config(cfg)
    with pytest.raises(ConfigError):
        experiment_from_config(cfg, sc)
    cfg["experiment"]["values"] = {"start": 0.0, "stop": 5.0}
    with pytest.raises(ConfigError):
        experiment_from_config(cfg, sc)


def test_missing_experiment_table(cfg):
    sc = scenario_from_config(cfg)
    with pytest.raises(ConfigError):
        experiment_from_config({"scenario": {}}, sc)
