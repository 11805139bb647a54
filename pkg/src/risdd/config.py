"""TOML configuration loading.

A config file has up to three tables:

    [scenario]    physical/protocol parameters (user-facing units:
                  P_dBm, noise densities in dBm/Hz with a bandwidth)
    [experiment]  Monte Carlo sweep description for `simulate`
    [analysis]    power grid for `analyze` / bracket for `crossover`

All unit conversions happen here; the rest of the package works in
watts.  Unknown keys anywhere raise ConfigError.
"""
from __future__ import annotations

import math
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .model import Scenario, dbm_to_watts
from .simkit import ALL_METRICS, Experiment

__all__ = ["load_config", "scenario_from_config", "experiment_from_config",
           "analysis_grid", "crossover_bracket", "config_path", "CONFIG_DIR"]

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "configs")

_SCENARIO_KEYS = {
    "K", "M", "N", "N_A", "sensing_set", "rho_A", "P_dBm", "D", "tau_c",
    "noise_dbm_per_hz", "ris_noise_dbm_per_hz", "bandwidth_hz",
    "bs_pos", "ris_pos", "user_pos",
    "beta_ub", "beta_ur", "beta_rb",
    "beta0_db", "d0", "alpha_ub", "alpha_ur", "alpha_rb",
    "corr_r", "seed",
}
_EXPERIMENT_KEYS = {"protocol", "sweep", "values", "trials", "metrics",
                    "threads"}
_ANALYSIS_KEYS = {"p_dbm", "p_dbm_range", "bracket_dbm"}


def config_path(name: str) -> str:
    """Resolve a config name: an existing path wins, else the shipped set."""
    if os.path.exists(name):
        return name
    for cand in (name, name + ".toml"):
        shipped = os.path.join(CONFIG_DIR, cand)
        if os.path.exists(shipped):
            return shipped
    raise ConfigError(f"config file not found: {name}")


def load_config(path: str) -> dict:
    path = config_path(path)
    with open(path, "rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML in {path}: {e}") from e
    unknown = set(cfg) - {"scenario", "experiment", "analysis"}
    if unknown:
        raise ConfigError(f"unknown top-level tables {sorted(unknown)}")
    for table, allowed in (("scenario", _SCENARIO_KEYS),
                           ("experiment", _EXPERIMENT_KEYS),
                           ("analysis", _ANALYSIS_KEYS)):
        bad = set(cfg.get(table, {})) - allowed
        if bad:
            raise ConfigError(f"unknown keys in [{table}]: {sorted(bad)}")
    cfg["_path"] = path
    return cfg


def _noise_watts(dbm_per_hz: float, bandwidth_hz: float) -> float:
    return dbm_to_watts(dbm_per_hz) * bandwidth_hz


def scenario_from_config(cfg: dict, overrides: dict | None = None) -> Scenario:
    sec = dict(cfg.get("scenario", {}))
    if overrides:
        bad = set(overrides) - _SCENARIO_KEYS
        if bad:
            raise ConfigError(f"unknown scenario overrides {sorted(bad)}")
        sec.update(overrides)

    bw = float(sec.pop("bandwidth_hz", 1e6))
    kw: dict = {}
    if "P_dBm" in sec:
        kw["P"] = dbm_to_watts(float(sec.pop("P_dBm")))
    if "noise_dbm_per_hz" in sec:
        kw["N0_BS"] = _noise_watts(float(sec.pop("noise_dbm_per_hz")), bw)
    if "ris_noise_dbm_per_hz" in sec:
        kw["N0_RIS"] = _noise_watts(float(sec.pop("ris_noise_dbm_per_hz")), bw)
    if "beta0_db" in sec:
        kw["beta0"] = 10.0 ** (float(sec.pop("beta0_db")) / 10.0)

    for key in ("bs_pos", "ris_pos"):
        if key in sec:
            kw[key] = tuple(float(v) for v in sec.pop(key))
    if "user_pos" in sec:
        kw["user_pos"] = [tuple(float(v) for v in p)
                          for p in sec.pop("user_pos")]
    for key in ("beta_ub", "beta_ur"):
        if key in sec:
            val = sec.pop(key)
            kw[key] = [float(v) for v in val] if isinstance(val, list) \
                else [float(val)]
    for key, cast in (("K", int), ("M", int), ("N", int), ("N_A", int),
                      ("D", int), ("tau_c", int), ("seed", int),
                      ("beta_rb", float), ("d0", float),
                      ("alpha_ub", float), ("alpha_ur", float),
                      ("alpha_rb", float), ("corr_r", float)):
        if key in sec:
            kw[key] = cast(sec.pop(key))
    if "sensing_set" in sec:
        kw["sensing_set"] = [int(i) for i in sec.pop("sensing_set")]
    if "rho_A" in sec:
        val = sec.pop("rho_A")
        kw["rho_A"] = [float(v) for v in val] if isinstance(val, list) \
            else float(val)
    if sec:
        raise ConfigError(f"unhandled scenario keys {sorted(sec)}")
    return Scenario(**kw)


def _expand_values(values) -> list[float]:
    """A list is literal; a 3-entry table {start, stop, step} is a grid."""
    if isinstance(values, dict):
        extra = set(values) - {"start", "stop", "step"}
        if extra:
            raise ConfigError(f"unknown grid keys {sorted(extra)}")
        try:
            start, stop, step = (float(values[k])
                                 for k in ("start", "stop", "step"))
        except KeyError as e:
            raise ConfigError(f"grid needs start/stop/step, missing {e}")
        if step <= 0 or stop < start:
            raise ConfigError("need step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return [float(v) for v in values]


def experiment_from_config(cfg: dict, scenario: Scenario,
                           trials: int | None = None,
                           threads: int | None = None) -> Experiment:
    sec = cfg.get("experiment")
    if sec is None:
        raise ConfigError("config has no [experiment] table")
    try:
        protocol = sec["protocol"]
        sweep = sec["sweep"]
        values = _expand_values(sec["values"])
    except KeyError as e:
        raise ConfigError(f"[experiment] missing required key {e}")
    metrics = tuple(sec.get("metrics", ALL_METRICS))
    return Experiment(scenario=scenario, protocol=protocol, sweep=sweep,
                      values=values,
                      trials=trials if trials is not None
                      else int(sec.get("trials", 2000)),
                      metrics=metrics,
                      threads=threads if threads is not None
                      else int(sec.get("threads", 1)))


def analysis_grid(cfg: dict) -> list[float]:
    sec = cfg.get("analysis", {})
    if "p_dbm" in sec:
        return _expand_values(sec["p_dbm"])
    if "p_dbm_range" in sec:
        return _expand_values(sec["p_dbm_range"])
    exp = cfg.get("experiment", {})
    if exp.get("sweep") == "P_dBm" and "values" in exp:
        return _expand_values(exp["values"])
    raise ConfigError("no [analysis] power grid and no P_dBm sweep to reuse")


def crossover_bracket(cfg: dict) -> tuple[float, float]:
    sec = cfg.get("analysis", {})
    if "bracket_dbm" in sec:
        lo, hi = (float(v) for v in sec["bracket_dbm"])
        return lo, hi
    grid = analysis_grid(cfg)
    return min(grid), max(grid)
