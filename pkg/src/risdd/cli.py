"""Command-line front end.

Subcommands:
    analyze    closed-form BER/SE sweep over a power grid
    simulate   Monte Carlo experiment defined in the config
    crossover  solve for the PD/DD spectral-efficiency crossing power
    validate   run the built-in oracle/property checks

Exit codes: 0 success, 2 configuration problems, 3 numerical failures
(approximation breakdown, missing crossover, too many failed trials).

The effective configuration (file plus command-line overrides) is echoed
into the output as `# | `-prefixed comment lines; stripping that prefix
recovers a TOML file that reproduces the output byte-identically.
"""
from __future__ import annotations

import argparse
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from dataclasses import replace

from . import config as cfgmod
from .analysis import (AnalysisInput, ber_dd1, ber_from_probs, ber_pd,
                       dd2_moments, find_crossover, se_dd, se_pd,
                       wedge_probabilities, xi_moments_from_probs)
from .errors import (ApproximationBreakdown, ConfigError, ExperimentError,
                     NoCrossover, NumericsError, RisddError)
from .model import dbm_to_watts
from .simkit import run, write_csv

__all__ = ["main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS = 0, 2, 3


# ---------------------------------------------------------------------------
# config echo
# ---------------------------------------------------------------------------

def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{k} = {_toml_value(x)}"
                                for k, x in v.items()) + " }"
    raise ConfigError(f"cannot serialize config value {v!r}")


def _toml_dumps(cfg: dict) -> str:
    lines = []
    for table in ("scenario", "experiment", "analysis"):
        if table not in cfg:
            continue
        lines.append(f"[{table}]")
        for k, v in cfg[table].items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _echo_lines(cfg: dict) -> list[str]:
    return ["# | " + ln for ln in _toml_dumps(cfg).splitlines()]


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _parse_override(token: str):
    key, _, raw = token[2:].partition("=")
    try:
        return key, tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return key, raw


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risdd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("analyze", "simulate", "crossover", "validate"):
        sp = sub.add_parser(name)
        if name != "validate":
            sp.add_argument("config")
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--mod", type=int, default=None,
                        help="PSK order override")
    return p


def _effective_config(args, overrides: list[str]) -> dict:
    cfg = cfgmod.load_config(args.config)
    cfg.pop("_path", None)
    sc = cfg.setdefault("scenario", {})
    for token in overrides:
        key, value = _parse_override(token)
        if key not in cfgmod._SCENARIO_KEYS:
            raise ConfigError(f"unknown override --{key}")
        sc[key] = value
    if args.seed is not None:
        sc["seed"] = args.seed
    if args.mod is not None:
        sc["D"] = args.mod
    exp = cfg.get("experiment")
    if exp is not None:
        if args.trials is not None:
            exp["trials"] = args.trials
        threads = args.threads
        if threads is None and os.environ.get("RIS_DDCE_THREADS"):
            threads = int(os.environ["RIS_DDCE_THREADS"])
        if threads is not None:
            exp["threads"] = threads
    return cfg


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_analyze(cfg: dict, out: str | None) -> int:
    sc = cfgmod.scenario_from_config(cfg)
    grid = cfgmod.analysis_grid(cfg)
    base = AnalysisInput.from_scenario(sc)
    lines = _echo_lines(cfg)
    lines.append("P_dBm,SE_PD,SE_DD,BER_PD,BER_DD1,BER_DD2")
    for p_dbm in grid:
        inp = replace(base, P=dbm_to_watts(p_dbm))
        b_pd = ber_pd(inp)
        b1, pvec = ber_dd1(inp.P, inp.sigma_g2, inp.N0_RIS, inp.D)
        xi = xi_moments_from_probs(pvec, inp.D)
        mom = dd2_moments(inp, xi)
        probs = wedge_probabilities(mom.mu_fRe, mom.var_fRe, mom.var_fIm,
                                    inp.P, inp.N0_BS, inp.D)
        b2 = ber_from_probs(probs, inp.D)
        cells = (p_dbm, se_pd(inp), se_dd(inp), b_pd, b1, b2)
        lines.append(",".join(f"{c:.9g}" for c in cells))
    _emit("\n".join(lines) + "\n", out)
    return EXIT_OK


def _cmd_simulate(cfg: dict, out: str | None) -> int:
    sc = cfgmod.scenario_from_config(cfg)
    exp = cfgmod.experiment_from_config(cfg, sc)
    rows = run(exp)
    echo = "\n".join(_echo_lines(cfg)) + "\n"
    metrics = list(exp.metrics)
    body = write_csv(rows, os.devnull, metrics=metrics)
    _emit(echo + body, out)
    return EXIT_OK


def _cmd_crossover(cfg: dict, out: str | None) -> int:
    sc = cfgmod.scenario_from_config(cfg)
    inp = AnalysisInput.from_scenario(sc)
    lo, hi = cfgmod.crossover_bracket(cfg)
    power = find_crossover(inp, (lo, hi))
    text = "".join(ln + "\n" for ln in _echo_lines(cfg))
    text += f"crossover_dbm = {power:.9g}\n"
    _emit(text, out)
    return EXIT_OK


def _cmd_validate(out: str | None) -> int:
    from .validate import run_checks
    report, ok = run_checks()
    _emit(report, out)
    return EXIT_OK if ok else EXIT_NUMERICS


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    overrides = [a for a in argv
                 if a.startswith("--") and "=" in a
                 and a.split("=", 1)[0][2:] in cfgmod._SCENARIO_KEYS]
    rest = [a for a in argv if a not in overrides]
    parser = _build_parser()
    try:
        args = parser.parse_args(rest)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK

    try:
        if args.command == "validate":
            return _cmd_validate(args.out)
        cfg = _effective_config(args, overrides)
        if args.command == "analyze":
            return _cmd_analyze(cfg, args.out)
        if args.command == "simulate":
            return _cmd_simulate(cfg, args.out)
        if args.command == "crossover":
            return _cmd_crossover(cfg, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericsError, ExperimentError, ApproximationBreakdown,
            NoCrossover) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICS
    except RisddError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
