"""Monte Carlo experiment runner and fast single-user link simulators.

`run` drives the full protocol chain (channel draw, estimation, phase
configuration, data-stage detection) over a one-axis sweep.  The
`sim_pd_single` / `sim_dd_single` helpers simulate the single-antenna
analysis model directly at the signal level, fast enough for BER floors
around 1e-5.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .constellation import PskAlphabet
from .dd import dd_estimate, dd_overhead
from .errors import ConfigError, ExperimentError, RisddError
from .linalg import SeededStream, complex_gaussian, dft_matrix
from .model import ChannelRealization, Scenario, dbm_to_watts, draw_channels
from .pd import pd_estimate
from .estimation import pd_overhead
from .phaseconf import multiuser_maxmin, single_user_mimo

__all__ = ["Experiment", "ResultRow", "run", "fair_rotation", "write_csv",
           "sim_pd_single", "sim_dd_single", "single_user_se_curves"]

SWEEP_AXES = ("P_dBm", "N", "N_A", "rho_A", "noise_figure")
ALL_METRICS = ("NMSE", "BER_stage1", "BER_stage2", "SE", "SER_RIS")


@dataclass
class Experiment:
    scenario: Scenario
    protocol: str                       # "pd" | "dd" | "dd-fair"
    sweep: str
    values: list[float]
    trials: int = 2000
    metrics: tuple[str, ...] = ALL_METRICS
    threads: int = 1

    def __post_init__(self):
        if self.protocol not in ("pd", "dd", "dd-fair"):
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.sweep not in SWEEP_AXES:
            raise ConfigError(f"sweep must be one of {SWEEP_AXES}")
        vals = list(self.values)
        if not vals or vals != sorted(vals) \
                or not all(np.isfinite(v) for v in vals):
            raise ConfigError("sweep values must be finite and sorted")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        bad = set(self.metrics) - set(ALL_METRICS)
        if bad:
            raise ConfigError(f"unknown metrics {sorted(bad)}")


@dataclass
class ResultRow:
    sweep_value: float
    means: dict
    stderrs: dict
    trials: int
    failures: int
    wall_time: float


def _apply_sweep(sc: Scenario, axis: str, value) -> Scenario:
    if axis == "P_dBm":
        return replace(sc, P=dbm_to_watts(value))
    if axis == "N":
        return replace(sc, N=int(value), sensing_set=None)
    if axis == "N_A":
        return replace(sc, N_A=int(value), sensing_set=None)
    if axis == "rho_A":
        return replace(sc, rho_A=float(value))
    if axis == "noise_figure":                 # dB added to both noise floors
        f = 10.0 ** (value / 10.0)
        return replace(sc, N0_BS=sc.N0_BS * f, N0_RIS=sc.N0_RIS * f)
    raise ConfigError(f"unknown sweep axis {axis}")


def _data_stage(ch: ChannelRealization, sc: Scenario, Hc_hats: list,
                n_slots: int, noise: SeededStream | None):
    """Simulate the data-transmission stage: sensing off, full reflection.

    Returns per-user bit error counts and the bit count per user.
    """
    alphabet = PskAlphabet(sc.D)
    if sc.K == 1:
        phi = single_user_mimo(Hc_hats[0])
    else:
        phi = multiuser_maxmin(Hc_hats, sc.P, sc.N0_BS)
    F = np.stack([ch.Hc(k)[:, 0] + ch.Hc(k)[:, 1:] @ phi
                  for k in range(sc.K)], axis=1)          # M x K (true)
    F_hat = np.stack([H[:, 0] + H[:, 1:] @ phi for H in Hc_hats], axis=1)

    rng = noise.child(8).rng if noise is not None else None
    tx = (rng.integers(0, sc.D, size=(sc.K, n_slots)) if rng is not None
          else SeededStream(sc.seed, 0).child(8).rng.integers(
              0, sc.D, size=(sc.K, n_slots)))
    S = alphabet.modulate(tx)
    Y = math.sqrt(sc.P) * F @ S
    if noise is not None:
        Y = Y + complex_gaussian(noise.child(9), 0, sc.N0_BS, shape=Y.shape)
    if sc.K == 1:
        stat = (F_hat[:, 0].conj() @ Y)[None, :]
    else:
        stat = np.linalg.pinv(F_hat) @ Y
    rx = np.stack([alphabet.detect(stat[k]) for k in range(sc.K)])
    bit_errors = np.array([alphabet.ber_count(tx[k], rx[k])[0]
                           for k in range(sc.K)], dtype=float)
    return bit_errors, n_slots * math.log2(sc.D)


def _run_trial(sc: Scenario, protocol: str, trial: int, sweep_i: int) -> dict:
    # Common random numbers across the sweep: the same trial index reuses
    # the same channel/noise draws at every sweep value, so point-to-point
    # differences reflect the swept parameter rather than sampling noise.
    stream = SeededStream(sc.seed, trial)
    ch = draw_channels(sc, stream)
    bits_per_sym = math.log2(sc.D)
    out = {}
    if protocol == "pd":
        overhead = pd_overhead(sc.K, sc.M, sc.N, sc.N_A)
        res = pd_estimate(ch, sc, noise=stream)
        out["NMSE"] = res.nmse
        out["BER_stage1"] = 0.0
        out["SER_RIS"] = 0.0
        n_data = sc.tau_c - overhead
        if n_data <= 0:
            raise ExperimentError("coherence block shorter than PD overhead")
        errs, bits = _data_stage(ch, sc, res.Hc_hat, n_data, stream)
        ber2 = errs / bits
        out["BER_stage2"] = float(ber2.mean())
        se_users = n_data * (1 - ber2) * bits_per_sym / sc.tau_c
    else:
        res, info = dd_estimate(ch, sc, noise=stream, data_stream=stream.child(10))
        out["NMSE"] = res.nmse
        alphabet = PskAlphabet(sc.D)
        e1 = alphabet.ber_count(info["phase1_tx"], info["phase1_detected"])[0]
        ber1 = e1 / (sc.N * bits_per_sym)
        out["BER_stage1"] = float(ber1)
        out["SER_RIS"] = info["ris_symbol_errors"] / sc.N
        # slots consumed so far: K pilots + N stage-1 + tau_2b sub-phase 2b
        tau_2b = res.data_slots - sc.N
        n_data = sc.tau_c - dd_overhead(sc.K) - res.data_slots
        if n_data <= 0:
            raise ExperimentError("coherence block shorter than DD overhead")
        errs, bits = _data_stage(ch, sc, res.Hc_hat, n_data, stream)
        ber2 = errs / bits
        out["BER_stage2"] = float(ber2.mean())
        # per-stage accounting: stage-1 data belongs to the typical user,
        # 2b data is recovered via the RIS detections, the rest beamformed
        se_users = n_data * (1 - ber2) * bits_per_sym / sc.tau_c
        se_users = np.array(se_users, dtype=float)
        se_users[0] += sc.N * (1 - ber1) * bits_per_sym / sc.tau_c
        if tau_2b > 0:
            for k in range(sc.K):
                ek = alphabet.ber_count(info["phase2b_tx"][k],
                                        info["phase2b_detected"][k])[0]
                se_users[k] += (tau_2b - ek / bits_per_sym) \
                    * bits_per_sym / sc.tau_c
    out["SE"] = float(np.mean(se_users))
    out["SE_users"] = np.asarray(se_users, dtype=float)
    return out


def _aggregate(sweep_value, per_trial: list, metrics, wall: float) -> ResultRow:
    ok = [t for t in per_trial if t is not None]
    failures = len(per_trial) - len(ok)
    if failures > 0.01 * len(per_trial):
        raise ExperimentError(
            f"{failures}/{len(per_trial)} trials failed at sweep value "
            f"{sweep_value}")
    means, ses = {}, {}
    for m in metrics:
        x = np.array([t[m] for t in ok], dtype=float)
        means[m] = float(x.mean())
        ses[m] = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return ResultRow(sweep_value=sweep_value, means=means, stderrs=ses,
                     trials=len(ok), failures=failures, wall_time=wall)


def run(exp: Experiment) -> list[ResultRow]:
    """Execute the sweep; deterministic for a fixed scenario seed."""
    if exp.protocol == "dd-fair":
        return fair_rotation(exp)
    rows = []
    for i, val in enumerate(exp.values):
        sc = _apply_sweep(exp.scenario, exp.sweep, val)
        t0 = time.perf_counter()
        results: list = [None] * exp.trials

        def work(trial, sc=sc, i=i):
            try:
                return _run_trial(sc, "pd" if exp.protocol == "pd" else "dd",
                                  trial, i)
            except RisddError:
                return None

        if exp.threads > 1:
            with ThreadPoolExecutor(max_workers=exp.threads) as pool:
                for t, r in enumerate(pool.map(work, range(exp.trials))):
                    results[t] = r
        else:
            for t in range(exp.trials):
                results[t] = work(t)
        rows.append(_aggregate(val, results, exp.metrics,
                               time.perf_counter() - t0))
    return rows


def fair_rotation(exp: Experiment) -> list[ResultRow]:
    """DD with the typical-user role rotated across K coherence blocks.

    Per trial, K blocks are simulated with the user list cyclically
    rotated; each user's SE is averaged over its K roles.
    """
    sc0 = exp.scenario
    if exp.protocol not in ("dd", "dd-fair") or sc0.K < 2:
        raise ConfigError("fair rotation requires the DD protocol and K >= 2")
    rows = []
    for i, val in enumerate(exp.values):
        sc = _apply_sweep(sc0, exp.sweep, val)
        t0 = time.perf_counter()
        results: list = [None] * exp.trials
        for t in range(exp.trials):
            try:
                acc = np.zeros(sc.K)
                for r in range(sc.K):
                    sc_r = _rotate_users(sc, r)
                    out = _run_trial(sc_r, "dd", t * sc.K + r, i)
                    # map rotated positions back to original user ids
                    acc += np.roll(out["SE_users"], r)
                per_user = acc / sc.K
                results[t] = {"SE": float(per_user.mean()),
                              "SE_users": per_user}
            except RisddError:
                results[t] = None
        rows.append(_aggregate(val, results, ("SE",),
                               time.perf_counter() - t0))
    return rows


def _rotate_users(sc: Scenario, r: int) -> Scenario:
    """Cyclically shift the user list so user r becomes the typical user."""
    def rot(x):
        return None if x is None else list(x[r:]) + list(x[:r])
    return replace(sc, user_pos=rot(sc.user_pos), beta_ub=rot(sc.beta_ub),
                   beta_ur=rot(sc.beta_ur))


def write_csv(rows: list[ResultRow], path, metrics=None, metadata: dict | None = None):
    """Emit one CSV line per ResultRow; floats carry 9 significant digits."""
    if metrics is None:
        metrics = sorted(rows[0].means.keys()) if rows else []
    lines = []
    if metadata:
        for k in sorted(metadata):
            lines.append(f"# {k} = {metadata[k]}")
    header = ["sweep"] + [f"{m}_mean" for m in metrics] \
        + [f"{m}_se" for m in metrics] + ["trials", "failures"]
    lines.append(",".join(header))
    for row in rows:
        cells = [f"{row.sweep_value:.9g}"]
        cells += [f"{row.means[m]:.9g}" for m in metrics]
        cells += [f"{row.stderrs[m]:.9g}" for m in metrics]
        cells += [str(row.trials), str(row.failures)]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


# ---------------------------------------------------------------------------
# fast signal-level simulators for the single-antenna analysis model
# ---------------------------------------------------------------------------

def sim_pd_single(N: int, P: float, N0: float, sigma_g2: float,
                  sigma_h2: float, D: int, n_channels: int,
                  n_symbols: int, stream: SeededStream) -> dict:
    """Pilot-directed analysis model: estimate, co-phase, detect.

    n_channels independent channel draws, n_symbols data symbols each.
    Returns bit/symbol error rates and their standard errors.
    """
    alphabet = PskAlphabet(D)
    rng = stream.rng
    h = complex_gaussian(stream, 0, sigma_h2, shape=(n_channels, N))
    g = complex_gaussian(stream, 0, sigma_g2, shape=(n_channels, N))
    a = h * g
    eps = complex_gaussian(stream, 0, N0 / (P * N), shape=(n_channels, N))
    z = a.conj() * np.exp(1j * np.angle(a + eps))
    f = z.sum(axis=1)
    f_hat = np.abs(a + eps).sum(axis=1)       # estimated effective channel
    tx = rng.integers(0, D, size=(n_channels, n_symbols))
    s = alphabet.modulate(tx)
    noise = complex_gaussian(stream, 0, N0, shape=(n_channels, n_symbols))
    y = math.sqrt(P) * f[:, None] * s + noise
    rx = alphabet.detect((y / f_hat[:, None]).ravel()).reshape(tx.shape)
    return _error_stats(alphabet, tx, rx)


def sim_dd_single(N: int, P: float, N0_BS: float, N0_RIS: float,
                  sigma_g2: float, sigma_h2: float, D: int,
                  n_channels: int, n_symbols: int,
                  stream: SeededStream) -> dict:
    """Decision-directed analysis model with one fully absorbing element.

    Stage 1: slots 2..N-1 detected at the RIS off a slot-1 estimate of
    g_N; the BS estimates the N-1 reflecting-element channels with the
    detected symbols.  Stage 2: co-phased transmission of n_symbols
    data symbols.  Returns stage-1 and stage-2 error statistics.
    """
    alphabet = PskAlphabet(D)
    rng = stream.rng
    n = N - 1                                   # reflecting elements
    tau_d1 = N - 2                              # stage-1 data slots
    h = complex_gaussian(stream, 0, sigma_h2, shape=(n_channels, n))
    g = complex_gaussian(stream, 0, sigma_g2, shape=(n_channels, n))
    a = h * g
    g_N = complex_gaussian(stream, 0, sigma_g2, shape=n_channels)

    # stage 1 at the RIS
    n1 = complex_gaussian(stream, 0, N0_RIS, shape=n_channels)
    g_hat = g_N + n1 / math.sqrt(P)
    tx1 = rng.integers(0, D, size=(n_channels, tau_d1))
    s1 = alphabet.modulate(tx1)
    nt = complex_gaussian(stream, 0, N0_RIS, shape=tx1.shape)
    stat = (math.sqrt(P) * g_N[:, None] * s1 + nt) \
        / (math.sqrt(P) * g_hat[:, None])
    rx1 = alphabet.detect(stat.ravel()).reshape(tx1.shape)
    s1_hat = alphabet.modulate(rx1)

    # stage 1 at the BS: LS over Phi = V_{N-1} with detected symbols
    Phi = dft_matrix(n)
    S_full = np.concatenate([np.ones((n_channels, 1)), s1], axis=1)
    Shat_full = np.concatenate([np.ones((n_channels, 1)), s1_hat], axis=1)
    y_bs = math.sqrt(P) * (a.conj() @ Phi) * S_full \
        + complex_gaussian(stream, 0, N0_BS, shape=(n_channels, n))
    a_hat = ((y_bs / Shat_full) @ Phi.conj().T).conj() / (math.sqrt(P) * n)

    # stage 2: co-phasing from the estimate
    z = a.conj() * np.exp(1j * np.angle(a_hat))
    f = z.sum(axis=1)
    f_hat = np.abs(a_hat).sum(axis=1)
    tx2 = rng.integers(0, D, size=(n_channels, n_symbols))
    s2 = alphabet.modulate(tx2)
    noise = complex_gaussian(stream, 0, N0_BS, shape=tx2.shape)
    y = math.sqrt(P) * f[:, None] * s2 + noise
    rx2 = alphabet.detect((y / f_hat[:, None]).ravel()).reshape(tx2.shape)

    out = {"stage1": _error_stats(alphabet, tx1, rx1),
           "stage2": _error_stats(alphabet, tx2, rx2)}
    return out


def _error_stats(alphabet: PskAlphabet, tx: np.ndarray, rx: np.ndarray) -> dict:
    nbit, bits = alphabet.ber_count(tx.ravel(), rx.ravel())
    ber = nbit / bits
    ser = float(np.mean(tx != rx))
    return {"ber": ber, "ser": ser,
            "ber_se": math.sqrt(max(ber * (1 - ber), 1e-300) / bits),
            "ser_se": math.sqrt(max(ser * (1 - ser), 1e-300) / tx.size)}


def single_user_se_curves(N: int, N0_BS: float, N0_RIS: float,
                          sigma_g2: float, sigma_h2: float, D: int,
                          tau_c: int, p_dbm_grid, n_channels: int,
                          n_symbols: int, seed: int) -> dict:
    """Simulated SE_PD / SE_DD over a power grid (analysis model)."""
    se_pd, se_dd = [], []
    for i, p_dbm in enumerate(p_dbm_grid):
        P = dbm_to_watts(p_dbm)
        st_pd = SeededStream(seed, i).child(1)
        st_dd = SeededStream(seed, i).child(2)
        pd = sim_pd_single(N, P, N0_BS, sigma_g2, sigma_h2, D,
                           n_channels, n_symbols, st_pd)
        dd = sim_dd_single(N, P, N0_BS, N0_RIS, sigma_g2, sigma_h2, D,
                           n_channels, n_symbols, st_dd)
        bits = math.log2(D)
        se_pd.append((tau_c - N) / tau_c * (1 - pd["ber"]) * bits)
        se_dd.append((((N - 2) * (1 - dd["stage1"]["ber"])
                       + (tau_c - (N - 1)) * (1 - dd["stage2"]["ber"]))
                      / tau_c) * bits)
    return {"P_dBm": list(p_dbm_grid), "SE_PD": se_pd, "SE_DD": se_dd}
