"""Built-in oracle and property checks behind `risdd validate`.

Each check is small enough to run in a few seconds; the heavyweight
statistical comparisons live in the test suite.
"""
from __future__ import annotations

import numpy as np

from .analysis import (AnalysisInput, ber_dd1, ber_from_probs, ber_pd,
                       lemma1_moments, wedge_probabilities,
                       xi_moments_from_probs)
from .constellation import PskAlphabet
from .dd import dd_estimate, dd_overhead
from .estimation import pd_overhead, phase2_slot_count
from .linalg import SeededStream
from .model import Scenario, draw_channels
from .pd import pd_estimate
from .simkit import Experiment, run

__all__ = ["run_checks"]


def _check_noiseless_exactness():
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(10):
        K = int(rng.integers(1, 4))
        M = int(rng.integers(1, 6))
        N = int(rng.integers(8, 33))
        sc = Scenario(K=K, M=M, N=N, N_A=K, rho_A=0.5, P=1.0,
                      N0_BS=0.0, N0_RIS=0.0, D=8, tau_c=2000,
                      beta_ub=[1.0] * K, beta_ur=[1.0] * K, beta_rb=1.0,
                      seed=100 + trial)
        ch = draw_channels(sc, SeededStream(sc.seed, 0))
        pd_res = pd_estimate(ch, sc, noise=None)
        dd_res, _ = dd_estimate(ch, sc, noise=None,
                                data_stream=SeededStream(sc.seed, 1))
        worst = max(worst, pd_res.nmse, dd_res.nmse)
    assert worst <= 1e-8, f"worst noiseless NMSE {worst:.2e}"
    return f"worst NMSE {worst:.2e}"


def _check_overhead_formulas():
    for K in (1, 2, 4, 8):
        for M in (1, 4, 16):
            for N in (16, 64):
                for N_A in range(K, min(8, N) + 1, 3):
                    counted = (N + 1) + phase2_slot_count(K, M, N, N_A)
                    assert pd_overhead(K, M, N, N_A) == counted
                    assert dd_overhead(K) == K
    return "exact on the sampled grid"


def _check_lemma1():
    rng = np.random.default_rng(1)
    worst = 0.0
    for D in (4, 8, 16):
        for _ in range(20):
            half = D // 2
            quarter = np.abs(rng.standard_normal(half // 2 + 1))
            row = np.concatenate([quarter,
                                  quarter[1:-1][::-1] if half > 2 else []])
            p = np.tile(row, 2)
            p = p / p.sum()
            closed = lemma1_moments(p, D)
            brute = xi_moments_from_probs(p, D)
            worst = max(worst,
                        abs(closed.mu_xi - brute.mu_xi),
                        abs(closed.mu_xi2 - brute.mu_xi2),
                        abs(closed.mu_absxi2 - brute.mu_absxi2))
    assert worst <= 1e-12, f"lemma-1 gap {worst:.2e}"
    return f"max gap {worst:.2e}"


def _check_probability_hygiene():
    for D in (2, 4, 8, 16, 32):
        p = wedge_probabilities(1.0, 0.3, 0.2, 1.0, 0.1, D)
        assert abs(p.sum() - 1.0) <= 1e-8
        assert np.all(np.isfinite(p)) and np.all(p >= 0)
        _, q = ber_dd1(1.0, 1.0, 0.5, D)
        assert abs(q.sum() - 1.0) <= 1e-8
        assert np.all(np.isfinite(q))
    return "wedge vectors sum to 1, finite"


def _check_analysis_finite():
    inp = AnalysisInput(N=50, P=1e-2, N0_BS=1.26e-14, N0_RIS=3.16e-10,
                        sigma_g2=4e-7, sigma_h2=4e-7, D=8, tau_c=500)
    vals = [ber_pd(inp)]
    b1, p = ber_dd1(inp.P, inp.sigma_g2, inp.N0_RIS, inp.D)
    vals += [b1, ber_from_probs(p, inp.D)]
    assert all(np.isfinite(v) and 0 <= v <= 1 for v in vals)
    return "BER values finite and in [0, 1]"


def _check_determinism():
    sc = Scenario(K=1, M=2, N=12, N_A=1, rho_A=0.5, P=1.0,
                  N0_BS=1e-3, N0_RIS=1e-3, D=8, tau_c=100,
                  beta_ub=[1.0], beta_ur=[1.0], beta_rb=1.0, seed=7)
    exp = Experiment(scenario=sc, protocol="dd", sweep="P_dBm",
                     values=[0.0, 3.0], trials=8)
    a = run(exp)
    b = run(exp)
    assert all(ra.means == rb.means for ra, rb in zip(a, b))
    return "repeated run bit-identical"


_CHECKS = [
    ("noiseless exactness", _check_noiseless_exactness),
    ("pilot-overhead formulas", _check_overhead_formulas),
    ("lemma-1 closed forms", _check_lemma1),
    ("probability hygiene", _check_probability_hygiene),
    ("analysis finiteness", _check_analysis_finite),
    ("simulation determinism", _check_determinism),
]


def run_checks() -> tuple[str, bool]:
    lines = []
    ok = True
    for name, fn in _CHECKS:
        try:
            detail = fn()
            lines.append(f"PASS {name}: {detail}")
        except Exception as e:                      # report, keep going
            ok = False
            lines.append(f"FAIL {name}: {type(e).__name__}: {e}")
    lines.append("all checks passed" if ok else "some checks FAILED")
    return "\n".join(lines) + "\n", ok
