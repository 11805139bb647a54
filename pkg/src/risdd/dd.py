"""Two-phase decision-directed estimation with RIS-side detection.

Only K slots carry pilots: slot 1 (typical user) and the K-1 phase-2a
slots (remaining users).  Everything else is data, detected at the RIS
sensing elements and forwarded to the BS, which then runs the same LS
machinery as the pilot-directed protocol with detected symbols in place
of pilots.
"""
from __future__ import annotations

import math

import numpy as np

from .constellation import PskAlphabet
from .errors import PlanError, RankDeficient, SingularPowerSplit
from .estimation import (EstimationResult, assemble_result,
                         phase2_phi_schedule, phase2_slot_count,
                         solve_upsilon)
from .linalg import SeededStream, complex_gaussian, dft_matrix, lstsq
from .model import ChannelRealization, Scenario
from .pd import phase1_signals

__all__ = ["dd_overhead", "dd_phase1", "dd_phase2", "dd_estimate",
           "passive_dd_demo"]


def dd_overhead(K: int) -> int:
    """Pilot overhead of the decision-directed protocol: K slots."""
    if K < 1:
        raise PlanError(f"need K >= 1, got {K}")
    return K


def _check_power_split(sc: Scenario):
    rho = sc.rho_vec_A
    if np.any(rho == 0):
        raise SingularPowerSplit("rho=0 sensing element: BS-side estimate singular")
    if np.any(rho == 1):
        raise SingularPowerSplit("rho=1 sensing element: RIS cannot sense")


def dd_phase1(ch: ChannelRealization, sc: Scenario,
              data_idx: np.ndarray,
              noise: SeededStream | None = None) -> dict:
    """Phase 1: slot-1 pilot, N data slots detected at the RIS.

    data_idx: N symbol indices transmitted by user 1 in slots 2..N+1.
    """
    _check_power_split(sc)
    tau1 = sc.N + 1
    data_idx = np.asarray(data_idx)
    if data_idx.shape != (sc.N,):
        raise PlanError(f"phase-1 data must have N={sc.N} symbols")
    alphabet = PskAlphabet(sc.D)
    s_slots = np.concatenate([[1.0 + 0j], alphabet.modulate(data_idx)])
    Y_bs, Y_ris, V = phase1_signals(ch, sc, noise, s_slots=s_slots)
    phi_A = V[1:, :][sc.sensing_set, :]

    # slot-1 pilot gives the sensed channel
    g1A_hat = phi_A[:, 0].conj() * Y_ris[:, 0] / (np.sqrt(sc.P) * sc.eta_A)

    # per-slot nearest-symbol detection; phase rotations compensated by
    # correlating against the predicted noiseless signature
    b = np.sqrt(sc.P) * sc.eta_A[:, None] * phi_A[:, 1:] * g1A_hat[:, None]
    stat = (b.conj() * Y_ris[:, 1:]).sum(axis=0)
    detected = np.asarray(alphabet.detect(stat))
    ris_errors = int(np.sum(detected != data_idx))

    s_hat = np.concatenate([[1.0 + 0j], alphabet.modulate(detected)])
    w = np.concatenate([[1.0], sc.rho_full])
    Hc1_hat = ((Y_bs * s_hat.conj()[None, :]) @ V.conj().T) \
        / (np.sqrt(sc.P) * tau1) / w[None, :]
    return {"Hc1_hat": Hc1_hat, "g1A_hat": g1A_hat, "detected": detected,
            "ris_symbol_errors": ris_errors}


def dd_phase2(ch: ChannelRealization, sc: Scenario, phase1: dict,
              data_idx: np.ndarray | None = None,
              noise: SeededStream | None = None,
              n_extra_data: int = 0) -> tuple[EstimationResult, np.ndarray]:
    """Phase 2a pilots + 2b multiuser data, then the stacked LS.

    data_idx: K x tau_2b symbol indices for sub-phase 2b (drawn from the
    noise stream when omitted).  Returns (result, detected 2b indices).
    """
    K, M, N, N_A = sc.K, sc.M, sc.N, sc.N_A
    if N_A < K:
        raise PlanError(f"zero-forcing at the RIS needs N_A >= K, got {N_A} < {K}")
    tau1 = N + 1
    tau2 = phase2_slot_count(K, M, N, N_A) + n_extra_data
    tau_2a = K - 1
    tau_2b = tau2 - tau_2a
    Hc1_hat = phase1["Hc1_hat"]
    g1A_hat = phase1["g1A_hat"]
    alphabet = PskAlphabet(sc.D)

    if data_idx is None:
        src = (noise or SeededStream(sc.seed, 0)).child(7)
        data_idx = src.rng.integers(0, sc.D, size=(K, tau_2b))
    data_idx = np.asarray(data_idx)
    if data_idx.shape != (K, tau_2b):
        raise PlanError(f"2b data must be K x {tau_2b}")

    if tau2 == 0:
        res = assemble_result(sc, ch, Hc1_hat, g1A_hat, None, None,
                              pilot_slots=1, data_slots=N)
        return res, np.zeros((K, 0), dtype=int)

    phi2 = phase2_phi_schedule(N, tau2)
    phi2_A = phi2[sc.sensing_set, :]

    # true transmitted symbols over T2 = 2a + 2b
    S_true = np.zeros((K, tau2), dtype=complex)
    for j in range(tau_2a):               # user j+2 alone, unit pilot
        S_true[j + 1, j] = 1.0
    S_true[:, tau_2a:] = alphabet.modulate(data_idx)

    Y_bs, Y_ris = _dd_phase2_signals(ch, sc, phi2, S_true, noise)

    # 2a at the RIS: per-user single-slot pilots
    if tau_2a > 0:
        Psi_2a = Y_ris[:, :tau_2a] * phi2_A[:, :tau_2a].conj()
        G_A_rest = Psi_2a / (np.sqrt(sc.P) * sc.eta_A[:, None])
        G_A_hat = np.concatenate([g1A_hat[:, None], G_A_rest], axis=1)
    else:
        G_A_rest = None
        G_A_hat = g1A_hat[:, None]
    lambda_A_hat = G_A_hat[:, 1:] / g1A_hat[:, None] if K > 1 else None

    # 2b at the RIS: zero-forcing then nearest-PSK slicing
    detected = np.zeros((K, tau_2b), dtype=int)
    for t in range(tau_2b):
        Heff = np.sqrt(sc.P) * sc.eta_A[:, None] \
            * phi2_A[:, tau_2a + t][:, None] * G_A_hat
        if np.linalg.matrix_rank(Heff) < K:
            raise RankDeficient(int(np.linalg.matrix_rank(Heff)), K)
        x = np.linalg.pinv(Heff) @ Y_ris[:, tau_2a + t]
        detected[:, t] = alphabet.detect(x)
    S_hat = S_true.copy()
    S_hat[:, tau_2a:] = alphabet.modulate(detected)

    # BS removes the typical user's (detected) contribution
    w = np.concatenate([[1.0], sc.rho_full])
    eff1 = Hc1_hat[:, :1] + Hc1_hat[:, 1:] @ (sc.rho_full[:, None] * phi2)
    Y2 = Y_bs - np.sqrt(sc.P) * eff1 * S_hat[0, :][None, :]

    if K > 1:
        ups = solve_upsilon(sc, Y2, phi2, S_hat[1:, :], Hc1_hat[:, 1:],
                            lambda_A_hat)
    else:
        ups = None
    res = assemble_result(sc, ch, Hc1_hat, g1A_hat, G_A_rest, ups,
                          pilot_slots=K, data_slots=N + tau_2b)
    return res, detected


def _dd_phase2_signals(ch: ChannelRealization, sc: Scenario,
                       phi2: np.ndarray, S: np.ndarray,
                       noise: SeededStream | None
                       ) -> tuple[np.ndarray, np.ndarray]:
    """(Y_bs, Y_ris) over T2 with all K users' symbols S (K x tau2)."""
    tau2 = phi2.shape[1]
    Y_bs = np.zeros((sc.M, tau2), dtype=complex)
    for k in range(sc.K):
        Hck = ch.Hc(k)
        eff = Hck[:, :1] + Hck[:, 1:] @ (sc.rho_full[:, None] * phi2)
        Y_bs += eff * S[k, :][None, :]
    Y_bs *= np.sqrt(sc.P)
    mix = ch.G_A() @ S
    Y_ris = np.sqrt(sc.P) * sc.eta_A[:, None] * phi2[sc.sensing_set, :] * mix
    if noise is not None:
        Y_bs = Y_bs + complex_gaussian(noise.child(5), 0, sc.N0_BS,
                                       shape=Y_bs.shape)
        Y_ris = Y_ris + complex_gaussian(noise.child(6), 0, sc.N0_RIS,
                                         shape=Y_ris.shape)
    return Y_bs, Y_ris


def dd_estimate(ch: ChannelRealization, sc: Scenario,
                noise: SeededStream | None = None,
                data_stream: SeededStream | None = None
                ) -> tuple[EstimationResult, dict]:
    """Full decision-directed pipeline with random data symbols.

    Returns (result, info) where info carries the RIS detections and the
    true transmitted indices for error accounting.
    """
    src = data_stream if data_stream is not None \
        else SeededStream(sc.seed, 0).child(11)
    data1 = src.rng.integers(0, sc.D, size=sc.N)
    p1 = dd_phase1(ch, sc, data1, noise)
    tau_2b = phase2_slot_count(sc.K, sc.M, sc.N, sc.N_A) - (sc.K - 1)
    tau_2b = max(tau_2b, 0)
    # The minimal window makes the stacked LS exactly square, which is
    # numerically fragile; 2b slots carry user data regardless, so extending
    # the solve window by a 25% equation margin costs no pilot overhead.
    n_extra = 0
    if sc.K > 1:
        n_extra = math.ceil(0.25 * (sc.K - 1) * (sc.M + sc.N - sc.N_A) / sc.M)
        budget = sc.tau_c - (sc.N + 1) - (sc.K - 1) - tau_2b
        n_extra = max(0, min(n_extra, budget))
        tau_2b += n_extra
    data2 = src.rng.integers(0, sc.D, size=(sc.K, tau_2b))
    res, det2 = dd_phase2(ch, sc, p1, data_idx=data2, noise=noise,
                          n_extra_data=n_extra)
    info = {"phase1_tx": data1, "phase1_detected": p1["detected"],
            "ris_symbol_errors": p1["ris_symbol_errors"],
            "phase2b_tx": data2, "phase2b_detected": det2}
    return res, info


def passive_dd_demo(sc: Scenario, trials: int = 1000,
                    seed: int | None = None) -> dict:
    """Why BS-side decision direction fails with a fully passive RIS.

    (a) time-varying phases: the slot-1 effective channel no longer
        matches later slots, so noiseless detection errors persist;
    (b) constant phases: the phase matrix is rank-1 and cascaded
        recovery is impossible (RankDeficient).
    Returns a structured report; raises nothing.
    """
    if sc.K != 1:
        raise PlanError("demo is defined for the single-user case")
    N = sc.N
    tau1 = N + 1
    alphabet = PskAlphabet(sc.D)
    V = dft_matrix(tau1)
    seed = sc.seed if seed is None else seed

    # (a) varying phases, detection from the slot-1 effective channel only
    sym_errors = 0
    sym_total = 0
    for i in range(trials):
        stream = SeededStream(seed, i)
        ch = sc_draw_passive(sc, stream)
        Hc1 = ch.Hc(0)
        data = stream.child(1).rng.integers(0, sc.D, size=N)
        s = alphabet.modulate(data)
        f = Hc1 @ V                      # effective channel per slot, M x tau1
        f1_hat = f[:, 0]                 # noiseless slot-1 pilot estimate
        stat = f1_hat.conj() @ (f[:, 1:] * s[None, :])
        det = np.asarray(alphabet.detect(stat))
        sym_errors += int(np.sum(det != data))
        sym_total += N
    varying_ser = sym_errors / sym_total

    # (b) constant phases: Phi_T1 is rank one
    phi_const = np.ones(N + 1, dtype=complex)
    Phi_T1 = np.tile(phi_const[:, None], (1, tau1))
    rank_failure = False
    try:
        lstsq(Phi_T1.T, np.ones(tau1, dtype=complex))
    except RankDeficient:
        rank_failure = True

    # hybrid counterpart, same seeds, noiseless: zero detection errors
    hybrid_errors = 0
    for i in range(trials):
        stream = SeededStream(seed, i)
        ch = sc_draw_passive(sc, stream)
        data = stream.child(1).rng.integers(0, sc.D, size=N)
        p1 = dd_phase1(ch, sc, data, noise=None)
        hybrid_errors += p1["ris_symbol_errors"]

    return {
        "varying_phase_symbol_error_rate": varying_ser,
        "constant_phase_rank_deficient": rank_failure,
        "hybrid_symbol_errors": hybrid_errors,
        "trials": trials,
    }


def sc_draw_passive(sc: Scenario, stream: SeededStream) -> ChannelRealization:
    from .model import draw_channels
    return draw_channels(sc, stream)
