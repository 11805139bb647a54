"""Two-phase pilot-directed estimation of all cascaded channels.

Phase 1: the typical user sends all-ones pilots over tau1 = N+1 slots
while the RIS phases sweep the columns of the (N+1)-point DFT matrix;
the BS recovers H_c,1 by a de-rotation that is exact without noise, and
the sensing elements recover the typical user's sensed channel.

Phase 2: the remaining users send pilots; the BS solves a stacked least
squares for their direct channels and reflecting-element ratios after
compensating the sensed-element contribution predicted from phase 1.
"""
from __future__ import annotations

import numpy as np

from .errors import SingularPowerSplit
from .estimation import (EstimationResult, assemble_result, pd_overhead,
                         phase2_phi_schedule, phase2_slot_count,
                         solve_upsilon)
from .linalg import SeededStream, complex_gaussian, dft_matrix
from .model import ChannelRealization, Scenario

__all__ = ["pd_overhead", "pd_phase1", "pd_phase2", "pd_estimate",
           "phase1_signals", "phase2_pilots"]


def _check_power_split(sc: Scenario):
    rho = sc.rho_vec_A
    if np.any(rho == 0):
        raise SingularPowerSplit("rho=0 sensing element: BS-side estimate singular")
    if np.any(rho == 1):
        raise SingularPowerSplit("rho=1 sensing element: RIS-side estimate singular")


def phase1_signals(ch: ChannelRealization, sc: Scenario,
                   noise: SeededStream | None,
                   s_slots: np.ndarray | None = None
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Synthesize (Y_bs, Y_ris, V) over the tau1 = N+1 phase-1 slots.

    s_slots are user-1's per-slot symbols (all-ones pilots by default).
    """
    tau1 = sc.N + 1
    V = dft_matrix(tau1)
    if s_slots is None:
        s_slots = np.ones(tau1, dtype=complex)
    w = np.concatenate([[1.0], sc.rho_full])
    Hc1 = ch.Hc(0)
    Y_bs = np.sqrt(sc.P) * (Hc1 * w[None, :]) @ V * s_slots[None, :]
    phi_A = V[1:, :][sc.sensing_set, :]          # N_A x tau1
    g1A = ch.G_A()[:, 0]
    Y_ris = np.sqrt(sc.P) * (ch.eta_A * g1A)[:, None] * phi_A * s_slots[None, :]
    if noise is not None:
        Y_bs = Y_bs + complex_gaussian(noise.child(1), 0, sc.N0_BS,
                                       shape=Y_bs.shape)
        Y_ris = Y_ris + complex_gaussian(noise.child(2), 0, sc.N0_RIS,
                                         shape=Y_ris.shape)
    return Y_bs, Y_ris, V


def pd_phase1(ch: ChannelRealization, sc: Scenario,
              noise: SeededStream | None = None) -> dict:
    """Pilot-only phase 1: estimates H_c,1 at the BS and g_1^A at the RIS."""
    _check_power_split(sc)
    tau1 = sc.N + 1
    Y_bs, Y_ris, V = phase1_signals(ch, sc, noise)
    w = np.concatenate([[1.0], sc.rho_full])
    Hc1_hat = (Y_bs @ V.conj().T) / (np.sqrt(sc.P) * tau1) / w[None, :]
    phi_A = V[1:, :][sc.sensing_set, :]
    psi_sum = (Y_ris * phi_A.conj()).sum(axis=1)
    g1A_hat = psi_sum / (np.sqrt(sc.P) * tau1 * sc.eta_A)
    return {"Hc1_hat": Hc1_hat, "g1A_hat": g1A_hat}


def phase2_pilots(sc: Scenario) -> np.ndarray:
    """Pilot matrix S of users 2..K over the tau2 phase-2 slots.

    When M >= N - N_A each user gets two exclusive slots (the stacked
    solve then decouples user by user); otherwise all users transmit
    simultaneously with fixed pseudo-random unit-modulus rows.  DFT rows
    are a bad choice here: when a pilot-frequency difference (k-k')/tau2
    aliases an element's phase-schedule frequency n/(N+1) the stacked
    system goes rank deficient (a lambda column of one user becomes
    indistinguishable from a direct-channel column of another).  Random
    phases avoid every such collision and stay well conditioned.
    """
    K, M, N, N_A = sc.K, sc.M, sc.N, sc.N_A
    tau2 = phase2_slot_count(K, M, N, N_A)
    if K == 1:
        return np.zeros((0, 0), dtype=complex)
    if M >= N - N_A:
        S = np.zeros((K - 1, tau2), dtype=complex)
        for j in range(K - 1):
            S[j, 2 * j] = 1.0
            S[j, 2 * j + 1] = 1.0
        return S
    rng = np.random.default_rng(0x5eed + 1009 * K + tau2)
    return np.exp(2j * np.pi * rng.random((K - 1, tau2)))


def pd_phase2(ch: ChannelRealization, sc: Scenario, phase1: dict,
              noise: SeededStream | None = None) -> EstimationResult:
    """Phase 2 pilots plus the stacked LS; returns the full estimate set."""
    K, N = sc.K, sc.N
    tau1 = N + 1
    tau2 = phase2_slot_count(K, sc.M, N, sc.N_A)
    Hc1_hat = phase1["Hc1_hat"]
    g1A_hat = phase1["g1A_hat"]
    if K == 1:
        return assemble_result(sc, ch, Hc1_hat, g1A_hat, None, None,
                               pilot_slots=tau1, data_slots=0)

    S2 = phase2_pilots(sc)
    phi2 = phase2_phi_schedule(N, tau2)
    Y_bs, Y_ris = _phase2_signals(ch, sc, phi2, S2, noise)

    # RIS side: estimate G^A of users 2..K, then the sensed ratios
    phi2_A = phi2[sc.sensing_set, :]
    Psi = Y_ris * phi2_A.conj()
    gram = S2 @ S2.conj().T
    G_A_rest = (Psi @ S2.conj().T @ np.linalg.inv(gram)) \
        / (np.sqrt(sc.P) * sc.eta_A[:, None])
    lambda_A_hat = G_A_rest / g1A_hat[:, None]

    ups = solve_upsilon(sc, Y_bs, phi2, S2, Hc1_hat[:, 1:], lambda_A_hat)
    return assemble_result(sc, ch, Hc1_hat, g1A_hat, G_A_rest, ups,
                           pilot_slots=tau1 + tau2, data_slots=0)


def _phase2_signals(ch: ChannelRealization, sc: Scenario, phi2: np.ndarray,
                    S2: np.ndarray, noise: SeededStream | None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """(Y_bs, Y_ris) over the phase-2 slots; user 1 idle."""
    tau2 = phi2.shape[1]
    Y_bs = np.zeros((sc.M, tau2), dtype=complex)
    w_rho = sc.rho_full
    for k in range(1, sc.K):
        Hck = ch.Hc(k)
        eff = Hck[:, :1] + Hck[:, 1:] @ (w_rho[:, None] * phi2)  # M x tau2
        Y_bs += eff * S2[k - 1, :][None, :]
    Y_bs *= np.sqrt(sc.P)
    G_A = ch.G_A()
    mix = G_A[:, 1:] @ S2                                        # N_A x tau2
    Y_ris = np.sqrt(sc.P) * sc.eta_A[:, None] \
        * phi2[sc.sensing_set, :] * mix
    if noise is not None:
        Y_bs = Y_bs + complex_gaussian(noise.child(3), 0, sc.N0_BS,
                                       shape=Y_bs.shape)
        Y_ris = Y_ris + complex_gaussian(noise.child(4), 0, sc.N0_RIS,
                                         shape=Y_ris.shape)
    return Y_bs, Y_ris


def pd_estimate(ch: ChannelRealization, sc: Scenario,
                noise: SeededStream | None = None) -> EstimationResult:
    """Full pilot-directed pipeline (phase 1 then phase 2)."""
    p1 = pd_phase1(ch, sc, noise)
    return pd_phase2(ch, sc, p1, noise)
