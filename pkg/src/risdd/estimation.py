"""Shared pieces of the two estimation protocols.

Both protocols use the same slot bookkeeping: phase 1 spans tau1 = N+1
slots with the typical user active, phase 2 spans tau2 slots (the count
set by the least-squares identifiability condition for the remaining
users), and phase-2 RIS phase shifts cycle through DFT columns so every
reflecting element's phase varies from slot to slot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PlanError, ShapeError
from .linalg import dft_matrix, lstsq
from .model import ChannelRealization, Scenario

__all__ = ["EstimationResult", "pd_overhead", "phase2_slot_count",
           "phase2_phi_schedule", "solve_upsilon", "assemble_result"]


@dataclass
class EstimationResult:
    """Estimated cascaded channels plus bookkeeping for one trial."""
    Hc_hat: list[np.ndarray]          # K matrices, M x (N+1)
    G_A_hat: np.ndarray               # N_A x K
    lambda_hat: np.ndarray | None     # N x K ratio estimates (col 0 = ones)
    nmse_per_user: np.ndarray
    nmse: float
    pilot_slots: int
    data_slots: int

    @staticmethod
    def build(sc: Scenario, ch: ChannelRealization,
              Hc_hat: list[np.ndarray], G_A_hat: np.ndarray,
              lambda_hat: np.ndarray | None,
              pilot_slots: int, data_slots: int) -> "EstimationResult":
        per_user = np.array([
            np.linalg.norm(Hc_hat[k] - ch.Hc(k)) ** 2
            / np.linalg.norm(ch.Hc(k)) ** 2
            for k in range(sc.K)])
        return EstimationResult(
            Hc_hat=Hc_hat, G_A_hat=G_A_hat, lambda_hat=lambda_hat,
            nmse_per_user=per_user, nmse=float(per_user.mean()),
            pilot_slots=pilot_slots, data_slots=data_slots)


def phase2_slot_count(K: int, M: int, N: int, N_A: int) -> int:
    """Minimum number of phase-2 slots for identifiability of the
    remaining users' parameters."""
    if K == 1:
        return 0
    if M >= N - N_A:
        return 2 * (K - 1)
    return K - 1 + math.ceil((K - 1) * (N - N_A) / M)


def pd_overhead(K: int, M: int, N: int, N_A: int) -> int:
    """Total pilot overhead of the pilot-directed protocol."""
    if not (1 <= K <= N_A <= N) or M < 1:
        raise PlanError(f"invalid dims K={K}, M={M}, N={N}, N_A={N_A}")
    return (N + 1) + phase2_slot_count(K, M, N, N_A)


def phase2_phi_schedule(N: int, tau2: int) -> np.ndarray:
    """Per-slot RIS phase vectors for phase 2, N x tau2.

    Columns 1.. of the (N+1)-point DFT matrix (rows 1..N), cycled, so
    every element's phase differs between any two consecutive slots.
    """
    V = dft_matrix(N + 1)
    cols = [1 + (t % N) for t in range(tau2)]
    return V[1:, cols]


def solve_upsilon(sc: Scenario, Y2: np.ndarray, phi2: np.ndarray,
                  S2: np.ndarray, A1_hat: np.ndarray,
                  lambda_A_hat: np.ndarray) -> np.ndarray:
    """Stacked least squares for the phase-2 parameter vector.

    Y2       M x tau2 received (BS) signals, user-1 term already removed
    phi2     N x tau2 phase schedule
    S2       (K-1) x tau2 symbols of users 2..K (pilots and/or decisions)
    A1_hat   M x N estimate of the typical user's RIS-cascaded part
    lambda_A_hat  N_A x (K-1) sensed-channel ratios of users 2..K

    Returns ups, shape (K-1) x (M + N - N_A): rows [h_d_k ; lambda_k^B].
    """
    K, M, N, N_A = sc.K, sc.M, sc.N, sc.N_A
    refl = sc.reflect_set
    sens = sc.sensing_set
    rho_A = sc.rho_vec_A
    tau2 = Y2.shape[1]
    if S2.shape != (K - 1, tau2) or phi2.shape != (N, tau2):
        raise ShapeError("phase-2 operand shapes disagree")
    n_up = M + N - N_A
    A1_B = A1_hat[:, refl]
    A1_A = A1_hat[:, sens]

    rows = []
    rhs = []
    for t in range(tau2):
        B_t = np.concatenate([np.eye(M), A1_B * phi2[refl, t][None, :]], axis=1)
        Q_t = np.kron(S2[:, t][None, :], B_t)     # M x (K-1)*n_up
        # sensed-part compensation from phase-1 estimates
        f_A = A1_A @ ((rho_A * phi2[sens, t])[:, None] * lambda_A_hat)
        y_tilde = f_A @ S2[:, t]
        rows.append(Q_t)
        rhs.append(Y2[:, t] / np.sqrt(sc.P) - y_tilde)
    Q = np.concatenate(rows, axis=0)
    b = np.concatenate(rhs)
    ups = lstsq(Q, b)
    return ups.reshape(K - 1, n_up)


def assemble_result(sc: Scenario, ch: ChannelRealization,
                    Hc1_hat: np.ndarray, g1A_hat: np.ndarray,
                    G_A_rest: np.ndarray | None,
                    ups: np.ndarray | None,
                    pilot_slots: int, data_slots: int) -> EstimationResult:
    """Reconstruct every user's cascaded channel from the two phases."""
    K, M, N, N_A = sc.K, sc.M, sc.N, sc.N_A
    refl = sc.reflect_set
    sens = sc.sensing_set
    A1_hat = Hc1_hat[:, 1:]
    Hc_hat = [Hc1_hat]
    lambda_hat = np.ones((N, K), dtype=complex)
    if K > 1:
        G_A_hat = np.concatenate([g1A_hat[:, None], G_A_rest], axis=1)
    else:
        G_A_hat = g1A_hat[:, None]
    for k in range(1, K):
        lam = np.empty(N, dtype=complex)
        lam[refl] = ups[k - 1, M:]
        lam[sens] = G_A_hat[:, k] / g1A_hat
        lambda_hat[:, k] = lam
        hd_k = ups[k - 1, :M]
        Hc_hat.append(np.concatenate(
            [hd_k[:, None], A1_hat * lam[None, :]], axis=1))
    return EstimationResult.build(sc, ch, Hc_hat, G_A_hat, lambda_hat,
                                  pilot_slots, data_slots)
