"""RIS phase configuration from estimated cascaded channels.

All routines work on the (N+1)-column cascaded estimate [h_d, A] and
return a unit-modulus phase vector for the N reflecting elements.
"""
from __future__ import annotations

import numpy as np

from .errors import PlanError, ShapeError

__all__ = ["single_user_siso", "single_user_mimo", "multiuser_maxmin"]


def single_user_siso(hc_hat: np.ndarray) -> np.ndarray:
    """Co-phasing for M=1: phi_i aligns a_i with the direct path h_d.

    hc_hat: length N+1 vector [h_d, a_1..a_N].  Elements with a_i = 0
    get phase angle 0.
    """
    hc_hat = np.asarray(hc_hat).ravel()
    h_d, a = hc_hat[0], hc_hat[1:]
    ang = np.where(a == 0, 0.0, np.angle(h_d) - np.angle(a))
    return np.exp(1j * ang)


def single_user_mimo(Hc_hat: np.ndarray, tol: float = 1e-8,
                     max_sweeps: int = 200) -> np.ndarray:
    """Maximize ||h_d + A phi||^2 by element-wise coordinate ascent.

    Each update is closed form: with the residual r_n = h_d + sum_{m!=n}
    a_m phi_m, the optimum is phi_n = c*/|c| for c = a_n^H r_n.  The
    objective is monotone nondecreasing, so the loop terminates at a
    stationary point.
    """
    Hc_hat = np.asarray(Hc_hat)
    if Hc_hat.ndim == 1:
        Hc_hat = Hc_hat[None, :]
    h_d, A = Hc_hat[:, 0], Hc_hat[:, 1:]
    N = A.shape[1]
    if np.allclose(A, 0):
        return np.ones(N, dtype=complex)

    phi = np.ones(N, dtype=complex)
    y = h_d + A @ phi
    obj = float(np.vdot(y, y).real)
    for _ in range(max_sweeps):
        prev = obj
        for n in range(N):
            a_n = A[:, n]
            if not np.any(a_n):
                continue
            r = y - a_n * phi[n]
            c = np.vdot(a_n, r)          # a_n^H r
            new = c / abs(c) if c != 0 else 1.0 + 0j
            y = r + a_n * new
            phi[n] = new
        obj = float(np.vdot(y, y).real)
        if obj - prev <= tol * max(prev, 1.0):
            break
    return phi


def multiuser_maxmin(Hc_hats: list[np.ndarray], P: float, N0: float,
                     n_angles: int = 64, max_sweeps: int = 10,
                     rel_tol: float = 1e-3) -> np.ndarray:
    """Max-min SINR phase design under ZF combining at the BS.

    For each candidate phi the BS applies the pseudoinverse of the
    effective channel F = [f_1..f_K], f_k = h_dk + A_k phi, giving
    SINR_k = P / (N0 ||row_k(pinv F)||^2).  Each element is optimized
    over a uniform grid of n_angles phases, sweeping until no element
    update improves the minimum SINR by a relative rel_tol.  K=1
    reduces to the single-user design.
    """
    K = len(Hc_hats)
    if K == 0:
        raise PlanError("need at least one user")
    if K == 1:
        return single_user_mimo(Hc_hats[0])
    Hc = [np.asarray(H) for H in Hc_hats]
    M, Np1 = Hc[0].shape
    if M < K:
        raise PlanError(f"zero forcing needs M >= K, got {M} < {K}")
    for H in Hc:
        if H.shape != (M, Np1):
            raise ShapeError("inconsistent cascaded channel shapes")
    N = Np1 - 1
    h_d = np.stack([H[:, 0] for H in Hc], axis=1)       # M x K
    A = np.stack([H[:, 1:] for H in Hc], axis=2)        # M x N x K

    angles = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)

    def min_sinr_batch(cand: np.ndarray) -> np.ndarray:
        # ZF noise gain ||row_k pinv(F)||^2 = [(F^H F)^{-1}]_{kk}
        G = np.einsum("...mi,...mj->...ij", cand.conj(), cand)
        g = np.abs(np.diagonal(np.linalg.inv(G), axis1=-2, axis2=-1))
        return (P / N0) / np.max(g, axis=-1)

    phi = np.ones(N, dtype=complex)
    F = h_d + np.einsum("mnk,n->mk", A, phi)
    best = float(min_sinr_batch(F[None])[0])
    for _ in range(max_sweeps):
        improved = False
        for n in range(N):
            base = F - A[:, n, :] * phi[n]
            # all candidate effective channels at once: n_angles x M x K
            cand = base[None, :, :] + angles[:, None, None] * A[None, :, n, :]
            scores = min_sinr_batch(cand)
            j = int(np.argmax(scores))
            if scores[j] > best * (1 + rel_tol):
                best = float(scores[j])
                phi[n] = angles[j]
                F = cand[j]
                improved = True
        if not improved:
            break
    return phi
