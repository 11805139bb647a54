"""Analytical BER and spectral-efficiency expressions (single user, M=1).

The effective channel after phase alignment is f = sum_i z_i with
z_i = a_i^* exp(j angle(a_i + eps_i)).  Both protocols reduce to a
Gaussian (or ratio-of-Gaussians) angle statistic, integrated over the
PSK decision wedges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.special import erfc, erfcx

from .constellation import PskAlphabet
from .errors import (ApproximationBreakdown, ConfigError, NoCrossover,
                     NumericsError, SymmetryViolation)
from .linalg import dft_matrix
from .model import Scenario, dbm_to_watts, watts_to_dbm

__all__ = [
    "AnalysisInput", "EffectiveChannelMoments", "XiMoments",
    "wedge_probabilities", "ber_from_probs", "ber_pd", "ber_pd_high_snr",
    "ber_dd1", "lemma1_moments", "xi_moments_from_probs", "dd2_moments",
    "se_pd", "se_dd", "find_crossover",
]


@dataclass(frozen=True)
class AnalysisInput:
    """Parameters of the single-user analysis model."""
    N: int
    P: float
    N0_BS: float
    N0_RIS: float
    sigma_g2: float
    sigma_h2: float
    D: int
    tau_c: int

    def __post_init__(self):
        for name in ("P", "N0_BS", "N0_RIS", "sigma_g2", "sigma_h2"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.D < 2 or self.D & (self.D - 1):
            raise ConfigError(f"D must be a power of two, got {self.D}")
        if self.N < 3:
            raise ConfigError(f"need N >= 3, got {self.N}")

    @property
    def sigma_a2(self) -> float:
        return self.sigma_g2 * self.sigma_h2

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "AnalysisInput":
        beta_ub, beta_ur, beta_rb = sc.betas()
        return cls(N=sc.N, P=sc.P, N0_BS=sc.N0_BS, N0_RIS=sc.N0_RIS,
                   sigma_g2=beta_ur[0], sigma_h2=beta_rb, D=sc.D,
                   tau_c=sc.tau_c)


@dataclass(frozen=True)
class EffectiveChannelMoments:
    mu_fRe: float
    mu_fIm: float
    var_fRe: float
    var_fIm: float


@dataclass(frozen=True)
class XiMoments:
    mu_xi: float
    mu_xi2: float
    mu_absxi2: float


def _qfunc(x: float) -> float:
    return 0.5 * erfc(x / math.sqrt(2.0))


def _gaussian_angle_pdf(theta, m, sx2, sy2):
    """pdf of the angle of (X, Y), X ~ N(m, sx2), Y ~ N(0, sy2).

    The radial integral is evaluated in closed form; the erfcx scaling
    keeps the expression finite far into the tails (u^2 - C <= 0 always).
    """
    c, s = np.cos(theta), np.sin(theta)
    A = c * c / (2 * sx2) + s * s / (2 * sy2)
    B = m * c / sx2
    C = m * m / (2 * sx2)
    u = B / (2 * np.sqrt(A))
    # e^{-C} * e^{u^2} * (1 + erf(u)), split by the sign of u
    T = np.where(u >= 0,
                 2 * np.exp(u * u - C) - np.exp(-C) * erfcx(np.abs(u)),
                 np.exp(-C) * erfcx(np.abs(u)))
    front = 1.0 / (2 * np.pi * np.sqrt(sx2 * sy2))
    return front * (np.exp(-C) / (2 * A) + B * np.sqrt(np.pi) / (4 * A ** 1.5) * T)


def _integrate_wedges(pdf, D: int) -> np.ndarray:
    p = np.zeros(D)
    for ell in range(D):
        lo = (2 * ell - 1) * np.pi / D
        hi = (2 * ell + 1) * np.pi / D
        val, _ = integrate.quad(pdf, lo, hi, epsabs=1e-12, epsrel=1e-10,
                                limit=200)
        p[ell] = val
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise NumericsError("wedge probabilities do not sum to 1",
                            achieved=abs(total - 1.0))
    return p


def wedge_probabilities(mu_Re: float, var_Re: float, var_Im: float,
                        P: float, N0: float, D: int) -> np.ndarray:
    """Decision-wedge probabilities for y~ = sqrt(P) f + n~.

    f_Re ~ N(mu_Re, var_Re), f_Im ~ N(0, var_Im); the additive noise
    contributes N0/2 per real dimension after the sqrt(P) scaling.
    """
    if var_Re <= 0 or var_Im <= 0:
        raise ConfigError("variances must be positive")
    m = math.sqrt(P) * mu_Re
    sx2 = P * var_Re + N0 / 2
    sy2 = P * var_Im + N0 / 2
    return _integrate_wedges(lambda th: _gaussian_angle_pdf(th, m, sx2, sy2), D)


def ber_from_probs(p: np.ndarray, D: int) -> float:
    """Gray-weighted bit error rate from symbol-decision probabilities."""
    table = PskAlphabet(D).bit_diff_table()
    return float(np.dot(p, table) / math.log2(D))


def _pd_element_moments(sigma_a2: float, sigma_eps2: float):
    """Moments of z = a* exp(j angle(a + eps)) for the product channel.

    Exact in the noiseless limit: E[z] -> (pi/4) sigma_a and
    Var[z_Re] -> (1 - pi^2/16) sigma_a^2, matching the high-SNR
    constants of the co-phasing analysis.
    """
    denom = sigma_a2 + sigma_eps2
    mu = (math.pi / 4) * sigma_a2 / math.sqrt(denom)
    var_re = ((16 - math.pi ** 2) / 8 * sigma_a2 ** 2
              + sigma_a2 * sigma_eps2) / (2 * denom)
    var_im = sigma_a2 * sigma_eps2 / (2 * denom)
    return mu, var_re, var_im


def ber_pd(inp: AnalysisInput) -> float:
    """Pilot-directed BER from the Gaussian effective-channel model."""
    sigma_eps2 = inp.N0_BS / (inp.P * inp.N)
    mu, var_re, var_im = _pd_element_moments(inp.sigma_a2, sigma_eps2)
    p = wedge_probabilities(inp.N * mu, inp.N * var_re, inp.N * var_im,
                            inp.P, inp.N0_BS, inp.D)
    return ber_from_probs(p, inp.D)


def ber_pd_high_snr(inp: AnalysisInput) -> float:
    """High-SNR two-boundary approximation of the PD BER.

    Replaces the exact wedge integral with the Gaussian tail probability
    of crossing the nearest decision boundary, using the same effective
    channel moments as the exact expression.
    """
    theta = math.pi / inp.D
    t = math.tan(theta)
    sigma_eps2 = inp.N0_BS / (inp.P * inp.N)
    mu, var_re, var_im = _pd_element_moments(inp.sigma_a2, sigma_eps2)
    m = math.sqrt(inp.P) * inp.N * mu
    sx2 = inp.P * inp.N * var_re + inp.N0_BS / 2
    sy2 = inp.P * inp.N * var_im + inp.N0_BS / 2
    den = math.sqrt(sx2 * t * t + sy2)
    return 2 / math.log2(inp.D) * _qfunc(m * t / den)


def _ratio_angle_pdf(theta, q):
    """Angle pdf of (sqrt(P) g + n2)/(sqrt(P) g + n1), q = P sg2/(P sg2+N0).

    Radial integral of r (1-q^2)/pi (1 + r^2 - 2 q r cos(theta))^{-2}
    in closed form.
    """
    pp = q * np.cos(theta)
    delta = np.sqrt(1.0 - pp * pp)
    inner = (np.pi / (4 * delta ** 3) + pp / (2 * delta ** 2)
             + np.arctan(pp / delta) / (2 * delta ** 3))
    return (1 - q * q) / np.pi * (0.5 + pp * inner)


def ber_dd1(P: float, sigma_g2: float, N0_RIS: float, D: int
            ) -> tuple[float, np.ndarray]:
    """BER of RIS-side detection in the estimation stage.

    The detection statistic is a ratio of correlated complex Gaussians;
    its angle pdf is integrated over the decision wedges.  Returns
    (ber, wedge probabilities).
    """
    if P <= 0 or sigma_g2 <= 0 or N0_RIS <= 0:
        raise ConfigError("parameters must be positive")
    q = P * sigma_g2 / (P * sigma_g2 + N0_RIS)
    p = _integrate_wedges(lambda th: _ratio_angle_pdf(th, q), D)
    return ber_from_probs(p, D), p


def xi_moments_from_probs(p: np.ndarray, D: int) -> XiMoments:
    """Exact moments of xi = 1 - s s_hat^* by enumeration over decisions."""
    d = np.arange(D)
    rot = np.exp(-2j * np.pi * d / D)          # S(0) S(d)^*
    e1 = complex(np.dot(p, rot))
    e2 = complex(np.dot(p, rot ** 2))
    mu_xi = 1 - e1
    mu_xi2 = 1 - 2 * e1 + e2
    mu_absxi2 = float(np.dot(p, 2 * (1 - np.cos(2 * np.pi * d / D))))
    return XiMoments(mu_xi=mu_xi.real, mu_xi2=mu_xi2.real,
                     mu_absxi2=mu_absxi2)


def lemma1_moments(p: np.ndarray, D: int) -> XiMoments:
    """Folded closed forms for the xi moments.

    The folding presupposes p_d = p_{d+D/2}; this is verified and a
    SymmetryViolation is raised when it fails by more than 1e-6.
    """
    p = np.asarray(p, dtype=float)
    if D % 2 or p.shape != (D,):
        raise ConfigError("need an even-D probability vector")
    half = D // 2
    gap = float(np.max(np.abs(p - np.roll(p, half))))
    if gap > 1e-6:
        raise SymmetryViolation(
            f"p_d vs p_(d+D/2) differ by {gap:.2e} > 1e-6")
    d = np.arange(1, half)
    c1 = np.cos(2 * np.pi * d / D)
    c2 = np.cos(4 * np.pi * d / D)
    mu_xi = 1 - p[0] + p[half] - 2 * float(np.dot(p[1:half], c1))
    mu_xi2 = (1 - p[0] + 3 * p[half]
              + 2 * float(np.dot(p[1:half], c2 - 2 * c1)))
    mu_absxi2 = 4 * p[half] + 4 * float(np.dot(p[1:half], 1 - c1))
    return XiMoments(mu_xi=mu_xi, mu_xi2=mu_xi2, mu_absxi2=mu_absxi2)


def _xi_correlation_matrices(n: int, xi: XiMoments):
    """R_{xi xi^H} and R_{xi xi^T} with the pilot slot (index 0) zeroed."""
    R_h = np.full((n, n), xi.mu_xi ** 2)
    np.fill_diagonal(R_h, xi.mu_absxi2)
    R_t = np.full((n, n), xi.mu_xi ** 2)
    np.fill_diagonal(R_t, xi.mu_xi2)
    for R in (R_h, R_t):
        R[0, :] = 0.0
        R[:, 0] = 0.0
    return R_h, R_t


def dd2_moments(inp: AnalysisInput, xi: XiMoments) -> EffectiveChannelMoments:
    """Moments of f = sum_{i=1}^{N-1} z_i in the DD transmission stage.

    The per-element means/variances use the closed forms; the pairwise
    covariances evaluate the trace expressions numerically for one
    representative pair (the DFT structure makes all pairs identical)
    and are scaled by the (N-1)(N-2) ordered pairs.
    """
    N, P, N0 = inp.N, inp.P, inp.N0_BS
    sa2 = inp.sigma_a2
    sa4 = sa2 * sa2
    n = N - 1
    mx, mx2, max2 = xi.mu_xi, xi.mu_xi2, xi.mu_absxi2

    sigma_eps2 = (P * (N - 2) * sa2 * max2 + N0) / (P * n)
    re_ae = (N - 2) / (1 - N) * sa2 * mx            # Re E[a eps^*]
    denom = sa2 + 2 * re_ae + sigma_eps2
    if denom <= 0:
        raise ApproximationBreakdown(
            "nonpositive normalization in the element moments", denom)
    mu_z = (sa2 + re_ae) / math.sqrt(denom)

    # fourth-order closed forms
    e_abs_ad2 = (N - 2) / n ** 2 * sa4 * ((N + 2) * max2 + 3 * (N - 3) * mx ** 2)
    e_abs_ae2 = e_abs_ad2 + sa2 * N0 / (P * n)
    e_ae_sq = (N - 2) / n ** 2 * 4 * sa4 * (mx2 + (N - 3) * mx ** 2)
    e_re2 = (e_abs_ae2 + e_ae_sq) / 2
    e_im2 = (e_abs_ae2 - e_ae_sq) / 2
    e_a2_re_ae = (N - 2) / (1 - N) * 4 * sa4 * mx   # E[|a|^2 Re{a eps^*}]
    e_zre2 = (4 * sa4 + 2 * e_a2_re_ae + e_re2) / denom
    var_z_re = e_zre2 - mu_z ** 2
    var_z_im = e_im2 / denom

    # pairwise covariance terms for representative pair (i, t) = (0, 1)
    Phi = dft_matrix(n)
    R_h, R_t = _xi_correlation_matrices(n, xi)
    phi_i, phi_t = Phi[0, :], Phi[1, :]
    Sig = np.zeros((n, n)); Sig[0, 1] = Sig[1, 0] = sa4
    Omg = np.zeros((n, n)); Omg[1, 0] = sa4
    alpha_i = np.full(n, sa4); alpha_i[0] = 4 * sa4
    alpha_t = np.full(n, sa4); alpha_t[1] = 4 * sa4

    def tr(Mat):
        return complex(np.trace(Mat)).real

    e_xy = tr(Phi.T @ Sig @ Phi @ np.diag(phi_i.conj()) @ R_t
              @ np.diag(phi_t.conj())) / n ** 2
    e_xyc = tr(Phi.conj().T @ Omg @ Phi @ np.diag(phi_i.conj()) @ R_h
               @ np.diag(phi_t)) / n ** 2
    e_rere = (e_xy + e_xyc) / 2
    e_imim = (e_xyc - e_xy) / 2
    e_ai2_et2 = tr(Phi.conj().T @ np.diag(alpha_i) @ Phi
                   @ np.diag(phi_t.conj()) @ R_h @ np.diag(phi_t)) / n ** 2 \
        + sa2 * N0 / (P * n)
    e_at2_ei2 = tr(Phi.conj().T @ np.diag(alpha_t) @ Phi
                   @ np.diag(phi_i.conj()) @ R_h @ np.diag(phi_i)) / n ** 2 \
        + sa2 * N0 / (P * n)
    t2 = (N - 2) / (1 - N) * sa4 * mx               # E[|a_i|^2 Re{a_t eps_t^*}]
    t6 = -(N - 2) * N0 * sa2 * mx / (P * n ** 2)    # E[Re{a_i eps_i^*}|eps_t|^2]
    t9 = 2 * (N - 2) * N0 * sa2 * max2 / (P * n ** 2) + N0 ** 2 / (P ** 2 * n ** 2)

    kappa = (sa4 + 2 * t2 + e_ai2_et2 + 2 * t2 + 4 * e_rere
             + 2 * t6 + e_at2_ei2 + 2 * t6 + t9)
    if kappa <= 0:
        raise ApproximationBreakdown(
            "nonpositive pairwise normalization", kappa)
    num_re = sa4 + 2 * t2 + e_rere
    cov_re = num_re / math.sqrt(kappa) - mu_z ** 2
    cov_im = e_imim / math.sqrt(kappa)

    var_fRe = n * var_z_re + n * (N - 2) * cov_re
    var_fIm = n * var_z_im + n * (N - 2) * cov_im
    if var_fRe < 0 or var_fIm < 0:
        raise ApproximationBreakdown("negative effective-channel variance",
                                     min(var_fRe, var_fIm))
    return EffectiveChannelMoments(mu_fRe=n * mu_z, mu_fIm=0.0,
                                   var_fRe=var_fRe, var_fIm=var_fIm)


def se_pd(inp: AnalysisInput) -> float:
    """Spectral efficiency of the pilot-directed protocol (tau_p = N)."""
    if inp.tau_c <= inp.N:
        raise ConfigError("coherence block shorter than the pilot stage")
    return (inp.tau_c - inp.N) / inp.tau_c * (1 - ber_pd(inp)) \
        * math.log2(inp.D)


def se_dd(inp: AnalysisInput) -> float:
    """Spectral efficiency of the decision-directed protocol.

    Stage 1 carries N-2 data slots at BER_DD1; the remaining
    tau_c - (N-1) slots run at BER_DD2 from the moment pipeline.
    """
    if inp.tau_c <= inp.N:
        raise ConfigError("coherence block shorter than the pilot stage")
    ber1, p1 = ber_dd1(inp.P, inp.sigma_g2, inp.N0_RIS, inp.D)
    xi = xi_moments_from_probs(p1, inp.D)
    mom = dd2_moments(inp, xi)
    p2 = wedge_probabilities(mom.mu_fRe, mom.var_fRe, mom.var_fIm,
                             inp.P, inp.N0_BS, inp.D)
    ber2 = ber_from_probs(p2, inp.D)
    tau_d1 = inp.N - 2
    tau_d2 = inp.tau_c - (inp.N - 1)
    return (tau_d1 * (1 - ber1) + tau_d2 * (1 - ber2)) / inp.tau_c \
        * math.log2(inp.D)


def find_crossover(inp: AnalysisInput, P_range_dbm: tuple[float, float],
                   tol_db: float = 0.1) -> float:
    """Transmit power (dBm) where SE_DD - SE_PD changes sign, by bisection."""
    lo, hi = P_range_dbm

    def gap(p_dbm: float) -> float:
        local = replace(inp, P=dbm_to_watts(p_dbm))
        return se_dd(local) - se_pd(local)

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0:
        return lo
    if g_hi == 0:
        return hi
    if g_lo * g_hi > 0:
        raise NoCrossover(
            f"SE_DD - SE_PD has the same sign at {lo} and {hi} dBm")
    while hi - lo > tol_db:
        mid = (lo + hi) / 2
        g_mid = gap(mid)
        if g_mid == 0:
            return mid
        if g_lo * g_mid < 0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    return (lo + hi) / 2
