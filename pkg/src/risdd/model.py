"""Scenario description, channel synthesis, and received-signal models.

All internal math is in linear units (watts); dBm/dB conversions happen
only at the Scenario boundary.  Noise is always passed in by the caller
so the estimators can be exercised noiselessly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError, ShapeError
from .linalg import SeededStream, complex_gaussian

__all__ = [
    "Scenario", "ChannelRealization", "draw_channels", "rx_bs", "rx_ris",
    "dbm_to_watts", "watts_to_dbm", "exp_corr",
]


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) / 1000.0


def watts_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w * 1000.0)


def exp_corr(n: int, r: float) -> np.ndarray:
    """Exponential correlation matrix, entries r^|i-j|."""
    idx = np.arange(n)
    return r ** np.abs(idx[:, None] - idx[None, :])


@dataclass
class Scenario:
    """Physical and protocol parameters for one experiment setup.

    Large-scale gains can be given either through node positions
    (`bs_pos`, `ris_pos`, `user_pos`) or directly via `beta_ub`,
    `beta_ur`, `beta_rb` overrides.  `beta_ub = 0` models the
    no-direct-channel case.
    """
    K: int = 1
    M: int = 1
    N: int = 50
    N_A: int | None = None            # defaults to K
    sensing_set: list[int] | None = None  # defaults to the last N_A elements
    rho_A: float | list[float] = 0.5
    P: float = 1e-2                   # transmit power, watts
    N0_BS: float = 1.258925e-14       # noise power, watts (-169 dBm/Hz x 1 MHz)
    N0_RIS: float = 1.258925e-14
    D: int = 16
    tau_c: int = 500
    # geometry (meters); 2-D coordinates
    bs_pos: tuple[float, float] | None = None
    ris_pos: tuple[float, float] | None = None
    user_pos: list[tuple[float, float]] | None = None
    # direct beta overrides (take precedence over geometry)
    beta_ub: list[float] | None = None
    beta_ur: list[float] | None = None
    beta_rb: float | None = None
    # path-loss model
    beta0: float = 1e-2               # -20 dB at d0
    d0: float = 1.0
    alpha_ub: float = 4.0
    alpha_ur: float = 2.2
    alpha_rb: float = 2.2
    # optional correlation (exponential coefficient; 0 = identity)
    corr_r: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.N_A is None:
            self.N_A = self.K
        if self.sensing_set is None:
            self.sensing_set = list(range(self.N - self.N_A, self.N))
        if not (1 <= self.K <= self.N_A <= self.N):
            raise ConfigError(
                f"need 1 <= K <= N_A <= N, got K={self.K}, N_A={self.N_A}, N={self.N}")
        if len(self.sensing_set) != self.N_A or \
                sorted(set(self.sensing_set)) != sorted(self.sensing_set) or \
                any(not 0 <= i < self.N for i in self.sensing_set):
            raise ConfigError("sensing_set must be N_A distinct indices in [0, N)")
        rho = self.rho_vec_A
        if np.any(rho < 0) or np.any(rho > 1):
            raise ConfigError("rho_A entries must lie in [0, 1]")
        if self.D not in (2, 4, 8, 16, 32):
            raise ConfigError(f"D must be a power of two in 2..32, got {self.D}")
        if self.P <= 0 or self.N0_BS < 0 or self.N0_RIS < 0:
            raise ConfigError("powers must be positive, noise nonnegative")

    # -- derived quantities ------------------------------------------------

    @property
    def rho_vec_A(self) -> np.ndarray:
        """Reflection amplitudes of the sensing elements, length N_A."""
        r = np.asarray(self.rho_A, dtype=float)
        if r.ndim == 0:
            r = np.full(self.N_A, float(r))
        if r.shape != (self.N_A,):
            raise ConfigError(f"rho_A must be scalar or length N_A={self.N_A}")
        return r

    @property
    def rho_full(self) -> np.ndarray:
        """Per-element reflection amplitudes, length N (1 off the sensing set)."""
        rho = np.ones(self.N)
        rho[self.sensing_set] = self.rho_vec_A
        return rho

    @property
    def eta_A(self) -> np.ndarray:
        return np.sqrt(1.0 - self.rho_vec_A ** 2)

    @property
    def reflect_set(self) -> list[int]:
        sensing = set(self.sensing_set)
        return [i for i in range(self.N) if i not in sensing]

    def betas(self) -> tuple[np.ndarray, np.ndarray, float]:
        """(beta_ub[K], beta_ur[K], beta_rb) from overrides or geometry."""
        def from_dist(d: float, alpha: float) -> float:
            if d <= 0:
                raise GeometryError(f"nonpositive distance {d}")
            return self.beta0 * (d / self.d0) ** (-alpha)

        if self.beta_ub is not None and self.beta_ur is not None \
                and self.beta_rb is not None:
            b_ub = np.asarray(self.beta_ub, dtype=float)
            b_ur = np.asarray(self.beta_ur, dtype=float)
            if b_ub.shape != (self.K,) or b_ur.shape != (self.K,):
                raise ConfigError("beta_ub/beta_ur must have K entries")
            return b_ub, b_ur, float(self.beta_rb)
        if self.bs_pos is None or self.ris_pos is None or self.user_pos is None:
            raise ConfigError("need either beta overrides or full geometry")
        if len(self.user_pos) != self.K:
            raise ConfigError(f"user_pos must have K={self.K} entries")
        bs = np.asarray(self.bs_pos, dtype=float)
        ris = np.asarray(self.ris_pos, dtype=float)
        users = np.asarray(self.user_pos, dtype=float)
        b_ub = np.array([from_dist(np.linalg.norm(u - bs), self.alpha_ub)
                         for u in users])
        b_ur = np.array([from_dist(np.linalg.norm(u - ris), self.alpha_ur)
                         for u in users])
        b_rb = from_dist(float(np.linalg.norm(ris - bs)), self.alpha_rb)
        return b_ub, b_ur, b_rb


@dataclass
class ChannelRealization:
    """One draw of the propagation environment."""
    H_d: np.ndarray          # M x K direct channel
    H: np.ndarray            # M x N RIS->BS channel
    G: np.ndarray            # N x K user->RIS channel
    sensing_set: list[int] = field(default_factory=list)
    rho_A: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def eta_A(self) -> np.ndarray:
        return np.sqrt(1.0 - self.rho_A ** 2)

    def Hc(self, k: int) -> np.ndarray:
        """Cascaded channel of user k: [h_d_k, H diag(g_k)], M x (N+1)."""
        return np.concatenate(
            [self.H_d[:, k:k + 1], self.H * self.G[:, k][None, :]], axis=1)

    def G_A(self) -> np.ndarray:
        """Rows of G at the sensing elements, N_A x K."""
        return self.G[self.sensing_set, :]


def _corr_sqrt(n: int, r: float) -> np.ndarray | None:
    if r == 0.0:
        return None
    c = exp_corr(n, r)
    w, v = np.linalg.eigh(c)
    return v @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ v.T


def draw_channels(sc: Scenario, stream: SeededStream) -> ChannelRealization:
    """Draw (H_d, H, G) with the large-scale/correlated Gaussian model."""
    b_ub, b_ur, b_rb = sc.betas()
    rng = stream.child(0)
    sq_m = _corr_sqrt(sc.M, sc.corr_r)
    sq_n = _corr_sqrt(sc.N, sc.corr_r)

    H_d = complex_gaussian(rng, 0, 1.0, shape=(sc.M, sc.K))
    if sq_m is not None:
        H_d = sq_m @ H_d
    H_d = H_d * np.sqrt(b_ub)[None, :]

    G = complex_gaussian(rng, 0, 1.0, shape=(sc.N, sc.K))
    if sq_n is not None:
        G = sq_n @ G
    G = G * np.sqrt(b_ur)[None, :]

    Hbar = complex_gaussian(rng, 0, 1.0, shape=(sc.M, sc.N))
    if sq_m is not None:
        Hbar = sq_m @ Hbar
    if sq_n is not None:
        Hbar = Hbar @ sq_n
    H = np.sqrt(b_rb) * Hbar

    return ChannelRealization(H_d=H_d, H=H, G=G,
                              sensing_set=list(sc.sensing_set),
                              rho_A=sc.rho_vec_A.copy())


def rx_bs(ch: ChannelRealization, sc: Scenario, phi: np.ndarray,
          s: np.ndarray, noise: np.ndarray | None = None,
          rho: np.ndarray | None = None) -> np.ndarray:
    """Received signal at the BS for one slot.

    y = sqrt(P) sum_k Hc_k diag([1; rho]) [1; phi] s_k + noise.
    `rho` defaults to the scenario's per-element amplitudes; pass
    np.ones(N) for the data stage where sensing is off.
    """
    phi = np.asarray(phi)
    s = np.asarray(s)
    if phi.shape != (sc.N,):
        raise ShapeError(f"phi must have {sc.N} entries, got {phi.shape}")
    if s.shape != (sc.K,):
        raise ShapeError(f"s must have {sc.K} entries, got {s.shape}")
    if rho is None:
        rho = sc.rho_full
    w = np.concatenate([[1.0], rho * phi])
    y = np.zeros(sc.M, dtype=complex)
    for k in range(sc.K):
        if s[k] != 0:
            y += ch.Hc(k) @ w * s[k]
    y *= np.sqrt(sc.P)
    if noise is not None:
        noise = np.asarray(noise)
        if noise.shape != (sc.M,):
            raise ShapeError(f"noise must have {sc.M} entries")
        y = y + noise
    return y


def rx_ris(ch: ChannelRealization, sc: Scenario, phi_A: np.ndarray,
           s: np.ndarray, noise: np.ndarray | None = None) -> np.ndarray:
    """Sensed signal at the RIS sensing elements for one slot.

    y = sqrt(P) diag(eta_A) diag(phi_A) sum_k g_k^A s_k + noise.
    """
    phi_A = np.asarray(phi_A)
    s = np.asarray(s)
    if phi_A.shape != (sc.N_A,):
        raise ShapeError(f"phi_A must have {sc.N_A} entries, got {phi_A.shape}")
    if s.shape != (sc.K,):
        raise ShapeError(f"s must have {sc.K} entries")
    mix = ch.G_A() @ s
    y = np.sqrt(sc.P) * ch.eta_A * phi_A * mix
    if noise is not None:
        noise = np.asarray(noise)
        if noise.shape != (sc.N_A,):
            raise ShapeError(f"noise must have {sc.N_A} entries")
        y = y + noise
    return y
