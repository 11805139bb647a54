import numpy as np
import pytest

from risdd.errors import SingularPowerSplit
from risdd.estimation import pd_overhead, phase2_phi_schedule, phase2_slot_count
from risdd.linalg import SeededStream
from risdd.model import Scenario, draw_channels
from risdd.pd import pd_estimate, pd_phase1, phase2_pilots


def _scenario(K, M, N, seed, rho=0.5, P=1.0, N0=0.0):
    return Scenario(K=K, M=M, N=N, N_A=K, rho_A=rho, P=P,
                    N0_BS=N0, N0_RIS=N0, D=8, tau_c=4000,
                    beta_ub=[1.0] * K, beta_ur=[1.0] * K, beta_rb=1.0,
                    seed=seed)


@pytest.mark.parametrize("K,M,N", [(1, 1, 6), (1, 4, 16), (2, 2, 10),
                                   (3, 4, 21), (4, 8, 33), (2, 8, 12)])
def test_noiseless_exact(K, M, N):
    sc = _scenario(K, M, N, seed=3)
    ch = draw_channels(sc, SeededStream(sc.seed, 0))
    res = pd_estimate(ch, sc, noise=None)
    assert res.nmse <= 1e-16
    for k in range(K):
        assert np.allclose(res.Hc_hat[k], ch.Hc(k), atol=1e-10)


def test_rank_collision_regression():
    # K=3, M=4, N=21 makes the stacked system exactly square; DFT pilots
    # whose frequency differences alias the phase schedule would drop rank
    for seed in range(6):
        sc = _scenario(3, 4, 21, seed=100 + seed)
        ch = draw_channels(sc, SeededStream(sc.seed, 0))
        assert pd_estimate(ch, sc, noise=None).nmse <= 1e-16


def test_phase1_estimates_g1A():
    sc = _scenario(2, 3, 12, seed=7)
    ch = draw_channels(sc, SeededStream(sc.seed, 0))
    p1 = pd_phase1(ch, sc, None)
    assert np.allclose(p1["g1A_hat"], ch.G_A()[:, 0], atol=1e-10)
    assert np.allclose(p1["Hc1_hat"], ch.Hc(0), atol=1e-10)


def test_rho_zero_rejected():
    sc = _scenario(1, 1, 8, seed=1, rho=0.0)
    ch = draw_channels(sc, SeededStream(sc.seed, 0))
    with pytest.raises(SingularPowerSplit):
        pd_phase1(ch, sc, None)


def test_nmse_improves_with_power():
    nm = []
    for P in (1e-2, 1e2):
        sc = _scenario(2, 4, 12, seed=11, P=P, N0=1e-2)
        vals = [pd_estimate(draw_channels(sc, SeededStream(sc.seed, i)),
                            sc, noise=SeededStream(99, i)).nmse
                for i in range(30)]
        nm.append(np.mean(vals))
    assert nm[1] < nm[0] * 1e-2


def test_phase2_pilot_shapes():
    # simultaneous branch: unit-modulus, full row rank
    sc = _scenario(3, 2, 20, seed=0)
    S = phase2_pilots(sc)
    tau2 = phase2_slot_count(3, 2, 20, 3)
    assert S.shape == (2, tau2)
    assert np.allclose(np.abs(S), 1.0)
    assert np.linalg.matrix_rank(S) == 2
    # decoupled branch: two exclusive slots per user
    sc2 = _scenario(3, 32, 20, seed=0)
    S2 = phase2_pilots(sc2)
    assert S2.shape == (2, phase2_slot_count(3, 32, 20, 3))
    assert np.count_nonzero(S2) == 4


def test_phi_schedule_unit_modulus():
    ph = phase2_phi_schedule(10, 25)
    assert ph.shape == (10, 25)
    assert np.allclose(np.abs(ph), 1.0)


def test_overhead_values():
    # K=1: phase 2 is empty
    assert pd_overhead(1, 1, 50, 1) == 51
    # M >= N - N_A: two slots per extra user
    assert pd_overhead(3, 16, 12, 3) == 13 + 4
    # M < N - N_A: K-1 + ceil((K-1)(N-N_A)/M) extra slots
    assert pd_overhead(2, 2, 16, 2) == 17 + 1 + 7
