import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risdd.errors import RankDeficient
from risdd.linalg import SeededStream, complex_gaussian, dft_matrix, lstsq


def test_seeded_stream_deterministic():
    a = SeededStream(1, 0).rng.standard_normal(8)
    b = SeededStream(1, 0).rng.standard_normal(8)
    assert np.array_equal(a, b)


def test_seeded_stream_children_differ():
    s = SeededStream(1, 0)
    a = s.child(0).rng.standard_normal(8)
    b = s.child(1).rng.standard_normal(8)
    assert not np.allclose(a, b)


def test_seeded_stream_streams_differ():
    a = SeededStream(1, 0).rng.standard_normal(8)
    b = SeededStream(1, 1).rng.standard_normal(8)
    c = SeededStream(2, 0).rng.standard_normal(8)
    assert not np.allclose(a, b) and not np.allclose(a, c)


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_dft_matrix_unitary(n):
    V = dft_matrix(n)
    assert np.allclose(V @ V.conj().T, n * np.eye(n), atol=1e-10)
    assert np.allclose(np.abs(V), 1.0)


def test_complex_gaussian_moments():
    z = complex_gaussian(SeededStream(3, 0), 0, 2.0, shape=(200000,))
    assert abs(np.mean(np.abs(z) ** 2) - 2.0) < 0.03
    assert abs(np.mean(z.real * z.imag)) < 0.01
    assert abs(np.var(z.real) - 1.0) < 0.02


def test_lstsq_exact():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 4)) + 1j * rng.standard_normal((10, 4))
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert np.allclose(lstsq(A, A @ x), x, atol=1e-10)


def test_lstsq_rank_deficient():
    A = np.ones((5, 3), dtype=complex)
    with pytest.raises(RankDeficient) as exc:
        lstsq(A, np.ones(5, dtype=complex))
    assert exc.value.rank == 1 and exc.value.required == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 16))
def test_lstsq_overdetermined_residual_orthogonal(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n + 4, n)) + 1j * rng.standard_normal((n + 4, n))
    b = rng.standard_normal(n + 4) + 1j * rng.standard_normal(n + 4)
    x = lstsq(A, b)
    r = b - A @ x
    assert np.allclose(A.conj().T @ r, 0, atol=1e-9)
