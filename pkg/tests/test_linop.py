import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import herm
from logscatter.errors import DomainError, MatrixRangeError
from logscatter.linop import (PowerFamily, hermitian, identity, is_unitary, matrix_exp,
                             operator_norm, unitarity_defect, unitary_power)

finite = st.floats(-3, 3, allow_nan=False)


def _herm_from(a):
    n = int(math.isqrt(a.size // 2))
    m = a[:n * n].reshape(n, n) + 1j * a[n * n:2 * n * n].reshape(n, n)
    return (m + m.conj().T) / 2


herm_st = st.integers(1, 4).flatmap(
    lambda n: arrays(float, 2 * n * n, elements=finite)).map(_herm_from)


def test_matrix_exp_examples():
    assert np.allclose(matrix_exp(np.zeros((2, 2))), np.eye(2))
    assert np.allclose(matrix_exp(np.diag([1j * np.pi, 0])), np.diag([-1, 1]), atol=1e-15)
    th = np.pi / 3
    R = matrix_exp(th * np.array([[0, 1], [-1, 0]]))
    assert np.allclose(R, [[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]], atol=1e-15)


def test_matrix_exp_overflow():
    with pytest.raises(MatrixRangeError):
        matrix_exp(np.diag([800.0, 0.0]))


def test_matrix_exp_accuracy_large_norm(rng):
    # eigen-decomposition oracle on a normal matrix with ||M|| ~ 50
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    lam = np.array([49.0, -30.0 + 5j, 12j, 0.5])
    M = Q @ np.diag(lam) @ Q.conj().T
    ref = Q @ np.diag(np.exp(lam)) @ Q.conj().T
    assert np.linalg.norm(matrix_exp(M) - ref, 2) / np.linalg.norm(ref, 2) < 1e-12


@settings(max_examples=40, deadline=None)
@given(arrays(complex, (3, 3), elements=st.complex_numbers(max_magnitude=3)))
def test_matrix_exp_inverse(M):
    assert np.linalg.norm(matrix_exp(M) @ matrix_exp(-M) - np.eye(3), 2) < 1e-10


def test_operator_norm_examples():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0)
    assert operator_norm(np.diag([3, -4j])) == pytest.approx(4.0)
    assert operator_norm([[0, 2], [0, 0]]) == pytest.approx(2.0)


def test_hermitian_symmetrizes_and_rejects():
    m = np.array([[1.0, 2 + 1e-13], [2, 3]])
    h = hermitian(m)
    assert np.array_equal(h, h.conj().T)
    with pytest.raises(DomainError):
        hermitian([[1.0, 2.0], [2.1, 3.0]])
    with pytest.raises(DomainError):
        hermitian(np.ones((2, 3)))
    with pytest.raises(DomainError):
        hermitian([[np.nan]])


def test_unitary_power_examples():
    B = hermitian([[0.3, 1j], [-1j, 2.0]])
    assert np.allclose(unitary_power(B, 1.0, 0.5), identity(2))
    assert np.allclose(unitary_power(np.zeros((2, 2)), 100.0, 1.0), identity(2))
    assert unitary_power([[2.0]], math.e, 0.5)[0, 0] == pytest.approx(np.exp(1j))
    with pytest.raises(DomainError):
        unitary_power(B, 0.0, 0.5)
    with pytest.raises(DomainError):
        unitary_power(B, -2.0, 0.5)


@settings(max_examples=60, deadline=None)
@given(herm_st, st.floats(0.01, 1e6), st.floats(0.01, 1e6), st.floats(-2, 2))
def test_unitary_power_group_law(B, s, t, eps):
    Us, Ut = unitary_power(B, s, eps), unitary_power(B, t, eps)
    assert unitarity_defect(Us) < 1e-10
    assert np.linalg.norm(Us @ Ut - unitary_power(B, s * t, eps), 2) < 1e-10
    assert np.linalg.norm(Us @ Ut - Ut @ Us, 2) < 1e-10


def test_power_family_vectorized_matches_scalar(rng):
    fam = PowerFamily(herm(rng, 3))
    ts = np.array([1.0, 2.5, 1e3])
    stack = fam.log_power(np.log(ts), 0.7)
    for t, U in zip(ts, stack):
        assert np.allclose(U, scipy.linalg.expm(0.7j * np.log(t) * fam.B))
        assert is_unitary(U)
