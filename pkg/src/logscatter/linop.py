"""Dense complex matrix primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The
"Hermitian" and "unitary" flavours are not separate classes; they are
validated at the boundaries by :func:`hermitian` and :func:`unitarity_defect`.
"""

import numpy as np
import scipy.linalg

from .errors import DomainError, MatrixRangeError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


def as_matrix(m):
    """Return `m` as a finite square complex matrix (or a stack of them)."""
    a = np.array(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian(m, tol=HERMITIAN_TOL):
    """Validate and symmetrize a Hermitian matrix.

    The asymmetry ``max|M - M*|`` must not exceed `tol`; the returned
    matrix is ``(M + M*) / 2``.
    """
    a = as_matrix(m)
    asym = np.max(np.abs(a - dagger(a))) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if asym > tol * scale:
        raise DomainError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return 0.5 * (a + dagger(a))


def identity(dim):
    return np.eye(dim, dtype=complex)


def operator_norm(m):
    """Spectral norm (largest singular value)."""
    a = as_matrix(m)
    return float(np.linalg.norm(a, 2))


def unitarity_defect(m):
    """``||M* M - I||`` in operator norm."""
    a = as_matrix(m)
    return float(np.linalg.norm(dagger(a) @ a - identity(a.shape[-1]), 2))


def is_unitary(m, tol=UNITARY_TOL):
    return unitarity_defect(m) <= tol


def matrix_exp(m):
    """Matrix exponential ``e^M``; also accepts a stack ``(..., d, d)``.

    Raises
    ------
    MatrixRangeError
        If the result overflows double precision.
    """
    a = as_matrix(m)
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise MatrixRangeError("matrix exponential overflowed")
    return out


class PowerFamily:
    """The unitary family ``t -> t^{i eps B} = exp(i eps ln(t) B)``.

    The eigendecomposition of `B` is computed once, so evaluating the
    family on many `t` values is cheap and every value is unitary to
    rounding.
    """

    def __init__(self, B):
        self.B = hermitian(B)
        self.dim = self.B.shape[0]
        self.evals, self.evecs = np.linalg.eigh(self.B)
        self._evecs_h = dagger(self.evecs)

    def log_power(self, logt, eps):
        """``exp(i eps logt B)`` for scalar or array `logt`."""
        logt = np.asarray(logt, dtype=float)
        phase = np.exp(1j * eps * logt[..., None] * self.evals)
        return (self.evecs * phase[..., None, :]) @ self._evecs_h

    def __call__(self, t, eps):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("power family requires t > 0")
        return self.log_power(np.log(t), eps)


def unitary_power(B, t, eps):
    """``t^{i eps B}`` for Hermitian `B` and ``t > 0``."""
    if t <= 0:
        raise DomainError(f"unitary_power requires t > 0, got {t}")
    return PowerFamily(B)(t, eps)
