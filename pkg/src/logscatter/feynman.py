"""Ultraviolet examples: gamma matrices, loop integrands and 4D spherical quadrature.

The first approximation is ``a1(L, q) = -i int_{|p| <= L} F(p, q) d^4p`` in
Euclidean momentum space, written in the spherical coordinates

    p1 = r cos f1, p2 = r sin f1 cos f2, p3 = r sin f1 sin f2 cos f3,
    p4 = r sin f1 sin f2 sin f3,   d^4p = r^3 sin^2 f1 sin f2 df1 df2 df3 dr.

The closed forms below are the printed expressions; each equals
``i int F d^4p = -a1`` up to a term vanishing as ``L -> inf``.  The
logarithmic coefficient ``phi`` of ``a1 = -i(phi ln L + psi + o(1))`` is the
``B_+`` of ``V(L) = i da1/dL = B_+/L + u(L)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PropertyViolation, QuadratureError

TWO_PI4 = (2.0 * np.pi) ** 4
LN10 = math.log(10.0)


@dataclass(frozen=True)
class GammaBasis:
    sigma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def gamma_mu(self, mu):
        """``gamma_mu`` for ``mu = 1..4``."""
        if mu not in (1, 2, 3, 4):
            raise DomainError(f"Lorentz index must be 1..4, got {mu}")
        return self.gamma[mu - 1]


def gamma_basis():
    """Pauli matrices, Dirac ``alpha_k``, ``beta`` and ``gamma_mu``.

    ``gamma_j = beta alpha_j`` (j = 1..3) and ``gamma_4 = beta``, so
    ``gamma_j^2 = -I``, ``gamma_4^2 = I`` and distinct gammas anticommute.
    """
    s = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
    z = np.zeros((2, 2), complex)
    alpha = np.array([np.block([[z, sk], [sk, z]]) for sk in s])
    beta = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    gamma = np.array([beta @ a for a in alpha] + [beta])
    return GammaBasis(s, alpha, beta, gamma)


_G = gamma_basis()


def _as_momentum(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 4:
        raise DomainError("four-momenta need 4 components")
    return p


def slash(q):
    """``q^ = sum_mu q_mu gamma_mu``; vectorized over leading axes of `q`."""
    q = _as_momentum(q)
    return np.tensordot(q, _G.gamma, axes=(-1, 0))


def integrand_J(p, q, mu, m):
    """Matrix integrand of the ``J_mu`` integrals.

    ``F = gamma_mu (i(q^ - p^) - m I) gamma_mu / ((2 pi)^4 p^2 ((q-p)^2 + m^2))``,
    vectorized over leading axes of `p`; returns shape ``p.shape[:-1] + (4, 4)``.
    """
    p = _as_momentum(p)
    q = _as_momentum(q)
    if m <= 0:
        raise DomainError("mass m must be positive")
    p2 = np.sum(p * p, axis=-1)
    if np.any(p2 == 0):
        raise DomainError("integrand_J is singular at p = 0")
    d = q - p
    g = _G.gamma_mu(mu)
    num = 1j * slash(d) - m * np.eye(4)
    den = TWO_PI4 * p2 * (np.sum(d * d, axis=-1) + m * m)
    return g @ num @ g / den[..., None, None]


def _shifted_denominator(p, q, ell):
    q = _as_momentum(q)
    if ell <= float(q @ q):
        raise DomainError(f"need ell > q^2 = {float(q @ q):g}, got ell = {ell:g}")
    return np.sum(p * p, axis=-1) - 2.0 * (p @ q) + ell


def integrand_vacpol(p, q, sigma, tau, ell):
    """``p_sigma p_tau / (p^2 - 2pq + ell)^3`` (indices 1..4), ``ell > q^2``."""
    p = _as_momentum(p)
    den = _shifted_denominator(p, q, ell)
    return p[..., sigma - 1] * p[..., tau - 1] / den ** 3


def integrand_vertex(p, q, sigma, ell):
    """``p_sigma / (p^2 - 2pq + ell)^2`` (index 1..4), ``ell > q^2``."""
    p = _as_momentum(p)
    den = _shifted_denominator(p, q, ell)
    return p[..., sigma - 1] / den ** 2


def make_integrand(example, q, m=None, ell=None, sigma=1, tau=1, mu=1):
    """Bind the parameters of a named example; returns ``F(p)``.

    `example` is ``'J'``, ``'vacpol'`` or ``'vertex'``.
    """
    q = _as_momentum(q)
    if example == "J":
        integrand_J(np.array([1.0, 0, 0, 0]), q, mu, m)
        return lambda p: integrand_J(p, q, mu, m)
    if example == "vacpol":
        _shifted_denominator(np.zeros(4), q, ell)
        return lambda p: integrand_vacpol(p, q, sigma, tau, ell)
    if example == "vertex":
        _shifted_denominator(np.zeros(4), q, ell)
        return lambda p: integrand_vertex(p, q, sigma, ell)
    raise DomainError(f"unknown example {example!r}")


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor Gauss-Legendre rule.

    On ``r in [1, L]`` the radial variable is ``s = ln r`` with
    `radial_nodes` per decade; ``[0, 1]`` uses `inner_nodes` in ``r``.
    """

    radial_nodes: int = 64
    inner_nodes: int = 32
    angular: tuple = (32, 32, 32)

    def __post_init__(self):
        if min(self.radial_nodes, self.inner_nodes, *self.angular) < 4:
            raise DomainError("all node counts must be >= 4")

    def doubled(self):
        return QuadratureSpec(2 * self.radial_nodes, 2 * self.inner_nodes,
                              tuple(2 * n for n in self.angular))


def _gl(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def _sphere(spec):
    """Unit-sphere directions (N, 4) and weights including ``sin^2 f1 sin f2``."""
    n1, n2, n3 = spec.angular
    f1, w1 = _gl(n1, 0.0, np.pi)
    f2, w2 = _gl(n2, 0.0, np.pi)
    f3, w3 = _gl(n3, 0.0, 2 * np.pi)
    F1, F2, F3 = np.meshgrid(f1, f2, f3, indexing="ij")
    s1, s2 = np.sin(F1), np.sin(F2)
    dirs = np.stack([np.cos(F1), s1 * np.cos(F2), s1 * s2 * np.cos(F3),
                     s1 * s2 * np.sin(F3)], axis=-1).reshape(-1, 4)
    w = (w1[:, None, None] * w2[None, :, None] * w3[None, None, :]) * s1 ** 2 * s2
    return dirs, w.reshape(-1)


def _shell(F, r, dirs, w):
    """``r^3 int F(r n) dOmega`` for one radius."""
    vals = np.asarray(F(r * dirs))
    return r ** 3 * np.tensordot(w, vals, axes=(0, 0))


def _radial_rule(a, b, spec, log):
    """Nodes and weights in ``r`` on ``[a, b]``."""
    if log:
        width = math.log(b) - math.log(a)
        n = max(4, math.ceil(spec.radial_nodes * width / LN10))
        s, ws = _gl(n, math.log(a), math.log(b))
        r = np.exp(s)
        return r, ws * r
    return _gl(spec.inner_nodes, a, b)


def _segments(lower, Ls):
    """Radial segments ending at each requested cutoff; log panels above 1."""
    segs = []
    if lower == 0:
        segs.append((0.0, 1.0, False, None))
    start = 1.0
    for k, L in enumerate(Ls):
        a = start
        while a < L:
            b = min(L, a * 10.0)
            segs.append((a, b, True, None))
            a = b
        segs[-1] = segs[-1][:3] + (k,)
        start = L
    return segs


def _series(F, Ls, spec, lower):
    dirs, w = _sphere(spec)
    total = 0.0
    out = [None] * len(Ls)
    for a, b, log, mark in _segments(lower, Ls):
        if b > a:
            r, wr = _radial_rule(a, b, spec, log)
            for ri, wi in zip(r, wr):
                total = total + wi * _shell(F, ri, dirs, w)
        if mark is not None:
            out[mark] = -1j * np.asarray(total, dtype=complex)
    return out


def sphere_a1_series(F, Ls, spec=None, lower=0):
    """``a1`` at several cutoffs in one radial sweep.

    Parameters
    ----------
    F : callable
        ``F(p)`` for ``p`` of shape (N, 4); returns (N,) or (N, d, d).
    Ls : sequence of float
        Increasing cutoffs ``>= 1`` (``> 1`` when ``lower == 1``).
    lower : {0, 1}
        ``lower=1`` drops the ``r < 1`` ball (the part absorbed into ``psi``).
    """
    spec = spec or QuadratureSpec()
    Ls = [float(L) for L in Ls]
    if lower not in (0, 1):
        raise DomainError("lower must be 0 or 1")
    if any(L < 1 for L in Ls) or any(b <= a for a, b in zip(Ls[:-1], Ls[1:])):
        raise DomainError("cutoffs must be >= 1 and strictly increasing")
    if lower == 1 and Ls[0] <= 1:
        raise DomainError("need L > lower")
    return _series(F, Ls, spec, lower)


def sphere_a1(F, L, spec=None, lower=0, tol=None, max_doublings=2, full_output=False):
    """``a1(L) = -i int_{lower <= |p| <= L} F d^4p`` by tensor quadrature.

    With `tol` set the rule is doubled until two successive estimates
    agree to ``tol * max(1, |a1|)``; `full_output` also returns that
    difference (``nan`` without `tol`).
    """
    spec = spec or QuadratureSpec()
    val = sphere_a1_series(F, [L], spec, lower)[0]
    err = math.nan
    if tol is not None:
        for _ in range(max_doublings):
            spec = spec.doubled()
            new = sphere_a1_series(F, [L], spec, lower)[0]
            err = float(np.max(np.abs(new - val)))
            val = new
            if err <= tol * max(1.0, float(np.max(np.abs(val)))):
                break
        else:
            raise QuadratureError(f"sphere quadrature did not reach {tol:g} "
                                  f"(last difference {err:.3e})", estimate=val)
    return (val, err) if full_output else val


def uv_V(F, L, spec=None):
    """``V(L) = i da1/dL = L^3 int F(L n) dOmega`` on the radius-`L` shell."""
    if L < 1:
        raise DomainError("need L >= 1")
    spec = spec or QuadratureSpec()
    dirs, w = _sphere(spec)
    return np.asarray(_shell(F, float(L), dirs, w), dtype=complex)


# ---------------------------------------------------------------------------
# closed forms


def _gap(q, ell):
    q = _as_momentum(q)
    g = ell - float(q @ q)
    if g <= 0:
        raise DomainError(f"need ell > q^2 = {float(q @ q):g}")
    return q, g


def closed_form_vacpol(L, q, sigma, tau, ell):
    """``(i pi^2/4) d_st (ln(L^2/(ell-q^2)) - 3/2) + (i pi^2/2) q_s q_t/(ell-q^2)``."""
    q, g = _gap(q, ell)
    d = 1.0 if sigma == tau else 0.0
    return (1j * np.pi ** 2 / 4 * d * (math.log(L * L / g) - 1.5)
            + 1j * np.pi ** 2 / 2 * q[sigma - 1] * q[tau - 1] / g)


def closed_form_vertex(L, q, sigma, ell):
    """``i pi^2 q_sigma (ln(L^2/(ell-q^2)) - 3/2)``."""
    q, g = _gap(q, ell)
    return 1j * np.pi ** 2 * q[sigma - 1] * (math.log(L * L / g) - 1.5)


def closed_form_J_logpart(L, q, mu, m):
    """Logarithmic and ``gamma_mu q^ gamma_mu`` terms of ``J_mu``.

    ``(i m pi^2 2 ln L I - (pi^2/2) g q^ g) / (2 pi)^4`` for ``mu = 1..3`` and
    ``-(i m pi^2 2 ln L I + (pi^2/2) g q^ g) / (2 pi)^4`` for ``mu = 4``.
    The ``-1`` and ``ln B(q)`` constants are left out.
    """
    if m <= 0:
        raise DomainError("mass m must be positive")
    g = _G.gamma_mu(mu)
    log = 1j * m * np.pi ** 2 * 2.0 * math.log(L) * np.eye(4)
    gqg = np.pi ** 2 / 2 * g @ slash(q) @ g
    if mu == 4:
        return -(log + gqg) / TWO_PI4
    return (log - gqg) / TWO_PI4


# ---------------------------------------------------------------------------
# log-coefficient extraction


@dataclass
class LogFit:
    phi: np.ndarray
    psi: np.ndarray
    residual: float
    L: np.ndarray

    @property
    def scalar(self):
        return self.phi.shape == (1, 1)


def extract_log_coefficient(samples, poor_fit=0.1):
    """Fit ``i a1(L) = phi ln L + psi`` over the two outermost decades.

    `samples` is a list of ``(L, a1)`` with scalar or matrix `a1`.
    ``phi`` is symmetrized to Hermitian when its asymmetry is below 1e-6.

    Raises
    ------
    PropertyViolation
        If the maximal residual exceeds `poor_fit` times the fitted log
        term at the largest cutoff (with a floor at round-off level).
    """
    if len(samples) < 4:
        raise DomainError("need at least 4 samples")
    Ls = np.array([float(s[0]) for s in samples])
    if Ls.max() / Ls.min() < 10.0 * (1 - 1e-12):
        raise DomainError("samples must span at least one decade of L")
    vals = np.array([np.atleast_2d(np.asarray(s[1], dtype=complex)) for s in samples])
    sel = Ls >= Ls.max() / 100.0 * (1 - 1e-12)
    if sel.sum() < 2:
        raise DomainError("need two samples in the fit window")
    x = np.log(Ls[sel])
    A = np.column_stack([x, np.ones_like(x)])
    y = (1j * vals[sel]).reshape(sel.sum(), -1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    shape = vals.shape[1:]
    phi, psi = coef[0].reshape(shape), coef[1].reshape(shape)
    if np.max(np.abs(phi - phi.conj().T)) < 1e-6:
        phi = (phi + phi.conj().T) / 2
    fit = x[:, None, None] * phi + psi
    residual = float(np.max(np.abs(1j * vals[sel] - fit)))
    log_term = float(np.max(np.abs(phi))) * float(np.max(np.abs(x)))
    floor = 1e-9 * max(1.0, float(np.max(np.abs(vals))))
    if residual > max(poor_fit * log_term, floor):
        raise PropertyViolation(f"poor logarithmic fit: residual {residual:.3e} "
                                f"vs log term {log_term:.3e}")
    return LogFit(phi, psi, residual, Ls[sel])


__all__ = [
    "GammaBasis", "gamma_basis", "slash", "integrand_J", "integrand_vacpol",
    "integrand_vertex", "make_integrand", "QuadratureSpec", "sphere_a1", "sphere_a1_series",
    "uv_V", "closed_form_vacpol", "closed_form_vertex", "closed_form_J_logpart",
    "LogFit", "extract_log_coefficient",
]
