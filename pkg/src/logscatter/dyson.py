"""Perturbation models, successive approximations and the evolution S(t, tau).

A :class:`PerturbationModel` carries ``V(t) = B_+/t + u(t)`` for ``t >= 1``,
``V(t) = B_-/t + u(t)`` for ``t <= -1`` and ``V(t) = u(t)`` in between.
A :class:`ClassicalPair` carries ``V(t) = e^{itA0} A1 e^{-itA0}`` instead.
Both expose the same ``V`` interface, so :func:`solve_S` accepts either.
"""

import math
import warnings

import numpy as np
from scipy.integrate import solve_ivp

from . import _cheb
from .errors import DomainError, NonConvergenceError, QuadratureError
from .linop import PowerFamily, dagger, hermitian, identity

# ---------------------------------------------------------------------------
# u(t) kinds


class ZeroU:
    kind = "zero"

    def __init__(self, dim):
        self.dim = dim

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (self.dim, self.dim), dtype=complex)

    def vanishes_on(self, lo, hi):
        return True

    breakpoints = ()


class InversePowerU:
    """``coef * |t|^{-power}`` for ``|t| >= 1`` and zero for ``|t| < 1``."""

    kind = "inverse_power"

    def __init__(self, coef, power):
        self.coef = hermitian(coef)
        self.power = float(power)
        self.dim = self.coef.shape[0]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        scale = np.where(a >= 1.0, np.maximum(a, 1.0) ** -self.power, 0.0)
        return scale[..., None, None] * self.coef

    def vanishes_on(self, lo, hi):
        return lo >= -1.0 and hi <= 1.0

    breakpoints = (-1.0, 1.0)


class LorentzianU:
    """``coef * (1 + t^2)^{-power/2}``, smooth and bounded on the whole line."""

    kind = "lorentzian"

    def __init__(self, coef, power):
        self.coef = hermitian(coef)
        self.power = float(power)
        self.dim = self.coef.shape[0]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scale = (1.0 + t * t) ** (-0.5 * self.power)
        return scale[..., None, None] * self.coef

    def vanishes_on(self, lo, hi):
        return False

    breakpoints = ()


class TableU:
    """Piecewise-linear interpolation of Hermitian knots; zero outside the knot range."""

    kind = "table"

    def __init__(self, knots):
        knots = sorted(((float(t), hermitian(m)) for t, m in knots), key=lambda k: k[0])
        if len(knots) < 2:
            raise DomainError("table u needs at least two knots")
        self.ts = np.array([k[0] for k in knots])
        self.values = np.array([k[1] for k in knots])
        self.dim = self.values.shape[-1]
        self.breakpoints = tuple(self.ts)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        idx = np.clip(np.searchsorted(self.ts, flat) - 1, 0, len(self.ts) - 2)
        t0, t1 = self.ts[idx], self.ts[idx + 1]
        w = ((flat - t0) / (t1 - t0))[:, None, None]
        out = (1 - w) * self.values[idx] + w * self.values[idx + 1]
        out[(flat < self.ts[0]) | (flat > self.ts[-1])] = 0.0
        return out.reshape(t.shape + (self.dim, self.dim))

    def vanishes_on(self, lo, hi):
        return hi <= self.ts[0] or lo >= self.ts[-1]


class CallableU:
    """Wrap a user function ``u(t) -> (d, d)`` (scalar `t`)."""

    kind = "callable"

    def __init__(self, func, dim, vectorized=False):
        self.func = func
        self.dim = dim
        self.vectorized = vectorized

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.vectorized:
            return np.asarray(self.func(t), dtype=complex)
        flat = [np.asarray(self.func(float(s)), dtype=complex) for s in t.reshape(-1)]
        return np.array(flat).reshape(t.shape + (self.dim, self.dim))

    def vanishes_on(self, lo, hi):
        return False

    breakpoints = ()


# ---------------------------------------------------------------------------
# models


class PerturbationModel:
    """Data ``(B_+, B_-, u, nu, K)`` defining ``V(t)``.

    The decay ``||u(t)|| <= K |t|^{-nu}`` and the hermiticity of `u` are
    spot-checked on a logarithmic grid at construction.
    """

    def __init__(self, B_plus, B_minus, u=None, nu=2.0, K=0.0):
        self.B_plus = hermitian(B_plus)
        self.B_minus = hermitian(B_minus)
        self.dim = self.B_plus.shape[0]
        if self.B_minus.shape != self.B_plus.shape:
            raise DomainError("B_plus and B_minus must have the same dimension")
        if u is None:
            u = ZeroU(self.dim)
        elif callable(u) and not hasattr(u, "vanishes_on"):
            u = CallableU(u, self.dim)
        if u.dim != self.dim:
            raise DomainError("u has the wrong dimension")
        self.u = u
        self.nu = float(nu)
        self.K = float(K)
        if self.nu <= 1.0:
            raise DomainError(f"decay exponent nu must exceed 1, got {nu}")
        if self.K < 0:
            raise DomainError("decay coefficient K must be non-negative")
        self._plus = PowerFamily(self.B_plus)
        self._minus = PowerFamily(self.B_minus)
        self._spot_check()

    def _spot_check(self):
        mags = np.logspace(0.0, 6.0, 25)
        ts = np.concatenate([mags, -mags, np.linspace(-0.99, 0.99, 7)])
        vals = self.u(ts)
        if np.max(np.abs(vals - dagger(vals))) > 1e-10 * max(1.0, np.max(np.abs(vals))):
            raise DomainError("u(t) is not Hermitian on the sample grid")
        norms = np.linalg.norm(vals[:50], 2, axis=(-2, -1))
        bound = self.K * np.abs(ts[:50]) ** -self.nu
        if np.any(norms > bound * (1 + 1e-9) + 1e-300):
            raise DomainError("u(t) violates the declared decay ||u|| <= K |t|^-nu")

    @property
    def breakpoints(self):
        return tuple(sorted({-1.0, 1.0, *self.u.breakpoints}))

    @property
    def decay(self):
        return (self.K, self.nu)

    def V(self, t):
        """``V(t)``; vectorized over array `t`."""
        t = np.asarray(t, dtype=float)
        out = np.array(self.u(t), dtype=complex)
        inv = np.divide(1.0, t, out=np.zeros_like(t), where=np.abs(t) >= 1.0)
        plus = (t >= 1.0)[..., None, None]
        minus = (t <= -1.0)[..., None, None]
        out += np.where(plus, inv[..., None, None] * self.B_plus, 0.0)
        out += np.where(minus, inv[..., None, None] * self.B_minus, 0.0)
        return out

    def W0(self, t, eps):
        """Power-law deviation factor ``t^{i eps B_+}``, ``(-t)^{i eps B_-}``, ``I``."""
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        logt = np.log(np.maximum(a, 1.0))
        out = np.where((t >= 1.0)[..., None, None], self._plus.log_power(logt, eps), 0.0)
        out = out + np.where((t <= -1.0)[..., None, None],
                             self._minus.log_power(logt, eps), 0.0)
        inside = (a < 1.0)[..., None, None]
        return out + np.where(inside, identity(self.dim), 0.0)

    def _exact_segment(self, eps, lo, hi):
        """Closed-form S over a segment where u vanishes, else ``None``."""
        if not self.u.vanishes_on(min(lo, hi), max(lo, hi)):
            return None
        if -1.0 <= lo <= 1.0 and -1.0 <= hi <= 1.0:
            return identity(self.dim)
        if min(lo, hi) >= 1.0:
            fam = self._plus
        elif max(lo, hi) <= -1.0:
            fam = self._minus
        else:
            return None
        return fam.log_power(math.log(abs(hi)) - math.log(abs(lo)), -eps)


class ClassicalPair:
    """Hermitian ``A0, A1``; ``V(t) = e^{itA0} A1 e^{-itA0}``."""

    breakpoints = ()

    def __init__(self, A0, A1):
        self.A0 = hermitian(A0)
        self.A1 = hermitian(A1)
        self.dim = self.A0.shape[0]
        self.evals, self.evecs = np.linalg.eigh(self.A0)
        self._a1 = dagger(self.evecs) @ self.A1 @ self.evecs

    def V(self, t):
        t = np.asarray(t, dtype=float)
        ph = np.exp(1j * t[..., None] * self.evals)
        inner = ph[..., :, None] * self._a1 * np.conj(ph)[..., None, :]
        return self.evecs @ inner @ dagger(self.evecs)

    def _exact_segment(self, eps, lo, hi):
        return None


def eval_V(model, t):
    """Perturbation operator ``V(t)`` of a :class:`PerturbationModel`."""
    return model.V(float(t))


def classical_V(pair, t):
    return pair.V(float(t))


def _expi(A, s):
    w, v = np.linalg.eigh(A)
    return (v * np.exp(1j * s * w)) @ dagger(v)


def classical_S(pair, eps, t, tau):
    """``e^{itA0} e^{-itA} e^{i tau A} e^{-i tau A0}`` with ``A = A0 + eps A1``."""
    A = pair.A0 + eps * pair.A1
    return (_expi(pair.A0, t) @ _expi(A, -t) @ _expi(A, tau) @ _expi(pair.A0, -tau))


# ---------------------------------------------------------------------------
# successive approximations


def _path_panels(a, b, breaks):
    lo, hi = min(a, b), max(a, b)
    cuts = {lo, hi}
    cuts.update(c for c in (-1.0, 0.0, 1.0, *breaks) if lo < c < hi)
    cuts = sorted(cuts)
    panels = []
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if x0 >= 1.0 or x1 <= -1.0:
            s = 1.0 if x0 > 0 else -1.0
            r0, r1 = sorted((abs(x0), abs(x1)))
            m = max(1, math.ceil(math.log2(r1 / r0) - 1e-12))
            rs = r0 * (r1 / r0) ** (np.arange(m + 1) / m)
            rs[0], rs[-1] = r0, r1
            edges = sorted(s * rs)
            panels.extend(zip(edges[:-1], edges[1:]))
        else:
            panels.append((x0, x1))
    if a > b:
        panels = [(x1, x0) for x0, x1 in reversed(panels)]
    return panels


def _inward(x, start, end):
    """Move the panel endpoints one ulp inside so jumps at ``|t| = 1`` are one-sided."""
    x = x.copy()
    x[0] = np.nextafter(start, end)
    x[-1] = np.nextafter(end, start)
    return x


def _dyson_at(model, pmax, t, tau, n):
    """S_0..S_pmax at (t, tau) and ``int ||V||`` along the path."""
    d = model.dim
    terms = [identity(d)] + [np.zeros((d, d), complex) for _ in range(pmax)]
    int_norm = 0.0
    for start, end in _path_panels(tau, t, model.breakpoints):
        x = _cheb.panel_nodes(start, end, n)
        V = model.V(_inward(x, start, end))
        int_norm += abs(0.5 * (end - start)) * float(
            _cheb.weights(n) @ np.linalg.norm(V, 2, axis=(-2, -1)))
        prev = np.broadcast_to(identity(d), (n, d, d))
        new_terms = [terms[0]]
        for p in range(1, pmax + 1):
            integrand = -1j * (V @ prev)
            vals = terms[p] + _cheb.cumulative(integrand, start, end, n)
            new_terms.append(vals[-1])
            prev = vals
        terms = new_terms
    return terms, int_norm


_NODE_LEVELS = (16, 24, 32, 48, 64)


def dyson_terms(model, pmax, t, tau, quad_tol=1e-10):
    """All successive approximations ``S_0 .. S_pmax`` at ``(t, tau)``.

    Each ``S_{p+1}(x, tau) = -i int_tau^x V S_p`` is accumulated panel by
    panel on Chebyshev-Lobatto nodes; the node count is raised until two
    levels agree entrywise within `quad_tol`.

    Returns
    -------
    (list of ndarray, float)
        The terms and ``int_tau^t ||V||``.
    """
    if quad_tol <= 0:
        raise DomainError("quadrature tolerance must be positive")
    prev = None
    for n in _NODE_LEVELS:
        terms, int_norm = _dyson_at(model, pmax, float(t), float(tau), n)
        if prev is not None:
            err = max(float(np.max(np.abs(a - b))) for a, b in zip(terms, prev))
            if err <= quad_tol:
                return terms, int_norm
        prev = terms
    raise QuadratureError(f"iterated quadrature did not reach {quad_tol:g} "
                          f"(last difference {err:.3e})", estimate=terms)


def dyson_term(model, p, t, tau, quad_tol=1e-10):
    """The p-th successive approximation ``S_p(t, tau)``."""
    if p < 1:
        raise DomainError("dyson_term needs p >= 1")
    return dyson_terms(model, p, t, tau, quad_tol)[0][p]


class DysonDivergenceWarning(RuntimeWarning):
    """The series parameter likely exceeds the convergence radius."""


def dyson_sum(model, eps, t, tau, pmax, quad_tol=1e-10):
    """Partial sum ``sum_{p <= pmax} S_p eps^p`` and a truncation estimate.

    The estimate is ``||S_pmax|| |eps|^pmax``.  A
    :class:`DysonDivergenceWarning` is issued when ``|eps| int ||V|| >= 1``.
    """
    if pmax < 1:
        raise DomainError("pmax must be >= 1")
    if eps == 0:
        return identity(model.dim), 0.0
    terms, int_norm = dyson_terms(model, pmax, t, tau, quad_tol)
    if abs(eps) * int_norm >= 1.0:
        warnings.warn(f"|eps| * int ||V|| = {abs(eps) * int_norm:.3g} >= 1; "
                      "the series may diverge", DysonDivergenceWarning, stacklevel=2)
    total = sum(term * eps ** p for p, term in enumerate(terms))
    trunc = float(np.linalg.norm(terms[-1], 2)) * abs(eps) ** pmax
    return total, trunc


# ---------------------------------------------------------------------------
# ODE route


def _ode_segment(model, eps, lo, hi, tol):
    d = model.dim

    inner = sorted((np.nextafter(lo, hi), np.nextafter(hi, lo)))

    def rhs(s, y):
        s = min(max(s, inner[0]), inner[1])
        return (-1j * eps * (model.V(s) @ y.reshape(d, d))).ravel()

    sol = solve_ivp(rhs, (lo, hi), identity(d).ravel(), method="DOP853",
                    rtol=tol, atol=tol)
    if sol.status != 0:
        raise NonConvergenceError(f"ODE solve failed on [{lo}, {hi}]: {sol.message}")
    return sol.y[:, -1].reshape(d, d)


def solve_S(model, eps, t, tau, tol=1e-12):
    """Solve ``dS/dt = -i eps V(t) S``, ``S(tau) = I``, up to time `t`.

    Works for any object with ``V``, ``dim`` and ``breakpoints`` (models and
    classical pairs).  The path is split at the breakpoints of `V`.
    Segments where ``u`` vanishes identically are propagated in closed form.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t, tau = float(t), float(tau)
    S = identity(model.dim)
    if t == tau or eps == 0:
        return S
    lo, hi = min(t, tau), max(t, tau)
    cuts = sorted({lo, hi, *(c for c in model.breakpoints if lo < c < hi)})
    if t < tau:
        cuts = cuts[::-1]
    for a, b in zip(cuts[:-1], cuts[1:]):
        seg = model._exact_segment(eps, a, b)
        if seg is None:
            seg = _ode_segment(model, eps, a, b, tol)
        S = seg @ S
    return S


# ---------------------------------------------------------------------------
# seeded test models


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + dagger(a)) / 2.0


def random_model(rng, dim, nu=2.0, scale=0.5):
    """Model with random ``B_+-`` and a smooth ``u = C (1 + t^2)^{-nu/2}``."""
    Bp, Bm = random_hermitian(rng, dim, scale), random_hermitian(rng, dim, scale)
    C = random_hermitian(rng, dim, scale)
    return PerturbationModel(Bp, Bm, LorentzianU(C, nu), nu=nu,
                             K=float(np.linalg.norm(C, 2)))


def random_pair(rng, dim, scale=1.0):
    return ClassicalPair(random_hermitian(rng, dim, scale), random_hermitian(rng, dim, scale))
