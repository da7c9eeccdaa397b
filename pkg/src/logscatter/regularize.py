"""Deviation factors and the regularized evolution ``S^R``.

``S^R(t, tau) = W0(t) S(t, tau) W0(tau)^{-1}`` solves
``dS^R/dt = -i eps U(t) S^R`` with ``U = W0 u W0^{-1}``, so it is a left
multiplicative integral of ``-i eps U``.  Since ``||U|| = ||u||`` decays
faster than ``1/|t|``, that integral converges as ``t -> +inf`` and
``tau -> -inf`` even though ``S`` itself does not.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dyson import PerturbationModel, solve_S
from .errors import DomainError
from .linop import PowerFamily, dagger, hermitian, identity, unitarity_defect
from .prodint import (ConvergenceReport, OperatorFunction, improper_prod_integral,
                      prod_integral_left)

# ---------------------------------------------------------------------------
# deviation factors


class PowerLawFactor:
    """``W0(t) = t^{i eps B_+}`` (t >= 1), ``(-t)^{i eps B_-}`` (t <= -1), ``I`` otherwise."""

    kind = "power_law"

    def __init__(self, B_plus, B_minus):
        self.B_plus = hermitian(B_plus)
        self.B_minus = hermitian(B_minus)
        self.dim = self.B_plus.shape[0]
        self._plus = PowerFamily(self.B_plus)
        self._minus = PowerFamily(self.B_minus)

    @classmethod
    def from_model(cls, model):
        return cls(model.B_plus, model.B_minus)

    def __call__(self, t, eps):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        logt = np.log(np.maximum(a, 1.0))
        out = np.where((t >= 1.0)[..., None, None], self._plus.log_power(logt, eps), 0.0)
        out = out + np.where((t <= -1.0)[..., None, None],
                             self._minus.log_power(logt, eps), 0.0)
        return out + np.where((a < 1.0)[..., None, None], identity(self.dim), 0.0)

    def spectrum(self, t, eps):
        """``(basis key, angles)`` of ``W0(t)`` in the eigenbasis of ``B_+`` or ``B_-``."""
        if abs(t) < 1.0:
            return None
        fam = self._plus if t > 0 else self._minus
        return ("plus" if t > 0 else "minus", eps * math.log(abs(t)) * fam.evals)


class UVPowerFactor:
    """``W0(L) = L^{i eps phi} e^{i eps psi}`` for the cutoff variable ``L > 0``."""

    kind = "uv_power"

    def __init__(self, phi, psi=None):
        self.phi = hermitian(phi)
        self.dim = self.phi.shape[0]
        self.psi = hermitian(np.zeros((self.dim, self.dim)) if psi is None else psi)
        self._phi = PowerFamily(self.phi)
        self._psi = PowerFamily(self.psi)

    def __call__(self, L, eps):
        L = np.asarray(L, dtype=float)
        if np.any(L <= 0):
            raise DomainError("the ultraviolet factor needs L > 0")
        return self._phi.log_power(np.log(L), eps) @ self._psi.log_power(1.0, eps)

    def spectrum(self, L, eps):
        return None


CATALOG = ("schrodinger_coulomb", "dirac_coulomb", "friedrichs", "line_potential")


def _spectral(name, samples, params, eps):
    lam = np.asarray(samples, dtype=float)
    z = float(params.get("z", 1.0))
    if name == "schrodinger_coulomb":
        if np.any(lam <= 0):
            raise DomainError("schrodinger_coulomb needs positive spectral samples")
        return z * lam ** -0.5, True
    if name == "dirac_coulomb":
        m = float(params["m"])
        if m <= 0:
            raise DomainError("dirac_coulomb needs m > 0")
        if np.any(lam * lam <= m * m):
            raise DomainError("dirac_coulomb needs samples with lambda^2 > m^2")
        if z == 0:
            raise DomainError("dirac_coulomb needs z != 0")
        if "k" in params and abs(float(params["k"])) <= abs(eps * z):
            raise DomainError("dirac_coulomb needs |k| > eps |z|")
        return z * lam / np.sqrt(lam * lam - m * m), True
    if name == "friedrichs":
        if np.any(lam < 0):
            raise DomainError("friedrichs jump function P must be non-negative")
        return lam, False
    if name == "line_potential":
        if np.any(lam == 0):
            raise DomainError("line_potential needs nonzero momenta")
        return z / lam, False
    raise DomainError(f"unknown catalog factor {name!r}; expected one of {CATALOG}")


def catalog_W0(name, params, samples, t, eps):
    """Diagonal deviation factor of a classical model on a spectral grid.

    Entries are ``exp(i s eps f(lambda) ln|t|)`` with ``s = sgn(t)`` for
    the Coulomb problems and ``s = 1`` for the Friedrichs and line models,
    where `f` is (with charge `z` from `params`)

    ==================== ===============================
    schrodinger_coulomb  ``z / sqrt(lambda)``
    dirac_coulomb        ``z lambda / sqrt(lambda^2 - m^2)``
    friedrichs           ``P(x)`` sample
    line_potential       ``z / k``
    ==================== ===============================
    """
    if t == 0:
        raise DomainError("catalog factors are undefined at t = 0")
    f, signed = _spectral(name, samples, params, eps)
    s = math.copysign(1.0, t) if signed else 1.0
    return np.diag(np.exp(1j * s * eps * f * math.log(abs(t))))


class CatalogFactor:
    kind = "catalog"

    def __init__(self, name, samples, params=None):
        self.name = name
        self.samples = np.asarray(samples, dtype=float)
        self.params = dict(params or {})
        self.dim = len(self.samples)
        _spectral(name, self.samples, self.params, 0.0)

    def __call__(self, t, eps):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return catalog_W0(self.name, self.params, self.samples, float(t), eps)
        return np.array([catalog_W0(self.name, self.params, self.samples, float(s), eps)
                         for s in t])

    def spectrum(self, t, eps):
        if t == 0:
            raise DomainError("catalog factors are undefined at t = 0")
        f, signed = _spectral(self.name, self.samples, self.params, eps)
        s = math.copysign(1.0, t) if signed else 1.0
        return "diagonal", s * eps * f * math.log(abs(t))


def eval_W0(df, t, eps):
    return df(float(t), eps)


# ---------------------------------------------------------------------------
# regularized evolution


def build_U(model, df, eps):
    """``U(t) = W0(t) u(t) W0(t)^{-1}`` as a vectorized :class:`OperatorFunction`."""
    if df.dim != model.dim:
        raise DomainError(f"deviation factor has dim {df.dim}, model has {model.dim}")
    if isinstance(df, PowerLawFactor) and not (
            np.allclose(df.B_plus, model.B_plus) and np.allclose(df.B_minus, model.B_minus)):
        raise DomainError("power-law factor does not match the model's B_+ / B_-")

    def U(t):
        W = df(t, eps)
        return W @ model.u(t) @ dagger(W)

    return OperatorFunction(U, model.dim, vectorized=True, decay=model.decay,
                            breakpoints=model.breakpoints)


def _generator(model, df, eps):
    return build_U(model, df, eps).scaled(-1j * eps)


def _sr(F, a, b, tol, grid=None):
    """``S^R(a, b)`` for arbitrary order of the endpoints."""
    if a >= b:
        return prod_integral_left(F, b, a, grid, tol)
    return dagger(prod_integral_left(F, a, b, grid, tol))


def regularized_S(model, df, eps, t, tau, tol=1e-10, method="prodint", grid=None):
    """``S^R(t, tau)`` for ``t >= 0 >= tau``.

    ``method='prodint'`` forms ``S^R(t, 0) S^R(0, tau)`` from left
    multiplicative integrals of ``-i eps U``; ``method='conjugation'``
    forms ``W0(t) S(t, tau) W0(tau)^{-1}`` from the ODE solution of ``S``.
    """
    if not t >= 0 >= tau:
        raise DomainError(f"regularized_S needs t >= 0 >= tau, got t={t}, tau={tau}")
    if method == "conjugation":
        S = solve_S(model, eps, t, tau, tol=min(tol, 1e-12))
        return df(t, eps) @ S @ dagger(df(tau, eps))
    if method != "prodint":
        raise DomainError(f"unknown method {method!r}")
    F = _generator(model, df, eps)
    return _sr(F, t, 0.0, tol, grid) @ _sr(F, 0.0, tau, tol, grid)


def factorized_S(model, df, eps, t, tau, tol=1e-10, grid=None):
    """``S^R(t, tau)`` as ``S^R(t,1) S^R(1,0) S^R(0,-1) S^R(-1,tau)``.

    Returns the product and the four factors (left to right).
    """
    if t < 1 or tau > -1:
        raise DomainError("factorized_S needs t >= 1 and tau <= -1")
    F = _generator(model, df, eps)
    factors = (_sr(F, t, 1.0, tol, grid), _sr(F, 1.0, 0.0, tol, grid),
               _sr(F, 0.0, -1.0, tol, grid), _sr(F, -1.0, tau, tol, grid))
    return factors[0] @ factors[1] @ factors[2] @ factors[3], factors


@dataclass
class ScatteringResult:
    """A converged ``S^R`` limit with its factors and convergence diagnostics."""

    S_limit: np.ndarray
    report: ConvergenceReport
    factors: tuple
    side_reports: dict = field(default_factory=dict)

    def as_dict(self):
        out = {"report": self.report.as_dict(),
               "unitarity_defect": unitarity_defect(self.S_limit)}
        out["sides"] = {k: r.as_dict() for k, r in self.side_reports.items()}
        return out


def _merge(reports):
    return ConvergenceReport(
        converged=all(r.converged for r in reports),
        horizon=max(abs(r.horizon) for r in reports),
        tail_bound=max(r.tail_bound for r in reports),
        refinements=sum(r.refinements for r in reports),
        trace=[row for r in reports for row in r.trace],
    )


def limit_S(model, df, eps, tol=1e-10, grid=None, observer=None):
    """The norm limit ``S^R(+inf, -inf)``.

    The outer factors are improper left integrals of ``-i eps U`` from
    ``+1`` toward ``+inf`` and from ``-1`` toward ``-inf``; the inner
    factors ``S^R(1,0)``, ``S^R(0,-1)`` are finite integrals.
    """
    F = _generator(model, df, eps)
    plus, rep_plus = improper_prod_integral(F, 1.0, "+inf", "left", tol, grid,
                                            observer=observer)
    minus, rep_minus = improper_prod_integral(F, -1.0, "-inf", "left", tol, grid,
                                              observer=observer)
    factors = (plus, _sr(F, 1.0, 0.0, tol, grid), _sr(F, 0.0, -1.0, tol, grid), minus)
    S = factors[0] @ factors[1] @ factors[2] @ factors[3]
    return ScatteringResult(S, _merge([rep_plus, rep_minus]), factors,
                            {"plus": rep_plus, "minus": rep_minus})


def _uv_generator(phi, u, eps, decay, vectorized):
    fam = PowerFamily(phi)
    dim = fam.dim

    def U(L):
        L = np.asarray(L, dtype=float)
        W = fam.log_power(np.log(L), eps)
        if vectorized:
            uu = np.asarray(u(L), dtype=complex)
        else:
            uu = np.array([np.asarray(u(float(s)), dtype=complex).reshape(dim, dim)
                           for s in L])
        return -1j * eps * (W @ uu @ dagger(W))

    decay = None if decay is None else (abs(eps) * decay[0], decay[1])
    return OperatorFunction(U, dim, vectorized=True, decay=decay)


def uv_regularized_S(phi, u, eps, L, tol=1e-10, decay=None, vectorized=False, grid=None):
    """Ultraviolet ``S^R(L) = W0(L) S(L)`` with ``W0 = L^{i eps phi}``, ``L >= 1``.

    `u` maps the cutoff ``L`` to a Hermitian matrix.
    """
    if L < 1:
        raise DomainError("the cutoff L must be >= 1")
    F = _uv_generator(np.atleast_2d(phi), u, eps, decay, vectorized)
    return prod_integral_left(F, 1.0, float(L), grid, tol)


def uv_limit(phi, u, eps, tol=1e-10, decay=None, vectorized=False, grid=None,
             observer=None):
    """``S^R(+inf)`` as an improper left integral from ``L = 1``."""
    F = _uv_generator(np.atleast_2d(phi), u, eps, decay, vectorized)
    S, rep = improper_prod_integral(F, 1.0, "+inf", "left", tol, grid, observer=observer)
    return ScatteringResult(S, rep, (S,), {"plus": rep})


# ---------------------------------------------------------------------------
# verification harnesses


@dataclass
class AxiomReport:
    unitarity: float
    ratio: dict
    ratio_rates: dict
    commutator: float
    passed: dict
    commutator_dense: float = math.nan

    @property
    def ok(self):
        return all(self.passed.values())


def _decay_rate(ts, vals):
    vals = np.asarray(vals)
    if np.all(vals <= 1e-15):
        return math.inf
    keep = vals > 1e-15
    return -float(np.polyfit(np.log(np.abs(ts[keep])), np.log(vals[keep]), 1)[0])


def _commutator(df, W1, W2, t1, t2, eps):
    """``||W1 W2 - W2 W1||``, in the common eigenbasis when the factor exposes one.

    There both products are diagonal with phase angles ``a1 + a2`` and
    ``a2 + a1``.  Returns ``(commutator, dense commutator)``.
    """
    dense = float(np.linalg.norm(W1 @ W2 - W2 @ W1, 2))
    spec = getattr(df, "spectrum", None)
    s1 = spec(t1, eps) if spec else None
    s2 = spec(t2, eps) if spec else None
    if s1 is not None and s2 is not None and s1[0] == s2[0]:
        a1, a2 = s1[1], s2[1]
        return float(np.max(np.abs(np.exp(1j * (a1 + a2)) - np.exp(1j * (a2 + a1))))), dense
    return dense, dense


def check_deviation_axioms(df, eps, t_grid, tau_grid, unitary_tol=1e-10,
                           commutator_tol=1e-12, rate_factor=2.0):
    """Check unitarity, ``W0(t+tau) W0(t)^{-1} -> I`` and commutation on grids.

    Commutators of factors sharing an eigenbasis (same side of a
    power law, diagonal catalog factors) are formed from their phases in that
    basis.  The decay toward the identity is fitted as ``|t|^{-rate}`` for
    ``t -> +inf`` and ``t -> -inf`` at each `tau`; it passes when the rate
    lies in ``[1/rate_factor, rate_factor]`` (or the deviation is exactly
    zero).  Grid values should satisfy ``|t| > |tau| + 1``.
    """
    ts = np.asarray(t_grid, dtype=float)
    I = identity(df.dim)
    unit = comm = comm_dense = 0.0
    ratio, rates = {}, {}
    for sign in (1.0, -1.0):
        for tau in tau_grid:
            vals = []
            for t in sign * ts:
                W1, W2 = df(t, eps), df(t + tau, eps)
                unit = max(unit, float(np.linalg.norm(dagger(W1) @ W1 - I, 2)),
                           float(np.linalg.norm(dagger(W2) @ W2 - I, 2)))
                c, cd = _commutator(df, W1, W2, t, t + tau, eps)
                comm, comm_dense = max(comm, c), max(comm_dense, cd)
                vals.append(float(np.linalg.norm(W2 @ dagger(W1) - I, 2)))
            key = (sign, float(tau))
            ratio[key] = vals
            rates[key] = _decay_rate(ts, vals)
    rate_ok = all(math.isinf(r) or 1.0 / rate_factor <= r <= rate_factor
                  for r in rates.values())
    passed = {"unitarity": unit <= unitary_tol, "ratio_decay": rate_ok,
              "commutation": comm <= commutator_tol and comm_dense <= commutator_tol}
    return AxiomReport(unit, ratio, rates, comm, passed, comm_dense)


def scatter_states(model, df, eps, psi0, horizons, tol=1e-10, grid=None):
    """Asymptotic states and residuals at several horizons.

    ``phi_+ = S^R(+inf, 0) psi0`` and ``phi_- = S^R(0, -inf)^* psi0`` come
    from the limits; at horizon ``T`` the free-frame states are
    ``psi_+(T) = W0(T)^{-1} phi_+`` and ``psi_-(-T) = W0(-T)^{-1} phi_-`` and
    the residual is ``||psi_+(T) - S(T, -T) psi_-(-T)||`` with the
    unregularized ``S``.

    Returns a list of ``(psi_plus, psi_minus, residual)``.
    """
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise DomainError("psi0 must be a unit vector")
    res = limit_S(model, df, eps, tol, grid)
    outer_p, inner_p, inner_m, outer_m = res.factors
    phi_plus = outer_p @ inner_p @ psi0
    phi_minus = dagger(inner_m @ outer_m) @ psi0
    out = []
    for T in horizons:
        if T < 1:
            raise DomainError("horizon must be >= 1")
        psi_p = dagger(df(T, eps)) @ phi_plus
        psi_m = dagger(df(-T, eps)) @ phi_minus
        S = solve_S(model, eps, T, -T, tol=min(tol, 1e-12))
        out.append((psi_p, psi_m, float(np.linalg.norm(psi_p - S @ psi_m))))
    return out


def scatter_state(model, df, eps, psi0, T, tol=1e-10, grid=None):
    """``(psi_plus(T), psi_minus(-T), residual)``; see :func:`scatter_states`."""
    return scatter_states(model, df, eps, psi0, [T], tol, grid)[0]


__all__ = [
    "PowerLawFactor", "UVPowerFactor", "CatalogFactor", "CATALOG", "catalog_W0", "eval_W0",
    "build_U", "regularized_S", "factorized_S", "ScatteringResult", "limit_S",
    "uv_regularized_S", "uv_limit", "AxiomReport", "check_deviation_axioms",
    "scatter_state", "scatter_states", "PerturbationModel",
]
