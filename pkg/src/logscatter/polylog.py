"""Polylogarithmic structure of the successive approximations.

On the plus side (``t >= 1``) every approximation has the form

    S_p(t, 1) = (-i)^p (B^p ln^p t / p! + sum_{k<p} C_{p,k} ln^k t + Q_p(t))

with constant matrices ``C_{p,k}`` and a remainder ``Q_p(t) -> 0``.  The
minus side (``tau <= -1``, ``S_p(-1, tau)``) has the same shape in
``ln|tau|`` with prefactor ``i^p`` and all products taken in reversed
order.

Both sides are reduced to one recursion in ``y = |t| >= 1``:
``T_{p+1}(y) = int_1^y G T_p`` (plus) or ``int_1^y T_p G`` (minus) with
``G(y) = B/y + w(y)``, where ``w(y) = u(y)`` on the plus side and
``w(y) = -u(-y)`` on the minus side.  Writing
``P_p = B^p ln^p/p! + sum_k C_{p,k} ln^k`` for the polynomial part,

    C_{p+1,k} = B C_{p,k-1} / k                        (k >= 1)
    g_p       = (B/y + w) Q_p + w P_p
    C_{p+1,0} = int_1^inf g_p,   Q_{p+1}(y) = -int_y^inf g_p

(with the factors in the opposite order on the minus side).  The
improper integrals are evaluated in ``x = ln y`` on unit Chebyshev panels,
truncated where the decay bound makes the tail negligible.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import _cheb
from .errors import DomainError, NonConvergenceError, PropertyViolation, QuadratureError
from .linop import identity

TABLE_DECADES = 4
TABLE_PER_DECADE = 128
X_MAX = 700.0


@dataclass
class PolylogExpansion:
    """Order-`p` expansion on one side.

    ``C[k]`` is the coefficient of ``ln^k`` (k = 0..p-1); ``leading`` is
    ``B^p / p!``; the remainder is tabulated as ``Q_table`` at
    ``Q_t = 10^{j/128}``.
    """

    side: str
    p: int
    leading: np.ndarray
    C: list
    Q_t: np.ndarray
    Q_table: np.ndarray
    delta: float = math.nan
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.C) != self.p:
            raise DomainError("an order-p expansion needs exactly p coefficients")
        self._interp = None

    @property
    def prefactor(self):
        return (-1j) ** self.p if self.side == "plus" else (1j) ** self.p

    def remainder(self, y):
        """``Q_p`` at ``y = |t| >= 1``."""
        t_max = self.Q_t[-1]
        if y <= t_max:
            if self._interp is None:
                logs = np.log(self.Q_t)
                flat = self.Q_table.reshape(len(self.Q_t), -1)
                self._interp = (PchipInterpolator(logs, flat.real, axis=0),
                                PchipInterpolator(logs, flat.imag, axis=0))
            re, im = self._interp
            x = math.log(y)
            return (re(x) + 1j * im(x)).reshape(self.leading.shape)
        last = self.Q_table[-1]
        if not np.any(last) or not np.isfinite(self.delta):
            return np.zeros_like(last)
        return last * (t_max / y) ** self.delta


def _powers(L, k):
    return L ** k if k else 1.0


def eval_expansion(e, x):
    """Evaluate the expansion at ``x >= 1`` (plus) or ``x <= -1`` (minus)."""
    if e.side == "plus" and x < 1:
        raise DomainError("plus-side expansion needs x >= 1")
    if e.side == "minus" and x > -1:
        raise DomainError("minus-side expansion needs x <= -1")
    y = abs(float(x))
    L = math.log(y)
    poly = e.leading * L ** e.p
    for k, c in enumerate(e.C):
        poly = poly + c * _powers(L, k)
    return e.prefactor * (poly + e.remainder(y))


def fit_decay(e, flag_only=False):
    """Least-squares decay exponent of ``||Q_p||`` over the outermost decade.

    Returns ``inf`` when the remainder vanishes identically.
    """
    t = e.Q_t
    if t[-1] / t[0] < 99.0:
        raise DomainError("decay fit needs a table spanning two decades")
    sel = t >= t[-1] / 10.0
    norms = np.linalg.norm(e.Q_table[sel], 2, axis=(-2, -1))
    if np.all(norms <= 1e-300):
        return math.inf
    if np.any(norms <= 1e-300):
        raise PropertyViolation("remainder has isolated zeros in the fit window")
    slope = np.polyfit(np.log(t[sel]), np.log(norms), 1)[0]
    delta = -float(slope)
    if delta <= 0 and not flag_only:
        raise PropertyViolation(f"remainder does not decay (fitted exponent {delta:.3g})")
    return delta


def _tail_horizon(bnorm, K, nu, pmax, tol):
    """Smallest unit x with ``M x^p e^{-(nu-1)x} / (nu-1) < tol``."""
    M = (1.0 + bnorm + K) ** (pmax + 1)
    a = nu - 1.0
    x = 4.0
    while x < X_MAX:
        if M * x ** (pmax + 1) * math.exp(-a * x) / a < tol:
            return max(math.ceil(x), 10)
        x += 1.0
    raise NonConvergenceError(
        f"tail of the improper integral int_1^inf g_p does not fall below {tol:g} "
        f"for ln y <= {X_MAX:g} (nu = {nu:g})")


def _x_panels(x_max, breaks):
    cuts = set(float(v) for v in range(int(x_max) + 1))
    cuts.update(b for b in breaks if 0.0 < b < x_max)
    cuts = sorted(cuts)
    return list(zip(cuts[:-1], cuts[1:]))


def _recurse(B, w, breaks, decay, pmax, n, x_max, side):
    """Run the recursion at node count `n`; returns C lists and Q on the table."""
    d = B.shape[0]
    right = side == "minus"
    panels = _x_panels(x_max, breaks)
    xs = np.concatenate([_cheb.panel_nodes(a, b, n) for a, b in panels])
    ys = np.exp(xs)
    W = w(ys)
    G = B[None] / ys[:, None, None] + W
    logs = xs[:, None, None]

    table_x = np.log(10.0) * np.arange(TABLE_DECADES * TABLE_PER_DECADE + 1) / TABLE_PER_DECADE
    where = np.clip(np.searchsorted([b for _, b in panels], table_x), 0, len(panels) - 1)
    interp = []
    for k, (a, b) in enumerate(panels):
        pts = table_x[where == k]
        if pts.size:
            interp.append((k, where == k, _cheb.interp_matrix(n, 2 * (pts - a) / (b - a) - 1)))

    def mul(A, Bm):
        return Bm @ A if right else A @ Bm

    Q = np.zeros((len(xs), d, d), complex)
    P_nodes = np.broadcast_to(identity(d), (len(xs), d, d)).copy()
    coeffs, tables = [], []
    C_prev = []
    Bpow = identity(d)
    for p in range(pmax):
        g = mul(G, Q) + mul(W, P_nodes)
        integrand = g * ys[:, None, None]
        F = np.empty_like(integrand)
        offset = np.zeros((d, d), complex)
        for k, (a, b) in enumerate(panels):
            sl = slice(k * n, (k + 1) * n)
            F[sl] = offset + _cheb.cumulative(integrand[sl], a, b, n)
            offset = F[sl][-1]
        total = offset
        Q = F - total
        C_new = [total] + [mul(B, C_prev[k - 1]) / k for k in range(1, p + 1)]
        Bpow = mul(B, Bpow)
        leading = Bpow / math.factorial(p + 1)
        P_nodes = leading * logs ** (p + 1)
        for k, c in enumerate(C_new):
            P_nodes = P_nodes + c * (logs ** k if k else 1.0)
        Qt = np.empty((len(table_x), d, d), complex)
        for k, mask, M in interp:
            Qt[mask] = np.tensordot(M, Q[k * n:(k + 1) * n], axes=(1, 0))
        coeffs.append((leading, C_new))
        tables.append(Qt)
        C_prev = C_new
    return coeffs, tables, np.exp(table_x)


def _build(model, pmax, quad_tol, side):
    if pmax < 1:
        raise DomainError("pmax must be >= 1")
    if model.nu <= 1:
        raise DomainError("the recursion needs nu > 1")
    if side == "plus":
        B = model.B_plus
        u = model.u

        def w(y):
            return u(y)

        breaks = [math.log(b) for b in model.breakpoints if b > 1.0]
    else:
        B = model.B_minus
        u = model.u

        def w(y):
            return -u(-y)

        breaks = [math.log(-b) for b in model.breakpoints if b < -1.0]
    bnorm = float(np.linalg.norm(B, 2))
    x_max = _tail_horizon(bnorm, model.K, model.nu, pmax, quad_tol / 10.0)
    prev = None
    for n in (16, 24, 32, 48):
        coeffs, tables, table_t = _recurse(B, w, breaks, model.decay, pmax, n, x_max, side)
        if prev is not None:
            err = 0.0
            for (l1, c1), (l0, c0), q1, q0 in zip(coeffs, prev[0], tables, prev[1]):
                err = max(err, max(float(np.max(np.abs(a - b))) for a, b in zip(c1, c0)),
                          float(np.max(np.abs(q1 - q0))))
            if err <= quad_tol:
                break
        prev = (coeffs, tables)
    else:
        raise QuadratureError(f"polylog recursion did not reach {quad_tol:g} "
                              f"(last difference {err:.3e})")
    out = []
    for p, ((leading, C), Qt) in enumerate(zip(coeffs, tables), start=1):
        e = PolylogExpansion(side, p, leading, C, table_t, Qt,
                             metadata={"log_argument": "ln|t|", "x_max": x_max})
        e.delta = fit_decay(e)
        out.append(e)
    return out


def recurse_plus(model, pmax, quad_tol=1e-10):
    """Expansions of ``S_p(t, 1)``, ``t >= 1``, for ``p = 1..pmax``."""
    return _build(model, pmax, quad_tol, "plus")


def recurse_minus(model, pmax, quad_tol=1e-10):
    """Expansions of ``S_p(-1, tau)``, ``tau <= -1``, for ``p = 1..pmax``."""
    return _build(model, pmax, quad_tol, "minus")
