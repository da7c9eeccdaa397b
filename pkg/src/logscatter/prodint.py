"""Left and right multiplicative (product) integrals.

The right integral over ``[a, b]`` is the limit of
``e^{F(t_1) d_1} ... e^{F(t_n) d_n}`` and solves ``Y' = Y F``; the left
integral reverses the factor order and solves ``Y' = F Y``.  Each factor
uses the midpoint value of `F`.  The midpoint exponential product is a
symmetric scheme, so its global error expands in even powers of the step;
successive bisections are combined by Richardson extrapolation and the
refinement stops once two extrapolated values agree to `tol`.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NonConvergenceError, PropertyViolation
from .linop import identity

NORM_BOUND_SLACK = 1e-6


class OperatorFunction:
    """A matrix-valued function of one real variable.

    Parameters
    ----------
    func : callable
        ``func(t)`` returns a ``(dim, dim)`` matrix.  If `vectorized` is
        true, ``func`` also accepts a 1-d array and returns ``(n, dim, dim)``.
    dim : int
    decay : tuple (K, nu), optional
        Asserts ``||F(t)|| <= K |t|^{-nu}`` for ``|t| >= 1``.
    breakpoints : sequence of float
        Points where `F` may jump; grids always contain them.
    """

    def __init__(self, func, dim, vectorized=False, decay=None, breakpoints=()):
        self.func = func
        self.dim = int(dim)
        self.vectorized = vectorized
        self.decay = None if decay is None else (float(decay[0]), float(decay[1]))
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))

    def __call__(self, t):
        if self.vectorized:
            return np.asarray(self.func(np.array([float(t)])), dtype=complex)[0]
        return np.asarray(self.func(float(t)), dtype=complex)

    def many(self, ts):
        ts = np.asarray(ts, dtype=float)
        if self.vectorized:
            out = np.asarray(self.func(ts), dtype=complex)
        else:
            out = np.array([self.func(float(t)) for t in ts], dtype=complex)
        return out.reshape(len(ts), self.dim, self.dim)

    def scaled(self, c):
        """The function ``c * F`` (decay coefficient rescaled accordingly)."""
        decay = None if self.decay is None else (abs(c) * self.decay[0], self.decay[1])
        if self.vectorized:
            return OperatorFunction(lambda t: c * self.func(t), self.dim, True,
                                    decay, self.breakpoints)
        return OperatorFunction(lambda t: c * np.asarray(self.func(t)), self.dim,
                                False, decay, self.breakpoints)


@dataclass(frozen=True)
class GridPolicy:
    """Discretization policy for product integrals.

    ``kind='geometric'`` uses steps of constant ratio `growth` on
    ``|t| >= 1`` and uniform steps of `initial_step` on ``[-1, 1]``;
    ``kind='uniform'`` uses `initial_step` everywhere.
    """

    kind: str = "geometric"
    initial_step: float = 0.05
    growth: float = 1.05
    max_refinements: int = 14

    def __post_init__(self):
        if self.kind not in ("geometric", "uniform"):
            raise DomainError(f"unknown grid kind {self.kind!r}")
        if self.initial_step <= 0 or self.growth < 1 or self.max_refinements < 1:
            raise DomainError("grid parameters must be positive, growth >= 1")
        if self.kind == "geometric" and self.growth == 1:
            raise DomainError("geometric grid needs growth > 1")


@dataclass
class ConvergenceReport:
    converged: bool
    horizon: float
    tail_bound: float
    refinements: int
    trace: list = field(default_factory=list)

    def as_dict(self):
        return {
            "converged": self.converged,
            "horizon": self.horizon,
            "tail_bound": self.tail_bound,
            "refinements": self.refinements,
        }


def _pieces(a, b, grid, breakpoints=()):
    cuts = {a, b}
    for c in (-1.0, 1.0, *breakpoints):
        if a < c < b:
            cuts.add(c)
    cuts = sorted(cuts)
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if grid.kind == "geometric" and (lo >= 1.0 or hi <= -1.0):
            width = abs(math.log(abs(hi)) - math.log(abs(lo)))
            n0 = max(1, math.ceil(width / math.log(grid.growth) - 1e-9))
            pieces.append(("log", lo, hi, n0))
        else:
            n0 = max(1, math.ceil((hi - lo) / grid.initial_step - 1e-9))
            pieces.append(("lin", lo, hi, n0))
    return pieces


def _nodes(pieces, level):
    out = []
    for kind, lo, hi, n0 in pieces:
        n = n0 << level
        if kind == "log":
            s = np.sign(lo)
            x = s * np.exp(np.linspace(math.log(abs(lo)), math.log(abs(hi)), n + 1))
            x[0], x[-1] = lo, hi
        else:
            x = np.linspace(lo, hi, n + 1)
        out.append(x if not out else x[1:])
    return np.concatenate(out)


def ordered_product(mats, side):
    """Product of a stack in time order: ``right`` gives M_1...M_n, ``left`` M_n...M_1."""
    m = np.asarray(mats)
    while m.shape[0] > 1:
        if m.shape[0] % 2:
            m = np.concatenate([m, identity(m.shape[-1])[None]], axis=0)
        first, second = m[0::2], m[1::2]
        m = first @ second if side == "right" else second @ first
    return m[0]


def _raw_product(F, nodes, side):
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    steps = np.diff(nodes)
    vals = F.many(mids)
    factors = scipy.linalg.expm(vals * steps[:, None, None])
    prod = ordered_product(factors, side)
    int_norm = float(np.sum(np.linalg.norm(vals, 2, axis=(-2, -1)) * steps))
    return prod, int_norm


def _check_norm_bound(prod, int_norm):
    bound = math.exp(int_norm) * (1.0 + NORM_BOUND_SLACK)
    nrm = float(np.linalg.norm(prod, 2))
    if nrm > bound:
        raise PropertyViolation(
            f"product integral norm {nrm:.12g} exceeds exp(int ||F||) = {bound:.12g}")


def _prod_integral(F, a, b, side, grid, tol):
    if a > b:
        raise DomainError(f"product integral needs a <= b, got [{a}, {b}]")
    if a == b:
        return identity(F.dim), 0
    grid = grid or GridPolicy()
    pieces = _pieces(float(a), float(b), grid, F.breakpoints)
    raw_prev = extrap_prev = None
    for level in range(grid.max_refinements + 1):
        raw, int_norm = _raw_product(F, _nodes(pieces, level), side)
        _check_norm_bound(raw, int_norm)
        if raw_prev is None:
            raw_prev = raw
            continue
        extrap = raw + (raw - raw_prev) / 3.0
        if np.linalg.norm(raw - raw_prev, 2) == 0.0:
            return raw, level
        if extrap_prev is not None and np.linalg.norm(extrap - extrap_prev, 2) < tol:
            _check_norm_bound(extrap, int_norm)
            return extrap, level
        raw_prev, extrap_prev = raw, extrap
    raise NonConvergenceError(
        f"product integral on [{a}, {b}] did not reach tol={tol:g} "
        f"after {grid.max_refinements} refinements", estimate=extrap_prev)


def prod_integral_right(F, a, b, grid=None, tol=1e-10):
    """Right multiplicative integral of `F` over ``[a, b]`` (solves ``Y' = Y F``)."""
    return _prod_integral(F, a, b, "right", grid, tol)[0]


def prod_integral_left(F, a, b, grid=None, tol=1e-10):
    """Left multiplicative integral of `F` over ``[a, b]`` (solves ``Y' = F Y``)."""
    return _prod_integral(F, a, b, "left", grid, tol)[0]


def tail_bound(decay, horizon):
    """``exp(int_T^inf K |t|^{-nu} dt) - 1``, the multiplicative tail estimate."""
    if decay is None:
        return math.inf
    K, nu = decay
    if nu <= 1:
        return math.inf
    integral = K * abs(horizon) ** (1.0 - nu) / (nu - 1.0)
    return math.expm1(integral)


def _horizons(anchor, sign):
    if sign * anchor >= 1.0:
        h = anchor
        while True:
            h *= 2.0
            yield h
    k = 0
    while True:
        yield anchor + sign * 2.0 ** k
        k += 1


def improper_prod_integral(F, anchor, direction, side, tol=1e-10, grid=None,
                           max_doublings=64, observer=None):
    """Product integral from `anchor` to ``+inf`` or ``-inf``.

    Parameters
    ----------
    direction : {'+inf', '-inf'}
    side : {'left', 'right'}
    observer : callable, optional
        Called as ``observer(T, norm_diff, tail_bound)`` after every
        horizon extension.

    Returns
    -------
    (ndarray, ConvergenceReport)
        The horizon is doubled until two successive extensions change the
        result by less than `tol` (one suffices when the decay hint already
        bounds the remaining tail below `tol`).  The report's tail bound is computed
        from the decay hint of `F` (``inf`` without a hint).
    """
    if direction not in ("+inf", "-inf"):
        raise DomainError(f"direction must be '+inf' or '-inf', got {direction!r}")
    if side not in ("left", "right"):
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    sign = 1.0 if direction == "+inf" else -1.0
    seg_tol = tol / 10.0
    result = identity(F.dim)
    prev_end = float(anchor)
    trace = []
    small = 0
    for k, horizon in enumerate(_horizons(float(anchor), sign)):
        if k >= max_doublings:
            break
        lo, hi = sorted((prev_end, horizon))
        piece = _prod_integral(F, lo, hi, side, grid, seg_tol)[0]
        # left: later (farther toward +inf) factors multiply on the left
        if (side == "left") == (sign > 0):
            new = piece @ result
        else:
            new = result @ piece
        diff = float(np.linalg.norm(new - result, 2))
        bound = tail_bound(F.decay, horizon)
        trace.append((horizon, diff, bound))
        if observer is not None:
            observer(horizon, diff, bound)
        result, prev_end = new, horizon
        small = small + 1 if diff < tol else 0
        if small >= 2 or (diff < tol and bound < tol):
            return result, ConvergenceReport(True, horizon, bound, k + 1, trace)
    report = ConvergenceReport(False, prev_end, tail_bound(F.decay, prev_end),
                               len(trace), trace)
    raise NonConvergenceError(
        f"improper product integral toward {direction} did not converge "
        f"(last horizon {prev_end:g})", estimate=result, report=report)
