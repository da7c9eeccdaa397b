"""Chebyshev-Lobatto panels with spectral cumulative integration."""

import functools

import numpy as np
from numpy.polynomial import chebyshev as C


@functools.lru_cache(maxsize=None)
def lobatto(n):
    """Ascending Chebyshev-Lobatto nodes on [-1, 1] and the matrix mapping
    node values of f to node values of ``int_{-1}^x f``."""
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    vander = C.chebvander(x, n - 1)
    integ = np.column_stack([C.chebint(np.eye(n)[k], lbnd=-1) for k in range(n)])
    cum = C.chebvander(x, n) @ integ @ np.linalg.inv(vander)
    cum[0] = 0.0
    return x, cum


def panel_nodes(lo, hi, n):
    x, _ = lobatto(n)
    return lo + (hi - lo) * (x + 1.0) / 2.0


def cumulative(values, lo, hi, n):
    """Node values of ``int_lo^x f`` given `values` of shape (n, ...).

    `hi` may be smaller than `lo`; the orientation is respected.
    """
    _, cum = lobatto(n)
    return 0.5 * (hi - lo) * np.tensordot(cum, values, axes=(1, 0))


def weights(n):
    """Clenshaw-Curtis weights on [-1, 1] for the Lobatto nodes."""
    _, cum = lobatto(n)
    return cum[-1].copy()


def interp_matrix(n, xs):
    """Matrix mapping Lobatto node values to values at `xs` (in [-1, 1])."""
    x, _ = lobatto(n)
    return C.chebvander(np.asarray(xs, dtype=float), n - 1) @ np.linalg.inv(
        C.chebvander(x, n - 1))
