"""
Logarithmic ultraviolet divergences of one-loop integrals
=========================================================

The regulated first approximation ``a1(L) = -i int_{|p| <= L} F(p) d^4p``
of a logarithmically divergent loop integral grows like ``-i phi ln L``.
The coefficient ``phi`` is the ultraviolet analogue of ``B``; once it is
known, ``W0(L) = exp(i eps phi ln L)`` regularizes the cutoff limit.
"""

import numpy as np

from logscatter import (closed_form_vacpol, extract_log_coefficient, make_integrand,
                        sphere_a1_series)

Ls = 10 ** np.arange(1, 3.01, 0.25)
q0 = np.zeros(4)

###############################################################################
# Vacuum polarization: quadrature against the closed form, then the slope.

F = make_integrand("vacpol", q0, ell=1.0, sigma=1, tau=1)
a1 = sphere_a1_series(F, Ls)
print(" L        i a1(L)        closed form")
for L, a in zip(Ls[::2], a1[::2]):
    print(f" {L:<8.1f} {(1j * a).real:<14.6f} {(-closed_form_vacpol(L, q0, 1, 1, 1.0) * 1j).real:.6f}")
fit = extract_log_coefficient(list(zip(Ls, a1)))
print("phi =", float(np.squeeze(fit.phi).real), " expected pi^2/2 =", np.pi ** 2 / 2)

###############################################################################
# Vertex correction with external momentum q = (1, 0, 0, 0).

q = np.array([1.0, 0.0, 0.0, 0.0])
a1 = sphere_a1_series(make_integrand("vertex", q, ell=2.0, sigma=1), Ls)
phi = float(np.squeeze(extract_log_coefficient(list(zip(Ls, a1))).phi).real)
print("vertex phi / (2 pi^2 q_1) =", round(phi / (2 * np.pi ** 2), 5))

###############################################################################
# The fermion self-energy term: a 4x4 matrix whose log coefficient is
# proportional to the identity.

a1 = sphere_a1_series(make_integrand("J", q0, m=1.0, mu=1), Ls)
phi = extract_log_coefficient(list(zip(Ls, a1))).phi
print("J phi * 8 pi^2 / m:")
print(np.round(phi * 8 * np.pi ** 2, 4).real)
