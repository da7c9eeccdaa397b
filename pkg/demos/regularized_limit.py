"""
Regularizing a logarithmically divergent scattering operator
============================================================

A perturbation ``V(t) = B/t + u(t)`` makes the ordinary scattering operator
``S(t, tau)`` oscillate forever: its phase grows like ``B ln t``.  Conjugating
by the deviation factor ``W0(t) = exp(i eps B ln|t|)`` removes the divergent
part, and ``S^R(t, tau) = W0(t) S(t, tau) W0(tau)^{-1}`` converges.

Run with ``python demos/regularized_limit.py``.
"""

import numpy as np

from logscatter import (InversePowerU, PerturbationModel, PowerLawFactor, limit_S,
                        regularized_S, scatter_states, solve_S)
from logscatter.dyson import random_model

eps = 0.8

###############################################################################
# A scalar model first, where everything is explicit.  With ``u = c/t^2`` the
# regularized limit is ``exp(-2 i eps c)``.

c = 0.7
scalar = PerturbationModel([[0.3]], [[-0.5]], InversePowerU([[c]], 2), nu=2, K=c)
df = PowerLawFactor.from_model(scalar)

print("T        |S(T,-T)-S(2T,-2T)|   |S^R(T,-T)-S^R(2T,-2T)|")
for T in (10.0, 100.0, 1000.0):
    raw = abs(solve_S(scalar, eps, T, -T)[0, 0] - solve_S(scalar, eps, 2 * T, -2 * T)[0, 0])
    reg = abs(regularized_S(scalar, df, eps, T, -T)[0, 0]
              - regularized_S(scalar, df, eps, 2 * T, -2 * T)[0, 0])
    print(f"{T:<8g} {raw:<21.3e} {reg:.3e}")

res = limit_S(scalar, df, eps)
print("limit:", res.S_limit[0, 0], " closed form:", np.exp(-2j * eps * c))
print("horizon reached:", res.report.horizon, " tail bound:", f"{res.report.tail_bound:.1e}")

###############################################################################
# A non-commuting 2x2 model.  The differences between doubled horizons fall
# like ``T^{-(nu-1)}``.

rng = np.random.default_rng(7)
model = random_model(rng, 2, nu=2.0)
df = PowerLawFactor.from_model(model)
Ts = np.array([1e2, 1e3, 1e4])
d = [np.linalg.norm(regularized_S(model, df, eps, T, -T)
                    - regularized_S(model, df, eps, 2 * T, -2 * T), 2) for T in Ts]
print("\ndoubling differences:", np.array2string(np.array(d), precision=3))
print("fitted slope:", round(np.polyfit(np.log(Ts), np.log(d), 1)[0], 3))

###############################################################################
# The limit also yields asymptotic states.  Their mismatch with the true
# evolution at horizon ``T`` shrinks as ``T`` grows.

psi0 = np.array([1.0, 1.0j]) / np.sqrt(2)
for T, (_, _, r) in zip((10.0, 100.0, 1000.0),
                        scatter_states(model, df, eps, psi0, [10.0, 100.0, 1000.0])):
    print(f"residual at T={T:g}: {r:.3e}")
