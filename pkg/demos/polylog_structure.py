"""
Polylogarithmic structure of the Dyson terms
============================================

Each successive approximation ``S_p(t, 1)`` is a polynomial of degree ``p``
in ``ln t`` with matrix coefficients, plus a remainder that vanishes as
``t -> inf``.  The coefficients come from a recursion; here they are compared
with brute-force iterated quadrature.
"""

import numpy as np

from logscatter import dyson_terms, eval_expansion, recurse_minus, recurse_plus
from logscatter.dyson import random_model

model = random_model(np.random.default_rng(3), 2)
plus = recurse_plus(model, 3)

for e in plus:
    print(f"p = {e.p}: prefactor {e.prefactor}, remainder decays like t^-{e.delta:.2f}")
    for k, C in enumerate(e.C):
        print(f"   |C[{e.p},{k}]| = {np.linalg.norm(C, 2):.4f}")

# the expansion against iterated quadrature
print("\n t      p   relative error")
for t in (10.0, 100.0, 1e4):
    ref = dyson_terms(model, 3, t, 1.0)[0]
    for e in plus:
        err = np.linalg.norm(eval_expansion(e, t) - ref[e.p], 2) / np.linalg.norm(ref[e.p], 2)
        print(f" {t:<6g} {e.p}   {err:.2e}")

# the leading term dominates slowly: S_p / ln^p t -> (-i)^p B^p / p! at rate 1/ln t
t = 1e8
e3 = plus[2]
ratio = eval_expansion(e3, t) / np.log(t) ** 3
print("\nS_3 / ln^3 t at t = 1e8 vs leading coefficient:",
      f"{np.linalg.norm(ratio - e3.prefactor * e3.leading, 2):.2e}")

# the minus side uses ln|tau| and reversed products
minus = recurse_minus(model, 2)
ref = dyson_terms(model, 2, -1.0, -50.0)[0]
print("minus side p = 2 at tau = -50, absolute error:",
      f"{np.linalg.norm(eval_expansion(minus[1], -50.0) - ref[2], 2):.2e}")
