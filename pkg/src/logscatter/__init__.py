"""Scattering operators for logarithmically divergent perturbations.

Successive approximations, their polylogarithmic structure, deviation
factors and regularized multiplicative-integral limits, plus the
ultraviolet loop-integral examples.
"""

from .errors import (DomainError, LogScatterError, MatrixRangeError, NonConvergenceError,
                     PropertyViolation, QuadratureError)
from .linop import matrix_exp, unitary_power
from .prodint import (ConvergenceReport, GridPolicy, OperatorFunction,
                      improper_prod_integral, prod_integral_left, prod_integral_right)
from .dyson import (ClassicalPair, InversePowerU, LorentzianU, PerturbationModel, TableU,
                    ZeroU, classical_S, dyson_sum, dyson_term, dyson_terms, solve_S)
from .feynman import (QuadratureSpec, closed_form_J_logpart, closed_form_vacpol,
                      closed_form_vertex, extract_log_coefficient, make_integrand,
                      sphere_a1, sphere_a1_series, uv_V)
from .polylog import PolylogExpansion, eval_expansion, recurse_minus, recurse_plus
from .regularize import (CatalogFactor, PowerLawFactor, ScatteringResult, UVPowerFactor,
                         catalog_W0, check_deviation_axioms, factorized_S, limit_S,
                         regularized_S, scatter_state, scatter_states, uv_limit, uv_regularized_S)

__version__ = "0.1.0"
