"""spinmagnus: quantum spin dynamics with exponential propagators.

Simulates n-spin systems evolving under the commutator equation
drho/dt = -i [H(t), rho] in vectorized (Liouville) form, with one- and
two-term exponential propagators specialized to chirped-pulse Hamiltonians,
a set of baseline ODE steppers, and a matrix-exponential toolkit
(Taylor, diagonal Pade with scaling and squaring, Lanczos/Krylov action).
"""

from .errors import (ConfigError, ExpmError, QuadratureError, SpinMagnusError,
                     StepFailureError)
from .spinalg import (KroneckerTermList, PauliLabel, assemble_term_list, commutator,
                      devectorize, embed_pair, embed_single, kron, liouvillian, pauli,
                      vectorize)
from .quadrature import QuadratureRule, double_antisym, double_cross, integrate
from .hamiltonian import (ChirpedPulseParams, SpinCoefficients, SpinSystem,
                          coefficient_integrals, constant_spin, hamiltonian_at,
                          hocp_coefficients, hocp_spin, single_spin_system,
                          spin_from_json)
from .expm import (LanczosFactorization, PadeParams, krylov_error_bound,
                   krylov_expm_action, lanczos, pade_expm, pade_expm_auto,
                   pade_select_params, taylor_expm, taylor_remainder_bound)
from .solvers import (MagnusStepTerms, TimeGrid, Trajectory, magnus_omega1,
                      magnus_omega2, magnus_step_terms, propagate, step_euler_explicit,
                      step_euler_implicit, step_rk4, step_trapezoidal)
from .observables import (ObservableSpec, bloch_components, bloch_series,
                          frobenius_inner, normalized_component, observable_series)
from .bench import (ConvergenceReport, RunConfig, fit_slope, load_config,
                    run_convergence, run_krylov_bound_check)

__version__ = "0.1.0"
