"""Mesh-free collocation solvers for PDE benchmarks: radial-basis-function
expansions with linear, coupled multi-field, and nonlinear drivers, plus
shape-parameter tuning and inverse parameter recovery."""

from .collocation import (CollocationSet, ConstraintEquation,
                          LinearOperatorSpec, SolutionField, SolveResult,
                          evaluate, kernel_matrix, sample_points,
                          solve_linear, stack_system)
from .coupled import (CoupledEquation, CoupledSystemSpec, PicardResult,
                      solve_coupled, solve_coupled_picard)
from .kernels import (DerivativeOrderError, RbfKernel, deriv_orders,
                      eval_partial, eval_radial, partial_matrix)
from .nonlinear import (DiffMatrixSet, NonlinearResidualSpec,
                        SingularBasisError, StepFailureError, TimeScheme,
                        build_diff_matrix, nlls_minimize, run_time_scheme,
                        solve_fully_nonlinear)
from .tuning import (TuneConfig, TuneEntry, condition_number, default_grid,
                     total_variation, tune_fields, tune_linear,
                     tune_nonlinear)
from .inverse import (CoordinateLineSearch, InverseProblem, NelderMead,
                      NonIdentifiableWarning, check_identifiability, infer,
                      infer_advection_beta, infer_burgers_nu,
                      infer_lotka_volterra, lv_rate_fit)
from .problems import (CflViolationError, ProblemSetup, advection_exact,
                       advection_forward, advection_random_ic,
                       advection_setup, burgers_exact_steady,
                       burgers_fn_forward, burgers_scheme_forward,
                       burgers_setup, fdm_forward, l2_risk,
                       lotka_volterra_setup, lv_forward, lv_invariant,
                       lv_reference, maxwell_exact, maxwell_forward,
                       maxwell_setup, profile_relative_risk,
                       relative_l2_risk, scale_factor)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
