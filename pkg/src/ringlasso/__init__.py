"""Multi-task sparse regression: lassoes, group lasso and RING (trace-norm)
lasso solvers with optimality certificates, restricted-eigenvalue
diagnostics, closed-form bound evaluators and a seeded simulation harness."""

from .bounds import (BoundReport, bound_L12merge2, bound_lassoes_theorem1, bound_lassoL1p,
                     bound_persistence, bound_ring)
from .diagnostics import REEstimate, design_constants, re2_constant, re_constant
from .exceptions import (ConfigError, ConvergenceFailure, DatasetFormatError,
                         DegenerateEigenvalueError, DimensionMismatch, IndefiniteInputError,
                         InvalidInputs, NonConvergenceWarning, NonSymmetricError,
                         RingLassoError, SingularRidge, UndefinedMetricError)
from .group import GroupOptions, fit_group, group_kkt_residual, group_objective, lambda_star
from .lassoes import (LassoesOptions, fit_lassoes, lassoes_kkt_residual, lassoes_objective,
                      select_lambda_lassoes)
from .model import (FitReport, MultiTaskDataset, PopTruth, Task, augment, empirical_cov,
                    empirical_risk, lpq_norm, population_risk, sparsity_summary, sup_norm_gap)
from .ring import (RingOptions, RingReport, fit_ring, kkt_residuals, rank_path, ridge_step,
                   ring_objective, score_matrix)
from .simgen import (Metrics, SimConfig, compute_metrics, gen_decay, run_table1,
                     sample_ring_prior)
from .spectra import (Svd, SymSpectrum, eigvalue_directional_derivative, nuclear_norm,
                      numerical_rank, pinv_sqrt, psd_power, svd, sym_eig)

__version__ = "0.1.0"
