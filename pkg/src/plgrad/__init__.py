"""Low-variance gradient estimators for the Plackett-Luce distribution."""

from .control_variate import ControlVariateParams, cv_eval_rebar, cv_eval_relax, cv_init
from .estimators import (EstimatorOutput, NoiseSeeds, exact_grad, exact_objective,
                         rebar_grad, reinforce_grad, relax_grad, variance_diag)
from .objectives import BlackBoxObjective, MatrixObjective
from .plackett_luce import (enumerate_distribution, grad_log_prob, log_prob, mode, normalize,
                            sample, sample_conditional)
from .relaxed_sort import hard_permutation_matrix, relaxed_permutation_matrix
from .varopt import TrainConfig, adam_step, train

__version__ = "0.1.0"
