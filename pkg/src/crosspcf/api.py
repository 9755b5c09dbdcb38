## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

from .types import (Window, UNIT_SQUARE, PointPattern, ScalarField, PairIndex, CorrelationModel, Theta, FirstOrder,
                    SimulationSpec, OptimizerConfig, FitResult)
from .errors import *
from .geometry import enumerate_pairs, kfold_split
from .fields import corr, simulate_grf
from .model import (cross_pcf, pcf_curves, pcf_ratio, conditional_probs, simulate_intensities, simulate_mlgcp,
                    lognormal_background)
from .likelihood import LikelihoodContext, neg_log_cl, score, estimated_hessian
from .optimizer import build_constraint_matrices, soft_threshold, block_update, fit, fit_lasso
from .firstorder import estimate_beta
from .selection import cv_score, select_q, select_lambda, select_q_lambda
from .nonparametric import (kernel_intensity, estimate_rho0, select_bandwidth, diggle_rho0_minus_i, nonparam_pcf,
                            pcf_ratio_nonparam, mise)
from .envelope import envelope_test
from .config import parse_config, load_config
from .study import scenario_from_config, run_replicate, run_bench


def load_scenario(path, seed: int | None = None):
    """Scenario from a config file, with `seed` overriding the file's own."""
    config = load_config(path)
    with open(path, encoding='utf-8') as f:
        return scenario_from_config(config, seed, f.read())
