## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import logging
from typing import Literal

import numpy as np
import scipy.linalg
from scipy.special import log_softmax

from .types import PointPattern, ScalarField, FirstOrder
from .errors import PatternError, SeparationError, ModelValueError

log = logging.getLogger(__name__)

NORM_CAP = 50.0
MAX_ITERATIONS = 100
STEP_TOLERANCE = 1e-12


def _closed_form(pattern: PointPattern, baseline: int) -> np.ndarray:
    counts = pattern.counts()
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0) + 1
        raise PatternError(f"Type(s) {empty.tolist()} have no points, count ratios are undefined.")
    return np.log(counts / counts[baseline])[:, None]


def _multinomial_newton(pattern: PointPattern, design: np.ndarray, baseline: int) -> np.ndarray:
    """Maximise sum_n log softmax_k(beta_k . x_n)[t_n] with the baseline row pinned at zero."""
    p, width = pattern.n_types, design.shape[1]
    free = [i for i in range(p) if i != baseline]
    onehot = np.eye(p)[pattern.types][:, free]

    def loglik(beta):
        return float(log_softmax(design @ beta.T, axis=1)[np.arange(pattern.n), pattern.types].sum())

    beta = np.zeros((p, width))
    current = loglik(beta)
    for iteration in range(MAX_ITERATIONS):
        prob = np.exp(log_softmax(design @ beta.T, axis=1))[:, free]
        gradient = ((onehot - prob).T @ design).ravel()
        # Information matrix of the free rows, blocks (i, k): sum_n x_n x_n^T (delta_ik pi_i - pi_i pi_k).
        weights = np.einsum('ni,ik->nik', prob, np.eye(len(free))) - np.einsum('ni,nk->nik', prob, prob)
        info = np.einsum('nik,na,nb->iakb', weights, design, design, optimize=True).reshape(len(free) * width, -1)
        try:
            step = scipy.linalg.solve(info, gradient, assume_a='pos')
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SeparationError("Multinomial information matrix is singular; types may be separated "
                                  "by the covariates.") from exc

        scale = 1.0
        while True:
            trial = beta.copy()
            trial[free] += scale * step.reshape(len(free), width)
            if (value := loglik(trial)) >= current or scale < 1e-10:
                break
            scale /= 2
        beta, moved, current = trial, scale * np.abs(step).max(), value

        if np.linalg.norm(beta) > NORM_CAP:
            raise SeparationError(f"First-order contrasts diverged past norm {NORM_CAP}; some type is "
                                  "separated by the covariates or empty.", context={'iteration': iteration})
        if moved < STEP_TOLERANCE:
            break
    log.debug("Multinomial first-order fit took %d Newton iteration(s).", iteration + 1)
    return beta


def estimate_beta(pattern: PointPattern, covariates: tuple[ScalarField, ...] = (), baseline: int | None = None,
                  method: Literal['auto', 'closed', 'newton'] = 'auto') -> FirstOrder:
    """Contrasts beta_i = gamma_i - gamma_baseline of the log-linear type factors; the baseline defaults to the last type."""
    baseline = pattern.n_types - 1 if baseline is None else baseline
    if not 0 <= baseline < pattern.n_types:
        raise ModelValueError(f"Baseline type {baseline} is out of range for p={pattern.n_types}.", token='baseline')
    covariates = tuple(covariates)
    if method == 'auto':
        method = 'newton' if covariates else 'closed'

    if method == 'closed':
        if covariates:
            raise ModelValueError("The closed-form count ratio only applies without covariates.", token='method')
        beta = _closed_form(pattern, baseline)
    else:
        design = FirstOrder(np.zeros((pattern.n_types, 1 + len(covariates))), covariates).design(pattern.xy)
        beta = _multinomial_newton(pattern, design, baseline)
    beta[baseline] = 0.0
    return FirstOrder(beta, covariates, baseline)
