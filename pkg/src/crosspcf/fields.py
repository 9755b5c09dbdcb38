## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Stationary Gaussian random fields on a regular grid, by circulant embedding of the
# covariance on a padded torus, with a dense Cholesky fallback for small grids.
#

import logging
import warnings

import numpy as np
import scipy.linalg

from .types import Window, ScalarField, CorrelationModel
from .errors import ModelValueError, FieldSimulationError, ResolutionWarning

log = logging.getLogger(__name__)

EIGEN_TOLERANCE = 1e-8
CHOLESKY_JITTER = 1e-10
CHOLESKY_MAX_CELLS = 4096
PADDING_FACTORS = (2, 4, 8)


def corr(model: CorrelationModel, r) -> np.ndarray | float:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ModelValueError("Correlation lags must be non-negative.", token='r')
    match model.family:
        case "exponential": value = np.exp(-r / model.scale)
        case "gaussian": value = np.exp(-(r / model.scale) ** 2)
    return float(value) if value.ndim == 0 else value


def _torus_lags(size: int, step: float) -> np.ndarray:
    k = np.arange(size)
    return step * np.minimum(k, size - k)


def _embedding_eigenvalues(model: CorrelationModel, nx, ny, dx, dy, factor):
    mx, my = factor * nx, factor * ny
    lx, ly = _torus_lags(mx, dx), _torus_lags(my, dy)
    base = corr(model, np.hypot(lx[:, None], ly[None, :]))
    return np.real(np.fft.fft2(base))


def _simulate_embedding(eig: np.ndarray, nx: int, ny: int, rng: np.random.Generator) -> np.ndarray:
    m = eig.size
    noise = rng.standard_normal(eig.shape) + 1j * rng.standard_normal(eig.shape)
    sample = np.fft.fft2(np.sqrt(eig / m) * noise)
    return np.real(sample[:nx, :ny])


def _simulate_cholesky(model: CorrelationModel, field: ScalarField, rng: np.random.Generator) -> np.ndarray:
    centers = field.centers()
    lag = np.hypot(*(centers[:, None, :] - centers[None, :, :]).transpose(2, 0, 1))
    cov = corr(model, lag) + CHOLESKY_JITTER * np.eye(len(centers))
    try:
        lower = scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FieldSimulationError(f"Grid covariance for {model.family} scale {model.scale} is not positive "
                                   "definite even after jitter.", context={'cells': len(centers)}) from exc
    return (lower @ rng.standard_normal(len(centers))).reshape(field.values.shape)


def simulate_grf(window: Window, nx: int, ny: int, model: CorrelationModel, rng_seed=None) -> ScalarField:
    """Zero-mean unit-variance stationary Gaussian field sampled at the cell centres of an nx×ny grid."""
    template = ScalarField(window, np.zeros((nx, ny)))
    dx, dy = template.cell_size
    if np.hypot(dx, dy) >= model.scale / 2:
        warnings.warn(f"Grid cell diagonal {np.hypot(dx, dy):.4g} is not below half the {model.family} "
                      f"correlation scale {model.scale:.4g}; the field is under-resolved.", ResolutionWarning, stacklevel=2)

    rng = np.random.default_rng(rng_seed)
    for factor in PADDING_FACTORS:
        eig = _embedding_eigenvalues(model, nx, ny, dx, dy, factor)
        if eig.min() >= -EIGEN_TOLERANCE * eig.max():
            return ScalarField(window, _simulate_embedding(np.clip(eig, 0.0, None), nx, ny, rng))
        log.debug("Circulant embedding with padding %d has eigenvalue %.3g, enlarging.", factor, eig.min())

    if nx * ny > CHOLESKY_MAX_CELLS:
        raise FieldSimulationError(f"Circulant embedding is not non-negative definite for {model.family} scale "
                                   f"{model.scale} and the {nx}×{ny} grid is too large for the Cholesky fallback.")
    log.info("Falling back to dense Cholesky for a %d×%d grid.", nx, ny)
    return ScalarField(window, _simulate_cholesky(model, template, rng))
