## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import logging

import numpy as np
from scipy.special import softmax

from .types import Theta, FirstOrder, ScalarField, SimulationSpec, PointPattern, Window, CorrelationModel, CorrelationFamily
from .fields import simulate_grf
from .errors import ModelValueError

log = logging.getLogger(__name__)


def _check_types(theta: Theta, *indices):
    for i in indices:
        if not 0 <= i < theta.p:
            raise ModelValueError(f"Type index {i} is out of range for p={theta.p}.", token=str(i))


def _decay(scaled: np.ndarray, family: CorrelationFamily) -> np.ndarray:
    match family:
        case "exponential": return np.exp(-scaled)
        case "gaussian": return np.exp(-scaled ** 2)
    raise ModelValueError(f"Unknown correlation family `{family}`.", token=family)


def log_pcf(theta: Theta, r, family: CorrelationFamily = "exponential") -> np.ndarray:
    """Tensor of log g_ij(r) with shape (p, p, *r.shape).

    The fitted model is exponential; `family` gives the curves of fields simulated with another family.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ModelValueError("PCF lags must be non-negative.", token='r')
    common = _decay(r[..., None] / theta.xi, family)                   # (..., q)
    specific = _decay(r[..., None] / theta.phi, family) * theta.sigma2  # (..., p)
    out = np.einsum('ik,jk,...k->ij...', theta.alpha, theta.alpha, common)
    p = theta.p
    out[np.arange(p), np.arange(p)] += np.moveaxis(specific, -1, 0)
    return out


def cross_pcf(theta: Theta, i: int, j: int, r):
    """g_ij(r) = exp(sum_k a_ik a_jk exp(-r/xi_k) + [i=j] sigma2_i exp(-r/phi_i))."""
    _check_types(theta, i, j)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ModelValueError("PCF lags must be non-negative.", token='r')
    exponent = np.exp(-r[..., None] / theta.xi) @ (theta.alpha[i] * theta.alpha[j])
    if i == j:
        exponent = exponent + theta.sigma2[i] * np.exp(-r / theta.phi[i])
    value = np.exp(exponent)
    return float(value) if value.ndim == 0 else value


def pcf_curves(theta: Theta, r, family: CorrelationFamily = "exponential") -> np.ndarray:
    return np.exp(log_pcf(theta, r, family))


def pcf_ratio(theta: Theta, numerator: tuple[int, int], denominator: tuple[int, int], r) -> np.ndarray:
    """Model ratio g_ij(r) / g_lk(r), the quantity the non-parametric ratio estimator targets."""
    (i, j), (l, k) = numerator, denominator
    _check_types(theta, i, j, l, k)
    curves = log_pcf(theta, r)
    return np.exp(curves[i, j] - curves[l, k])


def conditional_probs(first_order: FirstOrder, theta: Theta, z_u, z_v, r: float) -> np.ndarray:
    """p×p matrix of P(u is type i, v is type j | both points, distance r); sums to one."""
    if not r > 0:
        raise ModelValueError(f"Conditional type probabilities need r > 0, got {r}.", token='r')
    if first_order.p != theta.p:
        raise ModelValueError(f"First order has {first_order.p} types but theta has {theta.p}.")
    design_u = np.concatenate([[1.0], np.atleast_1d(np.asarray(z_u, dtype=float))])
    design_v = np.concatenate([[1.0], np.atleast_1d(np.asarray(z_v, dtype=float))])
    if len(design_u) != first_order.beta.shape[1] or len(design_v) != first_order.beta.shape[1]:
        raise ModelValueError(f"Expected {first_order.beta.shape[1] - 1} covariate value(s) per location.")
    logits = (first_order.beta @ design_u)[:, None] + (first_order.beta @ design_v)[None, :] + log_pcf(theta, r)
    return softmax(logits, axis=None)


# Simulation ──────────────────────────────────────────────────────────────────────────────
def _child_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


def simulate_intensities(spec: SimulationSpec) -> tuple[ScalarField, ...]:
    """Random intensities Lambda_i on the rho0 grid, one field per type.

    Lambda_i = rho0 exp(gamma_i z) exp(mu_i + sum_k alpha_ik Y_k + sigma_i U_i) with
    mu_i = -sum_k alpha_ik^2 / 2 - sigma_i^2 / 2, so that E[Lambda_i] = rho0 exp(gamma_i z).
    """
    theta, grid = spec.theta, spec.rho0
    seeds = _child_seeds(spec.seed, theta.q + theta.p + 1)
    common = [simulate_grf(grid.window, grid.nx, grid.ny, CorrelationModel(spec.latent_family, xi), seeds[k]).values
              for k, xi in enumerate(theta.xi)]

    log_f = spec.first_order.log_f(grid.centers()).reshape(grid.nx, grid.ny, theta.p)
    mu = -(theta.alpha ** 2).sum(axis=1) / 2 - theta.sigma2 / 2
    fields = []
    for i in range(theta.p):
        exponent = log_f[..., i] + mu[i]
        for k in range(theta.q):
            exponent = exponent + theta.alpha[i, k] * common[k]
        if theta.sigma2[i] > 0:
            model = CorrelationModel(spec.latent_family, theta.phi[i])
            specific = simulate_grf(grid.window, grid.nx, grid.ny, model, seeds[theta.q + i]).values
            exponent = exponent + np.sqrt(theta.sigma2[i]) * specific
        fields.append(ScalarField(grid.window, grid.values * np.exp(exponent)))
    return tuple(fields)


def simulate_poisson(intensities: tuple[ScalarField, ...], rng_seed=None) -> PointPattern:
    """Inhomogeneous Poisson points for piecewise-constant intensities: Poisson counts per cell, uniform inside."""
    rng = np.random.default_rng(rng_seed)
    window = intensities[0].window
    per_type = []
    for field in intensities:
        counts = rng.poisson(field.values.ravel() * field.cell_area)
        dx, dy = field.cell_size
        cell = np.repeat(np.arange(counts.size), counts)
        ix, iy = np.unravel_index(cell, field.values.shape)
        x = window.x0 + (ix + rng.random(len(cell))) * dx
        y = window.y0 + (iy + rng.random(len(cell))) * dy
        per_type.append(np.column_stack([np.minimum(x, window.x1), np.minimum(y, window.y1)]))
    return PointPattern.concatenate(per_type, window)


def simulate_mlgcp(spec: SimulationSpec) -> PointPattern:
    intensities = simulate_intensities(spec)
    placement = _child_seeds(spec.seed, spec.theta.q + spec.theta.p + 1)[-1]
    pattern = simulate_poisson(intensities, placement)
    log.debug("Simulated multivariate LGCP with counts %s.", pattern.counts().tolist())
    return pattern


def lognormal_background(window: Window, nx: int = 128, ny: int = 128, rng_seed=None, *, level: float = 400.0,
                         spread: float = 0.5, model: CorrelationModel | None = None) -> ScalarField:
    """Background rho0(u) = level * exp(spread V(u) - spread^2 / 2) for a unit Gaussian field V."""
    model = model or CorrelationModel("gaussian", 0.2 * window.shorter_side)
    field = simulate_grf(window, nx, ny, model, rng_seed)
    return field.mapped(lambda v: level * np.exp(spread * v - spread ** 2 / 2))
