## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Cyclic block descent over (alpha, xi, sigma2, phi).  Each block takes a Newton step on
# the local quadratic model built from the score and the Hessian estimate, followed by an
# Armijo backtracking line search.  With a lasso penalty on alpha, the quadratic model is
# minimised by coordinate soft-thresholding inside an augmented Lagrangian that carries the
# sum-to-zero constraint on every column.
#

import logging
import warnings
from typing import NamedTuple, Callable

import numpy as np
import scipy.linalg

from .types import Theta, FitResult, OptimizerConfig, Block, Window
from .likelihood import LikelihoodContext, local_quadratic, neg_log_cl
from .errors import ModelValueError, NumericalError, ConvergenceWarning

log = logging.getLogger(__name__)

MAX_STEP = 1.0


def soft_threshold(c, lam):
    """S(c, lam): shrink towards zero by lam, exactly zero when lam >= |c|."""
    c = np.asarray(c, dtype=float)
    value = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
    return float(value) if value.ndim == 0 else value


def build_constraint_matrices(p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """B (p×(p-1)) with B^T = [I | -1] so that alpha = B psi sums to zero, and C (q×pq) with C vec(alpha) = column sums.

    vec(alpha) is the row-major flattening `alpha.ravel()`, entry (i, k) at position i*q + k.
    """
    if p < 2 or q < 1:
        raise ModelValueError(f"Constraint matrices need p >= 2 and q >= 1, got p={p}, q={q}.")
    B = np.vstack([np.eye(p - 1), -np.ones((1, p - 1))])
    C = np.tile(np.eye(q), (1, p))
    return B, C


def recenter(alpha: np.ndarray) -> np.ndarray:
    """Restore zero column sums by shifting only the non-zero entries; a lone non-zero entry becomes zero."""
    alpha = np.array(alpha, dtype=float)
    for k in range(alpha.shape[1]):
        nonzero = alpha[:, k] != 0
        if (count := nonzero.sum()) == 1:
            alpha[nonzero, k] = 0.0
        elif count > 1:
            alpha[nonzero, k] -= alpha[nonzero, k].sum() / count
    return alpha


def initial_theta(p: int, q: int, window: Window, rng_seed=None) -> Theta:
    """Random start: alpha ~ U(-0.25, 0.25) centred, xi and phi ~ U(0.01, 0.04) scaled by the window, sigma2 ~ U(0.4, 0.6)."""
    rng = np.random.default_rng(rng_seed)
    side = window.shorter_side
    alpha = rng.uniform(-0.25, 0.25, size=(p, q))
    alpha -= alpha.mean(axis=0, keepdims=True)
    xi = rng.uniform(0.01, 0.04, size=q) * side
    sigma2 = rng.uniform(0.4, 0.6, size=p)
    phi = rng.uniform(0.01, 0.04, size=p) * side
    return Theta(alpha, xi, sigma2, phi)


# Quadratic steps ─────────────────────────────────────────────────────────────────────────
def floored_hessian(hessian: np.ndarray, config: OptimizerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with eigenvalues clamped below `eig_floor` times the largest one."""
    values, vectors = scipy.linalg.eigh(hessian)
    top = values.max() if len(values) else 0.0
    floor = config.eig_floor * top if top > 0 else 1.0
    return np.maximum(values, floor), vectors


def newton_direction(gradient: np.ndarray, hessian: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    values, vectors = floored_hessian(hessian, config)
    direction = -vectors @ ((vectors.T @ gradient) / values)
    if (size := np.abs(direction).max(initial=0.0)) > MAX_STEP:
        direction *= MAX_STEP / size
    return direction


class LineSearch(NamedTuple):
    theta: Theta
    objective: float
    step: float
    accepted: bool


def armijo_search(objective: Callable[[float], tuple[Theta, float]], current: tuple[Theta, float],
                  slope: float, config: OptimizerConfig) -> LineSearch:
    """Backtrack t = 1, shrink, shrink^2, ... until f(t) <= f(0) + c t slope; keep the current point otherwise."""
    theta0, f0 = current
    if not slope < 0:
        return LineSearch(theta0, f0, 0.0, False)
    t = 1.0
    for _ in range(config.max_halvings):
        try:
            theta, value = objective(t)
        except (NumericalError, ModelValueError):
            theta, value = None, np.inf
        if np.isfinite(value) and value <= f0 + config.armijo * t * slope:
            return LineSearch(theta, value, t, True)
        t *= config.shrink
    return LineSearch(theta0, f0, 0.0, False)


def augmented_lagrangian_alpha(G: np.ndarray, b: np.ndarray, alpha0: np.ndarray, C: np.ndarray, lam: float,
                               config: OptimizerConfig) -> tuple[np.ndarray, int, bool]:
    """Minimise 1/2 a^T G a - b^T a + lam |a|_1 subject to C a = 0 by cyclic soft-thresholding.

    Returns (alpha, sweeps, capped); `capped` means the sweep limit was hit and the last iterate kept.
    """
    mu = config.mu
    CtC = C.T @ C
    denominator = np.diag(G) + mu * np.diag(CtC)
    alpha, eta = np.array(alpha0, dtype=float), np.zeros(C.shape[0])

    for sweep in range(config.inner_max_iter):
        previous_alpha, previous_eta = alpha.copy(), eta.copy()
        Ct_eta = C.T @ eta
        for j in range(len(alpha)):
            c1 = b[j] - G[j] @ alpha + G[j, j] * alpha[j]
            c2 = mu * (CtC[j] @ alpha - CtC[j, j] * alpha[j]) + Ct_eta[j]
            alpha[j] = soft_threshold(c1 - c2, lam) / denominator[j]
        eta = eta + mu * (C @ alpha)
        if (np.linalg.norm(alpha - previous_alpha) < config.alpha_tol
                and np.linalg.norm(eta - previous_eta) < config.eta_tol):
            return alpha, sweep + 1, False

    warnings.warn(f"Augmented Lagrangian alpha update hit {config.inner_max_iter} sweeps; "
                  "keeping the last iterate.", ConvergenceWarning, stacklevel=2)
    return alpha, config.inner_max_iter, True


class BlockStep(NamedTuple):
    theta: Theta
    objective: float
    accepted: bool
    inner_capped: bool = False


def _penalty(theta: Theta, lam: float) -> float:
    return lam * float(np.abs(theta.alpha).sum()) if lam > 0 else 0.0


def _update_alpha(ctx, theta, config, lam) -> BlockStep:
    p, q = theta.p, theta.q
    value, gradient, hessian = local_quadratic(ctx, theta, 'alpha')
    f0 = value + _penalty(theta, lam)
    B, C = build_constraint_matrices(p, q)
    a0 = theta.alpha.ravel()

    def trial(direction):
        def objective(t):
            candidate = theta.with_block('alpha', recenter((a0 + t * direction).reshape(p, q)))
            return candidate, neg_log_cl(ctx, candidate) + _penalty(candidate, lam)
        return objective

    capped = False
    if lam > 0:
        values, vectors = floored_hessian(hessian, config)
        G = (vectors * values) @ vectors.T
        target, _, capped = augmented_lagrangian_alpha(G, -gradient + G @ a0, a0, C, lam, config)
        direction = target - a0
        slope = gradient @ direction + lam * (np.abs(target).sum() - np.abs(a0).sum())
    else:
        # Newton step in psi, the free rows, then mapped back through alpha = B psi.
        lift = np.kron(B, np.eye(q))
        direction = lift @ newton_direction(lift.T @ gradient, lift.T @ hessian @ lift, config)
        slope = gradient @ direction

    search = armijo_search(trial(direction), (theta, f0), slope, config)
    return BlockStep(search.theta, search.objective, search.accepted, capped)


def _update_positive(ctx, theta, block, config, lam, frozen) -> BlockStep:
    value, gradient, hessian = local_quadratic(ctx, theta, block, log_scale=True)
    f0 = value + _penalty(theta, lam)
    current = theta.block(block)
    active = np.flatnonzero(current > 0)
    if block in ('sigma2', 'phi'):
        active = np.setdiff1d(active, frozen)
        if block == 'phi':
            active = active[theta.sigma2[active] > 0]
    if len(active) == 0:
        return BlockStep(theta, f0, False)

    g, H = gradient[active], hessian[np.ix_(active, active)]
    direction = newton_direction(g, H, config)

    def objective(t):
        moved = current.copy()
        moved[active] = np.exp(np.log(current[active]) + t * direction)
        candidate = theta.with_block(block, moved)
        return candidate, neg_log_cl(ctx, candidate) + _penalty(candidate, lam)

    search = armijo_search(objective, (theta, f0), g @ direction, config)
    return BlockStep(search.theta, search.objective, search.accepted)


def block_update(ctx: LikelihoodContext, theta: Theta, block: Block, config: OptimizerConfig | None = None,
                 lam: float = 0.0, frozen=()) -> BlockStep:
    """One quadratic-model step with line search on a single block; positive blocks move on the log scale."""
    config = config or OptimizerConfig()
    if block == 'alpha':
        if theta.q == 0:
            return BlockStep(theta, neg_log_cl(ctx, theta), False)
        return _update_alpha(ctx, theta, config, lam)
    return _update_positive(ctx, theta, block, config, lam, np.asarray(frozen, dtype=np.int64))


# Drivers ─────────────────────────────────────────────────────────────────────────────────
def frozen_types(ctx: LikelihoodContext) -> tuple[int, ...]:
    """Types whose own bucket M_ii holds fewer than 2 distinct points within R.

    sigma2_i and phi_i enter only through g_ii, so such types carry no information on them.
    """
    buckets = ctx.pairs.buckets
    first = ctx.pairs.first
    return tuple(i for i in range(ctx.p) if len(np.unique(first[buckets[(i, i)]])) < 2)


def _relative_converged(previous: float, current: float, epsilon: float) -> bool:
    return abs(previous - current) <= epsilon * abs(previous)


def fit(ctx: LikelihoodContext, q: int, *, config: OptimizerConfig | None = None, lam: float = 0.0,
        rng_seed=None, init: Theta | None = None) -> FitResult:
    """Cyclic block descent on l_-(theta) + lam |alpha|_1 from `init` or a random start drawn from `rng_seed`."""
    config = config or OptimizerConfig()
    p = ctx.p
    if q < 0:
        raise ModelValueError(f"Number of latent fields q must be non-negative, got {q}.", token='q')
    if q > 0 and p < 2:
        raise ModelValueError("Common latent fields need at least two types under the sum-to-zero constraint.")
    if lam < 0:
        raise ModelValueError(f"Penalty lambda must be non-negative, got {lam}.", token='lambda')

    if init is None:
        theta = initial_theta(p, q, ctx.pattern.window, rng_seed)
    elif init.p != p or init.q != q:
        raise ModelValueError(f"Warm start has shape p={init.p}, q={init.q} but p={p}, q={q} was requested.")
    else:
        theta = init.with_block('alpha', recenter(init.alpha))

    frozen = frozen_types(ctx)
    if frozen:
        log.warning("Types %s have fewer than 2 points in same-type pairs within R; "
                    "their sigma2 and phi stay at the start values.", [i + 1 for i in frozen])

    blocks = ('alpha', 'xi', 'sigma2', 'phi') if q > 0 else ('sigma2', 'phi')
    objective = neg_log_cl(ctx, theta) + _penalty(theta, lam)
    trace, converged, capped, stalled, iteration = [objective], False, False, False, 0

    for iteration in range(1, config.max_iter + 1):
        moved = False
        for block in blocks:
            step = block_update(ctx, theta, block, config, lam, frozen)
            if step.accepted:
                theta, objective, moved = step.theta, step.objective, True
            capped |= step.inner_capped
        trace.append(objective)
        log.debug("Iteration %d: objective %.10g", iteration, objective)
        if stalled := not moved:
            log.info("No block accepted a step at iteration %d; stopping.", iteration)
            break
        if _relative_converged(trace[-2], trace[-1], config.epsilon):
            converged = True
            break

    if not converged and not stalled:
        log.info("Block descent stopped after %d iterations without relative convergence.", iteration)
    return FitResult(theta, objective, lam, tuple(trace), converged, theta.alpha == 0, iteration, stalled,
                     frozen, capped)


def fit_lasso(ctx: LikelihoodContext, q: int, lam: float, *, config: OptimizerConfig | None = None,
              rng_seed=None, init: Theta | None = None) -> FitResult:
    if not lam > 0:
        raise ModelValueError(f"The lasso fit needs lambda > 0, got {lam}.", token='lambda')
    return fit(ctx, q, config=config, lam=lam, rng_seed=rng_seed, init=init)
