## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import logging
from typing import Literal, NamedTuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .types import Theta, OptimizerConfig, FitResult
from .geometry import fold_labels
from .likelihood import LikelihoodContext, pair_log_probs
from .optimizer import fit
from .errors import ModelValueError

log = logging.getLogger(__name__)

FOLD_MAX_ITER = 60

Rule = Literal['min', '1se']


class CVScore(NamedTuple):
    mean: float
    se: float
    raw: np.ndarray              # (L, K) validation scores
    empty_folds: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class CVResult:
    """Two-step cross validation: a q profile at lambda = 0, then a lambda profile at the chosen q."""
    qs: tuple[int, ...]
    lams: tuple[float, ...]
    q_mean: np.ndarray
    q_se: np.ndarray
    q_raw: np.ndarray            # (n_q, L, K)
    q_min: int
    q_1se: int
    q_star: int
    lam_mean: np.ndarray         # (n_lambda,), NaN where the lambda step was skipped
    lam_se: np.ndarray
    lam_raw: np.ndarray          # (n_lambda, L, K)
    lam_star: float
    empty_folds: tuple = field(default=())

    def rows(self) -> list[tuple[int, float, float, float]]:
        """(q, lambda, mean, SE) for every evaluated grid point, q profile first."""
        out = [(q, 0.0, float(m), float(s)) for q, m, s in zip(self.qs, self.q_mean, self.q_se)]
        out += [(self.q_star, float(lam), float(m), float(s))
                for lam, m, s in zip(self.lams, self.lam_mean, self.lam_se) if np.isfinite(m) and lam != 0]
        return out

    def to_dict(self) -> dict:
        return {
            'q_grid': list(self.qs), 'lambda_grid': list(self.lams),
            'q_mean': self.q_mean.tolist(), 'q_se': self.q_se.tolist(), 'q_raw': self.q_raw.tolist(),
            'lambda_mean': [None if not np.isfinite(m) else float(m) for m in self.lam_mean],
            'lambda_se': [None if not np.isfinite(s) else float(s) for s in self.lam_se],
            'q_min': self.q_min, 'q_1se': self.q_1se, 'q_star': self.q_star, 'lambda_star': self.lam_star,
            'empty_folds': [list(f) for f in self.empty_folds],
        }


def standard_error(raw: np.ndarray) -> float:
    """SD of the K*L raw scores over sqrt(K*L); zero for a single score."""
    raw = np.ravel(raw)
    return float(raw.std(ddof=1) / np.sqrt(raw.size)) if raw.size > 1 else 0.0


def cv_score(ctx: LikelihoodContext, q: int, lam: float, K: int = 5, L: int = 10, rng_seed: int = 0, *,
             config: OptimizerConfig | None = None, warm: Theta | None = None, fold_max_iter: int = FOLD_MAX_ITER,
             threads: int = 1) -> CVScore:
    """Cross-validated score of (q, lam): minus the summed log p of held-out cross-type pairs, averaged over K*L folds.

    Each fold fit starts from `warm` (a fit on all pairs, computed here when missing).
    """
    if not 2 <= K <= 10:
        raise ModelValueError(f"Number of folds K must lie in 2..10, got {K}.", token='K')
    if L < 1:
        raise ModelValueError(f"Number of repetitions L must be at least 1, got {L}.", token='L')
    config = config or OptimizerConfig()
    fold_config = replace(config, max_iter=min(config.max_iter, fold_max_iter))
    if warm is None:
        warm = fit(ctx, q, config=config, lam=lam, rng_seed=rng_seed).theta

    cross = ctx.cross_type()
    splits = [fold_labels(ctx.pairs, K, np.random.SeedSequence([rng_seed, l])) for l in range(L)]

    def job(lk):
        l, k = lk
        labels = splits[l]
        validation = (labels == k) & cross
        if not validation.any():
            return 0.0, True
        trained = fit(ctx.restrict(labels != k), q, config=fold_config, lam=lam, init=warm)
        return -float(pair_log_probs(ctx.restrict(validation), trained.theta).sum()), False

    jobs = [(l, k) for l in range(L) for k in range(K)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, jobs))
    else:
        results = [job(lk) for lk in jobs]

    raw = np.array([score for score, _ in results]).reshape(L, K)
    empty = tuple(lk for lk, (_, is_empty) in zip(jobs, results) if is_empty)
    if empty:
        log.warning("%d fold(s) have no cross-type validation pairs and score 0.", len(empty))
    return CVScore(float(raw.mean()), standard_error(raw), raw, empty)


def select_q(qs, means, ses, rule: Rule = 'min') -> int:
    """MIN: arg-min of the mean score, ties to the smaller q. 1SE: smallest q within one SE of the minimum."""
    qs, means, ses = np.asarray(qs), np.asarray(means, dtype=float), np.asarray(ses, dtype=float)
    if qs.size == 0:
        raise ModelValueError("The q grid is empty.", token='q')
    order = np.argsort(qs, kind='stable')
    qs, means, ses = qs[order], means[order], ses[order]
    best = int(np.argmin(means))
    match rule:
        case 'min': return int(qs[best])
        case '1se': return int(qs[np.flatnonzero(means <= means[best] + ses[best])[0]])
    raise ModelValueError(f"Unknown selection rule `{rule}`, expected 'min' or '1se'.", token=rule)


class LambdaPath(NamedTuple):
    q: int
    lams: tuple[float, ...]
    mean: np.ndarray
    se: np.ndarray
    raw: np.ndarray
    lam_star: float
    fits: dict
    empty_folds: tuple

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [(self.q, float(lam), float(m), float(s)) for lam, m, s in zip(self.lams, self.mean, self.se)]

    def to_dict(self) -> dict:
        return {
            'q': self.q, 'lambda_grid': list(self.lams), 'lambda_mean': self.mean.tolist(),
            'lambda_se': self.se.tolist(), 'lambda_raw': self.raw.tolist(), 'lambda_star': self.lam_star,
            'zero_fraction': {str(lam): fit.zero_fraction for lam, fit in self.fits.items()},
            'empty_folds': [list(f) for f in self.empty_folds],
        }


def select_lambda(ctx: LikelihoodContext, q: int, lams, K: int = 5, L: int = 10, rng_seed: int = 0, *,
                  config: OptimizerConfig | None = None, warm: FitResult | None = None,
                  threads: int = 1) -> LambdaPath:
    """Cross validate lambda for a fixed q, visiting the grid from the largest lambda down with warm starts.

    Ties go to the larger lambda.
    """
    lams = tuple(float(v) for v in lams)
    if not lams:
        raise ModelValueError("The lambda grid is empty.", token='lambda')
    mean, se = np.full(len(lams), np.nan), np.full(len(lams), np.nan)
    raw = np.full((len(lams), L, K), np.nan)
    fits, empty = {}, []

    previous = warm.theta if warm is not None else None
    best, lam_star = np.inf, None
    for index in sorted(range(len(lams)), key=lambda n: -lams[n]):
        lam = lams[index]
        full = fit(ctx, q, config=config, lam=lam, rng_seed=rng_seed, init=previous)
        result = cv_score(ctx, q, lam, K, L, rng_seed, config=config, warm=full.theta, threads=threads)
        mean[index], se[index], raw[index] = result.mean, result.se, result.raw
        empty += [(q, lam, *lk) for lk in result.empty_folds]
        fits[lam], previous = full, full.theta
        if result.mean < best:
            best, lam_star = result.mean, lam
        log.info("CV q=%d lambda=%g: mean %.6g, SE %.3g", q, lam, result.mean, result.se)
    return LambdaPath(q, lams, mean, se, raw, lam_star, fits, tuple(empty))


def select_q_lambda(ctx: LikelihoodContext, qs, lams, K: int = 5, L: int = 10, rng_seed: int = 0, *,
                    config: OptimizerConfig | None = None, threads: int = 1) -> CVResult:
    """Choose q by the MIN rule at lambda = 0, then lambda at that q; q = 0 leaves nothing to penalise."""
    qs = tuple(sorted(int(q) for q in qs))
    lams = tuple(float(v) for v in lams)
    if not qs:
        raise ModelValueError("The q grid is empty.", token='q')
    if 0.0 not in lams:
        raise ModelValueError("The lambda grid must contain 0.", token='lambda')

    q_mean, q_se = np.empty(len(qs)), np.empty(len(qs))
    q_raw, empty, full_fits = np.empty((len(qs), L, K)), [], {}
    for n, q in enumerate(qs):
        full_fits[q] = fit(ctx, q, config=config, rng_seed=rng_seed)
        result = cv_score(ctx, q, 0.0, K, L, rng_seed, config=config, warm=full_fits[q].theta, threads=threads)
        q_mean[n], q_se[n], q_raw[n] = result.mean, result.se, result.raw
        empty += [(q, 0.0, *lk) for lk in result.empty_folds]
        log.info("CV q=%d: mean %.6g, SE %.3g", q, result.mean, result.se)

    q_min, q_1se = select_q(qs, q_mean, q_se, 'min'), select_q(qs, q_mean, q_se, '1se')
    lam_mean, lam_se = np.full(len(lams), np.nan), np.full(len(lams), np.nan)
    lam_raw = np.full((len(lams), L, K), np.nan)
    zero = lams.index(0.0)
    lam_mean[zero], lam_se[zero], lam_raw[zero] = q_mean[qs.index(q_min)], q_se[qs.index(q_min)], q_raw[qs.index(q_min)]

    lam_star = 0.0
    penalised = tuple(lam for lam in lams if lam > 0)
    if q_min > 0 and penalised:
        path = select_lambda(ctx, q_min, penalised, K, L, rng_seed, config=config, warm=full_fits[q_min],
                             threads=threads)
        for lam, m, s, r in zip(path.lams, path.mean, path.se, path.raw):
            lam_mean[lams.index(lam)], lam_se[lams.index(lam)], lam_raw[lams.index(lam)] = m, s, r
        empty += list(path.empty_folds)
        # Ties between the penalised path and lambda = 0 go to the penalised, larger lambda.
        lam_star = path.lam_star if path.mean.min() <= lam_mean[zero] else 0.0

    return CVResult(qs, lams, q_mean, q_se, q_raw, q_min, q_1se, q_min, lam_mean, lam_se, lam_raw, lam_star,
                    tuple(empty))
