## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .types import PointPattern, ScalarField, FirstOrder, Theta, SimulationSpec, OptimizerConfig
from .model import simulate_mlgcp, pcf_ratio
from .nonparametric import pcf_ratio_nonparam
from .likelihood import LikelihoodContext
from .optimizer import fit
from .errors import ModelValueError

log = logging.getLogger(__name__)

RHO0_FLOOR = 1e-12

RatioPair = tuple[tuple[int, int], tuple[int, int]]


def extreme_ranks(curves: np.ndarray) -> np.ndarray:
    """Per curve, its pointwise two-sided ranks min(rank from below, rank from above) sorted ascending."""
    low = rankdata(curves, method='max', axis=0)
    high = rankdata(-curves, method='max', axis=0)
    return np.sort(np.minimum(low, high), axis=1)


def erl_p_values(curves: np.ndarray) -> np.ndarray:
    """p_j = #{curves at least as extreme as curve j} / number of curves, in extreme rank length order.

    A curve is more extreme when its sorted rank vector is lexicographically smaller.
    """
    ranks = extreme_ranks(curves)
    order = np.lexsort(ranks.T[::-1])
    ordered = ranks[order]
    starts = np.r_[True, np.any(ordered[1:] != ordered[:-1], axis=1)]
    group = np.cumsum(starts) - 1
    at_least = np.empty(len(curves))
    at_least[order] = np.cumsum(np.bincount(group))[group]
    return at_least / len(curves)


@dataclass(frozen=True)
class EnvelopeResult:
    p_value: float
    r: np.ndarray
    observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    simulated: np.ndarray
    ratio_pairs: tuple[RatioPair, ...]
    level: float

    @property
    def rejected(self) -> bool:
        return self.p_value <= self.level

    def to_dict(self) -> dict:
        def clean(values): return [None if not np.isfinite(v) else float(v) for v in values]
        return {
            'p_value': self.p_value if np.isfinite(self.p_value) else None, 'level': self.level, 'n_sim': int(len(self.simulated)),
            'rejected': self.rejected, 'r': self.r.tolist(),
            'ratio_pairs': [[[i + 1, j + 1], [l + 1, k + 1]] for (i, j), (l, k) in self.ratio_pairs],
            'observed': clean(self.observed), 'lower': clean(self.lower), 'upper': clean(self.upper),
        }


def global_envelope(observed: np.ndarray, simulated: np.ndarray, level: float = 0.05):
    """Extreme rank length test of `observed` against `simulated` curves: (p_value, lower, upper).

    Columns with a missing value in any curve are left out of the ranking and get a missing band.
    The band is the pointwise hull of all curves whose own p-value exceeds `level`.
    """
    curves = np.vstack([observed[None, :], simulated])
    usable = np.all(np.isfinite(curves), axis=0)
    lower, upper = np.full(curves.shape[1], np.nan), np.full(curves.shape[1], np.nan)
    if not usable.any():
        return float('nan'), lower, upper

    p_values = erl_p_values(curves[:, usable])
    inside = curves[p_values > level][:, usable]
    if len(inside):
        lower[usable], upper[usable] = inside.min(axis=0), inside.max(axis=0)
    return float(p_values[0]), lower, upper


def difference_curve(pattern: PointPattern, theta: Theta, first_order: FirstOrder, ratio_pairs, r,
                     bandwidth: float | None = None) -> np.ndarray:
    """Model ratio minus non-parametric ratio for each pair of pairs, concatenated along r."""
    return np.concatenate([pcf_ratio(theta, num, den, r) - pcf_ratio_nonparam(pattern, first_order, num, den, r, bandwidth)
                           for num, den in ratio_pairs])


def envelope_test(pattern: PointPattern, theta: Theta, first_order: FirstOrder, rho0: ScalarField, ratio_pairs,
                  r, *, n_sim: int = 99, level: float = 0.05, rng_seed: int = 0, bandwidth: float | None = None,
                  refit: bool = False, R: float | None = None, config: OptimizerConfig | None = None,
                  threads: int = 1) -> EnvelopeResult:
    """Global envelope goodness-of-fit test of a fitted model, with rho0 replaced by its estimate.

    With `refit`, theta is re-estimated on every simulated pattern (warm-started, needs `R`).
    """
    if not 0 < level < 1:
        raise ModelValueError(f"Test level must lie in (0, 1), got {level}.", token='level')
    if n_sim < int(np.ceil(2 / level)) - 1:
        raise ModelValueError(f"n_sim={n_sim} is too small for level {level}; need at least "
                              f"{int(np.ceil(2 / level)) - 1}.", token='n_sim')
    if refit and R is None:
        raise ModelValueError("Refitting simulated patterns needs the pair distance R.", token='R')
    ratio_pairs = tuple((tuple(num), tuple(den)) for num, den in ratio_pairs)
    r = np.asarray(r, dtype=float)

    background = rho0.mapped(lambda v: np.maximum(v, RHO0_FLOOR))
    seeds = np.random.SeedSequence(rng_seed).spawn(n_sim)
    observed = difference_curve(pattern, theta, first_order, ratio_pairs, r, bandwidth)

    def replicate(n):
        spec = SimulationSpec(background, first_order, theta, int(seeds[n].generate_state(1)[0]))
        simulated = simulate_mlgcp(spec)
        model = theta
        if refit:
            ctx = LikelihoodContext.build(simulated, first_order, R)
            model = fit(ctx, theta.q, config=config, init=theta).theta
        return difference_curve(simulated, model, first_order, ratio_pairs, r, bandwidth)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            simulated = np.array(list(pool.map(replicate, range(n_sim))))
    else:
        simulated = np.array([replicate(n) for n in range(n_sim)])

    p_value, lower, upper = global_envelope(observed, simulated, level)
    log.info("Envelope test over %d simulations: p = %.4g", n_sim, p_value)
    return EnvelopeResult(p_value, r, observed, lower, upper, simulated, ratio_pairs, level)
