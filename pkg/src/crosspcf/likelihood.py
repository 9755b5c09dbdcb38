## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Negative log conditional composite likelihood over ordered pairs within R, its
# analytic score per parameter block, and the unbiased Hessian estimate built from
# the per-pair covariance of the log pair-correlation gradients.
#

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .types import PointPattern, FirstOrder, PairIndex, Theta, Block, BLOCKS
from .geometry import enumerate_pairs
from .errors import LikelihoodError, ModelValueError

log = logging.getLogger(__name__)

CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class LikelihoodContext:
    """Pairs plus the fixed first-order factors log f_i at every point (two-step estimation)."""
    pattern: PointPattern
    pairs: PairIndex
    first_order: FirstOrder
    log_f: np.ndarray
    threads: int = 1

    @property
    def p(self) -> int: return self.pattern.n_types

    @classmethod
    def build(cls, pattern: PointPattern, first_order: FirstOrder, R: float, threads: int = 1) -> "LikelihoodContext":
        if first_order.p != pattern.n_types:
            raise ModelValueError(f"First order has {first_order.p} types but the pattern has {pattern.n_types}.")
        log_f = first_order.log_f(pattern.xy)
        log_f.setflags(write=False)
        return cls(pattern, enumerate_pairs(pattern, R), first_order, log_f, threads)

    def restrict(self, indices) -> "LikelihoodContext":
        return replace(self, pairs=self.pairs.subset(indices))

    def cross_type(self) -> np.ndarray:
        return self.pairs.type_first != self.pairs.type_second


# Per-pair derivatives ────────────────────────────────────────────────────────────────────
def _dim(theta: Theta, block: Block) -> int:
    return {'alpha': theta.p * theta.q, 'xi': theta.q, 'sigma2': theta.p, 'phi': theta.p}[block]


def _log_g(theta: Theta, r: np.ndarray, common: np.ndarray, specific: np.ndarray) -> np.ndarray:
    """(n, p, p) log g_ij at the chunk's distances, given exp(-r/xi) and exp(-r/phi)."""
    out = np.einsum('ik,jk,nk->nij', theta.alpha, theta.alpha, common)
    idx = np.arange(theta.p)
    out[:, idx, idx] += specific * theta.sigma2
    return out


def _gradient_log_g(theta: Theta, block: Block, r, common, specific, log_scale: bool) -> np.ndarray:
    """(n, p, p, d) derivatives of log g_ij with respect to the block, optionally per log-parameter."""
    n, p, q = len(r), theta.p, theta.q
    idx = np.arange(p)
    match block:
        case 'alpha':
            # d/d a_ac: e_c (delta_ia a_jc + delta_ja a_ic)
            grad = np.zeros((n, p, p, p, q))
            scaled = common[:, None, :] * theta.alpha[None, :, :]        # (n, j, c) = e_c a_jc
            grad[:, idx, :, idx, :] += scaled[None]               # a = i
            grad[:, :, idx, idx, :] += scaled[:, :, None, :]      # a = j
            grad = grad.reshape(n, p, p, p * q)
        case 'xi':
            weight = common * r[:, None] / theta.xi ** 2
            if log_scale: weight = weight * theta.xi
            grad = np.einsum('ik,jk,nk->nijk', theta.alpha, theta.alpha, weight)
        case 'sigma2':
            grad = np.zeros((n, p, p, p))
            weight = specific * theta.sigma2 if log_scale else specific
            grad[:, idx, idx, idx] = weight
        case 'phi':
            grad = np.zeros((n, p, p, p))
            weight = specific * theta.sigma2 * r[:, None] / theta.phi ** 2
            if log_scale: weight = weight * theta.phi
            grad[:, idx, idx, idx] = weight
        case _:
            raise ModelValueError(f"Unknown parameter block `{block}`, expected one of {BLOCKS}.", token=block)
    return grad


@dataclass
class _Partial:
    value: float
    gradient: np.ndarray | None
    hessian: np.ndarray | None
    log_prob: np.ndarray | None


def _evaluate_chunk(ctx: LikelihoodContext, theta: Theta, entries: np.ndarray, weight: np.ndarray,
                    block: Block | None, log_scale: bool, want_hessian: bool, want_log_prob: bool) -> _Partial:
    pairs = ctx.pairs
    r = pairs.distance[entries]
    ti, tj = pairs.type_first[entries], pairs.type_second[entries]
    common = np.exp(-r[:, None] / theta.xi)
    specific = np.exp(-r[:, None] / theta.phi)

    logits = _log_g(theta, r, common, specific)
    logits += ctx.log_f[pairs.first[entries]][:, :, None] + ctx.log_f[pairs.second[entries]][:, None, :]
    flat = logits.reshape(len(r), -1)
    log_norm = logsumexp(flat, axis=1)
    rows = np.arange(len(r))
    log_prob = flat[rows, ti * theta.p + tj] - log_norm

    if not np.all(np.isfinite(log_prob)):
        bad = int(np.flatnonzero(~np.isfinite(log_prob))[0])
        u, v = int(pairs.first[entries][bad]), int(pairs.second[entries][bad])
        raise LikelihoodError(f"Conditional type probability underflowed for points {u} and {v} "
                              f"at distance {r[bad]:.6g}.", pair=(u, v, int(ti[bad]), int(tj[bad])))

    value = -float(weight @ log_prob)
    gradient = hessian = None
    if block is not None:
        prob = np.exp(flat - log_norm[:, None])                                   # (n, p*p)
        d_log_g = _gradient_log_g(theta, block, r, common, specific, log_scale)
        d_log_g = d_log_g.reshape(len(r), theta.p * theta.p, _dim(theta, block))   # (n, p*p, d)
        expected = np.einsum('no,nod->nd', prob, d_log_g)
        observed = d_log_g[rows, ti * theta.p + tj]
        gradient = weight @ (expected - observed)
        if want_hessian:
            weighted = (d_log_g * (prob * weight[:, None])[:, :, None]).reshape(-1, d_log_g.shape[2])
            second = weighted.T @ d_log_g.reshape(-1, d_log_g.shape[2])
            hessian = second - (expected * weight[:, None]).T @ expected
    return _Partial(value, gradient, hessian, log_prob if want_log_prob else None)


def _chunks(ctx: LikelihoodContext, theta: Theta, block: Block | None) -> list[slice]:
    """Slices over the unordered pairs, sized to bound the (n, p*p, d) work arrays."""
    count = len(ctx.pairs.unordered[0])
    width = theta.p * theta.p * max(1, _dim(theta, block) if block else 1)
    size = max(256, CHUNK_ELEMENTS // width)
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]


def _evaluate(ctx: LikelihoodContext, theta: Theta, block: Block | None = None, *, log_scale=False,
              want_hessian=False, want_log_prob=False) -> _Partial:
    if theta.p != ctx.p:
        raise ModelValueError(f"Theta has {theta.p} types but the pattern has {ctx.p}.")
    d = _dim(theta, block) if block else 0
    total = _Partial(0.0, np.zeros(d) if block else None, np.zeros((d, d)) if want_hessian else None,
                     np.empty(0) if want_log_prob else None)
    if len(ctx.pairs) == 0:
        return total

    # Each unordered pair is evaluated once and counted for every entry of the index it stands for.
    first, count, position = ctx.pairs.unordered
    def job(part): return _evaluate_chunk(ctx, theta, first[part], count[part], block, log_scale, want_hessian,
                                          want_log_prob)
    chunks = _chunks(ctx, theta, block)
    if ctx.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            partials = list(pool.map(job, chunks))
    else:
        partials = [job(c) for c in chunks]

    # Reduction in chunk order, so results do not depend on the thread count.
    total.value = float(np.sum([part.value for part in partials]))
    if block:
        total.gradient = np.sum([part.gradient for part in partials], axis=0)
    if want_hessian:
        total.hessian = np.sum([part.hessian for part in partials], axis=0)
        total.hessian = (total.hessian + total.hessian.T) / 2
    if want_log_prob:
        total.log_prob = np.concatenate([part.log_prob for part in partials])[position]
    return total


# Public API ──────────────────────────────────────────────────────────────────────────────
def neg_log_cl(ctx: LikelihoodContext, theta: Theta) -> float:
    """l_-(theta) = -sum over ordered pairs of log p_ij(u, v; theta)."""
    return _evaluate(ctx, theta).value


def pair_log_probs(ctx: LikelihoodContext, theta: Theta) -> np.ndarray:
    """log p of the observed type pair for every entry of the pair index, in entry order."""
    return _evaluate(ctx, theta, want_log_prob=True).log_prob


def score(ctx: LikelihoodContext, theta: Theta, block: Block, *, log_scale: bool = False) -> np.ndarray:
    """Gradient of l_- in one block; with `log_scale`, per log-parameter (not valid for alpha)."""
    return _evaluate(ctx, theta, block, log_scale=log_scale).gradient


def estimated_hessian(ctx: LikelihoodContext, theta: Theta, block: Block, *, log_scale: bool = False) -> np.ndarray:
    return _evaluate(ctx, theta, block, log_scale=log_scale, want_hessian=True).hessian


def local_quadratic(ctx: LikelihoodContext, theta: Theta, block: Block, *, log_scale: bool = False):
    """(l_-, score, Hessian estimate) from a single pass over the pairs."""
    part = _evaluate(ctx, theta, block, log_scale=log_scale, want_hessian=True)
    return part.value, part.gradient, part.hessian
