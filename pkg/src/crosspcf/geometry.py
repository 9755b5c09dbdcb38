## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import logging

import numpy as np
from scipy.spatial import cKDTree

from .types import PointPattern, PairIndex
from .errors import ModelValueError

log = logging.getLogger(__name__)


def enumerate_pairs(pattern: PointPattern, R: float) -> PairIndex:
    """All ordered distinct pairs (u, v) with 0 < |u - v| <= R, labelled with both types and the distance.

    The first half of the entries are the unordered pairs sorted by (u, v) with u < v, the second half
    their mirrors in the same order, so entry `e` and `e + n/2` share a `pair_id`.
    """
    if not R > 0:
        raise ModelValueError(f"Pair distance R must be positive, got {R}.", token='R')
    if pattern.n < 2:
        return PairIndex.empty(R, pattern.n_types)

    tree = cKDTree(pattern.xy)
    uv = tree.query_pairs(R, output_type='ndarray')
    if len(uv) == 0:
        return PairIndex.empty(R, pattern.n_types)

    uv = np.sort(uv, axis=1)
    uv = uv[np.lexsort((uv[:, 1], uv[:, 0]))]
    distance = np.hypot(*(pattern.xy[uv[:, 0]] - pattern.xy[uv[:, 1]]).T)
    # Coincident points carry no distance information.
    keep = distance > 0
    if not keep.all():
        log.warning("Skipping %d coincident point pair(s) at distance 0.", int((~keep).sum()))
    uv, distance = uv[keep], distance[keep]

    u, v = np.concatenate([uv[:, 0], uv[:, 1]]), np.concatenate([uv[:, 1], uv[:, 0]])
    pair_id = np.tile(np.arange(len(uv)), 2)
    log.debug("Enumerated %d ordered pairs within R=%g over %d points.", len(u), R, pattern.n)
    return PairIndex(R, u, v, pattern.types[u], pattern.types[v], np.tile(distance, 2), pair_id, pattern.n_types)


def fold_labels(pairs: PairIndex, K: int, rng_seed=None) -> np.ndarray:
    """Fold number 0..K-1 for every entry; a pair and its mirror always share the fold.

    Within each unordered type bucket {i, j} the unordered pairs are shuffled and dealt round-robin,
    so fold sizes inside every M_ij differ by at most one and the first folds take the remainder.
    """
    if K < 2:
        raise ModelValueError(f"Cross validation needs K >= 2 folds, got {K}.", token='K')

    rng = np.random.default_rng(rng_seed)
    labels = np.empty(len(pairs), dtype=np.int64)
    if len(pairs) == 0:
        return labels

    # Each unordered pair is dealt once, through its canonical u < v entry.
    canonical = np.flatnonzero(pairs.first < pairs.second)
    lo = np.minimum(pairs.type_first[canonical], pairs.type_second[canonical])
    hi = np.maximum(pairs.type_first[canonical], pairs.type_second[canonical])
    bucket = lo * pairs.n_types + hi

    folds = np.full(pairs.pair_id.max() + 1, -1, dtype=np.int64)
    for code in np.unique(bucket):
        members = canonical[bucket == code]
        folds[pairs.pair_id[members[rng.permutation(len(members))]]] = np.arange(len(members)) % K

    labels[:] = folds[pairs.pair_id]
    if np.any(labels < 0):
        raise ModelValueError("Pair index is not closed under swapping, cannot assign folds.")
    return labels


def kfold_split(pairs: PairIndex, K: int, rng_seed=None) -> list[PairIndex]:
    """Partition the pairs into K swap-closed folds, balanced inside every type bucket."""
    labels = fold_labels(pairs, K, rng_seed)
    return [pairs.subset(labels == k) for k in range(K)]
