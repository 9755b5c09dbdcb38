## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Kernel baselines.  All intensity estimators use the isotropic Gaussian kernel with the
# edge correction c_b(v) computed by the same grid quadrature that integrates the
# estimate, so every point contributes exactly its weight to the integral.
#

import logging
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.integrate import trapezoid
from scipy.stats import iqr, norm

from .types import PointPattern, ScalarField, Window, FirstOrder, Theta
from .model import pcf_curves
from .errors import ModelValueError, BandwidthError

log = logging.getLogger(__name__)

DEFAULT_SHAPE = (128, 128)
POINT_BLOCK = 512

Scope = Literal['within', 'between', 'total']


def _axis_weights(coords: np.ndarray, lo: float, hi: float, cells: int, b: float) -> np.ndarray:
    """(n, cells) Gaussian weights of each coordinate at the cell centres, times the cell width."""
    step = (hi - lo) / cells
    centres = lo + (np.arange(cells) + 0.5) * step
    return norm.pdf(centres[None, :], loc=coords[:, None], scale=b) * step


def edge_correction(points: np.ndarray, window: Window, b: float, shape=DEFAULT_SHAPE) -> np.ndarray:
    """c_b(v): kernel mass of each point inside the window, by grid quadrature."""
    points = np.reshape(points, (-1, 2))
    wx = _axis_weights(points[:, 0], window.x0, window.x1, shape[0], b)
    wy = _axis_weights(points[:, 1], window.y0, window.y1, shape[1], b)
    return wx.sum(axis=1) * wy.sum(axis=1)


def kernel_intensity(points: np.ndarray, window: Window, bandwidth: float, *, weights=None,
                     shape=DEFAULT_SHAPE) -> ScalarField:
    """Edge-corrected Gaussian kernel estimate on the grid: sum_v w_v k_b(u - v) / c_b(v)."""
    if not bandwidth > 0:
        raise ModelValueError(f"Kernel bandwidth must be positive, got {bandwidth}.", token='bandwidth')
    points = np.reshape(points, (-1, 2))
    weights = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=float)
    wx = _axis_weights(points[:, 0], window.x0, window.x1, shape[0], bandwidth)
    wy = _axis_weights(points[:, 1], window.y0, window.y1, shape[1], bandwidth)
    mass = weights / (wx.sum(axis=1) * wy.sum(axis=1))
    cell_area = window.area / (shape[0] * shape[1])
    return ScalarField(window, (wx * mass[:, None]).T @ wy / cell_area)


def _own_weights(pattern: PointPattern, first_order: FirstOrder) -> np.ndarray:
    """exp(-beta_i . z(v)) for every point v of type i."""
    log_f = first_order.log_f(pattern.xy)
    return np.exp(-log_f[np.arange(pattern.n), pattern.types])


def estimate_rho0(pattern: PointPattern, first_order: FirstOrder, bandwidth: float, *, shape=DEFAULT_SHAPE,
                  types: Sequence[int] | None = None) -> ScalarField:
    """Semi-parametric background estimate (1/p') sum_i sum_{v in X_i} exp(-beta_i z(v)) k_b(u - v) / c_b(v), over `types`."""
    types = range(pattern.n_types) if types is None else list(types)
    keep = np.isin(pattern.types, types)
    weights = _own_weights(pattern, first_order)[keep] / len(types)
    return kernel_intensity(pattern.xy[keep], pattern.window, bandwidth, weights=weights, shape=shape)


def diggle_rho0_minus_i(pattern: PointPattern, first_order: FirstOrder, bandwidth: float, i: int, *,
                        shape=DEFAULT_SHAPE) -> ScalarField:
    """Background estimate that leaves out type i entirely."""
    if pattern.n_types < 2:
        raise ModelValueError("Leave-one-type-out estimates need at least two types.")
    if not 0 <= i < pattern.n_types:
        raise ModelValueError(f"Type index {i} is out of range for p={pattern.n_types}.", token=str(i))
    others = [k for k in range(pattern.n_types) if k != i]
    return estimate_rho0(pattern, first_order, bandwidth, shape=shape, types=others)


def diggle_intensities(pattern: PointPattern, first_order: FirstOrder, bandwidth: float, *,
                       shape=DEFAULT_SHAPE) -> tuple[ScalarField, ...]:
    """rho_i = rho0_{-i} exp(beta_i z) for every type."""
    out = []
    for i in range(pattern.n_types):
        rho0 = diggle_rho0_minus_i(pattern, first_order, bandwidth, i, shape=shape)
        log_f = first_order.log_f(rho0.centers())[:, i].reshape(rho0.values.shape)
        out.append(ScalarField(rho0.window, rho0.values * np.exp(log_f)))
    return tuple(out)


def simple_intensities(pattern: PointPattern, bandwidth: float, *, shape=DEFAULT_SHAPE) -> tuple[ScalarField, ...]:
    return tuple(kernel_intensity(pattern.of_type(i), pattern.window, bandwidth, shape=shape)
                 for i in range(pattern.n_types))


# Bandwidth ───────────────────────────────────────────────────────────────────────────────
def _rho0_at_points(pattern: PointPattern, weights: np.ndarray, b: float, shape) -> np.ndarray:
    """Exact kernel evaluation of the background estimate at the data points, self terms included."""
    scaled = weights / edge_correction(pattern.xy, pattern.window, b, shape) / pattern.n_types
    out = np.empty(pattern.n)
    for start in range(0, pattern.n, POINT_BLOCK):
        block = pattern.xy[start:start + POINT_BLOCK]
        d2 = cdist(block, pattern.xy, "sqeuclidean")
        out[start:start + POINT_BLOCK] = np.exp(-d2 / (2 * b * b)) @ scaled / (2 * np.pi * b * b)
    return out


class BandwidthSelection(NamedTuple):
    bandwidth: float
    omega: float
    w_hat: float
    criterion: np.ndarray
    skipped: tuple[float, ...]
    degenerate: bool


def area_estimates(pattern: PointPattern, first_order: FirstOrder, b: float, shape=DEFAULT_SHAPE):
    """The two area estimators compared by the bandwidth criterion, or None if rho0 vanishes at a point.

    omega = (1/p) sum_i sum_{x in X_i} 1 / (rho0(x) f_i(x)),  w = sum_x 1 / (rho0(x) sum_i f_i(x)).
    """
    f = np.exp(first_order.log_f(pattern.xy))
    rho0 = _rho0_at_points(pattern, 1.0 / f[np.arange(pattern.n), pattern.types], b, shape)
    if not np.all(np.isfinite(rho0) & (rho0 > 0)):
        return None
    omega = float((1.0 / (rho0 * f[np.arange(pattern.n), pattern.types])).sum() / pattern.n_types)
    w_hat = float((1.0 / (rho0 * f.sum(axis=1))).sum())
    return omega, w_hat


def select_bandwidth(pattern: PointPattern, first_order: FirstOrder, grid, *, shape=DEFAULT_SHAPE) -> BandwidthSelection:
    """Grid bandwidth minimising (omega(b) - w(b))^2; with one type the criterion vanishes and the smallest b is returned."""
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ModelValueError("The bandwidth grid is empty.", token='bandwidth')
    criterion, estimates, skipped = np.full(grid.size, np.nan), {}, []
    for n, b in enumerate(grid):
        if (result := area_estimates(pattern, first_order, b, shape)) is None:
            skipped.append(float(b))
            continue
        estimates[n] = result
        criterion[n] = (result[0] - result[1]) ** 2

    if not estimates:
        raise BandwidthError("Every bandwidth in the grid gives a vanishing background estimate at some point.",
                             context={'grid': grid.tolist()})
    if skipped:
        log.warning("Skipped bandwidths %s with non-positive background estimates.", skipped)
    if pattern.n_types == 1:
        best = min(estimates)
        return BandwidthSelection(float(grid[best]), *estimates[best], criterion, tuple(skipped), True)
    best = int(np.nanargmin(criterion))
    return BandwidthSelection(float(grid[best]), *estimates[best], criterion, tuple(skipped), False)


# Pair correlation ────────────────────────────────────────────────────────────────────────
def _check_r(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ModelValueError("The r grid must be strictly positive.", token='r')
    return r


def _cross_pairs(a: np.ndarray, b: np.ndarray, rmax: float, same: bool):
    """Index pairs (u in a, v in b) within rmax in sorted order, without identical points when `same`."""
    if len(a) == 0 or len(b) == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    matrix = cKDTree(a).sparse_distance_matrix(cKDTree(b), rmax, output_type='ndarray')
    u, v = matrix['i'].astype(np.int64), matrix['j'].astype(np.int64)
    if same:
        keep = u != v
        u, v = u[keep], v[keep]
    order = np.lexsort((v, u))
    return u[order], v[order]


def nonparam_pcf(pattern: PointPattern, intensities: Sequence[ScalarField], i: int, j: int, r, bandwidth: float):
    """Translation-corrected kernel estimate of g_ij on the r grid with a Gaussian smoothing kernel of sd `bandwidth`.

    g_ij(r) = 1/(2 pi r) sum_{u in X_i, v in X_j, u != v} k_h(r - |u - v|) / (rho_i(u) rho_j(v) |W cap W_{u-v}|)
    """
    r = _check_r(r)
    if not bandwidth > 0:
        raise ModelValueError(f"PCF bandwidth must be positive, got {bandwidth}.", token='bandwidth')
    # Both orders sum over the same pairs in the same order.
    i, j = min(i, j), max(i, j)
    a, b = pattern.of_type(i), pattern.of_type(j)
    u, v = _cross_pairs(a, b, r.max() + 4 * bandwidth, i == j)
    if len(u) == 0:
        return np.zeros_like(r)

    delta = a[u] - b[v]
    distance = np.hypot(delta[:, 0], delta[:, 1])
    denominator = intensities[i].at(a[u]) * intensities[j].at(b[v]) * pattern.window.overlap_area(*delta.T)
    sums = np.array([(norm.pdf(rv, loc=distance, scale=bandwidth) / denominator).sum() for rv in r])
    return sums / (2 * np.pi * r)


def silverman_bandwidth(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float('nan')
    spread = min(values.std(ddof=1), iqr(values) / 1.34) or values.std(ddof=1)
    return float(0.9 * spread * values.size ** -0.2)


def pcf_ratio_nonparam(pattern: PointPattern, first_order: FirstOrder, numerator: tuple[int, int],
                       denominator: tuple[int, int], r, bandwidth: float | None = None) -> np.ndarray:
    """Ratio g_ij(r) / g_lk(r) from pair-type kernel regression on pair distance.

    Each ordered pair of types (i, j) at distance d enters with weight k_h(r - d) / (f_i(u) f_j(v)); the
    common normaliser of the conditional probabilities cancels in the ratio.  Missing where the
    denominator has no kernel mass.
    """
    r = _check_r(r)
    (i, j), (l, k) = numerator, denominator
    for t in (i, j, l, k):
        if not 0 <= t < pattern.n_types:
            raise ModelValueError(f"Type index {t} is out of range for p={pattern.n_types}.", token=str(t))

    f = np.exp(first_order.log_f(pattern.xy))
    index = {t: np.flatnonzero(pattern.types == t) for t in {i, j, l, k}}

    def pairs_of(s, t, rmax):
        u, v = _cross_pairs(pattern.xy[index[s]], pattern.xy[index[t]], rmax, s == t)
        u, v = index[s][u], index[t][v]
        return np.hypot(*(pattern.xy[u] - pattern.xy[v]).T), 1.0 / (f[u, s] * f[v, t])

    if bandwidth is None:
        near = np.concatenate([pairs_of(s, t, r.max())[0] for s, t in dict.fromkeys([(i, j), (l, k)])])
        bandwidth = silverman_bandwidth(near)
        if not np.isfinite(bandwidth) or bandwidth <= 0:
            return np.full_like(r, np.nan)
    rmax = r.max() + 4 * bandwidth

    def smoothed(s, t):
        distance, weight = pairs_of(s, t, rmax)
        return np.array([norm.pdf(rv, loc=distance, scale=bandwidth) @ weight for rv in r])

    top, bottom = smoothed(i, j), smoothed(l, k)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(bottom > 0, top / bottom, np.nan)


# Error measures ──────────────────────────────────────────────────────────────────────────
def scope_mask(p: int, scope: Scope) -> np.ndarray:
    i, j = np.indices((p, p))
    match scope:
        case 'within': return i == j
        case 'between': return i < j
        case 'total': return i <= j
    raise ModelValueError(f"Unknown MISE scope `{scope}`.", token=scope)


def mise(estimates, truth: Theta | np.ndarray, r, scope: Scope = 'total', *, average: bool = False) -> float:
    """Monte Carlo mean over replicates of the summed trapezoid integrals of squared curve error.

    `estimates` has shape (replicates, p, p, len(r)); `truth` is a Theta or a (p, p, len(r)) array of curves.
    With `average`, each replicate's sum is divided by the number of curves in the scope.
    """
    r = np.asarray(r, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if estimates.ndim == 3:
        estimates = estimates[None]
    if estimates.shape[0] < 1:
        raise ModelValueError("MISE needs at least one replicate.")
    target = pcf_curves(truth, r) if isinstance(truth, Theta) else np.asarray(truth, dtype=float)
    mask = scope_mask(estimates.shape[1], scope)
    integrals = trapezoid((estimates - target[None]) ** 2, r, axis=-1)      # (replicates, p, p)
    per_replicate = integrals[:, mask].sum(axis=1)
    if average:
        per_replicate = per_replicate / mask.sum()
    return float(per_replicate.mean())
