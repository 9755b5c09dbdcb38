## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

from typing import Literal
from functools import cached_property
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PatternError, ModelValueError


def _frozen(values, dtype=float) -> np.ndarray:
    """Private read-only copy, so the dataclasses below stay immutable after construction."""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


# Geometry ────────────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class Window:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise PatternError(f"Window needs x1 > x0 and y1 > y0, got ({self.x0}, {self.y0}, {self.x1}, {self.y1}).")

    @property
    def width(self) -> float: return self.x1 - self.x0
    @property
    def height(self) -> float: return self.y1 - self.y0
    @property
    def area(self) -> float: return self.width * self.height
    @property
    def shorter_side(self) -> float: return min(self.width, self.height)

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        return (xy[:, 0] >= self.x0) & (xy[:, 0] <= self.x1) & (xy[:, 1] >= self.y0) & (xy[:, 1] <= self.y1)

    def overlap_area(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        """Area of W ∩ (W + (dx, dy)), the translation edge-correction weight."""
        return np.clip(self.width - np.abs(dx), 0.0, None) * np.clip(self.height - np.abs(dy), 0.0, None)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

UNIT_SQUARE = Window(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class PointPattern:
    """Typed points in a rectangular window; types are 0-based in Python, 1-based on disk."""
    xy: np.ndarray
    types: np.ndarray
    window: Window
    n_types: int

    def __post_init__(self):
        object.__setattr__(self, 'xy', _frozen(np.reshape(self.xy, (-1, 2))))
        object.__setattr__(self, 'types', _frozen(self.types, dtype=np.int64))
        if self.n_types < 1:
            raise PatternError(f"A pattern needs at least one type, got p={self.n_types}.")
        if len(self.types) != len(self.xy):
            raise PatternError(f"Got {len(self.xy)} locations but {len(self.types)} type labels.")
        if len(self.types) and (self.types.min() < 0 or self.types.max() >= self.n_types):
            raise PatternError(f"Type labels must lie in 0..{self.n_types - 1}.")
        if len(self.xy) and not self.window.contains(self.xy).all():
            outside = int(np.flatnonzero(~self.window.contains(self.xy))[0])
            raise PatternError(f"Point #{outside} at {tuple(self.xy[outside])} lies outside the window.")

    @property
    def n(self) -> int: return len(self.xy)

    def counts(self) -> np.ndarray:
        return np.bincount(self.types, minlength=self.n_types)

    def of_type(self, i: int) -> np.ndarray:
        return self.xy[self.types == i]

    def restrict(self, types) -> "PointPattern":
        """Keep only the listed types, relabelled 0..len(types)-1 in the given order."""
        relabel = np.full(self.n_types, -1)
        relabel[list(types)] = np.arange(len(types))
        keep = relabel[self.types] >= 0
        return PointPattern(self.xy[keep], relabel[self.types[keep]], self.window, len(types))

    @classmethod
    def concatenate(cls, per_type: list[np.ndarray], window: Window) -> "PointPattern":
        xy = np.vstack([np.reshape(a, (-1, 2)) for a in per_type]) if per_type else np.empty((0, 2))
        types = np.concatenate([np.full(len(a), i) for i, a in enumerate(per_type)]) if per_type else []
        return cls(xy, types, window, len(per_type))


@dataclass(frozen=True)
class ScalarField:
    """Gridded real function over a window, `values[ix, iy]`, evaluated by nearest cell."""
    window: Window
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen(self.values))
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise PatternError(f"Field grids need shape (nx, ny) with nx, ny >= 2, got {self.values.shape}.")
        if not np.isfinite(self.values).all():
            raise PatternError("Field values must all be finite.")

    @property
    def nx(self) -> int: return self.values.shape[0]
    @property
    def ny(self) -> int: return self.values.shape[1]
    @property
    def cell_size(self) -> tuple[float, float]:
        return self.window.width / self.nx, self.window.height / self.ny
    @property
    def cell_area(self) -> float:
        dx, dy = self.cell_size
        return dx * dy

    def centers(self) -> np.ndarray:
        """Cell centres as an (nx*ny, 2) array in `values.ravel()` order."""
        dx, dy = self.cell_size
        cx = self.window.x0 + (np.arange(self.nx) + 0.5) * dx
        cy = self.window.y0 + (np.arange(self.ny) + 0.5) * dy
        gx, gy = np.meshgrid(cx, cy, indexing='ij')
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cell_index(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xy = np.atleast_2d(xy)
        dx, dy = self.cell_size
        ix = np.clip(np.floor((xy[:, 0] - self.window.x0) / dx).astype(np.int64), 0, self.nx - 1)
        iy = np.clip(np.floor((xy[:, 1] - self.window.y0) / dy).astype(np.int64), 0, self.ny - 1)
        return ix, iy

    def at(self, xy: np.ndarray) -> np.ndarray:
        return self.values[self.cell_index(xy)]

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def mapped(self, fn) -> "ScalarField":
        return ScalarField(self.window, fn(self.values))

    @classmethod
    def constant(cls, window: Window, value: float, nx: int = 128, ny: int = 128) -> "ScalarField":
        return cls(window, np.full((nx, ny), float(value)))


@dataclass(frozen=True)
class PairIndex:
    """Ordered distinct pairs within distance R; `pair_id` links each entry to its swap."""
    R: float
    first: np.ndarray
    second: np.ndarray
    type_first: np.ndarray
    type_second: np.ndarray
    distance: np.ndarray
    pair_id: np.ndarray
    n_types: int

    def __post_init__(self):
        for name in ('first', 'second', 'type_first', 'type_second', 'pair_id'):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=np.int64))
        object.__setattr__(self, 'distance', _frozen(self.distance))

    def __len__(self) -> int:
        return len(self.distance)

    @cached_property
    def buckets(self) -> dict[tuple[int, int], np.ndarray]:
        """Entry indices of M_ij for every type pair (i, j), empty buckets included."""
        code = self.type_first * self.n_types + self.type_second
        order = np.argsort(code, kind='stable')
        bounds = np.searchsorted(code[order], np.arange(self.n_types ** 2 + 1))
        p = self.n_types
        return {(c // p, c % p): order[bounds[c]:bounds[c + 1]] for c in range(p * p)}

    @cached_property
    def unordered(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(first entry of every pair_id, number of entries sharing it, position of each entry in that list).

        A pair and its swap have the same conditional type probability, so one evaluation serves both.
        """
        _, first, position, count = np.unique(self.pair_id, return_index=True, return_inverse=True,
                                              return_counts=True)
        return first, count.astype(float), position.ravel()

    def subset(self, indices) -> "PairIndex":
        indices = np.asarray(indices)
        if indices.dtype == bool:
            indices = np.flatnonzero(indices)
        return PairIndex(self.R, self.first[indices], self.second[indices], self.type_first[indices],
                         self.type_second[indices], self.distance[indices], self.pair_id[indices], self.n_types)

    @classmethod
    def empty(cls, R: float, n_types: int) -> "PairIndex":
        none = np.empty(0, dtype=np.int64)
        return cls(R, none, none, none, none, np.empty(0), none, n_types)


# Model ───────────────────────────────────────────────────────────────────────────────────
CorrelationFamily = Literal["exponential", "gaussian"]


@dataclass(frozen=True)
class CorrelationModel:
    family: CorrelationFamily
    scale: float

    def __post_init__(self):
        if self.family not in ("exponential", "gaussian"):
            raise ModelValueError(f"Unknown correlation family `{self.family}`.", token=self.family)
        if not self.scale > 0:
            raise ModelValueError(f"Correlation scale must be positive, got {self.scale}.")


BLOCKS = ('alpha', 'xi', 'sigma2', 'phi')
Block = Literal['alpha', 'xi', 'sigma2', 'phi']


@dataclass(frozen=True)
class Theta:
    """Second-order parameters: loadings `alpha` (p×q), scales `xi` (q), variances `sigma2` and scales `phi` (p)."""
    alpha: np.ndarray
    xi: np.ndarray
    sigma2: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        sigma2 = _frozen(np.atleast_1d(self.sigma2))
        p = len(sigma2)
        object.__setattr__(self, 'alpha', _frozen(np.reshape(self.alpha, (p, -1)) if p else np.empty((0, 0))))
        object.__setattr__(self, 'xi', _frozen(np.atleast_1d(self.xi)))
        object.__setattr__(self, 'sigma2', sigma2)
        object.__setattr__(self, 'phi', _frozen(np.atleast_1d(self.phi)))

        if p < 1 or len(self.phi) != p:
            raise ModelValueError(f"sigma2 and phi need one entry per type, got {len(sigma2)} and {len(self.phi)}.")
        if self.alpha.shape[1] != len(self.xi):
            raise ModelValueError(f"alpha has {self.alpha.shape[1]} columns but xi has {len(self.xi)} entries.")
        if np.any(self.xi <= 0) or np.any(self.phi <= 0):
            raise ModelValueError("Correlation scales xi and phi must be strictly positive.")
        if np.any(self.sigma2 < 0):
            raise ModelValueError("Variances sigma2 must be non-negative.")
        if not all(np.isfinite(getattr(self, b)).all() for b in BLOCKS):
            raise ModelValueError("Theta entries must be finite.")

    @property
    def p(self) -> int: return len(self.sigma2)
    @property
    def q(self) -> int: return len(self.xi)

    def block(self, name: Block) -> np.ndarray:
        return getattr(self, name)

    def with_block(self, name: Block, values) -> "Theta":
        if name == 'alpha':
            values = np.reshape(values, (self.p, self.q))
        return replace(self, **{name: values})

    def column_sums(self) -> np.ndarray:
        return self.alpha.sum(axis=0)

    def is_centered(self, tol: float = 1e-8) -> bool:
        return bool(np.all(np.abs(self.column_sums()) <= tol))

    def centered(self) -> "Theta":
        return replace(self, alpha=self.alpha - self.alpha.mean(axis=0, keepdims=True))

    def to_dict(self) -> dict:
        return {b: getattr(self, b).tolist() for b in BLOCKS}

    @classmethod
    def from_dict(cls, data: dict) -> "Theta":
        p = len(data['sigma2'])
        alpha = np.asarray(data.get('alpha') or np.empty((p, 0)), dtype=float).reshape(p, -1)
        return cls(alpha, data.get('xi') or [], data['sigma2'], data['phi'])

    @classmethod
    def independent(cls, sigma2, phi) -> "Theta":
        p = len(np.atleast_1d(sigma2))
        return cls(np.empty((p, 0)), [], sigma2, phi)


@dataclass(frozen=True)
class FirstOrder:
    """Log-linear type factors f_i(u) = exp(beta_i · (1, z(u))); column 0 of `beta` is the intercept."""
    beta: np.ndarray
    covariates: tuple[ScalarField, ...] = ()
    baseline: int | None = None

    def __post_init__(self):
        object.__setattr__(self, 'covariates', tuple(self.covariates))
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, 'beta', _frozen(beta.reshape(len(beta), -1) if beta.ndim else beta.reshape(1, 1)))
        if self.beta.shape[1] != 1 + len(self.covariates):
            raise ModelValueError(f"beta needs 1 + {len(self.covariates)} columns (intercept plus covariates), "
                                  f"got {self.beta.shape[1]}.")
        if self.baseline is not None and np.any(self.beta[self.baseline] != 0):
            raise ModelValueError(f"Baseline type {self.baseline} must have an all-zero beta row.")

    @property
    def p(self) -> int: return self.beta.shape[0]

    def design(self, xy: np.ndarray) -> np.ndarray:
        xy = np.reshape(xy, (-1, 2))
        return np.column_stack([np.ones(len(xy))] + [z.at(xy) for z in self.covariates])

    def log_f(self, xy: np.ndarray) -> np.ndarray:
        """(n, p) matrix of beta_i · z(u) at every location."""
        return self.design(xy) @ self.beta.T

    @classmethod
    def uniform(cls, p: int) -> "FirstOrder":
        return cls(np.zeros((p, 1)))


@dataclass(frozen=True)
class SimulationSpec:
    rho0: ScalarField
    first_order: FirstOrder
    theta: Theta
    seed: int
    latent_family: CorrelationFamily = "exponential"

    def __post_init__(self):
        if np.any(self.rho0.values <= 0):
            raise ModelValueError("Background intensity rho0 must be strictly positive on the grid.")
        if self.first_order.p != self.theta.p:
            raise ModelValueError(f"First order has {self.first_order.p} types but theta has {self.theta.p}.")

    @property
    def window(self) -> Window: return self.rho0.window


# Optimisation ────────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class OptimizerConfig:
    epsilon: float = 1e-5
    alpha_tol: float = 1e-10
    eta_tol: float = 1e-10
    mu: float = 1.0
    max_iter: int = 200
    inner_max_iter: int = 10_000
    shrink: float = 0.5
    armijo: float = 1e-4
    max_halvings: int = 30
    eig_floor: float = 1e-8

    def __post_init__(self):
        for name in ('epsilon', 'alpha_tol', 'eta_tol', 'mu', 'armijo', 'eig_floor'):
            if not getattr(self, name) > 0:
                raise ModelValueError(f"Optimizer setting `{name}` must be positive.", token=name)
        if not 0 < self.shrink < 1:
            raise ModelValueError("Line-search shrink factor must lie in (0, 1).", token='shrink')
        if self.max_iter < 1 or self.max_halvings < 1 or self.inner_max_iter < 1:
            raise ModelValueError("Iteration caps must be at least 1.")


@dataclass(frozen=True)
class FitResult:
    theta: Theta
    objective: float
    lam: float
    trace: tuple[float, ...]
    converged: bool
    zero_mask: np.ndarray
    iterations: int = 0
    stalled: bool = False
    frozen_types: tuple[int, ...] = ()
    inner_capped: bool = False
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'zero_mask', _frozen(self.zero_mask, dtype=bool))
        object.__setattr__(self, 'trace', tuple(float(t) for t in self.trace))

    @property
    def zero_fraction(self) -> float:
        return float(self.zero_mask.mean()) if self.zero_mask.size else 0.0
