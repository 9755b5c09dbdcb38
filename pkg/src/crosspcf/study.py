## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Scenarios tie a config file to the library: the window and grids, the simulation truth
# (background, covariates, type and latent parameters) and the settings of the fit, cv,
# assess and bench stages.  Only `window` and `seed` are always needed; the other sections
# are checked when a command asks for them.
#

import logging
from typing import Any, NamedTuple
from dataclasses import dataclass, field, fields
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .types import (Window, ScalarField, PointPattern, Theta, FirstOrder, SimulationSpec, OptimizerConfig,
                    CorrelationModel, FitResult)
from .config import Config, resolve_path
from .fields import simulate_grf
from .model import lognormal_background, simulate_mlgcp, pcf_curves, pcf_ratio
from .firstorder import estimate_beta
from .likelihood import LikelihoodContext
from .optimizer import fit
from .selection import select_q_lambda, select_lambda
from .nonparametric import (select_bandwidth, estimate_rho0, simple_intensities, diggle_intensities, nonparam_pcf,
                            pcf_ratio_nonparam, mise)
from .envelope import envelope_test
from .errors import ConfigValueError, ArtifactError, ModelValueError
from . import artifacts

log = logging.getLogger(__name__)

METHODS = ('semiparametric', 'semiparametric_1se', 'semiparametric_lambda', 'simple', 'diggle')
SCOPES = ('total', 'within', 'between')
DEFAULT_GRID = (128, 128)
DEFAULT_Q_GRID = (0, 1, 2, 3, 4, 5)
DEFAULT_LAMBDA_GRID = (10.0, 8.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.25, 0.0)
# Relative to the shorter window side.
DEFAULT_BANDWIDTHS = (0.025, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3)
DEFAULT_R = 0.1
DEFAULT_R_GRID = (0.01, 0.1, 46)


# Reading values ──────────────────────────────────────────────────────────────────────────
_REQUIRED = object()


def _value(config: Config, path: str, default=_REQUIRED) -> Any:
    return config.require(path) if default is _REQUIRED else config.get(path, default)


def _number(config: Config, path: str, default=_REQUIRED, *, integer=False, positive=False,
            non_negative=False) -> float | int:
    value = _value(config, path, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise config.invalid(path, f"expected a number, got `{value}`")
    if integer and value != int(value):
        raise config.invalid(path, f"expected an integer, got {value}")
    if positive and not value > 0:
        raise config.invalid(path, "must be positive")
    if non_negative and value < 0:
        raise config.invalid(path, "must be non-negative")
    return int(value) if integer else float(value)


def _numbers(config: Config, path: str, default=_REQUIRED, *, length: int | None = None, integer=False,
             positive=False, non_negative=False) -> tuple:
    value = _value(config, path, default)
    values = value if isinstance(value, (list, tuple)) else [value]
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
        raise config.invalid(path, "expected a list of numbers")
    if length is not None and len(values) != length:
        raise config.invalid(path, f"expected {length} entries, got {len(values)}")
    if integer and any(v != int(v) for v in values):
        raise config.invalid(path, "expected integers")
    if positive and any(not v > 0 for v in values):
        raise config.invalid(path, "entries must be positive")
    if non_negative and any(v < 0 for v in values):
        raise config.invalid(path, "entries must be non-negative")
    return tuple(int(v) for v in values) if integer else tuple(float(v) for v in values)


def _matrix(config: Config, path: str, rows: int) -> np.ndarray:
    value = config.require(path)
    if not isinstance(value, list) or len(value) != rows:
        raise config.invalid(path, f"expected {rows} rows")
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return np.asarray(value, dtype=float)[:, None]
    if any(not isinstance(row, list) for row in value) or len({len(row) for row in value}) != 1:
        raise config.invalid(path, "rows must be lists of equal length")
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise config.invalid(path, "expected numbers") from None


def _word(config: Config, path: str, choices: tuple[str, ...], default: str) -> str:
    value = config.get(path, default)
    if value not in choices:
        raise config.invalid(path, f"expected one of {', '.join(choices)}, got `{value}`")
    return value


# Scenario ────────────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class CVSettings:
    qs: tuple[int, ...] = DEFAULT_Q_GRID
    lams: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    K: int = 5
    L: int = 10
    fixed_q: int | None = None


@dataclass(frozen=True)
class AssessSettings:
    ratio_pairs: tuple | None
    rho0_bandwidths: tuple[float, ...]
    n_sim: int = 99
    level: float = 0.05
    pcf_bandwidth: float | None = None
    refit: bool = False


@dataclass(frozen=True)
class BenchSettings:
    rho0_bandwidths: tuple[float, ...]
    replicates: int = 20
    methods: tuple[str, ...] = METHODS
    pcf_bandwidth: float | None = None
    intensity_bandwidth: float | None = None


@dataclass(frozen=True)
class Scenario:
    config: Config
    seed: int
    env_seed: int
    window: Window
    grid: tuple[int, int]
    R: float
    r: np.ndarray
    q: int
    lam: float
    baseline: int | None
    optimizer: OptimizerConfig
    cv: CVSettings
    assess: AssessSettings
    bench: BenchSettings
    truth: Theta | None = None
    gamma: np.ndarray | None = None
    latent_family: str = 'exponential'
    source: str = field(default='', repr=False)

    @property
    def p(self) -> int | None:
        return None if self.truth is None else self.truth.p

    def require_truth(self) -> Theta:
        if self.truth is None:
            raise ConfigValueError("This command needs the simulation truth: a `types { ... }` section.",
                                   key='types', filename=self.config.filename)
        return self.truth


def _truth(config: Config) -> tuple[Theta | None, np.ndarray | None, str]:
    types = config.section('types')
    if not types:
        return None, None, 'exponential'
    if 'sigma' in types and 'sigma2' in types:
        raise config.invalid('types', "give either `sigma` or `sigma2`, not both")
    if 'sigma' in types:
        sigma2 = np.square(_numbers(types, 'sigma', non_negative=True))
    else:
        sigma2 = np.asarray(_numbers(types, 'sigma2', non_negative=True))
    p = len(sigma2)
    phi = _numbers(types, 'phi', length=p, positive=True)
    gamma = _matrix(types, 'gamma', p) if 'gamma' in types else np.zeros((p, 1))

    latent = config.section('latent')
    family = _word(latent, 'family', ('exponential', 'gaussian'), 'exponential')
    if 'alpha' in latent:
        alpha = _matrix(latent, 'alpha', p)
        xi = _numbers(latent, 'xi', length=alpha.shape[1], positive=True)
    else:
        alpha, xi = np.empty((p, 0)), ()
    theta = Theta(alpha, xi, sigma2, phi)
    if not theta.is_centered():
        raise latent.invalid('alpha', "every column must sum to zero")
    return theta, gamma, family


def default_ratio_pairs(p: int) -> tuple:
    """g_ij / g_jj for every i < j."""
    return tuple(((i, j), (j, j)) for i in range(p) for j in range(i + 1, p))


def _ratio_pairs(config: Config, path: str) -> tuple | None:
    value = config.get(path)
    if value is None:
        return None
    try:
        pairs = tuple(((int(a) - 1, int(b) - 1), (int(c) - 1, int(d) - 1)) for (a, b), (c, d) in value)
    except (TypeError, ValueError):
        raise config.invalid(path, "expected a list of [[i, j], [l, k]] type pairs") from None
    if any(min(t) < 0 for pair in pairs for t in pair):
        raise config.invalid(path, "type labels start at 1")
    return pairs


def scenario_from_config(config: Config, seed: int | None = None, source: str = '') -> Scenario:
    seed = seed if seed is not None else _number(config, 'seed', integer=True, non_negative=True)
    env_seed = _number(config, 'env_seed', seed, integer=True, non_negative=True)
    corners = _numbers(config, 'window', (0.0, 0.0, 1.0, 1.0), length=4)
    try:
        window = Window(*corners)
    except ValueError as exc:
        raise config.invalid('window', str(exc).rstrip('.')) from None
    side = window.shorter_side
    grid = _numbers(config, 'grid', DEFAULT_GRID, length=2, integer=True)
    if min(grid) < 2:
        raise config.invalid('grid', "needs at least two cells per axis")
    R = _number(config, 'R', DEFAULT_R * side, positive=True)

    rs = config.section('r')
    r_min = _number(rs, 'min', DEFAULT_R_GRID[0] * side, positive=True)
    r_max = _number(rs, 'max', DEFAULT_R_GRID[1] * side, positive=True)
    n_r = _number(rs, 'n', DEFAULT_R_GRID[2], integer=True, positive=True)
    if r_max <= r_min:
        raise rs.invalid('max', "must exceed `r.min`")

    truth, gamma, family = _truth(config)

    fits = config.section('fit')
    q = _number(fits, 'q', 0, integer=True, non_negative=True)
    lam = _number(fits, 'lambda', 0.0, non_negative=True)
    baseline = fits.get('baseline')
    if baseline is not None:
        baseline = _number(fits, 'baseline', integer=True, positive=True) - 1

    opt = config.section('optimizer')
    defaults = OptimizerConfig()
    try:
        optimizer = OptimizerConfig(**{
            name: (_number(opt, name, getattr(defaults, name), integer=isinstance(getattr(defaults, name), int)))
            for name in (f.name for f in fields(defaults))})
    except ModelValueError as exc:
        raise opt.invalid(exc.token or 'optimizer', str(exc).rstrip('.')) from None

    cvs = config.section('cv')
    cv = CVSettings(_numbers(cvs, 'q', DEFAULT_Q_GRID, integer=True, non_negative=True),
                    _numbers(cvs, 'lambda', DEFAULT_LAMBDA_GRID, non_negative=True),
                    _number(cvs, 'K', 5, integer=True), _number(cvs, 'L', 10, integer=True, positive=True),
                    _number(cvs, 'fixed_q', integer=True, non_negative=True) if 'fixed_q' in cvs else None)
    if not 2 <= cv.K <= 10:
        raise cvs.invalid('K', "must lie in 2..10")
    if not cv.qs:
        raise cvs.invalid('q', "the q grid is empty")
    if 0.0 not in cv.lams and cv.fixed_q is None:
        raise cvs.invalid('lambda', "the lambda grid must contain 0")

    bandwidths = tuple(b * side for b in DEFAULT_BANDWIDTHS)
    asx = config.section('assess')
    assess = AssessSettings(_ratio_pairs(asx, 'ratios'),
                            _numbers(asx, 'rho0_bandwidth', bandwidths, positive=True),
                            _number(asx, 'n_sim', 99, integer=True, positive=True),
                            _number(asx, 'level', 0.05, positive=True),
                            _number(asx, 'pcf_bandwidth', positive=True) if 'pcf_bandwidth' in asx else None,
                            bool(asx.get('refit', False)))

    bx = config.section('bench')
    methods = tuple(bx.get('methods', METHODS))
    if unknown := [m for m in methods if m not in METHODS]:
        raise bx.invalid('methods', f"unknown method(s) {', '.join(map(str, unknown))}")
    bench = BenchSettings(_numbers(bx, 'rho0_bandwidth', bandwidths, positive=True),
                          _number(bx, 'replicates', 20, integer=True, positive=True), methods,
                          _number(bx, 'pcf_bandwidth', positive=True) if 'pcf_bandwidth' in bx else None,
                          _number(bx, 'intensity_bandwidth', positive=True) if 'intensity_bandwidth' in bx else None)

    return Scenario(config, seed, env_seed, window, grid, R, np.linspace(r_min, r_max, n_r), q, lam, baseline,
                    optimizer, cv, assess, bench, truth, gamma, family, source)


# Environment ─────────────────────────────────────────────────────────────────────────────
class Environment(NamedTuple):
    rho0: ScalarField
    covariates: tuple[ScalarField, ...]


def _raster(config: Config, path: str, window: Window) -> ScalarField:
    raster = artifacts.read_field(resolve_path(config, config.require(path)))
    if raster.window != window:
        raise config.invalid(path, f"raster window {raster.window.as_tuple()} differs from the scenario window")
    return raster


def _background(scenario: Scenario, seed) -> ScalarField:
    config, window, (nx, ny) = scenario.config.section('background'), scenario.window, scenario.grid
    match _word(config, 'kind', ('lognormal', 'constant', 'raster'), 'lognormal'):
        case 'lognormal':
            model = CorrelationModel(_word(config, 'family', ('exponential', 'gaussian'), 'gaussian'),
                                     _number(config, 'scale', 0.2 * window.shorter_side, positive=True))
            return lognormal_background(window, nx, ny, seed, level=_number(config, 'level', 400.0, positive=True),
                                        spread=_number(config, 'spread', 0.5, non_negative=True), model=model)
        case 'constant':
            return ScalarField.constant(window, _number(config, 'level', 400.0, positive=True), nx, ny)
        case 'raster':
            return _raster(config, 'path', window)


def _covariate(scenario: Scenario, name: str, seed) -> ScalarField:
    config, window, (nx, ny) = scenario.config.section(f'covariates.{name}'), scenario.window, scenario.grid
    match _word(config, 'kind', ('grf', 'raster'), 'grf'):
        case 'grf':
            model = CorrelationModel(_word(config, 'family', ('exponential', 'gaussian'), 'exponential'),
                                     _number(config, 'scale', 0.05 * window.shorter_side, positive=True))
            return simulate_grf(window, nx, ny, model, seed)
        case 'raster':
            return _raster(config, 'path', window)


def build_environment(scenario: Scenario) -> Environment:
    """Background and covariate fields, shared by every pattern simulated from the scenario."""
    names = list(scenario.config.section('covariates'))
    seeds = np.random.SeedSequence([scenario.env_seed, 1]).spawn(1 + len(names))
    covariates = tuple(_covariate(scenario, name, seeds[1 + n]) for n, name in enumerate(names))
    return Environment(_background(scenario, seeds[0]), covariates)


def simulation_spec(scenario: Scenario, env: Environment, seed: int | None = None) -> SimulationSpec:
    theta = scenario.require_truth()
    gamma = scenario.gamma
    if gamma.shape[1] != 1 + len(env.covariates):
        raise scenario.config.invalid('types.gamma', f"needs 1 + {len(env.covariates)} columns "
                                                      "(intercept plus one per covariate)")
    first_order = FirstOrder(gamma, env.covariates)
    return SimulationSpec(env.rho0, first_order, theta, scenario.seed if seed is None else seed, scenario.latent_family)


def true_curves(scenario: Scenario) -> np.ndarray:
    return pcf_curves(scenario.require_truth(), scenario.r, scenario.latent_family)


def replicate_seed(seed: int, n: int) -> int:
    return int(np.random.SeedSequence([seed, n]).generate_state(1)[0])


# Stages ──────────────────────────────────────────────────────────────────────────────────
def fit_pattern(scenario: Scenario, pattern: PointPattern, env: Environment, *, threads: int = 1,
                q: int | None = None, lam: float | None = None):
    """First-order contrasts, pair enumeration and the block descent fit: (first_order, context, result)."""
    first_order = estimate_beta(pattern, env.covariates, scenario.baseline)
    ctx = LikelihoodContext.build(pattern, first_order, scenario.R, threads)
    q = scenario.q if q is None else q
    lam = scenario.lam if lam is None else lam
    result = fit(ctx, q, config=scenario.optimizer, lam=lam, rng_seed=scenario.seed)
    log.info("Fit q=%d lambda=%g: objective %.8g after %d iterations (converged=%s).",
             q, lam, result.objective, result.iterations, result.converged)
    return first_order, ctx, result


def cross_validate(scenario: Scenario, ctx: LikelihoodContext, *, threads: int = 1):
    """Two-step (q, lambda) selection, or only the lambda path when `cv.fixed_q` is set."""
    cv = scenario.cv
    if cv.fixed_q is not None:
        warm = fit(ctx, cv.fixed_q, config=scenario.optimizer, rng_seed=scenario.seed)
        return select_lambda(ctx, cv.fixed_q, cv.lams, cv.K, cv.L, scenario.seed, config=scenario.optimizer,
                             warm=warm, threads=threads)
    return select_q_lambda(ctx, cv.qs, cv.lams, cv.K, cv.L, scenario.seed, config=scenario.optimizer,
                           threads=threads)


def assess_fit(scenario: Scenario, pattern: PointPattern, theta: Theta, first_order: FirstOrder, *,
               with_truth: bool = False, threads: int = 1) -> dict:
    """Ratio curves, the global envelope test and, against the scenario truth, MISE per scope."""
    settings = scenario.assess
    p = pattern.n_types
    ratio_pairs = settings.ratio_pairs or default_ratio_pairs(p)
    if any(not 0 <= t < p for pair in ratio_pairs for ij in pair for t in ij):
        raise scenario.config.invalid('assess.ratios', f"type labels must lie in 1..{p}")
    if not ratio_pairs:
        raise scenario.config.invalid('assess.ratios', "no ratios to assess")

    chosen = select_bandwidth(pattern, first_order, settings.rho0_bandwidths, shape=scenario.grid)
    rho0 = estimate_rho0(pattern, first_order, chosen.bandwidth, shape=scenario.grid)
    envelope = envelope_test(pattern, theta, first_order, rho0, ratio_pairs, scenario.r,
                             n_sim=settings.n_sim, level=settings.level, rng_seed=scenario.seed,
                             bandwidth=settings.pcf_bandwidth, refit=settings.refit, R=scenario.R,
                             config=scenario.optimizer, threads=threads)

    ratios = []
    for (i, j), (l, k) in ratio_pairs:
        model = pcf_ratio(theta, (i, j), (l, k), scenario.r)
        estimate = pcf_ratio_nonparam(pattern, first_order, (i, j), (l, k), scenario.r, settings.pcf_bandwidth)
        ratios.append(((i, j), (l, k), model, estimate))

    report = {'envelope': envelope.to_dict(),
              'rho0_bandwidth': {'bandwidth': chosen.bandwidth, 'omega': chosen.omega, 'w_hat': chosen.w_hat,
                                 'degenerate': chosen.degenerate, 'skipped': list(chosen.skipped)}}
    if with_truth:
        truth = true_curves(scenario)
        estimate = pcf_curves(theta, scenario.r)
        report['mise'] = {scope: mise(estimate[None], truth, scenario.r, scope) for scope in SCOPES}
    return {'report': report, 'ratios': ratios, 'envelope': envelope}


# Bench ───────────────────────────────────────────────────────────────────────────────────
def nonparametric_curves(pattern: PointPattern, intensities, r, bandwidth: float | None) -> np.ndarray:
    """(p, p, len(r)) kernel PCF estimates; the smoothing bandwidth defaults to 0.15 / sqrt(pooled intensity)."""
    p = pattern.n_types
    curves = np.empty((p, p, len(r)))
    for i in range(p):
        for j in range(i, p):
            h = bandwidth
            if h is None:
                pooled = (np.sum(pattern.types == i) + np.sum(pattern.types == j)) / pattern.window.area
                h = 0.15 / np.sqrt(max(pooled, 1.0 / pattern.window.area))
            curves[i, j] = curves[j, i] = nonparam_pcf(pattern, intensities, i, j, r, h)
    return curves


class ReplicateResult(NamedTuple):
    seed: int
    counts: tuple[int, ...]
    mise: dict               # method -> scope -> value
    zero_fraction: dict      # method -> share of exact zeros in alpha
    q_min: int | None
    q_1se: int | None
    lam_star: float | None
    rho0_bandwidth: float | None


def run_replicate(scenario: Scenario, seed: int, methods=METHODS, env: Environment | None = None) -> ReplicateResult:
    """Simulate one pattern from the scenario truth and score every requested method by MISE."""
    env = env or build_environment(scenario)
    pattern = simulate_mlgcp(simulation_spec(scenario, env, seed))
    truth = true_curves(scenario)
    first_order = estimate_beta(pattern, env.covariates, scenario.baseline)
    r = scenario.r
    estimates, zeros = {}, {}
    q_min = q_1se = lam_star = b = None

    if any(m.startswith('semiparametric') for m in methods):
        ctx = LikelihoodContext.build(pattern, first_order, scenario.R)
        cv = scenario.cv
        selected = select_q_lambda(ctx, cv.qs, cv.lams, cv.K, cv.L, seed, config=scenario.optimizer)
        q_min, q_1se, lam_star = selected.q_min, selected.q_1se, selected.lam_star
        fits: dict[tuple[int, float], FitResult] = {}

        def fitted(q, lam):
            if (q, lam) not in fits:
                init = fitted(q, 0.0).theta if lam > 0 else None
                fits[(q, lam)] = fit(ctx, q, config=scenario.optimizer, lam=lam, rng_seed=seed, init=init)
            return fits[(q, lam)]

        for method, (q, lam) in {'semiparametric': (q_min, 0.0), 'semiparametric_1se': (q_1se, 0.0),
                                 'semiparametric_lambda': (q_min, lam_star)}.items():
            if method in methods:
                result = fitted(q, lam)
                estimates[method], zeros[method] = pcf_curves(result.theta, r), result.zero_fraction

    if 'simple' in methods or 'diggle' in methods:
        b = select_bandwidth(pattern, first_order, scenario.bench.rho0_bandwidths, shape=scenario.grid).bandwidth
        if 'simple' in methods:
            intensities = simple_intensities(pattern, scenario.bench.intensity_bandwidth or b, shape=scenario.grid)
            estimates['simple'] = nonparametric_curves(pattern, intensities, r, scenario.bench.pcf_bandwidth)
        if 'diggle' in methods:
            intensities = diggle_intensities(pattern, first_order, b, shape=scenario.grid)
            estimates['diggle'] = nonparametric_curves(pattern, intensities, r, scenario.bench.pcf_bandwidth)

    scores = {m: {scope: mise(estimates[m][None], truth, r, scope) for scope in SCOPES} for m in methods}
    log.info("Replicate %d: counts %s, q_min=%s, q_1se=%s, lambda*=%s.", seed, pattern.counts().tolist(),
             q_min, q_1se, lam_star)
    return ReplicateResult(seed, tuple(int(c) for c in pattern.counts()), scores, zeros, q_min, q_1se, lam_star, b)


@dataclass(frozen=True)
class BenchResult:
    methods: tuple[str, ...]
    replicates: tuple[ReplicateResult, ...]

    def table(self) -> list[list]:
        """One row per method: mean MISE per scope, mean zero fraction and the replicate count."""
        rows = []
        for m in self.methods:
            values = [np.mean([rep.mise[m][scope] for rep in self.replicates]) for scope in SCOPES]
            zeros = [rep.zero_fraction[m] for rep in self.replicates if m in rep.zero_fraction]
            rows.append([m, *map(float, values), float(np.mean(zeros)) if zeros else float('nan'),
                         len(self.replicates)])
        return rows

    def selections(self) -> dict:
        def histogram(values):
            kept = [v for v in values if v is not None]
            return {str(v): kept.count(v) for v in sorted(set(kept))}
        return {'q_min': histogram([rep.q_min for rep in self.replicates]),
                'q_1se': histogram([rep.q_1se for rep in self.replicates]),
                'lambda_star': histogram([rep.lam_star for rep in self.replicates])}

    def to_dict(self) -> dict:
        header = ['method', *(f'mise_{s}' for s in SCOPES), 'zero_fraction', 'replicates']
        return {
            'table': [dict(zip(header, (v if not isinstance(v, float) or np.isfinite(v) else None for v in row)))
                      for row in self.table()],
            'selections': self.selections(),
            'replicates': [{'seed': rep.seed, 'counts': list(rep.counts), 'mise': rep.mise,
                            'zero_fraction': rep.zero_fraction, 'q_min': rep.q_min, 'q_1se': rep.q_1se,
                            'lambda_star': rep.lam_star, 'rho0_bandwidth': rep.rho0_bandwidth}
                           for rep in self.replicates],
        }


def run_bench(scenario: Scenario, replicates: int | None = None, methods=None, *, threads: int = 1) -> BenchResult:
    """Replicated study on one environment; replicate n uses a seed derived from (seed, n)."""
    replicates = replicates or scenario.bench.replicates
    methods = tuple(methods or scenario.bench.methods)
    env = build_environment(scenario)
    seeds = [replicate_seed(scenario.seed, n) for n in range(replicates)]

    def job(seed): return run_replicate(scenario, seed, methods, env)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = tuple(pool.map(job, seeds))
    else:
        results = tuple(job(seed) for seed in seeds)
    return BenchResult(methods, results)


def load_pattern(path, scenario: Scenario | None = None) -> PointPattern:
    pattern = artifacts.read_pattern(path)
    if scenario is not None and scenario.p is not None and pattern.n_types != scenario.p:
        raise ArtifactError(f"Pattern has {pattern.n_types} types but the scenario declares {scenario.p}.",
                            filename=str(path))
    return pattern
