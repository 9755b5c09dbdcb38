## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Command line front door: simulate, fit, cv, assess and bench, each driven by one scenario file.
# Exit codes: 0 success (also for a fit that did not converge), 2 config or usage error,
# 3 input/output error, 4 numerical failure.
#

import sys
import traceback
from pathlib import Path
from dataclasses import dataclass, replace

import click
import numpy as np

from .types import FirstOrder
from .errors import (CrossPCFError, ConfigParseError, ConfigValueError, PatternError, ModelValueError, ArtifactError,
                     NumericalError)
from .config import parse_config, load_config, format_config_context
from .formatting import write_without_ansi, setup_logging, format_banner, format_table
from .study import (Scenario, scenario_from_config, build_environment, simulation_spec, true_curves, fit_pattern,
                    cross_validate, assess_fit, run_bench, load_pattern, SCOPES)
from .model import simulate_mlgcp, pcf_curves
from .firstorder import estimate_beta
from .likelihood import LikelihoodContext
from . import artifacts, __version__


@dataclass(frozen=True)
class RuntimeConfig:
    verbose: int
    plain: bool
    threads: int


class StudyRunner:
    def __init__(self, config: RuntimeConfig):
        self.verbose = config.verbose
        self.plain = config.plain
        self.threads = config.threads
        self.filename, self.source = None, None

        if sys.platform == "win32":
            sys.stdout.reconfigure(encoding='utf-8', errors='replace')
            sys.stderr.reconfigure(encoding='utf-8', errors='replace')

        if self.plain:
            writer = write_without_ansi(sys.stdout.write)
            sys.stdout.write, sys.stderr.write = writer, writer
        setup_logging(self.verbose, sys.stderr)

    def _fatal_error(self, message: str, detail: str, exc_type: str = None, context: str = '', code: int = 1) -> None:
        header = detail if not exc_type else f"{detail} (Exception: \033[33m{exc_type}\033[0m)"
        print(f'\033[30;43m {message} \033[0m {header}\n{context}', file=sys.stderr)
        sys.exit(code)

    def _handle_exception(self, exc: Exception) -> None:
        name = type(exc).__name__
        if isinstance(exc, ConfigParseError):
            filename = exc.filename or self.filename
            source = self.source if filename == self.filename else None
            context = format_config_context(filename, exc.line or 1, column=exc.column, width=len(exc.token or ''),
                                            source=source)
            context += f"\n\033[90m{str(exc).replace(chr(10), ' ').replace(chr(9), ' ')}\033[0m\n"
            self._fatal_error("CONFIG ERROR.", f"Parsing `\033[97m{filename}\033[0m` caused a problem!", name, context, 2)
        elif isinstance(exc, ConfigValueError):
            context = ''
            if exc.line and exc.filename:
                source = self.source if exc.filename == self.filename else None
                context = format_config_context(exc.filename, exc.line, key=exc.key, source=source)
            self._fatal_error("CONFIG ERROR.", str(exc), name, context, 2)
        elif isinstance(exc, ArtifactError):
            where = f" (line {exc.line})" if exc.line else ''
            self._fatal_error("I/O ERROR.", f"{exc}{where}", name, '', 3)
        elif isinstance(exc, (ModelValueError, PatternError)):
            self._fatal_error("CONFIG ERROR.", str(exc), name, '', 2)
        elif isinstance(exc, NumericalError):
            tb_lines = traceback.format_exception(exc, chain=False)
            context = ''.join(tb_lines[-3:]) if self.verbose > 1 else ''
            self._fatal_error("NUMERICAL ERROR.", str(exc), name, context, 4)
        elif isinstance(exc, OSError):
            self._fatal_error("I/O ERROR.", f"{exc.strerror or exc}: `{exc.filename}`", name, '', 3)
        else:
            raise exc

    def run(self, command, *args):
        try:
            return command(*args)
        except (CrossPCFError, OSError) as exc:
            self._handle_exception(exc)

    # Inputs and outputs ──────────────────────────────────────────────────────────────────
    def scenario(self, path: str, seed: int | None) -> Scenario:
        self.filename = str(path)
        self.source = Path(path).read_text(encoding='utf-8')
        return scenario_from_config(parse_config(self.source, self.filename), seed, self.source)

    def output(self, out: str) -> Path:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        return out

    def manifest(self, out: Path, command: str, scenario: Scenario, **details) -> None:
        data = artifacts.manifest(command, scenario.source, scenario.seed, env_seed=scenario.env_seed,
                                  grid=list(scenario.grid), R=scenario.R,
                                  r={'min': float(scenario.r[0]), 'max': float(scenario.r[-1]), 'n': len(scenario.r)},
                                  config=Path(self.filename).name, **details)
        artifacts.write_json(out / 'manifest.json', data)

    # Commands ────────────────────────────────────────────────────────────────────────────
    def simulate(self, config: str, out: str, seed: int | None) -> None:
        scenario = self.scenario(config, seed)
        out = self.output(out)
        env = build_environment(scenario)
        pattern = simulate_mlgcp(simulation_spec(scenario, env))

        artifacts.write_pattern(out / 'pattern.csv', pattern)
        artifacts.write_field(out / 'rho0.csv', env.rho0)
        for name, field in zip(scenario.config.section('covariates'), env.covariates):
            artifacts.write_field(out / f'covariate_{name}.csv', field)
        artifacts.write_curves(out / 'true_curves.csv', true_curves(scenario), scenario.r)
        self.manifest(out, 'simulate', scenario, counts=pattern.counts().tolist())
        print(format_banner("SIMULATED", {'points': pattern.n, 'counts': pattern.counts(), 'output': str(out)}))

    def fit(self, pattern_path: str, config: str, out: str, seed: int | None) -> None:
        scenario = self.scenario(config, seed)
        pattern = load_pattern(pattern_path, scenario)
        out = self.output(out)
        env = build_environment(scenario)
        first_order, ctx, result = fit_pattern(scenario, pattern, env, threads=self.threads)

        artifacts.write_fit(out / 'fit.json', result, first_order, scenario.R)
        artifacts.write_curves(out / 'curves.csv', pcf_curves(result.theta, scenario.r), scenario.r)
        self.manifest(out, 'fit', scenario, q=scenario.q, **{'lambda': scenario.lam}, pairs=len(ctx.pairs))
        print(format_banner("FITTED", {'objective': result.objective, 'iterations': result.iterations,
                                       'converged': result.converged, 'zero_fraction': result.zero_fraction}))

    def cv(self, pattern_path: str, config: str, out: str, seed: int | None) -> None:
        scenario = self.scenario(config, seed)
        pattern = load_pattern(pattern_path, scenario)
        out = self.output(out)
        env = build_environment(scenario)
        first_order = estimate_beta(pattern, env.covariates, scenario.baseline)
        ctx = LikelihoodContext.build(pattern, first_order, scenario.R, self.threads)
        result = cross_validate(scenario, ctx, threads=self.threads)

        artifacts.write_cv(out, result)
        self.manifest(out, 'cv', scenario, K=scenario.cv.K, L=scenario.cv.L, pairs=len(ctx.pairs))
        print(format_table(['q', 'lambda', 'mean', 'se'], [list(row) for row in result.rows()]))
        if hasattr(result, 'q_min'):
            summary = {'q_min': result.q_min, 'q_1se': result.q_1se, 'lambda_star': result.lam_star}
        else:
            summary = {'q': result.q, 'lambda_star': result.lam_star}
        print(format_banner("SELECTED", summary))

    def assess(self, pattern_path: str, fit_path: str, config: str, out: str, seed: int | None,
               truth: str | None) -> None:
        scenario = self.scenario(config, seed)
        pattern = load_pattern(pattern_path, scenario)
        theta, data = artifacts.read_fit(fit_path)
        if theta.p != pattern.n_types:
            raise ArtifactError(f"Fit has {theta.p} types but the pattern has {pattern.n_types}.", filename=fit_path)
        out = self.output(out)
        env = build_environment(scenario)
        if 'beta' in data:
            baseline = data.get('baseline')
            first_order = FirstOrder(np.asarray(data['beta']), env.covariates,
                                     None if baseline is None else baseline - 1)
        else:
            first_order = estimate_beta(pattern, env.covariates, scenario.baseline)

        reference = None
        if truth is not None:
            reference = scenario_from_config(load_config(truth), scenario.seed)
            reference.require_truth()
        assessed = assess_fit(scenario if reference is None else _with_truth(scenario, reference), pattern, theta,
                              first_order, with_truth=reference is not None, threads=self.threads)

        rows = []
        envelope = assessed['envelope']
        for n, ((i, j), (l, k), model, estimate) in enumerate(assessed['ratios']):
            span = slice(n * len(scenario.r), (n + 1) * len(scenario.r))
            lower, upper = envelope.lower[span], envelope.upper[span]
            rows += [[i + 1, j + 1, l + 1, k + 1, *(repr(float(v)) for v in (rv, m, e, m - e, lo, hi))]
                     for rv, m, e, lo, hi in zip(scenario.r, model, estimate, lower, upper)]
        # lower and upper bound the difference column
        artifacts.write_table(out / 'ratios.csv', ['i', 'j', 'l', 'k', 'r', 'model', 'nonparametric', 'difference',
                                                  'lower', 'upper'], rows)
        artifacts.write_json(out / 'assess.json', assessed['report'])
        self.manifest(out, 'assess', scenario, n_sim=scenario.assess.n_sim, level=scenario.assess.level)
        summary = {'p_value': envelope.p_value, 'rejected': envelope.rejected}
        summary |= {f'mise_{s}': v for s, v in assessed['report'].get('mise', {}).items()}
        print(format_banner("ASSESSED", summary))

    def bench(self, config: str, out: str, seed: int | None, replicates: int | None, methods: tuple[str, ...]) -> None:
        scenario = self.scenario(config, seed)
        out = self.output(out)
        result = run_bench(scenario, replicates, methods or None, threads=self.threads)

        header = ['method', *(f'mise_{s}' for s in SCOPES), 'zero_fraction', 'replicates']
        artifacts.write_table(out / 'bench.csv', header, result.table())
        artifacts.write_table(out / 'replicates.csv', ['seed', 'method', *(f'mise_{s}' for s in SCOPES)],
                              [[rep.seed, m, *(rep.mise[m][s] for s in SCOPES)]
                               for rep in result.replicates for m in result.methods])
        artifacts.write_json(out / 'bench.json', result.to_dict())
        self.manifest(out, 'bench', scenario, replicates=len(result.replicates), methods=list(result.methods),
                      replicate_seeds=[rep.seed for rep in result.replicates])
        print(format_table(header, result.table()))


def _with_truth(scenario: Scenario, reference: Scenario) -> Scenario:
    return replace(scenario, truth=reference.truth, gamma=reference.gamma, latent_family=reference.latent_family)


_CONFIG = click.option('--config', '-c', 'config', required=True, type=click.Path(exists=True, dir_okay=False),
                       help='Scenario file.')
_OUT = click.option('--out', '-o', 'out', required=True, type=click.Path(file_okay=False), help='Output directory.')
_SEED = click.option('--seed', type=click.IntRange(min=0), default=None, help='Overrides the `seed` of the scenario.')
_PATTERN = click.argument('pattern', type=click.Path(exists=True, dir_okay=False))


@click.group()
@click.option('--verbose', '-v', default=0, count=True, help='Log progress (-v) or every iteration (-vv).')
@click.option('--plain', '-p', is_flag=True, help='Strip ANSI color codes and redirect stderr to stdout.')
@click.option('--threads', '-t', default=1, type=click.IntRange(min=1), help='Worker threads for pairs, folds and replicates.')
@click.version_option(version=__version__, prog_name='crosspcf')
@click.pass_context
def cli(ctx: click.Context, verbose: int, plain: bool, threads: int) -> None:
    ctx.ensure_object(dict)
    ctx.obj['config'] = RuntimeConfig(verbose=verbose, plain=plain, threads=threads)


@cli.command('simulate')
@_CONFIG
@_OUT
@_SEED
@click.pass_context
def simulate(ctx: click.Context, config: str, out: str, seed: int | None) -> None:
    """Simulate a multivariate LGCP pattern with its background, covariates and true curves."""
    runner = StudyRunner(ctx.obj['config'])
    runner.run(runner.simulate, config, out, seed)


@cli.command('fit')
@_PATTERN
@_CONFIG
@_OUT
@_SEED
@click.pass_context
def fit(ctx: click.Context, pattern: str, config: str, out: str, seed: int | None) -> None:
    """Fit the second-order model with the q and lambda of the `fit` section."""
    runner = StudyRunner(ctx.obj['config'])
    runner.run(runner.fit, pattern, config, out, seed)


@cli.command('cv')
@_PATTERN
@_CONFIG
@_OUT
@_SEED
@click.pass_context
def cv(ctx: click.Context, pattern: str, config: str, out: str, seed: int | None) -> None:
    """Cross validate q and lambda over the grids of the `cv` section."""
    runner = StudyRunner(ctx.obj['config'])
    runner.run(runner.cv, pattern, config, out, seed)


@cli.command('assess')
@_PATTERN
@click.option('--fit', 'fit_path', required=True, type=click.Path(exists=True, dir_okay=False), help='Fit JSON.')
@_CONFIG
@_OUT
@_SEED
@click.option('--truth', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Scenario with the true parameters, enables MISE.')
@click.pass_context
def assess(ctx: click.Context, pattern: str, fit_path: str, config: str, out: str, seed: int | None,
           truth: str | None) -> None:
    """Compare model and non-parametric PCF ratios with a global envelope test."""
    runner = StudyRunner(ctx.obj['config'])
    runner.run(runner.assess, pattern, fit_path, config, out, seed, truth)


@cli.command('bench')
@_CONFIG
@_OUT
@_SEED
@click.option('--replicates', '-n', type=click.IntRange(min=1), default=None, help='Overrides `bench.replicates`.')
@click.option('--method', '-m', 'methods', multiple=True,
              type=click.Choice(['semiparametric', 'semiparametric_1se', 'semiparametric_lambda', 'simple', 'diggle']),
              help='Methods to compare, repeatable; defaults to `bench.methods`.')
@click.pass_context
def bench(ctx: click.Context, config: str, out: str, seed: int | None, replicates: int | None,
          methods: tuple[str, ...]) -> None:
    """Replicated simulation study reporting MISE per method and scope."""
    runner = StudyRunner(ctx.obj['config'])
    runner.run(runner.bench, config, out, seed, replicates, methods)


def main(argv: list[str] | None = None) -> None:
    cli.main(args=argv, prog_name='crosspcf')


if __name__ == "__main__":
    main()
