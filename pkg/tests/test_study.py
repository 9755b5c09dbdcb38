## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

from pathlib import Path

import numpy as np
import pytest

from crosspcf.config import parse_config, load_config
from crosspcf.model import pcf_curves
from crosspcf.study import (SCOPES, scenario_from_config, build_environment, simulation_spec, true_curves,
                            replicate_seed, default_ratio_pairs, run_replicate, run_bench, load_pattern)
from crosspcf.errors import ConfigValueError, ArtifactError
from crosspcf import artifacts

from oracles import uniform_pattern


SMALL = """\
seed = 7
env_seed = 11
grid = [32, 32]
R = 0.1
r { min = 0.02  max = 0.1  n = 5 }
background { kind = "constant"  level = 120 }
covariates { z { kind = "grf"  scale = 0.2 } }
types {
  gamma = [[0.2, 0.3], [0, 0]]
  sigma = [0.5, 0.5]
  phi = [0.1, 0.1]
}
latent { alpha = [[0.4], [-0.4]]  xi = [0.12] }
optimizer { max_iter = 8 }
cv { q = [0, 1]  lambda = [0]  K = 2  L = 1 }
bench { replicates = 2  methods = ["semiparametric", "simple", "diggle"] }
"""


def repo_root() -> Path:
    return Path(__file__).resolve().parents[1]


def _scenario(source: str = SMALL, seed: int | None = None):
    """Helper: scenario parsed from inline source."""
    return scenario_from_config(parse_config(source, filename="<test>"), seed, source)


def test_bundled_scenario_reads_the_truth():
    scenario = scenario_from_config(load_config(repo_root() / "scenarios" / "independent.conf"))
    assert scenario.seed == 1 and scenario.env_seed == 1
    assert scenario.p == 5
    assert scenario.truth.q == 0
    assert np.allclose(scenario.truth.sigma2, 0.5041)
    assert scenario.latent_family == 'gaussian'
    assert scenario.assess.ratio_pairs == (((0, 1), (1, 1)), ((0, 2), (2, 2)))
    assert len(scenario.r) == 46
    assert scenario.cv.lams[-1] == 0.0


def test_every_bundled_scenario_parses():
    for path in sorted((repo_root() / "scenarios").glob("*.conf")):
        scenario = scenario_from_config(load_config(path))
        assert scenario.truth.is_centered()


def test_seed_override_keeps_the_environment_seed():
    scenario = _scenario(seed=99)
    assert scenario.seed == 99
    assert scenario.env_seed == 11


def test_missing_seed_is_reported():
    with pytest.raises(ConfigValueError) as exc:
        _scenario("R = 0.1\n")
    assert exc.value.key == 'seed'
    assert _scenario("R = 0.1\n", seed=3).truth is None


@pytest.mark.parametrize("source, key", [
    ("seed = 1\ntypes { sigma = [1, 1]  phi = [0.1, 0.1] }\nlatent { alpha = [[1], [0.5]]  xi = [0.1] }\n", 'latent.alpha'),
    ("seed = 1\ncv { K = 1 }\n", 'cv.K'),
    ("seed = 1\ncv { lambda = [1, 0.5] }\n", 'cv.lambda'),
    ("seed = 1\nbench { methods = [\"kriging\"] }\n", 'bench.methods'),
    ("seed = 1\nwindow = [1, 0, 0, 1]\n", 'window'),
    ("seed = 1\nr { min = 0.1  max = 0.05 }\n", 'r.max'),
    ("seed = 1\noptimizer { shrink = 2 }\n", 'optimizer.shrink'),
])
def test_invalid_settings_name_their_key(source, key):
    with pytest.raises(ConfigValueError) as exc:
        _scenario(source)
    assert exc.value.key == key
    assert exc.value.line is not None


def test_true_curves_follow_the_latent_family():
    scenario = scenario_from_config(load_config(repo_root() / "scenarios" / "two_fields.conf"))
    curves = true_curves(scenario)
    assert curves.shape == (5, 5, 46)
    assert np.array_equal(curves, pcf_curves(scenario.truth, scenario.r, 'gaussian'))
    assert curves[0, 1, 0] > 1 > curves[0, 2, 0]
    assert np.allclose(curves, curves.transpose(1, 0, 2))


def test_environment_depends_only_on_env_seed():
    first = build_environment(_scenario(seed=1))
    second = build_environment(_scenario(seed=2))
    assert np.array_equal(first.rho0.values, second.rho0.values)
    assert np.array_equal(first.covariates[0].values, second.covariates[0].values)
    assert np.all(first.rho0.values == 120.0)


def test_simulation_spec_checks_gamma_columns():
    scenario = _scenario(SMALL.replace('covariates { z { kind = "grf"  scale = 0.2 } }\n', ''))
    with pytest.raises(ConfigValueError) as exc:
        simulation_spec(scenario, build_environment(scenario))
    assert exc.value.key == 'types.gamma'


def test_replicate_seeds_are_stable_and_distinct():
    seeds = [replicate_seed(7, n) for n in range(5)]
    assert seeds == [replicate_seed(7, n) for n in range(5)]
    assert len(set(seeds)) == 5
    assert replicate_seed(8, 0) != seeds[0]


def test_default_ratio_pairs():
    assert default_ratio_pairs(3) == (((0, 1), (1, 1)), ((0, 2), (2, 2)), ((1, 2), (2, 2)))
    assert default_ratio_pairs(1) == ()


def test_one_replicate_scores_every_method():
    scenario = _scenario()
    result = run_replicate(scenario, 5, ('semiparametric', 'simple', 'diggle'))
    assert set(result.mise) == {'semiparametric', 'simple', 'diggle'}
    assert all(set(scores) == set(SCOPES) for scores in result.mise.values())
    assert all(np.isfinite(result.mise['semiparametric'][scope]) for scope in SCOPES)
    assert result.q_min in (0, 1) and result.lam_star == 0.0
    assert result.rho0_bandwidth is not None
    assert set(result.zero_fraction) == {'semiparametric'}


def test_bench_is_reproducible():
    scenario = _scenario()
    first = run_bench(scenario, methods=('simple',))
    second = run_bench(scenario, methods=('simple',))

    assert len(first.replicates) == 2
    assert [rep.seed for rep in first.replicates] == [replicate_seed(7, 0), replicate_seed(7, 1)]
    assert np.array_equal(np.array(first.table())[:, 1:].astype(float), np.array(second.table())[:, 1:].astype(float),
                          equal_nan=True)
    (row,) = first.table()
    assert row[0] == 'simple' and row[-1] == 2

    data = first.to_dict()
    assert data['table'][0]['zero_fraction'] is None
    assert data['selections']['q_min'] == {}


def test_load_pattern_checks_the_type_count(tmp_path):
    path = tmp_path / "pattern.csv"
    artifacts.write_pattern(path, uniform_pattern(20, 3))
    assert load_pattern(path).n_types == 3
    with pytest.raises(ArtifactError):
        load_pattern(path, _scenario())


@pytest.mark.slow
def test_scaled_two_field_study():
    source = (repo_root() / "scenarios" / "two_fields.conf").read_text(encoding='utf-8')
    for old, new in [("R = 0.1", "R = 0.05"), ("level = 400", "level = 200"),
                     ("q = [0, 1, 2, 3, 4, 5]", "q = [0, 1, 2, 3, 4]"),
                     ("lambda = [10, 8, 6, 5, 4, 3, 2, 1, 0.5, 0.25, 0]", "lambda = [0]"), ("L = 10", "L = 1")]:
        assert old in source
        source = source.replace(old, new)
    scenario = _scenario(source + "optimizer { max_iter = 40 }\n")

    bench = run_bench(scenario, replicates=5, methods=('semiparametric', 'simple'), threads=5)
    assert sum(rep.q_min in (1, 2, 3) for rep in bench.replicates) >= 4
    assert sum(rep.mise['semiparametric']['total'] < rep.mise['simple']['total'] for rep in bench.replicates) >= 4
