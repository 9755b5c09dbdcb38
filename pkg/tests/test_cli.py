## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import os, sys
import csv
import json
import hashlib
import subprocess
from pathlib import Path

import pytest


SMOKE = """\
seed = 7
window = [0, 0, 1, 1]
grid = [32, 32]
R = 0.1
r { min = 0.01  max = 0.1  n = 10 }
background { kind = "constant"  level = 150 }
types { sigma = [0.5, 0.5]  phi = [0.1, 0.1] }
latent { alpha = [[0.4], [-0.4]]  xi = [0.12] }
fit { q = 1  lambda = 0 }
optimizer { max_iter = 15 }
cv { q = [0, 1]  lambda = [1, 0]  K = 2  L = 1 }
assess { n_sim = 39  level = 0.05 }
bench { replicates = 2  methods = ["semiparametric", "simple", "diggle"] }
"""


def run_cli(*cli_args: str | Path, env: dict | None = None, extra_args: list[str] | None = None) -> subprocess.CompletedProcess:
    args = [sys.executable, "-m", "crosspcf", "--plain"]
    if extra_args:
        args.extend(extra_args)
    args.extend(str(arg) for arg in cli_args)
    merged_env = os.environ.copy()
    if env:
        merged_env.update(env)
    return subprocess.run(args, capture_output=True, text=True, env=merged_env)


def repo_root() -> Path:
    return Path(__file__).resolve().parents[1]


def _config(tmp_path: Path, source: str = SMOKE, name: str = "smoke.conf") -> Path:
    """Helper: write a scenario file next to the outputs."""
    path = tmp_path / name
    path.write_text(source, encoding='utf-8')
    return path


def _simulate(tmp_path: Path) -> tuple[Path, Path]:
    """Helper: simulate the smoke scenario and return (config, pattern)."""
    config = _config(tmp_path)
    result = run_cli("simulate", "--config", config, "--out", tmp_path / "sim")
    assert result.returncode == 0, result.stdout
    return config, tmp_path / "sim" / "pattern.csv"


def _read_csv(path: Path) -> list[dict]:
    """Helper: rows of a CSV file as dictionaries."""
    with open(path, encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


def test_cli_version():
    result = run_cli("--version")
    assert result.returncode == 0
    assert "crosspcf" in result.stdout


def test_cli_simulate_writes_artifacts(tmp_path):
    config, pattern = _simulate(tmp_path)
    out = tmp_path / "sim"
    for name in ("pattern.csv", "rho0.csv", "true_curves.csv", "manifest.json"):
        assert (out / name).is_file()

    manifest = json.loads((out / "manifest.json").read_text(encoding='utf-8'))
    assert manifest['seed'] == 7
    assert manifest['command'] == 'simulate'
    assert manifest['config_sha256'] == hashlib.sha256(config.read_bytes()).hexdigest()
    assert pattern.read_text(encoding='utf-8').startswith("# window 0.0,0.0,1.0,1.0")


def test_cli_simulate_is_deterministic(tmp_path):
    config = _config(tmp_path)
    first = run_cli("simulate", "--config", config, "--out", tmp_path / "a")
    second = run_cli("simulate", "--config", config, "--out", tmp_path / "b")
    assert first.returncode == second.returncode == 0
    assert "SIMULATED." in first.stdout
    assert (tmp_path / "a" / "pattern.csv").read_text() == (tmp_path / "b" / "pattern.csv").read_text()

    third = run_cli("simulate", "--config", config, "--out", tmp_path / "c", "--seed", "8")
    assert third.returncode == 0
    assert (tmp_path / "a" / "pattern.csv").read_text() != (tmp_path / "c" / "pattern.csv").read_text()


def test_cli_missing_seed_is_a_config_error(tmp_path):
    config = _config(tmp_path, SMOKE.replace("seed = 7\n", ""))
    result = run_cli("simulate", "--config", config, "--out", tmp_path / "sim")
    assert result.returncode == 2
    assert "CONFIG ERROR." in result.stdout
    assert "`seed`" in result.stdout


def test_cli_malformed_config_shows_context(tmp_path):
    config = _config(tmp_path, SMOKE.replace("R = 0.1", "R = = 0.1"))
    result = run_cli("simulate", "--config", config, "--out", tmp_path / "sim")
    assert result.returncode == 2
    out = result.stdout
    assert "CONFIG ERROR." in out
    assert "File \"" in out and ", line 4" in out
    assert "    4 |" in out
    assert "\033[" not in out


def test_cli_invalid_setting_names_its_key(tmp_path):
    config = _config(tmp_path, SMOKE.replace("R = 0.1", "R = -0.1"))
    result = run_cli("simulate", "--config", config, "--out", tmp_path / "sim")
    assert result.returncode == 2
    assert "line 4, in `R`" in result.stdout
    assert "    4 | R = -0.1" in result.stdout


def test_cli_unreadable_pattern_is_an_io_error(tmp_path):
    config = _config(tmp_path)
    pattern = tmp_path / "broken.csv"
    pattern.write_text("x,y,type\n0.5,0.5,1\n0.5,oops,2\n", encoding='utf-8')
    result = run_cli("fit", pattern, "--config", config, "--out", tmp_path / "fit")
    assert result.returncode == 3
    assert "I/O ERROR." in result.stdout
    assert "line 3" in result.stdout


def test_cli_fit_writes_estimates(tmp_path):
    config, pattern = _simulate(tmp_path)
    result = run_cli("fit", pattern, "--config", config, "--out", tmp_path / "fit")
    assert result.returncode == 0, result.stdout
    assert "FITTED." in result.stdout

    data = json.loads((tmp_path / "fit" / "fit.json").read_text(encoding='utf-8'))
    assert isinstance(data['converged'], bool)
    assert len(data['theta']['alpha']) == 2 and len(data['theta']['xi']) == 1
    assert data['baseline'] == 2
    assert data['trace'] == sorted(data['trace'], reverse=True)
    assert len(_read_csv(tmp_path / "fit" / "curves.csv")) == 3 * 10


def test_cli_fit_without_common_fields(tmp_path):
    _, pattern = _simulate(tmp_path)
    config = _config(tmp_path, SMOKE.replace("fit { q = 1  lambda = 0 }", "fit { q = 0  lambda = 0 }"), "q0.conf")
    result = run_cli("fit", pattern, "--config", config, "--out", tmp_path / "fit")
    assert result.returncode == 0, result.stdout

    cross = [row for row in _read_csv(tmp_path / "fit" / "curves.csv") if (row['i'], row['j']) == ('1', '2')]
    assert len(cross) == 10
    assert all(float(row['g']) == 1.0 for row in cross)


def test_cli_fit_with_a_huge_penalty_zeroes_alpha(tmp_path):
    _, pattern = _simulate(tmp_path)
    config = _config(tmp_path, SMOKE.replace("fit { q = 1  lambda = 0 }", "fit { q = 1  lambda = 1e6 }"), "lasso.conf")
    result = run_cli("fit", pattern, "--config", config, "--out", tmp_path / "fit")
    assert result.returncode == 0, result.stdout

    data = json.loads((tmp_path / "fit" / "fit.json").read_text(encoding='utf-8'))
    assert data['zero_mask'] == [[True], [True]]
    assert data['zero_fraction'] == 1.0


def test_cli_cv_zero_lambda_grid(tmp_path):
    _, pattern = _simulate(tmp_path)
    config = _config(tmp_path, SMOKE.replace("lambda = [1, 0]", "lambda = [0]"), "cv.conf")
    first = run_cli("cv", pattern, "--config", config, "--out", tmp_path / "a")
    second = run_cli("cv", pattern, "--config", config, "--out", tmp_path / "b")
    assert first.returncode == second.returncode == 0, first.stdout
    assert "SELECTED." in first.stdout

    data = json.loads((tmp_path / "a" / "cv.json").read_text(encoding='utf-8'))
    assert data['lambda_star'] == 0
    assert data['q_1se'] <= data['q_min']
    assert (tmp_path / "a" / "cv.csv").read_text() == (tmp_path / "b" / "cv.csv").read_text()
    assert [row['q'] for row in _read_csv(tmp_path / "a" / "cv.csv")] == ['0', '1']


def test_cli_assess_with_and_without_truth(tmp_path):
    config, pattern = _simulate(tmp_path)
    assert run_cli("fit", pattern, "--config", config, "--out", tmp_path / "fit").returncode == 0
    fit = tmp_path / "fit" / "fit.json"

    plain = run_cli("assess", pattern, "--fit", fit, "--config", config, "--out", tmp_path / "plain")
    assert plain.returncode == 0, plain.stdout
    assert "ASSESSED." in plain.stdout
    report = json.loads((tmp_path / "plain" / "assess.json").read_text(encoding='utf-8'))
    assert 'mise' not in report
    assert len(report['envelope']['lower']) == 10
    assert 0 < report['envelope']['p_value'] <= 1
    assert len(_read_csv(tmp_path / "plain" / "ratios.csv")) == 10

    truth = run_cli("assess", pattern, "--fit", fit, "--config", config, "--out", tmp_path / "truth",
                    "--truth", config)
    assert truth.returncode == 0, truth.stdout
    report = json.loads((tmp_path / "truth" / "assess.json").read_text(encoding='utf-8'))
    assert set(report['mise']) == {'total', 'within', 'between'}
    assert report['mise']['total'] == pytest.approx(report['mise']['within'] + report['mise']['between'])


@pytest.mark.slow
def test_cli_bench_reports_every_method(tmp_path):
    config = _config(tmp_path)
    result = run_cli("bench", "--config", config, "--out", tmp_path / "bench")
    assert result.returncode == 0, result.stdout

    rows = _read_csv(tmp_path / "bench" / "bench.csv")
    assert [row['method'] for row in rows] == ["semiparametric", "simple", "diggle"]
    assert all(row['replicates'] == '2' for row in rows)
    assert len(_read_csv(tmp_path / "bench" / "replicates.csv")) == 6
    manifest = json.loads((tmp_path / "bench" / "manifest.json").read_text(encoding='utf-8'))
    assert len(manifest['replicate_seeds']) == 2


def test_cli_bench_method_option(tmp_path):
    config = _config(tmp_path)
    result = run_cli("bench", "--config", config, "--out", tmp_path / "bench", "-n", "1", "-m", "simple")
    assert result.returncode == 0, result.stdout
    assert [row['method'] for row in _read_csv(tmp_path / "bench" / "bench.csv")] == ["simple"]

