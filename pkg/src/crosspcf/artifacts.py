## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# On-disk formats.  Type labels are 1-based in every file.
#
#   pattern CSV   header `x,y,type`, optional leading `# window x0,y0,x1,y1` comment
#   raster CSV    `x0,y0,x1,y1` / four numbers / `nx,ny` / two integers, then nx rows of ny values
#   curves CSV    `i,j,r,g`
#   JSON          sorted keys, two-space indent, no timestamps
#

import csv
import json
import hashlib
import logging
import platform
from pathlib import Path

import numpy as np

from .types import Window, PointPattern, ScalarField, Theta, FitResult, FirstOrder, UNIT_SQUARE
from .errors import ArtifactError, PatternError

log = logging.getLogger(__name__)


def _open(path, mode='r'):
    try:
        return open(path, mode, encoding='utf-8', newline='')
    except OSError as exc:
        raise ArtifactError(f"Cannot open `{path}`: {exc.strerror}.", filename=str(path)) from exc


def _float(text: str, filename, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ArtifactError(f"Expected a number, got `{text}`.", filename=str(filename), line=line) from None


# Patterns ────────────────────────────────────────────────────────────────────────────────
def write_pattern(path, pattern: PointPattern) -> None:
    with _open(path, 'w') as f:
        f.write("# window {},{},{},{}\n".format(*(repr(float(v)) for v in pattern.window.as_tuple())))
        f.write(f"# types {pattern.n_types}\n")
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['x', 'y', 'type'])
        for (x, y), t in zip(pattern.xy, pattern.types):
            writer.writerow([repr(float(x)), repr(float(y)), int(t) + 1])


def read_pattern(path, window: Window | None = None, n_types: int | None = None) -> PointPattern:
    """Pattern CSV; the window and type count come from the header comments unless given explicitly."""
    xy, types, header = [], [], {}
    with _open(path) as f:
        rows = csv.reader(f)
        columns = None
        for line, row in enumerate(rows, start=1):
            if not row or not ''.join(row).strip(): continue
            if row[0].startswith('#'):
                key, _, value = ','.join(row).lstrip('# ').partition(' ')
                header[key] = value
                continue
            if columns is None:
                columns = [c.strip() for c in row]
                if columns[:3] != ['x', 'y', 'type']:
                    raise ArtifactError(f"Pattern header must be `x,y,type`, got `{','.join(row)}`.",
                                        filename=str(path), line=line)
                continue
            if len(row) < 3:
                raise ArtifactError("Pattern rows need three columns.", filename=str(path), line=line)
            xy.append((_float(row[0], path, line), _float(row[1], path, line)))
            label = _float(row[2], path, line)
            if label != int(label) or label < 1:
                raise ArtifactError(f"Type labels are positive integers, got `{row[2]}`.", filename=str(path), line=line)
            types.append(int(label) - 1)

    try:
        if window is None:
            window = Window(*(float(v) for v in header['window'].split(','))) if 'window' in header else UNIT_SQUARE
        if n_types is None:
            n_types = int(header['types']) if 'types' in header else (max(types) + 1 if types else 1)
        return PointPattern(np.reshape(xy, (-1, 2)), np.asarray(types, dtype=np.int64), window, n_types)
    except (PatternError, ValueError, TypeError) as exc:
        raise ArtifactError(f"Pattern in `{path}` is invalid: {exc}", filename=str(path)) from exc


# Rasters ─────────────────────────────────────────────────────────────────────────────────
def write_field(path, field: ScalarField) -> None:
    with _open(path, 'w') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['x0', 'y0', 'x1', 'y1'])
        writer.writerow([repr(float(v)) for v in field.window.as_tuple()])
        writer.writerow(['nx', 'ny'])
        writer.writerow([field.nx, field.ny])
        for row in field.values:
            writer.writerow([repr(float(v)) for v in row])


def read_field(path) -> ScalarField:
    with _open(path) as f:
        rows = [row for row in csv.reader(f) if row]
    if len(rows) < 4 or [c.strip() for c in rows[0]] != ['x0', 'y0', 'x1', 'y1'] or [c.strip() for c in rows[2]] != ['nx', 'ny']:
        raise ArtifactError("Raster needs the `x0,y0,x1,y1` / `nx,ny` header.", filename=str(path), line=1)
    corners = [_float(v, path, 2) for v in rows[1]]
    nx, ny = (int(_float(v, path, 4)) for v in rows[3])
    if len(rows) - 4 != nx or any(len(row) != ny for row in rows[4:]):
        raise ArtifactError(f"Raster body must be {nx} rows of {ny} values.", filename=str(path), line=5)
    values = np.array([[_float(v, path, n) for v in row] for n, row in enumerate(rows[4:], start=5)])
    try:
        return ScalarField(Window(*corners), values)
    except (PatternError, TypeError) as exc:
        raise ArtifactError(f"Raster in `{path}` is invalid: {exc}", filename=str(path)) from exc


# Curves and results ──────────────────────────────────────────────────────────────────────
def write_curves(path, curves: np.ndarray, r, *, upper_only: bool = True) -> None:
    """(p, p, len(r)) curves as `i,j,r,g` rows, i <= j unless `upper_only` is off."""
    with _open(path, 'w') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['i', 'j', 'r', 'g'])
        p = curves.shape[0]
        for i in range(p):
            for j in range(i if upper_only else 0, p):
                for rv, g in zip(r, curves[i, j]):
                    writer.writerow([i + 1, j + 1, repr(float(rv)), repr(float(g))])


def read_curves(path) -> dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]:
    out: dict[tuple[int, int], list] = {}
    with _open(path) as f:
        for line, row in enumerate(csv.DictReader(f), start=2):
            try:
                key = (int(row['i']) - 1, int(row['j']) - 1)
                out.setdefault(key, []).append((float(row['r']), float(row['g'])))
            except (KeyError, ValueError, TypeError):
                raise ArtifactError("Curve rows need numeric `i,j,r,g` columns.", filename=str(path), line=line) from None
    return {k: (np.array([r for r, _ in v]), np.array([g for _, g in v])) for k, v in out.items()}


def _json_default(value):
    if isinstance(value, np.ndarray): return value.tolist()
    if isinstance(value, np.generic): return value.item()
    if isinstance(value, Path): return str(value)
    raise TypeError(f"Cannot serialise {type(value).__name__} to JSON.")


def _finite(value):
    """Missing estimates are written as null."""
    if isinstance(value, dict): return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)): return [_finite(v) for v in value]
    if isinstance(value, np.ndarray): return _finite(value.tolist())
    if isinstance(value, (float, np.floating)) and not np.isfinite(value): return None
    return value


def write_json(path, data: dict) -> None:
    with _open(path, 'w') as f:
        json.dump(_finite(data), f, indent=2, sort_keys=True, default=_json_default, allow_nan=False)
        f.write('\n')


def read_json(path) -> dict:
    with _open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ArtifactError(f"Malformed JSON: {exc.msg}.", filename=str(path), line=exc.lineno) from None


def fit_to_dict(result: FitResult, first_order: FirstOrder | None = None, R: float | None = None) -> dict:
    data = {
        'theta': result.theta.to_dict(), 'objective': result.objective, 'lambda': result.lam,
        'trace': list(result.trace), 'converged': result.converged, 'iterations': result.iterations,
        'zero_mask': result.zero_mask.tolist(), 'zero_fraction': result.zero_fraction,
        'flags': {'stalled': result.stalled, 'frozen_types': [i + 1 for i in result.frozen_types],
                  'inner_capped': result.inner_capped},
    }
    if first_order is not None:
        data['beta'] = first_order.beta.tolist()
        data['baseline'] = None if first_order.baseline is None else first_order.baseline + 1
    if R is not None:
        data['R'] = R
    return data


def write_fit(path, result: FitResult, first_order: FirstOrder | None = None, R: float | None = None) -> None:
    write_json(path, fit_to_dict(result, first_order, R))


def read_fit(path) -> tuple[Theta, dict]:
    data = read_json(path)
    try:
        return Theta.from_dict(data['theta']), data
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"Fit file has no valid `theta`: {exc}", filename=str(path)) from exc


def write_cv(directory, result) -> None:
    directory = Path(directory)
    write_json(directory / 'cv.json', result.to_dict())
    with _open(directory / 'cv.csv', 'w') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['q', 'lambda', 'mean', 'se'])
        for q, lam, mean, se in result.rows():
            writer.writerow([q, repr(lam), repr(mean), repr(se)])


def write_table(path, header: list[str], rows: list[list]) -> None:
    with _open(path, 'w') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


# Provenance ──────────────────────────────────────────────────────────────────────────────
def config_hash(source: str) -> str:
    return hashlib.sha256(source.encode('utf-8')).hexdigest()


def manifest(command: str, source: str, seed: int, **details) -> dict:
    from . import __version__
    import scipy
    return {
        'command': command, 'config_sha256': config_hash(source), 'seed': seed,
        'versions': {'crosspcf': __version__, 'numpy': np.__version__, 'scipy': scipy.__version__,
                     'python': platform.python_version()},
        **details,
    }
