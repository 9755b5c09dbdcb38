## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import re
import logging

import numpy as np


ANSI_RE = re.compile(r'\033\[[0-9;]*m')

LEVEL_COLORS = {
    logging.DEBUG: '\033[90m',
    logging.INFO: '\033[36m',
    logging.WARNING: '\033[33m',
    logging.ERROR: '\033[31m',
    logging.CRITICAL: '\033[1;31m',
}


def write_without_ansi(write_fn):
    """Wrapper function that strips ANSI codes before calling the original writer."""
    return lambda text: write_fn(ANSI_RE.sub('', text))


class LevelColorFormatter(logging.Formatter):
    """`name  message` lines with the level name coloured; codes are removed later by `--plain`."""

    def format(self, record: logging.LogRecord) -> str:
        color = LEVEL_COLORS.get(record.levelno, '')
        message = super().format(record)
        return f"{color}{record.levelname.lower():>7}\033[0m \033[90m{record.name}\033[0m {message}"


def setup_logging(verbose: int, stream) -> logging.Handler:
    handler = logging.StreamHandler(stream)
    handler.setFormatter(LevelColorFormatter('%(message)s'))
    root = logging.getLogger('crosspcf')
    root.handlers[:] = [handler]
    root.setLevel(logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG)
    root.propagate = False

    warnings_log = logging.getLogger('py.warnings')
    warnings_log.handlers[:] = [handler]
    warnings_log.propagate = False
    logging.captureWarnings(True)
    return handler


def format_value(value, digits: int = 4) -> str:
    if isinstance(value, bool): return str(value).lower()
    if isinstance(value, (int, np.integer)): return str(int(value))
    if isinstance(value, (float, np.floating)):
        return 'NA' if not np.isfinite(value) else f"{float(value):.{digits}g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return '[' + ' '.join(format_value(v, digits) for v in value) + ']'
    return str(value)


def format_table(header: list[str], rows: list[list], digits: int = 4) -> str:
    cells = [[format_value(v, digits) for v in row] for row in rows]
    widths = [max(len(h), *(len(row[n]) for row in cells)) if cells else len(h) for n, h in enumerate(header)]
    lines = ['  '.join(f"\033[97m{h:>{w}}\033[0m" for h, w in zip(header, widths))]
    lines += ['  '.join(f"{c:>{w}}" for c, w in zip(row, widths)) for row in cells]
    return '\n'.join(lines)


def format_banner(title: str, items: dict) -> str:
    """Summary block printed after a command, in the style of the error banners."""
    lines = [f"\n\033[97m\033[48;5;30m {title}. \033[0m"]
    lines += [f"{key}\t\033[97m{format_value(value)}\033[0m" for key, value in items.items()]
    return '\n'.join(lines)
