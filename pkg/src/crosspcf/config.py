## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘
#
# Scenario files: `key = value` pairs and nested `name { ... }` sections, `#` comments,
# numbers, quoted strings, bare words, booleans and bracketed lists.
#

import os
from pathlib import Path
from typing import Any, Iterator
from collections.abc import Mapping

import lark

from .errors import ConfigParseError, ConfigValueError


GRAMMAR = r"""start: _item*
_item: section | pair
section: NAME LBRACE _item* RBRACE
pair: NAME EQUALS value
?value: SIGNED_NUMBER          -> number
      | ESCAPED_STRING         -> string
      | NAME                   -> word
      | LSQB (value (COMMA value)* COMMA?)? RSQB -> array

// TOKENS
NAME: /[A-Za-z_][A-Za-z0-9_]*/
EQUALS: "="
COMMA: ","
LBRACE: "{"
RBRACE: "}"
LSQB: "["
RSQB: "]"

// COMMENTS
COMMENT: /#[^\r\n]*/

%import common.SIGNED_NUMBER
%import common.ESCAPED_STRING
%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = lark.Lark(GRAMMAR, start='start', parser='lalr', lexer='contextual', propagate_positions=True)
_MISSING = object()


class Config(Mapping):
    """Read-only nested mapping that remembers the line of every key for error messages."""

    def __init__(self, data: dict, lines: dict[str, int], filename: str | None = None, prefix: str = ''):
        self._data, self._lines, self.filename, self._prefix = data, lines, filename, prefix

    def __getitem__(self, key: str) -> Any:
        value = self._data[key]
        return Config(value, self._lines, self.filename, self._path(key)) if isinstance(value, dict) else value

    def __iter__(self) -> Iterator[str]: return iter(self._data)
    def __len__(self) -> int: return len(self._data)
    def __repr__(self) -> str: return f"Config({self._prefix or '<root>'}: {list(self._data)})"

    def _path(self, key: str) -> str:
        return f"{self._prefix}.{key}" if self._prefix else key

    @property
    def base_dir(self) -> Path:
        return Path(self.filename).resolve().parent if self.filename and os.path.isfile(self.filename) else Path.cwd()

    def line_of(self, path: str) -> int | None:
        return self._lines.get(self._path(path))

    def _parent_line(self, path: str) -> int | None:
        if '.' in path:
            return self.line_of(path.rsplit('.', 1)[0])
        return self._lines.get(self._prefix) if self._prefix else None

    def get(self, path: str, default: Any = None) -> Any:
        node: Any = self
        for part in path.split('.'):
            if not isinstance(node, Config) or part not in node._data:
                return default
            node = node[part]
        return node

    def require(self, path: str) -> Any:
        if (value := self.get(path, _MISSING)) is _MISSING:
            raise ConfigValueError(f"Missing required setting `{self._path(path)}`.", key=self._path(path),
                                   filename=self.filename, line=self._parent_line(path))
        return value

    def section(self, path: str) -> "Config":
        value = self.get(path, _MISSING)
        if value is _MISSING:
            return Config({}, self._lines, self.filename, self._path(path))
        if not isinstance(value, Config):
            raise self.invalid(path, "expected a `{ ... }` section")
        return value

    def invalid(self, path: str, reason: str) -> ConfigValueError:
        return ConfigValueError(f"Setting `{self._path(path)}` is invalid: {reason}.", key=self._path(path),
                                filename=self.filename, line=self.line_of(path))

    def with_value(self, path: str, value: Any) -> "Config":
        """Copy with one (dotted) key replaced, as used by command-line overrides."""
        def _set(data: dict, parts: list[str]) -> dict:
            data = dict(data)
            data[parts[0]] = value if len(parts) == 1 else _set(data.get(parts[0], {}), parts[1:])
            return data
        return Config(_set(self._data, path.split('.')), self._lines, self.filename, self._prefix)

    def to_dict(self) -> dict:
        return {k: (v.to_dict() if isinstance(v, Config) else v) for k, v in ((k, self[k]) for k in self)}


def _convert(node) -> Any:
    match node.data:
        case 'number':
            text = node.children[0].value
            return float(text) if any(c in text for c in '.eE') else int(text)
        case 'string':
            return bytes(node.children[0].value[1:-1], 'utf-8').decode('unicode_escape')
        case 'word':
            word = node.children[0].value
            return {'true': True, 'false': False}.get(word, word)
        case 'array':
            return [_convert(ch) for ch in node.children if isinstance(ch, lark.Tree)]
    raise NotImplementedError(f"Unexpected value node `{node.data}` from the parser.")


def parse_config(source: str, filename: str | None = None) -> Config:
    try:
        tree = _PARSER.parse(source)
    except (lark.exceptions.UnexpectedInput, lark.exceptions.UnexpectedEOF) as exc:
        def attr(k): return getattr(exc, k, None)
        token_val = getattr(token, 'value', '') if (token := attr('token')) is not None else ''
        raise ConfigParseError(str(exc), filename=filename, line=attr('line'), column=attr('column'),
                               token=token_val) from None

    lines: dict[str, int] = {}

    def _collect(items, prefix: str) -> dict:
        data = {}
        for item in items:
            if not isinstance(item, lark.Tree): continue
            name = item.children[0]
            path = f"{prefix}.{name.value}" if prefix else name.value
            if name.value in data:
                raise ConfigParseError(f"Duplicate key `{path}`, first defined on line {lines[path]}.",
                                       filename=filename, line=name.line, column=name.column, token=name.value)
            lines[path] = name.line
            if item.data == 'section':
                data[name.value] = _collect(item.children[2:-1], path)
            else:
                data[name.value] = _convert(item.children[2])
        return data

    return Config(_collect(tree.children, ''), lines, filename)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    return parse_config(path.read_text(encoding='utf-8'), filename=str(path))


def resolve_path(config: Config, value: str) -> Path:
    """Raster paths are relative to the directory of the config file."""
    path = Path(value)
    return path if path.is_absolute() else config.base_dir / path


def format_config_context(filename, line: int, *, column: int | None = None, width: int = 1,
                          key: str | None = None, source: str | None = None) -> str:
    """Scenario lines around `line` with a caret under `column`; the header names the failing key if known."""
    text = source if source is not None else Path(filename).read_text(encoding='utf-8')
    lines = text.splitlines()
    where = f", in `{key}`" if key else ''
    out = [f"\033[97m  File \"{filename}\", line {line}{where}\033[0m"]

    for number in range(max(1, line - 2), min(len(lines), line + 1) + 1):
        shade = '\033[97m' if number == line else '\033[90m'
        out.append(f"{shade}{number:>5} |\033[0m {lines[number - 1]}")
        if number == line and column:
            out.append(f"      | {' ' * (column - 1)}\033[33m{'^' * max(1, width)}\033[0m")
    return '\n' + '\n'.join(out) + '\n'
