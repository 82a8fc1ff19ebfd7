"""Flat key = value scenario files.

Grammar (one entry per line)::

    line    := blank | comment | entry
    comment := '#' any*
    entry   := key ws* '=' ws* value ws* ('#' any*)?
    key     := [A-Za-z_][A-Za-z0-9_.]*
    value   := item (',' item)*
    item    := arithmetic expression | bare word

Expressions may use numbers, + - * / **, parentheses, the constants ``pi`` and
``e``, the functions ``sqrt exp log log10``, and any scalar key without a dot
(e.g. ``alpha = 100*sqrt(N)``). An item that is a single bare word (``resonant``,
``kappa``) is a string even when a key of that name exists; write ``1*N`` to copy
a numeric key. Two or more items make a list.

Sources are merged with precedence command line > file > environment. Environment
keys are ``CAVITYSENSE_`` followed by the key in upper case with dots replaced by
double underscores (``sweep.num`` -> ``CAVITYSENSE_SWEEP__NUM``, ``N`` -> ``CAVITYSENSE_N``).
"""

from __future__ import annotations

import ast
import math
import operator
import os
import re
from dataclasses import dataclass

ENV_PREFIX = "CAVITYSENSE_"
_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
# environment names are upper case; keys that are not all lower case are restored here
_ENV_CASE = {"n": "N"}
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*\Z")
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "log10": math.log10}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str = "<config>"):
        self.line, self.column, self.source = line, column, source
        where = f"{source}:{line}:{column}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class RawEntry:
    key: str
    text: str
    line: int | None
    column: int | None
    source: str


def parse_text(text: str, source: str = "<config>") -> dict[str, RawEntry]:
    entries: dict[str, RawEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in raw:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col, source)
        eq = raw.index("=")
        key = raw[:eq].strip()
        key_col = len(raw[:eq]) - len(raw[:eq].lstrip()) + 1
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", lineno, key_col, source)
        rest = raw[eq + 1:]
        value = rest.split("#", 1)[0].strip()
        val_col = eq + 2 + (len(rest) - len(rest.lstrip()))
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno, val_col, source)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", lineno, key_col, source)
        entries[key] = RawEntry(key, value, lineno, val_col, source)
    return entries


def parse_file(path) -> dict[str, RawEntry]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from exc
    return parse_text(text, str(path))


def env_entries(environ=None) -> dict[str, RawEntry]:
    environ = os.environ if environ is None else environ
    out = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower().replace("__", ".")
        key = _ENV_CASE.get(key, key)
        if not _KEY.match(key):
            raise ConfigError(f"invalid key in environment variable {name}", source="<env>")
        out[key] = RawEntry(key, environ[name].strip(), None, None, f"<env {name}>")
    return out


def cli_entries(pairs) -> dict[str, RawEntry]:
    out = {}
    for i, pair in enumerate(pairs or (), start=1):
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}", source="<command line>")
        key, value = (s.strip() for s in pair.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", source="<command line>")
        out[key] = RawEntry(key, value, None, None, f"<command line #{i}>")
    return out


def merge(env: dict, file: dict, cli: dict) -> dict[str, RawEntry]:
    merged = dict(env)
    merged.update(file)
    merged.update(cli)
    return merged


# ---------------------------------------------------------------------------
# Value evaluation


class _Unresolved(Exception):
    pass


def _eval_node(node, names):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, names), _eval_node(node.right, names))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand, names)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Name):
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        if node.id in names:
            return names[node.id]
        raise _Unresolved(node.id)
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval_node(node.args[0], names))
    raise ValueError("unsupported expression element")


def _eval_value(entry: RawEntry, names):
    text = entry.text
    parts = _split_list(text)
    vals = []
    for part in parts:
        col = (entry.column or 1) + text.find(part)
        if part in ("inf", "nan"):
            vals.append(float(part))
            continue
        if _WORD.match(part) and part not in _CONSTS:
            # a lone word is always a string, even if it matches a key (regime = kappa)
            vals.append(part)
            continue
        try:
            tree = ast.parse(part, mode="eval")
        except SyntaxError:
            raise ConfigError(f"cannot parse value {part!r}", entry.line, col, entry.source) from None
        try:
            vals.append(_eval_node(tree.body, names))
        except (ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
            raise ConfigError(f"invalid value {part!r}: {exc}", entry.line, col, entry.source) from None
    return vals if len(parts) > 1 else vals[0]


def _split_list(text):
    depth, start, parts = 0, 0, []
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i].strip())
            start = i + 1
    parts.append(text[start:].strip())
    return parts


def resolve(entries: dict[str, RawEntry]) -> dict[str, object]:
    """Evaluate every entry; scalars without dots are visible to other expressions."""
    pending = dict(entries)
    keys = {k for k in entries if "." not in k}
    names: dict[str, float] = {}
    values: dict[str, object] = {}
    while pending:
        progress = False
        for key in sorted(pending):
            entry = pending[key]
            try:
                v = _eval_value(entry, names)
            except _Unresolved as exc:
                missing = str(exc)
                if missing not in keys:
                    col = (entry.column or 1) + max(entry.text.find(missing), 0)
                    raise ConfigError(f"unknown name {missing!r}", entry.line, col, entry.source) from None
                continue
            values[key] = v
            if "." not in key and isinstance(v, (int, float)):
                names[key] = v
            del pending[key]
            progress = True
        if not progress:
            entry = pending[sorted(pending)[0]]
            raise ConfigError("circular or non-numeric reference", entry.line, entry.column, entry.source)
    return values


def load(path=None, overrides=None, environ=None) -> tuple[dict[str, object], dict[str, RawEntry]]:
    file = parse_file(path) if path is not None else {}
    entries = merge(env_entries(environ), file, cli_entries(overrides))
    return resolve(entries), entries
