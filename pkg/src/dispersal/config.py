"""Flat ``key = value`` experiment configuration files.

One experiment per file; ``#`` starts a comment; keys are case-sensitive.
Numeric values accept restricted arithmetic with the constant ``pi``
(digits, ``+ - * / ( )`` and ``pi``), so exact grid spacings like
``2*pi/1024`` can be written without decimal truncation.  Lists are
comma-separated.

The parser tracks which keys each runner consumes, so a typo or stray key
is reported by name instead of being silently ignored.
"""

from __future__ import annotations

import ast
import math
from pathlib import Path

from .errors import ValidationError

_MISSING = object()


def parse_number(text: str) -> float:
    """Parse a float, allowing restricted arithmetic with ``pi``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        raise ValidationError(f"cannot parse number {text!r}") from None
    return _eval_node(tree.body, text)


def _eval_node(node: ast.AST, source: str) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        value = _eval_node(node.operand, source)
        return value if isinstance(node.op, ast.UAdd) else -value
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
        left = _eval_node(node.left, source)
        right = _eval_node(node.right, source)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if right == 0.0:
            raise ValidationError(f"division by zero in number {source!r}")
        return left / right
    raise ValidationError(
        f"cannot parse number {source!r}: only digits, pi, + - * / and parentheses are allowed"
    )


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` lines into an ordered mapping of raw strings."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ValidationError(f"{source}:{lineno}: empty key")
        if key in mapping:
            raise ValidationError(f"{source}:{lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


class ExperimentConfig:
    """Typed, consumption-tracked view over a raw key-value mapping."""

    def __init__(self, mapping: dict[str, str], source: str = "<config>"):
        self.mapping = dict(mapping)
        self.source = source
        self._consumed: set[str] = set()
        #: Resolved values echoed into the reproducibility record.
        self.resolved: dict[str, str] = {}

    def _fetch(self, key: str, default):
        self._consumed.add(key)
        if key in self.mapping:
            return self.mapping[key]
        if default is _MISSING:
            raise ValidationError(f"{self.source}: missing required config key {key!r}")
        return None

    def get_str(self, key: str, default=_MISSING, choices: tuple[str, ...] | None = None) -> str:
        raw = self._fetch(key, default)
        value = default if raw is None else raw
        if choices is not None and value not in choices:
            raise ValidationError(
                f"{self.source}: config key {key!r} must be one of {list(choices)}, got {value!r}"
            )
        self.resolved[key] = str(value)
        return value

    def get_number(self, key: str, default=_MISSING) -> float:
        raw = self._fetch(key, default)
        value = float(default) if raw is None else parse_number(raw)
        self.resolved[key] = repr(value)
        return value

    def get_int(self, key: str, default=_MISSING) -> int:
        raw = self._fetch(key, default)
        if raw is None:
            value = int(default)
        else:
            value = parse_number(raw)
            if abs(value - round(value)) > 0:
                raise ValidationError(f"{self.source}: config key {key!r} must be an integer, got {raw!r}")
            value = int(round(value))
        self.resolved[key] = str(value)
        return value

    def get_number_list(self, key: str, default=_MISSING) -> list[float]:
        raw = self._fetch(key, default)
        if raw is None:
            values = [float(v) for v in default]
        else:
            parts = [p for p in raw.split(",") if p.strip()]
            if not parts:
                raise ValidationError(f"{self.source}: config key {key!r} holds an empty list")
            values = [parse_number(p) for p in parts]
        self.resolved[key] = ",".join(repr(v) for v in values)
        return values

    def reject_unknown_keys(self) -> None:
        stray = sorted(set(self.mapping) - self._consumed)
        if stray:
            raise ValidationError(
                f"{self.source}: unknown config key(s): {', '.join(repr(k) for k in stray)}"
            )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    return ExperimentConfig(parse_config_text(path.read_text(), source=str(path)), source=str(path))


def format_resolved(resolved: dict[str, str], outcome_lines: list[str]) -> str:
    """Render the reproducibility record: outcome comments, then the config."""
    lines = ["# dispersal run record"]
    lines += [f"# {line}" for line in outcome_lines]
    lines += [f"{key} = {value}" for key, value in resolved.items()]
    return "\n".join(lines) + "\n"
