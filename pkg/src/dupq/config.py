"""Flat key=value run configuration with file loading and CLI overrides.

Config files hold one ``key = value`` per line with ``#`` comments.
Command-line ``--key value`` pairs override file values.  Unknown keys are
rejected against the command's declared schema.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, UsageError


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_list(item_type):
    def parse(raw: str):
        raw = raw.strip()
        if not raw:
            return []
        return [item_type(part.strip()) for part in raw.split(",")]

    return parse


PARSERS = {
    "str": str,
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "floats": _parse_list(float),
    "ints": _parse_list(int),
    "strs": _parse_list(str),
}


@dataclass(frozen=True)
class Option:
    name: str
    type: str
    default: object
    help: str = ""


class RunConfig:
    """Resolved option values for one command invocation."""

    def __init__(self, schema: list[Option]):
        self._schema = {opt.name: opt for opt in schema}
        self._values = {opt.name: opt.default for opt in schema}
        self._explicit: set[str] = set()

    def set(self, key: str, raw: str) -> None:
        opt = self._schema.get(key)
        if opt is None:
            known = ", ".join(sorted(self._schema))
            raise UsageError(f"unknown config key {key!r} (known keys: {known})")
        try:
            self._values[key] = PARSERS[opt.type](raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {key!r}: {exc}") from exc
        self._explicit.add(key)

    def load_file(self, path: str | Path) -> None:
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such config file: {path}")
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = stripped.partition("=")
            self.set(key.strip(), raw.strip())

    def __getitem__(self, key: str):
        if key not in self._schema:
            raise KeyError(key)
        return self._values[key]

    def was_set(self, key: str) -> bool:
        return key in self._explicit

    def require(self, key: str):
        value = self._values[key]
        if value is None or value == "":
            raise UsageError(f"missing required config key {key!r}")
        return value

    def log_resolved(self, command: str, stream=None) -> None:
        stream = stream or sys.stderr
        print(f"# {command} configuration:", file=stream)
        for key in sorted(self._values):
            print(f"#   {key} = {self._values[key]}", file=stream)
