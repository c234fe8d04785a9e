"""Line-oriented text formats shared by the KB, ontology, policy and config loaders."""

from __future__ import annotations

import re

_LINE_TOKEN_RE = re.compile(r'\s*(?:(#.*)|("(?:[^"\\]|\\.)*")|([^\s"]+)|(\S))')
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


def unescape_literal(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


def tokenize_line(line: str) -> list[str]:
    """Split one line into bare tokens and quoted literals, dropping a trailing ``#`` comment."""
    tokens = []
    pos = 0
    while pos < len(line):
        m = _LINE_TOKEN_RE.match(line, pos)
        if m is None:  # only trailing whitespace left
            break
        comment, quoted, bare, stray = m.groups()
        if comment is not None:
            break
        if stray is not None:
            raise ValueError(f"unterminated literal at column {m.start(4) + 1}")
        tokens.append(quoted if quoted is not None else bare)
        pos = m.end()
    return tokens


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        if key in values:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values
