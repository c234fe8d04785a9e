"""Parser for the agent query language and triple-pattern extraction.

Grammar (keywords are case-insensitive)::

    query   := SELECT var+ WHERE "{" pattern ("." pattern)* "."? "}"
    pattern := slot slot slot
    slot    := var | iri | literal

Variable predicates are accepted here; rejecting them is the enforcement
layer's job.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from kgauthz.formats import unescape_literal
from kgauthz.terms import Slot, Term, TriplePattern, Variable, iri, literal


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Query:
    projected: tuple[Variable, ...]
    patterns: tuple[TriplePattern, ...]

    def variables(self) -> list[Variable]:
        seen: dict[Variable, None] = {}
        for pattern in self.patterns:
            for var in pattern.variables():
                seen.setdefault(var)
        return list(seen)

    def __str__(self) -> str:
        head = " ".join(str(v) for v in self.projected)
        body = " ".join(f"{p} ." for p in self.patterns)
        return f"SELECT {head} WHERE {{ {body} }}"


_TOKEN_SPEC = [
    ("WS", r"\s+"),
    ("LBRACE", r"\{"),
    ("RBRACE", r"\}"),
    ("DOT", r"\."),
    ("LITERAL", r'"(?:[^"\\\n]|\\.)*"'),
    ("VAR", r"\?[A-Za-z0-9_]+"),
    ("IRI", r'[^\s{}".?][^\s{}".]*(?:\.[^\s{}".]+)*'),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in _TOKEN_SPEC))

IRI_TEXT_RE = re.compile(r'[^\s{}".?][^\s{}".]*(?:\.[^\s{}".]+)*\Z')


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if m is None:
            ch = text[pos]
            what = "unterminated literal" if ch == '"' else f"unexpected character {ch!r}"
            raise ParseError(what, line, column)
        kind = m.lastgroup
        if kind != "WS":
            tokens.append(_Token(kind, m.group(), line, column))
        else:
            newlines = m.group().count("\n")
            if newlines:
                line += newlines
                line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.column)

    def keyword(self, word: str) -> _Token:
        tok = self.peek()
        if tok.kind == "IRI" and tok.text.upper() == word:
            return self.advance()
        self.fail(f"expected {word}")

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {what}")
        return self.advance()

    def slot(self, position: str) -> Slot:
        tok = self.peek()
        if tok.kind == "VAR":
            self.advance()
            return Variable(tok.text)
        if tok.kind == "IRI":
            self.advance()
            return iri(tok.text)
        if tok.kind == "LITERAL":
            if position != "object":
                self.fail(f"literal not allowed in {position} position")
            body = unescape_literal(tok.text[1:-1])
            if not body:
                self.fail("empty literal")
            self.advance()
            return literal(body)
        self.fail(f"expected {position} term or variable")

    def query(self) -> Query:
        self.keyword("SELECT")
        projected: list[tuple[Variable, _Token]] = []
        while self.peek().kind == "VAR":
            tok = self.advance()
            projected.append((Variable(tok.text), tok))
        if not projected:
            self.fail("expected at least one projected variable")
        self.keyword("WHERE")
        self.expect("LBRACE", "'{'")
        patterns = [self.pattern()]
        while True:
            tok = self.peek()
            if tok.kind == "RBRACE":
                self.advance()
                break
            if tok.kind != "DOT":
                self.fail("expected '.' or '}'")
            self.advance()
            if self.peek().kind == "RBRACE":
                self.advance()
                break
            patterns.append(self.pattern())
        self.expect("EOF", "end of query")

        bound = {v for p in patterns for v in p.variables()}
        for var, tok in projected:
            if var not in bound:
                raise ParseError(f"projected variable {var} is not bound by any pattern",
                                 tok.line, tok.column)
        return Query(tuple(v for v, _ in projected), tuple(patterns))

    def pattern(self) -> TriplePattern:
        return TriplePattern(self.slot("subject"), self.slot("predicate"), self.slot("object"))


def parse_query(text: Union[str, bytes]) -> Query:
    """Parse query text. Raises ParseError (with 1-based line/column) on anything invalid."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"query is not valid UTF-8: {exc.reason}", 1, exc.start + 1) from None
    return _Parser(_tokenize(text)).query()


def extract_triple_patterns(q: Query) -> list[TriplePattern]:
    return list(q.patterns)


def requested_predicates(p_req: list[TriplePattern]) -> list[tuple[int, Slot]]:
    return [(i, pattern.predicate) for i, pattern in enumerate(p_req)]


def is_query_iri(text: str) -> bool:
    """True if ``text`` survives as a single IRI token in the query grammar."""
    return bool(IRI_TEXT_RE.match(text))
