"""In-memory triple store partitioned into named graphs.

The knowledge base, the security ontology and one authorization profile per
agent live side by side as named graphs. Revocation retracts a whole profile
graph in one write-locked step, so readers see either all of it or none.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator

from kgauthz.formats import tokenize_line, unescape_literal
from kgauthz.terms import (
    KB,
    KNOWLEDGE_CLASSES,
    STATIC,
    GraphName,
    Term,
    Triple,
    TriplePattern,
    iri,
    literal,
)


class RWLock:
    """Many readers or one writer. Waiting writers block new readers."""

    def __init__(self):
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writer = False
        self._writers_waiting = 0

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer or self._writers_waiting:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            self._writers_waiting += 1
            while self._writer or self._readers:
                self._cond.wait()
            self._writers_waiting -= 1
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class _Graph:
    __slots__ = ("triples", "by_predicate")

    def __init__(self):
        self.triples: dict[tuple[Term, Term, Term], Triple] = {}
        self.by_predicate: dict[Term, set[tuple[Term, Term, Term]]] = defaultdict(set)


class TripleStore:
    def __init__(self):
        self._graphs: dict[GraphName, _Graph] = {}
        self.lock = RWLock()

    def insert(self, graph: GraphName, triple: Triple) -> None:
        with self.lock.write():
            self._insert(graph, triple)

    def insert_many(self, graph: GraphName, triples: Iterable[Triple]) -> None:
        with self.lock.write():
            for triple in triples:
                self._insert(graph, triple)

    def _insert(self, graph: GraphName, triple: Triple) -> None:
        g = self._graphs.get(graph)
        if g is None:
            g = self._graphs[graph] = _Graph()
        key = triple.key()
        if key in g.triples:
            return  # first insertion fixes the knowledge class
        g.triples[key] = triple
        g.by_predicate[triple.predicate].add(key)

    def retract_graph(self, graph: GraphName) -> int:
        with self.lock.write():
            return self._retract(graph)

    def _retract(self, graph: GraphName) -> int:
        g = self._graphs.pop(graph, None)
        return len(g.triples) if g else 0

    def match(self, graph: GraphName, pattern: TriplePattern) -> set[Triple]:
        with self.lock.read():
            return set(self._match(graph, pattern))

    def _match(self, graph: GraphName, pattern: TriplePattern) -> Iterator[Triple]:
        g = self._graphs.get(graph)
        if g is None:
            return
        if isinstance(pattern.predicate, Term):
            keys = g.by_predicate.get(pattern.predicate, ())
            candidates = (g.triples[k] for k in keys)
        else:
            candidates = iter(g.triples.values())
        for triple in candidates:
            if pattern.matches(triple):
                yield triple

    def triples(self, graph: GraphName) -> set[Triple]:
        with self.lock.read():
            g = self._graphs.get(graph)
            return set(g.triples.values()) if g else set()

    def size(self, graph: GraphName) -> int:
        with self.lock.read():
            g = self._graphs.get(graph)
            return len(g.triples) if g else 0

    def graphs(self) -> list[GraphName]:
        with self.lock.read():
            return sorted(self._graphs)

    def __len__(self) -> int:
        with self.lock.read():
            return sum(len(g.triples) for g in self._graphs.values())


class KBFormatError(ValueError):
    def __init__(self, message: str, line: int, source: str = "<kb>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line


def parse_term(token: str) -> Term:
    if token.startswith('"'):
        return literal(unescape_literal(token[1:-1]))
    return iri(token)


def parse_kb(text: str, source: str = "<kb>") -> list[Triple]:
    """Parse ``<s> <p> <o> [static|dynamic]`` lines. Literals are double-quoted."""
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = tokenize_line(raw)
        except ValueError as exc:
            raise KBFormatError(str(exc), lineno, source) from None
        if not tokens:
            continue
        if len(tokens) not in (3, 4):
            raise KBFormatError(f"expected 3 or 4 fields, got {len(tokens)}", lineno, source)
        knowledge_class = tokens[3] if len(tokens) == 4 else STATIC
        if knowledge_class not in KNOWLEDGE_CLASSES:
            raise KBFormatError(f"unknown knowledge class {knowledge_class!r}", lineno, source)
        try:
            s, p, o = (parse_term(tok) for tok in tokens[:3])
            triples.append(Triple(s, p, o, knowledge_class))
        except ValueError as exc:
            raise KBFormatError(str(exc), lineno, source) from None
    return triples


def load_kb(path: str | Path, store: TripleStore | None = None) -> TripleStore:
    path = Path(path)
    store = store if store is not None else TripleStore()
    store.insert_many(KB, parse_kb(path.read_text(encoding="utf-8"), str(path)))
    return store
