"""Core RDF-ish value types shared by the store, parser and reasoner."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Literal as TypingLiteral, Union

IRI = "iri"
LITERAL = "literal"

STATIC = "static"
DYNAMIC = "dynamic"
KNOWLEDGE_CLASSES = (STATIC, DYNAMIC)

# Reserved vocabulary of the engine.
CAN_ACCESS = "canAccess"
SUB_PROPERTY_OF = "subPropertyOf"
ASSOCIATED_WITH_INTENT = "associatedWithIntent"
IN_DOMAIN = "inDomain"
CONTEXT_PREDICATES = (ASSOCIATED_WITH_INTENT, IN_DOMAIN)

_VARIABLE_RE = re.compile(r"\?[A-Za-z0-9_]+\Z")
_WHITESPACE_RE = re.compile(r"\s")


@dataclass(frozen=True, order=True)
class Term:
    """A constant: either a bare IRI token or a string literal."""

    kind: TypingLiteral["iri", "literal"]
    text: str

    def __post_init__(self):
        if self.kind not in (IRI, LITERAL):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if not self.text:
            raise ValueError("term text must be non-empty")
        if self.kind == IRI and _WHITESPACE_RE.search(self.text):
            raise ValueError(f"IRI contains whitespace: {self.text!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    def n3(self) -> str:
        """Surface syntax used by the KB format, the query grammar and the wire API."""
        if self.kind == IRI:
            return self.text
        escaped = self.text.replace("\\", "\\\\").replace('"', '\\"')
        escaped = escaped.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
        return f'"{escaped}"'

    def __str__(self) -> str:
        return self.n3()


def iri(text: str) -> Term:
    return Term(IRI, text)


def literal(text: str) -> Term:
    return Term(LITERAL, text)


@dataclass(frozen=True, order=True)
class Variable:
    name: str  # includes the leading "?"

    def __post_init__(self):
        if not _VARIABLE_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")

    def __str__(self) -> str:
        return self.name


Slot = Union[Term, Variable]


@dataclass(frozen=True)
class Triple:
    """A stored fact. Identity is (subject, predicate, object); the class tag rides along."""

    subject: Term
    predicate: Term
    object: Term
    knowledge_class: str = field(default=STATIC, compare=False)

    def __post_init__(self):
        if not self.subject.is_iri:
            raise ValueError("triple subject must be an IRI")
        if not self.predicate.is_iri:
            raise ValueError("triple predicate must be an IRI")
        if self.knowledge_class not in KNOWLEDGE_CLASSES:
            raise ValueError(f"unknown knowledge class {self.knowledge_class!r}")

    def key(self) -> tuple[Term, Term, Term]:
        return (self.subject, self.predicate, self.object)

    def __iter__(self):
        return iter(self.key())


@dataclass(frozen=True)
class TriplePattern:
    subject: Slot
    predicate: Slot
    object: Slot

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    @property
    def has_variable_predicate(self) -> bool:
        return isinstance(self.predicate, Variable)

    def variables(self) -> list[Variable]:
        return [slot for slot in self if isinstance(slot, Variable)]

    def matches(self, triple: Triple) -> bool:
        """Position-wise unification; a variable repeated in the pattern must bind consistently."""
        seen: dict[Variable, Term] = {}
        for slot, term in zip(self, triple.key()):
            if isinstance(slot, Variable):
                bound = seen.setdefault(slot, term)
                if bound != term:
                    return False
            elif slot != term:
                return False
        return True

    def __str__(self) -> str:
        return " ".join(str(slot) for slot in self)


@dataclass(frozen=True, order=True)
class GraphName:
    kind: str
    agent_id: str = ""

    def __str__(self) -> str:
        if self.kind == "auth":
            return f"AuthProfile({self.agent_id})"
        return self.kind


KB = GraphName("KB")
ONTOLOGY = GraphName("Ontology")


def auth_profile_graph(agent_id: str) -> GraphName:
    if not agent_id:
        raise ValueError("agent id must be non-empty")
    return GraphName("auth", agent_id)
