"""Policy decision point: sub-property inference over granted predicates.

Entailment of ``CanAccess(A, p)`` is the fixpoint of one Horn rule::

    CanAccess(A, p) <- CanAccess(A, q), subPropertyOf(p, q)

so granting a functional class grants every specialization below it, and
nothing else. Roles never widen a grant on their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from kgauthz.formats import tokenize_line
from kgauthz.store import TripleStore
from kgauthz.terms import (
    CAN_ACCESS,
    SUB_PROPERTY_OF,
    Slot,
    Term,
    Triple,
    TriplePattern,
    Variable,
    auth_profile_graph,
    iri,
)

if TYPE_CHECKING:
    from kgauthz.session import Session


class CycleError(ValueError):
    pass


class OntologyFormatError(ValueError):
    pass


def _find_cycle(edges: Iterable[tuple[Term, Term]]) -> list[Term] | None:
    parents: dict[Term, list[Term]] = {}
    for child, parent in edges:
        parents.setdefault(child, []).append(parent)
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[Term, int] = {}
    for start in sorted(parents):
        if color.get(start, WHITE) != WHITE:
            continue
        stack = [(start, iter(parents.get(start, ())))]
        path = [start]
        color[start] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
                continue
            state = color.get(nxt, WHITE)
            if state == GREY:
                return path[path.index(nxt):] + [nxt]
            if state == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(parents.get(nxt, ()))))
                path.append(nxt)
    return None


@dataclass(frozen=True)
class Ontology:
    """Global security ontology. Validated acyclic on construction; immutable afterwards."""

    sub_property_edges: frozenset[tuple[Term, Term]] = frozenset()
    admin_scopes: frozenset[str] = frozenset()
    _children: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sub_property_edges", frozenset(self.sub_property_edges))
        object.__setattr__(self, "admin_scopes", frozenset(self.admin_scopes))
        cycle = _find_cycle(self.sub_property_edges)
        if cycle:
            raise CycleError("sub-property cycle: " + " -> ".join(t.text for t in cycle))
        children: dict[Term, set[Term]] = {}
        for child, parent in self.sub_property_edges:
            children.setdefault(parent, set()).add(child)
        object.__setattr__(self, "_children", children)

    def children_of(self, parent: Term) -> frozenset[Term]:
        return frozenset(self._children.get(parent, ()))

    def is_admin(self, role: str) -> bool:
        return role in self.admin_scopes

    def to_triples(self) -> list[Triple]:
        sub = iri(SUB_PROPERTY_OF)
        return [Triple(c, sub, p) for c, p in sorted(self.sub_property_edges)]

    @classmethod
    def parse(cls, text: str, source: str = "<ontology>") -> "Ontology":
        """Read ``sub <child> <parent>`` and ``admin-scope <role>`` lines."""
        edges = set()
        scopes = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            try:
                tokens = tokenize_line(raw)
            except ValueError as exc:
                raise OntologyFormatError(f"{source}:{lineno}: {exc}") from None
            if not tokens:
                continue
            head, args = tokens[0], tokens[1:]
            if head == "sub" and len(args) == 2 and not any(a.startswith('"') for a in args):
                edges.add((iri(args[0]), iri(args[1])))
            elif head == "admin-scope" and len(args) == 1:
                scopes.add(args[0])
            else:
                raise OntologyFormatError(f"{source}:{lineno}: malformed line {raw.strip()!r}")
        return cls(frozenset(edges), frozenset(scopes))

    @classmethod
    def load(cls, path: str | Path) -> "Ontology":
        path = Path(path)
        return cls.parse(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class AuthProfile:
    agent_id: str
    granted: frozenset[Term]
    role: str

    @classmethod
    def from_store(cls, store: TripleStore, agent_id: str, role: str) -> "AuthProfile":
        """Read the live profile graph; the store is the single source of truth."""
        pattern = TriplePattern(iri(agent_id), iri(CAN_ACCESS), Variable("?p"))
        granted = {t.object for t in store.match(auth_profile_graph(agent_id), pattern)}
        return cls(agent_id, frozenset(granted), role)

    @property
    def active(self) -> bool:
        return bool(self.granted)


def closure(granted: Iterable[Term], o: Ontology) -> frozenset[Term]:
    """Everything reachable downward from ``granted`` along sub-property edges."""
    if not isinstance(o, Ontology):
        raise TypeError("closure needs a validated Ontology")
    result = set(granted)
    frontier = list(result)
    while frontier:
        parent = frontier.pop()
        for child in o.children_of(parent):
            if child not in result:
                result.add(child)
                frontier.append(child)
    return frozenset(result)


def inference_check(agent: AuthProfile, p: Term, o: Ontology) -> bool:
    if isinstance(p, Variable):
        raise TypeError("inference_check takes a constant predicate")
    return p in closure(agent.granted, o)


def auth_decision(
    session: "Session",
    s: Slot,
    p: Term,
    o_term: Slot,
    onto: Ontology,
    store: TripleStore,
    requested: Iterable[Slot],
) -> bool:
    """Hybrid decision: requested AND entailed by the profile AND an active, role-bound session.

    ``requested`` is the predicate list of the request being enforced; subject
    and object are accepted for the full decision signature but only the
    predicate is policy-relevant here (instance scoping happens in pruning).
    """
    if not (session.is_active and session.agent.role):
        return False
    if p not in set(requested):
        return False
    profile = AuthProfile.from_store(store, session.agent.agent_id, session.agent.role)
    return inference_check(profile, p, onto)
