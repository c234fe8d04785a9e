"""Policy enforcement point: the per-query authorization pipeline.

For every agent query: parse, extract triple patterns, and walk them in
source order. A variable predicate from a non-admin agent is a crawling probe
and is denied; a constant predicate outside the agent's entailed grant is a
violation that is logged and kills the session. Only when every pattern
passes is the query executed against the KB and the rows pruned to the
agent's intent/domain context.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from kgauthz.audit import ALLOWED, DENIAL, VIOLATION, AuditLog
from kgauthz.query import ParseError, Query, extract_triple_patterns, parse_query, requested_predicates
from kgauthz.reasoner import Ontology, auth_decision
from kgauthz.session import ACTIVE, AgentContext, Session, revoke, validate
from kgauthz.store import TripleStore
from kgauthz.terms import KB, CONTEXT_PREDICATES, Term, TriplePattern, Variable, iri

Binding = Mapping[Variable, Term]

PASS = "pass"
DENY = "deny"


@dataclass(frozen=True)
class Allowed:
    rows: tuple[dict[Variable, Term], ...] = ()
    kind: str = field(default="Allowed", init=False)


@dataclass(frozen=True)
class AccessDenied:
    reason: str
    kind: str = field(default="AccessDenied", init=False)


@dataclass(frozen=True)
class SessionRevoked:
    predicate: Term
    kind: str = field(default="SessionRevoked", init=False)


EnforcementOutcome = Union[Allowed, AccessDenied, SessionRevoked]


def wildcard_guard(pattern: TriplePattern, session: Session, onto: Ontology) -> str:
    if pattern.has_variable_predicate and not onto.is_admin(session.agent.role):
        return DENY
    return PASS


def row_key(row: Binding) -> tuple:
    return tuple((var.name, term.kind, term.text) for var, term in sorted(row.items()))


def _substitute(slot, row: Binding):
    return row.get(slot, slot) if isinstance(slot, Variable) else slot


def execute_query(q: Query, store: TripleStore) -> list[dict[Variable, Term]]:
    """Natural join of the query's patterns over the KB graph.

    Rows bind every variable of the query, are deduplicated and sorted by
    (variable name, bound term).
    """
    with store.lock.read():
        rows: list[dict[Variable, Term]] = [{}]
        # most selective (fewest variables) first; join order does not change the result set
        for pattern in sorted(q.patterns, key=lambda p: len(p.variables())):
            extended = []
            for row in rows:
                bound = TriplePattern(*(_substitute(slot, row) for slot in pattern))
                for triple in store._match(KB, bound):
                    new = dict(row)
                    for slot, term in zip(bound, triple.key()):
                        if isinstance(slot, Variable):
                            new[slot] = term
                    extended.append(new)
            rows = extended
            if not rows:
                break
    unique = {row_key(r): r for r in rows}
    return [unique[k] for k in sorted(unique)]


def context_associations(subject: Term, store: TripleStore) -> set[Term]:
    found = set()
    for pred in CONTEXT_PREDICATES:
        for triple in store.match(KB, TriplePattern(subject, iri(pred), Variable("?ctx"))):
            found.add(triple.object)
    return found


def row_subjects(row: Binding, patterns: Sequence[TriplePattern]) -> set[Term]:
    subjects = set()
    for pattern in patterns:
        term = _substitute(pattern.subject, row)
        if isinstance(term, Term):
            subjects.add(term)
    return subjects


def apply_contextual_pruning(
    rows: Sequence[Binding],
    ctx: AgentContext,
    store: TripleStore,
    patterns: Sequence[TriplePattern],
) -> list[Binding]:
    """Keep a row only if each of its subjects is instance-neutral or inside the agent's context."""
    scope = ctx.scope
    cache: dict[Term, bool] = {}

    def in_scope(subject: Term) -> bool:
        if subject not in cache:
            assoc = context_associations(subject, store)
            cache[subject] = not assoc or bool(assoc & scope)
        return cache[subject]

    return [row for row in rows if all(in_scope(s) for s in row_subjects(row, patterns))]


def project(rows: Sequence[Binding], projected: Sequence[Variable]) -> tuple[dict[Variable, Term], ...]:
    seen = {}
    for row in rows:
        out = {v: row[v] for v in projected}
        seen.setdefault(row_key(out), out)
    return tuple(seen[k] for k in sorted(seen))


def enforce(
    session: Session,
    query_text: str | bytes,
    store: TripleStore,
    onto: Ontology,
    audit: AuditLog | None = None,
    now: float | None = None,
) -> EnforcementOutcome:
    now = time.time() if now is None else now
    agent_id = session.agent_id

    def deny(reason: str, predicate: Term | None = None) -> AccessDenied:
        if audit is not None:
            audit.log(agent_id, DENIAL, predicate, reason)
        return AccessDenied(reason)

    with session.lock:
        state = validate(session, now, store, audit)
        if state != ACTIVE:
            return deny(state)
        try:
            query = parse_query(query_text)
        except ParseError as exc:
            return deny(f"parse-error: {exc}")

        p_req = extract_triple_patterns(query)
        requested = [p for _, p in requested_predicates(p_req)]
        for pattern in p_req:
            if wildcard_guard(pattern, session, onto) == DENY:
                return deny(f"variable predicate {pattern.predicate} in pattern ({pattern})")
            if pattern.has_variable_predicate:
                continue  # admin scope: nothing to entail for a wildcard
            if not auth_decision(session, pattern.subject, pattern.predicate, pattern.object,
                                 onto, store, requested):
                if audit is not None:
                    audit.log(agent_id, VIOLATION, pattern.predicate,
                              f"predicate not entailed by profile (pattern {pattern})")
                revoke(session, store, audit, reason=f"violation on {pattern.predicate}")
                return SessionRevoked(pattern.predicate)

        raw = execute_query(query, store)
        pruned = apply_contextual_pruning(raw, session.agent.context, store, p_req)
        rows = project(pruned, query.projected)
        if audit is not None:
            audit.log(agent_id, ALLOWED, detail=f"{len(rows)} rows")
        return Allowed(rows)
