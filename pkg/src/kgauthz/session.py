"""Agent registration, profile derivation, session lifecycle and revocation."""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

from kgauthz.audit import REGISTRATION, REVOCATION, AuditLog
from kgauthz.formats import parse_kv, tokenize_line
from kgauthz.store import TripleStore
from kgauthz.terms import CAN_ACCESS, DYNAMIC, Term, Triple, auth_profile_graph, iri

DEFAULT_TTL_SECONDS = 3600

ACTIVE = "active"
REVOKED = "revoked"
EXPIRED = "expired"


class RegistrationError(Exception):
    code = "registration_error"


class DuplicateAgent(RegistrationError):
    code = "DuplicateAgent"


class UnknownRole(RegistrationError):
    code = "UnknownRole"


class EmptyGrant(RegistrationError):
    code = "EmptyGrant"


class PolicyFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AgentContext:
    intent_ids: frozenset[Term] = frozenset()
    domain_ids: frozenset[Term] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "intent_ids", frozenset(self.intent_ids))
        object.__setattr__(self, "domain_ids", frozenset(self.domain_ids))

    @property
    def scope(self) -> frozenset[Term]:
        return self.intent_ids | self.domain_ids


@dataclass(frozen=True)
class AgentDescriptor:
    agent_id: str
    role: str
    requested_predicates: frozenset[Term]
    context: AgentContext = field(default_factory=AgentContext)

    def __post_init__(self):
        object.__setattr__(self, "requested_predicates", frozenset(self.requested_predicates))
        iri(self.agent_id)  # agent ids are subjects of canAccess triples
        if not self.role:
            raise ValueError("role must be non-empty")
        if not self.requested_predicates:
            raise ValueError("an agent must request at least one predicate")


@dataclass(frozen=True)
class RolePolicy:
    role: str
    allowed_predicates: frozenset[Term]


def parse_role_policies(text: str, source: str = "<roles>") -> dict[str, RolePolicy]:
    """Read ``role <name> <predicate> [<predicate> ...]`` lines."""
    policies: dict[str, RolePolicy] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = tokenize_line(raw)
        if not tokens:
            continue
        if tokens[0] != "role" or len(tokens) < 3:
            raise PolicyFormatError(f"{source}:{lineno}: expected 'role <name> <predicate>...'")
        name = tokens[1]
        if name in policies:
            raise PolicyFormatError(f"{source}:{lineno}: role {name!r} defined twice")
        policies[name] = RolePolicy(name, frozenset(iri(t) for t in tokens[2:]))
    return policies


def load_role_policies(path: str | Path) -> dict[str, RolePolicy]:
    path = Path(path)
    return parse_role_policies(path.read_text(encoding="utf-8"), str(path))


def parse_descriptor(text: str, source: str = "<descriptor>") -> AgentDescriptor:
    """Agent descriptor files use ``key = value`` lines.

    Keys: ``agent``, ``role``, ``predicates``, and optionally ``intents`` and
    ``domains``; list values are whitespace separated.
    """
    values = parse_kv(text, source)
    missing = {"agent", "role", "predicates"} - values.keys()
    if missing:
        raise ValueError(f"{source}: missing keys {sorted(missing)}")
    unknown = values.keys() - {"agent", "role", "predicates", "intents", "domains"}
    if unknown:
        raise ValueError(f"{source}: unknown keys {sorted(unknown)}")
    terms = lambda key: frozenset(iri(tok) for tok in values.get(key, "").split())
    return AgentDescriptor(
        agent_id=values["agent"],
        role=values["role"],
        requested_predicates=terms("predicates"),
        context=AgentContext(terms("intents"), terms("domains")),
    )


def load_descriptor(path: str | Path) -> AgentDescriptor:
    path = Path(path)
    return parse_descriptor(path.read_text(encoding="utf-8"), str(path))


@dataclass(eq=False)
class Session:
    session_id: str
    agent: AgentDescriptor
    granted: frozenset[Term]
    created_at: float
    expires_at: float
    state: str = ACTIVE
    expired: bool = False
    # Serializes enforce/revoke/validate on this session.
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    @property
    def is_active(self) -> bool:
        return self.state == ACTIVE

    @property
    def agent_id(self) -> str:
        return self.agent.agent_id


def grant_for(desc: AgentDescriptor, policies: Mapping[str, RolePolicy]) -> frozenset[Term]:
    if desc.role not in policies:
        raise UnknownRole(f"unknown role {desc.role!r}")
    return desc.requested_predicates & policies[desc.role].allowed_predicates


def revoke(session: Session, store: TripleStore, audit: AuditLog | None = None,
           reason: str = "revoked") -> int:
    """Retract the agent's profile graph and mark the session revoked. Idempotent."""
    with session.lock:
        if session.state == REVOKED:
            return 0
        session.state = REVOKED
        removed = store.retract_graph(auth_profile_graph(session.agent_id))
        if audit is not None:
            audit.log(session.agent_id, REVOCATION, detail=f"{reason}; {removed} assertions retracted")
        return removed


def validate(session: Session, now: float, store: TripleStore,
             audit: AuditLog | None = None) -> str:
    with session.lock:
        if session.state == REVOKED:
            return EXPIRED if session.expired else REVOKED
        if now >= session.expires_at:
            session.expired = True
            revoke(session, store, audit, reason="expired")
            return EXPIRED
        return ACTIVE


class SessionManager:
    """Registry of live sessions keyed by token and by agent id."""

    def __init__(self, store: TripleStore, policies: Mapping[str, RolePolicy],
                 audit: AuditLog | None = None, ttl_seconds: float = DEFAULT_TTL_SECONDS,
                 clock: Callable[[], float] = time.time):
        if ttl_seconds <= 0:
            raise ValueError("session TTL must be positive")
        self.store = store
        self.policies = dict(policies)
        self.audit = audit
        self.ttl_seconds = ttl_seconds
        self.clock = clock
        self._by_token: dict[str, Session] = {}
        self._by_agent: dict[str, Session] = {}
        self._lock = threading.Lock()

    def register(self, desc: AgentDescriptor) -> Session:
        granted = grant_for(desc, self.policies)
        if not granted:
            raise EmptyGrant(f"none of the requested predicates are allowed for role {desc.role!r}")
        with self._lock:
            existing = self._by_agent.get(desc.agent_id)
            if existing is not None and self.validate(existing) == ACTIVE:
                raise DuplicateAgent(f"agent {desc.agent_id!r} already has an active session")
            now = self.clock()
            session = Session(secrets.token_hex(16), desc, granted, now, now + self.ttl_seconds)
            graph = auth_profile_graph(desc.agent_id)
            self.store.retract_graph(graph)  # at most one profile per agent
            subject, can_access = iri(desc.agent_id), iri(CAN_ACCESS)
            self.store.insert_many(
                graph, (Triple(subject, can_access, p, DYNAMIC) for p in sorted(granted)))
            self._by_token[session.session_id] = session
            self._by_agent[desc.agent_id] = session
        if self.audit is not None:
            self.audit.log(desc.agent_id, REGISTRATION,
                           detail="granted " + " ".join(p.text for p in sorted(granted)))
        return session

    def revoke(self, session: Session, reason: str = "revoked") -> int:
        return revoke(session, self.store, self.audit, reason)

    def validate(self, session: Session, now: float | None = None) -> str:
        return validate(session, self.clock() if now is None else now, self.store, self.audit)

    def by_token(self, token: str) -> Session | None:
        with self._lock:
            return self._by_token.get(token)

    def by_agent(self, agent_id: str) -> Session | None:
        with self._lock:
            return self._by_agent.get(agent_id)

    def sessions(self) -> Iterable[Session]:
        with self._lock:
            return list(self._by_token.values())
