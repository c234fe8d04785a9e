"""In-process engine: the object both the HTTP facade and the CLI drive."""

from __future__ import annotations

import time
from typing import Callable

from kgauthz.audit import AuditLog, AuditRecord
from kgauthz.enforcement import EnforcementOutcome, enforce
from kgauthz.reasoner import CycleError, Ontology, OntologyFormatError
from kgauthz.service.config import ConfigError, EngineConfig
from kgauthz.session import (
    AgentDescriptor,
    PolicyFormatError,
    RolePolicy,
    Session,
    SessionManager,
    load_role_policies,
)
from kgauthz.store import KBFormatError, TripleStore, load_kb
from kgauthz.terms import KB, ONTOLOGY


class UnknownToken(Exception):
    code = "UnknownToken"


class Engine:
    def __init__(
        self,
        store: TripleStore,
        ontology: Ontology,
        policies: dict[str, RolePolicy],
        ttl_seconds: float = 3600,
        audit: AuditLog | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.store = store
        self.ontology = ontology
        self.policies = policies
        self.clock = clock
        self.audit = audit if audit is not None else AuditLog(clock=clock)
        self.sessions = SessionManager(store, policies, self.audit, ttl_seconds, clock)
        store.insert_many(ONTOLOGY, ontology.to_triples())

    @classmethod
    def from_config(cls, config: EngineConfig, clock: Callable[[], float] = time.time) -> "Engine":
        """Load every input file; any unreadable or malformed file raises ConfigError."""
        try:
            store = load_kb(config.kb_path)
            ontology = Ontology.load(config.ontology_path)
            policies = load_role_policies(config.role_policy_path)
        except (OSError, KBFormatError, OntologyFormatError, CycleError, PolicyFormatError,
                ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        audit = AuditLog(config.audit_export_path, clock=clock)
        return cls(store, ontology, policies, config.session_ttl_seconds, audit, clock)

    def counts(self) -> dict[str, int]:
        return {
            "triples": self.store.size(KB),
            "edges": len(self.ontology.sub_property_edges),
            "admin_scopes": len(self.ontology.admin_scopes),
            "roles": len(self.policies),
        }

    def register(self, desc: AgentDescriptor) -> Session:
        return self.sessions.register(desc)

    def session(self, token: str) -> Session:
        session = self.sessions.by_token(token)
        if session is None:
            raise UnknownToken("unknown session token")
        return session

    def query(self, token: str, query_text: str) -> EnforcementOutcome:
        return self.enforce(self.session(token), query_text)

    def enforce(self, session: Session, query_text: str) -> EnforcementOutcome:
        return enforce(session, query_text, self.store, self.ontology, self.audit, self.clock())

    def revoke(self, token: str) -> int:
        return self.sessions.revoke(self.session(token))

    def audit_records(self, agent_id: str | None = None, event: str | None = None) -> list[AuditRecord]:
        return self.audit.query_log(agent_id, event)
