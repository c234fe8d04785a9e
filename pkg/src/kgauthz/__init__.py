"""Zero-trust, triple-level authorization for knowledge-graph agent queries."""

from kgauthz.terms import (
    IRI,
    LITERAL,
    GraphName,
    Term,
    Triple,
    TriplePattern,
    Variable,
    iri,
    literal,
)
from kgauthz.store import TripleStore
from kgauthz.query import ParseError, Query, parse_query
from kgauthz.reasoner import AuthProfile, CycleError, Ontology, closure, inference_check
from kgauthz.session import AgentContext, AgentDescriptor, RolePolicy, Session
from kgauthz.audit import AuditLog, AuditRecord
from kgauthz.enforcement import AccessDenied, Allowed, SessionRevoked, enforce

__all__ = [
    "IRI",
    "LITERAL",
    "AccessDenied",
    "AgentContext",
    "AgentDescriptor",
    "Allowed",
    "AuditLog",
    "AuditRecord",
    "AuthProfile",
    "CycleError",
    "GraphName",
    "Ontology",
    "ParseError",
    "Query",
    "RolePolicy",
    "Session",
    "SessionRevoked",
    "Term",
    "Triple",
    "TriplePattern",
    "TripleStore",
    "Variable",
    "closure",
    "enforce",
    "inference_check",
    "iri",
    "literal",
    "parse_query",
]
