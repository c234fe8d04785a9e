import pytest
from hypothesis import given, strategies as st

from kgauthz.audit import AuditLog
from kgauthz.reasoner import AuthProfile, Ontology, auth_decision, inference_check
from kgauthz.session import (
    ACTIVE,
    EXPIRED,
    REVOKED,
    AgentContext,
    AgentDescriptor,
    DuplicateAgent,
    EmptyGrant,
    PolicyFormatError,
    RolePolicy,
    SessionManager,
    UnknownRole,
    parse_descriptor,
    parse_role_policies,
)
from kgauthz.store import TripleStore
from kgauthz.terms import Variable, auth_profile_graph, iri


class Clock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now


def terms(*names):
    return frozenset(iri(n) for n in names)


POLICIES = {
    "Monitor": RolePolicy("Monitor", terms("monitors", "observes", "hasType")),
    "Optimizer": RolePolicy("Optimizer", terms("observes", "optimizes")),
}


@pytest.fixture
def clock():
    return Clock()


@pytest.fixture
def manager(clock):
    return SessionManager(TripleStore(), POLICIES, AuditLog(clock=clock), ttl_seconds=60, clock=clock)


def monitor(agent="agentM", preds=("monitors", "actuates")):
    return AgentDescriptor(agent, "Monitor", terms(*preds), AgentContext(terms("intent7")))


def test_grant_is_intersection_with_role_policy(manager):
    session = manager.register(monitor())
    assert session.granted == terms("monitors")
    assert session.state == ACTIVE
    g = auth_profile_graph("agentM")
    assert {t.object for t in manager.store.triples(g)} == terms("monitors")


def test_grant_equals_request_when_allowed(manager):
    session = manager.register(monitor(preds=("monitors", "observes")))
    assert session.granted == terms("monitors", "observes")


def test_registration_errors(manager):
    with pytest.raises(EmptyGrant):
        manager.register(monitor(preds=("actuates",)))
    with pytest.raises(UnknownRole):
        manager.register(AgentDescriptor("x", "Pilot", terms("monitors")))
    manager.register(monitor())
    with pytest.raises(DuplicateAgent):
        manager.register(monitor())


def test_session_token_is_128_bit_hex(manager):
    token = manager.register(monitor()).session_id
    assert len(token) == 32
    int(token, 16)


def test_revoke_retracts_profile_and_is_idempotent(manager):
    session = manager.register(monitor(preds=("monitors", "observes", "hasType")))
    assert manager.revoke(session) == 3
    assert session.state == REVOKED
    assert manager.store.size(auth_profile_graph("agentM")) == 0
    assert manager.revoke(session) == 0
    profile = AuthProfile.from_store(manager.store, "agentM", "Monitor")
    assert not inference_check(profile, iri("monitors"), Ontology())


def test_reregistration_after_revoke_creates_new_session(manager):
    old = manager.register(monitor())
    manager.revoke(old)
    new = manager.register(monitor())
    assert new.session_id != old.session_id
    assert old.state == REVOKED and new.state == ACTIVE
    # revoking the stale session again must not touch the new profile
    assert manager.revoke(old) == 0
    assert manager.store.size(auth_profile_graph("agentM")) == 1


def test_validate_lifecycle(manager, clock):
    session = manager.register(monitor())
    assert manager.validate(session, clock.now + 59.9) == ACTIVE
    assert manager.validate(session, session.expires_at) == EXPIRED
    assert manager.store.size(auth_profile_graph("agentM")) == 0
    assert manager.validate(session, 0) == EXPIRED
    assert session.state == REVOKED


def test_validate_revoked(manager):
    session = manager.register(monitor())
    manager.revoke(session)
    assert manager.validate(session, 0) == REVOKED


def test_expired_agent_may_register_again(manager, clock):
    manager.register(monitor())
    clock.now += 61
    assert manager.register(monitor()).state == ACTIVE


def test_audit_records_registration_and_revocation(manager):
    session = manager.register(monitor())
    manager.revoke(session)
    manager.revoke(session)
    events = [r.event for r in manager.audit.query_log(agent_id="agentM")]
    assert events == ["registration", "revocation"]


def test_auth_decision(manager):
    o = Ontology(frozenset({(iri("monitorsLatency"), iri("observes"))}))
    session = manager.register(monitor(preds=("monitors", "observes")))
    x, y = Variable("?x"), Variable("?y")
    req = [iri("monitors"), iri("monitorsLatency")]
    assert auth_decision(session, x, iri("monitors"), y, o, manager.store, req)
    assert auth_decision(session, x, iri("monitorsLatency"), y, o, manager.store, req)
    # Req conjunct: a predicate not in the current request is not decided true
    assert not auth_decision(session, x, iri("observes"), y, o, manager.store, req)
    assert not auth_decision(session, x, iri("hasType"), y, o, manager.store, [iri("hasType")])
    manager.revoke(session)
    for p in ("monitors", "monitorsLatency"):
        assert not auth_decision(session, x, iri(p), y, o, manager.store, [iri(p)])


def test_role_alone_never_grants(manager):
    # Monitor's role policy covers hasType, but this agent was not granted it
    session = manager.register(monitor(preds=("monitors",)))
    p = iri("hasType")
    assert not auth_decision(session, Variable("?x"), p, Variable("?y"), Ontology(), manager.store, [p])


def test_policy_and_descriptor_formats():
    policies = parse_role_policies("# c\nrole Monitor monitors observes\nrole Admin a\n")
    assert policies["Monitor"].allowed_predicates == terms("monitors", "observes")
    with pytest.raises(PolicyFormatError):
        parse_role_policies("role Monitor")
    with pytest.raises(PolicyFormatError):
        parse_role_policies("role A x\nrole A y")
    desc = parse_descriptor("agent = agentM\nrole = Monitor\npredicates = monitors observes\n"
                            "intents = intent7\n")
    assert desc.requested_predicates == terms("monitors", "observes")
    assert desc.context.intent_ids == terms("intent7") and not desc.context.domain_ids
    with pytest.raises(ValueError):
        parse_descriptor("agent = a\nrole = Monitor\n")
    with pytest.raises(ValueError):
        parse_descriptor("agent = a\nrole = M\npredicates = p\ncolour = red\n")


all_preds = ["p0", "p1", "p2", "p3", "p4", "p5"]


@given(
    st.dictionaries(st.sampled_from(["R0", "R1", "R2"]), st.sets(st.sampled_from(all_preds), min_size=1), min_size=1),
    st.sampled_from(["R0", "R1", "R2"]),
    st.sets(st.sampled_from(all_preds), min_size=1),
)
def test_grant_never_exceeds_role_policy(policy_sets, role, requested):
    policies = {r: RolePolicy(r, terms(*ps)) for r, ps in policy_sets.items()}
    manager = SessionManager(TripleStore(), policies)
    try:
        session = manager.register(AgentDescriptor("A", role, terms(*requested)))
    except (UnknownRole, EmptyGrant):
        assert role not in policies or not (set(requested) & policy_sets[role])
        return
    assert session.granted <= policies[role].allowed_predicates
    assert session.granted == terms(*requested) & policies[role].allowed_predicates


@given(st.lists(st.sampled_from(["revoke", "validate", "expire", "register"]), max_size=12))
def test_revocation_is_irreversible(ops):
    clock = Clock()
    manager = SessionManager(TripleStore(), POLICIES, ttl_seconds=10, clock=clock)
    session = manager.register(monitor())
    was_revoked = False
    for op in ops:
        if op == "revoke":
            manager.revoke(session)
        elif op == "validate":
            manager.validate(session)
        elif op == "expire":
            clock.now += 11
        else:
            try:
                manager.register(monitor())
            except DuplicateAgent:
                pass
        was_revoked = was_revoked or session.state == REVOKED
        if was_revoked:
            assert session.state == REVOKED
