import random

import pytest
from hypothesis import given, settings, strategies as st

from kgauthz.query import ParseError, extract_triple_patterns, parse_query, requested_predicates
from kgauthz.terms import TriplePattern, Variable, iri, literal

from strategies import queries

X, P = Variable("?x"), Variable("?p")


def test_single_pattern():
    q = parse_query("SELECT ?x WHERE { ?x monitors cell1 . }")
    assert q.projected == (X,)
    assert q.patterns == (TriplePattern(X, iri("monitors"), iri("cell1")),)


def test_variable_predicate_parses():
    q = parse_query("SELECT ?x WHERE { ?x ?p cell1 . }")
    assert q.patterns[0].predicate == P


def test_unbound_projection_is_rejected():
    with pytest.raises(ParseError) as err:
        parse_query("SELECT ?y WHERE { ?x monitors cell1 . }")
    assert (err.value.line, err.value.column) == (1, 8)


def test_keywords_are_case_insensitive_and_final_dot_optional():
    q = parse_query('select ?x where { ?x label "a \\"b\\"" }')
    assert q.patterns[0].object == literal('a "b"')


def test_dotted_iri_and_terminator():
    q = parse_query("SELECT ?x WHERE { ?x ex.org/p v1.2. }")
    assert q.patterns[0].predicate == iri("ex.org/p")
    assert q.patterns[0].object == iri("v1.2")


def test_error_positions_are_one_based_over_lines():
    with pytest.raises(ParseError) as err:
        parse_query("SELECT ?x\nWHERE {\n  ?x monitors }")
    assert (err.value.line, err.value.column) == (3, 15)


@pytest.mark.parametrize("text", [
    "",
    "SELECT WHERE { ?x p o . }",
    "SELECT ?x { ?x p o . }",
    "SELECT ?x WHERE { }",
    "SELECT ?x WHERE { ?x p . }",
    "SELECT ?x WHERE { ?x p o . ",
    "SELECT ?x WHERE { ?x p o . } trailing",
    'SELECT ?x WHERE { "lit" p ?x . }',
    'SELECT ?x WHERE { ?x "lit" o . }',
    'SELECT ?x WHERE { ?x p "open . }',
    'SELECT ?x WHERE { ?x p "" . }',
    "SELECT ?x WHERE { ?x p o .. }",
    "SELECT ? WHERE { ?x p o . }",
])
def test_malformed(text):
    with pytest.raises(ParseError):
        parse_query(text)


def test_invalid_utf8_bytes():
    with pytest.raises(ParseError):
        parse_query(b"SELECT \xff")


def test_extract_keeps_order_and_duplicates():
    q = parse_query("SELECT ?x WHERE { ?x a o . ?x b o . ?x a o . }")
    p_req = extract_triple_patterns(q)
    assert len(p_req) == 3
    assert [p.predicate.text for p in p_req] == ["a", "b", "a"]
    assert requested_predicates(p_req) == [(0, iri("a")), (1, iri("b")), (2, iri("a"))]


def test_requested_predicates_keeps_variables():
    q = parse_query("SELECT ?x WHERE { ?x ?p cell1 . }")
    assert requested_predicates(extract_triple_patterns(q)) == [(0, P)]


@given(queries)
def test_round_trip(q):
    assert parse_query(str(q)) == q


@given(queries)
def test_extraction_preserves_patterns(q):
    assert extract_triple_patterns(parse_query(str(q))) == list(q.patterns)


@settings(max_examples=300)
@given(st.binary(max_size=80))
def test_arbitrary_bytes_never_crash(data):
    try:
        parse_query(data)
    except ParseError:
        pass


@settings(max_examples=300)
@given(st.text(alphabet='SELECTWHR ?xp{}."\\\n\tab', max_size=60))
def test_near_miss_text_never_crashes(text):
    try:
        parse_query(text)
    except ParseError:
        pass
