import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from treerank.examples import ExampleClause, ExamplePartition, ExampleStore, UnsatWitness, neg, pos


def test_add_is_idempotent():
    s = ExampleStore({"R"})
    assert s.add_example(pos("R", 1, 0))
    assert not s.add_example(pos("R", 1, 0))
    assert len(s) == 1


def test_fig3_example_set():
    s = ExampleStore({"R"})
    s.add_example(pos("R", 1, 0))
    s.add_example(pos("R", -2, -1))
    assert [str(c) for c in s] == ["R(1, 0)", "R(-2, -1)"]


def test_disjunction_is_one_clause():
    s = ExampleStore({"R"})
    s.add_example(ExampleClause((("I", (0,)),), (("R", (0, 1)),)))
    assert len(s) == 1
    assert str(s.clauses[0]) == "I(0) \\/ !R(0, 1)"


def test_empty_clause_rejected():
    with pytest.raises(ValueError):
        ExampleClause()


def test_extract_single_positive(session):
    s = ExampleStore({"R"}, session)
    s.add_example(pos("R", 1, 0))
    part = s.extract_pos_neg()
    assert part.positives("R") == {(1, 0)} and part.negatives("R") == set()


def test_extract_unit_propagation(session):
    s = ExampleStore({"R"}, session)
    s.add_example(ExampleClause((("I", (0,)), ("I", (1,)))))
    s.add_example(neg("I", 0))
    part = s.extract_pos_neg()
    assert (1,) in part.positives("I") and (0,) in part.negatives("I")


def test_extract_contradiction(session):
    s = ExampleStore({"R"}, session)
    s.add_example(pos("R", 0, 0))
    s.add_example(neg("R", 0, 0))
    res = s.extract_pos_neg()
    assert isinstance(res, UnsatWitness)
    assert set(res.core) == {pos("R", 0, 0), neg("R", 0, 0)}


def test_reject_partition_examples():
    s = ExampleStore({"R"})
    s.reject_partition([("R", (1, 0), True), ("R", (0, 1), True)])
    assert s.clauses[-1] == ExampleClause((), (("R", (1, 0)), ("R", (0, 1))))
    s.reject_partition([("R", (0, 0), True)])
    assert s.clauses[-1] == neg("R", 0, 0)
    with pytest.raises(ValueError):
        s.reject_partition([])


def test_partition_rejects_overlap():
    with pytest.raises(ValueError):
        ExamplePartition({"I": {(0,)}}, {"I": {(0,)}})


def test_wf_atoms_preferred_true(session):
    s = ExampleStore({"R"}, session)
    s.add_example(ExampleClause((("I", (0,)),), (("R", (0, 1)),)))
    s.add_example(ExampleClause((("R", (0, 1)), ("I", (2,)))))
    part = s.extract_pos_neg()
    assert (0, 1) in part.positives("R")


# properties -----------------------------------------------------------------

atoms = st.tuples(st.sampled_from(["I", "R"]), st.tuples(st.integers(0, 2)))
clauses = st.lists(st.tuples(atoms, st.booleans()), min_size=1, max_size=3).map(
    lambda lits: ExampleClause(tuple(a for a, s in lits if s), tuple(a for a, s in lits if not s)))
prop_settings = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@prop_settings
@given(st.lists(clauses, min_size=1, max_size=8))
def test_partition_satisfies_every_clause(session, cs):
    s = ExampleStore({"R"}, session)
    for c in cs:
        s.add_example(c)
    part = s.extract_pos_neg()
    if isinstance(part, UnsatWitness):
        # the core alone is contradictory
        t = ExampleStore({"R"}, session)
        for c in part.core:
            t.add_example(c)
        assert isinstance(t.extract_pos_neg(), UnsatWitness)
        return
    assignment = part.assignment()
    assert all(c.holds(assignment) for c in s)


@prop_settings
@given(st.lists(clauses, min_size=1, max_size=6), st.data())
def test_rejected_pattern_never_returns(session, cs, data):
    s = ExampleStore({"R"}, session)
    for c in cs:
        s.add_example(c)
    part = s.extract_pos_neg()
    if isinstance(part, UnsatWitness):
        return
    signed = sorted(part.assignment().items())
    if not signed:
        return
    core = data.draw(st.lists(st.sampled_from(signed), min_size=1, max_size=3, unique=True))
    s.reject_partition([(p, v, sign) for (p, v), sign in core])
    again = s.extract_pos_neg()
    if isinstance(again, UnsatWitness):
        return
    a = again.assignment()
    assert not all(a.get(atom) is sign for atom, sign in core)
