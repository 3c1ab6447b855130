import pytest
from hypothesis import given, settings, strategies as st

from conftest import BENCHMARKS, bench
from treerank.lia import FALSE, Mul, Var, conj, disj, eq, eval_formula, eval_term, formula_vars, gt
from treerank.smt import Sat, Unsat, LabeledConstraint
from treerank.lia import Atom, Not
from treerank.t2 import (
    ParseError,
    compact_system,
    compose_rules,
    encode_compact,
    UndeclaredLocation,
    encode_system,
    parse_t2,
    print_t2,
    to_init_and_transition,
)

pc, pcp, x, xp = Var("pc"), Var("pc'"), Var("x"), Var("x'")


def test_running_example_has_three_rules():
    ts = parse_t2(bench("running_example.t2"))
    assert len(ts.rules) == 3
    assert ts.variables == ("x",)
    assert ts.start == "entry"


def test_empty_rule_list():
    ts = parse_t2("START: l0;")
    assert ts.rules == ()
    iota, tau = to_init_and_transition(ts)
    assert tau == FALSE
    assert iota == eq(pc, 0)


def test_product_update_parses():
    ts = parse_t2(bench("nonlinear_square.t2"))
    loop = [r for r in ts.rules if r.src == "loop" and r.dst == "loop"][0]
    assert isinstance(loop.update_map["y"], Mul)


def test_single_self_loop_encoding():
    ts = parse_t2("START: l0;\nFROM: l0; assume(x > 0); x := x - 1; TO: l0;")
    iota, tau = to_init_and_transition(ts)
    assert tau == conj(eq(pc, 0), gt(x, 0), eq(pcp, 0), eq(xp, x - 1))


def test_identity_updates_are_explicit():
    ts = parse_t2("START: a;\nFROM: a; x := x + 1; TO: b;\nFROM: b; TO: a;")
    ts2 = parse_t2("START: a;\nFROM: a; x := x + 1; TO: b;\nFROM: b; y := y; TO: a;")
    _, tau = to_init_and_transition(ts2)
    assert eq(Var("y'"), Var("y")) in tau.args[1].args
    assert ts.variables == ("x",)


def test_running_example_transition_matches_loop_equations():
    enc = encode_system(parse_t2(bench("running_example.t2")))
    loop = {"pc": 1, "pc'": 1}
    # x < 0 and x' = x + 1 ; x > 0 and x' = x - 1
    from treerank.lia import eval_formula

    assert eval_formula(enc.tau, {**loop, "x": -2, "x'": -1})
    assert eval_formula(enc.tau, {**loop, "x": 1, "x'": 0})
    assert not eval_formula(enc.tau, {**loop, "x": 0, "x'": 1})
    assert not eval_formula(enc.tau, {**loop, "x": 1, "x'": 2})


def test_sequential_assignments_compose():
    ts = parse_t2("START: a;\nFROM: a; x := x + 1; y := x; TO: a;")
    r = ts.rules[0]
    assert r.update_map["y"] == Var("x") + 1


def test_nondet_becomes_unconstrained_primed_variable():
    enc = encode_system(parse_t2(bench("neg2x_plus9.t2")))
    from treerank.lia import eval_formula

    for v in (-7, 0, 3, 100):
        assert eval_formula(enc.tau, {"pc": 0, "x": 5, "pc'": 1, "x'": v})
    assert all(not n.startswith("_nd") for n in formula_vars(enc.tau))


@pytest.mark.parametrize("text, line, col", [
    ("START: a;\nFROM: a;\n  x := 1 $;\nTO: a;", 3, 10),
    ("START: a;\nFROM: a;\n  assume(x >);\nTO: a;", 3, 13),
    ("START a;", 1, 7),
])
def test_parse_errors_carry_positions(text, line, col):
    with pytest.raises(ParseError) as e:
        parse_t2(text)
    assert (e.value.line, e.value.col) == (line, col)


def test_undeclared_location():
    from treerank.t2 import TransitionSystem

    with pytest.raises(UndeclaredLocation):
        TransitionSystem(("x",), ("a",), "b")


@pytest.mark.parametrize("name", sorted(p.name for p in BENCHMARKS.glob("*.t2")))
def test_round_trip_on_fixtures(name):
    ts = parse_t2(bench(name))
    assert parse_t2(print_t2(ts)) == ts


_names = st.sampled_from(["a", "b", "c"])
_vars = st.sampled_from(["x", "y", "z"])
_consts = st.integers(-9, 9)


@st.composite
def _systems(draw):
    lines = ["START: a;"]
    for _ in range(draw(st.integers(0, 4))):
        src, dst = draw(_names), draw(_names)
        lines.append(f"FROM: {src};")
        if draw(st.booleans()):
            v, c = draw(_vars), draw(_consts)
            op = draw(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]))
            lines.append(f"  assume({v} {op} {c});")
        for _ in range(draw(st.integers(0, 2))):
            v, w, c = draw(_vars), draw(_vars), draw(_consts)
            kind = draw(st.sampled_from(["lin", "nondet", "mul"]))
            rhs = {"lin": f"{w} + {c}", "nondet": "?", "mul": f"{w} * {w}"}[kind]
            lines.append(f"  {v} := {rhs};")
        lines.append(f"TO: {dst};")
    return "\n".join(lines)


@settings(max_examples=150)
@given(_systems())
def test_round_trip_property(text):
    ts = parse_t2(text)
    try:
        printed = print_t2(ts)
    except ValueError:
        return  # e.g. a nondeterministic value read by a later assignment
    assert parse_t2(printed) == ts


def test_pc_values_stay_in_location_range(session):
    for name in ("running_example.t2", "long_lasso.t2", "nonlinear_square.t2"):
        ts = parse_t2(bench(name))
        enc = encode_system(ts)
        n = len(ts.locations)
        outside = disj(*(Not(conj(Atom(">=", v, 0 * v), Atom("<=", v, v * 0 + (n - 1))))
                         for v in (pc, pcp)))
        res = session.check_sat([LabeledConstraint("tau", enc.tau), LabeledConstraint("out", outside)])
        assert isinstance(res, Unsat), name


# location compaction ---------------------------------------------------------


def test_compact_running_example_drops_program_counter():
    enc = encode_compact(parse_t2(bench("running_example.t2")))
    assert enc.state == ("x",)
    assert eval_formula(enc.tau, {"x": 3, "x'": 2}) and not eval_formula(enc.tau, {"x": 0, "x'": -1})


def test_compact_folds_start_rules_into_initial_condition():
    enc = encode_compact(parse_t2(bench("nonlinear_square.t2")))
    assert enc.state == ("res", "x", "y")
    assert eval_formula(enc.iota, {"res": 1, "x": 7, "y": 2})
    assert not eval_formula(enc.iota, {"res": 1, "x": -1, "y": 2})  # leaves through the check


def test_compose_rules_renames_nondeterminism_apart():
    ts = parse_t2("START: a;\nFROM: a;\n  x := ?;\nTO: b;\nFROM: b;\n  assume(x > 0);\n  x := ?;\nTO: c;\n")
    r = compose_rules(ts.rules[0], ts.rules[1], iter(range(100)))
    nd = [v for v in formula_vars(r.guard) if v.startswith("_nd")]
    assert len(nd) == 1 and r.update_map["x"] != Var(nd[0])


_locs = st.sampled_from(["b", "c", "d"])


@st.composite
def _flow_systems(draw):
    lines = ["START: a;"]
    # b always loops, so at least one location survives compaction
    rules = [("a", draw(_locs)), ("b", "b")] + [(draw(st.sampled_from("abcd")) if draw(st.integers(0, 9)) == 0
                                     else draw(_locs), draw(_locs)) for _ in range(draw(st.integers(1, 5)))]
    for src, dst in rules:
        lines.append(f"FROM: {src};")
        if draw(st.booleans()):
            lines.append(f"  assume({draw(_vars)} {draw(st.sampled_from(['<', '>=', '!=']))} {draw(_consts)});")
        for _ in range(draw(st.integers(0, 2))):
            v, w, c = draw(_vars), draw(_vars), draw(st.integers(-2, 2))
            lines.append(f"  {v} := {w} + {c};")
        lines.append(f"TO: {dst};")
    return "\n".join(lines)


def _successors(ts, loc, val):
    for r in ts.rules:
        if r.src == loc and eval_formula(r.guard, val):
            nxt = dict(val)
            nxt.update({x: eval_term(t, val) for x, t in r.updates})
            yield r.dst, nxt


def _kept_successors(ts, kept, loc, val, depth=6):
    """States at kept locations reachable through dropped ones only."""
    out = set()
    for dst, nxt in _successors(ts, loc, val):
        if dst in kept:
            out.add((dst,) + tuple(nxt[x] for x in ts.variables))
        elif depth:
            out |= _kept_successors(ts, kept, dst, nxt, depth - 1)
    return out


@settings(max_examples=60, deadline=None)
@given(_flow_systems(), st.integers(-3, 3), st.integers(-3, 3))
def test_compaction_preserves_steps_between_kept_locations(session, text, x0, y0):
    ts = parse_t2(text)
    cts = compact_system(ts)
    enc = encode_compact(ts)
    kept = set(cts.locations)
    with_pc = len(enc.state) > len(ts.variables)

    def valuation(state, prime=""):
        loc, values = state[0], state[1:]
        v = {x + prime: c for x, c in zip(ts.variables, values)}
        if with_pc:
            v[enc.state[0] + prime] = cts.location_index(loc)
        return v

    start = ("a",) + tuple({"x": x0, "y": y0}.get(x, 0) for x in ts.variables)
    folded = "a" not in {r.dst for r in cts.rules} and cts.rules
    frontier = _kept_successors(ts, kept, "a", valuation(start)) if folded else {start}
    for s in frontier:
        # the initial condition may quantify over overwritten start values
        here = [eq(Var(k), c) for k, c in valuation(s).items()]
        assert isinstance(session.check_sat([LabeledConstraint("q", conj(enc.iota, *here))]), Sat), s
    seen = set()
    for _ in range(4):
        nxt = set()
        for s in frontier - seen:
            seen.add(s)
            succ = _kept_successors(ts, kept, s[0], dict(zip(ts.variables, s[1:])))
            for t in succ:
                assert eval_formula(enc.tau, {**valuation(s), **valuation(t, "'")}), (s, t)
            # and the encoding allows nothing else
            others = [Not(conj(*(eq(Var(k), c) for k, c in valuation(t, "'").items()))) for t in succ]
            here = [eq(Var(k), c) for k, c in valuation(s).items()]
            res = session.check_sat([LabeledConstraint("q", conj(enc.tau, *here, *others))])
            assert isinstance(res, Unsat), (s, succ)
            nxt |= succ
        frontier = nxt
