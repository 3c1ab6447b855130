"""Reader and writer for a small subset of the T2 transition-system format.

Accepted input::

    START: l0;
    FROM: l0;
      assume(x > 0 && y != 1);   // guards
      x := x - 1;                // sequential assignments
      y := ?;                    // nondeterministic assignment
    TO: l1;

Keywords are case-insensitive and ``//`` starts a comment. Variables are
declared by use and kept in sorted order, which makes printing and reparsing
a system an identity. Rule bodies are executed symbolically, so every rule
becomes a guard over the pre-state and a parallel update map. Nondeterministic values become fresh variables whose
names start with ``_nd``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .lia import (
    FALSE,
    TRUE,
    Add,
    And,
    Atom,
    Const,
    Formula,
    Mul,
    Neg,
    Not,
    Or,
    Term,
    Var,
    compare,
    conj,
    disj,
    eq,
    eval_formula,
    formula_vars,
    negate,
    show_formula,
    show_term,
    substitute,
    substitute_term,
    term_vars,
)

NONDET_PREFIX = "_nd"


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class UndeclaredLocation(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    src: str
    guard: Formula
    updates: Tuple[Tuple[str, Term], ...]  # only non-identity updates, sorted
    dst: str

    @property
    def update_map(self) -> Dict[str, Term]:
        return dict(self.updates)


@dataclass(frozen=True)
class TransitionSystem:
    variables: Tuple[str, ...]
    locations: Tuple[str, ...]
    start: str
    rules: Tuple[Rule, ...] = ()

    def __post_init__(self):
        locs = set(self.locations)
        if self.start not in locs:
            raise UndeclaredLocation(self.start)
        for r in self.rules:
            for loc in (r.src, r.dst):
                if loc not in locs:
                    raise UndeclaredLocation(loc)

    def location_index(self, loc: str) -> int:
        return self.locations.index(loc)


# --------------------------------------------------------------------------
# Lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+) |
    (?P<nl>\n) |
    (?P<comment>//[^\n]*) |
    (?P<num>\d+) |
    (?P<ident>[A-Za-z_][A-Za-z0-9_.'$]*) |
    (?P<op>:=|==|!=|<>|<=|>=|&&|\|\||[-+*()<>=!;:?,])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> List[_Tok]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - line_start + 1))
    return out


# --------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0
        self.variables: List[str] = []
        self.locations: List[str] = []
        self._nondet = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.tok.line, self.tok.col)

    def next(self) -> _Tok:
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind == "op":
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def keyword(self, word: str) -> bool:
        t = self.tok
        if t.kind != "ident" or t.text.upper() != word:
            return False
        after = self.toks[self.pos + 1]
        if after.text != ":":
            raise ParseError(f"expected ':' after {t.text}", after.line, after.col)
        self.pos += 2
        return True

    def location(self) -> str:
        t = self.next()
        if t.kind not in ("ident", "num"):
            raise ParseError("expected a location", t.line, t.col)
        if t.text not in self.locations:
            self.locations.append(t.text)
        self.expect(";")
        return t.text

    def variable(self, name: str, tok: _Tok) -> str:
        if name.startswith(NONDET_PREFIX):
            raise ParseError(f"identifiers starting with {NONDET_PREFIX!r} are reserved", tok.line, tok.col)
        if name not in self.variables:
            self.variables.append(name)
        return name

    # top level
    def system(self) -> TransitionSystem:
        start = None
        rules = []
        while self.tok.kind != "eof":
            if self.keyword("START"):
                if start is not None:
                    raise self.error("duplicate START")
                start = self.location()
            elif self.keyword("FROM"):
                rules.append(self.rule())
            else:
                raise self.error(f"expected START: or FROM:, found {self.tok.text!r}")
        if start is None:
            raise ParseError("missing START declaration", self.tok.line, self.tok.col)
        return TransitionSystem(tuple(sorted(self.variables)), tuple(self.locations), start, tuple(rules))

    def rule(self) -> Rule:
        src = self.location()
        state: Dict[str, Term] = {}
        guards: List[Formula] = []
        self._nondet = 0
        while not self.keyword("TO"):
            t = self.tok
            if t.kind == "eof":
                raise self.error("missing TO:")
            if t.kind == "ident" and t.text.lower() == "assume" and self.toks[self.pos + 1].text == "(":
                self.pos += 2
                f = self.formula()
                self.expect(")")
                self.expect(";")
                guards.append(substitute(f, state))
            elif t.kind == "ident":
                self.pos += 1
                name = self.variable(t.text, t)
                self.expect(":=")
                if self.accept("?"):
                    value: Term = self.fresh()
                else:
                    value = substitute_term(self.term(), state)
                self.expect(";")
                state[name] = value
            else:
                raise self.error(f"unexpected {t.text!r} in rule body")
        dst = self.location()
        return _canonical_rule(src, conj(*guards), state, dst)

    def fresh(self) -> Var:
        v = Var(f"{NONDET_PREFIX}{self._nondet}")
        self._nondet += 1
        return v

    # formulas
    def formula(self) -> Formula:
        args = [self.conjunction()]
        while self.accept("||"):
            args.append(self.conjunction())
        return disj(*args) if len(args) > 1 else args[0]

    def conjunction(self) -> Formula:
        args = [self.negation()]
        while self.accept("&&"):
            args.append(self.negation())
        return conj(*args) if len(args) > 1 else args[0]

    def negation(self) -> Formula:
        if self.accept("!"):
            return Not(self.negation())
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if t.kind == "ident" and t.text.lower() in ("true", "false"):
            self.pos += 1
            return TRUE if t.text.lower() == "true" else FALSE
        if t.text == "(":
            saved = self.pos
            try:
                return self.comparison()
            except ParseError:
                self.pos = saved
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return f
        return self.comparison()

    def comparison(self) -> Formula:
        lhs = self.term()
        op = self.tok.text
        if op not in ("==", "=", "!=", "<>", "<=", ">=", "<", ">"):
            raise self.error(f"expected a comparison, found {op!r}")
        self.pos += 1
        rhs = self.term()
        return compare("!=" if op == "<>" else op, lhs, rhs)

    # terms
    def term(self) -> Term:
        args = [self.product()]
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            if self.next().text == "+":
                args.append(self.product())
            else:
                args.append(Neg(self.product()))
        return Add(tuple(args)) if len(args) > 1 else args[0]

    def product(self) -> Term:
        args = [self.unary()]
        while self.accept("*"):
            args.append(self.unary())
        return Mul(tuple(args)) if len(args) > 1 else args[0]

    def unary(self) -> Term:
        if self.accept("-"):
            if self.tok.kind == "num":
                return Const(-int(self.next().text))
            return Neg(self.unary())
        t = self.next()
        if t.kind == "num":
            return Const(int(t.text))
        if t.kind == "ident":
            if t.text == "nondet" and self.tok.text == "(":
                self.expect("(")
                self.expect(")")
                return self.fresh()
            return Var(self.variable(t.text, t))
        if t.text == "(":
            inner = self.term()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {t.text or 'end of input'!r} in term", t.line, t.col)


def _canonical_rule(src: str, guard: Formula, state: Mapping[str, Term], dst: str) -> Rule:
    updates = {x: t for x, t in state.items() if t != Var(x)}
    # Name every nondeterministic value after the variable it ends up in, so
    # equal rules compare equal regardless of statement order.
    rename: Dict[str, Term] = {}
    for x, t in sorted(updates.items()):
        if isinstance(t, Var) and t.name.startswith(NONDET_PREFIX) and t.name not in rename:
            rename[t.name] = Var(f"{NONDET_PREFIX}_{x}")
    if rename:
        guard = substitute(guard, rename)
        updates = {x: substitute_term(t, rename) for x, t in updates.items()}
    return Rule(src, guard, tuple(sorted(updates.items())), dst)


def parse_t2(text: str) -> TransitionSystem:
    return _Parser(text).system()


# --------------------------------------------------------------------------
# Printer


def print_t2(ts: TransitionSystem) -> str:
    """Render ``ts`` in the accepted syntax.

    Raises ValueError for rules whose parallel update cannot be written as a
    sequence of assignments (e.g. a swap) or whose guard reads a
    nondeterministic value.
    """
    lines = [f"START: {ts.start};"]
    # variables that no rule mentions any more (e.g. read by an overwritten
    # assignment) are kept alive by an identity assignment
    mentioned = set()
    for r in ts.rules:
        mentioned |= formula_vars(r.guard) | set(r.update_map)
        for t in r.update_map.values():
            mentioned |= term_vars(t)
    silent = [x for x in ts.variables if x not in mentioned]
    if silent and not ts.rules:
        raise ValueError("variables without rules cannot be printed")
    for i, r in enumerate(ts.rules):
        lines.append(f"FROM: {r.src};")
        if any(v.startswith(NONDET_PREFIX) for v in formula_vars(r.guard)):
            raise ValueError("guard reads a nondeterministic value")
        if r.guard != TRUE:
            lines.append(f"  assume({show_formula(r.guard)});")
        for x, t in _sequential_order(r.update_map):
            if isinstance(t, Var) and t.name.startswith(NONDET_PREFIX):
                lines.append(f"  {x} := ?;")
            else:
                lines.append(f"  {x} := {show_term(t)};")
        if i == 0:
            lines.extend(f"  {x} := {x};" for x in silent)
        lines.append(f"TO: {r.dst};")
    return "\n".join(lines) + "\n"


def _sequential_order(updates: Mapping[str, Term]) -> List[Tuple[str, Term]]:
    # x may be overwritten only after every other assignment that reads x.
    remaining = dict(updates)
    order = []
    while remaining:
        for x in sorted(remaining):
            readers = [y for y, t in remaining.items() if y != x and x in term_vars(t)]
            if not readers:
                order.append((x, remaining.pop(x)))
                break
        else:
            raise ValueError("cyclic parallel assignment cannot be printed sequentially")
    for x, t in order:
        nondets = [v for v in term_vars(t) if v.startswith(NONDET_PREFIX)]
        if nondets and not (isinstance(t, Var) and t.name == f"{NONDET_PREFIX}_{x}"):
            raise ValueError("nondeterministic value used inside an expression")
    return order


# --------------------------------------------------------------------------
# Encoding as initial condition and transition relation


def primed(name: str) -> str:
    return name + "'"


@dataclass(frozen=True)
class Encoded:
    """Initial condition and transition relation over a fixed state vector."""

    state: Tuple[str, ...]  # program counter first
    iota: Formula
    tau: Formula

    @property
    def primed_state(self) -> Tuple[str, ...]:
        return tuple(primed(x) for x in self.state)


def pc_name(ts: TransitionSystem) -> str:
    name = "pc"
    while name in ts.variables:
        name += "_"
    return name


def to_init_and_transition(ts: TransitionSystem) -> Tuple[Formula, Formula]:
    enc = encode_system(ts)
    return enc.iota, enc.tau


def encode_system(ts: TransitionSystem) -> Encoded:
    """Encode locations as an integer program counter.

    A variable whose update is a bare nondeterministic value is left
    unconstrained in the post-state, i.e. the fresh value is renamed to the
    primed variable itself.
    """
    pc = pc_name(ts)
    state = (pc,) + tuple(ts.variables)
    iota = eq(Var(pc), ts.location_index(ts.start))
    disjuncts = []
    for r in ts.rules:
        ups = r.update_map
        rename: Dict[str, Term] = {}
        for x, t in sorted(ups.items()):
            if isinstance(t, Var) and t.name.startswith(NONDET_PREFIX) and t.name not in rename:
                rename[t.name] = Var(primed(x))
        parts = [eq(Var(pc), ts.location_index(r.src)), substitute(r.guard, rename),
                 eq(Var(primed(pc)), ts.location_index(r.dst))]
        for x in ts.variables:
            t = ups.get(x, Var(x))
            if rename.get(getattr(t, "name", None)) == Var(primed(x)):
                continue
            parts.append(eq(Var(primed(x)), substitute_term(t, rename)))
        disjuncts.append(conj(*parts))
    return Encoded(state, iota, disj(*disjuncts) if disjuncts else FALSE)


# --------------------------------------------------------------------------
# Location compaction


def _fresh_nondets(r: Rule, fresh) -> Rule:
    names = {v for v in formula_vars(r.guard) if v.startswith(NONDET_PREFIX)}
    for _, t in r.updates:
        names |= {v for v in term_vars(t) if v.startswith(NONDET_PREFIX)}
    m = {v: Var(f"{NONDET_PREFIX}{next(fresh)}") for v in sorted(names)}
    if not m:
        return r
    return Rule(r.src, substitute(r.guard, m), tuple((x, substitute_term(t, m)) for x, t in r.updates), r.dst)


def compose_rules(r1: Rule, r2: Rule, fresh) -> Rule:
    """The rule taking ``r1`` and then ``r2`` (``r1.dst == r2.src``)."""
    r1, r2 = _fresh_nondets(r1, fresh), _fresh_nondets(r2, fresh)
    first = r1.update_map
    guard = conj(r1.guard, substitute(r2.guard, first))
    state = dict(first)
    for x, t in r2.updates:
        state[x] = substitute_term(t, first)
    return _canonical_rule(r1.src, guard, state, r2.dst)


def compact_system(ts: TransitionSystem, max_product: int = 16) -> TransitionSystem:
    """A system with the same infinite runs and fewer locations.

    Rules into locations without outgoing rules are dropped (runs end there
    anyway), and every location other than the start that has no self-loop
    is bypassed by composing its incoming with its outgoing rules, as long
    as that creates at most ``max_product`` rules.
    """
    fresh = itertools.count()
    rules = list(ts.rules)
    locs = list(ts.locations)
    changed = True
    while changed:
        changed = False
        sinks = {l for l in locs if l != ts.start and not any(r.src == l for r in rules)}
        if sinks:
            rules = [r for r in rules if r.dst not in sinks]
            locs = [l for l in locs if l not in sinks]
            changed = True
            continue
        for l in locs:
            if l == ts.start:
                continue
            ins = [r for r in rules if r.dst == l]
            outs = [r for r in rules if r.src == l]
            if any(r.src == l for r in ins) or len(ins) * len(outs) > max_product:
                continue
            composed = [compose_rules(a, b, fresh) for a in ins for b in outs]
            rules = [r for r in rules if r.src != l and r.dst != l]
            rules += [r for r in composed if r.guard != FALSE]
            locs.remove(l)
            changed = True
            break
    return TransitionSystem(ts.variables, tuple(locs), ts.start, tuple(dict.fromkeys(rules)))


def encode_compact(ts: TransitionSystem) -> Encoded:
    """Like ``encode_system`` on ``compact_system(ts)``, with two more savings.

    When the start location has no incoming rules, the post-states of its
    outgoing rules form the initial condition; when a single other location
    is left, the program counter is dropped from the state.
    """
    ts = compact_system(ts)
    if not ts.rules or any(r.dst == ts.start for r in ts.rules):
        return encode_system(ts)
    pc = pc_name(ts)
    state = (pc,) + tuple(ts.variables)

    def one(r: Rule) -> Formula:
        return encode_system(replace(ts, rules=(r,))).tau

    def initial(r: Rule) -> Formula:
        # initial values nobody reads are arbitrary, i.e. havocked
        read = formula_vars(r.guard)
        for _, t in r.updates:
            read |= term_vars(t)
        ups = r.update_map
        ups.update({x: Var(f"{NONDET_PREFIX}_{x}") for x in ts.variables if x not in read and x not in ups})
        f = one(Rule(r.src, r.guard, tuple(sorted(ups.items())), r.dst))
        # rename the pre-state apart, then read the post-state unprimed
        pre = {x: Var(f"_pre_{x}") for x in ups}
        pre[pc] = Const(ts.location_index(ts.start))
        return substitute(substitute(f, pre), {primed(x): Var(x) for x in state})

    iota = disj(*(initial(r) for r in ts.rules if r.src == ts.start))
    tau = disj(*(one(r) for r in ts.rules if r.src != ts.start))
    others = [l for l in ts.locations if l != ts.start]
    if len(others) == 1:
        at = Const(ts.location_index(others[0]))
        fix = {pc: at, primed(pc): at}
        return Encoded(tuple(ts.variables), fold_ground(substitute(iota, fix)), fold_ground(substitute(tau, fix)))
    return Encoded(state, fold_ground(iota), fold_ground(tau))


def fold_ground(f: Formula) -> Formula:
    """Replace variable-free and reflexive comparisons by their truth value."""
    if isinstance(f, Atom):
        if f.lhs == f.rhs:
            return FALSE if f.op == "!=" else TRUE
        if not term_vars(f.lhs) and not term_vars(f.rhs):
            return TRUE if eval_formula(f, {}) else FALSE
        return f
    if isinstance(f, And):
        return conj(*(fold_ground(a) for a in f.args))
    if isinstance(f, Or):
        return disj(*(fold_ground(a) for a in f.args))
    if isinstance(f, Not):
        return negate(fold_ground(f.arg))
    return f
