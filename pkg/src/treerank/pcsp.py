"""Predicate constraint satisfaction problems with well-foundedness constraints.

A clause ``body ∨ P1(t) ∨ ... ∨ ¬N1(t) ∨ ...`` is read with all of its term
variables universally quantified. Predicates listed in ``Pcsp.wf`` must be
interpreted by well-founded relations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .lia import (
    FALSE,
    Const,
    Formula,
    PredApp,
    Term,
    Var,
    disj,
    formula_vars,
    is_predicate_free,
    negate,
    pred_apps,
    show_formula,
    substitute,
)
from .smt import formula_to_smt, term_to_smt


class MissingPredicate(KeyError):
    pass


@dataclass(frozen=True)
class PredVar:
    name: str
    arity: int


@dataclass(frozen=True)
class Clause:
    body: Formula
    positives: Tuple[PredApp, ...] = ()
    negatives: Tuple[PredApp, ...] = ()
    # clauses distributed from one disjunctive constraint share a group id
    group: Optional[int] = None

    def __post_init__(self):
        if not is_predicate_free(self.body):
            raise ValueError("clause bodies must be predicate-free")

    def literals(self):
        for p in self.positives:
            yield p, True
        for p in self.negatives:
            yield p, False

    def __str__(self):
        parts = [] if self.body == FALSE else [show_formula(self.body)]
        parts += [show_formula(p) for p in self.positives]
        parts += ["!" + show_formula(p) for p in self.negatives]
        return " \\/ ".join(parts) if parts else "false"


@dataclass(frozen=True)
class ClosedPredicate:
    """``λ params. body``"""

    params: Tuple[str, ...]
    body: Formula

    def __post_init__(self):
        extra = formula_vars(self.body) - set(self.params)
        if extra:
            raise ValueError(f"predicate body mentions undeclared variables {sorted(extra)}")

    def apply(self, args: Sequence[Term]) -> Formula:
        if len(args) != len(self.params):
            raise ValueError("arity mismatch")
        return substitute(self.body, dict(zip(self.params, args)))

    def holds(self, values: Sequence[int]) -> bool:
        from .lia import eval_formula

        return eval_formula(self.body, dict(zip(self.params, values)))

    def __str__(self):
        return f"\\({', '.join(self.params)}). {show_formula(self.body)}"


CandidateSolution = Dict[str, ClosedPredicate]


@dataclass(frozen=True)
class Pcsp:
    clauses: Tuple[Clause, ...]
    preds: Tuple[PredVar, ...]
    wf: FrozenSet[str] = frozenset()
    # names used for predicate parameters when presenting solutions
    params: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()

    def __post_init__(self):
        arity = {p.name: p.arity for p in self.preds}
        if len(arity) != len(self.preds):
            raise ValueError("predicate names must be unique")
        for c in self.clauses:
            for app, _ in c.literals():
                if arity.get(app.pred) != len(app.args):
                    raise ValueError(f"bad application {show_formula(app)}")
        for w in self.wf:
            if w not in arity:
                raise ValueError(f"unknown well-founded predicate {w}")
            if arity[w] % 2:
                raise ValueError(f"well-founded predicate {w} needs even arity")

    def arity(self, name: str) -> int:
        for p in self.preds:
            if p.name == name:
                return p.arity
        raise MissingPredicate(name)

    def param_names(self, name: str) -> Tuple[str, ...]:
        for n, ps in self.params:
            if n == name:
                return ps
        return tuple(f"a{i}" for i in range(self.arity(name)))

    def to_sexpr(self) -> str:
        lines = [f"(declare-pred {p.name} {p.arity}{' :wf' if p.name in self.wf else ''})" for p in self.preds]
        for c in self.clauses:
            lits = [formula_to_smt(c.body)]
            lits += [_app_sexpr(p) for p in c.positives]
            lits += [f"(not {_app_sexpr(p)})" for p in c.negatives]
            lines.append("(clause " + " ".join(lits) + ")")
        return "\n".join(lines)


def _app_sexpr(p: PredApp) -> str:
    return f"({p.pred} " + " ".join(term_to_smt(a) for a in p.args) + ")"


def _default_variables(iota: Formula, tau: Formula) -> Tuple[str, ...]:
    names = formula_vars(iota) | formula_vars(tau)
    return tuple(sorted(n for n in names if not n.endswith("'") and not n.startswith("_nd")))


def _primed(xs: Sequence[str]) -> Tuple[str, ...]:
    return tuple(x + "'" for x in xs)


def encode_termination(iota: Formula, tau: Formula, variables: Sequence[str] = None) -> Pcsp:
    """Invariant ``I`` plus a well-founded ``R`` covering reachable transitions."""
    xs = tuple(variables) if variables is not None else _default_variables(iota, tau)
    x = tuple(Var(v) for v in xs)
    xp = tuple(Var(v) for v in _primed(xs))
    n = len(xs)
    clauses = (
        Clause(negate(iota), (PredApp("I", x),)),
        Clause(negate(tau), (PredApp("I", xp),), (PredApp("I", x),)),
        Clause(negate(tau), (PredApp("R", x + xp),), (PredApp("I", x),)),
    )
    return Pcsp(
        clauses,
        (PredVar("I", n), PredVar("R", 2 * n)),
        frozenset({"R"}),
        (("I", xs), ("R", xs + _primed(xs))),
    )


def encode_nontermination(iota: Formula, tau: Formula, variables: Sequence[str] = None) -> Pcsp:
    """Recurrent set ``R`` with a skolemizing search relation ``E``.

    ``E(x, y)`` walks ``y`` from the origin one coordinate step at a time
    until ``τ(x, y) ∧ R(y)``; the well-founded ``S`` bounds the walk. The
    disjunctive search clause is distributed into plain clauses, one per way
    of picking a single conjunct from every disjunct.
    """
    xs = tuple(variables) if variables is not None else _default_variables(iota, tau)
    n = len(xs)
    x = tuple(Var(v) for v in xs)
    y = tuple(Var(v) for v in _primed(xs))
    zero = tuple(Const(0) for _ in xs)

    clauses = [
        Clause(negate(iota), (PredApp("R", x),)),
        Clause(FALSE, (PredApp("E", x + zero),), (PredApp("R", x),)),
    ]
    options = [[("body", tau), ("pred", PredApp("R", y))]]
    for i in range(n):
        for d in (-1, 1):
            step = tuple(yj + d if j == i else yj for j, yj in enumerate(y))
            step = tuple(_simplify_step(t) for t in step)
            options.append([("pred", PredApp("S", y + step)), ("pred", PredApp("E", x + step))])
    head = PredApp("E", x + y)
    for choice in itertools.product(*options):
        body = disj(*(v for kind, v in choice if kind == "body"))
        positives = tuple(v for kind, v in choice if kind == "pred")
        clauses.append(Clause(body, positives, (head,), group=2))
    return Pcsp(
        tuple(clauses),
        (PredVar("R", n), PredVar("E", 2 * n), PredVar("S", 2 * n)),
        frozenset({"S"}),
        (("R", xs), ("E", xs + _primed(xs)), ("S", _primed(xs) + tuple(v + "'" for v in _primed(xs)))),
    )


def _simplify_step(t: Term) -> Term:
    from .lia import AffineExpr

    return AffineExpr.from_term(t).to_term()


def apply_substitution(p: Pcsp, s: Mapping[str, ClosedPredicate]) -> List[Formula]:
    """One predicate-free formula per clause."""
    out = []
    for c in p.clauses:
        parts = [c.body]
        for app, positive in c.literals():
            if app.pred not in s:
                raise MissingPredicate(app.pred)
            inst = s[app.pred].apply(app.args)
            parts.append(inst if positive else negate(inst))
        out.append(disj(*parts))
    return out


def free_predicates(p: Pcsp) -> List[str]:
    return [q.name for q in p.preds]
