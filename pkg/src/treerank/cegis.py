"""The synthesizer/validator loop over a PCSP(wf) problem."""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from .examples import ExampleClause, ExampleStore, UnsatWitness
from .invariant import Inseparable, synth_invariant
from .lia import (
    TRUE,
    Const,
    Ite,
    Neg,
    Var,
    eval_formula,
    eval_term,
    formula_vars,
    ge,
    negate,
    term_vars,
)
from .pcsp import Clause, ClosedPredicate, Pcsp, apply_substitution
from .ranking import (
    ExplicitCycle,
    RefinementBudgetExceeded,
    SolverGaveUp,
    WfSolution,
    WfVariant,
    explicit_cycles,
    synth_wf,
)
from .smt import LabeledConstraint, Sat, SmtSession, Unknown as SmtUnknown

log = logging.getLogger(__name__)


@dataclass
class EngineConfig:
    k: int = 1
    strategy: str = "eager"
    qualifiers: str = "intervals"
    variant: str = "degenerate"
    query_timeout: float = 10.0
    timeout: float = 300.0
    max_iters: int = 200
    seed: int = 0
    smt_command: Optional[Union[str, List[str]]] = None
    max_k: int = 3
    refinement_budget: Optional[int] = None
    small_counterexamples: bool = True

    def __post_init__(self):
        if self.query_timeout <= 0 or self.timeout <= 0:
            raise ValueError("timeouts must be positive")
        if self.strategy not in ("eager", "lazy"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        WfVariant(self.variant)

    def session(self) -> SmtSession:
        return SmtSession(self.smt_command, timeout=self.query_timeout, seed=self.seed)


# results ------------------------------------------------------------------


@dataclass
class Solution:
    solution: Dict[str, ClosedPredicate]
    iterations: int
    trees: Dict[str, WfSolution] = field(default_factory=dict)
    examples: List[ExampleClause] = field(default_factory=list)


@dataclass
class Unsat:
    witness: List[ExampleClause]
    iterations: int = 0


@dataclass
class Unknown:
    reason: str


@dataclass
class Timeout:
    iterations: int = 0


EngineResult = Union[Solution, Unsat, Unknown, Timeout]


@dataclass
class Accepted:
    pass


@dataclass
class Counterexample:
    """Ground instances at one violating point ``theta``.

    ``clauses[0]`` comes from the violated clause; when that clause was
    distributed from a disjunctive constraint, the sibling instances at the
    same point follow, so that together they state the original constraint.
    """

    clauses: List[ExampleClause]
    index: int

    @property
    def clause(self) -> Optional[ExampleClause]:
        return self.clauses[0] if self.clauses else None


@dataclass
class ValidationUnknown:
    reason: str


# validator ----------------------------------------------------------------


def _clause_symbols(c: Clause) -> set:
    out = set(formula_vars(c.body))
    for app, _ in c.literals():
        for a in app.args:
            out |= term_vars(a)
    return out


def _abs_sum(names) -> object:
    total = Const(0)
    for n in sorted(names):
        x = Var(n)
        total = total + Ite(ge(x, 0), x, Neg(x))
    return total


def validate(p: Pcsp, s: Dict[str, ClosedPredicate], session: SmtSession = None,
             small: bool = False) -> Union[Accepted, Counterexample, ValidationUnknown]:
    """Check every substituted clause; the first violated one yields an example clause."""
    if session is None:
        with SmtSession() as owned:
            return validate(p, s, owned, small)
    formulas = apply_substitution(p, s)
    unknown = None
    for i, (c, f) in enumerate(zip(p.clauses, formulas)):
        symbols = _clause_symbols(c)
        query = [LabeledConstraint("violation", negate(f))]
        res = session.check_sat(query, symbols=symbols)
        if isinstance(res, SmtUnknown):
            unknown = unknown or f"clause {i}: {res.reason}"
            continue
        if not isinstance(res, Sat):
            continue
        theta = res.model
        if small and symbols:
            try:
                opt = session.minimize(_abs_sum(symbols), query, symbols=symbols)
                if isinstance(opt, Sat):
                    theta = opt.model
            except (TimeoutError, RuntimeError):
                pass
        theta = {k: v for k, v in theta.items() if isinstance(v, int) and not isinstance(v, bool)}
        for name in symbols:
            theta.setdefault(name, 0)
        first = _ground(c, theta)
        if first is None:
            # a clause without predicates is violated: the problem itself is unsatisfiable
            return Counterexample([], i)
        out = [first]
        if c.group is not None:
            for other in p.clauses:
                if other is not c and other.group == c.group:
                    g = _ground(other, theta)
                    if g is not None and g not in out:
                        out.append(g)
        return Counterexample(out, i)
    if unknown:
        return ValidationUnknown(unknown)
    return Accepted()


def _ground(c: Clause, theta) -> Optional[ExampleClause]:
    """The example clause of ``c`` at ``theta``, or None when its body holds there."""
    if eval_formula(c.body, theta):
        return None
    pos = tuple((app.pred, tuple(eval_term(a, theta) for a in app.args)) for app in c.positives)
    neg = tuple((app.pred, tuple(eval_term(a, theta) for a in app.args)) for app in c.negatives)
    if not pos and not neg:
        return None
    return ExampleClause(pos, neg)


def violates(s: Dict[str, ClosedPredicate], c: ExampleClause) -> bool:
    """True when every literal of the ground clause is false under ``s``."""
    for (pred, vec), sign in c.literals():
        if s[pred].holds(vec) == sign:
            return False
    return True


# engine -------------------------------------------------------------------


class Engine:
    """One CEGIS run; owns its example store and solver session."""

    def __init__(self, p: Pcsp, cfg: EngineConfig = None, cancel: threading.Event = None):
        self.p = p
        self.cfg = cfg or EngineConfig()
        self.cancel = cancel or threading.Event()
        self.session = self.cfg.session()
        self.store = ExampleStore(p.wf, self.session)
        self.k = self.cfg.k
        self.iterations = 0
        self.history: List[str] = []

    def close(self):
        self.session.close()

    def synthesize(self, part) -> Union[Dict[str, ClosedPredicate], Unknown, None]:
        """A candidate, or None after feeding a rejected partition back into the store."""
        cand: Dict[str, ClosedPredicate] = {}
        trees: Dict[str, WfSolution] = {}
        for pv in self.p.preds:
            params = self.p.param_names(pv.name)
            pos = sorted(part.positives(pv.name))
            if pv.name in self.p.wf:
                m = pv.arity // 2
                pairs = [(v[:m], v[m:]) for v in pos]
                while True:
                    try:
                        res = synth_wf(pairs, k=self.k, strategy=self.cfg.strategy,
                                       variant=WfVariant(self.cfg.variant), names=params[:m],
                                       primed_names=params[m:], family=self.cfg.qualifiers,
                                       session=self.session, max_refinements=self.cfg.refinement_budget)
                        break
                    except RefinementBudgetExceeded:
                        if self.k >= self.cfg.max_k:
                            return Unknown("refinement budget exhausted at the largest lexicographic dimension")
                        self.k += 1
                        log.info("raising the lexicographic dimension to %d", self.k)
                if isinstance(res, ExplicitCycle):
                    # every cycle refutes the partition on its own; feed back the short ones together
                    for cyc in [res.cycle] + explicit_cycles(pairs):
                        if self.store.reject_partition([(pv.name, v + vp, True) for v, vp in cyc]):
                            self.history.append(f"reject cycle {cyc}")
                    return None
                trees[pv.name] = res
                cand[pv.name] = ClosedPredicate(params, res.relation)
            else:
                neg = sorted(part.negatives(pv.name))
                try:
                    body = synth_invariant(pos, neg, params, family=self.cfg.qualifiers)
                except Inseparable:
                    core = [(pv.name, v, True) for v in pos] + [(pv.name, v, False) for v in neg]
                    self.store.reject_partition(core)
                    return None
                cand[pv.name] = ClosedPredicate(params, body)
        self._trees = trees
        return cand

    def solve(self) -> EngineResult:
        deadline = time.monotonic() + self.cfg.timeout
        try:
            while self.iterations < self.cfg.max_iters:
                if self.cancel.is_set() or time.monotonic() > deadline:
                    return Timeout(self.iterations)
                self.iterations += 1
                part = self.store.extract_pos_neg()
                if isinstance(part, UnsatWitness):
                    return Unsat(part.core, self.iterations)
                try:
                    cand = self.synthesize(part)
                except SolverGaveUp as e:
                    return Unknown(str(e))
                if cand is None:
                    continue
                if isinstance(cand, Unknown):
                    return cand
                verdict = validate(self.p, cand, self.session, small=self.cfg.small_counterexamples)
                if isinstance(verdict, Accepted):
                    final = validate(self.p, cand, self.cfg.session())
                    if not isinstance(final, Accepted):
                        return Unknown(f"final re-validation disagreed: {final}")
                    return Solution(cand, self.iterations, dict(self._trees), list(self.store))
                if isinstance(verdict, ValidationUnknown):
                    return Unknown(verdict.reason)
                if verdict.clause is None:
                    return Unsat([], self.iterations)
                assert violates(cand, verdict.clause), "counterexample is not violated by its candidate"
                self.history.append(f"example {verdict.clause}")
                log.debug("iteration %d: %s", self.iterations, verdict.clause)
                for c in verdict.clauses:
                    self.store.add_example(c)
            return Timeout(self.iterations)
        except TimeoutError as e:
            return Unknown(f"solver timeout: {e}")
        finally:
            self.close()


def solve(p: Pcsp, cfg: EngineConfig = None, cancel: threading.Event = None) -> EngineResult:
    return Engine(p, cfg, cancel).solve()
