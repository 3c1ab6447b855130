"""The growing set of ground example clauses exchanged in the CEGIS loop."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple, Union

from .lia import BoolVar, Not, disj
from .smt import LabeledConstraint, Sat, SmtSession, Unsat

Vector = Tuple[int, ...]
Atom = Tuple[str, Vector]  # (predicate name, argument values)


@dataclass(frozen=True)
class ExampleClause:
    """A ground disjunction ``P1(v1) ∨ ... ∨ ¬N1(u1) ∨ ...``."""

    positives: Tuple[Atom, ...] = ()
    negatives: Tuple[Atom, ...] = ()

    def __post_init__(self):
        if not self.positives and not self.negatives:
            raise ValueError("an example clause needs at least one literal")
        norm = lambda atoms: tuple((p, tuple(int(x) for x in v)) for p, v in atoms)
        object.__setattr__(self, "positives", norm(self.positives))
        object.__setattr__(self, "negatives", norm(self.negatives))

    def literals(self):
        for a in self.positives:
            yield a, True
        for a in self.negatives:
            yield a, False

    def key(self) -> FrozenSet:
        return frozenset(self.literals())

    def holds(self, assignment) -> bool:
        """``assignment`` maps atoms to booleans; missing atoms count as unassigned."""
        return any(assignment.get(a) is sign for a, sign in self.literals())

    def __str__(self):
        lits = [show_atom(a) for a in self.positives] + ["!" + show_atom(a) for a in self.negatives]
        return " \\/ ".join(lits)


def show_atom(a: Atom) -> str:
    return f"{a[0]}({', '.join(map(str, a[1]))})"


def pos(pred: str, *vec: int) -> ExampleClause:
    return ExampleClause(((pred, tuple(vec)),))


def neg(pred: str, *vec: int) -> ExampleClause:
    return ExampleClause((), ((pred, tuple(vec)),))


@dataclass
class ExamplePartition:
    pos: Dict[str, Set[Vector]] = field(default_factory=dict)
    neg: Dict[str, Set[Vector]] = field(default_factory=dict)

    def __post_init__(self):
        for p in set(self.pos) & set(self.neg):
            both = self.pos[p] & self.neg[p]
            if both:
                raise ValueError(f"{p}{sorted(both)[0]} is both positive and negative")

    def positives(self, pred: str) -> Set[Vector]:
        return self.pos.get(pred, set())

    def negatives(self, pred: str) -> Set[Vector]:
        return self.neg.get(pred, set())

    def assignment(self) -> Dict[Atom, bool]:
        out = {}
        for p, vs in self.pos.items():
            out.update({(p, v): True for v in vs})
        for p, vs in self.neg.items():
            out.update({(p, v): False for v in vs})
        return out


@dataclass
class UnsatWitness:
    core: List[ExampleClause]


class ExampleStore:
    """Example clauses in insertion order, with duplicate suppression."""

    def __init__(self, wf: Iterable[str] = (), session: SmtSession = None, prefer_false_others: bool = True):
        self.wf = frozenset(wf)
        self.prefer_false_others = prefer_false_others
        self.clauses: List[ExampleClause] = []
        self._keys: Set[FrozenSet] = set()
        self._atoms: Dict[Atom, int] = {}
        self._session = session

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    @property
    def session(self) -> SmtSession:
        if self._session is None:
            self._session = SmtSession()
        return self._session

    def add_example(self, c: ExampleClause) -> bool:
        """Add ``c``; returns False when an equal clause is already stored."""
        k = c.key()
        if k in self._keys:
            return False
        self._keys.add(k)
        self.clauses.append(c)
        for a, _ in c.literals():
            self._atoms.setdefault(a, len(self._atoms))
        return True

    def reject_partition(self, core: Iterable[Tuple[str, Vector, bool]]) -> bool:
        """Forbid the sign pattern ``core`` (triples ``(pred, vec, positive)``)."""
        core = list(core)
        if not core:
            raise ValueError("an empty core cannot be rejected")
        positives = tuple((p, v) for p, v, sign in core if not sign)
        negatives = tuple((p, v) for p, v, sign in core if sign)
        return self.add_example(ExampleClause(positives, negatives))

    def atoms(self) -> List[Atom]:
        return sorted(self._atoms, key=self._atoms.get)

    def _bool(self, a: Atom) -> str:
        return f"b{self._atoms[a]}"

    def _sat_constraints(self) -> List[LabeledConstraint]:
        out = []
        for i, c in enumerate(self.clauses):
            lits = [BoolVar(self._bool(a)) if sign else Not(BoolVar(self._bool(a))) for a, sign in c.literals()]
            out.append(LabeledConstraint(f"e{i}", disj(*lits)))
        return out

    def extract_pos_neg(self) -> Union[ExamplePartition, UnsatWitness]:
        if not self.clauses:
            return ExamplePartition()
        s = self.session
        base = self._sat_constraints()
        res = s.check_sat(base, want_core=True)
        if isinstance(res, Unsat):
            core = sorted(int(label[1:]) for label in res.core)
            return UnsatWitness([self.clauses[i] for i in core])
        if not isinstance(res, Sat):
            raise RuntimeError(f"SAT(E) could not be decided: {res}")

        # One MaxSAT call: well-founded atoms true and other atoms false when free.
        model = res.model
        if self.prefer_false_others:
            soft = [LabeledConstraint(f"w{self._atoms[a]}", BoolVar(self._bool(a)) if a[0] in self.wf
                                      else Not(BoolVar(self._bool(a)))) for a in self.atoms()]
        else:
            soft = [LabeledConstraint(f"w{self._atoms[a]}", BoolVar(self._bool(a)))
                    for a in self.atoms() if a[0] in self.wf]
        if soft:
            try:
                _, better = s.max_sat(base, soft)
                model = better or model
            except TimeoutError:
                pass

        assignment = {a: bool(model.get(self._bool(a), False)) for a in self.atoms()}
        assignment = self._drop_dont_cares(assignment)
        part = ExamplePartition()
        for (p, v), val in assignment.items():
            (part.pos if val else part.neg).setdefault(p, set()).add(v)
        return part

    def _drop_dont_cares(self, assignment: Dict[Atom, bool]) -> Dict[Atom, bool]:
        by_atom: Dict[Atom, List[ExampleClause]] = {a: [] for a in assignment}
        for c in self.clauses:
            for a, _ in c.literals():
                by_atom[a].append(c)
        current = dict(assignment)
        for a in self.atoms():
            trial = dict(current)
            del trial[a]
            if all(c.holds(trial) for c in by_atom[a]):
                current = trial
        return current
