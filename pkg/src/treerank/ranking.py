"""Decision-tree learning of piecewise affine lexicographic ranking functions.

Given positive transition examples ``(v, v')`` the synthesizer builds a tree
whose internal nodes are halfspaces and whose leaves are tuples of affine
functions ``(f_k, ..., f_0)``, such that the induced well-founded relation
holds on every example. The search runs in three phases:

1. reject example sets that contain an explicit cycle,
2. split cells until the non-crossing examples of each cell admit an affine
   ranking function (``resolve_case2``),
3. solve for all parameters at once, and while that fails cut an implicit
   cycle of the dependency graph found in the unsat core.
"""
from __future__ import annotations

import enum
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.svm import SVC

from .lia import (
    FALSE,
    AffineExpr,
    Const,
    DegenerateHyperplane,
    Formula,
    Halfspace,
    Ite,
    Neg,
    Term,
    Var,
    conj,
    disj,
    eq,
    eval_formula,
    eval_term,
    ge,
    generate_qualifiers,
    gt,
    halfspace_key,
    lt,
    rationalize,
    show_term,
    substitute_term,
)
from .smt import LabeledConstraint, Sat, SmtSession, Unknown, Unsat
from .smt import term_to_smt

log = logging.getLogger(__name__)

Vector = Tuple[int, ...]
Example = Tuple[Vector, Vector]
Path = Tuple[bool, ...]  # root-to-leaf choices, True for the ``h >= 0`` branch

COEFFICIENT_BOX = 64


class WfVariant(enum.Enum):
    STRICT = "strict"
    DEGENERATE = "degenerate"


class NegativeWfExample(ValueError):
    pass


class NoSeparatingQualifier(RuntimeError):
    pass


class RefinementBudgetExceeded(RuntimeError):
    pass


class SolverGaveUp(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Trees


@dataclass(frozen=True)
class Template:
    """One affine template ``sum(coef_i * x_i) + const`` with parameter names."""

    coefs: Tuple[str, ...]
    const: str

    def params(self) -> Tuple[str, ...]:
        return self.coefs + (self.const,)

    def at(self, v: Sequence[int]) -> Term:
        """The template evaluated at a concrete point: linear in the parameters."""
        return AffineExpr.make({}, 0).__add__(
            AffineExpr.make(_merge(zip(self.coefs, v), [(self.const, 1)]))
        ).to_term()

    def instantiate(self, model: Dict[str, int], names: Sequence[str]) -> AffineExpr:
        get = lambda p: int(model.get(p, 0))
        return AffineExpr.make({x: get(c) for x, c in zip(names, self.coefs)}, get(self.const))


def _merge(*pairs) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for ps in pairs:
        for k, c in ps:
            out[k] = out.get(k, 0) + c
    return out


@dataclass(frozen=True)
class Leaf:
    """``label`` is None (segmentation), a tuple of Templates, or a tuple of AffineExprs."""

    label: Any = None


@dataclass(frozen=True)
class Node:
    split: Halfspace
    yes: "Tree"
    no: "Tree"


Tree = Union[Leaf, Node]


def leaves(t: Tree, path: Path = ()) -> List[Tuple[Path, Leaf]]:
    if isinstance(t, Leaf):
        return [(path, t)]
    return leaves(t.yes, path + (True,)) + leaves(t.no, path + (False,))


def locate(t: Tree, v: Sequence[int], names: Sequence[str]) -> Tuple[Path, Leaf]:
    point = dict(zip(names, v))
    path: List[bool] = []
    while isinstance(t, Node):
        side = t.split.contains(point)
        path.append(side)
        t = t.yes if side else t.no
    return tuple(path), t


def replace_leaf(t: Tree, path: Path, new: Tree) -> Tree:
    if not path:
        return new
    if not isinstance(t, Node):
        raise ValueError("path leaves the tree")
    if path[0]:
        return Node(t.split, replace_leaf(t.yes, path[1:], new), t.no)
    return Node(t.split, t.yes, replace_leaf(t.no, path[1:], new))


def segmentation(t: Tree) -> Tree:
    """The tree with its leaf labels erased."""
    if isinstance(t, Leaf):
        return Leaf(None)
    return Node(t.split, segmentation(t.yes), segmentation(t.no))


def num_internal(t: Tree) -> int:
    return 0 if isinstance(t, Leaf) else 1 + num_internal(t.yes) + num_internal(t.no)


def template_params(t: Tree) -> List[str]:
    out: List[str] = []
    for _, leaf in leaves(t):
        for tmpl in leaf.label:
            out.extend(tmpl.params())
    return out


class TemplateFactory:
    """Fresh, globally unique parameter names."""

    def __init__(self, n: int, k: int, prefix: str = "p"):
        self.n, self.k, self.prefix = n, k, prefix
        self._ids = itertools.count()

    def make(self) -> Tuple[Template, ...]:
        i = next(self._ids)
        return tuple(
            Template(tuple(f"{self.prefix}{i}_{d}_{j}" for j in range(self.n)), f"{self.prefix}{i}_{d}_c")
            for d in range(self.k + 1)
        )

    def leaf(self) -> Leaf:
        return Leaf(self.make())


def instantiate(t: Tree, model: Dict[str, int], names: Sequence[str]) -> Tree:
    if isinstance(t, Leaf):
        return Leaf(tuple(tm.instantiate(model, names) for tm in t.label))
    return Node(t.split, instantiate(t.yes, model, names), instantiate(t.no, model, names))


def evaluate(t: Tree, v: Sequence[int], names: Sequence[str]) -> Tuple[int, ...]:
    """``f_D(v)`` for a concrete decision tree."""
    _, leaf = locate(t, v, names)
    point = dict(zip(names, v))
    return tuple(e(point) for e in leaf.label)


def tree_terms(t: Tree, names: Sequence[str], rename: Dict[str, str] = None) -> List[Term]:
    """One ``ite`` term per lexicographic dimension of a concrete tree."""
    rename = rename or {}
    if isinstance(t, Leaf):
        return [e.rename(rename).to_term() for e in t.label]
    cond = Halfspace(t.split.expr.rename(rename)).to_formula()
    return [Ite(cond, a, b) for a, b in zip(tree_terms(t.yes, names, rename), tree_terms(t.no, names, rename))]


def show_tree(t: Tree) -> str:
    """Nested ``if h then ... else ...`` text of a concrete tree."""
    if isinstance(t, Leaf):
        parts = [str(e) for e in t.label]
        return parts[0] if len(parts) == 1 else "(" + ", ".join(parts) + ")"
    return f"if {t.split} then {show_tree(t.yes)} else {show_tree(t.no)}"


def dump_tree(t: Tree) -> str:
    """Parenthesized debug form; not a stable interface."""
    if isinstance(t, Leaf):
        if t.label is None:
            return "(leaf)"
        items = []
        for e in t.label:
            if isinstance(e, Template):
                items.append("(" + " ".join(e.params()) + ")")
            else:
                items.append(term_to_smt(e.to_term()))
        return "(leaf (tuple " + " ".join(items) + "))"
    cond = f"(>= {term_to_smt(t.split.expr.to_term())} 0)"
    return f"(if {cond} {dump_tree(t.yes)} {dump_tree(t.no)})"


# --------------------------------------------------------------------------
# Well-founded relations


def lex_relation(fx: Sequence[Term], fy: Sequence[Term], variant: WfVariant) -> Formula:
    """Unfold ``R_(f_k..f_0)`` (or its degenerate form) given ``f(x)`` and ``f(x')``."""
    if len(fx) != len(fy):
        raise ValueError("tuples of different length")
    if not fx:
        return FALSE
    head, tail = fx[0], fy[0]
    rest = lex_relation(fx[1:], fy[1:], variant)
    same = eq(head, tail)
    if variant is WfVariant.DEGENERATE and len(fx) > 1:
        same = disj(lt(tail, 0), same)
    return disj(conj(ge(head, 0), gt(head, tail)), conj(same, rest))


def wf_formula(src: Sequence[Template], dst: Sequence[Template], v: Sequence[int], vp: Sequence[int],
               variant: WfVariant = WfVariant.STRICT) -> Formula:
    """``R_f(v, v')`` with ``f`` given by the two leaves' templates, over parameters."""
    if len(src) != len(dst):
        raise ValueError("template tuples of different length")
    return lex_relation([t.at(v) for t in src], [t.at(vp) for t in dst], variant)


def example_label(i: int) -> str:
    return f"ex{i}"


def get_constraints(D: Tree, examples: Sequence[Example], names: Sequence[str],
                    variant: WfVariant = WfVariant.STRICT) -> List[LabeledConstraint]:
    out = []
    for i, (v, vp) in enumerate(examples):
        _, a = locate(D, v, names)
        _, b = locate(D, vp, names)
        out.append(LabeledConstraint(example_label(i), wf_formula(a.label, b.label, v, vp, variant)))
    return out


def sum_abs_params(D: Tree) -> Term:
    """``sum |p|`` over all template parameters, with ``|p|`` as an ``ite``."""
    terms = []
    for p in template_params(D):
        x = Var(p)
        terms.append(Ite(ge(x, 0), x, Neg(x)))
    if not terms:
        return Const(0)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def relation_formula(D: Tree, names: Sequence[str], primed_names: Sequence[str],
                     variant: WfVariant) -> Formula:
    """The candidate well-founded relation over ``names`` and ``primed_names``."""
    fx = tree_terms(D, names)
    fy = tree_terms(D, names, dict(zip(names, primed_names)))
    return lex_relation(fx, fy, variant)


def relation_holds(D: Tree, v: Sequence[int], vp: Sequence[int], names: Sequence[str],
                   variant: WfVariant) -> bool:
    fx = [Const(c) for c in evaluate(D, v, names)]
    fy = [Const(c) for c in evaluate(D, vp, names)]
    return eval_formula(lex_relation(fx, fy, variant), {})


# --------------------------------------------------------------------------
# Cycles


def endpoints(examples: Iterable[Example]) -> List[Vector]:
    seen: Dict[Vector, None] = {}
    for v, vp in examples:
        seen.setdefault(v)
        seen.setdefault(vp)
    return list(seen)


def detect_explicit_cycle(examples: Sequence[Example]) -> Optional[List[Example]]:
    """A shortest cycle of the example graph, as a list of examples, or None."""
    g = nx.DiGraph()
    for v, vp in examples:
        if v == vp:
            return [(v, vp)]
        g.add_edge(v, vp)
    best: Optional[List[Vector]] = None
    for u, w in g.edges:
        try:
            path = nx.shortest_path(g, w, u)
        except nx.NetworkXNoPath:
            continue
        if best is None or len(path) < len(best):
            best = path
    if best is None:
        return None
    return [(best[i], best[(i + 1) % len(best)]) for i in range(len(best))]


def explicit_cycles(examples: Sequence[Example], limit: int = 64) -> List[List[Example]]:
    """Up to ``limit`` distinct simple cycles of the example graph, shortest first."""
    g = nx.DiGraph()
    g.add_edges_from(examples)
    out = []
    for cyc in nx.simple_cycles(g, length_bound=None if limit is None else 8):
        out.append([(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))])
        if len(out) >= limit:
            break
    out.sort(key=len)
    return out


@dataclass
class DependencyGraph:
    cells: List[Path]
    edges: Dict[Tuple[Path, Path], List[int]]  # witnessing example indices

    def has_cycle(self) -> bool:
        g = nx.DiGraph(list(self.edges))
        return not nx.is_directed_acyclic_graph(g)


def dependency_graph(S: Tree, examples: Sequence[Example], names: Sequence[str],
                     only: Optional[Iterable[int]] = None) -> DependencyGraph:
    allowed = None if only is None else set(only)
    edges: Dict[Tuple[Path, Path], List[int]] = {}
    for i, (v, vp) in enumerate(examples):
        if allowed is not None and i not in allowed:
            continue
        a, _ = locate(S, v, names)
        b, _ = locate(S, vp, names)
        if a != b:
            edges.setdefault((a, b), []).append(i)
    return DependencyGraph([p for p, _ in leaves(S)], edges)


def find_implicit_cycle(core: Iterable[str], D: Tree, examples: Sequence[Example],
                        names: Sequence[str]) -> Optional[List[int]]:
    """Example indices forming a cycle of cells, using only examples in ``core``."""
    idx = sorted(int(lbl[len("ex"):]) for lbl in core if lbl.startswith("ex"))
    graph = dependency_graph(D, examples, names, idx)
    g = nx.DiGraph()
    for (a, b), ws in graph.edges.items():
        g.add_edge(a, b, example=ws[0])
    try:
        cyc = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return None
    return [g.edges[a, b]["example"] for a, b in cyc]


# --------------------------------------------------------------------------
# Qualifier selection


def _side(h: Halfspace, v, names) -> bool:
    return h.contains(dict(zip(names, v)))


def separates(h: Halfspace, points: Sequence[Vector], names) -> bool:
    sides = {_side(h, p, names) for p in points}
    return len(sides) == 2


def entropy(x: int, y: int) -> float:
    if x + y == 0:
        return 1.0
    out = 0.0
    for c in (x, y):
        if c:
            q = c / (x + y)
            out -= q * math.log2(q)
    return out


class _Context:
    """Shared state of one synthesis run: solver session, names, caches."""

    def __init__(self, names: Sequence[str], k: int, variant: WfVariant, session: SmtSession,
                 strategy: str = "eager", family: str = "intervals", box: int = COEFFICIENT_BOX):
        self.names = tuple(names)
        self.k = k
        self.variant = variant
        self.session = session
        self.strategy = strategy
        self.family = family
        self.box = box
        self.factory = TemplateFactory(len(names), k)
        self._maxsat_cache: Dict[FrozenSet[Example], int] = {}
        self.H: List[Halfspace] = []

    def fresh(self) -> Tuple[Template, ...]:
        return self.factory.make()

    def max_sat_count(self, examples: Sequence[Example]) -> int:
        key = frozenset(examples)
        if key not in self._maxsat_cache:
            if not examples:
                self._maxsat_cache[key] = 0
            else:
                f = self.fresh()
                soft = [LabeledConstraint(example_label(i), wf_formula(f, f, v, vp, self.variant))
                        for i, (v, vp) in enumerate(sorted(examples))]
                self._maxsat_cache[key] = self.session.max_sat([], soft)[0]
        return self._maxsat_cache[key]

    def feasible(self, examples: Sequence[Example]) -> bool:
        if not examples:
            return True
        f = self.fresh()
        cs = [LabeledConstraint(example_label(i), wf_formula(f, f, v, vp, self.variant))
              for i, (v, vp) in enumerate(examples)]
        res = self.session.check_sat(cs)
        if isinstance(res, Unknown):
            raise SolverGaveUp(f"per-cell feasibility: {res.reason}")
        return isinstance(res, Sat)


def quality_measure(h: Halfspace, examples: Sequence[Example], k: int = 0, names: Sequence[str] = None,
                    variant: WfVariant = WfVariant.STRICT, session: SmtSession = None,
                    _ctx: _Context = None) -> float:
    """``N+ + N- + (|E+-| + |E-+|) * (1 - entropy(|E+-|, |E-+|))``."""
    if _ctx is None:
        names = names or [f"x{i}" for i in range(len(examples[0][0]))] if examples else ()
        if session is None:
            with SmtSession() as owned:
                return quality_measure(h, examples, k, names, variant, owned)
        _ctx = _Context(names, k, variant, session)
    names = _ctx.names
    buckets: Dict[Tuple[bool, bool], List[Example]] = {(a, b): [] for a in (True, False) for b in (True, False)}
    for v, vp in examples:
        buckets[_side(h, v, names), _side(h, vp, names)].append((v, vp))
    n_pos = _ctx.max_sat_count(buckets[True, True])
    n_neg = _ctx.max_sat_count(buckets[False, False])
    a, b = len(buckets[True, False]), len(buckets[False, True])
    return n_pos + n_neg + (a + b) * (1 - entropy(a, b))


def choose_qualifier_eager(examples: Sequence[Example], H: Sequence[Halfspace], k: int = 0,
                           names: Sequence[str] = None, variant: WfVariant = WfVariant.STRICT,
                           session: SmtSession = None, _ctx: _Context = None) -> Halfspace:
    if _ctx is None:
        names = names or [f"x{i}" for i in range(len(examples[0][0]))]
        if session is None:
            with SmtSession() as owned:
                return choose_qualifier_eager(examples, H, k, names, variant, owned)
        _ctx = _Context(names, k, variant, session)
    pts = endpoints(examples)
    candidates = [h for h in H if separates(h, pts, _ctx.names)]
    if not candidates:
        raise NoSeparatingQualifier("no qualifier separates the example endpoints")
    scored = [(-round(quality_measure(h, examples, _ctx=_ctx), 9), halfspace_key(h), h) for h in candidates]
    scored.sort(key=lambda t: (t[0], t[1]))
    return scored[0][2]


def _axis_separator(p: Vector, q: Vector, names) -> Halfspace:
    """An interval qualifier with ``p`` inside and ``q`` outside."""
    for name, a, b in zip(names, p, q):
        if a > b:
            return Halfspace.ge({name: 1}, -a)
        if a < b:
            return Halfspace.ge({name: -1}, a)
    raise NoSeparatingQualifier("identical points cannot be separated")


def _direction(examples: Sequence[Example], ctx: _Context) -> Tuple[int, ...]:
    """MaxSMT: the integer direction ``a`` most examples decrease along."""
    n = len(ctx.names)
    a = [Var(f"_dir{i}") for i in range(n)]
    box = ctx.box
    while True:
        hard = [LabeledConstraint(f"box{i}", conj(ge(ai, -box), ge(Const(box), ai))) for i, ai in enumerate(a)]
        soft = []
        for j, (v, vp) in enumerate(examples):
            diff = AffineExpr.make(_merge([(f"_dir{i}", v[i] - vp[i]) for i in range(n)])).to_term()
            soft.append(LabeledConstraint(f"dir{j}", gt(diff, 0)))
        try:
            _, model = ctx.session.max_sat(hard, soft)
        except TimeoutError:
            box *= 2
            if box > 64 * COEFFICIENT_BOX:
                raise
            continue
        model = model or {}
        return tuple(int(model.get(f"_dir{i}", 0)) for i in range(n))


def choose_qualifier_lazy(examples: Sequence[Example], names: Sequence[str] = None, k: int = 0,
                          variant: WfVariant = WfVariant.STRICT, session: SmtSession = None,
                          _ctx: _Context = None) -> Halfspace:
    """Direction labelling, weighted linear SVM, undersampling, rationalization."""
    if _ctx is None:
        names = names or [f"x{i}" for i in range(len(examples[0][0]))]
        if session is None:
            with SmtSession() as owned:
                return choose_qualifier_lazy(examples, names, k, variant, owned)
        _ctx = _Context(names, k, variant, session, strategy="lazy")
    names = _ctx.names
    pts = endpoints(examples)
    if len(pts) < 2:
        raise NoSeparatingQualifier("need two distinct endpoints")
    a = _direction(examples, _ctx)
    labelled: List[Tuple[Vector, int]] = []
    for v, vp in examples:
        lab = 1 if sum(ai * (x - y) for ai, x, y in zip(a, v, vp)) > 0 else -1
        labelled.append((v, lab))
        labelled.append((vp, lab))
    data = labelled
    while True:
        labels = {lab for _, lab in data}
        if len(labels) == 2:
            h = _svm_halfspace(data, pts, names)
            if h is not None:
                return h
        pos = [d for d in data if d[1] == 1]
        neg = [d for d in data if d[1] == -1]
        major, minor = (pos, neg) if len(pos) >= len(neg) else (neg, pos)
        if len(major) <= 1:
            break
        data = minor + major[::2]
    # every round was useless: fall back to an axis cut between two endpoints
    return _axis_separator(pts[0], pts[1], names) if pts[0] != pts[1] else _axis_separator(pts[1], pts[0], names)


def _svm_halfspace(data, pts, names) -> Optional[Halfspace]:
    X = np.array([p for p, _ in data], dtype=float)
    y = np.array([lab for _, lab in data])
    clf = SVC(kernel="linear", C=1.0, class_weight="balanced")
    clf.fit(X, y)
    w, c = clf.coef_[0], float(clf.intercept_[0])
    try:
        expr = rationalize(list(w), variables=list(names), constant=c, samples=pts)
    except DegenerateHyperplane:
        try:
            expr = rationalize(list(w), depth=16, variables=list(names), constant=c, samples=pts)
        except DegenerateHyperplane:
            return None
    if expr.is_constant():
        return None
    h = Halfspace(expr)
    if separates(h, pts, names):
        return h
    # keep the direction, move the offset so that both sides are populated
    direction = AffineExpr(expr.coeffs, 0)
    values = sorted({direction(dict(zip(names, p))) for p in pts})
    if len(values) < 2:
        return None
    return Halfspace(AffineExpr(expr.coeffs, -values[-1]))


def choose_qualifier(examples: Sequence[Example], ctx: _Context) -> Halfspace:
    if ctx.strategy == "lazy":
        return choose_qualifier_lazy(examples, _ctx=ctx)
    return choose_qualifier_eager(examples, ctx.H, _ctx=ctx)


# --------------------------------------------------------------------------
# Phases 2 and 3


@dataclass
class _Counter:
    splits: int = 0  # phase 2 and phase 3 together
    refinements: int = 0  # phase 3 only


def resolve_case2(examples: Sequence[Example], ctx: _Context, counter: _Counter = None) -> Tree:
    counter = counter if counter is not None else _Counter()
    f = ctx.fresh()
    if not examples:
        return Leaf(f)
    cs = [LabeledConstraint(example_label(i), wf_formula(f, f, v, vp, ctx.variant))
          for i, (v, vp) in enumerate(examples)]
    res = ctx.session.check_sat(cs)
    if isinstance(res, Sat):
        return Leaf(f)
    if isinstance(res, Unknown):
        raise SolverGaveUp(f"resolve_case2: {res.reason}")
    h = choose_qualifier(examples, ctx)
    counter.splits += 1
    yes = [(v, vp) for v, vp in examples if _side(h, v, ctx.names) and _side(h, vp, ctx.names)]
    no = [(v, vp) for v, vp in examples if not _side(h, v, ctx.names) and not _side(h, vp, ctx.names)]
    return Node(h, resolve_case2(yes, ctx, counter), resolve_case2(no, ctx, counter))


def _cell_examples(D: Tree, path: Path, examples: Sequence[Example], names) -> List[Example]:
    return [(v, vp) for v, vp in examples
            if locate(D, v, names)[0] == path and locate(D, vp, names)[0] == path]


def _new_crossings(h: Halfspace, inside: Sequence[Example], names) -> int:
    return sum(1 for v, vp in inside if _side(h, v, names) != _side(h, vp, names))


def _lazy_separator(p: Vector, q: Vector, inside: Sequence[Example], ctx: _Context) -> Halfspace:
    """SMT search for ``a.x + b >= 0`` with ``p`` inside, ``q`` outside, few new crossings."""
    n = len(ctx.names)
    coef = [f"_sep{i}" for i in range(n)]
    h_at = lambda v: AffineExpr.make(_merge([(coef[i], v[i]) for i in range(n)], [("_sepb", 1)])).to_term()
    box = ctx.box
    while True:
        hard = [LabeledConstraint(f"box{i}", conj(ge(Var(c), -box), ge(Const(box), Var(c)))) for i, c in enumerate(coef)]
        hard.append(LabeledConstraint("in", ge(h_at(p), 0)))
        hard.append(LabeledConstraint("out", lt(h_at(q), 0)))
        soft = [LabeledConstraint(f"keep{j}", eq_bool(ge(h_at(v), 0), ge(h_at(vp), 0)))
                for j, (v, vp) in enumerate(inside)]
        try:
            _, model = ctx.session.max_sat(hard, soft)
        except Exception:  # HardUnsat or timeout: widen the box
            box *= 2
            if box > 64 * COEFFICIENT_BOX:
                return _axis_separator(p, q, ctx.names)
            continue
        model = model or {}
        expr = AffineExpr.make({x: int(model.get(c, 0)) for x, c in zip(ctx.names, coef)}, int(model.get("_sepb", 0)))
        if expr.is_constant():
            return _axis_separator(p, q, ctx.names)
        h = Halfspace(expr)
        if _side(h, p, ctx.names) and not _side(h, q, ctx.names):
            return h
        return _axis_separator(p, q, ctx.names)


def eq_bool(a: Formula, b: Formula) -> Formula:
    from .lia import negate

    return disj(conj(a, b), conj(negate(a), negate(b)))


def refine_tree(D: Tree, cycle: Sequence[int], examples: Sequence[Example], ctx: _Context) -> Tree:
    """Split one cell on the implicit cycle between an entry and an exit point."""
    names = ctx.names
    chosen = None
    for i, j in enumerate(cycle):
        nxt = cycle[(i + 1) % len(cycle)]
        entry, exit_ = examples[j][1], examples[nxt][0]
        if entry != exit_:
            chosen = (entry, exit_)
            break
    if chosen is None:
        raise AssertionError("an implicit cycle through equal points is an explicit cycle")
    entry, exit_ = chosen
    path, _ = locate(D, entry, names)
    assert locate(D, exit_, names)[0] == path, "consecutive cycle examples share a cell"
    inside = _cell_examples(D, path, examples, names)
    if ctx.strategy == "lazy":
        h = _lazy_separator(entry, exit_, inside, ctx)
    else:
        cands = [h for h in ctx.H if _side(h, entry, names) != _side(h, exit_, names)]
        if not cands:
            raise NoSeparatingQualifier("qualifier set cannot separate the cycle points")
        h = min(cands, key=lambda h: (_new_crossings(h, inside, names), halfspace_key(h)))
    return replace_leaf(D, path, Node(h, Leaf(ctx.fresh()), Leaf(ctx.fresh())))


# --------------------------------------------------------------------------
# Algorithm 1


@dataclass
class WfSolution:
    tree: Tree
    relation: Formula
    variant: WfVariant
    refinements: int  # phase-3 splits
    splits: int = 0  # all splits of the segmentation
    fell_back: bool = False
    trace: List[str] = field(default_factory=list)

    def show(self) -> str:
        return show_tree(self.tree)


@dataclass
class ExplicitCycle:
    cycle: List[Example]


class _NoImplicitCycle(Exception):
    pass


def synth_wf(positives: Iterable[Example], k: int = 1, strategy: str = "eager", variant: WfVariant = WfVariant.DEGENERATE,
             names: Sequence[str] = None, primed_names: Sequence[str] = None, family: str = "intervals",
             negatives: Iterable[Example] = (), session: SmtSession = None, max_refinements: int = None,
             debug: bool = False) -> Union[WfSolution, ExplicitCycle]:
    """Learn a tree whose relation contains every positive example."""
    if list(negatives):
        raise NegativeWfExample("well-founded predicates only admit positive examples")
    if isinstance(variant, str):
        variant = WfVariant(variant)
    examples = sorted({(tuple(map(int, v)), tuple(map(int, vp))) for v, vp in positives})
    n = len(examples[0][0]) if examples else len(names or ())
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(n))
    primed_names = tuple(primed_names) if primed_names is not None else tuple(x + "'" for x in names)
    for v, vp in examples:
        if len(v) != len(names) or len(vp) != len(names):
            raise ValueError("example dimension does not match the variables")

    cyc = detect_explicit_cycle(examples)
    if cyc is not None:
        return ExplicitCycle(cyc)

    owned = session is None
    session = session or SmtSession()
    try:
        return _algorithm1(examples, k, strategy, variant, names, primed_names, family, session,
                           max_refinements, debug)
    except _NoImplicitCycle:
        log.info("no implicit cycle under the degenerate relation; restarting with the strict one")
        sol = _algorithm1(examples, k, strategy, WfVariant.STRICT, names, primed_names, family, session,
                          max_refinements, debug)
        sol.fell_back = True
        return sol
    finally:
        if owned:
            session.close()


def _algorithm1(examples, k, strategy, variant, names, primed_names, family, session, max_refinements, debug):
    ctx = _Context(names, k, variant, session, strategy, family)
    pts = endpoints(examples)
    ctx.H = generate_qualifiers(pts, names, family) if strategy == "eager" else []
    counter = _Counter()
    trace: List[str] = []
    D = resolve_case2(examples, ctx, counter)
    trace.append(f"phase2 {dump_tree(segmentation(D))}")
    while True:
        # every split separates two example endpoints, so there are at most
        # |points| - 1 of them
        assert counter.splits <= max(len(pts) - 1, 0), "refinement bound exceeded"
        if max_refinements is not None and counter.refinements > max_refinements:
            raise RefinementBudgetExceeded(f"{counter.refinements} refinements")
        C = get_constraints(D, examples, names, variant)
        res = session.check_sat(C, want_core=True)
        if isinstance(res, Unknown):
            raise SolverGaveUp(f"phase 3: {res.reason}")
        if isinstance(res, Sat):
            opt = session.minimize(sum_abs_params(D), C)
            model = opt.model if isinstance(opt, Sat) else res.model
            concrete = instantiate(D, model, names)
            sol = WfSolution(concrete, relation_formula(concrete, names, primed_names, variant), variant,
                             counter.refinements, splits=counter.splits, trace=trace)
            for v, vp in examples:
                assert relation_holds(concrete, v, vp, names, variant), "candidate misses an example"
            return sol
        cycle = find_implicit_cycle(res.core, D, examples, names)
        if cycle is None:
            if variant is WfVariant.STRICT:
                raise AssertionError("unsat under the strict relation without an implicit cycle")
            raise _NoImplicitCycle()
        D = refine_tree(D, cycle, examples, ctx)
        counter.splits += 1
        counter.refinements += 1
        trace.append(f"refine {dump_tree(segmentation(D))}")
        if debug:
            for path, _ in leaves(D):
                assert ctx.feasible(_cell_examples(D, path, examples, names)), "cell lost feasibility"


# --------------------------------------------------------------------------
# Estimator front end


class RankingTreeSynthesizer(BaseEstimator):
    """Estimator wrapper around ``synth_wf``.

    ``fit`` takes an array of rows ``v ++ v'``. After fitting, ``tree_``
    holds the decision tree, ``predict`` tells whether the learnt relation
    contains each row and ``rank`` evaluates ``f_D`` at points.
    """

    def __init__(self, k: int = 1, strategy: str = "eager", qualifiers: str = "intervals",
                 variant: str = "degenerate", feature_names=None):
        self.k = k
        self.strategy = strategy
        self.qualifiers = qualifiers
        self.variant = variant
        self.feature_names = feature_names

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] % 2:
            raise ValueError("expected rows of the form v ++ v'")
        m = X.shape[1] // 2
        self.names_ = tuple(self.feature_names or [f"x{i}" for i in range(m)])
        pairs = [(tuple(map(int, r[:m])), tuple(map(int, r[m:]))) for r in X]
        result = synth_wf(pairs, k=self.k, strategy=self.strategy, variant=WfVariant(self.variant),
                          names=self.names_, family=self.qualifiers)
        if isinstance(result, ExplicitCycle):
            raise ValueError(f"examples contain an explicit cycle: {result.cycle}")
        self.solution_ = result
        self.tree_ = result.tree
        return self

    def rank(self, X):
        X = np.asarray(X, dtype=np.int64)
        return np.array([evaluate(self.tree_, tuple(map(int, r)), self.names_) for r in X])

    def predict(self, X):
        X = np.asarray(X, dtype=np.int64)
        m = len(self.names_)
        return np.array([relation_holds(self.tree_, tuple(map(int, r[:m])), tuple(map(int, r[m:])), self.names_,
                                        self.solution_.variant) for r in X])
