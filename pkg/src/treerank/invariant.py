"""Boolean decision-tree learning for ordinary (non well-founded) predicates.

The learner grows a tree over halfspace qualifiers, choosing at every node
the qualifier with the highest information gain, and stops when a node is
label-pure. The resulting predicate is the disjunction of the paths that end
in a positive leaf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .lia import FALSE, TRUE, Formula, Halfspace, conj, disj, generate_qualifiers, halfspace_key

Vector = Tuple[int, ...]


class Inseparable(ValueError):
    """Some point is labelled both positive and negative."""


@dataclass(frozen=True)
class BoolLeaf:
    label: bool
    points: Tuple[Vector, ...] = ()


@dataclass(frozen=True)
class BoolNode:
    split: Halfspace
    yes: "BoolTree"
    no: "BoolTree"


BoolTree = Union[BoolLeaf, BoolNode]


def entropy(p: int, n: int) -> float:
    total = p + n
    if total == 0:
        return 0.0
    h = 0.0
    for c in (p, n):
        if c:
            q = c / total
            h -= q * math.log2(q)
    return h


def information_gain(h: Halfspace, names, pos, neg) -> float:
    side = lambda v: h.contains(dict(zip(names, v)))
    py = sum(1 for v in pos if side(v))
    ny = sum(1 for v in neg if side(v))
    pn, nn = len(pos) - py, len(neg) - ny
    total = len(pos) + len(neg)
    after = ((py + ny) * entropy(py, ny) + (pn + nn) * entropy(pn, nn)) / total
    return entropy(len(pos), len(neg)) - after


def grow_tree(pos: Set[Vector], neg: Set[Vector], qualifiers: Sequence[Halfspace],
              names: Sequence[str]) -> BoolTree:
    both = set(pos) & set(neg)
    if both:
        raise Inseparable(f"{sorted(both)[0]} is both positive and negative")
    return _grow(sorted(pos), sorted(neg), list(qualifiers), tuple(names))


def _grow(pos, neg, qualifiers, names) -> BoolTree:
    if not neg:
        return BoolLeaf(True, tuple(pos))
    if not pos:
        return BoolLeaf(False, tuple(neg))
    points = pos + neg
    best, best_score = None, None
    for h in qualifiers:
        inside = sum(1 for v in points if h.contains(dict(zip(names, v))))
        if inside == 0 or inside == len(points):
            continue
        gain = information_gain(h, names, pos, neg)
        # round so that float noise does not defeat the documented tie-break
        score = (-round(gain, 12), halfspace_key(h))
        if best_score is None or score < best_score:
            best, best_score = h, score
    if best is None:
        raise Inseparable("no qualifier separates the remaining examples")
    side = lambda v: best.contains(dict(zip(names, v)))
    return BoolNode(
        best,
        _grow([v for v in pos if side(v)], [v for v in neg if side(v)], qualifiers, names),
        _grow([v for v in pos if not side(v)], [v for v in neg if not side(v)], qualifiers, names),
    )


def tree_to_formula(t: BoolTree) -> Formula:
    """DNF of the root-to-positive-leaf paths."""
    paths: List[Formula] = []

    def walk(node, guards):
        if isinstance(node, BoolLeaf):
            if node.label:
                paths.append(conj(*guards))
            return
        walk(node.yes, guards + [node.split.to_formula()])
        walk(node.no, guards + [node.split.complement().to_formula()])

    walk(t, [])
    return disj(*paths) if paths else FALSE


def tree_depth(t: BoolTree) -> int:
    if isinstance(t, BoolLeaf):
        return 0
    return 1 + max(tree_depth(t.yes), tree_depth(t.no))


def synth_invariant(pos: Iterable[Sequence[int]], neg: Iterable[Sequence[int]], names: Sequence[str],
                    qualifiers: Optional[Sequence[Halfspace]] = None,
                    family: str = "intervals") -> Formula:
    """A formula over ``names`` true on every ``pos`` point and false on every ``neg`` point.

    Without explicit ``qualifiers`` the chosen family is instantiated at the
    union of all example points.
    """
    pos = {tuple(int(x) for x in v) for v in pos}
    neg = {tuple(int(x) for x in v) for v in neg}
    if qualifiers is None:
        qualifiers = generate_qualifiers(sorted(pos | neg), names, family)
    return tree_to_formula(grow_tree(pos, neg, qualifiers, names))


class InvariantClassifier(BaseEstimator, ClassifierMixin):
    """Estimator front end for the invariant learner.

    ``fit`` takes integer points and boolean labels; ``formula_`` holds the
    learnt predicate over ``feature_names`` (``x0, x1, ...`` by default).
    """

    def __init__(self, qualifiers: str = "intervals", feature_names=None):
        self.qualifiers = qualifiers
        self.feature_names = feature_names

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.int64).reshape(len(X), -1)
        y = np.asarray(y, dtype=bool)
        names = self.feature_names or [f"x{i}" for i in range(X.shape[1])]
        self.names_ = tuple(names)
        pos = {tuple(int(a) for a in row) for row, label in zip(X, y) if label}
        neg = {tuple(int(a) for a in row) for row, label in zip(X, y) if not label}
        H = generate_qualifiers(sorted(pos | neg), self.names_, self.qualifiers)
        self.tree_ = grow_tree(pos, neg, H, self.names_)
        self.formula_ = tree_to_formula(self.tree_)
        self.classes_ = np.array([False, True])
        return self

    def predict(self, X):
        from .lia import eval_formula

        X = np.asarray(X, dtype=np.int64).reshape(len(X), -1)
        return np.array([eval_formula(self.formula_, dict(zip(self.names_, map(int, row)))) for row in X])
