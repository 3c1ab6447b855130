"""Exact linear (and nonlinear, for inputs) integer arithmetic.

Terms and formulas are immutable trees. Variables are referred to by name;
the post-state copy of a program variable ``x`` is conventionally ``x'``.
Strict comparisons are rewritten to non-strict ones when built through the
helper constructors (``a > b`` becomes ``a >= b + 1``).
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

Valuation = Dict[str, int]


class MissingVariable(KeyError):
    pass


class PredicateApplicationPresent(ValueError):
    pass


class NonLinearTerm(ValueError):
    pass


class DegenerateHyperplane(ValueError):
    pass


# --------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_term(other)))

    def __radd__(self, other):
        return Add((as_term(other), self))

    def __sub__(self, other):
        return Add((self, Neg(as_term(other))))

    def __rsub__(self, other):
        return Add((as_term(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, as_term(other)))

    def __rmul__(self, other):
        return Mul((as_term(other), self))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return show_term(self)


@dataclass(frozen=True, eq=True)
class Var(Term):
    name: str


@dataclass(frozen=True, eq=True)
class Const(Term):
    value: int


@dataclass(frozen=True, eq=True)
class Add(Term):
    args: Tuple[Term, ...]


@dataclass(frozen=True, eq=True)
class Mul(Term):
    args: Tuple[Term, ...]


@dataclass(frozen=True, eq=True)
class Neg(Term):
    arg: Term


@dataclass(frozen=True, eq=True)
class Ite(Term):
    cond: "Formula"
    then: Term
    orelse: Term


def as_term(t) -> Term:
    if isinstance(t, Term):
        return t
    if isinstance(t, bool):
        raise TypeError("booleans are not integer terms")
    if isinstance(t, int):
        return Const(t)
    if isinstance(t, str):
        return Var(t)
    raise TypeError(f"cannot convert {t!r} to a term")


def term_vars(t: Term) -> set:
    out: set = set()
    _collect_term_vars(t, out)
    return out


def _collect_term_vars(t: Term, out: set) -> None:
    if isinstance(t, Var):
        out.add(t.name)
    elif isinstance(t, (Add, Mul)):
        for a in t.args:
            _collect_term_vars(a, out)
    elif isinstance(t, Neg):
        _collect_term_vars(t.arg, out)
    elif isinstance(t, Ite):
        _collect_formula_vars(t.cond, out)
        _collect_term_vars(t.then, out)
        _collect_term_vars(t.orelse, out)


def is_linear(t: Term) -> bool:
    try:
        AffineExpr.from_term(t)
    except NonLinearTerm:
        return False
    return True


def has_product(x: Union[Term, "Formula"]) -> bool:
    """True if some product has two or more non-constant factors."""
    if isinstance(x, Mul):
        nonconst = [a for a in x.args if term_vars(a)]
        if len(nonconst) > 1:
            return True
        return any(has_product(a) for a in x.args)
    if isinstance(x, Add):
        return any(has_product(a) for a in x.args)
    if isinstance(x, Neg):
        return has_product(x.arg)
    if isinstance(x, Ite):
        return has_product(x.cond) or has_product(x.then) or has_product(x.orelse)
    if isinstance(x, Atom):
        return has_product(x.lhs) or has_product(x.rhs)
    if isinstance(x, (And, Or)):
        return any(has_product(a) for a in x.args)
    if isinstance(x, Not):
        return has_product(x.arg)
    if isinstance(x, PredApp):
        return any(has_product(a) for a in x.args)
    return False


def eval_term(t: Term, v: Mapping[str, int]) -> int:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        try:
            return v[t.name]
        except KeyError:
            raise MissingVariable(t.name) from None
    if isinstance(t, Add):
        return sum(eval_term(a, v) for a in t.args)
    if isinstance(t, Mul):
        out = 1
        for a in t.args:
            out *= eval_term(a, v)
        return out
    if isinstance(t, Neg):
        return -eval_term(t.arg, v)
    if isinstance(t, Ite):
        return eval_term(t.then, v) if eval_formula(t.cond, v) else eval_term(t.orelse, v)
    raise TypeError(f"not a term: {t!r}")


# --------------------------------------------------------------------------
# Formulas


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return negate(self)

    def __str__(self):
        return show_formula(self)


@dataclass(frozen=True, eq=True)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)

COMPARISONS = ("=", "!=", "<=", ">=")


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"unsupported comparison {self.op!r}; use lt()/gt() for strict ones")


@dataclass(frozen=True, eq=True)
class And(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True, eq=True)
class Or(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True, eq=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, eq=True)
class PredApp(Formula):
    pred: str
    args: Tuple[Term, ...]


@dataclass(frozen=True, eq=True)
class BoolVar(Formula):
    name: str


def eq(a, b) -> Atom:
    return Atom("=", as_term(a), as_term(b))


def ne(a, b) -> Atom:
    return Atom("!=", as_term(a), as_term(b))


def le(a, b) -> Atom:
    return Atom("<=", as_term(a), as_term(b))


def ge(a, b) -> Atom:
    return Atom(">=", as_term(a), as_term(b))


def lt(a, b) -> Atom:
    # integer semantics: a < b  <=>  a + 1 <= b
    return Atom("<=", _plus_one(as_term(a)), as_term(b))


def gt(a, b) -> Atom:
    return Atom(">=", as_term(a), _plus_one(as_term(b)))


def _plus_one(t: Term) -> Term:
    if isinstance(t, Const):
        return Const(t.value + 1)
    return Add((t, Const(1)))


def compare(op: str, a, b) -> Atom:
    return {"=": eq, "==": eq, "!=": ne, "<=": le, ">=": ge, "<": lt, ">": gt}[op](a, b)


def conj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a == TRUE:
            continue
        elif a == FALSE:
            return FALSE
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a == FALSE:
            continue
        elif a == TRUE:
            return TRUE
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def negate(f: Formula) -> Formula:
    if isinstance(f, BoolConst):
        return BoolConst(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    return disj(negate(a), b)


def formula_vars(f: Formula) -> set:
    out: set = set()
    _collect_formula_vars(f, out)
    return out


def _collect_formula_vars(f: Formula, out: set) -> None:
    if isinstance(f, Atom):
        _collect_term_vars(f.lhs, out)
        _collect_term_vars(f.rhs, out)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _collect_formula_vars(a, out)
    elif isinstance(f, Not):
        _collect_formula_vars(f.arg, out)
    elif isinstance(f, PredApp):
        for a in f.args:
            _collect_term_vars(a, out)


def bool_vars(f: Formula) -> set:
    if isinstance(f, BoolVar):
        return {f.name}
    if isinstance(f, (And, Or)):
        return set().union(*(bool_vars(a) for a in f.args))
    if isinstance(f, Not):
        return bool_vars(f.arg)
    return set()


def pred_apps(f: Formula) -> list:
    if isinstance(f, PredApp):
        return [f]
    if isinstance(f, (And, Or)):
        return [p for a in f.args for p in pred_apps(a)]
    if isinstance(f, Not):
        return pred_apps(f.arg)
    return []


def is_ground(f: Formula) -> bool:
    return not formula_vars(f)


def is_predicate_free(f: Formula) -> bool:
    return not pred_apps(f)


def eval_formula(f: Formula, v: Mapping[str, int]) -> bool:
    """Evaluate a predicate-free formula under ``v`` (booleans live in ``v`` too)."""
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Atom):
        a, b = eval_term(f.lhs, v), eval_term(f.rhs, v)
        if f.op == "=":
            return a == b
        if f.op == "!=":
            return a != b
        if f.op == "<=":
            return a <= b
        return a >= b
    if isinstance(f, And):
        return all(eval_formula(a, v) for a in f.args)
    if isinstance(f, Or):
        return any(eval_formula(a, v) for a in f.args)
    if isinstance(f, Not):
        return not eval_formula(f.arg, v)
    if isinstance(f, BoolVar):
        try:
            return bool(v[f.name])
        except KeyError:
            raise MissingVariable(f.name) from None
    if isinstance(f, PredApp):
        raise PredicateApplicationPresent(f.pred)
    raise TypeError(f"not a formula: {f!r}")


def substitute_term(t: Term, m: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return m.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, Add):
        return Add(tuple(substitute_term(a, m) for a in t.args))
    if isinstance(t, Mul):
        return Mul(tuple(substitute_term(a, m) for a in t.args))
    if isinstance(t, Neg):
        return Neg(substitute_term(t.arg, m))
    if isinstance(t, Ite):
        return Ite(substitute(t.cond, m), substitute_term(t.then, m), substitute_term(t.orelse, m))
    raise TypeError(f"not a term: {t!r}")


def substitute(f: Formula, m: Mapping[str, Union[Term, int]]) -> Formula:
    """Simultaneous, capture-free replacement of variables by terms."""
    m = {k: as_term(t) for k, t in m.items()}
    return _subst(f, m)


def _subst(f: Formula, m: Mapping[str, Term]) -> Formula:
    if isinstance(f, (BoolConst, BoolVar)):
        return f
    if isinstance(f, Atom):
        return Atom(f.op, substitute_term(f.lhs, m), substitute_term(f.rhs, m))
    if isinstance(f, And):
        return And(tuple(_subst(a, m) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_subst(a, m) for a in f.args))
    if isinstance(f, Not):
        return Not(_subst(f.arg, m))
    if isinstance(f, PredApp):
        return PredApp(f.pred, tuple(substitute_term(a, m) for a in f.args))
    raise TypeError(f"not a formula: {f!r}")


def map_pred_apps(f: Formula, fn: Callable[[PredApp], Formula]) -> Formula:
    if isinstance(f, PredApp):
        return fn(f)
    if isinstance(f, And):
        return conj(*(map_pred_apps(a, fn) for a in f.args))
    if isinstance(f, Or):
        return disj(*(map_pred_apps(a, fn) for a in f.args))
    if isinstance(f, Not):
        return negate(map_pred_apps(f.arg, fn))
    return f


# --------------------------------------------------------------------------
# Pretty printing (infix, also accepted by the transition-system parser)

_PREC_SUM, _PREC_PROD, _PREC_UNARY = 1, 2, 3


def show_term(t: Term, prec: int = 0) -> str:
    if isinstance(t, Const):
        s = str(t.value)
        return f"({s})" if t.value < 0 and prec >= _PREC_PROD else s
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Add):
        # nested sums keep their parentheses so that printing round-trips
        parts = [show_term(t.args[0], _PREC_SUM + isinstance(t.args[0], Add))]
        for a in t.args[1:]:
            if isinstance(a, Neg):
                parts.append("- " + show_term(a.arg, _PREC_PROD))
            else:
                parts.append("+ " + show_term(a, _PREC_SUM + isinstance(a, Add)))
        s = " ".join(parts)
        return f"({s})" if prec > _PREC_SUM else s
    if isinstance(t, Mul):
        first = t.args[0]
        head = str(first.value) if isinstance(first, Const) else show_term(first, _PREC_PROD + isinstance(first, Mul))
        s = "*".join([head] + [show_term(a, _PREC_PROD + isinstance(a, Mul)) for a in t.args[1:]])
        return f"({s})" if prec > _PREC_PROD else s
    if isinstance(t, Neg):
        if isinstance(t.arg, Const):
            return f"-({t.arg.value})"
        return "-" + show_term(t.arg, _PREC_UNARY)
    if isinstance(t, Ite):
        return f"(if {show_formula(t.cond)} then {show_term(t.then)} else {show_term(t.orelse)})"
    raise TypeError(f"not a term: {t!r}")


def show_formula(f: Formula, prec: int = 0) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        op = "==" if f.op == "=" else f.op
        return f"{show_term(f.lhs)} {op} {show_term(f.rhs)}"
    if isinstance(f, And):
        s = " && ".join(show_formula(a, 2) for a in f.args)
        return f"({s})" if prec > 2 else s
    if isinstance(f, Or):
        s = " || ".join(show_formula(a, 1) for a in f.args)
        return f"({s})" if prec > 1 else s
    if isinstance(f, Not):
        return "!(" + show_formula(f.arg) + ")"
    if isinstance(f, PredApp):
        return f"{f.pred}(" + ", ".join(show_term(a) for a in f.args) + ")"
    if isinstance(f, BoolVar):
        return f.name
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# Affine expressions and halfspaces


@dataclass(frozen=True)
class AffineExpr:
    """``sum(c * x for x, c in coeffs) + constant`` with zero entries dropped."""

    coeffs: Tuple[Tuple[str, int], ...] = ()
    constant: int = 0

    @classmethod
    def make(cls, coeffs: Mapping[str, int] = None, constant: int = 0) -> "AffineExpr":
        items = tuple(sorted((k, int(c)) for k, c in (coeffs or {}).items() if c != 0))
        return cls(items, int(constant))

    @classmethod
    def from_term(cls, t: Term) -> "AffineExpr":
        coeffs, const = _linearize(t)
        return cls.make(coeffs, const)

    @property
    def coeff_map(self) -> Dict[str, int]:
        return dict(self.coeffs)

    def coeff(self, name: str) -> int:
        return self.coeff_map.get(name, 0)

    def variables(self) -> Tuple[str, ...]:
        return tuple(k for k, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def __call__(self, v: Mapping[str, int]) -> int:
        return eval_affine(self, v)

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        m = self.coeff_map
        for k, c in other.coeffs:
            m[k] = m.get(k, 0) + c
        return AffineExpr.make(m, self.constant + other.constant)

    def scale(self, k: int) -> "AffineExpr":
        return AffineExpr.make({x: c * k for x, c in self.coeffs}, self.constant * k)

    def __neg__(self) -> "AffineExpr":
        return self.scale(-1)

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + (-other)

    def rename(self, m: Mapping[str, str]) -> "AffineExpr":
        out: Dict[str, int] = {}
        for k, c in self.coeffs:
            key = m.get(k, k)
            out[key] = out.get(key, 0) + c
        return AffineExpr.make(out, self.constant)

    def to_term(self) -> Term:
        parts: list = []
        for k, c in self.coeffs:
            if abs(c) == 1:
                mono: Term = Var(k)
            else:
                mono = Mul((Const(abs(c)), Var(k)))
            if c < 0:
                mono = Neg(mono) if parts or abs(c) == 1 else Mul((Const(c), Var(k)))
            parts.append(mono)
        if self.constant or not parts:
            k = self.constant
            parts.append(Neg(Const(-k)) if k < 0 and parts else Const(k))
        return parts[0] if len(parts) == 1 else Add(tuple(parts))

    def __str__(self):
        return show_term(self.to_term())


def _linearize(t: Term) -> Tuple[Dict[str, int], int]:
    if isinstance(t, Const):
        return {}, t.value
    if isinstance(t, Var):
        return {t.name: 1}, 0
    if isinstance(t, Neg):
        c, k = _linearize(t.arg)
        return {x: -a for x, a in c.items()}, -k
    if isinstance(t, Add):
        out: Dict[str, int] = {}
        const = 0
        for a in t.args:
            c, k = _linearize(a)
            for x, v in c.items():
                out[x] = out.get(x, 0) + v
            const += k
        return out, const
    if isinstance(t, Mul):
        coeffs: Dict[str, int] = {}
        const = 1
        seen_var = False
        for a in t.args:
            c, k = _linearize(a)
            c = {x: v for x, v in c.items() if v}
            if c:
                if seen_var:
                    raise NonLinearTerm(show_term(t))
                seen_var = True
                coeffs = {x: v * const for x, v in c.items()}
                const = k * const
            else:
                coeffs = {x: v * k for x, v in coeffs.items()}
                const *= k
        return coeffs, const
    raise NonLinearTerm(f"cannot linearize {t!r}")


def eval_affine(e: AffineExpr, v: Mapping[str, int]) -> int:
    total = e.constant
    for name, c in e.coeffs:
        try:
            total += c * v[name]
        except KeyError:
            raise MissingVariable(name) from None
    return total


class Side(enum.Enum):
    NONNEG = "NonNeg"
    NEG = "Neg"


@dataclass(frozen=True)
class Halfspace:
    """The integer halfspace ``expr >= 0``, kept in gcd-reduced form."""

    expr: AffineExpr

    def __post_init__(self):
        if self.expr.is_constant():
            raise ValueError("a halfspace needs at least one nonzero coefficient")
        object.__setattr__(self, "expr", _normalize_halfspace(self.expr))

    @classmethod
    def ge(cls, coeffs: Mapping[str, int], constant: int = 0) -> "Halfspace":
        return cls(AffineExpr.make(coeffs, constant))

    def contains(self, v: Mapping[str, int]) -> bool:
        return eval_affine(self.expr, v) >= 0

    def complement(self) -> "Halfspace":
        # not (e >= 0)  <=>  -e - 1 >= 0 over the integers
        return Halfspace(AffineExpr.make({k: -c for k, c in self.expr.coeffs}, -self.expr.constant - 1))

    def to_formula(self) -> Formula:
        return ge(self.expr.to_term(), 0)

    def num_coeffs(self) -> int:
        return len(self.expr.coeffs)

    def __str__(self):
        pos = {k: c for k, c in self.expr.coeffs}
        lhs = AffineExpr.make(pos)
        rhs = -self.expr.constant
        return f"{lhs} >= {rhs}"


def _normalize_halfspace(e: AffineExpr) -> AffineExpr:
    g = 0
    for _, c in e.coeffs:
        g = math.gcd(g, c)
    if g <= 1:
        return e
    # sum(c x) + k >= 0  <=>  sum(c/g x) + floor(k/g) >= 0 over the integers
    return AffineExpr(tuple((k, c // g) for k, c in e.coeffs), e.constant // g)


def normalize_halfspace(h: Halfspace) -> Halfspace:
    return Halfspace(h.expr)


def side_of(h: Halfspace, v: Mapping[str, int]) -> Side:
    return Side.NONNEG if eval_affine(h.expr, v) >= 0 else Side.NEG


# --------------------------------------------------------------------------
# Continued-fraction rationalization of real coefficient vectors

EPSILON = 1e-6
MAX_DENOMINATOR = 2 ** 16


def continued_fraction(x: float, depth: int, max_denominator: int = MAX_DENOMINATOR) -> Fraction:
    """Best convergent of ``x`` using at most ``depth`` partial quotients."""
    exact = Fraction(x)
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    rest = exact
    best = Fraction(math.floor(exact))
    for _ in range(max(depth, 1)):
        a = math.floor(rest)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > max_denominator:
            break
        best = Fraction(h, k)
        frac = rest - a
        if frac == 0:
            break
        rest = 1 / frac
    return best


def rationalize(
    coefficients: Sequence[float],
    depth: int = 8,
    variables: Sequence[str] = None,
    constant: float = 0.0,
    samples: Iterable[Sequence[int]] = (),
    epsilon: float = EPSILON,
    max_denominator: int = MAX_DENOMINATOR,
) -> AffineExpr:
    """Approximate ``sum(c_i * x_i) + constant`` by an integer affine expression.

    Each coefficient is replaced by a truncated continued fraction and the
    result is scaled by the lcm of the denominators. If any supplied sample
    point changes sign relative to the real expression (ignoring points where
    the real value is within ``epsilon`` of zero) the expansion is deepened,
    finally falling back to the exact binary value of the floats.
    """
    if variables is None:
        variables = [f"x{i}" for i in range(len(coefficients))]
    if len(variables) != len(coefficients):
        raise ValueError("one variable name per coefficient")
    if all(abs(c) <= epsilon for c in coefficients):
        raise DegenerateHyperplane("all coefficients are (near) zero")
    samples = [tuple(s) for s in samples]

    def build(approx: Callable[[float], Fraction]) -> AffineExpr:
        fracs = [approx(c) if abs(c) > epsilon else Fraction(0) for c in coefficients]
        const = approx(constant) if abs(constant) > epsilon else Fraction(0)
        if all(f == 0 for f in fracs):
            raise DegenerateHyperplane("all coefficients rounded to zero")
        lcm = 1
        for f in fracs + [const]:
            lcm = lcm * f.denominator // math.gcd(lcm, f.denominator)
        ints = [int(f * lcm) for f in fracs]
        c0 = int(const * lcm)
        g = 0
        for i in ints + [c0]:
            g = math.gcd(g, i)
        g = g or 1
        return AffineExpr.make({x: i // g for x, i in zip(variables, ints)}, c0 // g)

    def sign_ok(e: AffineExpr) -> bool:
        for s in samples:
            real = sum(c * x for c, x in zip(coefficients, s)) + constant
            if abs(real) <= epsilon:
                continue
            val = eval_affine(e, dict(zip(variables, s)))
            if (real > 0) != (val > 0) or val == 0:
                return False
        return True

    for d in (depth, 2 * depth, 4 * depth):
        e = build(lambda c, d=d: continued_fraction(c, d, max_denominator))
        if sign_ok(e):
            return e
    return build(Fraction)


# --------------------------------------------------------------------------
# Qualifier families


def halfspace_key(h: Halfspace):
    """Deterministic preference order: sparse, small constant, positive first."""
    return (h.num_coeffs(), abs(h.expr.constant), tuple(-c for _, c in h.expr.coeffs),
            h.expr.variables(), h.expr.constant)


def interval_qualifiers(points: Iterable[Sequence[int]], names: Sequence[str]) -> List[Halfspace]:
    """``±(x_i - a_i) >= 0`` for every coordinate of every point."""
    out = set()
    for p in points:
        for name, a in zip(names, p):
            out.add(Halfspace.ge({name: 1}, -a))
            out.add(Halfspace.ge({name: -1}, a))
    return sorted(out, key=halfspace_key)


def octagon_qualifiers(points: Iterable[Sequence[int]], names: Sequence[str]) -> List[Halfspace]:
    """Intervals plus ``±(x_i - a_i) ± (x_j - a_j) >= 0`` for ``i != j``."""
    points = [tuple(p) for p in points]
    out = set(interval_qualifiers(points, names))
    for p in points:
        for i, j in itertools.combinations(range(len(names)), 2):
            for si in (1, -1):
                for sj in (1, -1):
                    const = -(si * p[i] + sj * p[j])
                    out.add(Halfspace.ge({names[i]: si, names[j]: sj}, const))
    return sorted(out, key=halfspace_key)


QUALIFIER_FAMILIES = {"intervals": interval_qualifiers, "octagons": octagon_qualifiers}


def generate_qualifiers(points, names, family: str = "intervals") -> List[Halfspace]:
    try:
        gen = QUALIFIER_FAMILIES[family.lower()]
    except KeyError:
        raise ValueError(f"unknown qualifier family {family!r}") from None
    return gen(points, names)
