"""SMT-LIB2 driver for an external solver process (z3 by default).

One :class:`SmtSession` owns one solver process. Every query runs inside a
``push``/``pop`` frame, so a session can be reused for many independent
queries. Sessions are single-owner; use one per thread.
"""
from __future__ import annotations

import itertools
import logging
import os
import queue
import shutil
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .lia import (
    Add,
    And,
    Atom,
    BoolConst,
    BoolVar,
    Const,
    Formula,
    Ite,
    Mul,
    Neg,
    Not,
    Or,
    PredApp,
    Term,
    Var,
    bool_vars,
    eval_term,
    formula_vars,
    has_product,
    term_vars,
)

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0


class SolverCrashed(RuntimeError):
    pass


class HardUnsat(ValueError):
    pass


@dataclass(frozen=True)
class LabeledConstraint:
    label: str
    formula: Formula


@dataclass
class Sat:
    model: Dict[str, int]


@dataclass
class Unsat:
    core: frozenset = frozenset()


@dataclass
class Unknown:
    reason: str = ""


SmtResult = Union[Sat, Unsat, Unknown]


# --------------------------------------------------------------------------
# SMT-LIB2 printing


def symbol(name: str) -> str:
    if "|" in name or "\\" in name:
        raise ValueError(f"symbol {name!r} cannot be quoted")
    return f"|{name}|"


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def term_to_smt(t: Term) -> str:
    if isinstance(t, Const):
        return _int(t.value)
    if isinstance(t, Var):
        return symbol(t.name)
    if isinstance(t, Add):
        if len(t.args) == 1:
            return term_to_smt(t.args[0])
        return "(+ " + " ".join(term_to_smt(a) for a in t.args) + ")"
    if isinstance(t, Mul):
        if len(t.args) == 1:
            return term_to_smt(t.args[0])
        return "(* " + " ".join(term_to_smt(a) for a in t.args) + ")"
    if isinstance(t, Neg):
        return f"(- {term_to_smt(t.arg)})"
    if isinstance(t, Ite):
        return f"(ite {formula_to_smt(t.cond)} {term_to_smt(t.then)} {term_to_smt(t.orelse)})"
    raise TypeError(f"not a term: {t!r}")


def formula_to_smt(f: Formula) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        a, b = term_to_smt(f.lhs), term_to_smt(f.rhs)
        if f.op == "!=":
            return f"(not (= {a} {b}))"
        return f"({f.op} {a} {b})"
    if isinstance(f, And):
        return "(and " + " ".join(formula_to_smt(a) for a in f.args) + ")" if f.args else "true"
    if isinstance(f, Or):
        return "(or " + " ".join(formula_to_smt(a) for a in f.args) + ")" if f.args else "false"
    if isinstance(f, Not):
        return f"(not {formula_to_smt(f.arg)})"
    if isinstance(f, BoolVar):
        return symbol(f.name)
    if isinstance(f, PredApp):
        raise ValueError(f"predicate application {f.pred} cannot be sent to the solver")
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# S-expression reading


def parse_sexpr(text: str):
    tokens = _tokenize(text)
    pos = 0

    def walk():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while tokens[pos] != ")":
                out.append(walk())
            pos += 1
            return out
        return tok

    return walk()


def _tokenize(text: str) -> List[str]:
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            out.append(c)
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            out.append(text[i + 1 : j])
            i = j + 1
        elif c == '"':
            j = i + 1
            while True:
                j = text.index('"', j)
                if j + 1 < len(text) and text[j + 1] == '"':
                    j += 2
                    continue
                break
            out.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _value(sx) -> Union[int, bool]:
    if isinstance(sx, str):
        if sx == "true":
            return True
        if sx == "false":
            return False
        return int(sx)
    if sx[0] == "-" and len(sx) == 2:
        return -_value(sx[1])
    if sx[0] == "/":  # rationals never appear for Int symbols
        raise SolverCrashed(f"unexpected rational value {sx}")
    raise SolverCrashed(f"unexpected value {sx}")


# --------------------------------------------------------------------------
# Solver process


def default_solver_command() -> List[str]:
    exe = os.environ.get("TREERANK_SMT_SOLVER") or shutil.which("z3")
    if exe is None:
        raise FileNotFoundError("no SMT solver found; install z3 or set TREERANK_SMT_SOLVER")
    return [exe, "-in", "-smt2"]


class SmtSession:
    """A running solver process speaking SMT-LIB2 over pipes."""

    _ids = itertools.count()

    def __init__(self, command: Sequence[str] = None, timeout: float = DEFAULT_TIMEOUT,
                 native_optimization: Optional[bool] = None, seed: int = 0):
        if isinstance(command, str):
            command = [command, "-in", "-smt2"] if os.path.basename(command).startswith("z3") else [command]
        self.command = list(command) if command else default_solver_command()
        self.timeout = timeout
        self.seed = seed
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._logic: Optional[str] = None
        self._fresh = itertools.count()
        self.queries = 0
        self._start()
        self.name = self._solver_name()
        if native_optimization is None:
            native_optimization = self.name.lower() == "z3"
        self.native_optimization = native_optimization

    # process management ---------------------------------------------------

    def _start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT, text=True)
        except OSError as e:
            raise SolverCrashed(f"cannot start {self.command[0]}: {e}") from e
        self._lines = queue.Queue()
        self._generation = getattr(self, "_generation", 0) + 1
        threading.Thread(target=self._pump, args=(self._proc, self._lines), daemon=True).start()
        self._logic = None
        self._send("(set-option :print-success false)")

    @staticmethod
    def _pump(proc, lines):
        for line in proc.stdout:
            lines.put(line)
        lines.put(None)

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError, OSError):
                pass
            try:
                self._proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    def _restart(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc = None
        self._start()

    def _send(self, cmd: str) -> None:
        if self._proc is None or self._proc.poll() is not None:
            raise SolverCrashed("solver process is not running")
        try:
            self._proc.stdin.write(cmd + "\n")
        except (BrokenPipeError, OSError) as e:
            raise SolverCrashed(str(e)) from e

    def _flush(self) -> None:
        try:
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, AttributeError) as e:
            raise SolverCrashed(str(e)) from e

    def _read(self, wait: float) -> str:
        """Read one complete response (an atom line or a balanced s-expression)."""
        buf, depth = "", 0
        while True:
            try:
                line = self._lines.get(timeout=wait)
            except queue.Empty:
                self._restart()
                raise TimeoutError("solver did not answer in time") from None
            if line is None:
                raise SolverCrashed("solver process exited: " + buf.strip())
            buf += line
            depth += _paren_balance(line)
            if depth <= 0 and buf.strip():
                out = buf.strip()
                if out.startswith("(error"):
                    # z3 reports commands interrupted by a timeout as errors
                    # ahead of the real answer; those are not fatal.
                    if "canceled" in out:
                        buf, depth = "", 0
                        continue
                    raise SolverCrashed(out)
                return out

    def _command(self, cmd: str, wait: float = None) -> str:
        self._send(cmd)
        self._flush()
        return self._read(wait if wait is not None else self.timeout + 5)

    def _solver_name(self) -> str:
        try:
            resp = parse_sexpr(self._command("(get-info :name)", wait=10))
            return resp[1].strip('"') if isinstance(resp, list) else "unknown"
        except (SolverCrashed, TimeoutError, IndexError):
            return "unknown"

    def _set_logic(self, logic: str) -> None:
        if self._logic == logic:
            return
        if self._logic is not None:
            self._send("(reset)")
            self._send("(set-option :print-success false)")
        self._send("(set-option :produce-unsat-cores true)")
        self._send("(set-option :produce-models true)")
        if self.name.lower() == "z3":
            self._send(f"(set-option :random-seed {self.seed})")
            self._send(f"(set-option :timeout {int(self.timeout * 1000)})")
        self._send(f"(set-logic {logic})")
        self._logic = logic

    # queries --------------------------------------------------------------

    def _frame(self, formulas: Iterable[Formula], extra_ints: Iterable[str] = (),
               extra_bools: Iterable[str] = ()) -> Tuple[List[str], List[str]]:
        formulas = list(formulas)
        ints, bools = set(extra_ints), set(extra_bools)
        nonlinear = False
        for f in formulas:
            ints |= formula_vars(f)
            bools |= bool_vars(f)
            nonlinear = nonlinear or has_product(f)
        self._set_logic("QF_NIA" if nonlinear else "QF_LIA")
        self._send("(push 1)")
        self._frame_generation = self._generation
        ints_sorted, bools_sorted = sorted(ints), sorted(bools)
        for v in ints_sorted:
            self._send(f"(declare-fun {symbol(v)} () Int)")
        for b in bools_sorted:
            self._send(f"(declare-fun {symbol(b)} () Bool)")
        return ints_sorted, bools_sorted

    def _check(self) -> str:
        self.queries += 1
        try:
            return self._command("(check-sat)")
        except TimeoutError:
            return "unknown"

    def _get_values(self, names: Sequence[str]) -> Dict[str, Union[int, bool]]:
        if not names:
            return {}
        resp = parse_sexpr(self._command("(get-value (" + " ".join(symbol(n) for n in names) + "))"))
        return {pair[0]: _value(pair[1]) for pair in resp}

    def _pop(self) -> None:
        # a timeout restarts the process, which discards the frame anyway
        if self._frame_generation != self._generation:
            return
        if self._proc is not None and self._proc.poll() is None:
            self._send("(pop 1)")

    def check_sat(self, constraints: Sequence[LabeledConstraint], want_core: bool = False,
                  symbols: Iterable[str] = ()) -> SmtResult:
        """Satisfiability of the conjunction; models cover every free symbol."""
        _check_labels(constraints)
        ints, bools = self._frame((c.formula for c in constraints), extra_ints=symbols)
        try:
            for c in constraints:
                body = formula_to_smt(c.formula)
                if want_core:
                    self._send(f"(assert (! {body} :named {symbol(c.label)}))")
                else:
                    self._send(f"(assert {body})")
            answer = self._check()
            if answer == "sat":
                return Sat(self._get_values(ints + bools))
            if answer == "unsat":
                if want_core:
                    core = parse_sexpr(self._command("(get-unsat-core)"))
                    return Unsat(frozenset(core))
                return Unsat()
            return Unknown(answer)
        finally:
            self._pop()

    def max_sat(self, hard: Sequence[LabeledConstraint],
                soft: Sequence[LabeledConstraint]) -> Tuple[int, Optional[Dict[str, int]]]:
        """Largest number of soft constraints satisfiable together with ``hard``."""
        if not soft:
            res = self.check_sat(hard) if hard else Sat({})
            if isinstance(res, Unsat):
                raise HardUnsat("hard constraints are unsatisfiable")
            return 0, None
        _check_labels(list(hard) + list(soft))
        if self.native_optimization:
            return self._max_sat_native(hard, soft)
        return self._max_sat_cardinality(hard, soft)

    def _indicators(self, soft) -> List[str]:
        tag = next(self._fresh)
        return [f"_soft{tag}_{i}" for i in range(len(soft))]

    def _max_sat_native(self, hard, soft):
        inds = self._indicators(soft)
        ints, bools = self._frame([c.formula for c in hard] + [c.formula for c in soft], extra_bools=inds)
        try:
            for c in hard:
                self._send(f"(assert {formula_to_smt(c.formula)})")
            for b, c in zip(inds, soft):
                self._send(f"(assert (= {symbol(b)} {formula_to_smt(c.formula)}))")
                self._send(f"(assert-soft {symbol(b)})")
            answer = self._check()
            if answer == "unsat":
                raise HardUnsat("hard constraints are unsatisfiable")
            if answer != "sat":
                raise TimeoutError(f"max_sat: solver answered {answer}")
            vals = self._get_values(ints + bools)
            count = sum(1 for b in inds if vals[b])
            hidden = set(inds)
            return count, {k: v for k, v in vals.items() if k not in hidden}
        finally:
            self._pop()

    def _max_sat_cardinality(self, hard, soft):
        # Model-improving search: each satisfiable bound raises the lower bound
        # to the count achieved by the returned model.
        inds = self._indicators(soft)
        ints, bools = self._frame([c.formula for c in hard] + [c.formula for c in soft], extra_bools=inds)
        try:
            for c in hard:
                self._send(f"(assert {formula_to_smt(c.formula)})")
            for b, c in zip(inds, soft):
                self._send(f"(assert (=> {symbol(b)} {formula_to_smt(c.formula)}))")
            answer = self._check()
            if answer == "unsat":
                raise HardUnsat("hard constraints are unsatisfiable")
            if answer != "sat":
                raise TimeoutError(f"max_sat: solver answered {answer}")
            best_model = self._get_values(ints + bools)
            best = _count_true(soft, best_model)
            count_term = "(+ " + " ".join(f"(ite {symbol(b)} 1 0)" for b in inds) + ")"
            while best < len(soft):
                self._send("(push 1)")
                self._send(f"(assert (>= {count_term} {best + 1}))")
                answer = self._check()
                if answer == "sat":
                    best_model = self._get_values(ints + bools)
                    self._send("(pop 1)")
                    best = max(best + 1, _count_true(soft, best_model))
                    continue
                self._send("(pop 1)")
                if answer != "unsat":
                    raise TimeoutError(f"max_sat: solver answered {answer}")
                break
            hidden = set(inds)
            return best, {k: v for k, v in best_model.items() if k not in hidden}
        finally:
            self._pop()

    def minimize(self, objective: Term, constraints: Sequence[LabeledConstraint],
                 symbols: Iterable[str] = ()) -> SmtResult:
        """A model of ``constraints`` minimizing the integer ``objective``."""
        _check_labels(constraints)
        symbols = set(symbols) | term_vars(objective)
        if self.native_optimization:
            return self._minimize_native(objective, constraints, symbols)
        return self._minimize_bisect(objective, constraints, symbols)

    def _minimize_native(self, objective, constraints, symbols):
        ints, bools = self._frame([c.formula for c in constraints], extra_ints=symbols)
        try:
            for c in constraints:
                self._send(f"(assert {formula_to_smt(c.formula)})")
            self._send(f"(minimize {term_to_smt(objective)})")
            answer = self._check()
            if answer == "sat":
                return Sat(self._get_values(ints + bools))
            if answer == "unsat":
                return Unsat()
            return Unknown(answer)
        finally:
            self._pop()

    def _minimize_bisect(self, objective, constraints, symbols):
        ints, bools = self._frame([c.formula for c in constraints], extra_ints=symbols)
        obj = term_to_smt(objective)
        try:
            for c in constraints:
                self._send(f"(assert {formula_to_smt(c.formula)})")
            answer = self._check()
            if answer != "sat":
                return Unsat() if answer == "unsat" else Unknown(answer)
            best = self._get_values(ints + bools)
            hi = eval_term(objective, best)

            def feasible(bound):
                self._send("(push 1)")
                self._send(f"(assert (<= {obj} {_int(bound)}))")
                ans = self._check()
                model = self._get_values(ints + bools) if ans == "sat" else None
                self._send("(pop 1)")
                if ans not in ("sat", "unsat"):
                    raise TimeoutError(f"minimize: solver answered {ans}")
                return model

            # Find an infeasible bound below hi by doubling the step, then bisect.
            step, lo = 1, None
            while lo is None:
                model = feasible(hi - step)
                if model is None:
                    lo = hi - step + 1
                else:
                    best, hi = model, eval_term(objective, model)
                    step *= 2
            while lo < hi:
                mid = (lo + hi) // 2
                model = feasible(mid)
                if model is None:
                    lo = mid + 1
                else:
                    best, hi = model, eval_term(objective, model)
            return Sat(best)
        finally:
            self._pop()


def _paren_balance(line: str) -> int:
    depth, in_bar, in_str = 0, False, False
    for c in line:
        if in_bar:
            in_bar = c != "|"
        elif in_str:
            in_str = c != '"'
        elif c == "|":
            in_bar = True
        elif c == '"':
            in_str = True
        elif c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
    return depth


def _count_true(soft, model) -> int:
    from .lia import eval_formula

    return sum(1 for c in soft if eval_formula(c.formula, _defaulted(model, c.formula)))


def _defaulted(model, f):
    missing = formula_vars(f) - model.keys()
    if not missing:
        return model
    out = dict(model)
    out.update({m: 0 for m in missing})
    return out


def _check_labels(constraints) -> None:
    labels = [c.label for c in constraints]
    if len(set(labels)) != len(labels):
        raise ValueError("constraint labels must be unique within a query")


# Module-level conveniences mirroring the session methods.

def check_sat(constraints, want_core=False, session: SmtSession = None) -> SmtResult:
    with _session(session) as s:
        return s.check_sat(constraints, want_core)


def max_sat(hard, soft, session: SmtSession = None):
    with _session(session) as s:
        return s.max_sat(hard, soft)


def minimize(objective, constraints, session: SmtSession = None) -> SmtResult:
    with _session(session) as s:
        return s.minimize(objective, constraints)


class _session:
    def __init__(self, session):
        self.session = session
        self.owned = session is None

    def __enter__(self):
        if self.owned:
            self.session = SmtSession()
        return self.session

    def __exit__(self, *exc):
        if self.owned:
            self.session.close()


def constraints(*formulas: Formula, prefix: str = "c") -> List[LabeledConstraint]:
    return [LabeledConstraint(f"{prefix}{i}", f) for i, f in enumerate(formulas)]
