"""Command-line driver: prove termination or non-termination of a T2 file.

The first output line is the verdict (YES, NO, UNKNOWN or TIMEOUT); a
witness block follows. Exit codes are 0/1/2/3 for the four verdicts and
64 and above for usage, input and internal errors.
"""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .cegis import Engine, EngineConfig, Solution, Timeout, Unknown, Unsat
from .lia import show_formula
from .pcsp import encode_nontermination, encode_termination
from .t2 import ParseError, UndeclaredLocation, encode_compact, encode_system, parse_t2

EXIT_CODES = {"YES": 0, "NO": 1, "UNKNOWN": 2, "TIMEOUT": 3}
EX_USAGE, EX_DATAERR, EX_NOINPUT, EX_SOFTWARE = 64, 65, 66, 70


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="treerank", description="Decision-tree based termination and non-termination prover.")
    ap.add_argument("file", help="transition system in the T2 subset")
    ap.add_argument("--mode", choices=("term", "nonterm", "both"), default="both")
    ap.add_argument("--strategy", choices=("eager", "lazy"), default="eager")
    ap.add_argument("--qualifiers", choices=("intervals", "octagons"), default="intervals")
    ap.add_argument("--lex-dim", type=int, default=1, metavar="K",
                    help="extra lexicographic components per ranking-tree leaf (default 1)")
    ap.add_argument("--variant", choices=("strict", "degenerate"), default="degenerate")
    ap.add_argument("--timeout", type=float, default=300.0, metavar="SECS")
    ap.add_argument("--smt-solver", default=None, metavar="PATH")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iters", type=int, default=200)
    ap.add_argument("--no-compact", action="store_true",
                    help="keep every location and the program counter in the encoding")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


@dataclass
class Verdict:
    token: str
    witness: List[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.token]

    def render(self) -> str:
        return "\n".join([self.token] + self.witness)


def _yes(res: Solution) -> Verdict:
    lines = []
    for name in sorted(res.trees):
        lines.append(f"ranking {name}({', '.join(res.solution[name].params)}):")
        lines.append("  " + res.trees[name].show())
    for name, pred in sorted(res.solution.items()):
        if name not in res.trees:
            lines.append(f"invariant {name}({', '.join(pred.params)}): {show_formula(pred.body)}")
    return Verdict("YES", lines)


def _no_from_recurrent(res: Solution) -> Verdict:
    r = res.solution["R"]
    return Verdict("NO", [f"recurrent set R({', '.join(r.params)}): {show_formula(r.body)}"])


def _no_from_unsat(res: Unsat) -> Verdict:
    lines = ["no well-founded relation covers these reachable transitions:"]
    lines += ["  " + str(c) for c in res.witness]
    return Verdict("NO", lines)


def interpret(mode: str, res) -> Optional[Verdict]:
    """The definitive verdict carried by one engine result, if any.

    Termination: a solution proves YES; an unsatisfiable problem means no
    well-founded relation contains the reachable transitions, i.e. NO.
    Non-termination: a solution proves NO; failure is never definitive
    because the search encoding is incomplete.
    """
    if mode == "term":
        if isinstance(res, Solution):
            return _yes(res)
        if isinstance(res, Unsat):
            return _no_from_unsat(res)
    elif isinstance(res, Solution):
        return _no_from_recurrent(res)
    return None


def _fallback(results: Dict[str, object]) -> Verdict:
    reasons = []
    for mode, res in sorted(results.items()):
        if isinstance(res, Unknown):
            reasons.append(f"{mode}: {res.reason}")
        elif isinstance(res, Unsat):
            reasons.append(f"{mode}: no recurrent set of the searched shape")
        elif isinstance(res, Timeout):
            reasons.append(f"{mode}: budget exhausted after {res.iterations} iterations")
    token = "TIMEOUT" if any(isinstance(r, Timeout) for r in results.values()) else "UNKNOWN"
    return Verdict(token, reasons)


def run(text: str, args) -> Verdict:
    ts = parse_t2(text)
    enc = encode_system(ts) if getattr(args, "no_compact", False) else encode_compact(ts)
    problems = {}
    if args.mode in ("term", "both"):
        problems["term"] = encode_termination(enc.iota, enc.tau, enc.state)
    if args.mode in ("nonterm", "both"):
        problems["nonterm"] = encode_nontermination(enc.iota, enc.tau, enc.state)
    cfg = dict(k=args.lex_dim, strategy=args.strategy, qualifiers=args.qualifiers, variant=args.variant,
               timeout=args.timeout, max_iters=args.max_iters, seed=args.seed,
               smt_command=args.smt_solver)
    engines = {m: Engine(p, EngineConfig(**cfg)) for m, p in problems.items()}

    if len(engines) == 1:
        (mode, engine), = engines.items()
        res = engine.solve()
        return interpret(mode, res) or _fallback({mode: res})

    # race: the first definitive answer cancels the sibling
    results: Dict[str, object] = {}
    winner: List[Verdict] = []
    lock = threading.Lock()

    def work(mode: str):
        try:
            res = engines[mode].solve()
        except Exception as e:  # keep the sibling alive
            logging.getLogger(__name__).exception("%s engine failed", mode)
            res = Unknown(f"internal error: {e}")
        with lock:
            results[mode] = res
            v = interpret(mode, res)
            if v is not None and not winner:
                winner.append(v)
                for other, eng in engines.items():
                    if other != mode:
                        eng.cancel.set()

    threads = [threading.Thread(target=work, args=(m,), daemon=True) for m in engines]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return winner[0] if winner else _fallback(results)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    if args.lex_dim < 0 or args.timeout <= 0 or args.max_iters < 1:
        print("treerank: error: --lex-dim must be non-negative, --timeout and --max-iters positive",
              file=sys.stderr)
        return EX_USAGE
    if args.smt_solver and shutil.which(args.smt_solver) is None:
        print(f"treerank: error: solver {args.smt_solver!r} is not an executable", file=sys.stderr)
        return EX_USAGE
    try:
        with open(args.file) as fh:
            text = fh.read()
    except OSError as e:
        print(f"treerank: cannot read {args.file}: {e.strerror}", file=sys.stderr)
        return EX_NOINPUT
    try:
        verdict = run(text, args)
    except (ParseError, UndeclaredLocation) as e:
        print(f"{args.file}:{e}", file=sys.stderr)
        return EX_DATAERR
    except FileNotFoundError as e:
        print(f"treerank: solver not found: {e}", file=sys.stderr)
        return EX_USAGE
    except Exception as e:
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"treerank: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EX_SOFTWARE
    print(verdict.render())
    return verdict.exit_code


if __name__ == "__main__":
    sys.exit(main())
