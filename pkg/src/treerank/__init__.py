"""Termination and non-termination proving with decision-tree CEGIS.

The package solves predicate constraint satisfaction problems with
well-foundedness constraints: ranking functions are learnt as decision
trees with affine leaves, invariants as boolean decision trees over
halfspace qualifiers, and an SMT solver validates candidates.
"""
from .cegis import EngineConfig, Solution, Timeout, Unknown, Unsat, solve, validate
from .invariant import InvariantClassifier, synth_invariant
from .pcsp import Clause, ClosedPredicate, Pcsp, encode_nontermination, encode_termination
from .ranking import ExplicitCycle, RankingTreeSynthesizer, WfSolution, WfVariant, synth_wf
from .t2 import compact_system, encode_compact, encode_system, parse_t2, print_t2

__version__ = "0.1.0"

__all__ = [
    "Clause", "ClosedPredicate", "EngineConfig", "ExplicitCycle", "InvariantClassifier", "Pcsp",
    "RankingTreeSynthesizer", "Solution", "Timeout", "Unknown", "Unsat", "WfSolution", "WfVariant",
    "compact_system", "encode_compact", "encode_nontermination", "encode_termination", "encode_system", "parse_t2", "print_t2", "solve",
    "synth_invariant", "synth_wf", "validate",
]
