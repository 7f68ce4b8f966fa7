"""Satisfiability for graded modal logic, with and without inverse relations."""
from .formula import ParseError, modernize, neg_nnf, parse, to_nnf, to_text
from .kripke import KripkeStructure, check
from .verdict import Limits, ResourceLimitExceeded, Stats, Verdict

__all__ = [
    "KripkeStructure",
    "Limits",
    "ParseError",
    "ResourceLimitExceeded",
    "Stats",
    "Verdict",
    "check",
    "modernize",
    "neg_nnf",
    "parse",
    "to_nnf",
    "to_text",
]
