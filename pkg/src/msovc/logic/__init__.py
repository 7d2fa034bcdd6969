"""CMSO syntax, parser and brute-force semantics."""

from .parser import parse_formula, to_text
from .semantics import Evaluator, check, define_set_system, member_sets, vertex_elements
from .syntax import (FALSE, TRUE, And, Const, Eq, Exists, ExistsS, Forall, ForallS, Formula, Implies,
                     In, Mod, Not, Or, PartitionedFormula, Reach, Rel, canonical_form, conj,
                     dialect_of, disj, exists, expand_macros, forall, iff, is_fo, is_so, neq,
                     rename_free, validate)

__all__ = [
    "FALSE", "TRUE", "And", "Const", "Eq", "Evaluator", "Exists", "ExistsS", "Forall", "ForallS",
    "Formula", "Implies", "In", "Mod", "Not", "Or", "PartitionedFormula", "Reach", "Rel",
    "canonical_form", "check", "conj", "define_set_system", "dialect_of", "disj", "exists",
    "expand_macros", "forall", "iff", "is_fo", "is_so", "member_sets", "neq", "parse_formula",
    "rename_free", "to_text", "validate", "vertex_elements",
]
