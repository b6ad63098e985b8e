"""Lattice-equivalence maps between the coordinate and canonical embeddings of
maximal real cyclotomic fields, with certified condition-number bounds and an
audit of root-based PLWE attack conditions."""

__version__ = "0.1.0"

from .cyclotomic import Case, FieldSpec, InvalidConductor, cyclotomic_poly, real_cyclotomic_poly, special_values
from .equivalence import EquivalenceMap, backward_map, column_ops, extract_Rm, forward_map
from .linalg import BigMatrix
from .polynomials import IntPoly, compose, eval_int, eval_mod, eval_real, u_poly

__all__ = [
    "BigMatrix",
    "Case",
    "EquivalenceMap",
    "FieldSpec",
    "IntPoly",
    "InvalidConductor",
    "backward_map",
    "column_ops",
    "compose",
    "cyclotomic_poly",
    "eval_int",
    "eval_mod",
    "eval_real",
    "extract_Rm",
    "forward_map",
    "real_cyclotomic_poly",
    "special_values",
    "u_poly",
]
