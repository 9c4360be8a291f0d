"""Layer gadgets: each reduces one layer's semantics to sum-check instances."""

from .common import CommittedVector
from .linear import LinearClaim, LinearProof, linear_forward, prove_linear, rescale, verify_linear
from .lookup import LookupClaim, LookupProof, multiplicities, prove_lookup, rational_identity, verify_lookup
from .matmul import MatMulClaim, MatMulProof, matmul, pad_matrix, prove_matmul, verify_matmul
from .relu import ReluClaim, ReluProof, decompose, prove_relu, relu, verify_relu
from .tables import LookupTable, build_function_table, range_table, table_from_ident

__all__ = [
    "CommittedVector",
    "LinearClaim",
    "LinearProof",
    "LookupClaim",
    "LookupProof",
    "LookupTable",
    "MatMulClaim",
    "MatMulProof",
    "ReluClaim",
    "ReluProof",
    "build_function_table",
    "decompose",
    "linear_forward",
    "matmul",
    "multiplicities",
    "pad_matrix",
    "prove_linear",
    "prove_lookup",
    "prove_matmul",
    "prove_relu",
    "range_table",
    "rational_identity",
    "relu",
    "rescale",
    "table_from_ident",
    "verify_linear",
    "verify_lookup",
    "verify_matmul",
    "verify_relu",
]
