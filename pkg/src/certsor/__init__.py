"""Certified step-asynchronous SOR for nonsingular M-matrix systems.

Solves (s*I - A) x = b for nonnegative A with s above the spectral radius,
and emits machine-checkable bounds on the sup norm of the absolute error.
The bounds come from a constructively computed positive weight vector w with
A w <= sigma w, which makes every update sweep contract the weighted sup
norm by an explicitly computable factor regardless of update order or
one-step-stale reads.
"""

from .analysis import DegenerateScoresError, kendall_tau, round_scores
from .norms import (QuantizationRangeError, QuantizedWeights, SuitabilityCheck,
                    WeightVector, check_suitable, normalize_weights, quantize,
                    wnorm, wnorm_quantized)
from .rankings import (DanglingOperator, generic_pagerank, katz,
                       pagerank_l1_bound, pseudorank, strong_pagerank)
from .sor import (ExplicitPreorder, Jacobi, ParallelBlocks, RandomPreorder,
                  Sequential, SolveCertificate, SorConfig, SuitabilityError,
                  TornReadError, certified_sup_bound, contraction_factor,
                  omega_max, parallel_step, realize_plan, reconstruct_plan,
                  solve, sor_step, validate_plan)
from .sparse import (CacheFormatError, EdgeListFormatError, GraphIngestSummary,
                     SparseMatrix, from_coo, ingest_summary, load_edge_list,
                     matvec, read_cache, row_normalize, row_sums, transpose,
                     write_cache)
from .suitable import (SuitableResult, SuitableStatus, collatz_bounds,
                       compute_suitable, spectral_radius_bracket)

__version__ = "0.1.0"
