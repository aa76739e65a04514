"""tteig: rank-adaptive block tensor-train eigensolver.

Computes a batch of extreme eigenpairs of symmetric operators given in
tensor-train form, by alternating one-site optimization of a shared block
representation. Ships dense brute-force oracles for desk-scale validation
and a CLI for reproducible experiments.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend, HAVE_COMPILED as has_compiled_kernels
from .block import (BlockTT, block_move, block_random, block_split,
                    extract_state, slice_gram)
from .core import (Environment, LocalOperator, TTMatrix, TTVector, dot,
                   env_extend_left, env_extend_right, local_matvec, matvec,
                   norm, shift_center, tt_random, tt_round, tt_round_operator,
                   tt_to_dense)
from .errors import (ConfigurationError, InvalidArgument, LocalDimensionError,
                     SizeLimitExceeded, SolverError)
from .hamiltonians import (HamiltonianSpec, heisenberg_tt, henon_heiles_tt,
                           hermite_dvr_laplace, hermite_mesh,
                           laplace_eigenbasis, laplace_spectrum, laplace_tt)
from .oracle import (DenseSpectrum, dense_eig, densify_operator, frame_matrix,
                     group_levels, subspace_angle)
from .solver import (SolverConfig, SpectrumResult, SweepStats, deflation_solve,
                     eigb, local_block_eig, rayleigh_trace)

__all__ = [
    "__version__", "kernel_backend", "has_compiled_kernels",
    "TTVector", "TTMatrix", "Environment", "LocalOperator",
    "tt_random", "tt_to_dense", "dot", "norm", "shift_center", "tt_round",
    "tt_round_operator", "matvec", "env_extend_left", "env_extend_right",
    "local_matvec",
    "BlockTT", "block_random", "block_split", "block_move", "extract_state",
    "slice_gram",
    "SolverConfig", "SpectrumResult", "SweepStats", "eigb", "deflation_solve",
    "local_block_eig", "rayleigh_trace",
    "HamiltonianSpec", "laplace_tt", "laplace_spectrum", "laplace_eigenbasis",
    "hermite_mesh", "hermite_dvr_laplace", "henon_heiles_tt", "heisenberg_tt",
    "DenseSpectrum", "densify_operator", "dense_eig", "subspace_angle",
    "frame_matrix", "group_levels",
    "InvalidArgument", "SizeLimitExceeded", "ConfigurationError",
    "LocalDimensionError", "SolverError",
]
