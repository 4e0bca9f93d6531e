"""Vladimirov-Pearson operator on truncated ultrametric Cantor sets.

Trees, measures and zeta sums, ultrametric wavelets, the operator and its
closed-form spectrum, the heat semigroup, Green function and jump process.
"""

__version__ = "0.1.0"

from .tree import (Explicit, ExplicitDiameters, LevelRegular, PAdic, RandomBounded, TreeSpec,
                   TreeSpecError, TruncatedTree, Vertex, build_tree, distance, join,
                   load_explicit)
from .measure_zeta import (check_factorisation, connes_measure, connes_measure_limit_check,
                           estimate_abscissa, kappa, sphere_measure, zeta_partial)
from .wavelets import WaveletBasis, enumerate_basis, evaluate_wavelet, inner, norm
from .operator import (OperatorParams, apply, assemble_matrix, boundedness_report,
                       eigenvalue_closed_form, kernel_value, spectrum, spectrum_records)
from .heat import (green_function, heat_kernel, markov_checks, semigroup_apply,
                   sobolev_norm, spectral_decomposition, transition_matrix)
from .process import build_rates, sample_path, sample_paths, tv_distance

__all__ = [name for name in dir() if not name.startswith("_")]
