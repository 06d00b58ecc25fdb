"""Beam steering with a single multi-mode antenna by weighting its ports."""

from .codebook import (Codebook, CodebookEntry, UsageStats, build_codebook, sweep_metrics,
                       usage_stats)
from .combiners import (CombinerSpec, candidate_matrix, enumerate_candidates, mode_selection,
                        optimize_digital_gain, optimize_search)
from .estimator import ModeCombiner
from .metrics import (CoefficientVector, PatternMatrix, combined_gain, combined_pattern_peak,
                      eirp, element_factor, gef, pattern_matrix, port_gain)
from .patterns import (Z0, AngularGrid, PatternSet, cut_direction, load_patterns, make_cut_grid,
                       make_grid, normalize, orthonormalize, save_patterns,
                       synthesize_prototype_patterns)

__version__ = "0.1.0"
