"""scikit-learn style front end.

:class:`ModeCombiner` is fitted to a pattern set and then maps target
angles (signed y-z-plane angles in degrees) to port weights::

    mc = ModeCombiner(scheme="hybrid", criterion="gef").fit(patterns)
    weights = mc.predict([-30, 0, 30])       # (3, M) complex
    metrics = mc.transform([-30, 0, 30])     # (3, 3): gain, ef, gef (linear)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_pattern_set, check_targets
from .codebook import Codebook, build_codebook
from .combiners import DEFAULT_AMP_LEVELS, CombinerSpec, SearchContext


class ModeCombiner(BaseEstimator):
    """Per-direction port weighting for a multi-mode antenna.

    Parameters
    ----------
    scheme : {"digital", "hybrid", "analog", "selection"}
        Hardware regime that constrains the weights.
    criterion : {"gain", "ef", "gef"}
        Quantity maximized toward each target.
    phase_levels : int or None
        Number of uniformly spaced phases; None picks 16 for ``gain`` and 8
        for ``ef``/``gef``.
    amp_levels : tuple of float
        Amplitude levels for the digital search, containing 0 and 1.
    fix_global_phase : bool
        Pin the first active port's phase to zero during the search.
    closed_form : bool
        Use the closed-form optimum for digital weighting under the gain
        criterion instead of searching.
    n_jobs : int or None
        Worker threads; capped by ``$MODEFORGE_THREADS``.
    """

    def __init__(self, scheme="digital", criterion="gain", phase_levels=None,
                 amp_levels=DEFAULT_AMP_LEVELS, fix_global_phase=True, closed_form=True,
                 n_jobs=None):
        self.scheme = scheme
        self.criterion = criterion
        self.phase_levels = phase_levels
        self.amp_levels = amp_levels
        self.fix_global_phase = fix_global_phase
        self.closed_form = closed_form
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        """Prepare the search over pattern set ``X``; ``y`` is ignored."""
        pset = check_pattern_set(X)
        self.spec_ = CombinerSpec(self.scheme, self.criterion, self.phase_levels,
                                  tuple(self.amp_levels), self.fix_global_phase)
        self.patterns_ = pset
        self.n_ports_ = pset.num_ports
        self.fingerprint_ = pset.fingerprint
        uses_closed_form = (self.closed_form and self.spec_.scheme == "digital"
                            and self.spec_.criterion == "gain")
        self.context_ = None if uses_closed_form else SearchContext(pset, self.spec_, self.n_jobs)
        self.n_candidates_ = 0 if self.context_ is None else len(self.context_)
        return self

    def to_codebook(self, X) -> Codebook:
        check_is_fitted(self, "spec_")
        return build_codebook(self.patterns_, check_targets(X), self.spec_, self.n_jobs,
                              context=self.context_, closed_form=self.closed_form)

    def predict(self, X) -> np.ndarray:
        """Complex weights, shape ``(n_targets, n_ports)``."""
        return self.to_codebook(X).weights

    def transform(self, X) -> np.ndarray:
        """Achieved ``(gain, ef, gef)`` per target, linear units."""
        cb = self.to_codebook(X)
        return np.column_stack([cb.gains, cb.efs, cb.gefs])

    def fit_transform(self, X, y=None, targets=37):
        return self.fit(X).transform(targets)

    def score(self, X, y=None) -> float:
        """Mean achieved value of the optimized criterion over targets ``X``."""
        return float(np.mean(self.to_codebook(X).column(self.spec_.criterion)))
