"""Input checks shared by the estimator, codebook builder and CLI."""

from __future__ import annotations

import os

import numpy as np

from .patterns import PLANE_CUT, AngularGrid, GridError, PatternError, PatternSet, make_cut_grid

THREADS_ENV = "MODEFORGE_THREADS"


def check_n_jobs(n_jobs=None) -> int:
    """Resolve a worker count, capped by ``$MODEFORGE_THREADS`` when set."""
    cap = os.environ.get(THREADS_ENV)
    if n_jobs is None:
        n_jobs = os.cpu_count() or 1
    n_jobs = int(n_jobs)
    if n_jobs < 1:
        raise ValueError(f"n_jobs must be >= 1, got {n_jobs}")
    if cap:
        try:
            cap = int(cap)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
        n_jobs = min(n_jobs, max(cap, 1))
    return n_jobs


def check_pattern_set(pset, require_normalized=True) -> PatternSet:
    if not isinstance(pset, PatternSet):
        raise TypeError(f"expected a PatternSet, got {type(pset).__name__}")
    if require_normalized and not pset.normalized:
        raise PatternError("pattern set must be normalized")
    return pset


def check_targets(targets) -> AngularGrid:
    """Coerce targets to a plane_cut grid.

    Accepts a plane_cut :class:`AngularGrid`, an integer count of
    equidistant cut angles, or a 1-D array of signed cut angles in degrees.
    """
    if isinstance(targets, AngularGrid):
        if targets.kind != PLANE_CUT:
            raise GridError("targets must be a plane_cut grid")
        return targets
    if isinstance(targets, (int, np.integer)):
        return make_cut_grid(int(targets))
    deg = np.asarray(targets, dtype=float)
    if deg.ndim != 1 or deg.size == 0:
        raise ValueError("targets must be a non-empty 1-D sequence of angles in degrees")
    if not np.all(np.isfinite(deg)) or np.any(np.abs(deg) > 90):
        raise ValueError("target angles must be finite and within [-90, 90] degrees")
    alpha = np.radians(deg)
    theta = np.abs(alpha)
    phi = np.where(alpha >= 0, np.pi / 2, 3 * np.pi / 2)
    return AngularGrid(theta, phi, np.zeros(deg.size), PLANE_CUT, cut_angles=alpha)
