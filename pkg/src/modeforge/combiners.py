"""Optimal port weights per target direction.

Digital weighting under the gain criterion has a closed form: the best unit
vector ``c`` maximizing ``|F c|^2`` is the dominant right singular vector of
the 2 x M pattern matrix, found from the 2 x 2 Hermitian matrix ``F F^H``.
Every other scheme/criterion pair is solved exactly over a quantized
candidate set (phases ``2 pi k / P``, amplitudes from a finite level set).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from ._validation import check_n_jobs
from .metrics import (SCHEMES, CoefficientVector, PatternMatrix, _require_normalized,
                      pattern_matrix, power)
from .patterns import FULL_SPHERE, GridError, PatternError, PatternSet

CRITERIA = ("gain", "ef", "gef")
DEFAULT_AMP_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_PHASE_LEVELS = {"gain": 16, "ef": 8, "gef": 8}

# relative eigen-gap below which the 2x2 solve is treated as degenerate
DEGENERATE_GAP = 1e-12
# candidates per block when evaluating full patterns
CHUNK = 128


@dataclass(frozen=True)
class CombinerSpec:
    """Search space of one codebook design.

    ``phase_levels=None`` resolves to 16 for the gain criterion and 8 for
    ``ef``/``gef``, whose candidates each need a full-pattern pass.
    """

    scheme: str = "digital"
    criterion: str = "gain"
    phase_levels: int | None = None
    amp_levels: tuple = DEFAULT_AMP_LEVELS
    fix_global_phase: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}; expected one of {CRITERIA}")
        p = self.phase_levels
        if p is None:
            p = DEFAULT_PHASE_LEVELS[self.criterion]
        if int(p) != p or p < 2:
            raise ValueError(f"phase_levels must be an integer >= 2, got {p!r}")
        object.__setattr__(self, "phase_levels", int(p))
        amps = tuple(float(a) for a in self.amp_levels)
        if not amps:
            raise ValueError("amplitude level set is empty")
        if any(b <= a for a, b in zip(amps, amps[1:])):
            raise ValueError(f"amplitude levels must be strictly increasing, got {amps}")
        if amps[0] < 0 or amps[-1] > 1:
            raise ValueError(f"amplitude levels must lie in [0, 1], got {amps}")
        if self.scheme == "digital" and (amps[0] != 0 or amps[-1] != 1):
            raise ValueError("digital amplitude levels must contain both 0 and 1")
        object.__setattr__(self, "amp_levels", amps)
        object.__setattr__(self, "fix_global_phase", bool(self.fix_global_phase))

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "criterion": self.criterion,
            "phase_levels": self.phase_levels,
            "amp_levels": list(self.amp_levels),
            "fix_global_phase": self.fix_global_phase,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["scheme"], obj["criterion"], obj.get("phase_levels"),
                   tuple(obj.get("amp_levels", DEFAULT_AMP_LEVELS)),
                   obj.get("fix_global_phase", True))


# --- closed form -----------------------------------------------------------

def _dominant_eigvec_2x2(a, b, d):
    """Dominant eigenpair of the Hermitian ``[[a, b], [conj(b), d]]``."""
    half_gap = np.sqrt(((a - d) / 2) ** 2 + abs(b) ** 2)
    lam = (a + d) / 2 + half_gap
    if half_gap <= DEGENERATE_GAP * max(lam, np.finfo(float).tiny):
        return lam, np.array([1.0, 0.0], complex)
    # pick the better-conditioned of the two null-space forms
    if a >= d:
        u = np.array([lam - d, np.conj(b)], complex)
    else:
        u = np.array([b, lam - a], complex)
    return lam, u / np.linalg.norm(u)


def _phase_fix(c):
    """Rotate ``c`` so its first nonzero entry is real positive."""
    nz = np.flatnonzero(np.abs(c) > 1e-15 * np.abs(c).max())
    ph = c[nz[0]] / abs(c[nz[0]])
    c = c / ph
    c[nz[0]] = abs(c[nz[0]])
    return c


def optimize_digital_gain(f: PatternMatrix):
    """Closed-form digital-gain optimum for one pattern matrix.

    Returns ``(CoefficientVector, gain)`` where gain is
    ``f.gain_scale * |F c|^2``, equal to ``gain_scale`` times the dominant
    eigenvalue of ``F F^H``.
    """
    if not isinstance(f, PatternMatrix):
        f = PatternMatrix(f)
    F = f.entries
    if not np.any(F):
        raise PatternError("all-zero pattern matrix: no radiation toward the target")
    a = float(np.sum(power(F[0])))
    d = float(np.sum(power(F[1])))
    b = complex(np.vdot(F[1], F[0]))  # (F F^H)[0, 1] = sum F0 * conj(F1)
    lam, u = _dominant_eigvec_2x2(a, b, d)
    c = F.conj().T @ u
    c = _phase_fix(c / np.linalg.norm(c))
    c = c / np.sqrt(np.sum(power(c)))
    return CoefficientVector(c, "digital"), f.gain_scale * float(np.sum(power(F @ c)))


# --- candidate families ----------------------------------------------------

@lru_cache(maxsize=64)
def _phase_table(p, n):
    """All ``n``-tuples of phase indices in lexicographic order, as phasors."""
    if n == 0:
        return np.ones((1, 0), complex)
    idx = np.array(list(itertools.product(range(p), repeat=n)), dtype=float)
    table = np.exp(2j * np.pi * idx / p)
    table[idx == 0] = 1.0
    table.setflags(write=False)
    return table


def _amplitude_vectors(spec, m):
    """Unit-norm amplitude patterns in enumeration order, scale duplicates removed."""
    if spec.scheme == "selection":
        return np.eye(m)
    if spec.scheme == "analog":
        return np.full((1, m), 1 / np.sqrt(m))
    if spec.scheme == "hybrid":
        out = []
        for mask in range(1, 2 ** m):
            a = np.array([(mask >> i) & 1 for i in range(m)], dtype=float)
            out.append(a / np.sqrt(a.sum()))
        return np.array(out)
    seen = set()
    out = []
    for a in itertools.product(spec.amp_levels, repeat=m):
        a = np.array(a)
        norm = np.sqrt(np.sum(a * a))
        if norm == 0:
            continue
        a = a / norm
        key = tuple(np.round(a, 12))
        if key not in seen:
            seen.add(key)
            out.append(a)
    return np.array(out)


def candidate_matrix(spec: CombinerSpec, m) -> np.ndarray:
    """All candidates of ``spec`` for ``m`` ports as a ``(K, m)`` array.

    Rows follow the enumeration order used for tie-breaking: amplitude
    patterns first (ascending activation mask for hybrid, lexicographic
    level order for digital), then phase indices in ascending order.
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"need at least one port, got {m}")
    amps = _amplitude_vectors(spec, m)
    if spec.scheme == "selection":
        return amps.astype(complex)
    blocks = []
    for a in amps:
        active = np.flatnonzero(a)
        free = active[1:] if spec.fix_global_phase else active
        phasors = _phase_table(spec.phase_levels, free.size)
        block = np.zeros((phasors.shape[0], m), complex)
        block[:, active] = a[active]
        block[:, free] *= phasors
        blocks.append(block)
    if not blocks:
        raise ValueError("empty candidate set")
    return np.concatenate(blocks)


def enumerate_candidates(spec: CombinerSpec, m) -> Iterator[CoefficientVector]:
    """Yield every candidate of ``spec`` as a :class:`CoefficientVector`."""
    for row in candidate_matrix(spec, m):
        yield CoefficientVector(row, spec.scheme)


def candidate_count(spec: CombinerSpec, m) -> int:
    m = int(m)
    if spec.scheme == "selection":
        return m
    amps = _amplitude_vectors(spec, m)
    nnz = (amps > 0).sum(axis=1) - (1 if spec.fix_global_phase else 0)
    return int(np.sum(spec.phase_levels ** nnz))


# --- exhaustive search -----------------------------------------------------
#
# The gain of weights c toward sample k is the Hermitian form c^T S_k conj(c)
# with S_k[i, j] = F_phi,i conj(F_phi,j) + F_theta,i conj(F_theta,j). Writing
# it as a real dot product between per-candidate features and per-sample
# coefficients turns a whole candidate-by-sample gain table into one real
# matrix product.

def quadratic_features(cands: np.ndarray) -> np.ndarray:
    """Real features of weight rows; ``features @ forms`` gives ``|F c|^2``."""
    cands = np.atleast_2d(cands)
    iu, ju = np.triu_indices(cands.shape[1], k=1)
    cross = cands[:, iu] * np.conj(cands[:, ju])
    return np.concatenate([power(cands), 2 * cross.real, -2 * cross.imag], axis=1)


def sample_forms(pset: PatternSet):
    """Per-sample coefficients of the gain form and the per-sample digital optimum.

    Returns ``(forms, lam)``: ``forms`` has shape ``(M*M, size)`` matching
    :func:`quadratic_features`; ``lam`` is the largest eigenvalue of
    ``F F^H`` at each sample, an upper bound on ``|F c|^2`` for unit ``c``.
    Cached on the (immutable) pattern set.
    """
    cached = pset._cache.get("forms")
    if cached is not None:
        return cached
    fp, ft = pset.f_phi, pset.f_theta
    iu, ju = np.triu_indices(pset.num_ports, k=1)
    s = fp[iu] * np.conj(fp[ju]) + ft[iu] * np.conj(ft[ju])
    forms = np.concatenate([power(fp) + power(ft), s.real, s.imag], axis=0)
    a = np.sum(power(fp), axis=0)
    d = np.sum(power(ft), axis=0)
    b = np.sum(fp * np.conj(ft), axis=0)
    lam = (a + d) / 2 + np.sqrt(((a - d) / 2) ** 2 + power(b))
    forms.setflags(write=False)
    lam.setflags(write=False)
    pset._cache["forms"] = (forms, lam)
    return forms, lam


def gain_at(pset: PatternSet, c, k) -> float:
    """Gain of weights ``c`` toward sample ``k``, via the same form as the search."""
    forms, _ = sample_forms(pset)
    w = c.weights if isinstance(c, CoefficientVector) else np.asarray(c, complex)
    return pset.gain_scale * float((quadratic_features(w) @ forms[:, k])[0])


# samples seeding the per-candidate lower bound on the peak
SEED_SAMPLES = 2048
# slack on the pruning bound, far above the rounding of either side
PRUNE_SLACK = 1e-9


def pattern_peaks(pset: PatternSet, cands: np.ndarray, n_jobs=None) -> np.ndarray:
    """Peak gain over the whole grid of every candidate row of ``cands``.

    Exact: a sample is skipped only when its digital optimum ``lam`` is
    below a gain the candidate already reaches elsewhere, so it cannot hold
    the peak.
    """
    if pset.grid.kind != FULL_SPHERE:
        raise GridError("element factor criteria need a full_sphere pattern set "
                        "(the peak must be global over the sphere)")
    cached = pset._cache.get("sorted_forms")
    if cached is None:
        forms, lam = sample_forms(pset)
        order = np.argsort(-lam, kind="stable")
        cached = (np.ascontiguousarray(forms[:, order]), -lam[order])
        pset._cache["sorted_forms"] = cached
    forms, neg_lam = cached
    feats = quadratic_features(cands)
    n0 = min(SEED_SAMPLES, forms.shape[1])
    lower = (feats @ forms[:, :n0]).max(axis=1)
    by_bound = np.argsort(-lower, kind="stable")
    peaks = np.empty(feats.shape[0])

    def run(start):
        rows = by_bound[start:start + CHUNK]
        thr = lower[rows].min()
        keep = forms.shape[1] if not thr > 0 else int(
            np.searchsorted(neg_lam, -thr / (1 + PRUNE_SLACK), side="right"))
        keep = max(keep, n0)
        peaks[rows] = (feats[rows] @ forms[:, :keep]).max(axis=1)

    starts = range(0, feats.shape[0], CHUNK)
    n_jobs = check_n_jobs(n_jobs)
    if n_jobs > 1 and feats.shape[0] > CHUNK:
        with ThreadPoolExecutor(n_jobs) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return pset.gain_scale * peaks


def _criterion(criterion, gain, peak):
    if criterion == "gain":
        return gain
    # the target is a grid sample, so the grid peak is at least its gain;
    # this absorbs last-bit differences between summation orders
    peak = np.maximum(peak, gain)
    with np.errstate(divide="ignore", invalid="ignore"):
        ef = np.where(peak > 0, gain / peak, 0.0)
    if criterion == "ef":
        return ef
    return gain * ef


class SearchContext:
    """Candidates of one spec on one pattern set, with their pattern peaks.

    Peaks do not depend on the target, so they are computed once and shared
    by every target of a codebook.
    """

    def __init__(self, pset: PatternSet, spec: CombinerSpec, n_jobs=None):
        _require_normalized(pset)
        if spec.criterion != "gain" and pset.grid.kind != FULL_SPHERE:
            raise GridError(
                f"criterion {spec.criterion!r} needs a full_sphere pattern set; "
                f"this set only covers a {pset.grid.kind}"
            )
        self.pset = pset
        self.spec = spec
        self.candidates = candidate_matrix(spec, pset.num_ports)
        if self.candidates.shape[0] == 0:
            raise ValueError("empty candidate set")
        self.features = quadratic_features(self.candidates)
        self.forms, _ = sample_forms(pset)
        self.peaks = None
        if spec.criterion != "gain":
            self.peaks = pattern_peaks(pset, self.candidates, n_jobs)

    def __len__(self):
        return self.candidates.shape[0]

    def gains_at(self, k) -> np.ndarray:
        """Gain of every candidate toward grid sample ``k``."""
        return self.pset.gain_scale * (self.features @ self.forms[:, k])

    def best_at(self, k):
        """``(row, criterion value, gain)`` of the best candidate at sample ``k``."""
        g = self.gains_at(k)
        values = _criterion(self.spec.criterion, g, self.peaks)
        i = int(np.argmax(values))
        return i, float(values[i]), float(g[i])

    def vector(self, i) -> CoefficientVector:
        return CoefficientVector(self.candidates[i], self.spec.scheme)


def optimize_search(pset: PatternSet, target, spec: CombinerSpec, n_jobs=None):
    """Exact maximizer of ``spec.criterion`` toward ``target`` over the candidates.

    Returns ``(CoefficientVector, criterion value)``; ties go to the earliest
    candidate in enumeration order.
    """
    ctx = SearchContext(pset, spec, n_jobs)
    i, value, _ = ctx.best_at(pset.grid.index_of(*target))
    return ctx.vector(i), value


def mode_selection(pset: PatternSet, target) -> CoefficientVector:
    """One-hot weights on the port with the largest gain toward ``target``."""
    _require_normalized(pset)
    k = pset.grid.index_of(*target)
    g = pset.gain_scale * (power(pset.f_phi[:, k]) + power(pset.f_theta[:, k]))
    if not np.any(g > 0):
        raise PatternError("every port has a null toward the target")
    return CoefficientVector.one_hot(int(np.argmax(g)), pset.num_ports)


def optimize_digital_gain_at(pset: PatternSet, target):
    """Closed-form digital-gain optimum toward a grid direction."""
    _require_normalized(pset)
    return optimize_digital_gain(pattern_matrix(pset, target))
