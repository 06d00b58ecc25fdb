"""Codebooks over a y-z-plane sweep, metric tables and port-usage statistics."""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ._validation import check_n_jobs, check_pattern_set, check_targets
from .combiners import (CombinerSpec, SearchContext, gain_at, optimize_digital_gain,
                        pattern_peaks)
from .metrics import CoefficientVector, PatternMatrix, power, to_db
from .patterns import FULL_SPHERE, OffGridError, PatternSet

DEFAULT_THRESHOLD = 1e-3
METRICS = ("gain_dbi", "ef", "gef_dbi")


class CodebookError(ValueError):
    """Codebooks are malformed or cannot be compared."""


@dataclass(frozen=True, eq=False)
class CodebookEntry:
    """Weights for one target and the linear metrics they achieve.

    ``ef`` and ``gef`` are NaN when the codebook was built from a cut-only
    pattern set, where the global peak is unknown.
    """

    target: float
    weights: CoefficientVector
    gain: float
    ef: float
    gef: float

    @property
    def target_deg(self) -> float:
        return float(np.degrees(self.target))


@dataclass(frozen=True, eq=False)
class Codebook:
    entries: tuple
    spec: CombinerSpec
    pattern_fingerprint: str

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise CodebookError("a codebook needs at least one entry")
        t = self.targets
        if np.any(np.diff(t) <= 0):
            raise CodebookError("codebook targets must be strictly increasing")

    def __len__(self):
        return len(self.entries)

    @property
    def num_ports(self) -> int:
        return len(self.entries[0].weights)

    @property
    def targets(self) -> np.ndarray:
        return np.array([e.target for e in self.entries])

    @property
    def targets_deg(self) -> np.ndarray:
        return np.degrees(self.targets)

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weights.weights for e in self.entries])

    @property
    def gains(self) -> np.ndarray:
        return np.array([e.gain for e in self.entries])

    @property
    def efs(self) -> np.ndarray:
        return np.array([e.ef for e in self.entries])

    @property
    def gefs(self) -> np.ndarray:
        return np.array([e.gef for e in self.entries])

    def column(self, criterion) -> np.ndarray:
        """Linear values of ``gain``, ``ef`` or ``gef`` along the targets."""
        return {"gain": self.gains, "ef": self.efs, "gef": self.gefs}[criterion]

    def to_dict(self) -> dict:
        def num(x):
            return float(x) if np.isfinite(x) else None

        return {
            "spec": self.spec.to_dict(),
            "pattern_fingerprint": self.pattern_fingerprint,
            "entries": [
                {
                    "target_deg": e.target_deg,
                    "weights_re": e.weights.weights.real.tolist(),
                    "weights_im": e.weights.weights.imag.tolist(),
                    "gain_dbi": num(to_db(e.gain)),
                    "ef": num(e.ef),
                    "gef_dbi": num(to_db(e.gef)),
                    # linear copies keep load(save(cb)) exact
                    "target_rad": e.target,
                    "gain": e.gain,
                    "gef": num(e.gef),
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, obj) -> "Codebook":
        try:
            spec = CombinerSpec.from_dict(obj["spec"])
            fingerprint = str(obj["pattern_fingerprint"])
            raw = obj["entries"]
        except (KeyError, TypeError) as exc:
            raise CodebookError(f"malformed codebook: missing {exc}") from exc
        entries = []
        for i, e in enumerate(raw):
            try:
                w = np.asarray(e["weights_re"], float) + 1j * np.asarray(e["weights_im"], float)
                target = e.get("target_rad")
                target = float(np.radians(e["target_deg"]) if target is None else target)
                gain = e.get("gain")
                gain = float(10 ** (e["gain_dbi"] / 10) if gain is None else gain)
                ef = np.nan if e.get("ef") is None else float(e["ef"])
                gef = e.get("gef")
                if gef is None:
                    gef = np.nan if e.get("gef_dbi") is None else 10 ** (e["gef_dbi"] / 10)
                entries.append(CodebookEntry(target, CoefficientVector(w, spec.scheme),
                                             gain, ef, float(gef)))
            except (KeyError, TypeError, ValueError) as exc:
                raise CodebookError(f"malformed codebook entry {i}: {exc}") from exc
        return cls(tuple(entries), spec, fingerprint)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Codebook":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise CodebookError(f"malformed codebook file {path}: {exc}") from exc
        return cls.from_dict(obj)


def _entry(pset, k, target, c: CoefficientVector, gain=None, peak=None):
    # gain and peak go through one formula so that ef <= 1 holds exactly
    if gain is None:
        gain = gain_at(pset, c, k)
    if peak is None:
        if pset.grid.kind == FULL_SPHERE:
            peak = float(pattern_peaks(pset, c.weights[None, :], n_jobs=1)[0])
        else:
            peak = np.nan
    if not np.isnan(peak):
        peak = max(peak, gain)
    ef = gain / peak if peak > 0 else (np.nan if np.isnan(peak) else 0.0)
    return CodebookEntry(float(target), c, float(gain), float(ef), float(gain * ef))


def build_codebook(pset: PatternSet, targets, spec: CombinerSpec, n_jobs=None,
                   context: SearchContext | None = None, closed_form=True) -> Codebook:
    """One entry per target angle of a y-z-plane cut.

    Digital weighting under the gain criterion uses the closed form unless
    ``closed_form=False``; every other combination runs the exhaustive
    search. ``targets`` may be a plane_cut grid, a count of equidistant
    angles, or angles in degrees.
    """
    check_pattern_set(pset)
    targets = check_targets(targets)
    idx = []
    for a in targets.cut_angles:
        try:
            idx.append(pset.grid.index_of_cut(a))
        except OffGridError as exc:
            raise OffGridError(f"target {np.degrees(a):.6g} deg: {exc}") from None

    closed_form = closed_form and spec.scheme == "digital" and spec.criterion == "gain"
    if not closed_form and context is None:
        context = SearchContext(pset, spec, n_jobs)

    def solve(j):
        k, a = idx[j], targets.cut_angles[j]
        if closed_form:
            f = PatternMatrix(np.stack([pset.f_phi[:, k], pset.f_theta[:, k]]), pset.gain_scale)
            c, _ = optimize_digital_gain(f)
            return _entry(pset, k, a, c)
        i, _, gain = context.best_at(k)
        peak = None if context.peaks is None else float(context.peaks[i])
        return _entry(pset, k, a, context.vector(i), gain, peak)

    n_jobs = check_n_jobs(n_jobs)
    if n_jobs > 1 and len(idx) > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            entries = list(pool.map(solve, range(len(idx))))
    else:
        entries = [solve(j) for j in range(len(idx))]
    return Codebook(tuple(entries), spec, pset.fingerprint)


def check_compatible(codebooks, pset: PatternSet | None = None) -> None:
    if not codebooks:
        raise CodebookError("no codebooks given")
    ref = codebooks[0]
    for cb in codebooks[1:]:
        if cb.pattern_fingerprint != ref.pattern_fingerprint:
            raise CodebookError("codebooks were built from different pattern sets "
                                "(fingerprint mismatch)")
        if len(cb) != len(ref) or not np.allclose(cb.targets, ref.targets, rtol=0, atol=1e-9):
            raise CodebookError("codebooks do not share the same target angles")
    if pset is not None and pset.fingerprint != ref.pattern_fingerprint:
        raise CodebookError("codebook fingerprint does not match the pattern set")


def codebook_name(cb: Codebook) -> str:
    return f"{cb.spec.scheme}-{cb.spec.criterion}"


def sweep_metrics(pset: PatternSet | None, codebooks, names=None,
                  include_ports=False) -> pd.DataFrame:
    """Long-form metric table over the shared targets of several codebooks.

    Columns are ``angle_deg, codebook, metric, value`` with metrics
    ``gain_dbi``, ``ef`` (linear) and ``gef_dbi``. With ``include_ports``
    (needs ``pset``) the single-port gain curves are appended as codebooks
    ``port1`` .. ``portM``.
    """
    codebooks = list(codebooks)
    check_compatible(codebooks, pset)
    if names is None:
        names = [codebook_name(cb) for cb in codebooks]
        seen = {}
        for i, n in enumerate(names):
            seen[n] = seen.get(n, 0) + 1
            if seen[n] > 1:
                names[i] = f"{n}#{seen[n]}"
    if len(names) != len(codebooks):
        raise ValueError("one name per codebook is required")
    rows = []
    for name, cb in zip(names, codebooks):
        for e in cb.entries:
            rows.append((e.target_deg, name, "gain_dbi", float(to_db(e.gain))))
            rows.append((e.target_deg, name, "ef", e.ef))
            rows.append((e.target_deg, name, "gef_dbi", float(to_db(e.gef))))
    if include_ports:
        if pset is None:
            raise ValueError("include_ports needs the pattern set")
        ref = codebooks[0]
        idx = [pset.grid.index_of_cut(a) for a in ref.targets]
        g = pset.gain_scale * (power(pset.f_phi[:, idx]) + power(pset.f_theta[:, idx]))
        for m in range(pset.num_ports):
            for deg, val in zip(ref.targets_deg, g[m]):
                rows.append((float(deg), f"port{m + 1}", "gain_dbi", float(to_db(val))))
    return pd.DataFrame(rows, columns=["angle_deg", "codebook", "metric", "value"])


@dataclass(frozen=True, eq=False)
class UsageStats:
    """Port usage over a codebook, in percent of targets.

    ``active_count_hist[k]`` is the share of targets with exactly ``k``
    active ports, ``k = 0 .. M``; bin 0 is nonzero only when the threshold
    switches off every port of some entry.
    """

    incidence: np.ndarray
    active_count_hist: np.ndarray
    activity_threshold: float
    num_targets: int

    @property
    def num_ports(self) -> int:
        return self.incidence.size

    def incidence_table(self) -> pd.DataFrame:
        return pd.DataFrame({"port": np.arange(1, self.num_ports + 1),
                             "incidence_pct": self.incidence})

    def histogram_table(self) -> pd.DataFrame:
        return pd.DataFrame({"k": np.arange(self.num_ports + 1),
                             "percent": self.active_count_hist})


def usage_stats(cb: Codebook, threshold=DEFAULT_THRESHOLD) -> UsageStats:
    """Port incidence and active-port-count histogram.

    A port counts as active at a target when ``|c_m|^2 > threshold``.
    """
    threshold = float(threshold)
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    active = power(cb.weights) > threshold
    n, m = active.shape
    counts = active.sum(axis=1)
    idle = np.flatnonzero(counts == 0)
    if idle.size:
        warnings.warn(
            f"{idle.size} codebook entr{'y has' if idle.size == 1 else 'ies have'} no port "
            f"above |c|^2 > {threshold:g} (targets {np.round(cb.targets_deg[idle], 6).tolist()} deg)",
            stacklevel=2,
        )
    incidence = 100.0 * active.sum(axis=0) / n
    hist = 100.0 * np.bincount(counts, minlength=m + 1) / n
    return UsageStats(incidence, hist, threshold, n)
