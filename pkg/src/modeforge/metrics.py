"""Figures of merit for single ports and weighted port combinations.

All values are linear (gain 1.0 == 0 dBi). Directions are ``(theta, phi)``
tuples in radians and must coincide with a grid sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .patterns import FULL_SPHERE, GridError, PatternError, PatternSet

SCHEMES = ("digital", "hybrid", "analog", "selection")
NORM_TOL = 1e-9


def power(z):
    """``|z|^2`` as ``re^2 + im^2``; the one formula every gain goes through."""
    return z.real * z.real + z.imag * z.imag


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Unit-norm complex port weights tagged with the hardware scheme."""

    weights: np.ndarray
    scheme: str = "digital"

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a non-empty finite vector")
        norm2 = float(np.sum(power(w)))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"weights must have unit norm, sum |c_m|^2 = {norm2!r}")
        mag = np.abs(w)
        if self.scheme == "selection":
            nz = np.flatnonzero(w)
            if nz.size != 1 or w[nz[0]] != 1:
                raise ValueError("selection weights must be one-hot with the active entry equal to 1")
        elif self.scheme == "analog":
            if np.any(np.abs(mag - 1 / np.sqrt(w.size)) > NORM_TOL):
                raise ValueError("analog weights must all have magnitude 1/sqrt(M)")
        elif self.scheme == "hybrid":
            nz = mag > 0
            if np.any(np.abs(mag[nz] - 1 / np.sqrt(nz.sum())) > NORM_TOL):
                raise ValueError("hybrid weights must have magnitude 1/sqrt(N_C) on active ports")

    def __len__(self):
        return self.weights.size

    @classmethod
    def one_hot(cls, m, num_ports):
        w = np.zeros(num_ports, complex)
        w[m] = 1.0
        return cls(w, "selection")

    @property
    def active_ports(self) -> np.ndarray:
        return np.flatnonzero(self.weights)


@dataclass(frozen=True, eq=False)
class PatternMatrix:
    """The 2 x M matrix ``[[F_phi,1 .. F_phi,M], [F_theta,1 .. F_theta,M]]``.

    ``gain_scale`` turns ``|F c|^2`` into linear gain; it is ``4 pi / 2 Z0``
    for matrices taken from a pattern set and 1 for bare matrices.
    """

    entries: np.ndarray
    gain_scale: float = 1.0

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != 2 or e.shape[1] < 1:
            raise ValueError(f"pattern matrix must be 2 x M, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("pattern matrix entries must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def num_ports(self) -> int:
        return self.entries.shape[1]


def _require_normalized(pset):
    if not pset.normalized:
        raise PatternError("gain is undefined for an unnormalized pattern set; call normalize() first")


def _weights(c, num_ports):
    if not isinstance(c, CoefficientVector):
        c = CoefficientVector(c)
    if c.weights.size != num_ports:
        raise ValueError(f"{c.weights.size} weights given for {num_ports} ports")
    return c.weights


def _port(pset, m):
    m = int(m)
    if not 0 <= m < pset.num_ports:
        raise IndexError(f"port index {m} out of range for {pset.num_ports} ports")
    return m


def pattern_matrix(pset: PatternSet, angle) -> PatternMatrix:
    k = pset.grid.index_of(*angle)
    return PatternMatrix(np.stack([pset.f_phi[:, k], pset.f_theta[:, k]]), pset.gain_scale)


def port_gain(pset: PatternSet, m, angle) -> float:
    """Gain of port ``m`` (0-based) toward ``angle``."""
    _require_normalized(pset)
    m = _port(pset, m)
    k = pset.grid.index_of(*angle)
    return pset.gain_scale * float(power(pset.f_phi[m, k]) + power(pset.f_theta[m, k]))


def port_gain_pattern(pset: PatternSet, m) -> np.ndarray:
    _require_normalized(pset)
    m = _port(pset, m)
    return pset.gain_scale * (power(pset.f_phi[m]) + power(pset.f_theta[m]))


def eirp(pset: PatternSet, m) -> float:
    """Peak gain of port ``m`` over the sphere (input power is unity)."""
    if pset.grid.kind != FULL_SPHERE:
        raise GridError("EIRP needs the full sphere; a cut would underestimate the peak")
    return float(port_gain_pattern(pset, m).max())


def combined_gain_pattern(pset: PatternSet, c) -> np.ndarray:
    """Gain of the weighted combination at every grid sample."""
    _require_normalized(pset)
    w = _weights(c, pset.num_ports)
    return pset.gain_scale * (power(w @ pset.f_phi) + power(w @ pset.f_theta))


def combined_gain(pset: PatternSet, c, angle) -> float:
    _require_normalized(pset)
    w = _weights(c, pset.num_ports)
    k = pset.grid.index_of(*angle)
    return pset.gain_scale * float(power(w @ pset.f_phi[:, k]) + power(w @ pset.f_theta[:, k]))


def combined_pattern_peak(pset: PatternSet, c):
    """``((theta, phi), gain)`` of the strongest sample; lowest index wins ties."""
    if pset.grid.kind != FULL_SPHERE:
        raise GridError("the pattern peak must be searched over a full_sphere grid")
    g = combined_gain_pattern(pset, c)
    k = int(np.argmax(g))
    return (float(pset.grid.theta[k]), float(pset.grid.phi[k])), float(g[k])


def element_factor(pset: PatternSet, c, angle) -> float:
    """Gain toward ``angle`` relative to the combined pattern's own peak."""
    _, peak = combined_pattern_peak(pset, c)
    if not peak > 0:
        raise PatternError("element factor undefined: the combined pattern is identically zero")
    return combined_gain(pset, c, angle) / peak


def gef(pset: PatternSet, c, angle) -> float:
    """Gain by element factor, ``G^2 / peak``."""
    _, peak = combined_pattern_peak(pset, c)
    if not peak > 0:
        raise PatternError("gain by element factor undefined: the combined pattern is identically zero")
    g = combined_gain(pset, c, angle)
    return g * (g / peak)


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)
