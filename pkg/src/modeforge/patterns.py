"""Far-field pattern sets on angular grids.

A :class:`PatternSet` holds the complex far-field components ``f_phi`` and
``f_theta`` of every port of an M-port antenna, sampled on a shared
:class:`AngularGrid`. Fields are stored in volts so that, after
normalization, the radiated power of port ``m`` is

    (1 / 2 Z0) * sum_k w_k (|f_phi[m, k]|^2 + |f_theta[m, k]|^2) == 1

where ``w_k`` are the grid's solid-angle quadrature weights.

Two grid kinds exist. ``full_sphere`` grids are equiangular theta x phi
products carrying ``sin(theta) dtheta dphi`` weights. ``plane_cut`` grids
sample the y-z plane by a signed angle ``alpha`` in [-90, 90] degrees and
carry zero weights, so nothing that needs a sphere integral accepts them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

Z0 = 376.730313668
FULL_SPHERE = "full_sphere"
PLANE_CUT = "plane_cut"

# angles closer than this (radians) are the same grid sample
ANGLE_ATOL = 1e-9


class GridError(ValueError):
    """Grid is malformed or too coarse for the requested operation."""


class OffGridError(GridError):
    """A direction does not coincide with any grid sample."""


class PatternError(ValueError):
    """Pattern data is inconsistent, non-finite or unsuitable."""


class RankDeficiencyError(PatternError):
    """Ports are linearly dependent under the power inner product."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def cut_direction(alpha):
    """Map a signed y-z-plane angle (radians) to ``(theta, phi)``.

    ``alpha >= 0`` lies in the +y half-plane (phi = 90 deg), negative angles
    in the -y half-plane (phi = 270 deg). ``alpha = 0`` is the +z axis.
    """
    alpha = float(alpha)
    if alpha >= 0:
        return abs(alpha), np.pi / 2
    return abs(alpha), 3 * np.pi / 2


def _unit_vectors(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Angular sampling of the far field.

    For ``full_sphere`` grids ``theta_samples`` and ``phi_samples`` are the
    two axes of the product grid and samples are ordered theta-major. For
    ``plane_cut`` grids they are per-sample coordinates and ``cut_angles``
    holds the signed angle of each sample.
    """

    theta_samples: np.ndarray
    phi_samples: np.ndarray
    quad_weights: np.ndarray
    kind: str = FULL_SPHERE
    cut_angles: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta_samples", _frozen(self.theta_samples))
        object.__setattr__(self, "phi_samples", _frozen(self.phi_samples))
        object.__setattr__(self, "quad_weights", _frozen(self.quad_weights))
        if self.kind == FULL_SPHERE:
            for name, axis in (("theta", self.theta_samples), ("phi", self.phi_samples)):
                if axis.ndim != 1 or axis.size == 0:
                    raise GridError(f"{name} axis must be a non-empty 1-D array")
                if np.any(np.diff(axis) <= 0):
                    raise GridError(f"{name} samples must be strictly increasing")
            expected = self.theta_samples.size * self.phi_samples.size
            if self.quad_weights.shape != (expected,):
                raise GridError(
                    f"expected {expected} quadrature weights, got {self.quad_weights.shape}"
                )
        elif self.kind == PLANE_CUT:
            if self.cut_angles is None:
                raise GridError("plane_cut grid needs cut_angles")
            cut = _frozen(self.cut_angles)
            object.__setattr__(self, "cut_angles", cut)
            if np.any(np.diff(cut) <= 0):
                raise GridError("cut angles must be strictly increasing")
            if not (self.theta_samples.shape == self.phi_samples.shape
                    == self.quad_weights.shape == cut.shape):
                raise GridError("plane_cut arrays must all have one entry per sample")
        else:
            raise GridError(f"unknown grid kind {self.kind!r}")
        if np.any(self.quad_weights < 0) or not np.all(np.isfinite(self.quad_weights)):
            raise GridError("quadrature weights must be finite and non-negative")

    @property
    def size(self) -> int:
        return int(self.quad_weights.size)

    @property
    def shape(self) -> tuple:
        if self.kind == FULL_SPHERE:
            return (self.theta_samples.size, self.phi_samples.size)
        return (self.size,)

    @property
    def theta(self) -> np.ndarray:
        """Per-sample elevation, length ``size``."""
        if self.kind == FULL_SPHERE:
            return np.repeat(self.theta_samples, self.phi_samples.size)
        return self.theta_samples

    @property
    def phi(self) -> np.ndarray:
        """Per-sample azimuth, length ``size``."""
        if self.kind == FULL_SPHERE:
            return np.tile(self.phi_samples, self.theta_samples.size)
        return self.phi_samples

    def directions(self) -> np.ndarray:
        """Cartesian unit vectors of all samples, shape ``(size, 3)``."""
        return _unit_vectors(self.theta, self.phi)

    def index_of(self, theta, phi) -> int:
        """Flat sample index of the direction ``(theta, phi)`` in radians.

        Raises :class:`OffGridError` listing the nearest samples when the
        direction is not a grid sample (there is no interpolation).
        """
        theta = float(theta)
        phi = float(phi) % (2 * np.pi)
        if self.kind == FULL_SPHERE:
            it = np.flatnonzero(np.abs(self.theta_samples - theta) <= ANGLE_ATOL)
            dphi = np.abs(self.phi_samples - phi)
            dphi = np.minimum(dphi, 2 * np.pi - dphi)
            ip = np.flatnonzero(dphi <= ANGLE_ATOL)
            if it.size and ip.size:
                return int(it[0] * self.phi_samples.size + ip[0])
        else:
            dphi = np.abs(self.phi_samples - phi)
            dphi = np.minimum(dphi, 2 * np.pi - dphi)
            hit = np.flatnonzero(
                (np.abs(self.theta_samples - theta) <= ANGLE_ATOL) & (dphi <= ANGLE_ATOL)
            )
            if hit.size:
                return int(hit[0])
        raise OffGridError(
            f"direction (theta={np.degrees(theta):.6g} deg, phi={np.degrees(phi):.6g} deg) "
            f"is not a grid sample; nearest: {self._nearest_text(theta, phi)}"
        )

    def index_of_cut(self, alpha) -> int:
        """Sample index of the y-z-plane direction with signed angle ``alpha``."""
        if self.kind == PLANE_CUT:
            hit = np.flatnonzero(np.abs(self.cut_angles - float(alpha)) <= ANGLE_ATOL)
            if hit.size:
                return int(hit[0])
        return self.index_of(*cut_direction(alpha))

    def _nearest_text(self, theta, phi, k=3):
        cosd = self.directions() @ _unit_vectors(theta, phi)
        order = np.argsort(-cosd, kind="stable")[:k]
        th, ph = self.theta, self.phi
        return ", ".join(
            f"#{i} ({np.degrees(th[i]):.6g}, {np.degrees(ph[i]):.6g}) deg" for i in order
        )

    def total_solid_angle(self) -> float:
        return float(self.quad_weights.sum())


def make_grid(n_theta, n_phi) -> AngularGrid:
    """Equiangular full-sphere grid.

    ``theta`` runs over ``n_theta`` points from 0 to pi inclusive and ``phi``
    over ``n_phi`` points in [0, 2 pi). Weights are ``sin(theta) dtheta dphi``.
    """
    n_theta, n_phi = int(n_theta), int(n_phi)
    if n_theta < 3 or n_phi < 1:
        # n_theta == 2 leaves only the poles, whose weights vanish
        raise GridError(
            f"grid {n_theta}x{n_phi} is too coarse to integrate (need n_theta >= 3, n_phi >= 1)"
        )
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = np.arange(n_phi) * (2 * np.pi / n_phi)
    dtheta = np.pi / (n_theta - 1)
    dphi = 2 * np.pi / n_phi
    w = np.repeat(np.sin(theta) * dtheta * dphi, n_phi)
    return AngularGrid(theta, phi, w, FULL_SPHERE)


def make_cut_grid(n) -> AngularGrid:
    """``n`` equidistant directions in the y-z plane from -90 to +90 degrees."""
    n = int(n)
    if n < 2:
        raise GridError(f"a cut needs at least 2 samples, got {n}")
    alpha = np.radians(np.linspace(-90.0, 90.0, n))
    th, ph = zip(*(cut_direction(a) for a in alpha))
    return AngularGrid(np.array(th), np.array(ph), np.zeros(n), PLANE_CUT, cut_angles=alpha)


@dataclass(frozen=True, eq=False)
class PatternSet:
    """Complex far fields of ``num_ports`` ports on a shared grid."""

    grid: AngularGrid
    f_phi: np.ndarray
    f_theta: np.ndarray
    z0: float = Z0
    normalized: bool = False
    _fingerprint: str = field(default="", init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        f_phi = _frozen(np.atleast_2d(self.f_phi), complex)
        f_theta = _frozen(np.atleast_2d(self.f_theta), complex)
        if f_phi.shape != f_theta.shape:
            raise PatternError(
                f"f_phi shape {f_phi.shape} differs from f_theta shape {f_theta.shape}"
            )
        if f_phi.shape[1] != self.grid.size:
            raise PatternError(
                f"fields have {f_phi.shape[1]} samples, grid has {self.grid.size}"
            )
        for name, a in (("f_phi", f_phi), ("f_theta", f_theta)):
            bad = np.argwhere(~np.isfinite(a))
            if bad.size:
                m, k = bad[0]
                raise PatternError(f"non-finite {name} value at port {m}, sample {k}")
        object.__setattr__(self, "f_phi", f_phi)
        object.__setattr__(self, "f_theta", f_theta)
        object.__setattr__(self, "z0", float(self.z0))

    @property
    def num_ports(self) -> int:
        return self.f_phi.shape[0]

    @property
    def gain_scale(self) -> float:
        """Factor turning ``|F|^2`` in stored units into linear gain."""
        return 4 * np.pi / (2 * self.z0)

    @property
    def fingerprint(self) -> str:
        """SHA-256 over grid, impedance, flag and field bytes."""
        if not self._fingerprint:
            h = hashlib.sha256()
            h.update(self.grid.kind.encode())
            for a in (self.grid.theta_samples, self.grid.phi_samples,
                      self.f_phi, self.f_theta):
                h.update(np.ascontiguousarray(a).tobytes())
            h.update(np.float64(self.z0).tobytes())
            h.update(bytes([self.normalized]))
            object.__setattr__(self, "_fingerprint", h.hexdigest())
        return self._fingerprint

    def stacked(self) -> np.ndarray:
        """Fields as one ``(M, 2 * size)`` array, phi block then theta block."""
        return np.concatenate([self.f_phi, self.f_theta], axis=1)

    def port_powers(self) -> np.ndarray:
        _require_sphere(self.grid, "radiated power")
        w = self.grid.quad_weights
        dens = np.abs(self.f_phi) ** 2 + np.abs(self.f_theta) ** 2
        return dens @ w / (2 * self.z0)

    def gram_matrix(self) -> np.ndarray:
        """Power inner products ``<p_i, p_j>`` between all ports."""
        _require_sphere(self.grid, "the power inner product")
        x = self.stacked()
        ww = np.concatenate([self.grid.quad_weights] * 2) / (2 * self.z0)
        return (x * ww) @ x.conj().T


def _require_sphere(grid, what):
    if grid.kind != FULL_SPHERE:
        raise GridError(f"{what} needs a full_sphere grid, got {grid.kind}")


def normalize(pset: PatternSet) -> PatternSet:
    """Scale every port to unit radiated power."""
    power = pset.port_powers()
    zero = np.flatnonzero(~(power > 0))
    if zero.size:
        raise PatternError(f"port {zero[0]} radiates no power and cannot be normalized")
    s = 1.0 / np.sqrt(power)
    return PatternSet(pset.grid, pset.f_phi * s[:, None], pset.f_theta * s[:, None],
                      pset.z0, normalized=True)


def orthonormalize(pset: PatternSet, tol=1e-9) -> PatternSet:
    """Gram-Schmidt in port order under the power inner product.

    Modified Gram-Schmidt with one re-orthogonalization pass. A port whose
    residual norm falls below ``tol`` times its original norm is reported as
    dependent on the ports before it.
    """
    _require_sphere(pset.grid, "orthonormalization")
    x = pset.stacked().copy()
    ww = np.concatenate([pset.grid.quad_weights] * 2) / (2 * pset.z0)

    def dot(a, b):
        return np.sum(ww * a * np.conj(b))

    for m in range(x.shape[0]):
        norm0 = np.sqrt(dot(x[m], x[m]).real)
        for _ in range(2):
            for j in range(m):
                x[m] -= dot(x[m], x[j]) * x[j]
        norm = np.sqrt(dot(x[m], x[m]).real)
        if not norm0 > 0 or norm < tol * norm0:
            raise RankDeficiencyError(
                f"port {m} is linearly dependent on ports 0..{m - 1} "
                f"(residual norm {norm:.3g} of {norm0:.3g})"
            )
        x[m] /= norm
    n = pset.grid.size
    return PatternSet(pset.grid, x[:, :n], x[:, n:], pset.z0, normalized=True)


def synthesize_prototype_patterns(m, grid, seed=0) -> PatternSet:
    """Deterministic stand-in for a measured M-port multi-mode antenna.

    Each port gets a cardioid-like lobe ``((1 + cos psi) / 2) ** q`` around
    its own axis, ``q`` in [1, 4]. Axes are spread over the y-z plane between
    -60 and +60 degrees (jittered, tilted out of the plane by up to 20
    degrees), the polarization alternates between theta-hat and phi-hat, and
    a smooth seed-drawn phase ripple makes the fields complex. The result is
    orthonormalized in port order and normalized.
    """
    m = int(m)
    if m < 1:
        raise PatternError(f"need at least one port, got {m}")
    _require_sphere(grid, "pattern synthesis")
    rng = np.random.default_rng(seed)

    if m == 1:
        centers = np.zeros(1)
        spacing = 120.0
    else:
        centers = np.linspace(-60.0, 60.0, m)
        spacing = 120.0 / (m - 1)
    centers = centers + rng.uniform(-spacing / 6, spacing / 6, m)
    centers = centers[rng.permutation(m)]
    q = rng.uniform(1.0, 4.0, m)
    tilt = rng.uniform(-20.0, 20.0, m)
    ripple = rng.uniform(0.0, np.pi, m)
    ripple_axis = rng.normal(size=(m, 3))
    ripple_axis /= np.linalg.norm(ripple_axis, axis=1, keepdims=True)

    r = grid.directions()
    f_phi = np.zeros((m, grid.size), complex)
    f_theta = np.zeros((m, grid.size), complex)
    for i in range(m):
        th, ph = cut_direction(np.radians(centers[i]))
        axis = _unit_vectors(th, ph + np.radians(tilt[i]))
        amp = ((1.0 + r @ axis) / 2.0) ** q[i]
        field_ = amp * np.exp(1j * ripple[i] * (r @ ripple_axis[i]))
        if i % 2 == 0:
            f_theta[i] = field_
        else:
            f_phi[i] = field_
    raw = PatternSet(grid, f_phi, f_theta, Z0, normalized=False)
    return normalize(orthonormalize(raw))


def sample_cut(pset: PatternSet, cut: AngularGrid) -> PatternSet:
    """Restrict a pattern set to the samples of a y-z-plane cut.

    Gains stay valid (the normalization flag carries over) but nothing that
    needs a sphere integral will accept the result.
    """
    if cut.kind != PLANE_CUT:
        raise GridError("sample_cut expects a plane_cut grid")
    idx = np.array([pset.grid.index_of_cut(a) for a in cut.cut_angles], dtype=int)
    return PatternSet(cut, pset.f_phi[:, idx], pset.f_theta[:, idx], pset.z0,
                      pset.normalized)


# --- serialization -------------------------------------------------------

def _grid_to_json(grid):
    return {
        "kind": grid.kind,
        "theta_deg": np.degrees(grid.theta_samples).tolist(),
        "phi_deg": np.degrees(grid.phi_samples).tolist(),
    }


def _grid_from_json(obj):
    kind = obj.get("kind")
    theta = np.radians(np.asarray(obj["theta_deg"], dtype=float))
    phi = np.radians(np.asarray(obj["phi_deg"], dtype=float))
    if kind == FULL_SPHERE:
        grid = make_grid(theta.size, phi.size)
        if (not np.allclose(grid.theta_samples, theta, rtol=0, atol=1e-9)
                or not np.allclose(grid.phi_samples, phi, rtol=0, atol=1e-9)):
            raise PatternError("full_sphere grid axes are not equiangular")
        return grid
    if kind == PLANE_CUT:
        if theta.shape != phi.shape:
            raise PatternError("plane_cut grid needs one phi per theta")
        on_pos = np.abs(phi - np.pi / 2) <= 1e-9
        on_neg = np.abs(phi - 3 * np.pi / 2) <= 1e-9
        if not np.all(on_pos | on_neg):
            raise PatternError("plane_cut samples must lie at phi = 90 or 270 degrees")
        alpha = np.where(on_pos, theta, -theta)
        return AngularGrid(theta, phi, np.zeros(theta.size), PLANE_CUT, cut_angles=alpha)
    raise PatternError(f"unknown grid kind {kind!r}")


def patterns_to_dict(pset: PatternSet) -> dict:
    ports = []
    for m in range(pset.num_ports):
        ports.append({
            "f_phi_re": pset.f_phi[m].real.tolist(),
            "f_phi_im": pset.f_phi[m].imag.tolist(),
            "f_theta_re": pset.f_theta[m].real.tolist(),
            "f_theta_im": pset.f_theta[m].imag.tolist(),
        })
    return {
        "grid": _grid_to_json(pset.grid),
        "z0_ohm": pset.z0,
        "normalized": bool(pset.normalized),
        "num_ports": pset.num_ports,
        "ports": ports,
    }


def patterns_from_dict(obj) -> PatternSet:
    try:
        grid = _grid_from_json(obj["grid"])
        ports = obj["ports"]
        z0 = float(obj.get("z0_ohm", Z0))
        normalized = bool(obj.get("normalized", False))
    except (KeyError, TypeError) as exc:
        raise PatternError(f"malformed pattern file: missing or invalid {exc}") from exc
    if not isinstance(ports, list) or not ports:
        raise PatternError("malformed pattern file: 'ports' must be a non-empty list")
    declared = obj.get("num_ports")
    if declared is not None and int(declared) != len(ports):
        raise PatternError(
            f"shape mismatch: header declares {declared} ports, file has {len(ports)} port blocks"
        )
    comps = {}
    for key in ("f_phi_re", "f_phi_im", "f_theta_re", "f_theta_im"):
        rows = []
        for m, port in enumerate(ports):
            try:
                a = np.asarray(port[key], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise PatternError(f"malformed pattern file: port {m} {key}: {exc}") from exc
            if a.shape != (grid.size,):
                raise PatternError(
                    f"shape mismatch: port {m} {key} has {a.size} samples, grid has {grid.size}"
                )
            bad = np.flatnonzero(~np.isfinite(a))
            if bad.size:
                raise PatternError(f"non-finite value in port {m} {key} at sample {bad[0]}")
            rows.append(a)
        comps[key] = np.array(rows)
    return PatternSet(
        grid,
        comps["f_phi_re"] + 1j * comps["f_phi_im"],
        comps["f_theta_re"] + 1j * comps["f_theta_im"],
        z0,
        normalized,
    )


def save_patterns(pset: PatternSet, path) -> None:
    Path(path).write_text(json.dumps(patterns_to_dict(pset)))


def load_patterns(path) -> PatternSet:
    try:
        # NaN/Infinity literals parse here and are rejected with their index below
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PatternError(f"malformed pattern file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise PatternError(f"malformed pattern file {path}: top level must be an object")
    return patterns_from_dict(obj)
