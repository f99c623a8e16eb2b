"""Dual certificates q(t) = sum_j lambda_j phi(t - s_j): evaluation,
maximizer search, validity diagnostics, and local refinement."""

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError
from .kernel import Kernel
from .model import SampleGrid, SourceModel

DEFAULT_GRID_POINTS = 4001
DEFAULT_MERGE_TOL = 1e-4
STATIONARY_TOL = 1e-9


@dataclass(frozen=True)
class Certificate:
    """A dual vector together with the geometry needed to evaluate q."""

    weights: np.ndarray
    grid: SampleGrid
    kernel: Kernel

    def __init__(self, weights, grid, kernel):
        weights = np.asarray(weights, dtype=float).copy()
        if weights.shape != (grid.n_samples,):
            raise ValueError("one weight per sample is required")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "kernel", kernel)

    def value(self, t, order=0):
        """q(t), q'(t) or q''(t); accepts scalars or arrays of locations."""
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        diffs = t_arr[:, None] - self.grid.samples[None, :]
        table = self.kernel.value(diffs) if order == 0 else self.kernel.derivative(diffs, order)
        out = table @ self.weights
        return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


@dataclass(frozen=True)
class MaximizerSet:
    """Refined stationary local maxima of a certificate, sorted by location."""

    locations: np.ndarray
    values: np.ndarray
    curvatures: np.ndarray

    @property
    def n_maximizers(self):
        return self.locations.size


@dataclass(frozen=True)
class ValidationReport:
    """How close a certificate comes to touching 1 exactly on the support."""

    source_errors: np.ndarray
    off_support_sup: float
    passed: bool


class CertificateGrid:
    """Dense evaluation table for certificates sharing one (grid, kernel).

    Precomputes phi(t_i - s_j) on a uniform scan of [0,1] so that repeated
    suprema (one per bundle iteration) reduce to a matrix-vector product.
    """

    def __init__(self, grid: SampleGrid, kernel: Kernel, n_points: int = DEFAULT_GRID_POINTS):
        if n_points < 101:
            raise ValueError("need at least 101 scan points")
        self.grid = grid
        self.kernel = kernel
        self.scan = np.linspace(0.0, 1.0, n_points)
        self.table = kernel.value(self.scan[:, None] - grid.samples[None, :])

    def values(self, weights):
        return self.table @ weights

    def _q(self, weights, t, order):
        d = t - self.grid.samples
        col = self.kernel.value(d) if order == 0 else self.kernel.derivative(d, order)
        return float(col @ weights)

    def _newton_on_slope(self, weights, t0, lo, hi, max_iter=100):
        """Drive q' to zero inside [lo, hi]; bisection whenever Newton misbehaves."""
        t = t0
        for _ in range(max_iter):
            slope = self._q(weights, t, 1)
            curv = self._q(weights, t, 2)
            if curv < 0.0:
                t_new = t - slope / curv
                if not (lo <= t_new <= hi):
                    t_new = 0.5 * (lo + hi)
            else:
                t_new = 0.5 * (lo + hi)
            if self._q(weights, t_new, 1) > 0.0:
                lo = t_new
            else:
                hi = t_new
            if abs(t_new - t) < 1e-17:
                return t_new
            t = t_new
        return t

    def local_max_indices(self, q):
        """Interior scan indices that top both neighbours (one per plateau)."""
        return [i for i in range(1, q.size - 1) if q[i] >= q[i - 1] and q[i] > q[i + 1]]

    def _boundary_squeezed_maxima(self, weights):
        """Stationary maxima hiding between an endpoint and its neighbour.

        The scan cannot see a bump that rises and falls entirely within the
        first (or last) grid cell, so check the slopes there directly.
        """
        found = []
        if (self._q(weights, self.scan[0], 1) > 0.0
                and self._q(weights, self.scan[1], 1) < 0.0):
            found.append(self._newton_on_slope(
                weights, 0.5 * (self.scan[0] + self.scan[1]),
                float(self.scan[0]), float(self.scan[1])))
        if (self._q(weights, self.scan[-2], 1) > 0.0
                and self._q(weights, self.scan[-1], 1) < 0.0):
            found.append(self._newton_on_slope(
                weights, 0.5 * (self.scan[-2] + self.scan[-1]),
                float(self.scan[-2]), float(self.scan[-1])))
        return found

    def supremum(self, weights):
        """Global supremum of q over [0,1]; ties resolved to the smallest t."""
        q = self.values(weights)
        i_max = int(np.argmax(q))
        grid_max = float(q[i_max])
        best_t, best_v = float(self.scan[i_max]), grid_max
        # neighbouring bumps can out-top the grid argmax by up to the grid
        # quantization error, so refine every local max within that margin
        h = self.scan[1] - self.scan[0]
        curv_scale = float(np.abs(weights).sum()) * self.kernel.deriv_sup_bounds()[1]
        margin = max(1e-12, 0.5 * curv_scale * h * h)
        for i in self.local_max_indices(q):
            if q[i] < grid_max - margin:
                continue
            t = self._newton_on_slope(weights, float(self.scan[i]), float(self.scan[i - 1]), float(self.scan[i + 1]))
            v = self._q(weights, t, 0)
            if v > best_v or (v == best_v and t < best_t):
                best_t, best_v = t, v
        for t in self._boundary_squeezed_maxima(weights):
            v = self._q(weights, t, 0)
            if v > best_v or (v == best_v and t < best_t):
                best_t, best_v = t, v
        return best_t, best_v

    def maximizers(self, weights, merge_tol=DEFAULT_MERGE_TOL, value_tol=None):
        q = self.values(weights)
        sup, inf = float(q.max()), float(q.min())
        spread = sup - inf
        if spread <= 1e-15 * max(1.0, abs(sup)):
            return MaximizerSet(np.empty(0), np.empty(0), np.empty(0))
        if value_tol is None:
            value_tol = 1e-3 * spread
        # q' and q'' cannot be evaluated below their roundoff floors, which
        # grow with |weights|; widen the stationarity test accordingly
        sups = self.kernel.deriv_sup_bounds()
        weight_mass = float(np.abs(weights).sum())
        slope_tol = max(STATIONARY_TOL, 1e-13 * weight_mass * sups[0])
        curv_tol = max(STATIONARY_TOL, 1e-13 * weight_mass * sups[1])
        candidates = []
        for i in self.local_max_indices(q):
            if q[i] < sup - value_tol:
                continue
            candidates.append(self._newton_on_slope(
                weights, float(self.scan[i]), float(self.scan[i - 1]), float(self.scan[i + 1])))
        candidates.extend(self._boundary_squeezed_maxima(weights))
        found = []
        for t in candidates:
            value = self._q(weights, t, 0)
            if value < sup - value_tol:
                continue
            slope = self._q(weights, t, 1)
            curv = self._q(weights, t, 2)
            if abs(slope) <= slope_tol and curv <= curv_tol:
                found.append((t, value, curv))
        found.sort()
        merged = []
        for cand in found:
            if merged and cand[0] - merged[-1][0] < merge_tol:
                if cand[1] > merged[-1][1]:
                    merged[-1] = cand
            else:
                merged.append(cand)
        if not merged:
            return MaximizerSet(np.empty(0), np.empty(0), np.empty(0))
        locs, vals, curvs = map(np.array, zip(*merged))
        return MaximizerSet(locs, vals, curvs)


def supremum(cert: Certificate, grid_points: int = DEFAULT_GRID_POINTS):
    """Location and value of sup q over [0,1]."""
    return CertificateGrid(cert.grid, cert.kernel, grid_points).supremum(cert.weights)


def global_maximizers(cert: Certificate, grid_points: int = DEFAULT_GRID_POINTS,
                      merge_tol: float = DEFAULT_MERGE_TOL, value_tol=None) -> MaximizerSet:
    """All near-top stationary local maxima of q, Newton-refined and merged."""
    if merge_tol <= 0:
        raise ValueError("merge_tol must be positive")
    return CertificateGrid(cert.grid, cert.kernel, grid_points).maximizers(
        cert.weights, merge_tol=merge_tol, value_tol=value_tol)


def validate_certificate(cert: Certificate, src: SourceModel, tol: float,
                         grid_points: int = DEFAULT_GRID_POINTS,
                         exclusion: float = DEFAULT_MERGE_TOL) -> ValidationReport:
    """Check q = 1 on the support and q <= 1 away from it (diagnostic only)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    cg = CertificateGrid(cert.grid, cert.kernel, grid_points)
    source_errors = np.abs(cert.value(src.locations) - 1.0)
    q = cg.values(cert.weights)
    away = np.all(np.abs(cg.scan[:, None] - src.locations[None, :]) > exclusion, axis=1)
    off_sup = float(q[away].max()) if np.any(away) else -np.inf
    passed = bool(np.all(source_errors <= tol) and off_sup <= 1.0 + tol)
    return ValidationReport(source_errors, off_sup, passed)


def refine_location(cert: Certificate, t0: float, slope_tol: float = 1e-12,
                    max_iter: int = 50) -> float:
    """Polish a stationary point of q from t0 by safeguarded Newton on q'.

    The search is confined to [t0 - sigma, t0 + sigma] (clipped to [0,1]);
    a sign change of q' must exist there and the curvature at the bracket
    midpoint must be negative, otherwise NoConvergenceError is raised with
    the last iterate attached.
    """
    sigma = cert.kernel.sigma
    lo = max(0.0, t0 - sigma)
    hi = min(1.0, t0 + sigma)

    def slope(t):
        return cert.value(t, 1)

    if abs(slope(t0)) < slope_tol:
        if cert.value(t0, 2) < 0.0:
            return t0
        raise NoConvergenceError(
            f"stationary but not concave at {t0}", last_iterate=t0)
    # shrink toward t0 until the bracket endpoints straddle the stationary point
    bl, bh = lo, hi
    for _ in range(60):
        if slope(bl) > 0.0 > slope(bh):
            break
        if slope(bl) <= 0.0:
            bl = 0.5 * (bl + t0)
        if slope(bh) >= 0.0:
            bh = 0.5 * (bh + t0)
        if bh - bl < 1e-15:
            break
    if not (slope(bl) > 0.0 > slope(bh)):
        raise NoConvergenceError(
            f"no local maximum bracketed near {t0}", last_iterate=t0)
    t = min(max(t0, bl), bh)
    for _ in range(max_iter):
        g = slope(t)
        if abs(g) < slope_tol:
            return t
        h = cert.value(t, 2)
        t_new = t - g / h if h < 0.0 else 0.5 * (bl + bh)
        if not (bl <= t_new <= bh):
            t_new = 0.5 * (bl + bh)
        if slope(t_new) > 0.0:
            bl = t_new
        else:
            bh = t_new
        if abs(t_new - t) < 1e-17:
            return t_new
        t = t_new
    if not (lo <= t <= hi):
        raise NoConvergenceError(f"refinement left [{lo}, {hi}]", last_iterate=t)
    return t


def dump_curve(cert: Certificate, grid_points: int = DEFAULT_GRID_POINTS):
    """(t, q(t)) pairs at scan resolution, for external plotting."""
    cg = CertificateGrid(cert.grid, cert.kernel, grid_points)
    return np.column_stack([cg.scan, cg.values(cert.weights)])
