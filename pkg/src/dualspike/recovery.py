"""Primal reconstruction: support from certificate maximizers, amplitudes
from unconstrained least squares against the translate matrix."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import numerics
from .certificate import Certificate, global_maximizers
from .errors import EmptySupportError, RankDeficientError
from .kernel import Kernel
from .model import SampleGrid

SUPPORT_VALUE_THRESHOLD = 1.0 - 1e-3


@dataclass(frozen=True)
class RecoveryResult:
    """Estimated support and amplitudes plus least-squares diagnostics."""

    locations: np.ndarray
    amplitudes: np.ndarray
    residual_norm: float
    sigma_max: float
    sigma_min: float

    def summary(self):
        """Plain-dict form for JSON-style serialization."""
        return {
            "locations": [float(t) for t in self.locations],
            "amplitudes": [float(a) for a in self.amplitudes],
            "residual_norm": self.residual_norm,
            "sigma_max": self.sigma_max,
            "sigma_min": self.sigma_min,
        }


def build_phi(grid: SampleGrid, kernel: Kernel, locations) -> np.ndarray:
    """Translate matrix with entry (i, j) = phi(t_j - s_i): samples x sources."""
    locations = np.asarray(locations, dtype=float)
    if locations.size and (locations.min() < 0.0 or locations.max() > 1.0):
        raise ValueError("locations must lie in [0, 1]")
    return kernel.value(locations[None, :] - grid.samples[:, None])


def recover_amplitudes(grid: SampleGrid, kernel: Kernel, locations, y) -> RecoveryResult:
    """Least-squares amplitudes for a fixed support.

    Negative estimates are kept (the analysis covers the unconstrained
    problem) but trigger a warning.  Raises RankDeficientError when the
    translate matrix is numerically rank deficient.
    """
    locations = np.asarray(locations, dtype=float)
    y = np.asarray(y, dtype=float)
    if locations.size > y.size:
        raise ValueError("more sources than samples")
    phi = build_phi(grid, kernel, locations)
    _, singulars, _ = numerics.svd(phi)
    if singulars[-1] <= 1e-12:
        raise RankDeficientError(
            f"translate matrix is rank deficient (sigma_min={singulars[-1]:.3e})",
            sigma_min=float(singulars[-1]))
    amplitudes = numerics.least_squares(phi, y)
    if np.any(amplitudes < 0):
        warnings.warn("least-squares amplitudes contain negative entries",
                      stacklevel=2)
    residual = float(np.linalg.norm(phi @ amplitudes - y))
    return RecoveryResult(locations, amplitudes, residual,
                          float(singulars[0]), float(singulars[-1]))


def recover(cert: Certificate, y, value_threshold: float = SUPPORT_VALUE_THRESHOLD) -> RecoveryResult:
    """Full reconstruction from a dual vector.

    The support is the set of certificate maximizers with value at least
    ``value_threshold``; amplitudes follow by least squares.
    """
    maxima = global_maximizers(cert)
    good = maxima.values >= value_threshold
    if not np.any(good):
        raise EmptySupportError(
            f"no certificate maximizer reaches {value_threshold}")
    return recover_amplitudes(cert.grid, cert.kernel, maxima.locations[good], y)
