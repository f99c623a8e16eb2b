"""Gaussian convolution kernel, its derivatives, and their extremal values.

The kernel is exp(-t^2/sigma^2) (note: no factor 2 in the denominator).
Closed-form derivatives up to order three are provided because the
perturbation bounds and the Newton refinements both need machine-accurate
curvature; finite differences appear only in tests.
"""

import math
from dataclasses import dataclass

import numpy as np

# sup over t of |d/dt exp(-t^2)|-type quantities, scaled by sigma powers in
# deriv_sup_bounds.  The third-derivative coefficient is kept as its radical
# expression, not the rounded decimal.
GRAD_SUP_COEFF = math.sqrt(2.0 / math.e)
CURV_SUP_COEFF = 2.0
THIRD_SUP_COEFF = 4.0 * math.sqrt(9.0 - 3.0 * math.sqrt(6.0)) * math.exp(-(3.0 - math.sqrt(6.0)) / 2.0)


@dataclass(frozen=True)
class Kernel:
    """Gaussian kernel of width ``sigma`` on the same scale as locations."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"kernel width must be positive, got {self.sigma}")

    def value(self, t):
        """Evaluate exp(-t^2/sigma^2); accepts scalars or arrays."""
        u = np.asarray(t, dtype=float) / self.sigma
        return np.exp(-u * u)

    def derivative(self, t, order):
        """Analytic derivative of the kernel at ``t``.

        Parameters
        ----------
        t : float or ndarray
        order : int
            1, 2 or 3.

        Returns
        -------
        float or ndarray
        """
        t = np.asarray(t, dtype=float)
        s2 = self.sigma**2
        base = self.value(t)
        if order == 1:
            return (-2.0 * t / s2) * base
        if order == 2:
            return (4.0 * t * t / s2**2 - 2.0 / s2) * base
        if order == 3:
            return (12.0 * t / s2**2 - 8.0 * t**3 / s2**3) * base
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")

    def deriv_sup_bounds(self):
        """Suprema of |first|, |second| and |third| derivative over the line.

        Returns the triple (sqrt(2)/(sigma sqrt(e)), 2/sigma^2, c/sigma^3)
        where c is the radical constant ``THIRD_SUP_COEFF`` (~3.9036).
        """
        s = self.sigma
        return (GRAD_SUP_COEFF / s, CURV_SUP_COEFF / s**2, THIRD_SUP_COEFF / s**3)
