"""Complex coordinate stretching for perfectly matched layers.

A profile is even in t, vanishes on the physical interval |t| <= L/2 and
follows the power law sigma * ((|t| - L/2) / d)^m inside the layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StretchProfile:
    """Stretching along one axis.

    Attributes:
        L: Width of the physical interval, centred at the origin.
        d: PML thickness on each side.
        sigma: Absorption amplitude.
        m: Grading exponent; m = 0 gives a constant profile.
    """

    L: float
    d: float
    sigma: float
    m: int = 0

    def __post_init__(self):
        if self.L <= 0 or self.d <= 0:
            raise ValueError("PML lengths must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if int(self.m) != self.m or self.m < 0:
            raise ValueError("m must be a nonnegative integer")

    @property
    def half_width(self) -> float:
        return 0.5 * self.L

    @property
    def outer(self) -> float:
        """Position of the outer PML boundary, L/2 + d."""
        return 0.5 * self.L + self.d

    def _depth(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > self.outer * (1 + 1e-12)):
            raise ValueError("coordinate lies outside the truncated box")
        return np.clip((np.abs(t) - self.half_width) / self.d, 0.0, 1.0)

    def sigma_at(self, t, inside_pml=None):
        """Absorption profile at t.

        For m = 0 the profile jumps at |t| = L/2; there the physical value
        0 is returned unless ``inside_pml`` is true, which selects the
        one-sided limit from the layer.
        """
        s = self._depth(t)
        in_layer = np.abs(np.asarray(t, dtype=float)) > self.half_width
        if inside_pml is not None:
            in_layer = in_layer | np.asarray(inside_pml, dtype=bool)
        if self.m == 0:
            val = np.where(in_layer, self.sigma, 0.0)
        else:
            val = self.sigma * s**self.m
        return val if np.ndim(val) else float(val)

    def alpha_at(self, t, inside_pml=None):
        """Stretching factor 1 + i sigma(t)."""
        return 1.0 + 1j * np.asarray(self.sigma_at(t, inside_pml))

    def stretch(self, t):
        """Stretched coordinate t + i int_0^t sigma(s) ds, in closed form."""
        t_arr = np.asarray(t, dtype=float)
        s = self._depth(t_arr)
        integral = self.sigma * self.d / (self.m + 1) * s ** (self.m + 1)
        out = t_arr + 1j * np.sign(t_arr) * integral
        return out if out.ndim else complex(out)

    def total_absorption(self) -> float:
        """int_{L/2}^{L/2+d} sigma(t) dt."""
        return self.sigma * self.d / (self.m + 1)

