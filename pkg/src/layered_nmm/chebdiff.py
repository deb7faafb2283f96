"""Multidomain Chebyshev collocation: grids, differentiation and the
PML-stretched Sturm-Liouville operator.

Each smooth piece of the transverse interval is a subdomain carrying its
own Chebyshev-Gauss-Lobatto nodes. Internal breakpoints are stored twice
(left-limit slot, right-limit slot) so that one-sided data such as a
jump in permittivity or in the PML profile can be represented exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .pml import StretchProfile


def cheb_points(n: int, a: float, b: float) -> np.ndarray:
    """n Chebyshev-Gauss-Lobatto points on [a, b], ascending, endpoints exact."""
    if n < 2:
        raise ValueError("need at least two collocation points")
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    k = np.arange(n)
    # sin form keeps the nodes exactly symmetric
    t = np.sin(np.pi * (2 * k - (n - 1)) / (2 * (n - 1)))
    pts = a + 0.5 * (b - a) * (t + 1.0)
    pts[0], pts[-1] = a, b
    return pts


def cheb_weights(n: int) -> np.ndarray:
    """Barycentric weights of the Chebyshev-Lobatto nodes, ascending order."""
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def barycentric_weights(points: np.ndarray) -> np.ndarray:
    """Barycentric weights of arbitrary distinct nodes.

    Differences are rescaled by a quarter of the interval length (the
    logarithmic capacity) so the products neither overflow nor underflow.
    """
    x = np.asarray(points, dtype=float)
    scale = 0.25 * (x.max() - x.min())
    diff = (x[:, None] - x[None, :]) / scale
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.abs(w).max()


def diff_matrix(points, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Differentiation matrix of the polynomial interpolant through ``points``.

    Exact for polynomials of degree below len(points). Diagonal entries use
    the negative-sum trick, so constants are annihilated to rounding.

    Raises:
        ValueError: if the nodes are not distinct.
    """
    x = np.asarray(points, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two points")
    if np.unique(x).size != n:
        raise ValueError("differentiation nodes must be distinct")
    w = barycentric_weights(x) if weights is None else np.asarray(weights, float)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def barycentric_matrix(points, weights, targets) -> np.ndarray:
    """Matrix mapping nodal values to interpolant values at ``targets``."""
    x = np.asarray(points, dtype=float)
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    diff = t[:, None] - x[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    c = weights[None, :] / diff
    c /= c.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    c[hit] = exact[hit].astype(float)
    return c


class CollocationGrid:
    """Subdomain-wise Chebyshev-Lobatto grid on [breakpoints[0], breakpoints[-1]].

    Attributes:
        breakpoints: Strictly increasing subdomain boundaries.
        counts: Number of nodes in each subdomain, endpoints included.
        points: Global node list; internal breakpoints appear twice.
    """

    def __init__(self, breakpoints: Sequence[float], counts):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        nsub = bp.size - 1
        if np.isscalar(counts):
            counts = [int(counts)] * nsub
        counts = tuple(int(c) for c in counts)
        if len(counts) != nsub:
            raise ValueError("one point count per subdomain is required")
        if min(counts) < 4:
            raise ValueError("each subdomain needs at least 4 points")
        self.breakpoints = bp
        self.counts = counts
        self.offsets = np.concatenate([[0], np.cumsum(counts)])
        self._nodes = [cheb_points(n, bp[s], bp[s + 1]) for s, n in enumerate(counts)]
        self._weights = [cheb_weights(n) for n in counts]
        self._diff = [diff_matrix(x, w) for x, w in zip(self._nodes, self._weights)]
        self.points = np.concatenate(self._nodes)
        self.subdomain_of = np.repeat(np.arange(nsub), counts)
        first = self.offsets[:-1]
        last = self.offsets[1:] - 1
        self.endpoint_indices = np.sort(np.concatenate([first, last]))
        mask = np.ones(self.size, dtype=bool)
        mask[self.endpoint_indices] = False
        self.interior_indices = np.flatnonzero(mask)

    @classmethod
    def with_interior_total(cls, breakpoints: Sequence[float], total: int):
        """Grid whose interior node count equals ``total``, split evenly."""
        nsub = len(breakpoints) - 1
        base, extra = divmod(int(total), nsub)
        if base < 2:
            raise ValueError(
                f"{total} interior nodes cannot fill {nsub} subdomains "
                "with at least 4 points each"
            )
        counts = [base + 2 + (1 if s < extra else 0) for s in range(nsub)]
        return cls(breakpoints, counts)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    @property
    def num_subdomains(self) -> int:
        return len(self.counts)

    @property
    def num_interior(self) -> int:
        return self.interior_indices.size

    @property
    def a(self) -> float:
        return float(self.breakpoints[0])

    @property
    def b(self) -> float:
        return float(self.breakpoints[-1])

    def subdomain_slice(self, s: int) -> slice:
        return slice(int(self.offsets[s]), int(self.offsets[s + 1]))

    def nodes(self, s: int) -> np.ndarray:
        return self._nodes[s]

    def local_diff(self, s: int) -> np.ndarray:
        return self._diff[s]

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """Subdomain-wise derivative of nodal values (one-sided at breakpoints)."""
        out = np.empty_like(np.asarray(values, dtype=complex))
        for s in range(self.num_subdomains):
            sl = self.subdomain_slice(s)
            out[sl] = self._diff[s] @ values[sl]
        return out

    def locate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.a - 1e-12) or np.any(t > self.b + 1e-12):
            raise ValueError("point outside the collocation interval")
        s = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(s, 0, self.num_subdomains - 1)

    def interpolation_matrix(self, t) -> np.ndarray:
        """Dense (len(t), size) matrix evaluating the piecewise interpolant."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        sub = self.locate(t)
        out = np.zeros((t.size, self.size))
        for s in np.unique(sub):
            rows = np.flatnonzero(sub == s)
            sl = self.subdomain_slice(s)
            out[rows, sl] = barycentric_matrix(self._nodes[s], self._weights[s], t[rows])
        return out

    def interpolate(self, values: np.ndarray, t) -> np.ndarray:
        return self.interpolation_matrix(t) @ values


@dataclass(frozen=True)
class DenseOperator:
    """Square operator on grid values with flagged constraint rows.

    Attributes:
        matrix: The (size, size) complex matrix.
        constraint_rows: Rows holding boundary or interface conditions.
        flux: Block-diagonal matrix producing (1/alpha) d/dt of grid values,
            used to build boundary rows.
    """

    matrix: np.ndarray
    constraint_rows: np.ndarray
    flux: np.ndarray
    grid: CollocationGrid

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


def subdomain_alpha(grid: CollocationGrid, stretch: Optional[StretchProfile]):
    """1 + i sigma at every node, with one-sided limits inside each subdomain.

    Raises:
        ValueError: if a subdomain straddles a PML onset.
    """
    alpha = np.ones(grid.size, dtype=complex)
    if stretch is None:
        return alpha
    onset = stretch.half_width
    for s in range(grid.num_subdomains):
        lo, hi = grid.breakpoints[s], grid.breakpoints[s + 1]
        if lo < -onset < hi or lo < onset < hi:
            raise ValueError("grid does not resolve the PML onset at +-L/2")
        mid = 0.5 * (lo + hi)
        in_pml = abs(mid) > onset
        sl = grid.subdomain_slice(s)
        alpha[sl] = stretch.alpha_at(grid.nodes(s), inside_pml=in_pml)
    return alpha


def stretched_sturm_liouville(
    grid: CollocationGrid,
    stretch: Optional[StretchProfile],
    eps_values,
    k0: float,
    discontinuities: Sequence[float] = (),
) -> DenseOperator:
    """Discretize (1/alpha) d/dt((1/alpha) d/dt) + k0^2 eps on ``grid``.

    Interior rows hold the operator. At each internal breakpoint the left
    slot holds value continuity and the right slot flux continuity
    ((1/alpha) phi' continuous). The two outer rows are Dirichlet
    placeholders meant to be replaced by boundary rows.

    Args:
        eps_values: Permittivity at every grid node (one-sided at breakpoints).
        discontinuities: Locations where eps jumps; each must be a breakpoint.
    """
    for t in discontinuities:
        if grid.a < t < grid.b and not np.any(np.isclose(grid.breakpoints, t, atol=1e-12)):
            raise ValueError(f"grid does not resolve the discontinuity at {t}")
    eps = np.asarray(eps_values)
    if eps.shape != (grid.size,):
        raise ValueError("eps_values must be sampled at every grid node")
    inv_alpha = 1.0 / subdomain_alpha(grid, stretch)
    n = grid.size
    matrix = np.zeros((n, n), dtype=complex)
    flux = np.zeros((n, n), dtype=complex)
    for s in range(grid.num_subdomains):
        sl = grid.subdomain_slice(s)
        d1 = inv_alpha[sl, None] * grid.local_diff(s)
        flux[sl, sl] = d1
        matrix[sl, sl] = d1 @ d1 + np.diag(k0**2 * eps[sl])
    first = grid.offsets[:-1]
    last = grid.offsets[1:] - 1
    for s in range(grid.num_subdomains - 1):
        i, j = last[s], first[s + 1]
        matrix[i] = 0.0
        matrix[i, i], matrix[i, j] = 1.0, -1.0
        matrix[j] = flux[i] - flux[j]
    for i in (first[0], last[-1]):
        matrix[i] = 0.0
        matrix[i, i] = 1.0
    return DenseOperator(matrix, grid.endpoint_indices.copy(), flux, grid)
