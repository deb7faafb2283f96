"""Transverse eigenmodes of a uniform segment.

The boundary and interface rows of the collocated operator are used to
express the subdomain endpoint values through the interior values; the
remaining standard eigenproblem on interior nodes is solved densely.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .chebdiff import CollocationGrid, DenseOperator, subdomain_alpha
from .pml import StretchProfile

log = logging.getLogger(__name__)

SPECTRUM_TOL = 1e-6


class ModeSolverError(RuntimeError):
    """Raised when the transverse eigenproblem cannot be solved as requested."""


def principal_sqrt(delta):
    """Square root with Im >= 0; ties on the real axis resolved to Re >= 0."""
    w = np.sqrt(np.asarray(delta, dtype=complex))
    flip = (w.imag < 0) | ((w.imag == 0) & (w.real < 0))
    w = np.where(flip, -w, w)
    return w if w.ndim else complex(w)


@dataclass(frozen=True)
class BoundarySpec:
    """Termination of the transverse interval.

    ``top``/``bottom`` hold the Robin coefficient beta; None means a
    zero Dirichlet condition. The rows imposed are
    (1/alpha) phi' - i beta_top phi = 0 at the top and
    (1/alpha) phi' + i beta_bot phi = 0 at the bottom.
    beta may be complex beyond the critical angle, where the remainder is
    evanescent rather than propagating.
    """

    top: Optional[complex] = None
    bottom: Optional[complex] = None

    @property
    def is_dirichlet(self) -> bool:
        return self.top is None and self.bottom is None

    def describe(self) -> str:
        if self.is_dirichlet:
            return "dirichlet"
        return f"robin(top={self.top}, bottom={self.bottom})"


DIRICHLET = BoundarySpec()


def robin_rows(bc: BoundarySpec, grid: CollocationGrid, stretch: Optional[StretchProfile]):
    """Boundary rows (bottom, top) as length-``grid.size`` stencils."""
    n = grid.size
    i0, i1 = 0, n - 1
    alpha = subdomain_alpha(grid, stretch)
    rows = []
    for idx, beta, sign, s in ((i0, bc.bottom, +1, 0), (i1, bc.top, -1, grid.num_subdomains - 1)):
        row = np.zeros(n, dtype=complex)
        if beta is None:
            row[idx] = 1.0
        else:
            sl = grid.subdomain_slice(s)
            local = idx - sl.start
            row[sl] = grid.local_diff(s)[local] / alpha[idx]
            row[idx] += sign * 1j * beta
        rows.append(row)
    return rows[0], rows[1]


def with_boundary(op: DenseOperator, bc: BoundarySpec, stretch: Optional[StretchProfile]) -> DenseOperator:
    """Copy of ``op`` with its two outer rows replaced by the rows of ``bc``."""
    bottom, top = robin_rows(bc, op.grid, stretch)
    matrix = op.matrix.copy()
    matrix[0] = bottom
    matrix[-1] = top
    return DenseOperator(matrix, op.constraint_rows, op.flux, op.grid)


@dataclass(frozen=True)
class EigenMode:
    delta: complex
    sqrt_delta: complex
    phi: np.ndarray


@dataclass(frozen=True)
class ModeBasis:
    """N transverse eigenpairs sharing one collocation grid.

    Attributes:
        grid: Collocation grid of the transverse variable.
        delta: Eigenvalues, sorted by descending real part.
        sqrt_delta: principal_sqrt(delta).
        phi: (grid.size, N) eigenfunctions at every node, max |phi| = 1.
        segment: Index of the owning segment (or -1).
        bc: The termination used.
        residual: max_j ||K v_j - delta_j v_j||_inf / (||K||_inf + |delta_j|)
            for the reduced operator K.
    """

    grid: CollocationGrid
    delta: np.ndarray
    sqrt_delta: np.ndarray
    phi: np.ndarray
    segment: int = -1
    bc: BoundarySpec = DIRICHLET
    residual: float = 0.0

    @property
    def size(self) -> int:
        return self.delta.size

    @property
    def interior(self) -> np.ndarray:
        """(P, N) eigenfunction values at the interior collocation nodes."""
        return self.phi[self.grid.interior_indices]

    @property
    def modes(self) -> list[EigenMode]:
        return [
            EigenMode(complex(d), complex(w), self.phi[:, j])
            for j, (d, w) in enumerate(zip(self.delta, self.sqrt_delta))
        ]

    def evaluate(self, t) -> np.ndarray:
        """(len(t), N) eigenfunction values at arbitrary transverse points."""
        return self.grid.interpolate(self.phi, t)

    def lower_half_plane_count(self, tol: float = SPECTRUM_TOL) -> int:
        """Number of eigenvalues with Im(delta) < -tol (1 + |delta|)."""
        return int(np.count_nonzero(self.delta.imag < -tol * (1 + np.abs(self.delta))))


def reduce_operator(op: DenseOperator):
    """Eliminate endpoint unknowns: returns (K, G) with u_end = G u_int."""
    grid = op.grid
    I = grid.interior_indices
    E = op.constraint_rows
    C = op.matrix[E]
    try:
        G = -scipy.linalg.solve(C[:, E], C[:, I])
    except scipy.linalg.LinAlgError as exc:
        raise ModeSolverError("boundary/interface rows are singular") from exc
    K = op.matrix[np.ix_(I, I)] + op.matrix[np.ix_(I, E)] @ G
    return K, G


def solve_modes(
    op: DenseOperator,
    N: Optional[int] = None,
    segment: int = -1,
    bc: BoundarySpec = DIRICHLET,
) -> ModeBasis:
    """The N eigenpairs of ``op`` (with its boundary rows) of largest Re(delta).

    Raises:
        ModeSolverError: if N exceeds the number of interior nodes or the
            dense eigensolver fails.
    """
    grid = op.grid
    P = grid.num_interior
    N = P if N is None else int(N)
    if not 1 <= N <= P:
        raise ModeSolverError(f"requested {N} modes but only {P} interior nodes exist")
    K, G = reduce_operator(op)
    try:
        delta, vecs = scipy.linalg.eig(K, check_finite=True)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise ModeSolverError("dense eigensolver failed") from exc
    order = np.lexsort((delta.imag, -delta.real))[:N]
    delta = delta[order]
    vecs = vecs[:, order]
    knorm = np.abs(K).sum(axis=1).max()
    res = np.abs(K @ vecs - vecs * delta).max(axis=0) / np.abs(vecs).max(axis=0)
    residual = float(np.max(res / (knorm + np.abs(delta))))

    phi = np.empty((grid.size, N), dtype=complex)
    phi[grid.interior_indices] = vecs
    phi[op.constraint_rows] = G @ vecs
    peak = phi[np.abs(phi).argmax(axis=0), np.arange(N)]
    phi /= peak

    basis = ModeBasis(grid, delta, principal_sqrt(delta), phi, segment, bc, residual)
    bad = basis.lower_half_plane_count()
    if bad:
        warnings.warn(
            f"segment {segment}: {bad} eigenvalues lie below the real axis "
            "beyond tolerance; proceeding with the Im >= 0 square-root branch",
            RuntimeWarning,
            stacklevel=2,
        )
    log.debug("segment %d: %d modes, residual %.2e", segment, N, residual)
    return basis
