"""Mode-matching assembly, solve and field reconstruction.

Each segment carries the remainder u_tot - u_ref expanded in its own
transverse eigenmodes. Exterior segments hold one outgoing vector, interior
segments a left-going (c) and a right-going (d) vector. Value and x-derivative
continuity of u_tot are collocated at the interior transverse nodes of every
segment interface, giving a square dense system.

Unknown ordering: segments left to right, within a segment c then d, within a
vector by mode index.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .chebdiff import CollocationGrid, stretched_sturm_liouville
from .modes import DIRICHLET, BoundarySpec, ModeBasis, solve_modes, with_boundary
from .pml import StretchProfile
from .reference import (
    InterfaceData,
    ZeroReference,
    background_plane_reference,
    interface_jump_data,
    line_source_reference,
    slab_plane_reference,
)
from .scene import PlaneWave, Scene, Segment, segment_decomposition, transverse_breakpoints

BC_POLICIES = ("robin", "dirichlet")
RESIDUAL_TOL = 1e-8
FIELD_CHUNK = 4096  # points per batch when summing modal expansions


class MatchError(RuntimeError):
    """Raised for inconsistent matching input or a singular system."""


# --------------------------------------------------------------------------
# transverse grid and bases


def transverse_grid(scene: Scene) -> CollocationGrid:
    """Shared y-grid. With ``num_modes`` set it has exactly that many interior nodes."""
    bp = transverse_breakpoints(scene)
    if scene.num_modes is not None:
        return CollocationGrid.with_interior_total(bp, scene.num_modes)
    return CollocationGrid(bp, scene.points_per_subdomain)


def segment_boundary(scene: Scene, seg: Segment, policy: str = "robin") -> BoundarySpec:
    """Termination of a segment's transverse problem.

    Exterior segments use zero Dirichlet ends. Interior segments use Robin
    ends matched to the non-decaying part of their remainder, unless the
    policy forces Dirichlet.
    """
    if policy not in BC_POLICIES:
        raise MatchError(f"unknown boundary policy {policy!r}")
    if seg.is_exterior or policy == "dirichlet":
        return DIRICHLET
    k0, inc = scene.k0, scene.incidence
    if isinstance(inc, PlaneWave):
        return BoundarySpec(
            top=inc.beta_plus(k0, scene.eps_top),
            bottom=inc.beta_minus(k0, scene.eps_top, scene.eps_bottom),
        )
    return BoundarySpec(top=k0 * np.sqrt(scene.eps_top), bottom=k0 * np.sqrt(scene.eps_bottom))


def segment_basis(scene: Scene, seg: Segment, grid: CollocationGrid, bc: BoundarySpec) -> ModeBasis:
    ys = scene.pml.y_stretch
    eps = seg.profile.sample_on(grid)
    op = stretched_sturm_liouville(grid, ys, eps, scene.k0, seg.profile.discontinuities())
    return solve_modes(with_boundary(op, bc, ys), segment=seg.index, bc=bc)


def segment_references(scene: Scene, segments: Sequence[Segment], points: Optional[int] = None):
    """One reference per segment; segments sharing a reference share the object."""
    inc = scene.incidence
    points = points or scene.points_per_subdomain
    if isinstance(inc, PlaneWave):
        bg = background_plane_reference(scene, points=points)
        refs = []
        for seg in segments:
            if seg.inhomogeneity is None:
                refs.append(bg)
            else:
                ref = slab_plane_reference(seg.profile, inc.theta, scene.k0, points)
                refs.append(ref.with_stretch(scene.pml.y_stretch))
        return refs
    zero = ZeroReference()
    refs = []
    for seg in segments:
        if seg.x_lo < inc.x < seg.x_hi:
            refs.append(line_source_reference(scene, seg.profile, inc, points))
        else:
            refs.append(zero)
    return refs


# --------------------------------------------------------------------------
# axial factors


@dataclass(frozen=True)
class ExteriorPropagator:
    """Axial factors of an exterior segment's outgoing expansion.

    The retained term is e^{-+i w (x~ - x_c)} (minus sign on the left side),
    the reflected term from the Dirichlet wall at x_outer is q times the
    opposite exponential with q = e^{2 i w (x~_outer - x_c)} (sign-adjusted).
    """

    sqrt_delta: np.ndarray
    x_c: float
    x_outer: float
    stretch: StretchProfile

    @property
    def sign(self) -> int:
        """-1 for a left exterior segment, +1 for a right one."""
        return 1 if self.x_outer > self.x_c else -1

    def factor(self, x) -> np.ndarray:
        """(len(x), N) outgoing factors; equals 1 at x = x_c."""
        xt = np.atleast_1d(np.asarray(self.stretch.stretch(np.asarray(x, float)), dtype=complex))
        xc = complex(self.stretch.stretch(self.x_c))
        return np.exp(self.sign * 1j * np.outer(xt - xc, self.sqrt_delta))

    def reflection(self) -> np.ndarray:
        """q_j: reflected-to-outgoing amplitude ratio at x_c."""
        xo = complex(self.stretch.stretch(self.x_outer))
        xc = complex(self.stretch.stretch(self.x_c))
        return np.exp(2j * self.sign * self.sqrt_delta * (xo - xc))

    def drop_bound(self) -> np.ndarray:
        """|e^{i w (x~_outer - x_c)}| = e^{-Im(w) dist - Re(w) int sigma}."""
        dist = abs(self.x_outer - self.x_c)
        w = self.sqrt_delta
        return np.exp(-w.imag * dist - w.real * self.stretch.total_absorption())

    def full_factor(self, x, keep_reflected: bool) -> np.ndarray:
        out = self.factor(x)
        if keep_reflected:
            xt = np.atleast_1d(np.asarray(self.stretch.stretch(np.asarray(x, float)), dtype=complex))
            xc = complex(self.stretch.stretch(self.x_c))
            out = out - self.reflection() * np.exp(-self.sign * 1j * np.outer(xt - xc, self.sqrt_delta))
        return out


def exterior_propagators(basis: ModeBasis, x_c: float, x_outer: float, stretch_x: StretchProfile):
    return ExteriorPropagator(basis.sqrt_delta, x_c, x_outer, stretch_x)


def _end_factors(seg: Segment, sqrt_delta, at_right_end: bool, q):
    """{block: (value, d/dx)} factors of a segment's unknown blocks at one end."""
    w = sqrt_delta
    if seg.is_exterior:
        if seg.index == 0:
            return {"c": (1 - q, -1j * w * (1 + q))}
        return {"d": (1 - q, 1j * w * (1 + q))}
    E = np.exp(1j * w * (seg.x_hi - seg.x_lo))
    if at_right_end:
        return {"c": (np.ones_like(w), -1j * w), "d": (E, 1j * w * E)}
    return {"c": (E, -1j * w * E), "d": (np.ones_like(w), 1j * w)}


# --------------------------------------------------------------------------
# system


@dataclass(frozen=True)
class MatchSystem:
    """Dense square matching system A x = b and its column bookkeeping."""

    matrix: np.ndarray
    rhs: np.ndarray
    blocks: tuple[tuple[int, str, int], ...]  # (segment, "c"/"d", column offset)
    num_modes: int

    @property
    def size(self) -> int:
        return self.rhs.size

    def block_offset(self, segment: int, name: str) -> int:
        for s, n, off in self.blocks:
            if s == segment and n == name:
                return off
        raise KeyError((segment, name))


def unknown_blocks(segments: Sequence[Segment], N: int):
    blocks = []
    off = 0
    last = len(segments) - 1
    for seg in segments:
        names = ("c",) if seg.index == 0 else ("d",) if seg.index == last else ("c", "d")
        for name in names:
            blocks.append((seg.index, name, off))
            off += N
    return tuple(blocks)


def assemble_system(
    segments: Sequence[Segment],
    bases: Sequence[ModeBasis],
    jumps: Sequence[InterfaceData],
    k0: float,
    stretch_x: Optional[StretchProfile] = None,
    keep_reflected: bool = False,
) -> MatchSystem:
    """Collocate value and x-derivative continuity at every interface.

    Derivative rows are divided by k0 so both row families have comparable
    scale.

    Raises:
        MatchError: if the bases do not share one transverse grid with
            as many interior nodes as modes.
    """
    grid = bases[0].grid
    N = bases[0].size
    for b in bases:
        if b.grid is not grid and not np.array_equal(b.grid.points, grid.points):
            raise MatchError("segment bases use different transverse grids")
        if b.size != N:
            raise MatchError("segment bases retain different numbers of modes")
    if grid.num_interior != N:
        raise MatchError("square collocation needs N equal to the number of interior nodes")
    if len(jumps) != len(segments) - 1:
        raise MatchError("need one InterfaceData per interface")
    if keep_reflected and stretch_x is None:
        raise MatchError("keeping the reflected term needs the x-stretch")

    blocks = unknown_blocks(segments, N)
    offsets = {(s, n): off for s, n, off in blocks}
    size = len(blocks) * N
    A = np.zeros((size, size), dtype=complex)
    b = np.zeros(size, dtype=complex)

    def reflections(seg, basis):
        if not (seg.is_exterior and keep_reflected):
            return np.zeros(N, dtype=complex)
        x_c = seg.x_hi if seg.index == 0 else seg.x_lo
        x_out = seg.x_lo if seg.index == 0 else seg.x_hi
        return exterior_propagators(basis, x_c, x_out, stretch_x).reflection()

    for k, jump in enumerate(jumps):
        rows_v = slice(2 * k * N, (2 * k + 1) * N)
        rows_d = slice((2 * k + 1) * N, (2 * k + 2) * N)
        for seg, sign, right_end in ((segments[k], 1.0, True), (segments[k + 1], -1.0, False)):
            basis = bases[seg.index]
            phi = basis.interior
            q = reflections(seg, basis)
            for name, (val, der) in _end_factors(seg, basis.sqrt_delta, right_end, q).items():
                cols = slice(offsets[seg.index, name], offsets[seg.index, name] + N)
                A[rows_v, cols] += sign * phi * val[None, :]
                A[rows_d, cols] += sign * phi * (der[None, :] / k0)
        b[rows_v] = jump.f
        b[rows_d] = jump.g / k0
    return MatchSystem(A, b, blocks, N)


@dataclass(frozen=True)
class SolveReport:
    coeffs: np.ndarray
    residual: float
    condition: float


def solve_system(system: MatchSystem) -> SolveReport:
    """Dense LU solve with a residual check and a 1-norm condition estimate.

    A large condition estimate alone is not an error: modes localized in
    the transverse PML make the modal columns nearly dependent while the
    solve stays backward stable. The residual is what is checked.

    Raises:
        MatchError: if the matrix is exactly singular or the residual
            exceeds its threshold.
    """
    A, b = system.matrix, system.rhs
    if not np.any(b):
        return SolveReport(np.zeros_like(b), 0.0, float("nan"))
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    anorm = np.abs(A).sum(axis=0).max()
    rcond, info = scipy.linalg.lapack.zgecon(lu, anorm, norm="1")
    cond = float("inf") if rcond == 0 else 1.0 / rcond
    x = scipy.linalg.lu_solve((lu, piv), b)
    if not np.all(np.isfinite(x)):
        raise MatchError(f"matching matrix is numerically singular (cond ~ {cond:.3e})")
    r = np.abs(A @ x - b).max()
    scale = np.abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()
    residual = float(r / scale)
    if residual > RESIDUAL_TOL:
        raise MatchError(f"solve residual {residual:.3e} above {RESIDUAL_TOL} (cond ~ {cond:.3e})")
    return SolveReport(x, residual, cond)


# --------------------------------------------------------------------------
# field


@dataclass(frozen=True)
class FieldGrid:
    """Total field on a tensor grid inside the physical box.

    ``values[i, j]`` is u_tot(x[j], y[i]).
    """

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.values.shape != (self.y.size, self.x.size):
            raise ValueError("values must have shape (len(y), len(x))")

    def rows(self):
        X, Y = np.meshgrid(self.x, self.y)
        for xv, yv, u in zip(X.ravel(), Y.ravel(), self.values.ravel()):
            yield xv, yv, u

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "re_u", "im_u", "abs_u"])
            for xv, yv, u in self.rows():
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(u.real)), repr(float(u.imag)), repr(float(abs(u)))])
        return path

    def sample(self, x, y) -> np.ndarray:
        """Bilinear values at points inside the grid's extent."""
        from scipy.interpolate import RegularGridInterpolator

        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        interp = RegularGridInterpolator((self.y, self.x), self.values)
        return interp(np.stack([y.ravel(), x.ravel()], axis=-1)).reshape(x.shape)

    @classmethod
    def from_csv(cls, path, label: str = "") -> "FieldGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        x = np.unique(data[:, 0])
        y = np.unique(data[:, 1])
        vals = (data[:, 2] + 1j * data[:, 3]).reshape(y.size, x.size)
        return cls(x, y, vals, label)


@dataclass
class NMMSolution:
    """Solved mode-matching problem; evaluates u_tot anywhere in the physical box."""

    scene: Scene
    segments: list
    bases: list
    references: list
    system: MatchSystem
    report: SolveReport
    bc_policy: str
    keep_reflected: bool = False
    timings: dict = field(default_factory=dict)

    @property
    def num_modes(self) -> int:
        return self.system.num_modes

    def coefficients(self, segment: int, name: str) -> np.ndarray:
        off = self.system.block_offset(segment, name)
        return self.report.coeffs[off : off + self.num_modes]

    def segment_of(self, x) -> np.ndarray:
        """Segment index for each x; an interface point belongs to its left segment."""
        edges = np.array([s.x_hi for s in self.segments[:-1]])
        return np.searchsorted(edges, np.asarray(x, float), side="left")

    def remainder(self, seg: Segment, x, y) -> np.ndarray:
        basis = self.bases[seg.index]
        phi_y = basis.evaluate(y)
        w = basis.sqrt_delta
        x = np.asarray(x, float)
        if seg.is_exterior:
            x_c = seg.x_hi if seg.index == 0 else seg.x_lo
            x_out = seg.x_lo if seg.index == 0 else seg.x_hi
            prop = exterior_propagators(basis, x_c, x_out, self.scene.pml.x_stretch)
            coef = self.coefficients(seg.index, "c" if seg.index == 0 else "d")
            axial = prop.full_factor(x, self.keep_reflected) * coef[None, :]
        else:
            c = self.coefficients(seg.index, "c")
            d = self.coefficients(seg.index, "d")
            axial = c[None, :] * np.exp(-1j * np.outer(x - seg.x_hi, w))
            axial = axial + d[None, :] * np.exp(1j * np.outer(x - seg.x_lo, w))
        return np.sum(axial * phi_y, axis=1)

    def field(self, x, y) -> np.ndarray:
        """u_tot at scattered points (x, y) inside the physical box.

        Raises:
            MatchError: for points outside the physical box.
        """
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        shape = x.shape
        x, y = x.ravel(), y.ravel()
        hx, hy = self.scene.pml.L1 / 2, self.scene.pml.L2 / 2
        tol = 1e-12
        if np.any(np.abs(x) > hx + tol) or np.any(np.abs(y) > hy + tol):
            raise MatchError("field evaluation is limited to the physical box")
        out = np.empty(x.size, dtype=complex)
        which = self.segment_of(x)
        for seg in self.segments:
            idx = np.flatnonzero(which == seg.index)
            ref = self.references[seg.index]
            for start in range(0, idx.size, FIELD_CHUNK):
                sel = idx[start : start + FIELD_CHUNK]
                out[sel] = self.remainder(seg, x[sel], y[sel]) + ref.value(x[sel], y[sel])
        return out.reshape(shape)

    def field_grid(self, x, y, label: str = "nmm") -> FieldGrid:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        X, Y = np.meshgrid(x, y)
        return FieldGrid(x, y, self.field(X, Y), label)


def solve_scene(scene: Scene, bc_policy: str = "robin", keep_reflected: bool = False) -> NMMSolution:
    """Run the full mode-matching pipeline for ``scene``."""
    t0 = time.perf_counter()
    grid = transverse_grid(scene)
    segments = segment_decomposition(scene)
    cache: dict = {}
    bases = []
    for seg in segments:
        bc = segment_boundary(scene, seg, bc_policy)
        key = (seg.inhomogeneity, bc)
        if key not in cache:
            cache[key] = segment_basis(scene, seg, grid, bc)
        bases.append(cache[key])
    t1 = time.perf_counter()
    refs = segment_references(scene, segments)
    y_int = grid.points[grid.interior_indices]
    jumps = [
        interface_jump_data(refs[k], refs[k + 1], segments[k].x_hi, y_int)
        for k in range(len(segments) - 1)
    ]
    t2 = time.perf_counter()
    system = assemble_system(segments, bases, jumps, scene.k0, scene.pml.x_stretch, keep_reflected)
    report = solve_system(system)
    t3 = time.perf_counter()
    timings = {"modes": t1 - t0, "references": t2 - t1, "solve": t3 - t2}
    return NMMSolution(scene, segments, bases, refs, system, report, bc_policy, keep_reflected, timings)
