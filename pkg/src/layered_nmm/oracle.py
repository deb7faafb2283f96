"""Finite-difference PML solver used as an independent cross-check.

The scattered field u_s = u_tot - u_ref solves

    d/dx(a2/a1 du/dx) + d/dy(a1/a2 du/dy) + a1 a2 k0^2 eps u
        = -a1 a2 k0^2 (eps - eps_ref) u_ref

on a uniform node grid with zero Dirichlet values on the outer boundary.
u_ref is a closed-form field of the medium eps_ref: a transfer-matrix plane
wave in the piecewise-constant background, or the free-space line source
of the top medium. Nothing here reuses the mode-matching code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import scipy.special
from scipy.interpolate import RegularGridInterpolator

from .matcher import FieldGrid
from .pml import StretchProfile
from .scene import LineSource, PlaneWave, Scene, StratifiedProfile, permittivity

RESIDUAL_TOL = 1e-10


class OracleError(RuntimeError):
    """Raised for unresolved grids, unsupported media or a failed solve."""


# --------------------------------------------------------------------------
# closed-form references


@dataclass(frozen=True)
class LayeredPlaneWave:
    """Plane wave in a stack of constant layers by transfer matching.

    Layer l (top to bottom) holds a_l e^{-i b_l (y - top_l)} + r_l e^{i b_l (y - bot_l)},
    with top_0 = 0 and a_0 = 1 so the incident wave is e^{-i b_0 y}. The
    bottom layer has no upgoing part.
    """

    k0: float
    theta: float
    interfaces: tuple[float, ...]
    eps: tuple[float, ...]
    down: np.ndarray
    up: np.ndarray

    @property
    def alpha(self) -> float:
        return self.k0 * np.sqrt(self.eps[0]) * np.sin(self.theta)

    @property
    def betas(self) -> np.ndarray:
        b = np.sqrt(self.k0**2 * np.asarray(self.eps, dtype=complex) - self.alpha**2)
        return np.where(b.imag < 0, -b, b)

    @property
    def reflection(self) -> complex:
        """R with u = e^{-i b+ y} + R e^{i b+ y} in the top layer."""
        y0 = self.interfaces[0]
        return complex(self.up[0] * np.exp(-1j * self.betas[0] * y0))

    @property
    def transmission(self) -> complex:
        """T with u = T e^{-i b- y} in the bottom layer."""
        y1 = self.interfaces[-1]
        return complex(self.down[-1] * np.exp(1j * self.betas[-1] * y1))

    def profile_factor(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        b = self.betas
        ys = self.interfaces
        layer = np.searchsorted(-np.asarray(ys), -y, side="right")
        out = np.zeros(y.shape, dtype=complex)
        for l in range(len(self.eps)):
            sel = layer == l
            if not np.any(sel):
                continue
            yy = y[sel]
            top = ys[l - 1] if l > 0 else 0.0
            bot = ys[l] if l < len(ys) else 0.0
            val = self.down[l] * np.exp(-1j * b[l] * (yy - top))
            if l < len(ys):
                val = val + self.up[l] * np.exp(1j * b[l] * (yy - bot))
            out[sel] = val
        return out

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.exp(1j * self.alpha * x) * self.profile_factor(y)


def layered_plane_wave(k0: float, theta: float, interfaces, eps) -> LayeredPlaneWave:
    """Transfer-matrix plane wave for interfaces (top-down) and layer eps."""
    ys = tuple(float(v) for v in interfaces)
    eps = tuple(float(v) for v in eps)
    if len(eps) != len(ys) + 1:
        raise OracleError("need one more layer than interfaces")
    if not ys:
        return LayeredPlaneWave(k0, theta, ys, eps, np.array([1.0 + 0j]), np.zeros(0, complex))
    L = len(eps)
    alpha = k0 * np.sqrt(eps[0]) * np.sin(theta)
    b = np.sqrt(k0**2 * np.asarray(eps, dtype=complex) - alpha**2)
    b = np.where(b.imag < 0, -b, b)
    # unknowns: up_0, (down_l, up_l) for 0 < l < L-1, down_{L-1}
    n = 2 * (L - 1)

    def col_down(l):
        return 2 * l - 1

    def col_up(l):
        return 2 * l

    A = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    down0 = np.exp(-1j * b[0] * ys[0])
    for k, yk in enumerate(ys):
        upper, lower = k, k + 1
        top_u = ys[upper - 1] if upper > 0 else None
        bot_l = ys[lower] if lower < len(ys) else None
        rv, rd = 2 * k, 2 * k + 1
        # upper layer at its bottom interface yk
        if upper == 0:
            rhs[rv] -= down0
            rhs[rd] -= -1j * b[0] * down0
        else:
            e = np.exp(-1j * b[upper] * (yk - top_u))
            A[rv, col_down(upper)] += e
            A[rd, col_down(upper)] += -1j * b[upper] * e
        A[rv, col_up(upper)] += 1.0
        A[rd, col_up(upper)] += 1j * b[upper]
        # lower layer at its top interface yk
        A[rv, col_down(lower)] -= 1.0
        A[rd, col_down(lower)] -= -1j * b[lower]
        if bot_l is not None:
            e = np.exp(1j * b[lower] * (yk - bot_l))
            A[rv, col_up(lower)] -= e
            A[rd, col_up(lower)] -= 1j * b[lower] * e
    sol = scipy.linalg.solve(A, rhs)
    down = np.empty(L, dtype=complex)
    up = np.empty(L - 1, dtype=complex)
    down[0] = 1.0  # top layer is referenced to y = 0
    up[0] = sol[0]
    for l in range(1, L):
        down[l] = sol[col_down(l)]
        if l < L - 1:
            up[l] = sol[col_up(l)]
    return LayeredPlaneWave(k0, theta, ys, eps, down, up)


def piecewise_constant_layers(profile: StratifiedProfile):
    """(interfaces top-down, eps top-down) of a piecewise-constant profile."""
    prof = profile.simplified()
    eps = []
    for piece in prof.pieces[::-1]:
        if not piece.is_constant:
            raise OracleError("closed-form plane reference needs a piecewise-constant background")
        eps.append(float(piece(0.0)))
    return prof.finite_breakpoints[::-1], eps


def hankel_line_source(x, y, source, k):
    """(i/4) H0(k rho) via scipy, rho continued with Im >= 0; nan at the source."""
    xs, ys = source
    rho = np.sqrt((np.asarray(x, complex) - xs) ** 2 + (np.asarray(y, complex) - ys) ** 2)
    rho = np.where(rho.imag < 0, -rho, rho)
    with np.errstate(all="ignore"):
        out = 0.25j * scipy.special.hankel1(0, k * rho)
    return np.where(rho == 0, np.nan, out)


# --------------------------------------------------------------------------
# FD grid and solve


@dataclass(frozen=True)
class FdGrid:
    """Uniform node grid over the truncated box, nodes at integer multiples of h."""

    h: float
    x: np.ndarray
    y: np.ndarray
    x_stretch: StretchProfile
    y_stretch: StretchProfile

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.size, self.x.size

    @property
    def num_unknowns(self) -> int:
        return (self.x.size - 2) * (self.y.size - 2)


def default_oracle_pml(scene: Scene, h: float, thickness: Optional[float] = None, m: int = 2,
                       attenuation: float = 1e-10) -> tuple[StretchProfile, StretchProfile]:
    """Graded PML of about one wavelength, strong enough for ``attenuation``.

    The stretch targets exp(-k_min int sigma) = attenuation at normal
    incidence in the slowest medium.
    """
    d = thickness if thickness is not None else scene.wavelength
    d = max(h, round(d / h) * h)
    k_min = scene.k0 * np.sqrt(min(scene.eps_top, scene.eps_bottom))
    sigma = -np.log(attenuation) * (m + 1) / (k_min * d)
    return (
        StretchProfile(scene.pml.L1, d, sigma, m),
        StretchProfile(scene.pml.L2, d, sigma, m),
    )


def make_grid(scene: Scene, h: float, stretches=None) -> FdGrid:
    if stretches is None:
        stretches = default_oracle_pml(scene, h)
    xs, ys = stretches
    for half in (xs.half_width, ys.half_width, xs.outer, ys.outer):
        if abs(half / h - round(half / h)) > 1e-9:
            raise OracleError(f"h = {h} does not divide the box and PML extents")
    nx = int(round(xs.outer / h))
    ny = int(round(ys.outer / h))
    x = np.arange(-nx, nx + 1) * h
    y = np.arange(-ny, ny + 1) * h
    return FdGrid(h, x, y, xs, ys)


def snap_spacing(scene: Scene, points_per_wavelength: float = 40.0) -> float:
    """Largest h <= lambda_min / ppw that divides every x and y feature coordinate."""
    target = scene.wavelength / np.sqrt(_max_eps(scene)) / points_per_wavelength
    coords = [scene.pml.L1 / 2, scene.pml.L2 / 2]
    coords += scene.background.finite_breakpoints
    for inh in scene.inhomogeneities:
        coords += [inh.x_lo, inh.x_hi, inh.y0, inh.y1]
    coords = [abs(c) for c in coords if c != 0]
    for n in range(1, 100000):
        h = min(coords) / n
        if h > target:
            continue
        if all(abs(c / h - round(c / h)) < 1e-9 for c in coords):
            return h
    raise OracleError("no common grid spacing found")


def _max_eps(scene: Scene) -> float:
    y = np.linspace(-scene.pml.L2 / 2, scene.pml.L2 / 2, 2001)
    vals = [float(np.max(scene.background(y)))]
    for inh in scene.inhomogeneities:
        yy = np.linspace(inh.y0, inh.y1, 2001)[1:-1]
        vals.append(float(np.max(inh.profile(yy))))
    return max(vals)


def _second_difference(n_int: int, inv_alpha_mid: np.ndarray, h: float) -> sp.csr_matrix:
    """-D^T diag(1/alpha_mid) D / h^2 acting on interior nodes (Dirichlet ends)."""
    D = sp.diags([-np.ones(n_int), np.ones(n_int)], [0, -1], shape=(n_int + 1, n_int))
    return -(D.T @ sp.diags(inv_alpha_mid) @ D) / h**2


def node_average(func, x, y, h):
    """Mean of ``func`` over the four cells around every node."""
    X, Y = np.meshgrid(x, y)
    acc = np.zeros(X.shape)
    for sx in (-0.5, 0.5):
        for sy in (-0.5, 0.5):
            acc += func(X + sx * h, Y + sy * h)
    return acc / 4


@dataclass
class FdSolution:
    """Oracle result: the scattered field on every node plus its reference."""

    scene: Scene
    grid: FdGrid
    scattered: np.ndarray
    reference: object
    residual: float

    def _interp(self):
        g = self.grid
        return RegularGridInterpolator((g.y, g.x), self.scattered, method="linear")

    def field(self, x, y) -> np.ndarray:
        """u_tot at physical points: bilinear u_s plus the exact reference."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        hx, hy = self.scene.pml.L1 / 2, self.scene.pml.L2 / 2
        if np.any(np.abs(x) > hx + 1e-12) or np.any(np.abs(y) > hy + 1e-12):
            raise OracleError("field evaluation is limited to the physical box")
        pts = np.stack([y.ravel(), x.ravel()], axis=-1)
        us = self._interp()(pts).reshape(x.shape)
        return us + self.reference(x, y)

    def field_grid(self, label: str = "fd") -> FieldGrid:
        """u_tot at the grid nodes inside the physical box."""
        g = self.grid
        hx, hy = self.scene.pml.L1 / 2, self.scene.pml.L2 / 2
        ix = np.abs(g.x) <= hx + 1e-12
        iy = np.abs(g.y) <= hy + 1e-12
        X, Y = np.meshgrid(g.x[ix], g.y[iy])
        vals = self.scattered[np.ix_(iy, ix)] + self.reference(X, Y)
        return FieldGrid(g.x[ix], g.y[iy], vals, label)


def scene_reference(scene: Scene):
    """(u_ref(x, y), eps_ref(x, y)) for the scene's incidence."""
    inc = scene.incidence
    if isinstance(inc, PlaneWave):
        interfaces, eps = piecewise_constant_layers(scene.background)
        ref = layered_plane_wave(scene.k0, inc.theta, interfaces, eps)
        bg = scene.background

        def eps_ref(x, y):
            return np.asarray(bg(np.ravel(y))).reshape(np.shape(y))

        return ref, eps_ref
    if isinstance(inc, LineSource):
        k = scene.k0 * np.sqrt(scene.eps_top)
        src = (inc.x, inc.y)

        def ref(x, y):
            return hankel_line_source(x, y, src, k)

        top = scene.eps_top
        return ref, lambda x, y: np.full(np.shape(x), top)
    raise OracleError("unsupported incidence")


def fd_solve(scene: Scene, h: Optional[float] = None, stretches=None,
             points_per_wavelength: float = 40.0) -> FdSolution:
    """Solve the scattered-field PML problem by second-order finite differences.

    Args:
        scene: Scene to solve; its own PML parameters are not used.
        h: Grid spacing; by default the largest spacing resolving
            ``points_per_wavelength`` in the densest medium that places
            every interface on a node.
        stretches: (x, y) StretchProfile pair of the oracle's own PML.

    Raises:
        OracleError: if k_max h > 0.5, the grid is too large, or the solve fails.
    """
    if h is None:
        h = snap_spacing(scene, points_per_wavelength)
    k_max = scene.k0 * np.sqrt(_max_eps(scene))
    if k_max * h > 0.5:
        raise OracleError(f"grid too coarse: k_max h = {k_max * h:.3f} > 0.5")
    grid = make_grid(scene, h, stretches)
    if grid.num_unknowns > 1_500_000:
        raise OracleError("grid exceeds the oracle's size cap")
    xs, ys = grid.x_stretch, grid.y_stretch
    xi, yi = grid.x[1:-1], grid.y[1:-1]
    nx, ny = xi.size, yi.size

    a1 = xs.alpha_at(xi)
    a2 = ys.alpha_at(yi)
    a1_mid = xs.alpha_at(0.5 * (grid.x[1:] + grid.x[:-1]))
    a2_mid = ys.alpha_at(0.5 * (grid.y[1:] + grid.y[:-1]))
    Lx = _second_difference(nx, 1.0 / a1_mid, h)
    Ly = _second_difference(ny, 1.0 / a2_mid, h)

    def eps_fun(X, Y):
        Xc = np.clip(X, -xs.outer, xs.outer)
        Yc = np.clip(Y, -ys.outer, ys.outer)
        return permittivity(scene, Xc, Yc)

    ref, eps_ref_fun = scene_reference(scene)
    eps = node_average(eps_fun, xi, yi, h)
    eps_ref = node_average(eps_ref_fun, xi, yi, h)
    A1A2 = np.outer(a2, a1)
    k0 = scene.k0
    A = (
        sp.kron(sp.diags(a2), Lx)
        + sp.kron(Ly, sp.diags(a1))
        + sp.diags((A1A2 * k0**2 * eps).ravel())
    ).tocsc()

    contrast = eps - eps_ref
    rhs = np.zeros(contrast.shape, dtype=complex)
    mask = contrast != 0
    if np.any(mask):
        X, Y = np.meshgrid(xi, yi)
        Xt = np.asarray(xs.stretch(X[mask]))
        Yt = np.asarray(ys.stretch(Y[mask]))
        if isinstance(scene.incidence, LineSource):
            u_ref = ref(Xt, Yt)
        else:
            if np.any(np.abs(X[mask]) > xs.half_width) or np.any(np.abs(Y[mask]) > ys.half_width):
                raise OracleError("plane-wave contrast must stay inside the physical box")
            u_ref = ref(X[mask], Y[mask])
        if not np.all(np.isfinite(u_ref)):
            raise OracleError("reference is singular where the contrast is nonzero")
        rhs[mask] = -A1A2[mask] * k0**2 * contrast[mask] * u_ref
    b = rhs.ravel()
    if np.any(b):
        try:
            u = spla.spsolve(A, b)
        except RuntimeError as exc:
            raise OracleError("sparse direct solve failed") from exc
        res = float(np.abs(A @ u - b).max() / np.abs(b).max())
        if not np.isfinite(res) or res > RESIDUAL_TOL:
            raise OracleError(f"sparse solve residual {res:.3e} above {RESIDUAL_TOL}")
    else:
        u, res = np.zeros_like(b), 0.0
    full = np.zeros(grid.shape, dtype=complex)
    full[1:-1, 1:-1] = u.reshape(ny, nx)
    return FdSolution(scene, grid, full, ref, res)
