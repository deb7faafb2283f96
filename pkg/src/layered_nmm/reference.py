"""Layered reference solutions and interface jump data.

A reference is an exact (up to discretization) solution of the incident
problem for one segment's stratified profile extended over the whole
plane. Subtracting it from the total field leaves a remainder that is
outgoing in y and can be expanded in PML eigenmodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np
import scipy.linalg

from .chebdiff import CollocationGrid, stretched_sturm_liouville
from .modes import DIRICHLET, BoundarySpec, ModeBasis, principal_sqrt, solve_modes, with_boundary
from .pml import StretchProfile
from .scene import LineSource, PlaneWave, Scene, StratifiedProfile, segment_decomposition
from .specfun import line_source_field, line_source_gradient


class ReferenceError(RuntimeError):
    """Raised when a reference solution cannot be built."""


class Reference(Protocol):
    def value(self, x, y) -> np.ndarray: ...

    def dx(self, x, y) -> np.ndarray: ...


def _stretched(stretch: Optional[StretchProfile], y):
    y = np.asarray(y, dtype=float)
    return y.astype(complex) if stretch is None else np.asarray(stretch.stretch(y))


@dataclass(frozen=True)
class ZeroReference:
    """Reference of a segment whose remainder is the total field itself."""

    def value(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=complex)

    dx = value


def _core_grid(profile: StratifiedProfile, points: int) -> CollocationGrid:
    bp = profile.simplified().finite_breakpoints
    return CollocationGrid(bp, points)


def _robin_bvp(grid: CollocationGrid, eps_eff, k0, bc: BoundarySpec, top_rhs: complex):
    """Solve u'' + k0^2 eps_eff u = 0 with Robin rows and a top-row source."""
    op = with_boundary(stretched_sturm_liouville(grid, None, eps_eff, k0), bc, None)
    rhs = np.zeros(grid.size, dtype=complex)
    rhs[-1] = top_rhs
    # rows mix 1/h^2 and 1/h scales on thin subdomains; equilibrate them
    scale = 1.0 / np.abs(op.matrix).max(axis=1)
    try:
        return scipy.linalg.solve(op.matrix * scale[:, None], rhs * scale), op
    except scipy.linalg.LinAlgError as exc:
        raise ReferenceError("singular layered boundary value problem") from exc


@dataclass(frozen=True)
class PlaneLayeredReference:
    """Plane-wave solution exp(i alpha x) F(y) for a stratified profile.

    F(y) = e^{-i b+ y} + R e^{-2i b+ y_top} e^{i b+ y}   above y_top,
           e^{-i b+ y_top} f(y)                          in the core,
           e^{-i b+ y_top} T e^{-i b- (y - y_bot)}       below y_bot,
    with f from the Robin boundary value problem on [y_bot, y_top],
    R = f(y_top) - 1 and T = f(y_bot). For a two-layer profile the core is
    a single interface and f(y_top) = 1 + R with the Fresnel coefficient.
    """

    k0: float
    theta: float
    alpha: float
    beta_plus: float
    beta_minus: complex
    y_bot: float
    y_top: float
    R_coeff: complex
    T_coeff: complex
    grid: Optional[CollocationGrid] = None
    f_values: Optional[np.ndarray] = None
    y_stretch: Optional[StretchProfile] = None
    bvp_residual: float = 0.0

    def with_stretch(self, stretch: Optional[StretchProfile]) -> "PlaneLayeredReference":
        from dataclasses import replace

        return replace(self, y_stretch=stretch)

    def profile_factor(self, y, include_incident: bool = True) -> np.ndarray:
        """F(y) at real y (stretched into the PML when a stretch is set).

        With ``include_incident`` false the incident term e^{-i b+ y} is
        removed. Inside the top PML the incident term grows exponentially,
        so differences of two references must be formed this way.
        """
        y = np.asarray(y, dtype=float)
        yt = _stretched(self.y_stretch, y)
        bp, bm = self.beta_plus, self.beta_minus
        lead = np.exp(-1j * bp * self.y_top)
        out = np.empty(y.shape, dtype=complex)
        above = y >= self.y_top
        below = (y <= self.y_bot) & ~above
        core = ~(above | below)
        out[above] = self.R_coeff * lead**2 * np.exp(1j * bp * yt[above])
        out[below] = lead * self.T_coeff * np.exp(-1j * bm * (yt[below] - self.y_bot))
        if np.any(core):
            out[core] = lead * self.grid.interpolate(self.f_values, y[core])
        if include_incident:
            out[above] += np.exp(-1j * bp * yt[above])
        else:
            rest = ~above
            out[rest] -= np.exp(-1j * bp * yt[rest])
        return out

    def value(self, x, y, include_incident: bool = True):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.exp(1j * self.alpha * x) * self.profile_factor(y, include_incident)

    def dx(self, x, y, include_incident: bool = True):
        return 1j * self.alpha * self.value(x, y, include_incident)

    def same_incidence(self, other) -> bool:
        return (
            isinstance(other, PlaneLayeredReference)
            and self.alpha == other.alpha
            and self.beta_plus == other.beta_plus
        )


def plane_parameters(k0: float, theta: float, eps_top: float, eps_bottom: float):
    inc = PlaneWave(theta)
    return (
        inc.alpha(k0, eps_top),
        inc.beta_plus(k0, eps_top),
        inc.beta_minus(k0, eps_top, eps_bottom),
    )


def slab_plane_reference(
    profile: StratifiedProfile, theta: float, k0: float, points: int = 32
) -> PlaneLayeredReference:
    """Plane-wave reference for a profile with constant outermost layers.

    Solves f'' + (k0^2 eps - alpha^2) f = 0 on the core with
    f'(y_bot) = -i b- f(y_bot) and f'(y_top) = i b+ (f(y_top) - 2).
    """
    eps_t, eps_b = profile.eps_top, profile.eps_bottom
    alpha, bp, bm = plane_parameters(k0, theta, eps_t, eps_b)
    y_bot, y_top = profile.core()
    if y_bot == y_top:
        R = (bp - bm) / (bp + bm)
        return PlaneLayeredReference(k0, theta, alpha, bp, bm, y_bot, y_top, R, 1 + R)
    grid = _core_grid(profile, points)
    eps_eff = profile.sample_on(grid) - (alpha / k0) ** 2
    bc = BoundarySpec(top=bp, bottom=bm)
    f, op = _robin_bvp(grid, eps_eff, k0, bc, -2j * bp)
    interior = grid.interior_indices
    res = np.abs(op.matrix[interior] @ f).max() / np.abs(f).max() / k0**2
    return PlaneLayeredReference(
        k0, theta, alpha, bp, bm, y_bot, y_top, f[-1] - 1, f[0], grid, f, None, float(res)
    )


def background_plane_reference(scene: Scene, theta: Optional[float] = None, points=None):
    """Reference u_0^tot of the background medium for plane incidence."""
    if theta is None:
        if not isinstance(scene.incidence, PlaneWave):
            raise ReferenceError("background plane reference needs plane-wave incidence")
        theta = scene.incidence.theta
    ref = slab_plane_reference(
        scene.background, theta, scene.k0, points or scene.points_per_subdomain
    )
    return ref.with_stretch(scene.pml.y_stretch)


def fresnel_two_layer(k0: float, theta: float, eps_top: float, eps_bottom: float):
    """Closed-form (R, T) of a single interface at y = 0 (test oracle)."""
    _, bp, bm = plane_parameters(k0, theta, eps_top, eps_bottom)
    R = (bp - bm) / (bp + bm)
    return R, R + 1


# --------------------------------------------------------------------------
# line source


@dataclass(frozen=True)
class LineSourceReference:
    """Layered line-source solution expanded in PML x-modes.

    Above the core the field is the free-space incident wave plus
    sum_j c_top_j e^{i kp_j (y - y_top)} psi_j(x); inside the core it is
    sum_j phi_j(y) psi_j(x); below, sum_j c_bot_j e^{-i km_j (y - y_bot)} psi_j(x).
    """

    k0: float
    n_top: float
    source: tuple[float, float]
    x_basis: ModeBasis
    x_stretch: StretchProfile
    y_bot: float
    y_top: float
    kappa_top: np.ndarray
    kappa_bot: np.ndarray
    c_ps: np.ndarray
    d_ps: np.ndarray
    c_top: np.ndarray
    c_bot: np.ndarray
    core_grid: Optional[CollocationGrid]
    phi_core: Optional[np.ndarray]
    y_stretch: Optional[StretchProfile] = None

    @property
    def num_modes(self) -> int:
        return self.kappa_top.size

    def _psi(self, x, derivative: bool):
        grid = self.x_basis.grid
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.x_stretch.half_width + 1e-12):
            raise ReferenceError("line-source reference is evaluated in the physical x-range only")
        phi = self.x_basis.phi
        if derivative:
            phi = grid.derivative(phi)
        return grid.interpolate(phi, x)

    def _evaluate(self, x, y, derivative: bool):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        shape = x.shape
        x, y = x.ravel(), y.ravel()
        yt = _stretched(self.y_stretch, y)
        psi = self._psi(x, derivative)
        out = np.zeros(x.size, dtype=complex)
        above = y > self.y_top
        below = y < self.y_bot
        core = ~(above | below)
        if np.any(above):
            ya = yt[above]
            amp = self.c_top[None, :] * np.exp(1j * self.kappa_top[None, :] * (ya[:, None] - self.y_top))
            out[above] = np.sum(amp * psi[above], axis=1)
            if derivative:
                out[above] += line_source_gradient(x[above], ya, self.source, self.k0 * self.n_top)[0]
            else:
                out[above] += line_source_field(x[above], ya, self.source, self.k0 * self.n_top)
        if np.any(below):
            yb = yt[below]
            amp = self.c_bot[None, :] * np.exp(-1j * self.kappa_bot[None, :] * (yb[:, None] - self.y_bot))
            out[below] = np.sum(amp * psi[below], axis=1)
        if np.any(core):
            if self.core_grid is None:
                phi_y = np.broadcast_to(self.c_bot, (int(core.sum()), self.num_modes))
            else:
                phi_y = self.core_grid.interpolate(self.phi_core, y[core])
            out[core] = np.sum(phi_y * psi[core], axis=1)
        return out.reshape(shape)

    def value(self, x, y):
        return self._evaluate(x, y, derivative=False)

    def dx(self, x, y):
        return self._evaluate(x, y, derivative=True)


def x_grid_breakpoints(scene: Scene) -> list[float]:
    hx, d = scene.pml.L1 / 2, scene.pml.d1
    pts = {-hx - d, -hx, hx, hx + d}
    for seg in segment_decomposition(scene)[1:]:
        pts.add(seg.x_lo)
    return sorted(pts)


def x_collocation_grid(scene: Scene, points: int) -> CollocationGrid:
    """x-grid of the line-source expansion, sized like the transverse grid."""
    bp = x_grid_breakpoints(scene)
    if scene.num_modes is not None:
        return CollocationGrid.with_interior_total(bp, max(scene.num_modes, 4 * (len(bp) - 1)))
    return CollocationGrid(bp, points)


def line_source_reference(
    scene: Scene,
    profile: StratifiedProfile,
    source: Optional[LineSource] = None,
    points: Optional[int] = None,
) -> LineSourceReference:
    """Reference for a line source above the stratified core of ``profile``.

    Raises:
        ReferenceError: if the source is not strictly above the core.
    """
    if source is None:
        source = scene.incidence
    if not isinstance(source, LineSource):
        raise ReferenceError("line-source reference needs a LineSource")
    points = points or scene.points_per_subdomain
    y_bot, y_top = profile.core()
    if not source.y > y_top:
        raise ReferenceError("source must lie above the stratified core of its segment")
    k0 = scene.k0
    eps_t, eps_b = profile.eps_top, profile.eps_bottom
    n_top = float(np.sqrt(eps_t))

    xs = scene.pml.x_stretch
    xgrid = x_collocation_grid(scene, points)
    op = stretched_sturm_liouville(xgrid, xs, np.zeros(xgrid.size), 0.0)
    xbasis = solve_modes(with_boundary(op, DIRICHLET, xs), segment=-1)
    delta = xbasis.delta

    x_int = xgrid.points[xgrid.interior_indices]
    xt = np.asarray(xs.stretch(x_int))
    src = (source.x, source.y)
    k = k0 * n_top
    trace = line_source_field(xt, y_top, src, k)
    dtrace = line_source_gradient(xt, y_top, src, k)[1]
    lu = scipy.linalg.lu_factor(xbasis.interior)
    c_ps = scipy.linalg.lu_solve(lu, trace)
    d_ps = scipy.linalg.lu_solve(lu, dtrace)

    kp = principal_sqrt(k0**2 * eps_t + delta)
    km = principal_sqrt(k0**2 * eps_b + delta)
    top_rhs = d_ps - 1j * kp * c_ps

    if y_bot == y_top:
        phi_top = top_rhs / (-1j * (kp + km))
        phi_bot = phi_top
        core_grid = None
        phi_core = None
    else:
        core_grid = _core_grid(profile, points)
        eps_core = profile.sample_on(core_grid)
        phi_core = np.empty((core_grid.size, delta.size), dtype=complex)
        for j, dj in enumerate(delta):
            eps_eff = eps_core + dj / k0**2
            bc = BoundarySpec(top=kp[j], bottom=km[j])
            phi_core[:, j], _ = _robin_bvp(core_grid, eps_eff, k0, bc, top_rhs[j])
        phi_top = phi_core[-1]
        phi_bot = phi_core[0]

    return LineSourceReference(
        k0=k0,
        n_top=n_top,
        source=src,
        x_basis=xbasis,
        x_stretch=xs,
        y_bot=y_bot,
        y_top=y_top,
        kappa_top=kp,
        kappa_bot=km,
        c_ps=c_ps,
        d_ps=d_ps,
        c_top=phi_top - c_ps,
        c_bot=phi_bot,
        core_grid=core_grid,
        phi_core=phi_core,
        y_stretch=scene.pml.y_stretch,
    )


@dataclass(frozen=True)
class InterfaceData:
    """Jumps f = u_ref,right - u_ref,left and g = d/dx of the same at x = x_c."""

    x_c: float
    f: np.ndarray
    g: np.ndarray


def interface_jump_data(ref_left, ref_right, x_c: float, y) -> InterfaceData:
    """Sample f and g at transverse points ``y`` (stretched inside the PML)."""
    y = np.asarray(y, dtype=float)
    if ref_left is ref_right:
        zero = np.zeros(y.shape, dtype=complex)
        return InterfaceData(x_c, zero, zero.copy())
    x = np.full(y.shape, x_c)
    kw = {}
    if isinstance(ref_left, PlaneLayeredReference) and ref_left.same_incidence(ref_right):
        # the shared incident wave cancels exactly; leaving it out avoids
        # its exponential growth in the top PML
        kw = {"include_incident": False}
    f = ref_right.value(x, y, **kw) - ref_left.value(x, y, **kw)
    g = ref_right.dx(x, y, **kw) - ref_left.dx(x, y, **kw)
    return InterfaceData(x_c, f, g)
