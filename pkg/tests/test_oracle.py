import numpy as np
import pytest

from layered_nmm.oracle import (
    OracleError,
    fd_solve,
    hankel_line_source,
    layered_plane_wave,
    snap_spacing,
)
from layered_nmm.scene import parse_scene
from layered_nmm.specfun import line_source_field

SMALL = """
lambda = 1
[background]
interfaces = 0
eps = 2.25, 1
[inhomogeneity[0]]
x_lo = -0.25
x_hi = 0.25
y0 = -0.25
y1 = 0.25
eps = {eps}
{extra}
[pml]
L1 = 2
L2 = 2
d1 = 0.25
d2 = 0.25
sigma = 20
m = 2
[incidence.plane]
theta_deg = 20
[nmm]
N = 60
"""


def small_scene(eps="const:3", extra=""):
    return parse_scene(SMALL.format(eps=eps, extra=extra))


def fresnel(k0, theta, n_top, n_bot):
    a = k0 * n_top * np.sin(theta)
    bp = k0 * n_top * np.cos(theta)
    bm = np.sqrt(complex(k0**2 * n_bot**2 - a**2))
    bm = bm if bm.imag >= 0 else -bm
    return (bp - bm) / (bp + bm)


def slab_airy(k0, theta, eps, t):
    """Reflection of a single slab of thickness t on [-t, 0] (Airy sum)."""
    a = k0 * np.sqrt(eps[0]) * np.sin(theta)
    b = [np.sqrt(complex(k0**2 * e - a**2)) for e in eps]
    r01 = (b[0] - b[1]) / (b[0] + b[1])
    r12 = (b[1] - b[2]) / (b[1] + b[2])
    ph = np.exp(2j * b[1] * t)
    return (r01 + r12 * ph) / (1 + r01 * r12 * ph)


@pytest.mark.parametrize("theta", [0.0, 0.3, 0.7])
def test_transfer_matrix_matches_fresnel(theta):
    w = layered_plane_wave(5.0, theta, [0.0], [4.0, 1.0])
    assert abs(w.reflection - fresnel(5.0, theta, 2.0, 1.0)) < 1e-13
    assert abs(w.transmission - (1 + w.reflection)) < 1e-13


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.0])
def test_transfer_matrix_matches_slab_formula(theta):
    t = 0.37
    w = layered_plane_wave(4.0, theta, [0.0, -t], [2.0, 5.0, 1.5])
    assert abs(w.reflection - slab_airy(4.0, theta, [2.0, 5.0, 1.5], t)) < 1e-12
    b = w.betas
    flux = abs(w.reflection) ** 2 + (b[-1].real / b[0].real) * abs(w.transmission) ** 2
    assert abs(flux - 1) < 1e-12


def test_layered_wave_is_c1_across_interfaces():
    w = layered_plane_wave(6.0, 0.5, [0.3, -0.4], [3.0, 1.0, 2.0])
    h = 1e-7
    for yk in (0.3, -0.4):
        above = w.profile_factor(np.array([yk + h, yk + 2 * h]))
        below = w.profile_factor(np.array([yk - h, yk - 2 * h]))
        assert abs(above[0] - below[0]) < 1e-5
        d_above = (above[1] - above[0]) / h
        d_below = (below[0] - below[1]) / h
        assert abs(d_above - d_below) < 1e-4 * abs(d_above)


def test_hankel_reference_matches_own_special_functions():
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-2, 2, (2, 50))
    a = hankel_line_source(x, y, (0.1, 0.2), 7.0)
    b = line_source_field(x, y, (0.1, 0.2), 7.0)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a))
    assert np.isnan(hankel_line_source(0.1, 0.2, (0.1, 0.2), 7.0))


def test_background_only_scene_has_no_scattered_field():
    sol = fd_solve(small_scene("const:2.25; const:1", "breaks = 0"))
    assert np.all(sol.scattered == 0)


def test_snap_spacing_places_features_on_nodes():
    scene = small_scene()
    h = snap_spacing(scene)
    assert h <= scene.wavelength / np.sqrt(3) / 40
    for c in (1.0, 0.25, 0.25):
        assert abs(c / h - round(c / h)) < 1e-9


def test_coarse_grid_is_rejected():
    with pytest.raises(OracleError, match="too coarse"):
        fd_solve(small_scene(), h=0.125)


def test_solution_converges_at_second_order():
    scene = small_scene()
    pts = (np.array([-0.25, 0.0, 0.25, 0.5]), np.array([0.25, 0.0, -0.25, 0.5]))
    vals = [fd_solve(scene, h=h).field(*pts) for h in (1 / 40, 1 / 80, 1 / 160)]
    ratio = np.max(np.abs(vals[0] - vals[1])) / np.max(np.abs(vals[1] - vals[2]))
    assert 2.5 < ratio < 6.0


def test_residual_is_recorded():
    sol = fd_solve(small_scene(), h=1 / 40)
    assert 0 < sol.residual < 1e-10
    grid = sol.field_grid()
    assert grid.values.shape == (grid.y.size, grid.x.size)
