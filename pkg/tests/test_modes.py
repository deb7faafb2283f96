import warnings

import numpy as np
import pytest

from layered_nmm.chebdiff import CollocationGrid, stretched_sturm_liouville
from layered_nmm.matcher import segment_basis, transverse_grid
from layered_nmm.modes import (
    DIRICHLET,
    BoundarySpec,
    ModeSolverError,
    principal_sqrt,
    solve_modes,
    with_boundary,
)
from layered_nmm.pml import StretchProfile
from layered_nmm.scene import segment_decomposition


def uniform_operator(k0=2.0, points=64, a=-3.55, b=3.55):
    g = CollocationGrid([a, b], points)
    return stretched_sturm_liouville(g, None, np.ones(g.size), k0)


def test_principal_sqrt_branch():
    w = principal_sqrt(np.array([4.0, -4.0, 1j, -1j, -1 + 0j]))
    assert np.allclose(w, [2, 2j, np.exp(1j * np.pi / 4), -np.exp(-1j * np.pi / 4), 1j])
    assert np.all(w.imag >= 0)


def test_dirichlet_uniform_spectrum():
    k0 = 2.0
    basis = solve_modes(uniform_operator(k0), N=10)
    exact = k0**2 - (np.arange(1, 11) * np.pi / 7.1) ** 2
    assert np.allclose(basis.delta, exact, rtol=1e-10)
    assert np.max(np.abs(basis.phi)) == pytest.approx(1.0)
    assert basis.residual < 1e-12


def test_robin_mode_satisfies_its_boundary_rows():
    k0, beta = 3.0, 1.7
    op = uniform_operator(k0, 40, -1.0, 1.0)
    bc = BoundarySpec(top=beta, bottom=beta)
    basis = solve_modes(with_boundary(op, bc, None), N=5, bc=bc)
    g = op.grid
    dphi = g.derivative(basis.phi)
    assert np.allclose(dphi[-1] - 1j * beta * basis.phi[-1], 0, atol=1e-8)
    assert np.allclose(dphi[0] + 1j * beta * basis.phi[0], 0, atol=1e-8)
    # each mode solves phi'' + (k0^2 - delta) ... = 0 in the interior
    d2 = g.derivative(dphi)
    r = d2 + (k0**2 - basis.delta) * basis.phi
    assert np.max(np.abs(r[g.interior_indices])) < 1e-6


def test_too_many_modes_raises():
    with pytest.raises(ModeSolverError):
        solve_modes(uniform_operator(points=8), N=100)


def test_stretched_spectrum_in_upper_half_plane(example1):
    scene = example1
    grid = transverse_grid(scene)
    seg = segment_decomposition(scene)[0]
    basis = segment_basis(scene, seg, grid, DIRICHLET)
    assert basis.size == scene.num_modes
    assert basis.lower_half_plane_count() == 0


def test_warning_for_lower_half_plane_eigenvalues():
    # a gain layer (negative sigma reversed by a lossy sign) is simulated by
    # handing the solver the conjugate of a stretched operator
    g = CollocationGrid([-1.5, -1.0, 1.0, 1.5], 16)
    op = stretched_sturm_liouville(g, StretchProfile(2.0, 0.5, 4.0), np.ones(g.size), 3.0)
    conj = type(op)(op.matrix.conj(), op.constraint_rows, op.flux.conj(), g)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        basis = solve_modes(conj)
    assert basis.lower_half_plane_count() > 0
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
