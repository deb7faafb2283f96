"""Acceptance criteria 1-11 at their stated tolerances.

Each test records one pass/fail line (printed in the terminal summary)
before asserting, so a failing criterion still reports its measured value.
"""

import time

import numpy as np
import pytest

from conftest import S_EXAMPLE1, S_EXAMPLE2, SCENES, null_scene, record_acceptance, tensor_points
from layered_nmm.chebdiff import CollocationGrid, stretched_sturm_liouville
from layered_nmm.cli import default_evaluation_set, relative_error
from layered_nmm.matcher import segment_basis, solve_scene, transverse_grid
from layered_nmm.modes import DIRICHLET, solve_modes
from layered_nmm.oracle import fd_solve, layered_plane_wave
from layered_nmm.reference import (
    background_plane_reference,
    fresnel_two_layer,
    line_source_reference,
    slab_plane_reference,
)
from layered_nmm.scene import (
    ConstPiece,
    PlaneWave,
    PmlSpec,
    Scene,
    StratifiedProfile,
    load_scene,
    permittivity,
    segment_decomposition,
    source_segment,
)
from layered_nmm.specfun import besselj, bessely, hankel1, line_source_gradient


def with_pml_thickness(scene, d):
    p = scene.pml
    return scene.replace(pml=PmlSpec(p.L1, p.L2, d, d, p.sigma, p.m))


def exact_background(scene):
    """Closed-form u_0^tot of the scene's layered background (transfer matrix)."""
    interfaces = scene.background.finite_breakpoints[::-1]
    eps = [float(scene.background(y)) for y in
           np.concatenate([[interfaces[0] + 1], 0.5 * (np.array(interfaces[:-1]) + interfaces[1:]),
                           [interfaces[-1] - 1]])]
    return layered_plane_wave(scene.k0, scene.incidence.theta, interfaces, eps)


def box_grid(scene, n=50):
    hx, hy = scene.pml.L1 / 2, scene.pml.L2 / 2
    return tensor_points(np.linspace(-hx, hx, n), np.linspace(-hy, hy, n))


# --------------------------------------------------------------------------


def test_criterion_01_uniform_dirichlet_spectrum(example1):
    k0 = example1.k0
    t0 = time.perf_counter()
    grid = CollocationGrid([-3.55, -2.5, 0.0, 2.5, 3.55], 64)
    op = stretched_sturm_liouville(grid, None, np.ones(grid.size), k0)
    basis = solve_modes(op, N=10)
    elapsed = time.perf_counter() - t0
    exact = k0**2 - (np.arange(1, 11) * np.pi / 7.1) ** 2
    err = float(np.max(np.abs(basis.delta - exact) / np.abs(exact)))
    ok = err <= 1e-8 and elapsed < 1.0
    record_acceptance(1, ok, f"max rel err {err:.2e} (<= 1e-8), {elapsed:.2f} s (< 1 s)")
    assert ok


def test_criterion_02_exterior_spectrum_in_upper_half_plane(example1):
    scene = example1.replace(num_modes=950)
    assert (scene.pml.sigma, scene.pml.d1, scene.pml.m) == (70, 0.05, 0)
    t0 = time.perf_counter()
    grid = transverse_grid(scene)
    seg = segment_decomposition(scene)[0]
    basis = segment_basis(scene, seg, grid, DIRICHLET)
    elapsed = time.perf_counter() - t0
    bad = basis.lower_half_plane_count(1e-6)
    ok = basis.size == 950 and bad == 0 and elapsed < 30
    record_acceptance(2, ok, f"{bad} of {basis.size} below the axis, min Im {basis.delta.imag.min():.1e}, "
                             f"{elapsed:.1f} s (< 30 s)")
    assert ok


def test_criterion_03_fresnel(example1):
    k0 = example1.k0
    R0, _ = fresnel_two_layer(k0, 0.0, 4.0, 1.0)
    R0_solver = background_plane_reference(example1, 0.0).R_coeff
    err0 = max(abs(R0 - 1 / 3), abs(R0_solver - 1 / 3))
    thetas = (np.pi / 6 + 0.01, np.pi / 4, np.pi / 3)
    err_tir = max(
        max(abs(abs(fresnel_two_layer(k0, t, 4.0, 1.0)[0]) - 1),
            abs(abs(background_plane_reference(example1, t).R_coeff) - 1))
        for t in thetas
    )
    ok = err0 <= 1e-12 and err_tir <= 1e-10
    record_acceptance(3, ok, f"|R(0) - 1/3| = {err0:.1e} (<= 1e-12), max ||R| - 1| = {err_tir:.1e} (<= 1e-10)")
    assert ok


def test_criterion_04_slab_against_transfer_matrix(example1):
    k0 = example1.k0
    rng = np.random.default_rng(2024)
    worst_r = worst_t = worst_flux = 0.0
    cases = 0
    while cases < 20:
        eps_top, eps_slab, eps_bot = rng.uniform(1.0, 9.0, 3)
        theta = rng.uniform(0.0, 1.2)
        alpha = k0 * np.sqrt(eps_top) * np.sin(theta)
        if k0**2 * eps_bot - alpha**2 < 0.05 * k0**2:
            continue  # keep the transmitted wave propagating
        y0 = rng.uniform(-1.0, -0.1)
        y1 = rng.uniform(0.0, 1.0)
        prof = StratifiedProfile((-np.inf, y0, y1, np.inf),
                                 (ConstPiece(eps_bot), ConstPiece(eps_slab), ConstPiece(eps_top)))
        ref = slab_plane_reference(prof, theta, k0)
        tm = layered_plane_wave(k0, theta, [y1, y0], [eps_top, eps_slab, eps_bot])
        # magnitudes are independent of where each formulation references its phases
        worst_r = max(worst_r, abs(abs(ref.R_coeff) - abs(tm.reflection)) / max(abs(tm.reflection), 1e-3))
        worst_t = max(worst_t, abs(abs(ref.T_coeff) - abs(tm.transmission)) / abs(tm.transmission))
        flux = abs(ref.R_coeff) ** 2 + ref.beta_minus.real / ref.beta_plus * abs(ref.T_coeff) ** 2
        worst_flux = max(worst_flux, abs(flux - 1))
        cases += 1
    ok = max(worst_r, worst_t, worst_flux) <= 1e-8
    record_acceptance(4, ok, f"|R2| err {worst_r:.1e}, |T2| err {worst_t:.1e}, flux err {worst_flux:.1e} "
                             f"over {cases} cases (<= 1e-8)")
    assert ok


def test_criterion_05_null_scatterer(example1):
    pts = box_grid(example1)
    results = {}
    for theta in (0.0, np.pi / 6, 1.5):
        scene = null_scene(example1).replace(incidence=PlaneWave(theta), num_modes=200)
        exact = exact_background(scene)
        for policy in ("robin", "dirichlet"):
            sol = solve_scene(scene, policy)
            results[(theta, policy)] = relative_error(sol, exact(*pts), pts)
    worst = max(results.values())
    ok = worst <= 1e-6
    record_acceptance(5, ok, f"max e_rel {worst:.1e} over 3 angles x 2 policies, 50x50 grid (<= 1e-6)")
    assert ok


@pytest.mark.slow
def test_criterion_06_example1_against_fd_oracle(example1):
    scene = example1.replace(num_modes=300)
    pts = tensor_points(*S_EXAMPLE1)
    t0 = time.perf_counter()
    sol = solve_scene(scene)
    fd = fd_solve(scene)
    elapsed = time.perf_counter() - t0
    e = relative_error(sol, fd, pts)
    ok = e <= 5e-2 and elapsed <= 300
    record_acceptance(6, ok, f"e_rel {e:.2e} (<= 5e-2) with FD h = {fd.grid.h:.4f}, {elapsed:.1f} s (<= 300 s)")
    assert ok


@pytest.mark.slow
def test_criterion_07_pml_exponential_convergence(example1):
    assert (example1.pml.sigma, example1.pml.m, example1.incidence.theta) == (70, 0, 0.0)
    pts = tensor_points(*S_EXAMPLE1)
    n_ref = 900
    reference = solve_scene(with_pml_thickness(example1, 1.0).replace(num_modes=n_ref))
    u_ref = reference.field(*pts)
    # accuracy of the reference itself: same PML, two thirds of the modes
    coarse = solve_scene(with_pml_thickness(example1, 1.0).replace(num_modes=2 * n_ref // 3))
    floor = relative_error(coarse, u_ref, pts)
    ds = np.array([0.05, 0.1, 0.15, 0.2, 0.3, 0.4])
    errs = np.array([
        relative_error(solve_scene(with_pml_thickness(example1, d).replace(num_modes=n_ref)), u_ref, pts)
        for d in ds
    ])
    at_floor = errs <= 10 * floor
    n_pre = int(np.argmax(at_floor)) if at_floor.any() else ds.size
    pre_d, pre_e = ds[:n_pre], errs[:n_pre]
    decreasing = bool(np.all(np.diff(pre_e) < 0))
    if n_pre >= 3:
        slope, icpt = np.polyfit(pre_d, np.log(pre_e), 1)
        fit = slope * pre_d + icpt
        r2 = 1 - np.sum((np.log(pre_e) - fit) ** 2) / np.sum((np.log(pre_e) - np.log(pre_e).mean()) ** 2)
    else:
        slope, r2 = np.nan, np.nan
    ok = decreasing and n_pre >= 3 and slope < 0 and r2 >= 0.95
    table = ", ".join(f"{d:g}:{e:.1e}" for d, e in zip(ds, errs))
    record_acceptance(7, ok, f"e_rel(d) = [{table}], reference floor {floor:.1e}, "
                             f"{n_pre} points above 10x floor (fit needs >= 3), slope {slope:.3g}, R2 {r2:.3g}")
    assert ok


@pytest.mark.slow
def test_criterion_08_robin_beats_dirichlet_near_criticality(example1):
    pts = tensor_points(*S_EXAMPLE1)
    lines = []
    ok = True
    for theta in (np.pi / 6 - 0.01, np.pi / 6, np.pi / 6 + 0.01, 1.55):
        scene = example1.replace(incidence=PlaneWave(theta), num_modes=300)
        u_ref = solve_scene(scene.replace(num_modes=900), "robin").field(*pts)
        e_rob = relative_error(solve_scene(scene, "robin"), u_ref, pts)
        e_dir = relative_error(solve_scene(scene, "dirichlet"), u_ref, pts)
        ok &= e_rob <= 0.1 * e_dir
        lines.append(f"{theta:.4f}: {e_rob:.1e} vs {e_dir:.1e}")
    record_acceptance(8, ok, "robin vs dirichlet e_rel (robin <= 0.1 x dirichlet) " + "; ".join(lines))
    assert ok


@pytest.mark.slow
def test_criterion_09_line_source_reference(example2_source):
    scene = example2_source
    seg = source_segment(scene)
    ref = line_source_reference(scene, seg.profile)

    # interface jumps of value and y-flux at the core edges, on the x nodes
    xg = ref.x_basis.grid
    x_int = xg.points[xg.interior_indices]
    x = np.linspace(-2.4, 2.4, 97)
    val_jump = max(
        np.max(np.abs(ref.value(x, np.full(x.shape, yc + 1e-12)) - ref.value(x, np.full(x.shape, yc - 1e-12))))
        for yc in (ref.y_bot, ref.y_top)
    ) / np.max(np.abs(ref.value(x, np.full(x.shape, ref.y_top))))
    psi = ref.x_basis.interior
    dphi = ref.core_grid.derivative(ref.phi_core)
    x_t = np.asarray(ref.x_stretch.stretch(x_int))
    top_above = line_source_gradient(x_t, ref.y_top, ref.source, ref.k0 * ref.n_top)[1] + psi @ (
        1j * ref.kappa_top * ref.c_top)
    bot_below = psi @ (-1j * ref.kappa_bot * ref.c_bot)
    scale = np.max(np.abs(psi @ dphi[-1]))
    flux_jump = max(np.max(np.abs(top_above - psi @ dphi[-1])), np.max(np.abs(bot_below - psi @ dphi[0]))) / scale
    jump = max(val_jump, flux_jump)

    # PML-free interior residual of the stratified-medium Helmholtz equation
    plane = Scene(scene.k0, seg.profile, (), scene.pml, scene.incidence, scene.num_modes)
    rng = np.random.default_rng(9)
    xr = rng.uniform(-0.45, 0.45, 80)
    yr = np.concatenate([rng.uniform(-0.45, 0.45, 30), rng.uniform(0.55, 0.9, 10),
                         rng.uniform(1.1, 2.4, 20), rng.uniform(-2.4, -0.55, 20)])
    h = 2e-3
    c = np.array([-1, 16, -30, 16, -1]) / (12 * h**2)
    offs = np.arange(-2, 3) * h
    lap = sum(ci * (ref.value(xr + o, yr) + ref.value(xr, yr + o)) for ci, o in zip(c, offs))
    u = ref.value(xr, yr)
    res = np.max(np.abs(lap + scene.k0**2 * permittivity(plane, xr, yr) * u)) / (
        scene.k0**2 * np.max(np.abs(u)))

    pts = tensor_points(*S_EXAMPLE2)
    sol = solve_scene(scene)
    fd = fd_solve(scene)
    e = relative_error(sol, fd, pts)
    ok = jump <= 1e-6 and res <= 1e-5 and e <= 5e-2
    record_acceptance(9, ok, f"jumps {jump:.1e} (<= 1e-6), residual {res:.1e} (<= 1e-5), "
                             f"FD e_rel {e:.2e} (<= 5e-2)")
    assert ok


def test_criterion_10_special_functions():
    h1 = hankel1(0, 1.0)
    err_h = abs(h1 - (0.7651976865579666 + 0.0882569642156769j))
    rng = np.random.default_rng(10)
    z = 10 ** rng.uniform(-1, 2, 100) * np.exp(1j * rng.uniform(0, np.pi / 2, 100))
    # J1 Y0 - J0 Y1 written through H = J + iY: the J Y products grow like
    # e^{2 Im z} and cancel, the Hankel form does not
    w = (besselj(1, z) * hankel1(0, z) - besselj(0, z) * hankel1(1, z)) / 1j
    small = np.abs(z.imag) < 5
    w_jy = besselj(1, z[small]) * bessely(0, z[small]) - besselj(0, z[small]) * bessely(1, z[small])
    exact = 2 / (np.pi * z)
    err_w = float(np.max(np.abs(w - exact) / np.abs(exact)))
    err_w = max(err_w, float(np.max(np.abs(w_jy - exact[small]) / np.abs(exact[small]))))
    ok = err_h <= 1e-12 and err_w <= 1e-10
    record_acceptance(10, ok, f"|H0(1) - tab| = {err_h:.1e} (<= 1e-12), Wronskian rel err {err_w:.1e} (<= 1e-10)")
    assert ok


@pytest.mark.slow
def test_criterion_11_two_inhomogeneities():
    scene = load_scene(SCENES / "example3_plane.scene")
    null = null_scene(scene).replace(num_modes=150)
    sol = solve_scene(null)
    pts = box_grid(null)
    e_null = relative_error(sol, exact_background(null)(*pts), pts)
    size_ok = sol.system.size == 8 * 150

    pts = default_evaluation_set(scene)
    Ns = (80, 160, 320, 640)
    fields = {N: solve_scene(scene.replace(num_modes=N)).field(*pts) for N in Ns}
    pairs = [relative_error(fields[N], fields[2 * N], pts) for N in Ns[:-1]]
    decreasing = bool(np.all(np.diff(pairs) < 0))
    ok = size_ok and e_null <= 1e-6 and decreasing
    table = ", ".join(f"{N}/{2 * N}: {e:.1e}" for N, e in zip(Ns, pairs))
    record_acceptance(11, ok, f"system {sol.system.size} = 8N, null e_rel {e_null:.1e} (<= 1e-6), "
                              f"self-convergence [{table}] decreasing: {decreasing}")
    assert ok
