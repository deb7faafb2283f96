"""Command-line driver: runs, sweeps, oracle comparisons and spectrum dumps.

Every subcommand reads a scene file, applies flag overrides and writes
plot-ready CSV plus a JSON summary into ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .matcher import (
    FieldGrid,
    MatchError,
    NMMSolution,
    segment_basis,
    segment_boundary,
    solve_scene,
    transverse_grid,
)
from .modes import ModeSolverError
from .oracle import OracleError, fd_solve
from .reference import ReferenceError
from .scene import (
    LineSource,
    PlaneWave,
    PmlSpec,
    Scene,
    SceneError,
    load_scene,
    segment_decomposition,
    serialize_scene,
)

ERROR_TAGS = (
    (SceneError, "scene"),
    (ModeSolverError, "modes"),
    (ReferenceError, "reference"),
    (MatchError, "matcher"),
    (OracleError, "oracle"),
)


# --------------------------------------------------------------------------
# error measure and evaluation set


def _values_at(u, x, y) -> np.ndarray:
    if isinstance(u, FieldGrid):
        return u.sample(x, y)
    if hasattr(u, "field"):
        return u.field(x, y)
    return np.asarray(u)


def relative_error(u_test, u_ref, points) -> float:
    """max_S |u_ref - u_test| / max_S |u_ref|.

    ``u_test`` and ``u_ref`` may be FieldGrids, solved objects with a
    ``field(x, y)`` method, or arrays already sampled at ``points``.

    Raises:
        ValueError: if u_ref vanishes on the whole set.
    """
    x, y = (np.asarray(c, float) for c in points)
    a = _values_at(u_test, x, y)
    b = _values_at(u_ref, x, y)
    scale = np.abs(b).max()
    if scale == 0:
        raise ValueError("reference field vanishes on the evaluation set")
    return float(np.abs(b - a).max() / scale)


def evaluation_set(xs: Sequence[float], ys: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Tensor set {(x, y) | x in xs, y in ys} as flat coordinate arrays."""
    X, Y = np.meshgrid(np.asarray(xs, float), np.asarray(ys, float), indexing="ij")
    return X.ravel(), Y.ravel()


def default_evaluation_set(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """x on the inhomogeneity edges; y on the box edges and all interfaces."""
    xs = sorted({v for inh in scene.inhomogeneities for v in (inh.x_lo, inh.x_hi)}) or [0.0]
    hy = scene.pml.L2 / 2
    ys = {-hy, hy, *scene.background.finite_breakpoints}
    for inh in scene.inhomogeneities:
        ys.update((inh.y0, inh.y1))
    return evaluation_set(xs, sorted(ys))


def scene_hash(scene: Scene) -> str:
    return hashlib.sha256(serialize_scene(scene).encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# overrides


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def apply_overrides(scene: Scene, args) -> Scene:
    changes = {}
    if getattr(args, "theta", None) is not None and getattr(args, "source", None) is not None:
        raise SceneError("give at most one of --theta and --source")
    if getattr(args, "theta", None) is not None:
        changes["incidence"] = PlaneWave(math.radians(args.theta))
    if getattr(args, "source", None) is not None:
        xy = _floats(args.source)
        if len(xy) != 2:
            raise SceneError("--source expects X,Y")
        changes["incidence"] = LineSource(*xy)
    if getattr(args, "N", None) is not None:
        changes["num_modes"] = args.N
    pml = scene.pml
    d = getattr(args, "pml_d", None)
    sigma = getattr(args, "sigma", None)
    m = getattr(args, "m", None)
    if d is not None or sigma is not None or m is not None:
        changes["pml"] = PmlSpec(
            pml.L1,
            pml.L2,
            pml.d1 if d is None else d,
            pml.d2 if d is None else d,
            pml.sigma if sigma is None else sigma,
            pml.m if m is None else m,
        )
    return scene.replace(**changes) if changes else scene


def _eval_points(scene: Scene, args):
    if args.eval_x or args.eval_y:
        if not (args.eval_x and args.eval_y):
            raise SceneError("give both --eval-x and --eval-y")
        return evaluation_set(_floats(args.eval_x), _floats(args.eval_y))
    return default_evaluation_set(scene)


def physical_axes(scene: Scene, n: int):
    return (
        np.linspace(-scene.pml.L1 / 2, scene.pml.L1 / 2, n),
        np.linspace(-scene.pml.L2 / 2, scene.pml.L2 / 2, n),
    )


def _bc_per_segment(sol: NMMSolution) -> list[str]:
    return [b.bc.describe() for b in sol.bases]


def _method_record(scene: Scene, bc_policy: str) -> dict:
    inc = scene.incidence
    rec = {
        "k0": scene.k0,
        "N": scene.num_modes,
        "points_per_subdomain": scene.points_per_subdomain,
        "sigma": scene.pml.sigma,
        "d1": scene.pml.d1,
        "d2": scene.pml.d2,
        "m": scene.pml.m,
        "bc_policy": bc_policy,
    }
    if isinstance(inc, PlaneWave):
        rec["incidence"] = {"type": "plane", "theta": inc.theta}
    else:
        rec["incidence"] = {"type": "line_source", "x": inc.x, "y": inc.y}
    return rec


def _write_json(path: Path, record: dict) -> Path:
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=float) + "\n")
    return path


# --------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> dict:
    scene = apply_overrides(load_scene(args.scene), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sol = solve_scene(scene, args.bc)
    xs, ys = physical_axes(scene, args.grid_points)
    grid = sol.field_grid(xs, ys)
    elapsed = time.perf_counter() - t0
    field_path = grid.to_csv(out / "field.csv")
    (out / "scene.txt").write_text(serialize_scene(scene))
    Sx, Sy = _eval_points(scene, args)
    uS = sol.field(Sx, Sy)
    summary = {
        "command": "run",
        "scene_hash": scene_hash(scene),
        "method": _method_record(scene, args.bc),
        "bc_per_segment": _bc_per_segment(sol),
        "system_size": sol.system.size,
        "solve_residual": sol.report.residual,
        "condition_estimate": sol.report.condition,
        "timings": {**sol.timings, "total": elapsed},
        "evaluation_set": [[float(a), float(b), float(abs(u))] for a, b, u in zip(Sx, Sy, uS)],
        "files": {"field": str(field_path), "scene": str(out / "scene.txt")},
    }
    _write_json(out / "summary.json", summary)
    return summary


def _solve_at(payload):
    scene, bc, points = payload
    return solve_scene(scene, bc).field(*points)


def _oracle_at(payload):
    scene, h, points = payload
    return fd_solve(scene, h=h).field(*points)


def _sweep_scenes(scene: Scene, param: str, values: Sequence[float]) -> list[Scene]:
    out = []
    for v in values:
        if param == "theta":
            out.append(scene.replace(incidence=PlaneWave(math.radians(v))))
        elif param == "pml_d":
            p = scene.pml
            out.append(scene.replace(pml=PmlSpec(p.L1, p.L2, v, v, p.sigma, p.m)))
        elif param == "N":
            out.append(scene.replace(num_modes=int(v)))
        else:
            raise SceneError(f"unknown sweep parameter {param!r}")
    return out


def _parse_values(args) -> list[float]:
    if args.values:
        vals = _floats(args.values)
    elif args.range:
        parts = args.range.split(":")
        if len(parts) != 3:
            raise SceneError("--range expects START:STOP:COUNT")
        vals = list(np.linspace(float(parts[0]), float(parts[1]), int(parts[2])))
    else:
        raise SceneError("give --values or --range")
    if not vals:
        raise SceneError("empty sweep range")
    return vals


def cmd_sweep(args) -> dict:
    base = apply_overrides(load_scene(args.scene), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    values = _parse_values(args)
    if args.param == "N":
        values = [float(int(v)) for v in values]
    scenes = _sweep_scenes(base, args.param, values)
    points = _eval_points(base, args)
    jobs = max(1, args.jobs)

    # reference fields, one per sweep point
    if args.reference == "oracle":
        if args.param == "theta":
            ref_payload = [(s, args.h, points) for s in scenes]
        else:
            ref_payload = [(base, args.h, points)]
        ref_fn = _oracle_at
    else:
        if args.param == "theta":
            ref_N = args.ref_N or int(1.5 * (base.num_modes or transverse_grid(base).num_interior))
            ref_payload = [(s.replace(num_modes=ref_N), "robin", points) for s in scenes]
        else:
            ref_payload = [(scenes[int(np.argmax(values))], "robin", points)]
        ref_fn = _solve_at

    table_path = out / "sweep.csv"
    rows = []
    failure: Optional[BaseException] = None
    with table_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([args.param, "e_rel"])
        try:
            with ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else _Serial() as pool:
                refs = list(pool.map(ref_fn, ref_payload))
                runs = pool.map(_solve_at, [(s, args.bc, points) for s in scenes])
                for i, (v, u) in enumerate(zip(values, runs)):
                    ref = refs[i] if len(refs) > 1 else refs[0]
                    e = relative_error(u, ref, points)
                    writer.writerow([repr(float(v)), repr(float(e))])
                    fh.flush()
                    rows.append((v, e))
        except Exception as exc:  # flushed partial table is kept
            failure = exc
    summary = {
        "command": "sweep",
        "scene_hash": scene_hash(base),
        "method": _method_record(base, args.bc),
        "parameter": args.param,
        "reference": args.reference,
        "rows": [[float(v), float(e)] for v, e in rows],
        "complete": failure is None,
        "files": {"table": str(table_path)},
    }
    _write_json(out / "summary.json", summary)
    if failure is not None:
        raise failure
    return summary


class _Serial:
    """In-process stand-in for an executor."""

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, items):
        return map(fn, items)


def cmd_compare(args) -> dict:
    scene = apply_overrides(load_scene(args.scene), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sol = solve_scene(scene, args.bc)
    t1 = time.perf_counter()
    fd = fd_solve(scene, h=args.h)
    t2 = time.perf_counter()
    points = _eval_points(scene, args)
    e_S = relative_error(sol, fd, points)
    fd_grid = fd.field_grid()
    stride = max(1, fd_grid.x.size // args.grid_points)
    xs, ys = fd_grid.x[::stride], fd_grid.y[::stride]
    X, Y = np.meshgrid(xs, ys)
    mask = np.ones(X.shape, bool)
    if isinstance(scene.incidence, LineSource):
        mask = np.hypot(X - scene.incidence.x, Y - scene.incidence.y) > 2 * fd.grid.h
    e_dense = relative_error(sol, fd, (X[mask], Y[mask]))
    sol.field_grid(xs, ys, "nmm").to_csv(out / "field_nmm.csv")
    FieldGrid(xs, ys, fd_grid.values[::stride, ::stride], "fd").to_csv(out / "field_fd.csv")
    summary = {
        "command": "compare",
        "scene_hash": scene_hash(scene),
        "method": _method_record(scene, args.bc),
        "bc_per_segment": _bc_per_segment(sol),
        "oracle": {"h": fd.grid.h, "unknowns": fd.grid.num_unknowns,
                   "pml_d": fd.grid.x_stretch.d, "pml_sigma": fd.grid.x_stretch.sigma,
                   "pml_m": fd.grid.x_stretch.m},
        "e_rel_S": e_S,
        "e_rel_dense": e_dense,
        "timings": {"nmm": t1 - t0, "oracle": t2 - t1},
        "files": {"nmm": str(out / "field_nmm.csv"), "fd": str(out / "field_fd.csv")},
    }
    _write_json(out / "summary.json", summary)
    return summary


def cmd_modes(args) -> dict:
    scene = apply_overrides(load_scene(args.scene), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = transverse_grid(scene)
    path = out / "spectrum.csv"
    counts = {}
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["segment", "kind", "j", "re_delta", "im_delta", "re_sqrt", "im_sqrt"])
        for seg in segment_decomposition(scene):
            bc = segment_boundary(scene, seg, args.bc)
            basis = segment_basis(scene, seg, grid, bc)
            counts[seg.index] = basis.lower_half_plane_count()
            for j, (d, s) in enumerate(zip(basis.delta, basis.sqrt_delta)):
                w.writerow([seg.index, seg.kind, j, *(repr(float(v)) for v in (d.real, d.imag, s.real, s.imag))])
    summary = {
        "command": "modes",
        "scene_hash": scene_hash(scene),
        "method": _method_record(scene, args.bc),
        "lower_half_plane_counts": counts,
        "files": {"spectrum": str(path)},
    }
    _write_json(out / "summary.json", summary)
    return summary


def cmd_oracle(args) -> dict:
    scene = apply_overrides(load_scene(args.scene), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    fd = fd_solve(scene, h=args.h)
    path = fd.field_grid().to_csv(out / "field_fd.csv")
    summary = {
        "command": "oracle",
        "scene_hash": scene_hash(scene),
        "h": fd.grid.h,
        "unknowns": fd.grid.num_unknowns,
        "residual": fd.residual,
        "timings": {"total": time.perf_counter() - t0},
        "files": {"field": str(path)},
    }
    _write_json(out / "summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", required=True, help="scene file")
    common.add_argument("--theta", type=float, help="plane-wave incidence angle in degrees")
    common.add_argument("--source", help="line source position X,Y")
    common.add_argument("--N", type=int, help="modes per segment")
    common.add_argument("--sigma", type=float, help="PML absorption amplitude")
    common.add_argument("--pml-d", dest="pml_d", type=float, help="PML thickness (both axes)")
    common.add_argument("--m", type=int, help="PML grading exponent")
    common.add_argument("--bc", choices=("robin", "dirichlet"), default="robin",
                        help="termination of interior segments")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    common.add_argument("--eval-x", help="comma-separated x of the evaluation set")
    common.add_argument("--eval-y", help="comma-separated y of the evaluation set")

    parser = argparse.ArgumentParser(prog="layered-nmm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="solve and export the field")
    p.add_argument("--grid-points", type=int, default=101)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="e_rel versus a parameter")
    p.add_argument("--param", choices=("theta", "pml_d", "N"), required=True)
    p.add_argument("--values", help="comma-separated values (theta in degrees)")
    p.add_argument("--range", help="START:STOP:COUNT")
    p.add_argument("--reference", choices=("oracle", "self_converged"), default="self_converged")
    p.add_argument("--ref-N", dest="ref_N", type=int, help="modes of the per-angle reference")
    p.add_argument("--h", type=float, help="oracle grid spacing")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common], help="mode matching versus the FD oracle")
    p.add_argument("--h", type=float, help="oracle grid spacing")
    p.add_argument("--grid-points", type=int, default=101)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("modes", parents=[common], help="dump per-segment spectra")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("oracle", parents=[common], help="FD oracle only")
    p.add_argument("--h", type=float, help="grid spacing")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = args.func(args)
    except Exception as exc:
        for cls, tag in ERROR_TAGS:
            if isinstance(exc, cls):
                print(f"{tag}: {exc}", file=sys.stderr)
                return 2
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({k: v for k, v in summary.items() if k not in ("evaluation_set", "rows")},
                     indent=2, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
