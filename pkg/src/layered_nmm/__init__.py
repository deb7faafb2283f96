"""Mode matching with PML eigenmodes for scattering in layered media.

Typical use::

    from layered_nmm import load_scene, solve_scene

    scene = load_scene("scenes/example1.scene")
    solution = solve_scene(scene, bc_policy="robin")
    u = solution.field(x, y)
"""

from .matcher import FieldGrid, MatchError, NMMSolution, solve_scene
from .modes import BoundarySpec, ModeBasis, ModeSolverError, solve_modes
from .oracle import OracleError, fd_solve
from .reference import ReferenceError
from .scene import (
    Inhomogeneity,
    LineSource,
    PlaneWave,
    PmlSpec,
    Scene,
    SceneError,
    StratifiedProfile,
    load_scene,
    parse_scene,
    serialize_scene,
)

__all__ = [
    "BoundarySpec",
    "FieldGrid",
    "Inhomogeneity",
    "LineSource",
    "MatchError",
    "ModeBasis",
    "ModeSolverError",
    "NMMSolution",
    "OracleError",
    "PlaneWave",
    "PmlSpec",
    "ReferenceError",
    "Scene",
    "SceneError",
    "StratifiedProfile",
    "fd_solve",
    "load_scene",
    "parse_scene",
    "serialize_scene",
    "solve_modes",
    "solve_scene",
]
