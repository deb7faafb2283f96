from pathlib import Path

import numpy as np
import pytest

from layered_nmm.scene import ConstPiece, Inhomogeneity, StratifiedProfile, load_scene

SCENES = Path(__file__).resolve().parent.parent / "scenes"

# evaluation sets used in the published comparisons
S_EXAMPLE1 = ((-0.5, 0.5), (2.5, -2.5, -1.0, 0.0))
S_EXAMPLE2 = ((-0.5, 0.5), (0.5, -0.5, 2.5, -2.5))

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES[number] = f"acceptance {number:2d}: {status}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def tensor_points(xs, ys):
    X, Y = np.meshgrid(np.asarray(xs, float), np.asarray(ys, float), indexing="ij")
    return X.ravel(), Y.ravel()


def null_scene(scene):
    """Same geometry with the inhomogeneity made of background material."""
    bg = scene.background
    inhoms = []
    for inh in scene.inhomogeneities:
        spans = sorted(b for b in bg.finite_breakpoints if inh.y0 < b < inh.y1)
        bps = (inh.y0, *spans, inh.y1)
        pieces = tuple(ConstPiece(float(bg(0.5 * (a + b)))) for a, b in zip(bps[:-1], bps[1:]))
        inhoms.append(Inhomogeneity(inh.x_lo, inh.x_hi, inh.y0, inh.y1, StratifiedProfile(bps, pieces)))
    return scene.replace(inhomogeneities=tuple(inhoms))


@pytest.fixture(scope="session")
def scenes_dir():
    return SCENES


@pytest.fixture(scope="session")
def example1():
    return load_scene(SCENES / "example1.scene")


@pytest.fixture(scope="session")
def example2_source():
    return load_scene(SCENES / "example2_source.scene")
