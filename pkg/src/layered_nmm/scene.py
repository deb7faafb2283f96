"""Scene description: stratified profiles, inhomogeneities, PML box and incidence.

Scene files are flat ``key = value`` text. ``[section]`` headers prefix the
keys that follow them, ``#`` starts a comment. See ``scenes/FORMAT.md``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .chebdiff import barycentric_weights, barycentric_matrix, cheb_points
from .pml import StretchProfile


class SceneError(ValueError):
    """Invalid scene: a parse error (with line/key) or a violated invariant."""


# --------------------------------------------------------------------------
# permittivity pieces


@dataclass(frozen=True)
class ConstPiece:
    value: float

    is_constant = True

    def __call__(self, y):
        return np.full(np.shape(y), float(self.value)) if np.ndim(y) else float(self.value)

    def token(self) -> str:
        return f"const:{self.value!r}"


@dataclass(frozen=True)
class PolyPiece:
    """eps(y) = sum_k coeffs[k] * y**k, in global y."""

    coeffs: tuple[float, ...]

    is_constant = False

    def __call__(self, y):
        return np.polynomial.polynomial.polyval(y, self.coeffs)

    def token(self) -> str:
        return "poly:" + ",".join(repr(c) for c in self.coeffs)


@dataclass(frozen=True)
class TablePiece:
    """Tabulated eps(y).

    With ``order`` None the samples are interpolated by a single barycentric
    polynomial (spectral when the samples sit on Chebyshev points);
    otherwise by local polynomials of degree ``order`` on the nearest
    order + 1 samples.
    """

    y: tuple[float, ...]
    eps: tuple[float, ...]
    order: Optional[int] = None
    path: str = ""

    is_constant = False

    def __post_init__(self):
        if len(self.y) != len(self.eps) or len(self.y) < 2:
            raise SceneError("table needs at least two (y, eps) samples")
        if np.any(np.diff(self.y) <= 0):
            raise SceneError("table y-values must be strictly increasing")
        if self.order is not None and not 1 <= self.order < len(self.y):
            raise SceneError("table interpolation order out of range")

    def __call__(self, y):
        ys = np.asarray(self.y)
        es = np.asarray(self.eps)
        t = np.atleast_1d(np.asarray(y, dtype=float))
        if self.order is None:
            out = barycentric_matrix(ys, barycentric_weights(ys), t) @ es
        else:
            k = self.order + 1
            start = np.clip(np.searchsorted(ys, t) - k // 2, 0, ys.size - k)
            out = np.empty(t.size)
            for i, (ti, s0) in enumerate(zip(t, start)):
                xs = ys[s0 : s0 + k]
                out[i] = (barycentric_matrix(xs, barycentric_weights(xs), [ti]) @ es[s0 : s0 + k])[0]
        return out if np.ndim(y) else float(out[0])

    def token(self) -> str:
        tok = f"table:{self.path}"
        return tok if self.order is None else f"{tok}:{self.order}"


Piece = Union[ConstPiece, PolyPiece, TablePiece]


def load_table(path: Path, order: Optional[int], label: str) -> TablePiece:
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except OSError as exc:
        raise SceneError(f"cannot read table {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise SceneError(f"table {path} must have two columns (y, eps)")
    order_idx = np.argsort(data[:, 0])
    data = data[order_idx]
    return TablePiece(tuple(map(float, data[:, 0])), tuple(map(float, data[:, 1])), order, label)


def parse_piece(token: str, base_dir: Path) -> Piece:
    kind, _, rest = token.strip().partition(":")
    try:
        if kind == "const":
            return ConstPiece(float(rest))
        if kind == "poly":
            coeffs = tuple(float(c) for c in rest.split(","))
            if not coeffs:
                raise ValueError
            return PolyPiece(coeffs)
    except ValueError:
        raise SceneError(f"malformed permittivity piece '{token}'") from None
    if kind == "table":
        path, _, order = rest.rpartition(":") if re.search(r":\d+$", rest) else (rest, "", "")
        order_val = int(order) if order else None
        return load_table(base_dir / path, order_val, path)
    raise SceneError(f"unknown permittivity piece kind '{kind}'")


# --------------------------------------------------------------------------
# stratified profiles


@dataclass(frozen=True)
class StratifiedProfile:
    """Piecewise permittivity in y.

    ``breakpoints`` is strictly increasing and may start at -inf / end at
    +inf; piece i covers (breakpoints[i], breakpoints[i+1]). At a breakpoint
    the piece above is used unless the one-sided evaluator says otherwise.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.size < 2 or len(self.pieces) != bp.size - 1:
            raise SceneError("profile needs len(pieces) == len(breakpoints) - 1 >= 1")
        if np.any(np.diff(bp) <= 0):
            raise SceneError("profile breakpoints must be strictly increasing")

    @classmethod
    def layered(cls, interfaces_top_down: Sequence[float], eps_top_down: Sequence[float]):
        """Full-line piecewise-constant profile from top-to-bottom lists."""
        ifs = [float(v) for v in interfaces_top_down]
        eps = [float(v) for v in eps_top_down]
        if len(eps) != len(ifs) + 1:
            raise SceneError("background needs one more eps value than interfaces")
        if any(b >= a for a, b in zip(ifs, ifs[1:])):
            raise SceneError("background interfaces must be listed top-to-bottom (decreasing)")
        bp = (-math.inf, *ifs[::-1], math.inf)
        return cls(bp, tuple(ConstPiece(e) for e in eps[::-1]))

    @property
    def finite_breakpoints(self) -> list[float]:
        return [b for b in self.breakpoints if math.isfinite(b)]

    @property
    def eps_top(self) -> float:
        return _constant_value(self.pieces[-1], "top")

    @property
    def eps_bottom(self) -> float:
        return _constant_value(self.pieces[0], "bottom")

    def piece_index(self, y, from_below: bool = False) -> np.ndarray:
        side = "left" if from_below else "right"
        idx = np.searchsorted(self.breakpoints, y, side=side) - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def __call__(self, y, from_below: bool = False):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        idx = self.piece_index(y_arr, from_below)
        out = np.empty(y_arr.shape)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self.pieces[i](y_arr[sel])
        return out if np.ndim(y) else float(out[0])

    def sample_on(self, grid) -> np.ndarray:
        """Values at every node of a collocation grid, one-sided at breakpoints.

        Each subdomain uses the piece containing its midpoint, so a jump at a
        grid breakpoint is represented by the two duplicated nodes.
        """
        out = np.empty(grid.size)
        for s in range(grid.num_subdomains):
            mid = 0.5 * (grid.breakpoints[s] + grid.breakpoints[s + 1])
            piece = self.pieces[int(self.piece_index(mid))]
            out[grid.subdomain_slice(s)] = piece(grid.nodes(s))
        return out

    def minimum(self, samples: int = 257) -> float:
        lo = np.inf
        for (a, b), piece in zip(zip(self.breakpoints, self.breakpoints[1:]), self.pieces):
            if piece.is_constant:
                lo = min(lo, piece.value)
                continue
            a_f = a if math.isfinite(a) else b - 1.0
            b_f = b if math.isfinite(b) else a + 1.0
            lo = min(lo, float(np.min(piece(cheb_points(samples, a_f, b_f)))))
        return lo

    def discontinuities(self) -> list[float]:
        out = []
        for i, b in enumerate(self.breakpoints[1:-1], start=1):
            below = self.pieces[i - 1](b)
            above = self.pieces[i](b)
            if not np.isclose(below, above, rtol=0, atol=1e-14):
                out.append(b)
        return out

    def overlay(self, y0: float, y1: float, inner: "StratifiedProfile") -> "StratifiedProfile":
        """This profile with (y0, y1) replaced by ``inner``."""
        spans = []
        for a, b, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            if a < y0:
                spans.append((a, min(b, y0), piece))
        spans.extend(zip(inner.breakpoints, inner.breakpoints[1:], inner.pieces))
        for a, b, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            if b > y1:
                spans.append((max(a, y1), b, piece))
        bp = tuple(lo for lo, _, _ in spans) + (spans[-1][1],)
        return StratifiedProfile(bp, tuple(pc for _, _, pc in spans))

    def simplified(self) -> "StratifiedProfile":
        """Merge neighbouring constant pieces of equal value."""
        bp = [self.breakpoints[0]]
        pieces = [self.pieces[0]]
        for b, piece in zip(self.breakpoints[1:-1], self.pieces[1:]):
            prev = pieces[-1]
            if prev.is_constant and piece.is_constant and prev.value == piece.value:
                continue
            bp.append(b)
            pieces.append(piece)
        bp.append(self.breakpoints[-1])
        return StratifiedProfile(tuple(bp), tuple(pieces))

    def core(self) -> tuple[float, float]:
        """(bottom, top) of the non-uniform part after merging equal layers.

        A two-layer profile collapses to a single interface (bottom == top);
        a uniform profile reports (0, 0).
        """
        finite = self.simplified().finite_breakpoints
        if not finite:
            return 0.0, 0.0
        return finite[0], finite[-1]


def _constant_value(piece: Piece, where: str) -> float:
    if not piece.is_constant:
        raise SceneError(f"the {where}most layer must have constant permittivity")
    return float(piece.value)


# --------------------------------------------------------------------------
# geometry, PML and incidence


@dataclass(frozen=True)
class Inhomogeneity:
    x_lo: float
    x_hi: float
    y0: float
    y1: float
    profile: StratifiedProfile

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise SceneError("x-extent reversed: need x_lo < x_hi")
        if not self.y0 < self.y1:
            raise SceneError("y-extent reversed: need y0 < y1")
        bp = self.profile.breakpoints
        if bp[0] != self.y0 or bp[-1] != self.y1:
            raise SceneError("inhomogeneity profile must span exactly [y0, y1]")

    @classmethod
    def uniform(cls, x_lo, x_hi, y0, y1, eps: float):
        return cls(x_lo, x_hi, y0, y1, StratifiedProfile((y0, y1), (ConstPiece(float(eps)),)))


@dataclass(frozen=True)
class PmlSpec:
    L1: float
    L2: float
    d1: float
    d2: float
    sigma: float
    m: int = 0

    def __post_init__(self):
        if min(self.L1, self.L2, self.d1, self.d2) <= 0:
            raise SceneError("PML box lengths and thicknesses must be positive")
        if self.sigma <= 0:
            raise SceneError("PML sigma must be positive")
        if int(self.m) != self.m or self.m < 0:
            raise SceneError("PML exponent m must be a nonnegative integer")

    @property
    def x_stretch(self) -> StretchProfile:
        return StretchProfile(self.L1, self.d1, self.sigma, int(self.m))

    @property
    def y_stretch(self) -> StretchProfile:
        return StretchProfile(self.L2, self.d2, self.sigma, int(self.m))


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave exp(i(alpha x - beta_+ y)) from the top layer."""

    theta: float

    def __post_init__(self):
        if not -math.pi / 2 < self.theta < math.pi / 2:
            raise SceneError("incident angle must lie in (-pi/2, pi/2)")

    def alpha(self, k0: float, eps_top: float) -> float:
        return k0 * math.sqrt(eps_top) * math.sin(self.theta)

    def beta_plus(self, k0: float, eps_top: float) -> float:
        return k0 * math.sqrt(eps_top) * math.cos(self.theta)

    def beta_minus(self, k0: float, eps_top: float, eps_bottom: float) -> complex:
        from .modes import principal_sqrt

        a = self.alpha(k0, eps_top)
        return principal_sqrt(complex(k0**2 * eps_bottom - a * a))


@dataclass(frozen=True)
class LineSource:
    """Line source at (x, y) radiating (i/4) H_0^(1)(k0 n_+ rho)."""

    x: float
    y: float


Incidence = Union[PlaneWave, LineSource]


@dataclass(frozen=True)
class Segment:
    x_lo: float
    x_hi: float
    profile: StratifiedProfile
    kind: str  # "exterior" | "interior"
    index: int
    inhomogeneity: Optional[int] = None

    @property
    def is_exterior(self) -> bool:
        return self.kind == "exterior"

    def contains_x(self, x: float) -> bool:
        return self.x_lo < x < self.x_hi


@dataclass(frozen=True)
class Scene:
    """Full scattering problem. Immutable; validated on construction."""

    k0: float
    background: StratifiedProfile
    inhomogeneities: tuple[Inhomogeneity, ...]
    pml: PmlSpec
    incidence: Incidence
    num_modes: Optional[int] = None
    points_per_subdomain: int = 32

    def __post_init__(self):
        object.__setattr__(self, "inhomogeneities", tuple(self.inhomogeneities))
        validate_scene(self)

    @property
    def eps_top(self) -> float:
        return self.background.eps_top

    @property
    def eps_bottom(self) -> float:
        return self.background.eps_bottom

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.k0

    def replace(self, **changes) -> "Scene":
        from dataclasses import replace as dc_replace

        return dc_replace(self, **changes)


def validate_scene(scene: Scene) -> None:
    if not scene.k0 > 0:
        raise SceneError("k0 must be positive")
    bg = scene.background
    if not (math.isinf(bg.breakpoints[0]) and math.isinf(bg.breakpoints[-1])):
        raise SceneError("background profile must cover the whole line")
    bg.eps_top, bg.eps_bottom  # noqa: B018 - raises if not constant
    pml = scene.pml
    hx, hy = pml.L1 / 2, pml.L2 / 2
    for b in bg.finite_breakpoints:
        if not -hy < b < hy:
            raise SceneError("background interfaces must lie inside (-L2/2, L2/2)")
    if bg.minimum() <= 0:
        raise SceneError("background permittivity must be positive")
    prev_hi = -math.inf
    for i, inh in enumerate(scene.inhomogeneities):
        if not (-hx < inh.x_lo and inh.x_hi < hx):
            raise SceneError(f"inhomogeneity {i} x-extent must lie inside (-L1/2, L1/2)")
        if not (-hy < inh.y0 and inh.y1 < hy):
            raise SceneError(f"inhomogeneity {i} y-extent must lie inside (-L2/2, L2/2)")
        if inh.x_lo < prev_hi:
            raise SceneError("inhomogeneities overlap or are not ordered left-to-right")
        if inh.x_lo == prev_hi:
            raise SceneError("adjacent inhomogeneities share an x-boundary; merge them")
        if inh.profile.minimum() <= 0:
            raise SceneError(f"inhomogeneity {i} permittivity must be positive")
        prev_hi = inh.x_hi
    if scene.num_modes is not None and scene.num_modes < 1:
        raise SceneError("nmm.N must be positive")
    if scene.points_per_subdomain < 4:
        raise SceneError("nmm.points_per_subdomain must be at least 4")
    inc = scene.incidence
    if isinstance(inc, LineSource):
        if not (-hx < inc.x < hx and -hy < inc.y < hy):
            raise SceneError("line source must lie inside the physical box")
        for seg in segment_decomposition(scene):
            if inc.x in (seg.x_lo, seg.x_hi):
                raise SceneError(
                    "line source on a segment boundary (|x*| = x0) is not supported"
                )
        seg = source_segment(scene)
        bottom, top = seg.profile.core()
        if not inc.y > top:
            raise SceneError(
                "line source must lie in the homogeneous top layer above its "
                f"segment's stratified core (y* > {top})"
            )


# --------------------------------------------------------------------------
# evaluation


def permittivity(scene: Scene, x, y):
    """eps(x, y): inhomogeneity value inside a rectangle, background elsewhere."""
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    x_b, y_b = np.broadcast_arrays(x_arr, y_arr)
    out = np.asarray(scene.background(y_b.ravel())).reshape(x_b.shape).astype(float)
    for inh in scene.inhomogeneities:
        inside = (x_b > inh.x_lo) & (x_b < inh.x_hi) & (y_b > inh.y0) & (y_b < inh.y1)
        if np.any(inside):
            out[inside] = inh.profile(y_b[inside])
    return out if out.ndim else float(out)


def segment_decomposition(scene: Scene) -> list[Segment]:
    """Segments uniform in x, left to right, covering (-L1/2-d1, L1/2+d1)."""
    outer = scene.pml.L1 / 2 + scene.pml.d1
    segs: list[Segment] = []
    x = -outer
    for i, inh in enumerate(scene.inhomogeneities):
        kind = "exterior" if not segs else "interior"
        segs.append(Segment(x, inh.x_lo, scene.background, kind, len(segs)))
        merged = scene.background.overlay(inh.y0, inh.y1, inh.profile)
        segs.append(Segment(inh.x_lo, inh.x_hi, merged, "interior", len(segs), i))
        x = inh.x_hi
    segs.append(Segment(x, outer, scene.background, "exterior", len(segs)))
    return segs


def source_segment(scene: Scene) -> Segment:
    inc = scene.incidence
    if not isinstance(inc, LineSource):
        raise SceneError("scene incidence is not a line source")
    for seg in segment_decomposition(scene):
        if seg.x_lo < inc.x < seg.x_hi:
            return seg
    raise SceneError("line source is not inside any segment")


def transverse_breakpoints(scene: Scene) -> list[float]:
    """Breakpoints of the shared y-grid: PML onsets, layer and profile breaks."""
    hy, d = scene.pml.L2 / 2, scene.pml.d2
    pts = {-hy - d, -hy, hy, hy + d}
    pts.update(scene.background.finite_breakpoints)
    for inh in scene.inhomogeneities:
        pts.update(inh.profile.breakpoints)
    return sorted(pts)


# --------------------------------------------------------------------------
# text format


_KEY_RE = re.compile(r"^inhomogeneity\[(\d+)\]\.(x_lo|x_hi|y0|y1|eps|breaks)$")
_SIMPLE_KEYS = {
    "lambda", "k0",
    "background.interfaces", "background.eps",
    "pml.L1", "pml.L2", "pml.d1", "pml.d2", "pml.sigma", "pml.m",
    "incidence.plane.theta", "incidence.plane.theta_deg",
    "incidence.source.x", "incidence.source.y",
    "nmm.N", "nmm.points_per_subdomain",
}


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    prefix = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]") and "=" not in line:
            name = line[1:-1].strip()
            prefix = f"{name}." if name else ""
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SceneError(f"line {lineno}: expected 'key = value'")
        key = prefix + key.strip()
        if key in entries:
            raise SceneError(f"line {lineno}: duplicate key '{key}'")
        if key not in _SIMPLE_KEYS and not _KEY_RE.match(key):
            raise SceneError(f"line {lineno}: unknown key '{key}'")
        entries[key] = (value.strip(), lineno)
    return entries


def parse_scene(text: str, base_dir: Union[str, Path] = ".") -> Scene:
    """Parse scene text; table paths are resolved against ``base_dir``.

    Raises:
        SceneError: on malformed input (message names the line and key) or
            on a violated scene invariant.
    """
    base = Path(base_dir)
    entries = _parse_lines(text)

    def get(key: str, conv=float, default=None, required=True):
        if key not in entries:
            if required and default is None:
                raise SceneError(f"missing required key '{key}'")
            return default
        value, lineno = entries[key]
        try:
            return conv(value)
        except (ValueError, TypeError):
            raise SceneError(f"line {lineno}: bad value for '{key}': {value!r}") from None

    def floats(value: str) -> list[float]:
        return [float(v) for v in value.split(",") if v.strip()]

    if ("lambda" in entries) == ("k0" in entries):
        raise SceneError("give exactly one of 'lambda' or 'k0'")
    k0 = get("k0") if "k0" in entries else 2 * math.pi / get("lambda")

    background = StratifiedProfile.layered(
        get("background.interfaces", floats, default=[], required=False),
        get("background.eps", floats),
    )

    indices = sorted({int(_KEY_RE.match(k).group(1)) for k in entries if _KEY_RE.match(k)})
    if indices != list(range(len(indices))):
        raise SceneError("inhomogeneity indices must be 0, 1, 2, ... without gaps")
    inhoms = []
    for i in indices:
        p = f"inhomogeneity[{i}]."
        y0, y1 = get(p + "y0"), get(p + "y1")
        if not y0 < y1:
            raise SceneError(f"inhomogeneity {i}: y-extent reversed (y0 >= y1)")
        tokens = [t for t in get(p + "eps", str).split(";") if t.strip()]
        breaks = get(p + "breaks", floats, default=[], required=False)
        if len(tokens) != len(breaks) + 1:
            raise SceneError(f"inhomogeneity {i}: need one more eps piece than breaks")
        if any(b >= a for a, b in zip([y1, *breaks], [*breaks, y0])):
            raise SceneError(f"inhomogeneity {i}: breaks must decrease strictly inside (y0, y1)")
        pieces = tuple(parse_piece(t, base) for t in tokens[::-1])
        profile = StratifiedProfile((y0, *breaks[::-1], y1), pieces)
        inhoms.append(Inhomogeneity(get(p + "x_lo"), get(p + "x_hi"), y0, y1, profile))

    pml = PmlSpec(
        get("pml.L1"), get("pml.L2"), get("pml.d1"), get("pml.d2"),
        get("pml.sigma"), get("pml.m", int, default=0, required=False),
    )

    has_plane = any(k.startswith("incidence.plane.") for k in entries)
    has_source = any(k.startswith("incidence.source.") for k in entries)
    if has_plane == has_source:
        raise SceneError("give exactly one incidence: incidence.plane.* or incidence.source.*")
    if has_plane:
        if "incidence.plane.theta" in entries:
            if "incidence.plane.theta_deg" in entries:
                raise SceneError("give only one of theta / theta_deg")
            theta = get("incidence.plane.theta")
        else:
            theta = math.radians(get("incidence.plane.theta_deg"))
        incidence: Incidence = PlaneWave(theta)
    else:
        incidence = LineSource(get("incidence.source.x"), get("incidence.source.y"))

    return Scene(
        k0=k0,
        background=background,
        inhomogeneities=tuple(inhoms),
        pml=pml,
        incidence=incidence,
        num_modes=get("nmm.N", int, default=None, required=False),
        points_per_subdomain=get("nmm.points_per_subdomain", int, default=32, required=False),
    )


def load_scene(path: Union[str, Path]) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene file {path}: {exc.strerror}") from None
    return parse_scene(text, path.parent)


def serialize_scene(scene: Scene) -> str:
    """Canonical scene text; parse_scene(serialize_scene(s)) == s."""
    bg = scene.background
    interfaces = bg.finite_breakpoints[::-1]
    eps = [p.value for p in bg.pieces[::-1]]
    lines = [
        f"k0 = {scene.k0!r}",
        "",
        "[background]",
        "interfaces = " + ", ".join(repr(v) for v in interfaces),
        "eps = " + ", ".join(repr(v) for v in eps),
    ]
    for i, inh in enumerate(scene.inhomogeneities):
        breaks = list(inh.profile.breakpoints[1:-1])[::-1]
        lines += [
            "",
            f"[inhomogeneity[{i}]]",
            f"x_lo = {inh.x_lo!r}",
            f"x_hi = {inh.x_hi!r}",
            f"y0 = {inh.y0!r}",
            f"y1 = {inh.y1!r}",
            "eps = " + "; ".join(pc.token() for pc in inh.profile.pieces[::-1]),
        ]
        if breaks:
            lines.append("breaks = " + ", ".join(repr(b) for b in breaks))
    pml = scene.pml
    lines += [
        "",
        "[pml]",
        f"L1 = {pml.L1!r}",
        f"L2 = {pml.L2!r}",
        f"d1 = {pml.d1!r}",
        f"d2 = {pml.d2!r}",
        f"sigma = {pml.sigma!r}",
        f"m = {int(pml.m)}",
        "",
    ]
    inc = scene.incidence
    if isinstance(inc, PlaneWave):
        lines += ["[incidence.plane]", f"theta = {inc.theta!r}"]
    else:
        lines += ["[incidence.source]", f"x = {inc.x!r}", f"y = {inc.y!r}"]
    lines += ["", "[nmm]"]
    if scene.num_modes is not None:
        lines.append(f"N = {scene.num_modes}")
    lines.append(f"points_per_subdomain = {scene.points_per_subdomain}")
    return "\n".join(lines) + "\n"
