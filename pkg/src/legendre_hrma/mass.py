"""Monge-Ampere mass of ``psi`` on ``[0, T] x R`` (one space dimension).

On the regular locus the subgradient pairs ``(d_s psi, d_x psi)`` trace the
graph of ``-udot0``, a null set. At a kink ``x_s`` the subdifferential
contains the chord from ``(-udot0(a), a)`` to ``(-udot0(b), b)`` where
``(a, b)`` is the gap component; sweeping these chords over ``s`` gives a
lower bound for the mass, measured here by rasterization. The upper
reference is the area between the graphs of ``-udot0`` and ``-(udot0**)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial import ConvexHull

from .convex_core import SampledFunction, lower_convex_envelope
from .ray import SingularPointError, EnvelopeModel, _components, fmt
from .toric import DEFAULT_NODES, convex_lifespan

__all__ = [
    "SubgradientChord",
    "SweptRegion",
    "MassReport",
    "s_mesh",
    "chords",
    "swept_area",
    "rasterize",
    "velocity_gap_volume",
    "prop3_bound",
    "regular_image_deviation",
    "mass_report",
    "subdifferential_image_area",
    "write_chords_csv",
    "write_mass_csv",
]


@dataclass(frozen=True)
class SubgradientChord:
    """Segment from ``(t0, a)`` to ``(t1, b)`` in ``(d_s, d_x)`` coordinates,
    with ``t0 = -udot0(a)`` and ``t1 = -udot0(b)``."""

    s: float
    a: float
    b: float
    t0: float
    t1: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("chord needs a < b")
        if not all(math.isfinite(v) for v in (self.s, self.a, self.b, self.t0, self.t1)):
            raise ValueError("chord endpoints must be finite")

    @property
    def p0(self) -> tuple[float, float]:
        return (self.t0, self.a)

    @property
    def p1(self) -> tuple[float, float]:
        return (self.t1, self.b)


def s_mesh(t_cvx: float, T: float, size: int) -> np.ndarray:
    """``size`` values in ``(t_cvx, T]``, quadratically clustered at ``t_cvx``.

    Gap components are born with width ~ sqrt(s - t_cvx); quadratic spacing
    makes the widths grow roughly evenly along the mesh.
    """
    if not math.isfinite(t_cvx) or T <= t_cvx:
        return np.empty(0)
    k = np.arange(1, size + 1, dtype=float) / size
    return t_cvx + (T - t_cvx) * k**2


def chords(data, s_values: Iterable[float], n: int = DEFAULT_NODES) -> list[SubgradientChord]:
    """One chord per gap component of ``u_s`` for each ``s``."""
    ax = data.axis
    out = []
    prev = -math.inf
    for s in s_values:
        s = float(s)
        if s <= prev:
            raise ValueError("s values must be increasing")
        prev = s
        for c in _components(data, s, n):
            out.append(SubgradientChord(s, c.a, c.b, -float(ax.udot(c.a)), -float(ax.udot(c.b))))
    return out


@dataclass(frozen=True, eq=False)
class SweptRegion:
    """Occupancy raster over ``[t_lo, t_hi] x [y_lo, y_hi]``.

    ``occupied[i, j]`` is cell ``i`` along ``t`` and ``j`` along ``y``.
    """

    t_lo: float
    t_hi: float
    y_lo: float
    y_hi: float
    occupied: np.ndarray
    history: tuple[tuple[int, float], ...] = ()
    converged: bool = True

    @property
    def cells(self) -> int:
        return self.occupied.shape[0]

    @property
    def cell_area(self) -> float:
        nt, ny = self.occupied.shape
        return (self.t_hi - self.t_lo) / nt * (self.y_hi - self.y_lo) / ny

    @property
    def area(self) -> float:
        return float(self.occupied.sum()) * self.cell_area


Point = tuple[float, float]


def _triangle_spans(grid_shape, box, p, q, r):
    """Column indices and inclusive row ranges of the cells whose centers
    lie in the closed triangle ``pqr``."""
    t_lo, t_hi, y_lo, y_hi = box
    nt, ny = grid_shape
    dt, dy = (t_hi - t_lo) / nt, (y_hi - y_lo) / ny
    ts = (p[0], q[0], r[0])
    i0 = max(int(math.ceil((min(ts) - t_lo) / dt - 0.5)), 0)
    i1 = min(int(math.floor((max(ts) - t_lo) / dt - 0.5)), nt - 1)
    if i1 < i0:
        return None
    cols = np.arange(i0, i1 + 1)
    tc = t_lo + (cols + 0.5) * dt
    lo = np.full(tc.shape, np.inf)
    hi = np.full(tc.shape, -np.inf)
    for a, b in ((p, q), (q, r), (r, p)):
        if a[0] == b[0]:
            m = tc == a[0]
            lo[m] = np.minimum(lo[m], min(a[1], b[1]))
            hi[m] = np.maximum(hi[m], max(a[1], b[1]))
            continue
        lam = (tc - a[0]) / (b[0] - a[0])
        m = (lam >= 0) & (lam <= 1)
        y = a[1] + lam[m] * (b[1] - a[1])
        lo[m] = np.minimum(lo[m], y)
        hi[m] = np.maximum(hi[m], y)
    j0 = np.maximum(np.ceil((lo - y_lo) / dy - 0.5), 0)
    j1 = np.minimum(np.floor((hi - y_lo) / dy - 0.5), ny - 1)
    keep = np.isfinite(lo) & (j0 <= j1)
    return cols[keep], j0[keep].astype(int), j1[keep].astype(int)


def _mark_segment(grid, box, p, q):
    t_lo, t_hi, y_lo, y_hi = box
    nt, ny = grid.shape
    u = (np.array([p[0], q[0]]) - t_lo) / (t_hi - t_lo) * nt
    v = (np.array([p[1], q[1]]) - y_lo) / (y_hi - y_lo) * ny
    m = int(2 * max(abs(u[1] - u[0]), abs(v[1] - v[0]))) + 2
    w = np.linspace(0.0, 1.0, m)
    i = np.clip(np.floor(u[0] + w * (u[1] - u[0])).astype(int), 0, nt - 1)
    j = np.clip(np.floor(v[0] + w * (v[1] - v[0])).astype(int), 0, ny - 1)
    grid[i, j] = True


def rasterize(triangles: Sequence[tuple[Point, Point, Point]], segments: Sequence[tuple[Point, Point]],
              cells: int, box: Optional[tuple[float, float, float, float]] = None):
    """Boolean raster of the union of filled triangles and segments.

    Triangles claim the cells whose centers they contain; segments claim
    every cell they pass through. Returns ``(grid, box)``.
    """
    if cells < 1:
        raise ValueError("cells must be positive")
    pts = [p for tri in triangles for p in tri] + [p for seg in segments for p in seg]
    if box is None:
        if not pts:
            box = (0.0, 1.0, 0.0, 1.0)
        else:
            arr = np.asarray(pts, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite vertex")
            lo, hi = arr.min(axis=0), arr.max(axis=0)
            pad = 0.01 * np.maximum(hi - lo, 1e-12) + 1e-12
            box = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])
    # per-column +1/-1 markers at the ends of each span; a running sum
    # along y then counts the triangles covering each cell
    marks = np.zeros((cells, cells + 1), dtype=np.int32)
    spans = [sp for tri in triangles if (sp := _triangle_spans((cells, cells), box, *tri))]
    if spans:
        cols, j0, j1 = (np.concatenate(parts) for parts in zip(*spans))
        np.add.at(marks, (cols, j0), 1)
        np.add.at(marks, (cols, j1 + 1), -1)
    grid = np.cumsum(marks[:, :cells], axis=1) > 0
    for seg in segments:
        _mark_segment(grid, box, *seg)
    return grid, box


def _sheets(chs: Sequence[SubgradientChord]):
    """Ruled quads between overlapping components at consecutive ``s``."""
    by_s: dict[float, list[SubgradientChord]] = {}
    for c in chs:
        by_s.setdefault(c.s, []).append(c)
    levels = sorted(by_s)
    tris = []
    for s0, s1 in zip(levels, levels[1:]):
        for c in by_s[s0]:
            for d in by_s[s1]:
                if min(c.b, d.b) > max(c.a, d.a):
                    tris.append((c.p0, c.p1, d.p1))
                    tris.append((c.p0, d.p1, d.p0))
    return tris


def swept_area(chs: Sequence[SubgradientChord], raster_cells: int = 1024,
               max_cells: Optional[int] = None, rel_tol: float = 0.005) -> SweptRegion:
    """Rasterized area of the chords plus the ruled quads between them.

    The area is computed at ``raster_cells / 2`` and ``raster_cells`` per
    axis, doubling further (up to ``max_cells``) until two successive
    estimates differ by less than ``rel_tol``.
    """
    if raster_cells < 64:
        raise ValueError("raster_cells must be at least 64")
    if not chs:
        return SweptRegion(0.0, 1.0, 0.0, 1.0, np.zeros((raster_cells, raster_cells), bool),
                           ((raster_cells, 0.0),), True)
    max_cells = 4 * raster_cells if max_cells is None else max_cells
    tris = _sheets(chs)
    segs = [(c.p0, c.p1) for c in chs]
    history = []
    cells = raster_cells // 2
    grid, box = rasterize(tris, segs, cells)
    history.append((cells, float(grid.sum()) * _cell_area(box, cells)))
    converged = False
    while True:
        cells *= 2
        grid, box = rasterize(tris, segs, cells, box)
        area = float(grid.sum()) * _cell_area(box, cells)
        prev = history[-1][1]
        history.append((cells, area))
        if abs(area - prev) <= rel_tol * max(area, 1e-300):
            converged = True
        if cells >= raster_cells and (converged or cells >= max_cells):
            break
    return SweptRegion(*box, grid, tuple(history), converged)


def _cell_area(box, cells):
    return (box[1] - box[0]) * (box[3] - box[2]) / cells**2


def velocity_gap_volume(f: SampledFunction) -> float:
    """Trapezoid integral of ``f - f**`` over the nodes of ``f``."""
    env = lower_convex_envelope(f)
    gap = f.values - np.interp(f.nodes, env.breakpoints, env.values)
    return float(trapezoid(gap, f.nodes))


def prop3_bound(data, nodes: int = 20001) -> float:
    """Area between the graphs of ``-udot0`` and ``-(udot0**)`` over closed P."""
    ax = data.axis
    if hasattr(ax, "udot0_samples"):
        return velocity_gap_volume(ax.udot0_samples)
    lo, hi = ax.bounds
    y = np.linspace(lo, hi, nodes)
    return velocity_gap_volume(SampledFunction(y, ax.udot(y)))


def regular_image_deviation(data, T: float, samples: int = 1000, h: float = 1e-4,
                            seed: int = 0, n: int = DEFAULT_NODES, s_levels: int = 20,
                            x_range: tuple[float, float] = (-4.0, 4.0),
                            kink_margin: float = 1e-3) -> tuple[float, int]:
    """Largest distance of sampled regular subgradient pairs from the graph
    of ``-udot0``.

    ``d_s psi`` is a centered difference with step ``h``; ``d_x psi`` is the
    exact preimage. Points within ``kink_margin`` of a kink at ``s`` or
    ``s +- h`` are resampled. Returns ``(max deviation, points used)``.
    """
    rng = np.random.default_rng(seed)
    ax = data.axis
    s_vals = np.sort(rng.uniform(max(h, 1e-3 * T), T, s_levels))
    worst, used, tries = 0.0, 0, 0
    while used < samples and tries < 20 * samples:
        tries += 1
        s = float(s_vals[tries % s_levels])
        x = float(rng.uniform(*x_range))
        models = [EnvelopeModel(data, sv, n) for sv in (s - h, s, s + h)]
        if any(m.kink_at(x, tol=kink_margin) for m in models):
            continue
        try:
            y = models[1].gradient_preimage(x)
            ds = (models[2].psi(x) - models[0].psi(x)) / (2 * h)
        except (SingularPointError, ValueError):
            continue
        worst = max(worst, abs(ds + float(ax.udot(y))))
        used += 1
    return worst, used


@dataclass(frozen=True)
class MassReport:
    T: float
    t_cvx: float
    mass_regular: float
    mass_singular_lower: float
    prop3_bound: float
    chord_count: int
    raster_cells: int
    cell_area: float
    raster_converged: bool
    regular_max_deviation: float
    regular_samples: int
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def as_keyvalue(self) -> str:
        fields = [
            ("T", fmt(self.T)), ("t_cvx", fmt(self.t_cvx)),
            ("mass_regular", fmt(self.mass_regular)),
            ("mass_singular_lower", fmt(self.mass_singular_lower)),
            ("prop3_bound", fmt(self.prop3_bound)),
            ("chord_count", str(self.chord_count)),
            ("raster_cells", str(self.raster_cells)),
            ("cell_area", fmt(self.cell_area)),
            ("raster_converged", fmt(self.raster_converged)),
            ("regular_max_deviation", fmt(self.regular_max_deviation)),
            ("regular_samples", str(self.regular_samples)),
        ] + [(f"check_{k}", fmt(v)) for k, v in self.checks.items()]
        return "\n".join(f"{k}={v}" for k, v in fields) + "\n"

    CSV_HEADER = ("T", "t_cvx", "mass_lower", "prop3_bound", "chords", "raster")

    def csv_row(self) -> list[str]:
        return [fmt(self.T), fmt(self.t_cvx), fmt(self.mass_singular_lower),
                fmt(self.prop3_bound), str(self.chord_count), str(self.raster_cells)]


def mass_report(data, T: float, s_mesh_size: int = 200, raster_cells: int = 1024,
                n: int = DEFAULT_NODES, regular_samples: int = 1000,
                seed: int = 0) -> MassReport:
    """Lower bound for the Monge-Ampere mass on ``[0, T] x R`` with checks.

    ``checks`` records: the regular image lies on the graph of ``-udot0``
    within 1e-6; ``0 <= mass <= prop3_bound`` (0.5% raster slack); zero
    mass exactly when ``T <= t_cvx``; raster convergence.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    life = convex_lifespan(data)
    mesh = s_mesh(life.t_cvx, T, s_mesh_size)
    chs = chords(data, mesh, n)
    region = swept_area(chs, raster_cells)
    mass = region.area
    bound = prop3_bound(data)
    if regular_samples > 0:
        dev, used = regular_image_deviation(data, T, regular_samples, seed=seed, n=n)
    else:
        dev, used = 0.0, 0
    before = T <= life.t_cvx
    checks = {
        "regular_image": dev <= 1e-6,
        "upper_bound": bool(0.0 <= mass <= bound * 1.005 + region.cell_area),
        "zero_iff_before_lifespan": bool((mass == 0.0) == before),
        "raster_converged": region.converged,
    }
    return MassReport(float(T), life.t_cvx, 0.0, mass, bound, len(chs), region.cells,
                      region.cell_area, region.converged, dev, used, checks)


def subdifferential_image_area(g: Callable[[float, float], float], center: Point,
                               radius: float = 1e-3, cells: int = 1024,
                               probes: int = 64) -> float:
    """Area of the subdifferential of a convex ``g`` at ``center``.

    Gradients are sampled by centered differences on a ring of points
    around ``center``; their convex hull approximates the subdifferential
    (reachable gradients), which is then rasterized.
    """
    s0, x0 = center
    e = radius * 1e-3
    grads = []
    for k in range(probes):
        th = 2 * math.pi * (k + 0.5) / probes
        s, x = s0 + radius * math.cos(th), x0 + radius * math.sin(th)
        grads.append(((g(s + e, x) - g(s - e, x)) / (2 * e),
                      (g(s, x + e) - g(s, x - e)) / (2 * e)))
    pts = np.unique(np.round(np.asarray(grads), 12), axis=0)
    if len(pts) < 3:
        return 0.0
    hull = ConvexHull(pts)
    v = pts[hull.vertices]
    tris = [(tuple(v[0]), tuple(v[i]), tuple(v[i + 1])) for i in range(1, len(v) - 1)]
    grid, box = rasterize(tris, [], cells)
    return float(grid.sum()) * _cell_area(box, cells)


def write_chords_csv(path, chs: Sequence[SubgradientChord]) -> None:
    """Columns ``s, a, b, t0, y0, t1, y1``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "a", "b", "t0", "y0", "t1", "y1"])
        for c in chs:
            w.writerow([fmt(c.s), fmt(c.a), fmt(c.b), fmt(c.t0), fmt(c.a), fmt(c.t1), fmt(c.b)])


def write_mass_csv(path, report: MassReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MassReport.CSV_HEADER)
        w.writerow(report.csv_row())
