"""Discrete Legendre-Fenchel conjugation, lower convex envelopes and
subdifferentials of piecewise-linear functions of one variable.

Every function here is pure; inputs are treated as immutable and results are
new frozen objects, so slices computed in different threads never share
mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .intervals import IntervalUnion

__all__ = [
    "FINITE",
    "PLUS_INFINITY_OUTSIDE",
    "MINUS_INFINITY",
    "PLUS_INFINITY",
    "DomainError",
    "SampledFunction",
    "PLConvexFunction",
    "SubdifferentialInterval",
    "GapComponent",
    "conjugate",
    "conjugate_argmax",
    "lower_convex_envelope",
    "subdifferential",
    "gap_components",
    "gap_set",
    "default_gap_tol",
]

FINITE = "finite"
PLUS_INFINITY_OUTSIDE = "plus_infinity_outside"
_MODES = (FINITE, PLUS_INFINITY_OUTSIDE)

# Signed sentinels for one-sided subgradients at a +inf boundary.
MINUS_INFINITY = -math.inf
PLUS_INFINITY = math.inf

ENDPOINT_TOL = 1e-10


class DomainError(ValueError):
    """Query point outside the domain of a sampled function."""


def _frozen(a, name):
    arr = np.array(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


def _check_increasing(x, name):
    if x.size and not np.all(np.diff(x) > 0):
        raise ValueError(f"{name} must be strictly increasing")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A real function known at strictly increasing nodes.

    ``func`` and ``deriv`` are optional analytic closures valid on
    ``[nodes[0], nodes[-1]]``; when present they are used for sub-grid
    refinement instead of a spline through the samples.
    """

    nodes: np.ndarray
    values: np.ndarray
    boundary_mode: str = PLUS_INFINITY_OUTSIDE
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    deriv: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        nodes = _frozen(self.nodes, "nodes")
        values = _frozen(self.values, "values")
        if nodes.size < 2:
            raise ValueError("a sampled function needs at least 2 nodes")
        if values.shape != nodes.shape:
            raise ValueError("nodes and values must have the same length")
        _check_increasing(nodes, "nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        if self.boundary_mode not in _MODES:
            raise ValueError(f"boundary_mode must be one of {_MODES}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func, nodes, deriv=None, boundary_mode=PLUS_INFINITY_OUTSIDE):
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, func(nodes), boundary_mode, func=func, deriv=deriv)

    @property
    def domain_lo(self) -> float:
        return float(self.nodes[0])

    @property
    def domain_hi(self) -> float:
        return float(self.nodes[-1])

    @property
    def spacing(self) -> float:
        return float(np.max(np.diff(self.nodes)))

    def closures(self):
        """Return ``(value, derivative)`` callables, analytic if available."""
        if self.func is not None and self.deriv is not None:
            return self.func, self.deriv
        spline = CubicSpline(self.nodes, self.values)
        return spline, spline.derivative()


@dataclass(frozen=True, eq=False)
class PLConvexFunction:
    """Continuous piecewise-linear convex function.

    Convexity is a property of how instances are built (hull or conjugate
    construction); it is not re-verified here.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    boundary_mode: str = FINITE
    # indices of the breakpoints inside the sampled function they came from
    source_indices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        x = _frozen(self.breakpoints, "breakpoints")
        v = _frozen(self.values, "values")
        if x.size < 1 or v.shape != x.shape:
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        _check_increasing(x, "breakpoints")
        if self.boundary_mode not in _MODES:
            raise ValueError(f"boundary_mode must be one of {_MODES}")
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", v)
        if self.source_indices is not None:
            idx = np.array(self.source_indices, dtype=np.int64)
            idx.setflags(write=False)
            object.__setattr__(self, "source_indices", idx)

    @property
    def domain_lo(self) -> float:
        return float(self.breakpoints[0])

    @property
    def domain_hi(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, x):
        """Evaluate; outside the breakpoints the function continues affinely
        (``finite``) or is ``+inf`` (``plus_infinity_outside``)."""
        x = np.asarray(x, dtype=float)
        bp, v = self.breakpoints, self.values
        out = np.interp(x, bp, v)
        if bp.size > 1:
            s = self.slopes
            below, above = x < bp[0], x > bp[-1]
            if self.boundary_mode == FINITE:
                out = np.where(below, v[0] + s[0] * (x - bp[0]), out)
                out = np.where(above, v[-1] + s[-1] * (x - bp[-1]), out)
            else:
                out = np.where(below | above, np.inf, out)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class SubdifferentialInterval:
    """``[lo, hi]``: left and right derivatives at a point."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty subdifferential [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, v: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= v <= self.hi + tol


def _check_grid(query_grid):
    y = np.asarray(query_grid, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("query grid must be a non-empty 1-D sequence")
    if not np.all(np.diff(y) > 0):
        bad = int(np.argmin(np.diff(y) > 0))
        raise ValueError(
            f"query grid must be strictly increasing (fails at index {bad}: "
            f"{y[bad]!r} -> {y[bad + 1]!r})"
        )
    return y


def conjugate_argmax(f: PLConvexFunction, query_grid) -> np.ndarray:
    """Index of the smallest breakpoint maximizing ``x*y - f(x)`` for each y.

    For convex ``f`` the objective is unimodal in the breakpoint index and the
    maximizer moves right as ``y`` grows, so one forward sweep suffices.
    """
    y = _check_grid(query_grid)
    xs = f.breakpoints.tolist()
    fs = f.values.tolist()
    n = len(xs)
    out = np.empty(y.size, dtype=np.int64)
    k = 0
    for j, yj in enumerate(y.tolist()):
        cur = xs[k] * yj - fs[k]
        while k + 1 < n:
            nxt = xs[k + 1] * yj - fs[k + 1]
            if nxt > cur:
                k += 1
                cur = nxt
            else:
                break
        out[j] = k
    return out


def conjugate(f: PLConvexFunction, query_grid) -> PLConvexFunction:
    """Discrete Legendre-Fenchel conjugate ``g(y) = max_i (x_i*y - f(x_i))``.

    With ``boundary_mode == "finite"`` the input is understood to continue
    affinely past its end breakpoints; its conjugate is then ``+inf`` outside
    the range of its slopes, querying there raises ``ValueError``, and the
    result carries ``"plus_infinity_outside"``. Conversely the conjugate of a
    function that is ``+inf`` off a bounded domain grows linearly and is
    returned with ``"finite"``.
    """
    y = _check_grid(query_grid)
    if f.boundary_mode == FINITE and f.breakpoints.size > 1:
        s = f.slopes
        lo, hi = s[0], s[-1]
        # secant slopes carry rounding error; allow for it at the ends
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if y[0] < lo - slack or y[-1] > hi + slack:
            raise ValueError(
                f"conjugate of an affinely extended function is +inf outside "
                f"[{lo}, {hi}]; query grid spans [{y[0]}, {y[-1]}]"
            )
    idx = conjugate_argmax(f, y)
    g = f.breakpoints[idx] * y - f.values[idx]
    # +inf outside a bounded domain becomes linear growth and vice versa
    mode = FINITE if f.boundary_mode == PLUS_INFINITY_OUTSIDE else PLUS_INFINITY_OUTSIDE
    return PLConvexFunction(y, g, mode)


def lower_convex_envelope(f: SampledFunction) -> PLConvexFunction:
    """Lower convex hull of the points ``(nodes[i], values[i])``.

    Monotone chain, left to right; collinear nodes are kept so that a convex
    input is returned unchanged.
    """
    xs = f.nodes.tolist()
    vs = f.values.tolist()
    if len(xs) < 2:
        raise ValueError("need at least 2 nodes")
    hull: list[int] = []
    for i in range(len(xs)):
        xi, vi = xs[i], vs[i]
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (xs[a] - xs[o]) * (vi - vs[o]) - (vs[a] - vs[o]) * (xi - xs[o])
            if cross < 0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.array(hull, dtype=np.int64)
    return PLConvexFunction(f.nodes[idx], f.values[idx], f.boundary_mode, source_indices=idx)


def subdifferential(f: PLConvexFunction, x: float) -> SubdifferentialInterval:
    """``[left slope, right slope]`` of ``f`` at ``x``."""
    bp = f.breakpoints
    x = float(x)
    if not (bp[0] <= x <= bp[-1]):
        raise DomainError(f"x={x} outside the domain [{bp[0]}, {bp[-1]}]")
    if bp.size == 1:
        return SubdifferentialInterval(MINUS_INFINITY, PLUS_INFINITY)
    s = f.slopes
    i = int(np.searchsorted(bp, x))
    if i < bp.size and bp[i] == x:
        if i == 0:
            left = MINUS_INFINITY if f.boundary_mode == PLUS_INFINITY_OUTSIDE else s[0]
            return SubdifferentialInterval(left, float(s[0]))
        if i == bp.size - 1:
            right = PLUS_INFINITY if f.boundary_mode == PLUS_INFINITY_OUTSIDE else s[-1]
            return SubdifferentialInterval(float(s[-1]), right)
        left, right = float(s[i - 1]), float(s[i])
        # rounding can leave a convex input a few ulps non-convex
        return SubdifferentialInterval(min(left, right), max(left, right))
    slope = float(s[i - 1])
    return SubdifferentialInterval(slope, slope)


@dataclass(frozen=True)
class GapComponent:
    """One component ``(a, b)`` of ``{f > env}`` and its bridging slope.

    ``refined`` flags per endpoint whether double-tangency refinement was
    applied; an unrefined endpoint is a node of the sampled domain (the gap
    reaches the end of the sampled range).
    """

    a: float
    b: float
    slope: float
    refined: tuple[bool, bool]

    def __post_init__(self):
        for name in ("a", "b", "slope"):
            object.__setattr__(self, name, float(getattr(self, name)))


def default_gap_tol(f: SampledFunction) -> float:
    spread = float(np.max(f.values) - np.min(f.values))
    return max(1e-9 * spread, 1e-300)


def _tangent_gap(fv, fd, a, bl, br):
    """Minimum over ``[bl, br]`` of ``f - (tangent line at a)`` and its argmin,
    assuming ``f`` is convex on ``[bl, br]``."""
    m = float(fd(a))
    g = lambda y: float(fd(y)) - m  # noqa: E731
    if g(bl) >= 0:
        b = bl
    elif g(br) <= 0:
        b = br
    else:
        b = brentq(g, bl, br, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(fv(b)) - float(fv(a)) - m * (b - a), b


def _refine_pair(fv, fd, nodes, i0, i1):
    """Solve ``f'(a) = f'(b) = (f(b) - f(a)) / (b - a)`` near the gap run
    ``nodes[i0..i1]`` by bisection on the left tangency point."""
    n = nodes.size
    mid = 0.5 * (nodes[i0] + nodes[i1])
    for k in (2, 4, 8, 16):
        a_lo = nodes[max(i0 - 1 - k, 0)]
        a_hi = min(nodes[min(i0 + k, n - 1)], mid)
        b_lo = max(nodes[max(i1 - k, 0)], mid)
        b_hi = nodes[min(i1 + 1 + k, n - 1)]
        phi_lo, _ = _tangent_gap(fv, fd, a_lo, b_lo, b_hi)
        phi_hi, _ = _tangent_gap(fv, fd, a_hi, b_lo, b_hi)
        if not phi_lo > 0 > phi_hi:
            continue
        lo, hi = a_lo, a_hi
        while hi - lo > 1e-13 * max(1.0, abs(lo)):
            c = 0.5 * (lo + hi)
            phi, _ = _tangent_gap(fv, fd, c, b_lo, b_hi)
            if phi > 0:
                lo = c
            else:
                hi = c
        a = 0.5 * (lo + hi)
        _, b = _tangent_gap(fv, fd, a, b_lo, b_hi)
        if b_lo < b < b_hi:
            return a, b
    return None


def gap_components(f: SampledFunction, env: PLConvexFunction,
                   gap_tol: Optional[float] = None) -> list[GapComponent]:
    """Components of ``{f - env > gap_tol}`` with endpoints refined to the
    double-tangency points of ``f``."""
    if gap_tol is None:
        gap_tol = default_gap_tol(f)
    if not gap_tol > 0:
        raise ValueError(f"gap_tol must be positive, got {gap_tol}")
    nodes, vals = f.nodes, f.values
    n = nodes.size
    gap = vals - np.interp(nodes, env.breakpoints, env.values)
    mask = gap > gap_tol
    if not mask.any():
        return []
    edges = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(np.int8), [0]))))
    runs = list(zip(edges[::2], edges[1::2] - 1))
    fv, fd = f.closures()
    comps: list[GapComponent] = []
    for i0, i1 in runs:
        i0, i1 = int(i0), int(i1)
        left_node, right_node = max(i0 - 1, 0), min(i1 + 1, n - 1)
        a, b = float(nodes[left_node]), float(nodes[right_node])
        refined = (False, False)
        if i0 > 0 and i1 < n - 1:
            pair = _refine_pair(fv, fd, nodes, i0, i1)
            if pair is not None:
                a, b = pair
                refined = (True, True)
        elif i0 > 0 or i1 < n - 1:
            # gap reaches one end of the sampled range: refine the free end
            # as a tangency from the fixed end node
            a, b, refined = _refine_one_sided(fv, fd, nodes, i0, i1, left_node, right_node)
        # the hull touches f at the contact nodes, so a true tangency point is
        # within one cell of them; anything else is interpolation artefact
        if not (nodes[max(left_node - 1, 0)] <= a < nodes[i0]
                and nodes[i1] < b <= nodes[min(right_node + 1, n - 1)]):
            a, b, refined = float(nodes[left_node]), float(nodes[right_node]), (False, False)
        slope = (float(fv(b)) - float(fv(a))) / (b - a)
        comps.append(GapComponent(a, b, slope, refined))
    return _merge(comps, f.spacing, fv)


def _refine_one_sided(fv, fd, nodes, i0, i1, left_node, right_node):
    n = nodes.size
    if i0 == 0:
        a = float(nodes[0])
        # tangent from (a, f(a)) touching f at b: f'(b)(b - a) = f(b) - f(a)
        h = lambda y: float(fd(y)) * (y - a) - (float(fv(y)) - float(fv(a)))  # noqa: E731
        lo, hi = nodes[max(i1 - 2, i0)], nodes[min(i1 + 3, n - 1)]
        if h(lo) < 0 < h(hi):
            return a, float(brentq(h, lo, hi, xtol=1e-14)), (False, True)
        return a, float(nodes[right_node]), (False, False)
    b = float(nodes[-1])
    h = lambda y: float(fd(y)) * (b - y) - (float(fv(b)) - float(fv(y)))  # noqa: E731
    lo, hi = nodes[max(i0 - 3, 0)], nodes[min(i0 + 2, i1)]
    if h(lo) < 0 < h(hi):
        return float(brentq(h, lo, hi, xtol=1e-14)), b, (True, False)
    return float(nodes[left_node]), b, (False, False)


def _merge(comps, spacing, fv):
    merged: list[GapComponent] = []
    for c in comps:
        if merged and c.a - merged[-1].b < spacing:
            p = merged[-1]
            slope = (float(fv(c.b)) - float(fv(p.a))) / (c.b - p.a)
            merged[-1] = GapComponent(p.a, c.b, slope, (p.refined[0], c.refined[1]))
        else:
            merged.append(c)
    return merged


def gap_set(f: SampledFunction, env: PLConvexFunction,
            gap_tol: Optional[float] = None) -> IntervalUnion:
    """The set ``{f != env}`` as a union of open intervals."""
    comps = gap_components(f, env, gap_tol)
    return IntervalUnion(tuple((c.a, c.b) for c in comps))
