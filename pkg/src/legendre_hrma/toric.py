"""Toric Cauchy data: polytopes, Guillemin potentials, the straight line of
symplectic potentials ``u_s = u0 + s*udot0``, the convex lifespan and the
non-convexity set ``A_s``.

Supported polytopes are intervals (n = 1) and axis-aligned rectangles
(n = 2). Two-dimensional data must be separable: ``u0`` and ``udot0`` are
sums of one-variable functions, one per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from .convex_core import (
    ENDPOINT_TOL,
    FINITE,
    GapComponent,
    PLConvexFunction,
    SampledFunction,
    conjugate,
    gap_components,
    lower_convex_envelope,
)
from .intervals import IntervalUnion, SeparableGapSet, hausdorff_distance

__all__ = [
    "Polytope",
    "AxisSpec",
    "ToricCauchyData",
    "SampledAxis",
    "LifespanResult",
    "ASetDiagnostics",
    "fubini_study",
    "p1xp1",
    "interior_grid",
    "guillemin_potential",
    "cauchy_from_kahler",
    "u_s",
    "convex_lifespan",
    "a_set",
    "a_set_components",
    "a_set_diagnostics",
    "DEFAULT_NODES",
]

DEFAULT_NODES = 4097


@dataclass(frozen=True)
class Polytope:
    """``{y : <y, v_k> - lambda_k >= 0 for all k}``; facets are ``(v_k, lambda_k)``."""

    facets: tuple[tuple[tuple[float, ...], float], ...]

    def __post_init__(self):
        facets = tuple((tuple(float(c) for c in v), float(lam)) for v, lam in self.facets)
        dims = {len(v) for v, _ in facets}
        if len(dims) != 1:
            raise ValueError("all facet normals must have the same dimension")
        n = dims.pop()
        if n == 1:
            if len(facets) != 2:
                raise ValueError("an interval polytope needs exactly two facets")
        elif n == 2:
            if len(facets) != 4 or any(sum(c != 0 for c in v) != 1 for v, _ in facets):
                raise ValueError("only axis-aligned rectangles are supported for n = 2")
        else:
            raise ValueError(f"dimension {n} is not supported")
        object.__setattr__(self, "facets", facets)
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError("polytope has empty interior")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Polytope":
        return cls((((1.0,), float(lo)), ((-1.0,), -float(hi))))

    @classmethod
    def rectangle(cls, bounds: Sequence[Sequence[float]]) -> "Polytope":
        (a0, b0), (a1, b1) = bounds
        return cls((
            ((1.0, 0.0), float(a0)), ((-1.0, 0.0), -float(b0)),
            ((0.0, 1.0), float(a1)), ((0.0, -1.0), -float(b1)),
        ))

    @property
    def dimension(self) -> int:
        return len(self.facets[0][0])

    def axis_facets(self, axis: int) -> tuple[tuple[float, float], tuple[float, float]]:
        """The two facets ``(v, lambda)`` cutting coordinate ``axis``, lower first."""
        fs = [(v[axis], lam) for v, lam in self.facets if v[axis] != 0]
        if len(fs) != 2 or fs[0][0] * fs[1][0] >= 0:
            raise ValueError(f"axis {axis} is not bounded by two opposite facets")
        return tuple(sorted(fs, key=lambda f: -f[0]))  # type: ignore[return-value]

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        out = []
        for j in range(self.dimension):
            (v0, l0), (v1, l1) = self.axis_facets(j)
            out.append((l0 / v0, l1 / v1))
        return tuple(out)

    @property
    def vertices(self) -> list[tuple[float, ...]]:
        b = self.bounds
        if self.dimension == 1:
            return [(b[0][0],), (b[0][1],)]
        return [(x, y) for x in b[0] for y in b[1]]

    def ell(self, y) -> np.ndarray:
        """Facet functions ``l_k(y)``, shape ``(d,) + y.shape[:-1]``."""
        y = np.asarray(y, dtype=float)
        if self.dimension == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        return np.stack([y @ np.asarray(v) - lam for v, lam in self.facets])


def guillemin_potential(p: Polytope, y) -> Union[float, np.ndarray]:
    """``u_G(y) = sum_k l_k(y) log l_k(y)``, continuous up to the boundary."""
    ell = p.ell(y)
    if np.any(ell < -1e-14):
        raise ValueError("point outside the closed polytope")
    ell = np.maximum(ell, 0.0)
    out = xlogy(ell, ell).sum(axis=0)
    return float(out) if np.ndim(out) == 0 else out


def polyval(y, coef):
    return P.polyval(np.asarray(y, dtype=float), coef)


@dataclass(frozen=True)
class AxisSpec:
    """One-variable factor of the Cauchy data.

    ``u0 = scale * (l_lo log l_lo + l_hi log l_hi) + F`` with ``F`` a
    polynomial, and ``udot0`` a polynomial; coefficients run lowest degree
    first.
    """

    facets: tuple[tuple[float, float], tuple[float, float]]
    velocity: tuple[float, ...] = (0.0,)
    smooth: tuple[float, ...] = (0.0,)
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("Guillemin scale must be positive")
        object.__setattr__(self, "velocity", tuple(float(c) for c in self.velocity) or (0.0,))
        object.__setattr__(self, "smooth", tuple(float(c) for c in self.smooth) or (0.0,))
        # coefficient arrays of the function and its first two derivatives
        for name, coef in (("_v", self.velocity), ("_f", self.smooth)):
            c0 = np.array(coef)
            c1 = P.polyder(c0) if c0.size > 1 else np.zeros(1)
            c2 = P.polyder(c1) if c1.size > 1 else np.zeros(1)
            object.__setattr__(self, name, (c0, c1, c2))

    @classmethod
    def interval(cls, lo, hi, velocity=(0.0,), smooth=(0.0,), scale=1.0) -> "AxisSpec":
        return cls(((1.0, float(lo)), (-1.0, -float(hi))), tuple(velocity), tuple(smooth), scale)

    @property
    def bounds(self) -> tuple[float, float]:
        (v0, l0), (v1, l1) = self.facets
        return (l0 / v0, l1 / v1)

    @property
    def _vpoly(self) -> Polynomial:
        return Polynomial(self.velocity)

    @property
    def _fpoly(self) -> Polynomial:
        return Polynomial(self.smooth)

    def _ells(self, y):
        y = np.asarray(y, dtype=float)
        return [(v, v * y - lam) for v, lam in self.facets]

    def u0(self, y):
        g = sum(xlogy(l, l) for _, l in self._ells(y))
        return self.scale * g + polyval(y, self._f[0])

    def du0(self, y):
        g = sum(v * (np.log(l) + 1.0) for v, l in self._ells(y))
        return self.scale * g + polyval(y, self._f[1])

    def d2u0(self, y):
        g = sum(v * v / l for v, l in self._ells(y))
        return self.scale * g + polyval(y, self._f[2])

    def udot(self, y):
        return polyval(y, self._v[0])

    def dudot(self, y):
        return polyval(y, self._v[1])

    def d2udot(self, y):
        return polyval(y, self._v[2])

    @property
    def velocity_is_convex(self) -> bool:
        lo, hi = self.bounds
        d2 = self._vpoly.deriv(2)
        pts = [lo, hi] + [r.real for r in np.atleast_1d(d2.deriv().roots())
                          if abs(r.imag) < 1e-12 and lo <= r.real <= hi]
        return min(float(d2(p)) for p in pts) >= 0 if d2.degree() > 0 else float(d2.coef[0]) >= 0

    def velocity_sup(self) -> float:
        """``max_P |udot0|``, exact for polynomials."""
        lo, hi = self.bounds
        p = self._vpoly
        pts = [lo, hi]
        if p.degree() > 1:
            pts += [r.real for r in np.atleast_1d(p.deriv().roots())
                    if abs(r.imag) < 1e-12 and lo <= r.real <= hi]
        return max(abs(float(p(t))) for t in pts)

    def us(self, s: float):
        return (lambda y: self.u0(y) + s * self.udot(y),
                lambda y: self.du0(y) + s * self.dudot(y))


class SampledAxis:
    """Axis factor known only through samples on an interior moment grid.

    Values and first derivatives come from cubic splines; second derivatives
    for the lifespan use centered differences with Richardson extrapolation.
    """

    def __init__(self, bounds, u0: SampledFunction, udot0: SampledFunction):
        self._bounds = (float(bounds[0]), float(bounds[1]))
        self.u0_samples = u0
        self.udot0_samples = udot0
        self._u0 = CubicSpline(u0.nodes, u0.values)
        self._ud = CubicSpline(udot0.nodes, udot0.values)

    @property
    def bounds(self):
        return self._bounds

    def u0(self, y):
        return self._u0(y)

    def du0(self, y):
        return self._u0(y, 1)

    def udot(self, y):
        return self._ud(y)

    def dudot(self, y):
        return self._ud(y, 1)

    @staticmethod
    def _richardson_d2(f: SampledFunction) -> np.ndarray:
        v, h = f.values, float(np.mean(np.diff(f.nodes)))
        d1 = np.full_like(v, np.nan)
        d1[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
        d2 = np.full_like(v, np.nan)
        d2[2:-2] = (v[4:] - 2 * v[2:-2] + v[:-4]) / (2 * h) ** 2
        out = d1.copy()
        out[2:-2] = (4 * d1[2:-2] - d2[2:-2]) / 3
        return out

    def d2u0_samples(self):
        return self._richardson_d2(self.u0_samples)

    def d2udot_samples(self):
        return self._richardson_d2(self.udot0_samples)

    def velocity_sup(self) -> float:
        return float(np.max(np.abs(self.udot0_samples.values)))

    def us(self, s: float):
        return (lambda y: self.u0(y) + s * self.udot(y),
                lambda y: self.du0(y) + s * self.dudot(y))


@dataclass(frozen=True)
class ToricCauchyData:
    """Symplectic Cauchy data ``(u0, udot0)`` on a polytope."""

    polytope: Polytope
    axes: tuple
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if len(self.axes) != self.polytope.dimension:
            raise ValueError("need one axis factor per polytope dimension")
        for j, ax in enumerate(self.axes):
            if isinstance(ax, AxisSpec) and not np.allclose(ax.bounds, self.polytope.bounds[j]):
                raise ValueError(f"axis {j} bounds disagree with the polytope")

    @property
    def dimension(self) -> int:
        return self.polytope.dimension

    @property
    def separable(self) -> bool:
        return self.dimension == 2

    @property
    def axis(self):
        """The single factor of one-dimensional data."""
        if self.dimension != 1:
            raise ValueError("data is not one-dimensional")
        return self.axes[0]

    def u0(self, y):
        y = np.asarray(y, dtype=float)
        if self.dimension == 1:
            return self.axes[0].u0(y)
        return sum(ax.u0(y[..., j]) for j, ax in enumerate(self.axes))

    def udot(self, y):
        y = np.asarray(y, dtype=float)
        if self.dimension == 1:
            return self.axes[0].udot(y)
        return sum(ax.udot(y[..., j]) for j, ax in enumerate(self.axes))

    def velocity_sup(self) -> float:
        return sum(ax.velocity_sup() for ax in self.axes)


def fubini_study() -> ToricCauchyData:
    """``u0 = (1+y)log(1+y) + (1-y)log(1-y)`` on ``[-1, 1]`` with ``udot0 = -y^2``."""
    return ToricCauchyData(
        Polytope.interval(-1, 1),
        (AxisSpec.interval(-1, 1, velocity=(0.0, 0.0, -1.0)),),
        name="fubini-study",
    )


def p1xp1(f_coeffs: Sequence[float] = (0.0, 0.0, -1.0)) -> ToricCauchyData:
    """Product of two spheres on ``[-1, 1]^2`` with ``u0 = u_G / 2`` and
    ``udot0(y) = f(y_1)``."""
    return ToricCauchyData(
        Polytope.rectangle([(-1, 1), (-1, 1)]),
        (AxisSpec.interval(-1, 1, velocity=tuple(f_coeffs), scale=0.5),
         AxisSpec.interval(-1, 1, scale=0.5)),
        name="p1xp1",
    )


def interior_grid(lo: float, hi: float, n: int = DEFAULT_NODES,
                  standoff: Optional[float] = None) -> np.ndarray:
    """``n`` equispaced nodes in ``[lo + standoff, hi - standoff]``.

    The default standoff equals the node spacing, ``(hi - lo) / (n + 1)``.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if standoff is None:
        standoff = (hi - lo) / (n + 1)
    if not 0 < standoff < 0.5 * (hi - lo):
        raise ValueError("standoff must be positive and below half the width")
    return np.linspace(lo + standoff, hi - standoff, n)


def _axis_grid(ax, grid, n):
    lo, hi = ax.bounds
    if isinstance(ax, SampledAxis):
        nodes = ax.u0_samples.nodes if grid is None else np.asarray(grid, dtype=float)
    else:
        nodes = interior_grid(lo, hi, n) if grid is None else np.asarray(grid, dtype=float)
    if nodes[0] <= lo or nodes[-1] >= hi:
        raise ValueError("grid must lie strictly inside the polytope")
    return nodes


def axis_u_s(ax, s: float, grid=None, n: int = DEFAULT_NODES) -> SampledFunction:
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s}")
    nodes = _axis_grid(ax, grid, n)
    fv, fd = ax.us(float(s))
    return SampledFunction(nodes, fv(nodes), func=fv, deriv=fd)


def u_s(data, s: float, grid=None, n: int = DEFAULT_NODES, axis: int = 0) -> SampledFunction:
    """``u0 + s*udot0`` sampled on an interior grid (one axis factor for
    separable data)."""
    return axis_u_s(data.axes[axis], s, grid, n)


def cauchy_from_kahler(psi0: SampledFunction, psidot0: SampledFunction,
                       n_moment: int = DEFAULT_NODES) -> ToricCauchyData:
    """Symplectic data from a sampled Kahler potential and velocity.

    ``u0`` is the discrete conjugate of ``psi0`` on a moment grid inside the
    closure of its slope range; ``udot0(y) = -psidot0(x(y))`` with ``x(y)``
    the inverse of the slope map.
    """
    x, v = psi0.nodes, psi0.values
    if not np.allclose(psidot0.nodes, x):
        raise ValueError("psi0 and psidot0 must share their nodes")
    secant = np.diff(v) / np.diff(x)
    if not np.all(np.diff(secant) > 0):
        raise ValueError("psi0 is not strictly convex on its grid")
    if not np.all(np.isfinite(psidot0.values)):
        raise ValueError("psidot0 must be bounded")
    slopes = _slopes_4th_order(x, v)
    lo, hi = float(slopes[0]), float(slopes[-1])
    if not hi - lo > 1e-12:
        raise ValueError("degenerate slope range")
    y = interior_grid(lo, hi, n_moment)
    # Evaluate the sup at the maximizer x(y) of a smooth interpolant; the
    # plain discrete conjugate is only piecewise linear in y, which ruins
    # the second differences the lifespan needs.
    x_of_y = PchipInterpolator(slopes, x)(y)
    u0 = x_of_y * y - CubicSpline(x, v)(x_of_y)
    udot = -CubicSpline(slopes, psidot0.values)(y)
    axis = SampledAxis(
        (lo, hi),
        SampledFunction(y, u0),
        SampledFunction(y, udot),
    )
    return ToricCauchyData(Polytope.interval(lo, hi), (axis,), name="kahler-sampled")


def _slopes_4th_order(x, v):
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        return np.gradient(v, x, edge_order=2)
    h = h[0]
    d = np.gradient(v, h, edge_order=2)
    d[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
    return d


@dataclass(frozen=True)
class LifespanResult:
    """Convex lifespan ``t_cvx`` (``math.inf`` when the velocity is convex)."""

    t_cvx: float
    argmin: tuple[float, ...]

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.t_cvx)

    def t_cvx_text(self, digits: int = 6) -> str:
        return "inf" if self.is_infinite else f"{self.t_cvx:.{digits}f}"


def _axis_lifespan(ax, n: int):
    lo, hi = ax.bounds
    if isinstance(ax, SampledAxis):
        y = ax.u0_samples.nodes
        num, den = ax.d2u0_samples(), ax.d2udot_samples()
        ok = np.isfinite(num) & np.isfinite(den) & (den < 0)
        if not ok.any():
            return math.inf, None
        ratio = np.where(ok, num / np.where(ok, -den, 1.0), np.inf)
        i = int(np.argmin(ratio))
        return float(ratio[i]), float(y[i])
    y = interior_grid(lo, hi, n)
    den = ax.d2udot(y)
    neg = den < 0
    if not neg.any():
        return math.inf, None
    ratio = np.full_like(y, np.inf)
    ratio[neg] = ax.d2u0(y[neg]) / -den[neg]
    i = int(np.argmin(ratio))
    h = y[1] - y[0]
    a, b = max(y[max(i - 1, 0)], lo + 0.5 * h), min(y[min(i + 1, y.size - 1)], hi - 0.5 * h)

    def objective(t):
        d = float(ax.d2udot(t))
        return float(ax.d2u0(t)) / -d if d < 0 else math.inf

    res = minimize_scalar(objective, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    if res.success and res.fun <= ratio[i]:
        return float(res.fun), float(res.x)
    return float(ratio[i]), float(y[i])


def convex_lifespan(data, n: int = DEFAULT_NODES) -> LifespanResult:
    """Largest ``s`` for which ``u0 + s*udot0`` stays convex on P.

    Computed as ``inf u0'' / (-udot0'')`` over ``{udot0'' < 0}``; for
    separable data the Hessian is diagonal and the minimum over axes wins.
    """
    best, where = math.inf, None
    center = [0.5 * (lo + hi) for lo, hi in data.polytope.bounds]
    for j, ax in enumerate(data.axes):
        t, y = _axis_lifespan(ax, n)
        if t < best:
            best = t
            where = list(center)
            where[j] = y
    if where is None:
        where = center
    return LifespanResult(best, tuple(float(c) for c in where))


def a_set_components(data, s: float, grid=None, n: int = DEFAULT_NODES,
                     axis: int = 0) -> list[GapComponent]:
    """Gap components of one axis factor of ``u_s`` against its envelope."""
    f = u_s(data, s, grid, n, axis)
    return gap_components(f, lower_convex_envelope(f))


def a_set(data, s: float, grid=None, n: int = DEFAULT_NODES):
    """``A_s = {u_s != u_s**}``.

    Returns an ``IntervalUnion`` for intervals and a ``SeparableGapSet``
    (strips lifted from the per-axis sets) for rectangles.
    """
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s}")
    if data.dimension == 1:
        comps = a_set_components(data, s, grid, n)
        return IntervalUnion(tuple((c.a, c.b) for c in comps))
    grids = grid if grid is not None else [None] * data.dimension
    axes = []
    for j in range(data.dimension):
        comps = a_set_components(data, s, grids[j], n, axis=j)
        axes.append(IntervalUnion(tuple((c.a, c.b) for c in comps)))
    return SeparableGapSet(tuple(axes), data.polytope.bounds)


@dataclass(frozen=True)
class ASetDiagnostics:
    s1: float
    s2: float
    a_s1: IntervalUnion
    a_s2: IntervalUnion
    nested: bool
    hausdorff: float
    a_infinity: IntervalUnion
    a_large: IntervalUnion
    s_large: float
    hausdorff_to_infinity: float


def velocity_gap_set(data, grid=None, n: int = DEFAULT_NODES) -> IntervalUnion:
    """``A_inf = {udot0 != udot0**}`` on the interior grid."""
    ax = data.axis
    nodes = _axis_grid(ax, grid, n)
    f = SampledFunction(nodes, ax.udot(nodes), func=ax.udot, deriv=ax.dudot)
    comps = gap_components(f, lower_convex_envelope(f))
    return IntervalUnion(tuple((c.a, c.b) for c in comps))


def a_set_diagnostics(data, s1: float, s2: float, grid=None, n: int = DEFAULT_NODES,
                      s_large: Optional[float] = None) -> ASetDiagnostics:
    """Nesting, Hausdorff distance and the large-``s`` limit of ``A_s``.

    ``nested`` checks that each closed component of ``A_{s1}`` lies in an
    open component of ``A_{s2}`` with a margin of at least the endpoint
    refinement tolerance.
    """
    if not 0 < s1 < s2:
        raise ValueError(f"need 0 < s1 < s2, got s1={s1}, s2={s2}")
    A1 = a_set(data, s1, grid, n)
    A2 = a_set(data, s2, grid, n)
    nodes = _axis_grid(data.axis, grid, n)
    exclude = (float(nodes[0]), float(nodes[-1]))
    nested = A1.closure_inside(A2, margin=ENDPOINT_TOL, exclude=exclude)
    a_inf = velocity_gap_set(data, grid, n)
    if s_large is None:
        s_large = 50.0 * max(s2, 1.0)
    a_big = a_set(data, s_large, grid, n)
    return ASetDiagnostics(
        s1, s2, A1, A2, nested, hausdorff_distance(A1, A2),
        a_inf, a_big, s_large, hausdorff_distance(a_inf, a_big),
    )
