"""The Legendre transform potential ``psi(s, x) = (u0 + s*udot0)*(x)`` in one
dimension: slices on an x-grid, pointwise values and gradients, the kink
locus, metric coefficients and finite-difference checks of the homogeneous
real Monge-Ampere equation on the regular locus.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .convex_core import (
    GapComponent,
    PLConvexFunction,
    SubdifferentialInterval,
    conjugate,
    lower_convex_envelope,
)
from .toric import DEFAULT_NODES, a_set_components, u_s

__all__ = [
    "SingularPointError",
    "SingularPoint",
    "EnvelopeModel",
    "envelope_model",
    "RaySlice",
    "ray_slice",
    "psi_value",
    "psi_gradient",
    "regular_residual",
    "residual_convergence",
    "ConvergenceStudy",
    "time_derivative",
    "MetricProfile",
    "metric_profile",
    "SmoothnessProbe",
    "essential_smoothness_probe",
    "envelope_lipschitz_gap",
    "write_slice_csv",
    "write_metric_csv",
    "fmt",
]


def fmt(v: float) -> str:
    """Decimal with 17 significant digits (round-trips a double)."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


class SingularPointError(ValueError):
    """Raised when a quantity needs differentiability at a kink of psi."""


@dataclass(frozen=True)
class SingularPoint:
    """Kink of ``psi_s`` at ``x`` with subdifferential ``[a, b]``."""

    x: float
    a: float
    b: float


@lru_cache(maxsize=1024)
def _components(data, s: float, n: int) -> tuple[GapComponent, ...]:
    return tuple(a_set_components(data, s, n=n))


class EnvelopeModel:
    """Sub-grid model of the envelope ``u_s**`` of one axis factor.

    Outside the gap components the envelope is ``u_s`` itself; on a
    component ``(a, b)`` it is the bridging chord of slope ``c``. A
    component that reaches the end of the sampled grid is continued to the
    facet as ``max(c, u_s')`` (upper side) or ``min(c, u_s')`` (lower side),
    which is exact where ``u_s`` is convex in the boundary layer.
    """

    def __init__(self, data, s: float, n: int = DEFAULT_NODES, axis: int = 0):
        if s < 0:
            raise ValueError(f"s must be non-negative, got {s}")
        self.s = float(s)
        self.axis = data.axes[axis]
        self.lo, self.hi = self.axis.bounds
        self.fv, self.fd = self.axis.us(self.s)
        self.components = _components(data, self.s, n) if axis == 0 else tuple(
            a_set_components(data, s, n=n, axis=axis))

    def slope(self, y: float) -> float:
        for c in self.components:
            if c.a <= y <= c.b:
                return c.slope
        d = float(self.fd(y))
        if self.components:
            first, last = self.components[0], self.components[-1]
            if y > last.b and not last.refined[1]:
                return max(last.slope, d)
            if y < first.a and not first.refined[0]:
                return min(first.slope, d)
        return d

    def value(self, y: float) -> float:
        for c in self.components:
            if c.a <= y <= c.b:
                return float(self.fv(c.a)) + c.slope * (y - c.a)
        return float(self.fv(y))

    def singular_points(self) -> list[SingularPoint]:
        return [SingularPoint(c.slope, c.a, c.b) for c in self.components]

    def kink_at(self, x: float, tol: float = 1e-12) -> Optional[GapComponent]:
        for c in self.components:
            if abs(x - c.slope) <= tol:
                return c
        return None

    def _bracket(self, x: float):
        width = self.hi - self.lo
        for e in range(3, 17):
            d = width * 10.0 ** (-e)
            ylo, yhi = self.lo + d, self.hi - d
            if self.slope(ylo) < x < self.slope(yhi):
                return ylo, yhi
        raise ValueError(f"slope {x} is outside the representable range of the envelope")

    def gradient_preimage(self, x: float) -> float:
        """The ``y`` with envelope slope ``x``, i.e. ``grad psi_s(x)``."""
        c = self.kink_at(x)
        if c is not None:
            raise SingularPointError(f"psi_{self.s} has a kink at x={x}: [{c.a}, {c.b}]")
        lo, hi = self._bracket(x)
        return float(brentq(lambda y: self.slope(y) - x, lo, hi, xtol=1e-15,
                            rtol=4 * np.finfo(float).eps, maxiter=300))

    def psi(self, x: float) -> float:
        c = self.kink_at(x)
        y = c.a if c is not None else self.gradient_preimage(x)
        return x * y - self.value(y)


def envelope_model(data, s: float, n: int = DEFAULT_NODES) -> EnvelopeModel:
    return EnvelopeModel(data, s, n)


def psi_value(data, s: float, x: float, n: int = DEFAULT_NODES) -> float:
    """``psi(s, x)`` evaluated at the exact maximizer (not the grid one)."""
    return EnvelopeModel(data, s, n).psi(float(x))


def psi_gradient(data, s: float, x: float, n: int = DEFAULT_NODES) -> float:
    """``d psi / dx``; raises ``SingularPointError`` at a kink."""
    return EnvelopeModel(data, s, n).gradient_preimage(float(x))


@dataclass(frozen=True, eq=False)
class RaySlice:
    s: float
    x: np.ndarray
    psi: PLConvexFunction
    singular_points: tuple[SingularPoint, ...]
    regular_mask: np.ndarray
    width_tol: float
    model: EnvelopeModel

    def subdifferential(self, x: float) -> SubdifferentialInterval:
        """Exact subdifferential from the dual picture."""
        c = self.model.kink_at(x)
        if c is not None:
            return SubdifferentialInterval(c.a, c.b)
        y = self.model.gradient_preimage(x)
        return SubdifferentialInterval(y, y)

    def gradient(self) -> np.ndarray:
        """``d psi / dx`` on the grid; the midpoint of ``[a, b]`` at a kink."""
        out = np.empty_like(self.x)
        for i, xi in enumerate(self.x):
            sd = self.subdifferential(float(xi))
            out[i] = 0.5 * (sd.lo + sd.hi)
        return out


def _snap(k: SingularPoint, x: np.ndarray) -> SingularPoint:
    """Move a kink onto a grid point it matches up to rounding, so the PL
    slice does not get a sliver segment."""
    i = int(np.argmin(np.abs(x - k.x)))
    if abs(x[i] - k.x) <= 1e-12 * max(1.0, abs(k.x)):
        return SingularPoint(float(x[i]), k.a, k.b)
    return k


def ray_slice(data, s: float, x_grid, n: int = DEFAULT_NODES) -> RaySlice:
    """``psi_s`` on ``x_grid`` as the conjugate of the lower envelope of
    ``u_s``, with its kinks read off the envelope's bridging slopes.

    A grid point is regular when the subdifferential width seen by a
    centered stencil through it (neighbors included) is at most
    ``width_tol = 1e-7 * (range of slopes)``.
    """
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2 or not np.all(np.diff(x) > 0):
        raise ValueError("x_grid must be strictly increasing with at least 2 points")
    f = u_s(data, s, n=n)
    env = lower_convex_envelope(f)
    model = EnvelopeModel(data, s, n)
    kinks = tuple(_snap(k, x) for k in model.singular_points())
    breaks = np.union1d(x, [k.x for k in kinks if x[0] < k.x < x[-1]])
    psi = conjugate(env, breaks)
    width_tol = 1e-7 * (env.breakpoints[-1] - env.breakpoints[0])
    width = np.zeros_like(x)
    step = np.diff(x)
    left = np.concatenate(([step[0]], step))
    right = np.concatenate((step, [step[-1]]))
    for k in kinks:
        near = (x - left <= k.x) & (k.x <= x + right)
        width[near] = np.maximum(width[near], k.b - k.a)
    mask = width <= width_tol
    mask.setflags(write=False)
    return RaySlice(float(s), x, psi, kinks, mask, float(width_tol), model)


def _check_regular(data, s, x, dx, n):
    for sv in s:
        m = EnvelopeModel(data, sv, n)
        if m.kink_at(x, tol=dx * 1.000001) is not None:
            raise SingularPointError(f"(s={sv}, x={x}) is within one stencil step of a kink")


PsiFn = Callable[[float, float], float]


def regular_residual(data, s: float, x: float, h: float = 1e-4,
                     dx: Optional[float] = None, psi_fn: Optional[PsiFn] = None,
                     n: int = DEFAULT_NODES) -> float:
    """``|psi_ss - (psi_sx)^2 / psi_xx|`` by centered differences.

    ``h`` is the step in ``s`` and ``dx`` (default ``h``) the step in ``x``.
    ``psi_fn(s, x)`` replaces the Legendre potential, e.g. for negative
    controls. The stencil must avoid kinks at ``s - h``, ``s``, ``s + h``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if s - h < 0:
        raise ValueError("stencil reaches negative s")
    dx = h if dx is None else dx
    _check_regular(data, (s - h, s, s + h), x, dx, n)
    if psi_fn is None:
        models = {sv: EnvelopeModel(data, sv, n) for sv in (s - h, s, s + h)}
        psi_fn = lambda sv, xv: models[sv].psi(xv)  # noqa: E731
    p = {(i, j): psi_fn(s + i * h, x + j * dx) for i in (-1, 0, 1) for j in (-1, 0, 1)}
    pss = (p[1, 0] - 2 * p[0, 0] + p[-1, 0]) / h**2
    pxx = (p[0, 1] - 2 * p[0, 0] + p[0, -1]) / dx**2
    psx = (p[1, 1] - p[1, -1] - p[-1, 1] + p[-1, -1]) / (4 * h * dx)
    return abs(pss - psx**2 / pxx)


@dataclass(frozen=True)
class ConvergenceStudy:
    steps: tuple[float, ...]
    residuals: tuple[float, ...]

    @property
    def orders(self) -> tuple[float, ...]:
        r, h = self.residuals, self.steps
        return tuple(math.log(r[i] / r[i + 1]) / math.log(h[i] / h[i + 1])
                     if r[i] > 0 and r[i + 1] > 0 else math.inf
                     for i in range(len(r) - 1))

    @property
    def observed_order(self) -> float:
        """Least-squares slope of ``log r`` against ``log h``."""
        r = np.asarray(self.residuals)
        if np.any(r <= 0):
            return math.inf
        return float(np.polyfit(np.log(self.steps), np.log(r), 1)[0])


def residual_convergence(data, s: float, x: float, h0: float = 1e-2, levels: int = 3,
                         psi_fn: Optional[PsiFn] = None,
                         n: int = DEFAULT_NODES) -> ConvergenceStudy:
    """Residuals at steps ``h0, h0/2, ..., h0/2**(levels-1)``."""
    steps = tuple(h0 / 2**k for k in range(levels))
    res = tuple(regular_residual(data, s, x, h, psi_fn=psi_fn, n=n) for h in steps)
    return ConvergenceStudy(steps, res)


def time_derivative(data, s: float, x: float, n: int = DEFAULT_NODES) -> float:
    """``d psi / ds = -udot0(grad psi_s(x))`` at a regular point."""
    y = psi_gradient(data, s, x, n)
    return -float(data.axis.udot(y))


@dataclass(frozen=True, eq=False)
class MetricProfile:
    s: float
    y: np.ndarray
    u_yy: np.ndarray
    zero_mask: np.ndarray


def metric_profile(data, s: float, y_grid, n: int = DEFAULT_NODES,
                   step: float = 1e-3) -> MetricProfile:
    """Second derivative of ``u_s**`` along ``y_grid``: zero on the gap
    components, a Richardson-extrapolated centered difference of ``u_s``
    elsewhere. The step shrinks near the facets to stay inside P."""
    y = np.asarray(y_grid, dtype=float)
    model = EnvelopeModel(data, s, n)
    lo, hi = model.lo, model.hi
    out = np.empty_like(y)
    zero = np.zeros(y.shape, dtype=bool)

    def second_difference(yi, d):
        return (float(model.fv(yi + d)) - 2 * float(model.fv(yi)) + float(model.fv(yi - d))) / d**2

    for i, yi in enumerate(y):
        if any(c.a <= yi <= c.b for c in model.components):
            out[i] = 0.0
            zero[i] = True
            continue
        d = min(step, 0.25 * (yi - lo), 0.25 * (hi - yi))
        out[i] = (4 * second_difference(yi, d / 2) - second_difference(yi, d)) / 3
    return MetricProfile(float(s), y, np.maximum(out, 0.0), zero)


@dataclass(frozen=True)
class SmoothnessProbe:
    """Envelope slope at standoffs ``delta_k`` from each end of P.

    ``rows`` holds ``(side, k, delta, slope)`` with side ``"lo"`` or ``"hi"``.
    """

    s: float
    rows: tuple[tuple[str, int, float, float], ...]
    monotone: bool

    def max_abs_slope(self, side: str) -> float:
        return max(abs(r[3]) for r in self.rows if r[0] == side)

    def covers(self, bound: float) -> bool:
        lo = min(r[3] for r in self.rows if r[0] == "lo")
        hi = max(r[3] for r in self.rows if r[0] == "hi")
        return lo <= -bound and hi >= bound


def _slope_at_standoff(model: EnvelopeModel, side: str, delta: float) -> float:
    """Envelope slope at distance ``delta`` from a facet, computing the
    vanishing facet function as ``|v| * delta`` so that tiny standoffs do
    not cancel against the facet offset."""
    ax = model.axis
    if not hasattr(ax, "facets"):
        lo, hi = ax.bounds
        return model.slope(lo + delta if side == "lo" else hi - delta)
    (v0, l0), (v1, l1) = ax.facets
    lo, hi = ax.bounds
    if side == "lo":
        y = lo + delta
        ells = ((v0, abs(v0) * delta), (v1, v1 * y - l1))
    else:
        y = hi - delta
        ells = ((v0, v0 * y - l0), (v1, abs(v1) * delta))
    g = sum(v * (math.log(l) + 1.0) for v, l in ells)
    d = ax.scale * g + float(ax._fpoly.deriv()(y)) + model.s * float(ax.dudot(y))
    comps = model.components
    if comps:
        inner = comps[0] if side == "lo" else comps[-1]
        if inner.a <= y <= inner.b:
            return inner.slope
        if side == "lo" and y < inner.a and not inner.refined[0]:
            return min(inner.slope, d)
        if side == "hi" and y > inner.b and not inner.refined[1]:
            return max(inner.slope, d)
    return d


def essential_smoothness_probe(data, s: float, delta0: float = 0.25, levels: int = 80,
                               n: int = DEFAULT_NODES) -> SmoothnessProbe:
    """Tabulate envelope slopes at ``delta_k = delta0 * 2**-k``, k = 1..levels.

    ``monotone`` records whether ``|slope|`` is non-decreasing in ``k`` on
    both sides.
    """
    model = EnvelopeModel(data, s, n)
    rows = []
    monotone = True
    for side in ("lo", "hi"):
        prev = -math.inf
        for k in range(1, levels + 1):
            delta = delta0 * 2.0 ** (-k)
            slope = _slope_at_standoff(model, side, delta)
            signed = -slope if side == "lo" else slope
            if signed < prev - 1e-12 * max(1.0, abs(prev)):
                monotone = False
            prev = max(prev, signed)
            rows.append((side, k, delta, slope))
    return SmoothnessProbe(float(s), tuple(rows), monotone)


def envelope_lipschitz_gap(data, s1: float, s2: float, n: int = DEFAULT_NODES):
    """``(sup_y |u_{s2}** - u_{s1}**|, |s2 - s1| * max_P |udot0|)`` on the grid."""
    vals = []
    for s in (s1, s2):
        f = u_s(data, s, n=n)
        env = lower_convex_envelope(f)
        vals.append(np.interp(f.nodes, env.breakpoints, env.values))
    return float(np.max(np.abs(vals[1] - vals[0]))), abs(s2 - s1) * data.velocity_sup()


def write_slice_csv(path, sl: RaySlice) -> None:
    """Columns ``x, psi, dpsi_dx, is_regular``."""
    grad = sl.gradient()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "psi", "dpsi_dx", "is_regular"])
        psi_vals = sl.psi(sl.x)
        for xi, pv, gv, reg in zip(sl.x, psi_vals, grad, sl.regular_mask):
            w.writerow([fmt(xi), fmt(pv), fmt(gv), fmt(bool(reg))])


def write_metric_csv(path, prof: MetricProfile) -> None:
    """Columns ``y, u_yy``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "u_yy"])
        for yi, ui in zip(prof.y, prof.u_yy):
            w.writerow([fmt(yi), fmt(ui)])
