"""Finite unions of open intervals, used to carry the non-convexity set A_s."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = ["IntervalUnion", "SeparableGapSet", "hausdorff_distance"]


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint open intervals ``(a_i, b_i)``.

    ``b_i < a_{i+1}`` and every component has positive length. The empty
    union is a valid value.
    """

    components: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        comps = tuple((float(a), float(b)) for a, b in self.components)
        for a, b in comps:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError(f"non-finite interval endpoint in ({a}, {b})")
            if not a < b:
                raise ValueError(f"interval ({a}, {b}) has non-positive length")
        for (_, b0), (a1, _) in zip(comps, comps[1:]):
            if not b0 < a1:
                raise ValueError("components must be sorted and disjoint")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], merge_gap: float = 0.0):
        """Build a union from possibly overlapping pairs, merging components
        whose gap is ``<= merge_gap``."""
        ordered = sorted((float(a), float(b)) for a, b in pairs if b > a)
        merged: list[list[float]] = []
        for a, b in ordered:
            if merged and a - merged[-1][1] <= merge_gap:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __bool__(self):
        return bool(self.components)

    @property
    def is_empty(self) -> bool:
        return not self.components

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.components)

    def contains(self, y: float) -> bool:
        return any(a < y < b for a, b in self.components)

    def closure_contains(self, y: float) -> bool:
        return any(a <= y <= b for a, b in self.components)

    def component_of(self, y: float) -> tuple[float, float] | None:
        for a, b in self.components:
            if a < y < b:
                return (a, b)
        return None

    def distance_to(self, y: float) -> float:
        """Euclidean distance from ``y`` to the closure of the union."""
        if not self.components:
            return math.inf
        best = math.inf
        for a, b in self.components:
            if a <= y <= b:
                return 0.0
            best = min(best, abs(y - a), abs(y - b))
        return best

    def closure_inside(self, other: "IntervalUnion", margin: float = 0.0,
                       exclude: tuple[float, float] | None = None) -> bool:
        """True if every closed component of ``self`` sits inside an open
        component of ``other`` with at least ``margin`` to spare.

        Endpoints equal to a point of ``exclude`` (the boundary of P) are not
        required to be interior, matching the removal of boundary points.
        """
        for a, b in self.components:
            host = other.component_of(0.5 * (a + b))
            if host is None:
                return False
            lo, hi = host
            left_ok = (exclude is not None and a == exclude[0] == lo) or lo < a - margin
            right_ok = (exclude is not None and b == exclude[1] == hi) or b + margin < hi
            if not (left_ok and right_ok):
                return False
        return True

    def sup_distance_from(self, other: "IntervalUnion") -> float:
        """``sup_{y in self} dist(y, other)``, computed exactly.

        The distance to a union of intervals is piecewise linear, so the sup
        over a closed component is attained at its endpoints or at the
        midpoint of a gap of ``other`` falling inside it.
        """
        if not self.components:
            return 0.0
        if not other.components:
            return math.inf
        gaps = [(b0, a1) for (_, b0), (a1, _) in zip(other.components, other.components[1:])]
        worst = 0.0
        for a, b in self.components:
            candidates = [a, b]
            for g0, g1 in gaps:
                mid = 0.5 * (g0 + g1)
                if a <= mid <= b:
                    candidates.append(mid)
            worst = max(worst, max(other.distance_to(c) for c in candidates))
        return worst


def hausdorff_distance(first: IntervalUnion, second: IntervalUnion) -> float:
    """Hausdorff distance between the closures of two interval unions."""
    if first.is_empty and second.is_empty:
        return 0.0
    return max(first.sup_distance_from(second), second.sup_distance_from(first))


@dataclass(frozen=True)
class SeparableGapSet:
    """Non-convexity set of a separable potential on a rectangle.

    For ``u(y) = sum_j g_j(y_j)`` the convex envelope splits as
    ``sum_j g_j**``, so the set where ``u != u**`` is the union over axes of
    ``{y : y_j in A^(j)}``. Each axis union is kept as an ``IntervalUnion``
    together with the closed side ``[lo_j, hi_j]`` of the rectangle.
    """

    axes: tuple[IntervalUnion, ...]
    bounds: tuple[tuple[float, float], ...]

    @property
    def is_empty(self) -> bool:
        return all(u.is_empty for u in self.axes)

    @property
    def nontrivial_axes(self) -> tuple[int, ...]:
        return tuple(j for j, u in enumerate(self.axes) if not u.is_empty)

    def contains(self, point: Sequence[float]) -> bool:
        for j, (u, (lo, hi)) in enumerate(zip(self.axes, self.bounds)):
            others_ok = all(
                blo <= point[k] <= bhi
                for k, (blo, bhi) in enumerate(self.bounds) if k != j
            )
            if others_ok and u.contains(point[j]):
                return True
        return False

    def strips(self):
        """Yield ``(axis, (a, b))`` for every strip component."""
        for j, u in enumerate(self.axes):
            for comp in u:
                yield j, comp

    def distance_to(self, point: Sequence[float]) -> float:
        """Distance from ``point`` to the closure of the set."""
        best = math.inf
        for j, (a, b) in self.strips():
            d2 = 0.0
            for k, (lo, hi) in enumerate(self.bounds):
                lo_k, hi_k = (a, b) if k == j else (lo, hi)
                p = point[k]
                d = max(lo_k - p, 0.0, p - hi_k)
                d2 += d * d
            best = min(best, math.sqrt(d2))
        return best

    def touches_facet(self, axis: int, side: int) -> bool:
        """Whether the closure meets the facet ``y_axis = bound`` (side 0 for
        the lower bound, 1 for the upper) at a point of the facet's relative
        interior."""
        lo, hi = self.bounds[axis]
        target = (lo, hi)[side]
        for j, (a, b) in self.strips():
            if j != axis:
                # strip spans the whole closed range of the other coordinates
                return True
            if a <= target <= b and (a < target or b > target):
                return True
        return False
