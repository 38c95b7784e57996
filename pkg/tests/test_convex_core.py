import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import FROZEN_TANGENCY, fs_psi
from legendre_hrma.convex_core import (
    FINITE,
    PLUS_INFINITY_OUTSIDE,
    DomainError,
    PLConvexFunction,
    SampledFunction,
    conjugate,
    conjugate_argmax,
    gap_components,
    gap_set,
    lower_convex_envelope,
    subdifferential,
)
from legendre_hrma.toric import interior_grid, u_s


# ---------------------------------------------------------------- examples

def test_quadratic_is_self_dual():
    x = np.linspace(-3, 3, 2049)
    f = PLConvexFunction(x, 0.5 * x**2)
    y = np.linspace(-2, 2, 801)
    g = conjugate(f, y)
    h = x[1] - x[0]
    assert np.max(np.abs(g.values - 0.5 * y**2)) <= 3 * h


def test_abs_conjugates_to_indicator():
    x = np.linspace(-2, 2, 401)
    f = PLConvexFunction(x, np.abs(x), FINITE)
    y = np.linspace(-1, 1, 101)
    g = conjugate(f, y)
    assert np.max(np.abs(g.values)) <= 1e-14


def test_finite_mode_rejects_query_beyond_slopes():
    x = np.linspace(-2, 2, 5)
    f = PLConvexFunction(x, np.abs(x), FINITE)
    with pytest.raises(ValueError, match="inf outside"):
        conjugate(f, [-1.5, 0.0])


def test_fubini_study_potential_conjugate(fs):
    grid = interior_grid(-1, 1, 4097)
    env = lower_convex_envelope(u_s(fs, 0.0, grid))
    x = np.linspace(-3, 3, 101)
    g = conjugate(env, x)
    assert g.boundary_mode == FINITE
    assert np.max(np.abs(g.values - fs_psi(x))) < 1e-5


def test_conjugate_rejects_bad_grids():
    f = PLConvexFunction([0.0, 1.0], [0.0, 1.0], PLUS_INFINITY_OUTSIDE)
    with pytest.raises(ValueError, match="non-empty"):
        conjugate(f, [])
    with pytest.raises(ValueError, match="strictly increasing.*index 1"):
        conjugate(f, [0.0, 1.0, 1.0])


def test_plus_infinity_domain_restricts_the_sup():
    x = np.array([-1.0, 0.0, 1.0])
    f = PLConvexFunction(x, np.zeros(3), PLUS_INFINITY_OUTSIDE)
    g = conjugate(f, [-3.0, 0.0, 2.0])
    assert g.values.tolist() == [3.0, 0.0, 2.0]


def test_argmax_takes_smallest_maximizer():
    f = PLConvexFunction([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], PLUS_INFINITY_OUTSIDE)
    assert conjugate_argmax(f, [0.0]).tolist() == [0]


def test_envelope_of_convex_is_identity():
    x = np.linspace(-1, 1, 51)
    f = SampledFunction(x, x**2 + 3 * x)
    env = lower_convex_envelope(f)
    assert np.array_equal(env.breakpoints, x)
    assert np.array_equal(env.values, f.values)


def test_envelope_of_collinear_nodes_keeps_them():
    x = np.arange(7.0)
    env = lower_convex_envelope(SampledFunction(x, 2 * x - 1))
    assert env.breakpoints.size == 7


def test_concave_parabola_envelope_is_chord():
    x = np.linspace(-1, 1, 1001)
    env = lower_convex_envelope(SampledFunction(x, -x**2))
    assert env.breakpoints.tolist() == [-1.0, 1.0]
    assert np.allclose(env(x), -1.0, atol=1e-15)


def test_envelope_needs_two_nodes():
    f = SampledFunction([0.0, 1.0], [0.0, 0.0])
    object.__setattr__(f, "nodes", np.array([0.0]))
    object.__setattr__(f, "values", np.array([0.0]))
    with pytest.raises(ValueError, match="2 nodes"):
        lower_convex_envelope(f)


def test_envelope_flat_on_tangency_interval(fs):
    a2 = FROZEN_TANGENCY[2.0]
    grid = interior_grid(-1, 1, 4097)
    f = u_s(fs, 2.0, grid)
    comps = gap_components(f, lower_convex_envelope(f))
    assert len(comps) == 1
    c = comps[0]
    assert c.a == pytest.approx(-a2, abs=1e-10)
    assert c.b == pytest.approx(a2, abs=1e-10)
    assert abs(c.slope) < 1e-12
    # independent flatness check: u_2 lies above the chord inside the interval
    y = np.linspace(-a2, a2, 100_001)[1:-1]
    chord = fs.u0(a2) + 2 * fs.udot(a2)
    assert np.all(fs.u0(y) + 2 * fs.udot(y) > chord)


def test_subdifferential_cases():
    x = np.linspace(-1, 1, 3)
    f = PLConvexFunction(x, np.abs(x), FINITE)
    sd = subdifferential(f, 0.0)
    assert (sd.lo, sd.hi) == (-1.0, 1.0)
    assert not sd.is_singleton and sd.width == 2.0

    g = PLConvexFunction([0.0, 1.0, 3.0, 4.0], [0.0, 1.0, 5.0, 10.0])
    sd = subdifferential(g, 3.0)
    assert (sd.lo, sd.hi) == (2.0, 5.0)
    assert subdifferential(g, 2.0).is_singleton

    h = PLConvexFunction(x, np.abs(x), PLUS_INFINITY_OUTSIDE)
    assert subdifferential(h, -1.0).lo == -math.inf
    assert subdifferential(h, 1.0).hi == math.inf
    assert subdifferential(f, -1.0).lo == -1.0
    with pytest.raises(DomainError):
        subdifferential(h, 1.5)


def test_subdifferential_on_flat_segment(fs):
    f = u_s(fs, 2.0, interior_grid(-1, 1, 4097))
    env = lower_convex_envelope(f)
    sd = subdifferential(env, 0.0)
    assert sd.lo == sd.hi
    assert abs(sd.lo) < 1e-12


def test_gap_set_empty_for_convex_and_before_lifespan(fs):
    x = np.linspace(-1, 1, 101)
    f = SampledFunction(x, np.exp(x))
    assert gap_set(f, lower_convex_envelope(f)).is_empty
    grid = interior_grid(-1, 1, 4097)
    for s in (0.25, 0.5, 0.999, 1.0):
        f = u_s(fs, s, grid)
        assert gap_set(f, lower_convex_envelope(f)).is_empty


def test_gap_set_rejects_non_positive_tolerance():
    x = np.linspace(-1, 1, 11)
    f = SampledFunction(x, -x**2)
    with pytest.raises(ValueError, match="gap_tol"):
        gap_set(f, lower_convex_envelope(f), 0.0)


def test_gap_refinement_without_closures_uses_spline():
    # double well: tangency points at +-1 by symmetry
    x = np.linspace(-2, 2, 2001)
    f = SampledFunction(x, (x**2 - 1) ** 2)
    comps = gap_components(f, lower_convex_envelope(f))
    assert len(comps) == 1
    assert comps[0].a == pytest.approx(-1.0, abs=1e-6)
    assert comps[0].b == pytest.approx(1.0, abs=1e-6)


def test_nearby_components_merge():
    x = np.linspace(0, 1, 101)
    v = np.zeros_like(x)
    v[40] = v[42] = 1.0  # two bumps one node apart
    f = SampledFunction(x, v)
    assert len(gap_components(f, lower_convex_envelope(f))) == 1


def test_sampled_function_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        SampledFunction([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="finite"):
        SampledFunction([0.0, 1.0], [1.0, math.nan])
    with pytest.raises(ValueError, match="same length"):
        SampledFunction([0.0, 1.0], [1.0])


# ---------------------------------------------------------- property suites

@st.composite
def convex_pl(draw, min_size=2, max_size=40):
    n = draw(st.integers(min_size, max_size))
    gaps = draw(st.lists(st.floats(0.02, 1.0), min_size=n - 1, max_size=n - 1))
    x0 = draw(st.floats(-5.0, 0.0))
    x = x0 + np.concatenate(([0.0], np.cumsum(gaps)))
    slopes = np.sort(draw(st.lists(st.floats(-3.0, 3.0), min_size=n - 1, max_size=n - 1)))
    v0 = draw(st.floats(-2.0, 2.0))
    v = v0 + np.concatenate(([0.0], np.cumsum(slopes * np.diff(x))))
    return x, v


def _slope_grid(x, v, m=400):
    s = np.diff(v) / np.diff(x)
    lo, hi = s[0] - 1.0, s[-1] + 1.0
    return np.linspace(lo, hi, m)


@settings(max_examples=200, deadline=None)
@given(convex_pl())
def test_involution(pl):
    x, v = pl
    f = PLConvexFunction(x, v, PLUS_INFINITY_OUTSIDE)
    y = _slope_grid(x, v, 4000)
    g = conjugate(f, y)
    ff = conjugate(g, x)
    h = min(np.min(np.diff(x)), y[1] - y[0])
    assert np.max(np.abs(ff.values - v)) <= 10 * h


@settings(max_examples=200, deadline=None)
@given(convex_pl())
def test_fenchel_young(pl):
    x, v = pl
    f = PLConvexFunction(x, v, PLUS_INFINITY_OUTSIDE)
    y = _slope_grid(x, v, 300)
    g = conjugate(f, y)
    h = min(np.min(np.diff(x)), y[1] - y[0])
    gap = v[:, None] + g.values[None, :] - x[:, None] * y[None, :]
    assert gap.min() >= -1e-12
    for i in range(x.size):
        sd = subdifferential(f, float(x[i]))
        inside = (y >= sd.lo) & (y <= sd.hi)
        assert np.all(gap[i, inside] <= 10 * h)
        near_equal = gap[i] <= 1e-12
        assert np.all(inside[near_equal] | (np.abs(y[near_equal] - np.clip(y[near_equal], sd.lo, sd.hi)) <= 10 * h))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=80), st.floats(-5, 0))
def test_envelope_idempotent_and_dominated(vals, x0):
    x = x0 + np.arange(len(vals)) * 0.1
    f = SampledFunction(x, vals)
    env = lower_convex_envelope(f)
    again = lower_convex_envelope(SampledFunction(env.breakpoints, env.values))
    assert np.array_equal(again.breakpoints, env.breakpoints)
    assert np.array_equal(again.values, env.values)
    e = np.interp(x, env.breakpoints, env.values)
    assert np.all(e <= f.values + 1e-12 * (1 + np.abs(f.values)))
    assert np.all(np.diff(env.slopes) >= -1e-9)
    # where no gap is reported the envelope meets the function
    A = gap_set(f, env, 1e-9 * (np.ptp(f.values) + 1e-300))
    for xi, fi, ei in zip(x, f.values, e):
        if not A.contains(xi):
            assert ei == pytest.approx(fi, abs=1e-8 * (1 + np.ptp(f.values)))


@settings(max_examples=200, deadline=None)
@given(convex_pl(), st.floats(0.0, 2.0), st.floats(0.0, 1.0), st.integers(0, 39))
def test_order_reversal(pl, lift, tilt, k):
    x, v = pl
    k = k % x.size
    w = v + lift + tilt * np.abs(x - x[k])
    f = PLConvexFunction(x, v, PLUS_INFINITY_OUTSIDE)
    g = PLConvexFunction(x, w, PLUS_INFINITY_OUTSIDE)
    y = _slope_grid(x, v, 200)
    assert np.all(conjugate(g, y).values <= conjugate(f, y).values + 1e-12)


@settings(max_examples=200, deadline=None)
@given(convex_pl(), st.integers(2, 300))
def test_sweep_matches_brute_force_to_rounding(pl, m):
    # adversarial plateaus make x*y - f(x) non-unimodal at the ulp level
    x, v = pl
    f = PLConvexFunction(x, v, PLUS_INFINITY_OUTSIDE)
    y = _slope_grid(x, v, m)
    g = conjugate(f, y)
    table = x[None, :] * y[:, None] - v[None, :]
    best = table.max(axis=1)
    assert np.all(np.abs(g.values - best) <= 8 * np.spacing(np.abs(table).max(axis=1) + 1.0))


@pytest.mark.parametrize("seed", range(50))
def test_sweep_matches_brute_force_exactly(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 200))
    x = np.sort(rng.uniform(-5, 5, n))
    x = np.unique(x)
    slopes = np.sort(rng.uniform(-3, 3, x.size - 1))
    v = rng.uniform(-1, 1) + np.concatenate(([0.0], np.cumsum(slopes * np.diff(x))))
    f = PLConvexFunction(x, v, PLUS_INFINITY_OUTSIDE)
    y = np.sort(rng.uniform(-4, 4, int(rng.integers(1, 300))))
    y = np.unique(y)
    table = x[None, :] * y[:, None] - v[None, :]
    g = conjugate(f, y)
    assert np.array_equal(g.values, table.max(axis=1))
    assert np.array_equal(conjugate_argmax(f, y), table.argmax(axis=1))
