"""End-to-end acceptance checks.

Each check returns ``(passed, detail)``; the test prints one PASS/FAIL line
per criterion and then asserts. Run with ``pytest tests/test_acceptance.py -v``.
"""

import math

import numpy as np
import pytest

from conftest import swept_mass
from legendre_hrma import fubini_study, p1xp1
from legendre_hrma.convex_core import (
    PLUS_INFINITY_OUTSIDE,
    PLConvexFunction,
    SampledFunction,
    conjugate,
    lower_convex_envelope,
    subdifferential,
)
from legendre_hrma.intervals import hausdorff_distance
from legendre_hrma.mass import mass_report, regular_image_deviation, subdifferential_image_area
from legendre_hrma.ray import SingularPointError, envelope_lipschitz_gap, residual_convergence
from legendre_hrma.toric import (
    AxisSpec,
    Polytope,
    ToricCauchyData,
    a_set,
    convex_lifespan,
    interior_grid,
)


def lifespan_reproduction():
    res = convex_lifespan(fubini_study(), n=4097)
    ok = abs(res.t_cvx - 1.0) <= 1e-3 and abs(res.argmin[0]) <= 1e-3
    return ok, f"t_cvx={res.t_cvx:.9f} argmin={res.argmin[0]:.2e}"


def total_mass_limit():
    rep = mass_report(fubini_study(), 50.0, raster_cells=2048, regular_samples=200)
    m = rep.mass_singular_lower
    ok = (abs(m - 4 / 3) <= 0.02 * 4 / 3
          and abs(rep.prop3_bound - 4 / 3) <= 1e-6
          and m <= rep.prop3_bound * 1.005 + rep.cell_area
          and rep.ok)
    return ok, f"mass={m:.6f} bound={rep.prop3_bound:.8f} checks={rep.checks}"


def finite_time_mass():
    worst, parts = 0.0, []
    for T in (1.1, 1.5, 2.0, 5.0):
        m = mass_report(fubini_study(), T, regular_samples=0).mass_singular_lower
        rel = abs(m - swept_mass(T)) / swept_mass(T)
        worst = max(worst, rel)
        parts.append(f"T={T}: {m:.5f} vs {swept_mass(T):.5f}")
    return worst <= 0.05, f"worst rel err {worst:.2e}; " + "; ".join(parts)


def zero_mass_before_lifespan():
    rep = mass_report(fubini_study(), 1.0, regular_samples=100)
    ok = rep.mass_singular_lower == 0.0 and rep.chord_count == 0 and rep.ok
    return ok, f"mass={rep.mass_singular_lower} chords={rep.chord_count}"


def _random_concave_velocities(count, seed):
    rng = np.random.default_rng(seed)
    y = np.linspace(-1, 1, 2001)
    out = []
    while len(out) < count:
        deg = int(rng.integers(2, 7))
        c = rng.normal(size=deg + 1)
        if np.any(np.polynomial.polynomial.polyval(y, np.polynomial.polynomial.polyder(c, 2)) < 0):
            out.append(ToricCauchyData(Polytope.interval(-1, 1),
                                       (AxisSpec.interval(-1, 1, velocity=tuple(c)),)))
    return out


def sandwich_inequality():
    worst, bad = 0.0, []
    for k, data in enumerate(_random_concave_velocities(10, seed=5)):
        t = convex_lifespan(data).t_cvx
        for T in (1.25 * t + 0.05, t + 3.0):
            rep = mass_report(data, T, s_mesh_size=100, raster_cells=512, regular_samples=0)
            m, b = rep.mass_singular_lower, rep.prop3_bound
            worst = max(worst, m / b)
            if not 0 < m <= 1.005 * b:
                bad.append((k, round(T, 4), m, b))
    return not bad, f"20 cases, max mass/bound={worst:.5f}, violations={bad}"


def regular_locus_residual():
    data = fubini_study()
    rng = np.random.default_rng(2024)
    worst_order, worst_res, used = math.inf, 0.0, 0
    while used < 100:
        s, x = float(rng.uniform(0.05, 3.0)), float(rng.uniform(-3.0, 3.0))
        try:
            study = residual_convergence(data, s, x, h0=2e-2, levels=4)
        except SingularPointError:
            continue
        used += 1
        worst_order = min(worst_order, min(study.orders))
        worst_res = max(worst_res, study.residuals[-1])
    ok = worst_order >= 1.8 and worst_res <= 1e-4
    return ok, f"min order={worst_order:.3f} max terminal residual={worst_res:.2e}"


def regular_subgradient_image():
    dev, used = regular_image_deviation(fubini_study(), 2.0, samples=1000, seed=1)
    return dev <= 1e-6 and used == 1000, f"max deviation={dev:.2e} over {used} points"


def _nesting_and_hausdorff(data, s):
    nodes = interior_grid(-1, 1, 4097)
    exclude = (float(nodes[0]), float(nodes[-1]))
    sets = [a_set(data, float(v)) for v in s]
    nested = all(sets[i].closure_inside(sets[j], 1e-10, exclude)
                 for i in range(len(s)) for j in range(i + 1, len(s)))
    C = max(hausdorff_distance(sets[i], sets[i + 1]) / (s[i + 1] - s[i]) for i in range(len(s) - 1))
    return nested, C


def a_set_monotone_and_continuous():
    data = fubini_study()
    nested, C = _nesting_and_hausdorff(data, np.linspace(1.1, 3.0, 50))
    nested2, C2 = _nesting_and_hausdorff(data, np.linspace(1.1, 3.0, 99))
    change = abs(C2 - C) / C
    ok = nested and nested2 and change <= 0.1
    return ok, f"nested={nested and nested2} C={C:.4f} C(doubled)={C2:.4f} change={change:.1%}"


def separable_boundary_contact():
    data = p1xp1()
    details, ok = [], True
    for s in (0.6, 0.75, 0.9):
        A = a_set(data, s)
        dist = min(A.distance_to(v) for v in data.polytope.vertices)
        touches = A.touches_facet(1, 0) and A.touches_facet(1, 1)
        ok &= touches and dist >= 0.05
        details.append(f"s={s}: touches={touches} vertex_dist={dist:.4f}")
    return ok, "; ".join(details)


def _random_convex_pl(rng):
    n = int(rng.integers(2, 41))
    x = rng.uniform(-5, 0) + np.concatenate(([0.0], np.cumsum(rng.uniform(0.02, 1.0, n - 1))))
    slopes = np.sort(rng.uniform(-3, 3, n - 1))
    v = rng.uniform(-2, 2) + np.concatenate(([0.0], np.cumsum(slopes * np.diff(x))))
    return x, v


def convex_kernel_properties():
    rng = np.random.default_rng(10)
    failures = {"involution": 0, "fenchel_young": 0, "idempotence": 0, "brute_force": 0}
    for _ in range(200):
        x, v = _random_convex_pl(rng)
        f = PLConvexFunction(x, v, PLUS_INFINITY_OUTSIDE)
        s = np.diff(v) / np.diff(x)
        y = np.linspace(s[0] - 1, s[-1] + 1, 2000)
        h = min(np.min(np.diff(x)), y[1] - y[0])
        g = conjugate(f, y)
        if np.max(np.abs(conjugate(g, x).values - v)) > 10 * h:
            failures["involution"] += 1
        gap = v[:, None] + g.values[None, :] - x[:, None] * y[None, :]
        fy = gap.min() >= -1e-12
        for i in range(x.size):
            sd = subdifferential(f, float(x[i]))
            inside = (y >= sd.lo) & (y <= sd.hi)
            fy &= bool(np.all(gap[i, inside] <= 10 * h))
        failures["fenchel_young"] += not fy
        table = x[None, :] * y[:, None] - v[None, :]
        ulps = 8 * np.spacing(np.abs(table).max(axis=1) + 1.0)
        if np.any(np.abs(g.values - table.max(axis=1)) > ulps):
            failures["brute_force"] += 1
        raw = SampledFunction(x, rng.uniform(-10, 10, x.size))
        env = lower_convex_envelope(raw)
        again = lower_convex_envelope(SampledFunction(env.breakpoints, env.values))
        e = np.interp(x, env.breakpoints, env.values)
        if not (np.array_equal(again.breakpoints, env.breakpoints)
                and np.array_equal(again.values, env.values)
                and np.all(e <= raw.values + 1e-12 * (1 + np.abs(raw.values)))):
            failures["idempotence"] += 1
    return not any(failures.values()), f"200 instances, failures={failures}"


def alexandrov_sanity():
    area = subdifferential_image_area(lambda s, x: abs(s) + abs(x), (0.0, 0.0), cells=1024)
    return abs(area - 4.0) <= 0.04, f"area={area:.5f}"


def lipschitz_in_s():
    rng = np.random.default_rng(12)
    quartic = ToricCauchyData(Polytope.interval(-1, 1),
                              (AxisSpec.interval(-1, 1, velocity=(0.2, 0.0, -3.0, 0.0, 2.5)),))
    worst, pairs = 0.0, 0
    for data in (fubini_study(), quartic):
        for _ in range(20):
            s1, s2 = np.sort(rng.uniform(0, 5, 2))
            gap, bound = envelope_lipschitz_gap(data, float(s1), float(s2))
            pairs += 1
            worst = max(worst, gap / bound if bound > 0 else 0.0)
    return worst <= 1.0 + 1e-12, f"{pairs} pairs, max gap/bound={worst:.6f}"


CRITERIA = [
    (1, "lifespan reproduction", lifespan_reproduction),
    (2, "total mass limit", total_mass_limit),
    (3, "finite-T mass", finite_time_mass),
    (4, "zero mass before lifespan", zero_mass_before_lifespan),
    (5, "sandwich inequality", sandwich_inequality),
    (6, "regular-locus PDE residual", regular_locus_residual),
    (7, "regular subgradient image", regular_subgradient_image),
    (8, "A_s monotonicity and continuity", a_set_monotone_and_continuous),
    (9, "separable boundary contact", separable_boundary_contact),
    (10, "convex-analysis kernel properties", convex_kernel_properties),
    (11, "Alexandrov sanity", alexandrov_sanity),
    (12, "Lipschitz in s", lipschitz_in_s),
]


@pytest.mark.parametrize("number,name,check", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, name, check, capsys):
    passed, detail = check()
    with capsys.disabled():
        print(f"\n{'PASS' if passed else 'FAIL'} criterion {number} ({name}): {detail}")
    assert passed, detail
