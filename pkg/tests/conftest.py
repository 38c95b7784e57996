"""Shared oracles for the fubini-study data ``u0 = (1+y)log(1+y) +
(1-y)log(1-y)``, ``udot0 = -y^2`` on ``[-1, 1]``.

For ``s > 1`` the non-convexity set is ``(-a_s, a_s)`` where ``a_s > 0``
solves ``log((1+a)/(1-a)) = 2 s a``; the mass swept up to ``T`` is
``(4/3) a_T^3``. The frozen values below were computed with 30-digit
bisection in mpmath.
"""

import math

import numpy as np
import pytest

FROZEN_TANGENCY = {
    1.1: 0.50294057494464182,
    1.2: 0.65856966040575400,
    1.5: 0.85855963664011036,
    2.0: 0.95750402407726874,
    3.0: 0.99490152845262894,
    5.0: 0.99990912171523255,
}

FROZEN_MASS = {
    1.1: 0.16962456947611285,
    1.2: 0.38084117348964154,
    1.5: 0.84382062850277583,
    2.0: 1.1704707364254486,
    3.0: 1.3130432480832991,
    5.0: 1.3329698532287134,
}


def tangency_root(s: float, tol: float = 1e-15) -> float:
    """Positive root of ``log((1+a)/(1-a)) - 2 s a`` by plain bisection."""
    if s <= 1:
        return 0.0
    g = lambda a: math.log1p(a) - math.log1p(-a) - 2 * s * a  # noqa: E731
    lo, hi = 1e-12, 1 - 1e-16
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def swept_mass(T: float) -> float:
    return 4.0 / 3.0 * tangency_root(T) ** 3


def fs_psi(x):
    """Conjugate of ``u0``: ``2 log cosh(x / 2)``."""
    x = np.asarray(x, dtype=float)
    return 2 * (np.logaddexp(x / 2, -x / 2) - math.log(2))


@pytest.fixture(scope="session")
def fs():
    from legendre_hrma import fubini_study

    return fubini_study()
