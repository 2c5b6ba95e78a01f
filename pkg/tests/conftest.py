import math

import numpy as np
import pytest

from src.models import SolveOptions, TranscendentKind, UnfoldedSequence
from src.painleve import solve_linear_correction, solve_sigma0, solve_u0

# Covers the sigma path up to s = 6 (X = pi s) and the u path up to s = 3 (X = 2 pi s)
S_MAX = 20.0


@pytest.fixture(scope="session")
def solve_options():
    return SolveOptions(s_max=S_MAX)


@pytest.fixture(scope="session")
def transcendents(solve_options):
    """Cached solver: transcendents(kind, xi) -> TranscendentSolution"""
    cache = {}

    def get(kind, xi):
        kind = TranscendentKind.parse(kind) if isinstance(kind, str) else kind
        key = (kind, xi)
        if key not in cache:
            if kind is TranscendentKind.SIGMA0:
                cache[key] = solve_sigma0(xi, solve_options)
            elif kind is TranscendentKind.U0:
                cache[key] = solve_u0(xi, solve_options)
            else:
                base = get(kind.base_kind, xi)
                cache[key] = solve_linear_correction(kind, base, xi, solve_options)
        return cache[key]

    return get


def poisson_sequence(count, seed, rho_bar=1.0):
    rng = np.random.default_rng(seed)
    points = np.cumsum(rng.exponential(1.0, size=count))
    return UnfoldedSequence(points=points, rho_bar=rho_bar, source_meta={'unfold': 'global'})


@pytest.fixture(scope="session")
def poisson_points():
    return poisson_sequence(200_000, seed=20240611)


@pytest.fixture
def sigma0_coefficients():
    """Printed origin expansion of sigma0 through X^9"""
    def coefficients(xi):
        a = xi / math.pi
        p2 = math.pi ** 2
        return [
            0.0,
            -a,
            -a ** 2,
            -a ** 3,
            (8.0 * xi ** 2 / (3.0 * p2) - 24.0 * a ** 4) / 24.0,
            5.0 * a ** 3 / 36.0 - a ** 5,
            -a ** 6 + a ** 4 / 6.0 - 2.0 * a ** 2 / 225.0,
            -a ** 7 + 7.0 * a ** 5 / 36.0 - 7.0 * a ** 3 / 675.0,
            -a ** 8 + 2.0 * a ** 6 / 9.0 - 121.0 * a ** 4 / 8100.0 + a ** 2 / 2205.0,
            -a ** 9 + a ** 7 / 4.0 - 73.0 * a ** 5 / 3600.0 + 761.0 * a ** 3 / 1587600.0,
        ]
    return coefficients


@pytest.fixture
def sigma1_coefficients():
    """Printed origin expansion of sigma1 through X^9"""
    def coefficients(xi):
        p = math.pi
        return [
            0.0, 0.0, 0.0, 0.0,
            -xi ** 2 / (9.0 * p ** 2),
            -5.0 * xi ** 3 / (36.0 * p ** 3),
            (-15.0 * xi ** 4 + 2.0 * p ** 2 * xi ** 2) / (90.0 * p ** 4),
            7.0 * (-15.0 * xi ** 5 + 2.0 * xi ** 3 * p ** 2) / (540.0 * p ** 5),
            -(1260.0 * xi ** 6 - 203.0 * p ** 2 * xi ** 4 + 12.0 * p ** 4 * xi ** 2) / (5670.0 * p ** 6),
            -(9450.0 * xi ** 7 - 1785.0 * p ** 2 * xi ** 5 + 83.0 * p ** 4 * xi ** 3) / (37800.0 * p ** 7),
        ]
    return coefficients
