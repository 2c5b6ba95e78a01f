import dataclasses
import math

import numpy as np
import pytest

from src.errors import ArgumentError, DomainError
from src.fredholm import nystrom_det
from src.models import KernelSpec, SolveOptions, ThinningParam, TranscendentKind, TranscendentSolution
from src.painleve import (
    boundary_series,
    ode_residual,
    solve,
    solve_linear_correction,
    solve_sigma0,
    solve_u0,
)
from src.series import PiecewiseAnalytic, PowerSeries, piecewise_eval, radius_estimate, series_eval

SIGMA0 = TranscendentKind.SIGMA0
SIGMA1 = TranscendentKind.SIGMA1
U0 = TranscendentKind.U0
U1 = TranscendentKind.U1


def value(solution, t, order=0):
    return piecewise_eval(solution.fn, t, order)


@pytest.mark.parametrize("xi", [0.6, 1.0])
def test_sigma0_origin_coefficients(xi, sigma0_coefficients):
    series = boundary_series(SIGMA0, xi, 20)
    for got, expected in zip(series.coeffs, sigma0_coefficients(xi)):
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-16)


@pytest.mark.parametrize("xi", [0.6, 1.0])
def test_sigma1_origin_coefficients(xi, sigma1_coefficients):
    series = boundary_series(SIGMA1, xi, 20)
    for got, expected in zip(series.coeffs, sigma1_coefficients(xi)):
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-16)


@pytest.mark.parametrize("xi", [0.6, 1.0])
def test_u0_origin_coefficients(xi):
    c = boundary_series(U0, xi, 20).coeffs
    assert c[0] == 0.0
    assert c[1] == 0.0
    assert c[2] == pytest.approx(-1.0 / 15.0, rel=1e-14)
    assert c[3] == pytest.approx(0.0, abs=1e-16)
    assert c[5] == pytest.approx(-xi / (8640.0 * math.pi), rel=1e-12)


@pytest.mark.parametrize("xi", [0.6, 1.0])
def test_u1_origin_coefficients(xi):
    c = boundary_series(U1, xi, 20).coeffs
    assert c[0] == pytest.approx(0.0, abs=1e-16)
    assert c[2] == pytest.approx(4.0 / 15.0, rel=1e-12)
    assert c[4] == pytest.approx(-13.0 / 6300.0, rel=1e-12)
    assert c[5] == pytest.approx(xi / (1728.0 * math.pi), rel=1e-12)


def test_boundary_series_degree_limit():
    with pytest.raises(ArgumentError):
        boundary_series(SIGMA0, 1.0, 41)


def test_origin_radius_of_convergence():
    # nearest complex zeros of the gap probability sit near |t| = 5
    for xi in (0.6, 1.0):
        assert 4.0 < radius_estimate(boundary_series(SIGMA0, xi, 35)) < 5.5


@pytest.mark.parametrize("xi", [0.6, 1.0])
def test_origin_series_matches_log_derivative_of_determinant(xi):
    # sigma0(t) = s d/ds log det(I - xi K_s), t = pi s, well past the printed orders
    t = 2.5
    s = t / math.pi
    h = 1e-3
    kernel = KernelSpec.sine(xi)

    def log_det(x):
        return math.log(nystrom_det(kernel, x).value)

    slope = (-log_det(s + 2 * h) + 8.0 * log_det(s + h) - 8.0 * log_det(s - h) + log_det(s - 2 * h)) / (12.0 * h)
    series = boundary_series(SIGMA0, xi, 35).with_interval(0.0, 3.0)
    assert series_eval(series, t) == pytest.approx(s * slope, abs=1e-7)


def test_truncated_origin_series_solves_sigma0_near_zero():
    series = boundary_series(SIGMA0, 0.6, 9).with_interval(0.0, 0.5)
    fn = PiecewiseAnalytic((series,))
    assert abs(ode_residual(SIGMA0, fn, None, 0.01)) < 1e-12


def test_sigma0_starts_with_origin_series(transcendents):
    solution = transcendents(SIGMA0, 0.6)
    assert value(solution, 0.0) == 0.0
    origin = solution.fn.segments[0]
    assert origin.coeffs == boundary_series(SIGMA0, 0.6, SolveOptions().origin_degree).coeffs
    assert origin.interval[1] <= 0.5 * radius_estimate(origin) + 1e-12


def test_sigma0_near_origin_matches_printed_series(transcendents, sigma0_coefficients):
    solution = transcendents(SIGMA0, 0.6)
    expected = math.fsum(c * 0.1 ** k for k, c in enumerate(sigma0_coefficients(0.6)))
    assert value(solution, 0.1) == pytest.approx(expected, abs=1e-10)


def test_sigma1_near_origin_matches_printed_series(transcendents, sigma1_coefficients):
    solution = transcendents(SIGMA1, 1.0)
    assert value(solution, 0.0) == 0.0
    assert value(solution, 0.0, 1) == 0.0
    expected = math.fsum(c * 0.1 ** k for k, c in enumerate(sigma1_coefficients(1.0)))
    assert value(solution, 0.1) == pytest.approx(expected, abs=1e-10)


def test_u0_matches_extended_origin_series(transcendents):
    solution = transcendents(U0, 1.0)
    long_series = boundary_series(U0, 1.0, 40)
    expected = math.fsum(c * 0.2 ** k for k, c in enumerate(long_series.coeffs))
    assert value(solution, 0.2) == pytest.approx(expected, abs=1e-10)
    assert value(solution, 0.05) == pytest.approx(-0.05 ** 2 / 15.0, rel=1e-3)


@pytest.mark.parametrize("kind", [SIGMA0, SIGMA1, U0, U1])
@pytest.mark.parametrize("xi", [0.6, 1.0])
def test_solutions_pass_residual_check(transcendents, kind, xi):
    solution = transcendents(kind, xi)
    assert solution.residual_sup < 1e-8
    assert solution.s_max == pytest.approx(20.0)
    value_gap, slope_gap = solution.fn.junction_mismatch()
    assert max(value_gap, slope_gap) <= solution.fn.junction_tol


def test_residual_at_one_and_perturbation(transcendents):
    solution = transcendents(SIGMA0, 0.6)
    exact = ode_residual(SIGMA0, solution.fn, None, 1.0)
    assert abs(exact) < 1e-8

    j = solution.fn.owning_index(1.0)
    segments = list(solution.fn.segments)
    seg = segments[j]
    segments[j] = PowerSeries(seg.center, (seg.coeffs[0] + 1e-3,) + seg.coeffs[1:], seg.interval)
    perturbed = ode_residual(SIGMA0, PiecewiseAnalytic(tuple(segments)), None, 1.0)
    assert abs(perturbed) > 1e2 * abs(exact)


def test_linear_residual_needs_base(transcendents):
    solution = transcendents(SIGMA1, 0.6)
    with pytest.raises(ArgumentError):
        ode_residual(SIGMA1, solution.fn, None, 1.0)
    base = transcendents(SIGMA0, 0.6)
    assert abs(ode_residual(SIGMA1, solution.fn, base.fn, 1.0)) < 1e-8


def test_degree_independence():
    low = solve_sigma0(0.6, SolveOptions(s_max=6.0, degree=25))
    high = solve_sigma0(0.6, SolveOptions(s_max=6.0, degree=35))
    grid = np.linspace(0.0, 6.0, 61)
    np.testing.assert_allclose(low.fn.sample(grid), high.fn.sample(grid), rtol=0, atol=1e-9)


def test_sigma0_large_s_partial_thinning(transcendents):
    solution = transcendents(SIGMA0, 0.6)
    k = ThinningParam(0.6).k
    assert k == pytest.approx(0.29166, abs=1e-5)
    grid = np.linspace(10.0, 20.0, 41)
    remainder = solution.fn.sample(grid) - (-k * grid + k * k / 2.0)
    assert np.max(np.abs(remainder) * grid) < 3.0


def test_sigma0_large_s_full(transcendents):
    solution = transcendents(SIGMA0, 1.0)

    def remainder(s):
        return value(solution, s) + s * s / 4.0 + 0.25

    # next orders of the large-t expansion: -1/(4t^2) - 5/(2t^4)
    for s, tol in ((10.0, 5e-4), (20.0, 1e-4)):
        assert remainder(s) == pytest.approx(-0.25 / s ** 2 - 2.5 / s ** 4, abs=tol)


def test_sigma1_large_s(transcendents):
    partial = transcendents(SIGMA1, 0.6)
    k = ThinningParam(0.6).k
    assert value(partial, 20.0) / 20.0 ** 2 == pytest.approx(-k * k / 6.0, rel=0.05)

    full = transcendents(SIGMA1, 1.0)
    s = 20.0
    assert abs(value(full, s) + s ** 4 / 48.0 - s ** 2 / 48.0) < 0.01 * s ** 4 / 48.0


def test_u0_large_s_full(transcendents):
    solution = transcendents(U0, 1.0)
    s = 20.0
    # next orders: 15/s^2 - 360/s^4
    remainder = value(solution, s) + s * s / 16.0 + 0.25
    assert remainder == pytest.approx(15.0 / s ** 2 - 360.0 / s ** 4, abs=1e-3)


def test_u1_large_s(transcendents):
    full = transcendents(U1, 1.0)
    grid = np.linspace(10.0, 20.0, 41)
    remainder = full.fn.sample(grid) + grid ** 4 / 768.0 - 43.0 * grid ** 2 / 192.0
    # what is left over does not grow like the s^2 term it follows
    assert np.all(np.abs(remainder) < 0.5 * 43.0 * grid ** 2 / 192.0)
    assert abs(remainder[-1] - remainder[0]) < 0.25 * 43.0 * (20.0 ** 2 - 10.0 ** 2) / 192.0

    s = 20.0
    partial = transcendents(U1, 0.6)
    assert value(partial, s) / s ** 2 == pytest.approx(1.0 / 6.0, rel=0.3)


@pytest.mark.parametrize("solver", [solve_sigma0, solve_u0])
def test_partial_thinning_solves_across_inflection_points(solver):
    solution = solver(0.6)
    assert solution.s_max == SolveOptions().s_max
    assert solution.residual_sup < 1e-8
    curvature = solution.fn.sample(np.linspace(1.0, solution.s_max, 400), 2)
    assert curvature.min() < 0.0 < curvature.max()


def test_linear_correction_checks_its_base(transcendents):
    sigma0 = transcendents(SIGMA0, 0.6)
    with pytest.raises(ArgumentError):
        solve_linear_correction(U1, sigma0, 0.6)
    with pytest.raises(ArgumentError):
        solve_linear_correction(SIGMA1, sigma0, 1.0)
    with pytest.raises(ArgumentError):
        solve_linear_correction(SIGMA0, sigma0, 0.6)
    with pytest.raises(DomainError):
        solve_linear_correction(SIGMA1, sigma0, 0.6, SolveOptions(s_max=30.0))


def test_solve_chains_base_for_corrections():
    opts = SolveOptions(s_max=4.0)
    solution = solve("sigma1", 0.6, opts)
    assert solution.kind is SIGMA1
    assert solution.s_max == pytest.approx(4.0)
    assert solution.residual_sup < 1e-8


def test_solution_serialization_is_bit_exact(transcendents):
    solution = transcendents(U0, 0.6)
    restored = TranscendentSolution.from_dict(solution.to_dict())
    assert restored.to_dict() == solution.to_dict()
    assert restored.kind is U0
    assert restored.xi == solution.xi
    for a, b in zip(restored.fn.segments, solution.fn.segments):
        assert dataclasses.astuple(a) == dataclasses.astuple(b)
