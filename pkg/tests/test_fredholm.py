import math

import numpy as np
import pytest

from src.errors import ArgumentError, DomainError, InsufficientDataError
from src.fredholm import (
    conditioned_gap,
    extrapolate_in_N,
    extrapolated_spacing,
    finite_n_det,
    finite_n_spacing,
    gauss_legendre_rule,
    n_values,
    nystrom_det,
    resolvent_trace_correction,
)
from src.models import KernelSpec
from src.spacing import reference_small_s, spacing_correction_u, spacing_leading_u


def test_gauss_legendre_rule_on_interval():
    rule = gauss_legendre_rule(2.5, 40)
    assert rule.length == pytest.approx(2.5, abs=1e-12)
    assert np.all(np.diff(rule.nodes) > 0)
    assert 0.0 < rule.nodes[0] and rule.nodes[-1] < 2.5
    # exact for polynomials of degree < 80
    assert np.sum(rule.weights * rule.nodes ** 7) == pytest.approx(2.5 ** 8 / 8.0, rel=1e-13)


def test_det_of_tiny_interval_is_one():
    result = nystrom_det(KernelSpec.sine(1.0), 1e-8)
    assert result.value == pytest.approx(1.0, abs=1e-7)
    assert nystrom_det(KernelSpec.sine(0.6), 0.0).value == 1.0


def test_det_rejects_low_order():
    with pytest.raises(ArgumentError):
        nystrom_det(KernelSpec.sine(1.0), 1.0, m=4)


@pytest.mark.parametrize("s", [0.1, 0.2, 0.3])
def test_sine_det_small_s_expansion(s):
    result = nystrom_det(KernelSpec.sine(1.0), s)
    expected = reference_small_s("A1", 1.0, s).value
    # first omitted order is s^10
    assert abs(result.value - expected) < 0.05 * s ** 10
    assert 0.0 <= result.est_error < 1e-12


@pytest.mark.parametrize("s", [0.1, 0.2, 0.3])
def test_finite_det_small_s_expansion(s):
    result = finite_n_det(20, 1.0, s)
    expected = reference_small_s("CUE_8", 1.0, s, N=20).value
    bound = 2.0 * math.pi ** 6 * s ** 9 / 291600.0 + 0.05 * s ** 10
    assert abs(result.value - expected) < bound


def test_finite_det_approaches_sine_det():
    finite = finite_n_det(10 ** 6, 0.6, 2.0).value
    sine = nystrom_det(KernelSpec.sine(0.6), 2.0).value
    assert finite == pytest.approx(sine, abs=1e-10)


def test_finite_det_support():
    with pytest.raises(DomainError):
        finite_n_det(10, 1.0, 10.0)


def test_det_values_are_probabilities():
    for xi in (0.3, 0.6, 1.0):
        for s in (0.5, 2.0, 4.0):
            value = nystrom_det(KernelSpec.sine(xi), s).value
            assert 0.0 < value <= 1.0


def test_resolvent_trace_small_s():
    assert resolvent_trace_correction(1.0, 0.0) == 0.0
    for xi in (0.6, 1.0):
        s = 0.1
        det = nystrom_det(KernelSpec.sine(xi), s).value
        correction = -xi * det * resolvent_trace_correction(xi, s)
        assert correction == pytest.approx(reference_small_s("Sd2", xi, s).value, abs=1e-10)


def test_conditioned_gap_zero_count_is_det():
    assert conditioned_gap(0, 1.5) == nystrom_det(KernelSpec.sine(1.0), 1.5).value


def test_conditioned_gaps_sum_to_one():
    total = sum(conditioned_gap(j, 0.5) for j in range(4))
    assert total == pytest.approx(1.0, abs=1e-6)
    for j in range(4):
        assert conditioned_gap(j, 0.5) > -1e-9


def test_conditioned_gap_count_range():
    with pytest.raises(ArgumentError):
        conditioned_gap(4, 1.0)


def test_finite_spacing_small_s():
    s = 0.05
    value = finite_n_spacing(100, 1.0, s)
    assert value == pytest.approx(math.pi ** 2 * s ** 2 / 3.0, rel=0.02)


@pytest.mark.parametrize("s", [0.001, 0.01, 0.1])
def test_finite_spacing_follows_large_n_limit_at_small_s(transcendents, s):
    N = 138
    u0, u1 = transcendents("u0", 1.0), transcendents("u1", 1.0)
    expected = spacing_leading_u(u0, 1.0, s) + spacing_correction_u(u0, u1, 1.0, s) / N ** 2
    assert finite_n_spacing(N, 1.0, s) == pytest.approx(expected, abs=1e-7)


def test_finite_spacing_domain():
    with pytest.raises(DomainError):
        finite_n_spacing(10, 1.0, 12.0)


def test_extrapolation_recovers_exact_model():
    samples = [(n, 0.37 - 1.25 / n ** 2) for n in range(100, 140, 2)]
    limit, c2 = extrapolate_in_N(samples)
    assert limit == pytest.approx(0.37, abs=1e-10)
    assert c2 == pytest.approx(-1.25, abs=1e-10)


def test_extrapolation_input_checks():
    with pytest.raises(ArgumentError):
        extrapolate_in_N([(100, 1.0), (100, 1.0), (110, 1.0), (120, 1.0)])
    with pytest.raises(InsufficientDataError):
        extrapolate_in_N([(100, 1.0), (110, 1.0)])


def test_n_values_spread():
    values = n_values(100, 138, 20)
    assert values[0] == 100 and values[-1] == 138
    assert len(values) == 20
    with pytest.raises(ArgumentError):
        n_values(100, 105, 20)


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0])
def test_extrapolation_agrees_with_u_path(transcendents, s):
    u0 = transcendents("u0", 1.0)
    u1 = transcendents("u1", 1.0)
    limit, c2 = extrapolated_spacing(1.0, s, n_values(100, 138, 20), workers=4)
    assert limit == pytest.approx(spacing_leading_u(u0, 1.0, s), abs=1e-6)
    assert c2 == pytest.approx(spacing_correction_u(u0, u1, 1.0, s), abs=1e-4)
