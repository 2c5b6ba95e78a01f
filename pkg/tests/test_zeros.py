import math

import numpy as np
import pytest

from src.errors import ArgumentError, DataError, DomainError, InsufficientDataError
from src.models import TheoryParams, ZerosDataset
from src.zeros import (
    UNFOLD_LOCAL,
    SpacingAccumulator,
    TwoPointAccumulator,
    Unfolder,
    compare,
    empirical_nn_spacing,
    empirical_two_point,
    keep_mask,
    mean_density,
    theory_two_point,
    thin,
    unfold,
)
from sampler import generate_offsets

HEIGHT = 1.30664344e22


def test_mean_density_at_data_height():
    rho = mean_density(HEIGHT)
    assert rho == pytest.approx(math.log(HEIGHT / (2 * math.pi * math.e)) / (2 * math.pi))
    assert rho == pytest.approx(TheoryParams(E=HEIGHT).rho_bar, rel=1e-12)
    with pytest.raises(DomainError):
        mean_density(10.0)


def test_unfolded_lattice_has_unit_spacing():
    base = 13066434400000000000000
    offsets = generate_offsets("lattice", 5000, base)
    seq = unfold(ZerosDataset(base=base, offsets=offsets))
    mean_spacing = (seq.points[-1] - seq.points[0]) / (seq.count - 1)
    assert mean_spacing == pytest.approx(1.0, rel=1e-3)
    assert seq.points[0] == 0.0
    assert seq.source_meta['unfold'] == 'global'


def test_unfold_needs_two_heights():
    with pytest.raises(InsufficientDataError):
        unfold(ZerosDataset(base=100, offsets=[0.5]))


def test_dataset_heights_must_increase():
    with pytest.raises(DataError):
        ZerosDataset(base=100, offsets=[0.5, 0.5])
    with pytest.raises(DataError):
        ZerosDataset(base=100, offsets=[0.5, 1.5, 1.0])
    assert ZerosDataset(base=100, offsets=[0.5, 1.5]).height(1) == 101.5


def test_local_unfolding_is_continuous_and_chunk_independent():
    base = 10 ** 6
    offsets = np.cumsum(np.full(2500, 0.5))
    whole = Unfolder(base, offsets[0], UNFOLD_LOCAL, block=1000).transform(offsets)
    chunked = Unfolder(base, offsets[0], UNFOLD_LOCAL, block=1000)
    parts = np.concatenate([chunked.transform(offsets[i:i + 333]) for i in range(0, offsets.size, 333)])
    np.testing.assert_array_equal(whole, parts)
    assert np.all(np.diff(whole) > 0.0)
    # the density falls slightly in later blocks, unlike the global map
    global_map = Unfolder(base, offsets[0]).transform(offsets)
    assert whole[-1] != global_map[-1]
    np.testing.assert_allclose(whole[:1000], global_map[:1000])


def test_thinning_keeps_expected_fraction(poisson_points):
    xi = 0.6
    n = poisson_points.count
    thinned = thin(poisson_points, xi, seed=7)
    assert abs(thinned.count - xi * n) < 3.0 * math.sqrt(n * xi * (1 - xi))
    assert thinned.xi_effective == pytest.approx(xi)
    assert thinned.source_meta['seed'] == 7


def test_thinning_is_reproducible_and_chunk_independent():
    whole = keep_mask(0, 200_000, 0.4, seed=2 ** 63 + 5)
    again = keep_mask(0, 200_000, 0.4, seed=2 ** 63 + 5)
    np.testing.assert_array_equal(whole, again)
    pieces = np.concatenate([keep_mask(start, 70_001, 0.4, seed=2 ** 63 + 5)[:min(70_001, 200_000 - start)]
                             for start in range(0, 200_000, 70_001)])
    np.testing.assert_array_equal(whole, pieces)
    assert not np.array_equal(whole, keep_mask(0, 200_000, 0.4, seed=1))


def test_thinning_twice_multiplies_xi(poisson_points):
    once = thin(poisson_points, 0.5, seed=1)
    twice = thin(once, 0.5, seed=2)
    assert twice.xi_effective == pytest.approx(0.25)
    assert keep_mask(0, 10, 1.0, seed=3).all()


def test_seed_validation():
    with pytest.raises(ArgumentError):
        keep_mask(0, 10, 0.5, seed=-1)
    with pytest.raises(ArgumentError):
        keep_mask(0, 10, 0.5, seed=2 ** 64)


def test_poisson_two_point_is_flat(poisson_points):
    curve = empirical_two_point(poisson_points, s_max=10.0, bin_width=0.25, window=50)
    report = compare(curve, np.ones(curve.counts.size))
    assert report.max_scaled < 4.0
    assert curve.n_ref == poisson_points.count - 50
    assert 'coverage_warning' not in curve.metadata


def test_thinned_poisson_two_point_after_rescaling(poisson_points):
    thinned = thin(poisson_points, 0.6, seed=11)
    curve = empirical_two_point(thinned, s_max=10.0, bin_width=0.25, window=50, rescale_to_unit_density=True)
    assert compare(curve, np.ones(curve.counts.size)).max_scaled < 4.0
    raw = empirical_two_point(thinned, s_max=10.0, bin_width=0.25, window=50)
    assert compare(raw, np.full(raw.counts.size, 0.6)).max_scaled < 4.0


def test_poisson_spacing_is_exponential(poisson_points):
    curve = empirical_nn_spacing(poisson_points, s_max=6.0, bin_width=0.1)
    lo, hi = curve.bin_edges[:-1], curve.bin_edges[1:]
    expected = (np.exp(-lo) - np.exp(-hi)) / (hi - lo)
    assert compare(curve, expected).max_scaled < 4.5
    assert curve.n_ref == poisson_points.count - 1


def test_accumulators_do_not_depend_on_chunking(poisson_points):
    points = poisson_points.points[:50_000]
    whole = TwoPointAccumulator(5.0, 0.1, 20)
    whole.add(points)
    chunked = TwoPointAccumulator(5.0, 0.1, 20)
    for i in range(0, points.size, 777):
        chunked.add(points[i:i + 777])
    np.testing.assert_array_equal(whole.counts, chunked.counts)
    assert whole.n_ref == chunked.n_ref

    single = SpacingAccumulator(5.0, 0.1)
    single.add(points)
    split = SpacingAccumulator(5.0, 0.1)
    split.add(points[:12_345])
    split.add(points[12_345:])
    np.testing.assert_array_equal(single.counts, split.counts)


def test_accumulators_merge_by_addition(poisson_points):
    points = poisson_points.points[:20_000]
    left = SpacingAccumulator(4.0, 0.2)
    left.add(points[:10_000])
    right = SpacingAccumulator(4.0, 0.2)
    right.add(points[10_000:])
    left.merge(right)
    assert left.n_ref == 19_998
    with pytest.raises(ArgumentError):
        left.merge(SpacingAccumulator(4.0, 0.1))


def test_short_window_warns_about_coverage(poisson_points):
    curve = empirical_two_point(poisson_points, s_max=10.0, bin_width=0.5, window=3)
    assert 'coverage_warning' in curve.metadata


def test_theory_two_point():
    params = TheoryParams(E=HEIGHT)
    assert params.alpha == pytest.approx(1.030, abs=1e-3)
    full, correction = theory_two_point(params, 1.0, 1.0)
    assert full == pytest.approx(1.0 + correction)
    amplitude = params.Lambda / (math.pi * params.rho_bar) ** 2
    assert correction == pytest.approx(-amplitude * math.sin(math.pi * params.alpha) ** 2)
    assert theory_two_point(params, 1.0, 0.0) == (0.0, 0.0)
    # thinned variables: s is measured in units of xi
    assert theory_two_point(params, 0.5, 0.75) == theory_two_point(params, 1.0, 1.5)


def test_compare_length_mismatch(poisson_points):
    curve = empirical_nn_spacing(poisson_points, s_max=2.0, bin_width=0.5)
    with pytest.raises(ArgumentError):
        compare(curve, np.ones(3))
