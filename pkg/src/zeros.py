# zeros.py
"""
Point-sequence statistics for zeros data sets: unfolding to unit density,
Bernoulli thinning, two-point and nearest-neighbour histograms, and the
theory curves the histograms are compared against.

Histograms are built by accumulators that take the sequence chunk by chunk,
so a file of any length is processed in fixed memory.  Counts are integers
and merge by addition, independent of chunk boundaries.
"""

import logging
import math

import numpy as np

from src.constants import (
    DEFAULT_LOCAL_BLOCK,
    DEFAULT_SPACING_BIN,
    DEFAULT_SPACING_S_MAX,
    DEFAULT_TWO_POINT_BIN,
    DEFAULT_TWO_POINT_S_MAX,
    DEFAULT_WINDOW,
    THINNING_BLOCK,
)
from src.errors import ArgumentError, DomainError, InsufficientDataError
from src.models import EmpiricalCurve, ResidualReport, ThinningParam, UnfoldedSequence

logger = logging.getLogger(__name__)

UNFOLD_GLOBAL = "global"
UNFOLD_LOCAL = "local"

_MIN_HEIGHT = 2.0 * math.pi * math.e


def mean_density(height):
    """Leading term of the zero density at height E: log(E / 2 pi e) / 2 pi"""
    if not height > _MIN_HEIGHT:
        raise DomainError(f"height {height!r} must exceed 2*pi*e for a positive density")
    return math.log(height / _MIN_HEIGHT) / (2.0 * math.pi)


class Unfolder:
    """
    Maps offsets (heights minus an exact integer base) to unfolded points,
    one chunk at a time.

    In global mode the density is fixed at the first height.  In local mode
    it is re-evaluated at the first height of every block of `block` zeros,
    with the unfolded coordinate kept continuous across blocks.
    """

    def __init__(self, base, first_offset, mode=UNFOLD_GLOBAL, block=DEFAULT_LOCAL_BLOCK):
        if mode not in (UNFOLD_GLOBAL, UNFOLD_LOCAL):
            raise ArgumentError(f"unknown unfold mode {mode!r}")
        if block < 2:
            raise ArgumentError(f"local unfolding block must hold at least 2 zeros, got {block}")
        self.base = int(base)
        self.mode = mode
        self.block = int(block)
        self.rho_bar = mean_density(self.base + float(first_offset))
        self._rho = self.rho_bar
        self._anchor_offset = float(first_offset)
        self._anchor_point = 0.0
        self._index = 0

    def transform(self, offsets):
        offsets = np.asarray(offsets, dtype=float)
        if self.mode == UNFOLD_GLOBAL:
            self._index += offsets.size
            return self._rho * (offsets - self._anchor_offset)

        out = np.empty_like(offsets)
        pos = 0
        while pos < offsets.size:
            if self._index > 0 and self._index % self.block == 0:
                # new block: anchor at its first zero, density from its height
                offset = offsets[pos]
                self._anchor_point += self._rho * (offset - self._anchor_offset)
                self._anchor_offset = offset
                self._rho = mean_density(self.base + offset)
            take = min(offsets.size - pos, self.block - self._index % self.block)
            part = offsets[pos:pos + take]
            out[pos:pos + take] = self._anchor_point + self._rho * (part - self._anchor_offset)
            pos += take
            self._index += take
        return out

    def metadata(self):
        meta = {'rho_bar': self.rho_bar, 'unfold': self.mode}
        if self.mode == UNFOLD_LOCAL:
            meta['block'] = self.block
        return meta


def unfold(ds, mode=UNFOLD_GLOBAL, block=DEFAULT_LOCAL_BLOCK):
    """Rescale a zeros data set to unit mean spacing"""
    if ds.count < 2:
        raise InsufficientDataError(f"unfolding needs at least 2 heights, got {ds.count}")
    unfolder = Unfolder(ds.base, ds.offsets[0], mode, block)
    points = unfolder.transform(ds.offsets)
    meta = unfolder.metadata()
    if ds.start_index is not None:
        meta['start_index'] = ds.start_index
    logger.info(f"Unfolded {ds.count} zeros with rho_bar={unfolder.rho_bar!r} ({mode})")
    return UnfoldedSequence(points=points, rho_bar=unfolder.rho_bar, source_meta=meta)


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2 ** 64:
        raise ArgumentError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _block_uniforms(seed, block_index):
    generator = np.random.Generator(np.random.Philox(key=seed, counter=block_index << 128))
    return generator.random(THINNING_BLOCK)


def keep_mask(start, count, xi, seed):
    """
    Survival decisions for points start .. start+count-1.

    Each block of THINNING_BLOCK indices has its own Philox stream keyed by
    seed, so the decision for a point depends only on (seed, index).
    """
    xi = ThinningParam.coerce(xi)
    seed = _check_seed(seed)
    if xi.is_full:
        return np.ones(count, dtype=bool)
    mask = np.empty(count, dtype=bool)
    first_block = start // THINNING_BLOCK
    last_block = (start + count - 1) // THINNING_BLOCK if count else first_block - 1
    for b in range(first_block, last_block + 1):
        lo = max(start, b * THINNING_BLOCK)
        hi = min(start + count, (b + 1) * THINNING_BLOCK)
        uniforms = _block_uniforms(seed, b)
        mask[lo - start:hi - start] = uniforms[lo - b * THINNING_BLOCK:hi - b * THINNING_BLOCK] < xi.xi
    return mask


def thin(seq, xi, seed):
    """Keep each point independently with probability xi; points are not rescaled"""
    xi = ThinningParam.coerce(xi)
    seed = _check_seed(seed)
    meta = dict(seq.source_meta)
    meta['xi'] = seq.xi_effective * xi.xi
    meta['seed'] = seed
    if xi.is_full:
        return UnfoldedSequence(points=seq.points.copy(), rho_bar=seq.rho_bar, source_meta=meta)
    points = seq.points[keep_mask(0, seq.count, xi, seed)]
    logger.info(f"Thinned {seq.count} points to {points.size} with xi={xi.xi}, seed={seed}")
    return UnfoldedSequence(points=points, rho_bar=seq.rho_bar, source_meta=meta)


def _bin_edges(s_max, bin_width):
    if not s_max > 0.0 or not bin_width > 0.0:
        raise ArgumentError(f"s_max and bin width must be positive, got {s_max!r}, {bin_width!r}")
    n_bins = int(round(s_max / bin_width))
    if n_bins < 1:
        raise ArgumentError(f"bin width {bin_width!r} exceeds s_max {s_max!r}")
    return np.linspace(0.0, n_bins * bin_width, n_bins + 1)


def _histogram(values, edges):
    values = values[(values >= 0.0) & (values < edges[-1])]
    return np.histogram(values, bins=edges)[0].astype(np.int64)


class TwoPointAccumulator:
    """
    Histogram of gaps from each reference point to its next `window`
    right-neighbours.  The last `window` points of a chunk are carried over,
    so only points with a complete window count as references.
    """

    def __init__(self, s_max=DEFAULT_TWO_POINT_S_MAX, bin_width=DEFAULT_TWO_POINT_BIN,
                 window=DEFAULT_WINDOW, scale=1.0):
        if window < 1:
            raise ArgumentError(f"window must be at least 1, got {window}")
        self.edges = _bin_edges(s_max, bin_width)
        self.window = int(window)
        self.scale = float(scale)
        self.counts = np.zeros(self.edges.size - 1, dtype=np.int64)
        self.n_ref = 0
        self.n_points = 0
        self.first = None
        self.last = None
        self._tail = np.empty(0)

    def add(self, points):
        points = self.scale * np.asarray(points, dtype=float)
        if points.size == 0:
            return
        if self.first is None:
            self.first = float(points[0])
        self.last = float(points[-1])
        self.n_points += points.size
        buffer = np.concatenate([self._tail, points])
        refs = buffer.size - self.window
        if refs > 0:
            for j in range(1, self.window + 1):
                self.counts += _histogram(buffer[j:j + refs] - buffer[:refs], self.edges)
            self.n_ref += refs
        self._tail = buffer[-self.window:] if buffer.size > self.window else buffer

    def merge(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise ArgumentError("cannot merge histograms with different bins")
        self.counts += other.counts
        self.n_ref += other.n_ref

    def mean_spacing(self):
        if self.n_points < 2:
            return math.nan
        return (self.last - self.first) / (self.n_points - 1)

    def result(self, metadata=None):
        meta = dict(metadata or {})
        meta.update({'window': self.window, 'bin_width': float(self.edges[1] - self.edges[0]),
                     's_max': float(self.edges[-1]), 'n_ref': self.n_ref})
        spacing = self.mean_spacing()
        if not self.window * spacing > self.edges[-1]:
            warning = (f"window {self.window} x mean spacing {spacing:.4g} does not cover "
                       f"s_max {self.edges[-1]:.4g}")
            logger.warning(f"Coverage: {warning}")
            meta['coverage_warning'] = warning
        return EmpiricalCurve(bin_edges=self.edges, counts=self.counts.copy(), n_ref=self.n_ref, metadata=meta)


class SpacingAccumulator:
    """Histogram of consecutive gaps, continued across chunk boundaries"""

    def __init__(self, s_max=DEFAULT_SPACING_S_MAX, bin_width=DEFAULT_SPACING_BIN, scale=1.0):
        self.edges = _bin_edges(s_max, bin_width)
        self.scale = float(scale)
        self.counts = np.zeros(self.edges.size - 1, dtype=np.int64)
        self.n_ref = 0
        self._last = None

    def add(self, points):
        points = self.scale * np.asarray(points, dtype=float)
        if points.size == 0:
            return
        if self._last is not None:
            points = np.concatenate([[self._last], points])
        gaps = np.diff(points)
        self.counts += _histogram(gaps, self.edges)
        self.n_ref += gaps.size
        self._last = float(points[-1])

    def merge(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise ArgumentError("cannot merge histograms with different bins")
        self.counts += other.counts
        self.n_ref += other.n_ref

    def result(self, metadata=None):
        meta = dict(metadata or {})
        meta.update({'bin_width': float(self.edges[1] - self.edges[0]),
                     's_max': float(self.edges[-1]), 'n_ref': self.n_ref})
        return EmpiricalCurve(bin_edges=self.edges, counts=self.counts.copy(), n_ref=self.n_ref, metadata=meta)


def _sequence_metadata(seq, rescale):
    meta = dict(seq.source_meta)
    meta['rho_bar'] = seq.rho_bar
    meta['rescaled'] = bool(rescale)
    return meta


def empirical_two_point(seq, s_max=DEFAULT_TWO_POINT_S_MAX, bin_width=DEFAULT_TWO_POINT_BIN,
                        window=DEFAULT_WINDOW, rescale_to_unit_density=False):
    """Estimate rho_2(x, x + s) from right-neighbour gaps"""
    scale = seq.xi_effective if rescale_to_unit_density else 1.0
    accumulator = TwoPointAccumulator(s_max, bin_width, window, scale)
    accumulator.add(seq.points)
    return accumulator.result(_sequence_metadata(seq, rescale_to_unit_density))


def empirical_nn_spacing(seq, s_max=DEFAULT_SPACING_S_MAX, bin_width=DEFAULT_SPACING_BIN,
                         rescale_to_unit_density=False):
    """Histogram of consecutive gaps, optionally multiplied by xi first"""
    scale = seq.xi_effective if rescale_to_unit_density else 1.0
    accumulator = SpacingAccumulator(s_max, bin_width, scale)
    accumulator.add(seq.points)
    return accumulator.result(_sequence_metadata(seq, rescale_to_unit_density))


def theory_two_point(params, xi, s):
    """
    (full, correction_only) two-point function of thinned zeros at height
    params.E, with s measured in the thinned variables.
    """
    xi = ThinningParam.coerce(xi)
    if s < 0.0:
        raise DomainError(f"s must be non-negative, got {s!r}")
    x = s / xi.xi
    amplitude = params.Lambda / (math.pi * params.rho_bar) ** 2
    correction = -amplitude * math.sin(math.pi * params.alpha * x) ** 2
    leading = 0.0 if x == 0.0 else 1.0 - (math.sin(math.pi * x) / (math.pi * x)) ** 2
    return leading + correction, correction


def compare(curve, theory):
    """Residuals of an empirical curve against theory values at its bin centers"""
    theory = np.asarray(theory, dtype=float)
    if theory.size != curve.counts.size:
        raise ArgumentError(f"theory has {theory.size} values for {curve.counts.size} bins")
    report = ResidualReport(
        bin_centers=curve.bin_centers,
        values=curve.values,
        theory=theory,
        stderr=curve.stderr,
        metadata=dict(curve.metadata),
    )
    report.metadata['max_scaled_residual'] = report.max_scaled
    report.metadata['rms_residual'] = report.rms
    logger.info(f"Compared {theory.size} bins: max |residual|/stderr={report.max_scaled:.3f}, rms={report.rms:.3e}")
    return report
