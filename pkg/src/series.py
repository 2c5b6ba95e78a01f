# series.py
"""
Truncated power series and piecewise-analytic functions.

A PowerSeries is the atom of the Taylor-continuation solvers; a
PiecewiseAnalytic chains segments so that together they cover [0, s_max].
All objects here are immutable and safe to share between threads.
"""

import bisect
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.constants import (
    GAUSS_PANEL_NODES,
    GAUSS_PANEL_WIDTH,
    JUNCTION_TOL,
    MIN_RADIUS_DEGREE,
    ORIGIN_VALUE_TOL,
)
from src.errors import (
    DomainError,
    InsufficientDataError,
    NumericalFailure,
    PreconditionError,
)
from src.utils import compensated_horner, compensated_sum

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = leggauss(GAUSS_PANEL_NODES)

# Relative slack when deciding whether t lies inside a validity interval
_INTERVAL_SLACK = 1e-12


def _falling(k, order):
    out = 1.0
    for j in range(order):
        out *= k - j
    return out


@dataclass(frozen=True)
class PowerSeries:
    """
    sum(coeffs[k] * (t - center)**k), optionally restricted to an interval
    """
    center: float
    coeffs: tuple
    interval: tuple = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("a power series needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise NumericalFailure(f"non-finite coefficient in series centred at {self.center!r}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", float(self.center))
        if self.interval is not None:
            a, b = (float(v) for v in self.interval)
            if not a <= b:
                raise ValueError(f"empty validity interval [{a}, {b}]")
            object.__setattr__(self, "interval", (a, b))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def with_interval(self, a, b):
        return PowerSeries(self.center, self.coeffs, (a, b))

    def derivative_coeffs(self, order):
        """Coefficients of the order-th derivative, in powers of (t - center)"""
        if order == 0:
            return list(self.coeffs)
        return [
            _falling(k, order) * c
            for k, c in enumerate(self.coeffs)
            if k >= order
        ] or [0.0]

    def contains(self, t):
        if self.interval is None:
            return True
        a, b = self.interval
        slack = _INTERVAL_SLACK * max(1.0, abs(a), abs(b))
        return a - slack <= t <= b + slack

    def __repr__(self):
        return f"PowerSeries(center={self.center!r}, degree={self.degree}, interval={self.interval!r})"


def series_eval(p, t, deriv_order=0):
    """
    Evaluate the deriv_order-th derivative of p at t by compensated Horner
    accumulation from the highest coefficient.
    """
    if deriv_order not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be 0..3, got {deriv_order}")
    if not p.contains(t):
        raise DomainError(f"t={t!r} outside series validity", p.interval)
    if t == p.center:
        return _falling(deriv_order, deriv_order) * p.coeffs[deriv_order] if deriv_order <= p.degree else 0.0
    return float(compensated_horner(p.derivative_coeffs(deriv_order), t - p.center))


def series_eval_many(p, ts, deriv_order=0):
    """Vectorised series_eval without the interval check"""
    x = np.asarray(ts, dtype=float) - p.center
    return compensated_horner(p.derivative_coeffs(deriv_order), x)


def radius_estimate(p):
    """
    Cauchy-Hadamard estimate: the largest |c_k|^(-1/k) over the top third
    of the coefficient indices, zeros skipped; +inf when they all vanish.
    """
    d = p.degree
    if d < MIN_RADIUS_DEGREE:
        raise InsufficientDataError(f"radius estimate needs degree >= {MIN_RADIUS_DEGREE}, got {d}")
    estimates = [
        abs(p.coeffs[k]) ** (-1.0 / k)
        for k in range(d - d // 3, d + 1)
        if p.coeffs[k] != 0.0
    ]
    if not estimates:
        return math.inf
    return max(estimates)


@dataclass(frozen=True)
class PiecewiseAnalytic:
    """
    Ordered chain of PowerSeries whose validity intervals tile [0, s_max]
    """
    segments: tuple
    junction_tol: float = JUNCTION_TOL

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise ValueError("a piecewise function needs at least one segment")
        for seg in segments:
            if seg.interval is None:
                raise ValueError(f"segment {seg!r} has no validity interval")
        if segments[0].center != 0.0 or segments[0].interval[0] != 0.0:
            raise ValueError("first segment must be centred at 0 and start at 0")
        for left, right in zip(segments, segments[1:]):
            gap = abs(left.interval[1] - right.interval[0])
            if gap > _INTERVAL_SLACK * max(1.0, left.interval[1]):
                raise ValueError(
                    f"segments do not tile: {left.interval} followed by {right.interval}"
                )
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "_starts", tuple(seg.interval[0] for seg in segments))

    @property
    def s_max(self):
        return self.segments[-1].interval[1]

    @property
    def domain(self):
        return (0.0, self.s_max)

    def owning_index(self, t):
        if not 0.0 <= t <= self.s_max * (1.0 + _INTERVAL_SLACK):
            raise DomainError(f"t={t!r} outside piecewise domain", self.domain)
        return max(bisect.bisect_right(self._starts, t) - 1, 0)

    def junction_mismatch(self):
        """Largest (value, first derivative) disagreement over all junctions"""
        worst_value = 0.0
        worst_slope = 0.0
        for left, right in zip(self.segments, self.segments[1:]):
            t = right.interval[0]
            worst_value = max(worst_value, abs(series_eval(left, t, 0) - series_eval(right, t, 0)))
            worst_slope = max(worst_slope, abs(series_eval(left, t, 1) - series_eval(right, t, 1)))
        return worst_value, worst_slope

    def sample(self, ts, deriv_order=0):
        """Evaluate at many points, grouped by owning segment"""
        ts = np.asarray(ts, dtype=float)
        out = np.empty_like(ts)
        idx = np.array([self.owning_index(t) for t in ts.ravel()]).reshape(ts.shape)
        for j in np.unique(idx):
            mask = idx == j
            out[mask] = series_eval_many(self.segments[j], ts[mask], deriv_order)
        return out


def piecewise_eval(f, t, deriv_order=0):
    """Locate the owning segment by binary search and evaluate it there"""
    return series_eval(f.segments[f.owning_index(t)], t, deriv_order)


def _origin_integral(p, upper):
    # sum_{k>=1} c_k upper^k / k, termwise exact
    scaled = [p.coeffs[k] / k for k in range(1, len(p.coeffs))] or [0.0]
    return float(upper * compensated_horner(scaled, upper))


def _panel_integral(p, a, b):
    n_panels = max(1, math.ceil((b - a) / GAUSS_PANEL_WIDTH - 1e-12))
    edges = np.linspace(a, b, n_panels + 1)
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes = lo + half * (_GL_NODES + 1.0)
        values = series_eval_many(p, nodes) / nodes
        parts.extend(half * _GL_WEIGHTS * values)
    return compensated_sum(parts)


def integrate_weighted(f, upper):
    """
    Return the integral of f(t)/t over [0, upper].

    The origin segment is integrated termwise; later segments use 32-node
    Gauss-Legendre panels of width at most 1 inside each segment.
    """
    origin = f.segments[0]
    if abs(origin.coeffs[0]) > ORIGIN_VALUE_TOL:
        raise PreconditionError(f"f(0) = {origin.coeffs[0]!r} is not zero; f(t)/t is singular at 0")
    if upper < 0.0 or upper > f.s_max * (1.0 + _INTERVAL_SLACK):
        raise DomainError(f"upper limit {upper!r} outside piecewise domain", f.domain)
    if upper == 0.0:
        return 0.0

    parts = [_origin_integral(origin, min(upper, origin.interval[1]))]
    for seg in f.segments[1:]:
        a, b = seg.interval
        if a >= upper:
            break
        parts.append(_panel_integral(seg, a, min(b, upper)))
    return compensated_sum(parts)
