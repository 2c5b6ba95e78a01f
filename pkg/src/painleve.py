# painleve.py
"""
Origin series and Taylor-continuation solvers for the four transcendents.

sigma0 solves the sigma-form Painleve V equation
    (t s'')^2 + 4 (t s' - s)(t s' - s + s'^2) = 0,
u0 the modified form
    (t u'')^2 + (t u' - u)(t u' - u - 4 + 4 u'^2) - 16 u'^2 = 0,
and sigma1 / u1 the second order linear equations A y'' + B y' + C y = D
whose coefficients are built from sigma0 / u0.

Every ODE is written once, as a list of additive terms acting on truncated
Taylor coefficient arrays about a center t0.  The same code then gives the
order-by-order recurrence (by isolating the one unknown coefficient each
order is linear in) and the pointwise residual (arrays of length 3).

Away from the origin the nonlinear solutions are continued with the
derivative of their equation divided by 2 s'' (u'' for u0).  That third
order flow has leading coefficient t^2, so zeros of s'' cost nothing, and
the original equation survives as a first integral that every new center
is checked against.  Coefficients are generated in extended precision and
rounded to binary64 only when a segment is stored.
"""

import logging
import math
from functools import lru_cache

import numpy as np

from src.constants import (
    DEFAULT_ORIGIN_DEGREE,
    FIRST_INTEGRAL_TOL,
    MAX_BOUNDARY_DEGREE,
    MAX_HALVINGS,
    MAX_STEP,
    MIN_STEP,
    ORIGIN_RADIUS_FRACTION,
    RESIDUAL_GRID_POINTS,
    STEP_UNDERFLOW,
    TRUNCATION_TOL,
)
from src.errors import (
    ArgumentError,
    ContinuationError,
    DegeneracyError,
    DomainError,
    NumericalFailure,
    ValidationError,
)
from src.models import SolveOptions, ThinningParam, TranscendentKind, TranscendentSolution
from src.series import PiecewiseAnalytic, PowerSeries, radius_estimate

logger = logging.getLogger(__name__)

# 80-bit on x86 Linux; equal to binary64 where the platform has nothing wider
_WORK = np.longdouble


# Truncated series arithmetic, all arrays share one length n

def _pad(a, n):
    out = np.zeros(n, dtype=_WORK)
    m = min(n, len(a))
    out[:m] = a[:m]
    return out


def _deriv(c):
    n = len(c)
    return _pad(c[1:] * np.arange(1, n, dtype=_WORK), n)


def _mul(*factors):
    n = len(factors[0])
    out = factors[0]
    for f in factors[1:]:
        out = np.convolve(out, f)[:n]
    return out


def _tvar(t0, n):
    t = np.zeros(n, dtype=_WORK)
    t[0] = t0
    if n > 1:
        t[1] = 1.0
    return t


def _const(value, n):
    out = np.zeros(n, dtype=_WORK)
    out[0] = value
    return out


@lru_cache(maxsize=None)
def _pascal(n):
    table = np.array([[math.comb(j, k) for j in range(n)] for k in range(n)], dtype=_WORK)
    table.flags.writeable = False
    return table


def _recenter(c, shift):
    """Coefficients of the same truncated series about center + shift"""
    c = np.asarray(c, dtype=_WORK)
    n = len(c)
    exponents = np.arange(n)[None, :] - np.arange(n)[:, None]
    powers = np.where(exponents >= 0, _WORK(shift) ** np.maximum(exponents, 0), _WORK(0))
    return (_pascal(n) * powers) @ c


def _stored(c, center, interval=None):
    with np.errstate(over='ignore'):
        rounded = np.asarray(c, dtype=_WORK).astype(float)
    return PowerSeries(center, tuple(rounded), interval)


# ODE terms

def _sigma0_terms(c, t0):
    n = len(c)
    t = _tvar(t0, n)
    d1 = _deriv(c)
    d2 = _deriv(d1)
    p = _mul(t, d2)
    q = _mul(t, d1) - c
    return [_mul(p, p), 4.0 * _mul(q, q + _mul(d1, d1))]


def _u0_terms(c, t0):
    n = len(c)
    t = _tvar(t0, n)
    d1 = _deriv(c)
    d2 = _deriv(d1)
    p = _mul(t, d2)
    q = _mul(t, d1) - c
    sq = _mul(d1, d1)
    return [_mul(p, p), _mul(q, q + 4.0 * sq - _const(4.0, n)), -16.0 * sq]


def _sigma0_flow(c, t0):
    # t^2 s''' + t s'' + 2t(q + s'^2) + 2q(t + 2s'), q = t s' - s
    n = len(c)
    t = _tvar(t0, n)
    d1 = _deriv(c)
    d2 = _deriv(d1)
    d3 = _deriv(d2)
    q = _mul(t, d1) - c
    return [
        _mul(t, t, d3),
        _mul(t, d2),
        2.0 * _mul(t, q + _mul(d1, d1)),
        2.0 * _mul(q, t + 2.0 * d1),
    ]


def _u0_flow(c, t0):
    # 2t^2 u''' + 2t u'' + t(q - 4 + 4u'^2) + q(t + 8u') - 32u', q = t u' - u
    n = len(c)
    t = _tvar(t0, n)
    d1 = _deriv(c)
    d2 = _deriv(d1)
    d3 = _deriv(d2)
    q = _mul(t, d1) - c
    return [
        2.0 * _mul(t, t, d3),
        2.0 * _mul(t, d2),
        _mul(t, q + 4.0 * _mul(d1, d1) - _const(4.0, n)),
        _mul(q, t + 8.0 * d1),
        -32.0 * d1,
    ]


def _sigma1_coefficients(b, t0):
    """(A, B, C, D) of the sigma1 equation, expanded from sigma0 coefficients b"""
    n = len(b)
    t = _tvar(t0, n)
    d1 = _deriv(b)
    d2 = _deriv(d1)
    w = _mul(t, d1) - b
    a = 2.0 * _mul(t, t, d2)
    bb = -8.0 * _mul(d1, b) + 12.0 * _mul(t, d1, d1) + 8.0 * _mul(t, w)
    cc = -4.0 * _mul(d1, d1) - 8.0 * w
    first = b - _mul(t, d1) - 0.5 * _mul(t, t, d2)
    second = 3.0 * _mul(b, b) + 2.0 * _mul(t, b, t - d1) - 2.0 * _mul(t, t, d1, t + d1)
    dd = -(4.0 / 3.0) * _mul(t, t, d2, first) - (4.0 / 3.0) * _mul(w, second)
    return a, bb, cc, dd


def _u1_coefficients(u, t0):
    """(A, B, C, D) of the u1 equation, expanded from u0 coefficients u"""
    n = len(u)
    t = _tvar(t0, n)
    d1 = _deriv(u)
    d2 = _deriv(d1)
    t2u2 = _mul(t, t, d2)
    a = 8.0 * t2u2
    bb = 8.0 * (6.0 * _mul(t, d1, d1) + _mul(t, t, d1) - 2.0 * t - _mul(t, u)
                - 16.0 * d1 - 4.0 * _mul(u, d1))
    cc = 8.0 * (_const(2.0, n) + u - _mul(t, d1) - 2.0 * _mul(d1, d1))
    bracket = (
        _mul(t2u2, t2u2 + 2.0 * _mul(t, d1) - 2.0 * u)
        + _mul(t, t, t, t, d1, d1)
        + 4.0 * _mul(t, t, t, d1, d1, d1)
        - 2.0 * _mul(t, t, t, u, d1)
        - 2.0 * _mul(t, t, t, d1)
        + 16.0 * _mul(t, t, d1, d1)
        + _mul(t, t, u, u)
        + 2.0 * _mul(t, t, u)
        - 10.0 * _mul(t, u, u, d1)
        - 64.0 * _mul(t, u, d1)
        - 96.0 * _mul(t, d1)
        + 6.0 * _mul(u, u, u)
        + 48.0 * _mul(u, u)
        + 96.0 * u
    )
    return a, bb, cc, (2.0 / 3.0) * bracket


def _linear_terms(y, coefficients):
    a, bb, cc, dd = coefficients
    d1 = _deriv(y)
    d2 = _deriv(d1)
    return [_mul(a, d2), _mul(bb, d1), _mul(cc, y), -dd]


_NONLINEAR_TERMS = {
    TranscendentKind.SIGMA0: _sigma0_terms,
    TranscendentKind.U0: _u0_terms,
}

_NONLINEAR_FLOWS = {
    TranscendentKind.SIGMA0: _sigma0_flow,
    TranscendentKind.U0: _u0_flow,
}

_LINEAR_COEFFICIENTS = {
    TranscendentKind.SIGMA1: _sigma1_coefficients,
    TranscendentKind.U1: _u1_coefficients,
}


def _extend(c, residual, orders, offset, fixed=None, location=0.0):
    """
    For each order m, solve residual(c)[m] = 0 for c[m + offset].

    residual(c)[m] is affine in that coefficient, so two evaluations give
    its slope exactly.  Indices in `fixed` are resonant and take the given
    value instead.
    """
    fixed = fixed or {}
    for m in orders:
        k = m + offset
        if k in fixed:
            c[k] = fixed[k]
            continue
        c[k] = 0.0
        r0 = residual(c)[m]
        c[k] = 1.0
        lead = residual(c)[m] - r0
        if lead == 0.0 or not np.isfinite(lead):
            raise DegeneracyError("recurrence leading coefficient vanishes", order=m, location=location)
        c[k] = -r0 / lead
    return c


def _origin_coefficients(kind, x, degree):
    n = max(degree, 6) + 1
    c = np.zeros(n, dtype=_WORK)
    pi = _WORK(math.pi)
    if kind is TranscendentKind.SIGMA0:
        c[1] = -x / pi
        c[2] = -(x / pi) ** 2
        _extend(c, lambda y: np.sum(_sigma0_terms(y, 0.0), axis=0), range(3, n), 0)
    elif kind is TranscendentKind.U0:
        c[2] = _WORK(-1) / 15
        _extend(c, lambda y: np.sum(_u0_terms(y, 0.0), axis=0), range(3, n), 0,
                fixed={5: -x / (8640 * pi)})
    elif kind is TranscendentKind.SIGMA1:
        coefficients = _sigma1_coefficients(_origin_coefficients(TranscendentKind.SIGMA0, x, n - 1), 0.0)
        # the double indicial root at 1 leaves c[1] free; the boundary condition sets it to 0
        _extend(c, lambda y: np.sum(_linear_terms(y, coefficients), axis=0), range(2, n), 0)
    else:
        coefficients = _u1_coefficients(_origin_coefficients(TranscendentKind.U0, x, n - 1), 0.0)
        _extend(c, lambda y: np.sum(_linear_terms(y, coefficients), axis=0), range(0, n), 0,
                fixed={5: x / (1728 * pi)})
    return c[:degree + 1]


def boundary_series(kind, xi, degree=DEFAULT_ORIGIN_DEGREE):
    """Unique Taylor series of the transcendent about X = 0"""
    kind = kind if isinstance(kind, TranscendentKind) else TranscendentKind.parse(kind)
    xi = ThinningParam.coerce(xi)
    if not 0 <= degree <= MAX_BOUNDARY_DEGREE:
        raise ArgumentError(f"boundary series degree must lie in [0, {MAX_BOUNDARY_DEGREE}], got {degree}")
    return _stored(_origin_coefficients(kind, xi.xi, degree), 0.0)


# Residuals, evaluated in extended precision from the stored binary64 coefficients

def _work_derivatives(p, ts):
    coeffs = np.asarray(p.coeffs, dtype=_WORK)
    x = np.asarray(ts, dtype=_WORK) - _WORK(p.center)
    out = []
    for order in range(3):
        scale = np.array([math.perm(k, order) for k in range(order, len(coeffs))], dtype=_WORK)
        acc = np.zeros_like(x)
        for a in (coeffs[order:] * scale)[::-1]:
            acc = acc * x + a
        out.append(acc)
    return out


def _sample_work(fn, ts):
    """(value, first, second) of a piecewise function at ts"""
    ts = np.asarray(ts, dtype=float)
    owners = np.array([fn.owning_index(t) for t in ts])
    out = [np.zeros(ts.size, dtype=_WORK) for _ in range(3)]
    for j in np.unique(owners):
        mask = owners == j
        for order, values in enumerate(_work_derivatives(fn.segments[j], ts[mask])):
            out[order][mask] = values
    return out


def _residual_parts(kind, y_derivs, base_derivs, t):
    """Additive ODE terms at t from (value, first, second) derivatives"""
    c = np.array([y_derivs[0], y_derivs[1], 0.5 * y_derivs[2]], dtype=_WORK)
    if kind in _NONLINEAR_TERMS:
        terms = _NONLINEAR_TERMS[kind](c, t)
    else:
        b = np.array([base_derivs[0], base_derivs[1], 0.5 * base_derivs[2]], dtype=_WORK)
        terms = _linear_terms(c, _LINEAR_COEFFICIENTS[kind](b, t))
    return [term[0] for term in terms]


def ode_residual(kind, fn, base, t):
    """Defect of the ODE belonging to `kind` when fn (and base) are substituted at t"""
    kind = kind if isinstance(kind, TranscendentKind) else TranscendentKind.parse(kind)
    if kind.is_linear and base is None:
        raise ArgumentError(f"{kind.value} residual needs the base transcendent")
    at = np.array([float(t)])
    y = [v[0] for v in _sample_work(fn, at)]
    b = [v[0] for v in _sample_work(base, at)] if kind.is_linear else None
    return float(np.sum(_residual_parts(kind, y, b, t)))


def _residual_sup(kind, fn, base, s_max):
    """Largest |defect| on the check grid"""
    grid = np.linspace(s_max / 100.0, s_max, RESIDUAL_GRID_POINTS)
    ys = _sample_work(fn, grid)
    bs = _sample_work(base, grid) if kind.is_linear else None
    worst = 0.0
    for i, t in enumerate(grid):
        parts = _residual_parts(
            kind,
            [ys[0][i], ys[1][i], ys[2][i]],
            [bs[0][i], bs[1][i], bs[2][i]] if bs is not None else None,
            t,
        )
        worst = max(worst, abs(float(np.sum(parts))))
    return worst


# Continuation

def _step_for(series, radius, opts):
    h = MAX_STEP if math.isinf(radius) else opts.step_factor * radius
    h = min(max(h, MIN_STEP), MAX_STEP)
    # keep the first omitted order below the truncation tolerance
    top = abs(series.coeffs[-1])
    if top > 0.0:
        scale = max(1.0, abs(series.coeffs[0]))
        h = min(h, (TRUNCATION_TOL * scale / top) ** (1.0 / series.degree))
    return h


def _halving(kind, t0, h, expand):
    """First accepted (t1, coefficients) with t1 = t0 + h / 2**k, k <= MAX_HALVINGS"""
    for _ in range(MAX_HALVINGS + 1):
        if h < STEP_UNDERFLOW:
            raise ContinuationError(f"{kind.value} step underflow", location=t0)
        t1 = t0 + h
        try:
            return t1, expand(t1)
        except NumericalFailure as exc:
            logger.debug(f"{kind.value} expansion at t={t1:.6g} rejected ({exc}), halving step")
        h *= 0.5
    raise ContinuationError(f"{kind.value} expansion rejected after {MAX_HALVINGS} halvings", location=t0)


def _first_integral_drift(kind, c, t0):
    parts = [term[0] for term in _NONLINEAR_TERMS[kind](c[:3].copy(), t0)]
    return float(abs(np.sum(parts)) / max(1.0, float(np.sum(np.abs(parts)))))


def _flow_expansion(kind, work, t0, t1, degree):
    """
    Coefficients about t1 seeded with (value, slope, curvature) of the
    series `work` about t0.  Raises NumericalFailure when they are not
    finite, when their radius estimate has collapsed below the step just
    taken, or when the first integral has moved.
    """
    n = degree + 1
    c = np.zeros(n, dtype=_WORK)
    c[:3] = _recenter(work, t1 - t0)[:3]
    flow = _NONLINEAR_FLOWS[kind]
    _extend(c, lambda y: np.sum(flow(y, t1), axis=0), range(0, n - 3), 3, location=t1)
    if not np.all(np.isfinite(c)):
        raise NumericalFailure(f"non-finite coefficients at t={t1!r}")
    radius = radius_estimate(_stored(c, t1))
    if radius < t1 - t0:
        raise NumericalFailure(f"radius estimate {radius:.3g} below the step {t1 - t0:.3g}")
    drift = _first_integral_drift(kind, c, t1)
    if drift > FIRST_INTEGRAL_TOL:
        raise NumericalFailure(f"first integral off by {drift:.3e}")
    return c


def _finish(kind, xi, segments, base, opts):
    fn = PiecewiseAnalytic(tuple(segments))
    value_gap, slope_gap = fn.junction_mismatch()
    if max(value_gap, slope_gap) > fn.junction_tol:
        raise ValidationError(
            f"{kind.value} junction mismatch {max(value_gap, slope_gap):.3e} exceeds {fn.junction_tol:.1e}"
        )
    residual_sup = _residual_sup(kind, fn, base.fn if base is not None else None, opts.s_max)
    if residual_sup >= opts.residual_tol:
        raise ValidationError(f"{kind.value} residual {residual_sup:.3e} exceeds {opts.residual_tol:.1e}")
    logger.info(
        f"Solved {kind.value} for xi={xi.xi}: {len(segments)} segments on [0, {opts.s_max}], "
        f"residual_sup={residual_sup:.3e}"
    )
    return TranscendentSolution(kind=kind, xi=xi, fn=fn, residual_sup=residual_sup)


def _solve_nonlinear(kind, xi, opts):
    xi = ThinningParam.coerce(xi)
    opts = opts or SolveOptions()
    work = _origin_coefficients(kind, xi.xi, opts.origin_degree)
    current = _stored(work, 0.0)
    radius = radius_estimate(current)
    h = min(_step_for(current, radius, opts), ORIGIN_RADIUS_FRACTION * radius)
    logger.debug(f"{kind.value} origin series radius estimate {radius:.4g}")

    segments = []
    t0 = 0.0
    while t0 + h < opts.s_max:
        t1, work = _halving(kind, t0, h, lambda t, w=work, a=t0: _flow_expansion(kind, w, a, t, opts.degree))
        segments.append(current.with_interval(t0, t1))
        t0 = t1
        current = _stored(work, t0)
        radius = radius_estimate(current)
        h = _step_for(current, radius, opts)
        logger.debug(f"{kind.value} segment at t={t0:.6g}: radius {radius:.4g}, step {h:.4g}")
    segments.append(current.with_interval(t0, opts.s_max))
    return _finish(kind, xi, segments, None, opts)


def solve_sigma0(xi, opts=None):
    """sigma0 on [0, s_max] by Taylor continuation from the origin series"""
    return _solve_nonlinear(TranscendentKind.SIGMA0, xi, opts)


def solve_u0(xi, opts=None):
    """u0 on [0, s_max] by Taylor continuation from the origin series"""
    return _solve_nonlinear(TranscendentKind.U0, xi, opts)


def _correction_expansion(kind, work, center, base_work, base_center, t, n, min_lead):
    coefficients = _LINEAR_COEFFICIENTS[kind](_recenter(base_work, t - base_center), t)
    lead = coefficients[0][0]
    if not abs(lead) >= min_lead:
        raise DegeneracyError(f"{kind.value} leading coefficient {float(lead):.3e} below {min_lead:.1e}",
                              order=0, location=t)
    c = np.zeros(n, dtype=_WORK)
    c[:2] = _recenter(work, t - center)[:2]
    _extend(c, lambda y: np.sum(_linear_terms(y, coefficients), axis=0), range(0, n - 2), 2, location=t)
    if not np.all(np.isfinite(c)):
        raise NumericalFailure(f"non-finite coefficients at t={t!r}")
    return c


def _enter_segment(kind, work, center, base_work, base_center, a, b, n, opts):
    """First usable center at or just past a base junction"""
    offsets = [0.0] + [(b - a) * 0.5 ** k for k in range(MAX_HALVINGS, 0, -1)]
    for offset in offsets:
        t = a + offset
        try:
            return t, _correction_expansion(kind, work, center, base_work, base_center, t, n,
                                            opts.min_second_deriv)
        except NumericalFailure as exc:
            logger.debug(f"{kind.value} expansion at t={t:.6g} rejected ({exc}), moving the center")
    raise ContinuationError(f"{kind.value} finds no usable center in [{a:.6g}, {b:.6g}]", location=a)


def solve_linear_correction(kind, base, xi, opts=None):
    """
    sigma1 or u1 on [0, s_max].  Each base segment is walked with steps
    sized from the correction's own series, and A, B, C, D come from the
    base segment's polynomial re-expanded about every center, so they are
    exactly the base the residual check later substitutes.
    """
    kind = kind if isinstance(kind, TranscendentKind) else TranscendentKind.parse(kind)
    xi = ThinningParam.coerce(xi)
    opts = opts or SolveOptions()
    if not kind.is_linear:
        raise ArgumentError(f"{kind.value} is not a linear correction")
    if base.kind is not kind.base_kind:
        raise ArgumentError(f"{kind.value} needs a {kind.base_kind.value} base, got {base.kind.value}")
    if base.xi != xi:
        raise ArgumentError(f"base solved for xi={base.xi.xi}, asked for xi={xi.xi}")
    if base.s_max < opts.s_max * (1.0 - 1e-12):
        raise DomainError(f"base covers only [0, {base.s_max}], need [0, {opts.s_max}]", base.fn.domain)

    n = opts.degree + 1
    bases = [seg for seg in base.fn.segments if seg.interval[0] < opts.s_max]
    origin = bases[0]
    work = _origin_coefficients(kind, xi.xi, origin.degree)
    center = 0.0
    segments = [_stored(work, 0.0, (0.0, min(origin.interval[1], opts.s_max)))]
    for seg in bases[1:]:
        a, b = seg.interval[0], min(seg.interval[1], opts.s_max)
        base_work = _pad(np.asarray(seg.coeffs, dtype=_WORK), n)
        left = a
        center, work = _enter_segment(kind, work, center, base_work, seg.center, a, b, n, opts)
        while True:
            current = _stored(work, center)
            h = _step_for(current, radius_estimate(current), opts)
            if center + h >= b:
                segments.append(current.with_interval(left, b))
                break
            t1, work = _halving(
                kind, center, h,
                lambda t, w=work, c0=center: _correction_expansion(
                    kind, w, c0, base_work, seg.center, t, n, opts.min_second_deriv),
            )
            segments.append(current.with_interval(left, t1))
            left = center = t1
    return _finish(kind, xi, segments, base, opts)


def solve(kind, xi, opts=None, base=None):
    """Solve any kind, computing the base transcendent first when needed"""
    kind = kind if isinstance(kind, TranscendentKind) else TranscendentKind.parse(kind)
    opts = opts or SolveOptions()
    if kind is TranscendentKind.SIGMA0:
        return solve_sigma0(xi, opts)
    if kind is TranscendentKind.U0:
        return solve_u0(xi, opts)
    if base is None:
        logger.info(f"Solving {kind.base_kind.value} first as the base of {kind.value}")
        base = solve(kind.base_kind, xi, opts)
    return solve_linear_correction(kind, base, xi, opts)
