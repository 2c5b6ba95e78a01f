# spacing.py
"""
Gap probabilities, nearest-neighbour spacing densities and their 1/N^2
corrections, assembled from solved transcendents, together with the
printed small- and large-s reference forms they are checked against.

All s arguments are in units of the mean spacing of the unthinned process.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.constants import (
    DEFAULT_H_XI,
    DEFAULT_NYSTROM_ORDER,
    REFERENCE_LARGE_S_LIMIT,
    REFERENCE_SMALL_S_LIMIT,
)
from src.errors import ArgumentError, DomainError
from src.fredholm import extrapolated_spacing
from src.models import (
    AsymptoticKind,
    Provenance,
    SolveOptions,
    SpacingCurve,
    ThinningParam,
    TranscendentKind,
)
from src.painleve import solve_u0
from src.series import integrate_weighted, series_eval
from src.utils import compensated_horner

logger = logging.getLogger(__name__)

SMALL_S_KINDS = ("A1", "Sd2", "P12", "P13", "CUE_8")


@dataclass(frozen=True)
class ReferenceValue:
    """A reference evaluation and the reason it may not be trusted"""
    value: float
    warning: str = None
    shape_only: bool = False


def _require(solution, kind):
    if solution.kind is not kind:
        raise ArgumentError(f"expected a {kind.value} solution, got {solution.kind.value}")


def _require_pair(base, correction, base_kind, correction_kind):
    _require(base, base_kind)
    _require(correction, correction_kind)
    if base.xi != correction.xi:
        raise ArgumentError(f"xi mismatch: {base.xi.xi!r} vs {correction.xi.xi!r}")


def _require_xi(solution, xi):
    xi = ThinningParam.coerce(xi)
    if solution.xi != xi:
        raise ArgumentError(f"{solution.kind.value} was solved for xi={solution.xi.xi!r}, not {xi.xi!r}")
    return xi


def gap_probability(sigma0, s):
    """E(0; s; xi) = exp of the integral of sigma0(X)/X over [0, pi s]"""
    _require(sigma0, TranscendentKind.SIGMA0)
    return math.exp(integrate_weighted(sigma0.fn, math.pi * s))


def gap_correction(sigma0, sigma1, s):
    """Coefficient of 1/N^2 in the finite-N gap probability"""
    _require_pair(sigma0, sigma1, TranscendentKind.SIGMA0, TranscendentKind.SIGMA1)
    upper = math.pi * s
    return integrate_weighted(sigma1.fn, upper) * math.exp(integrate_weighted(sigma0.fn, upper))


def spacing_leading_u(u0, xi, s):
    _require(u0, TranscendentKind.U0)
    xi = _require_xi(u0, xi)
    if s == 0.0:
        return 0.0
    integral = integrate_weighted(u0.fn, 2.0 * math.pi * s)
    return xi.xi * (math.pi * s) ** 2 / 3.0 * math.exp(integral)


def spacing_correction_u(u0, u1, xi, s):
    _require_pair(u0, u1, TranscendentKind.U0, TranscendentKind.U1)
    if s == 0.0:
        return 0.0
    leading = spacing_leading_u(u0, xi, s)
    bracket = -1.0 - (math.pi * s) ** 2 / 3.0 + integrate_weighted(u1.fn, 2.0 * math.pi * s)
    return leading * bracket


def _log_derivatives(solution, s):
    """
    I(s), I'(s), I''(s) for I(s) the integral of f(X)/X over [0, pi s].

    Inside the origin segment the series is differentiated termwise, so
    nothing is divided by s.
    """
    upper = math.pi * s
    value = integrate_weighted(solution.fn, upper)
    origin = solution.fn.segments[0]
    if upper <= origin.interval[1]:
        c = origin.coeffs
        first = [c[k] * math.pi ** k for k in range(1, len(c))] or [0.0]
        second = [(k - 1) * c[k] * math.pi ** k for k in range(2, len(c))] or [0.0]
        return value, float(compensated_horner(first, s)), float(compensated_horner(second, s))
    segment = solution.fn.segments[solution.fn.owning_index(upper)]
    f = series_eval(segment, upper, 0)
    df = series_eval(segment, upper, 1)
    return value, f / s, (math.pi * df - f / s) / s


def spacing_from_gap(sigma0, sigma1, xi, s):
    """
    (leading, correction) of p(0; s; xi) as (1/xi) times the second
    s-derivative of the gap probability and of its 1/N^2 coefficient.
    """
    _require_pair(sigma0, sigma1, TranscendentKind.SIGMA0, TranscendentKind.SIGMA1)
    xi = _require_xi(sigma0, xi)
    i0, d0, dd0 = _log_derivatives(sigma0, s)
    i1, d1, dd1 = _log_derivatives(sigma1, s)
    scale = math.exp(i0) / xi.xi
    curvature = dd0 + d0 * d0
    leading = scale * curvature
    correction = scale * (curvature * i1 + 2.0 * d0 * d1 + dd1)
    return leading, correction


def reference_small_s(kind, xi, s, N=None):
    """Printed small-s truncations, evaluated at s"""
    xi = ThinningParam.coerce(xi).xi
    if kind not in SMALL_S_KINDS:
        raise ArgumentError(f"unknown small-s reference {kind!r}, expected one of {', '.join(SMALL_S_KINDS)}")
    if s < 0.0:
        raise DomainError(f"s must be non-negative, got {s!r}")
    p2, p4, p6 = math.pi ** 2, math.pi ** 4, math.pi ** 6
    if kind == "A1":
        value = (1.0 - xi * s + xi ** 2 * p2 * s ** 4 / 36.0 - xi ** 2 * p4 * s ** 6 / 675.0
                 + xi ** 2 * p6 * s ** 8 / 17640.0 - xi ** 3 * p6 * s ** 9 / 291600.0)
    elif kind == "Sd2":
        value = (-xi ** 2 * p2 * s ** 4 / 36.0 + xi ** 2 * p4 * s ** 6 / 270.0
                 - xi ** 2 * p6 * s ** 8 / 3780.0 + xi ** 3 * p6 * s ** 9 / 48600.0)
    elif kind == "P12":
        value = (xi * p2 * s ** 2 / 3.0 - 2.0 * xi * p4 * s ** 4 / 45.0
                 + xi * p6 * s ** 6 / 315.0 - xi ** 2 * p6 * s ** 7 / 4050.0)
    elif kind == "P13":
        value = (-xi * p2 * s ** 2 / 3.0 + xi * p4 * s ** 4 / 9.0
                 - 2.0 * xi * p6 * s ** 6 / 135.0 + xi ** 2 * p6 * s ** 7 / 675.0)
    else:
        if N is None:
            raise ArgumentError("the CUE_8 expansion needs N")
        inv = 1.0 / float(N) ** 2
        value = (1.0 - xi * s + (1.0 - inv) * xi ** 2 * p2 * s ** 4 / 36.0
                 - (1.0 - inv) * (2.0 - 3.0 * inv) * xi ** 2 * p4 * s ** 6 / 1350.0
                 + (1.0 - inv) * (1.0 - 2.0 * inv) * (3.0 - 5.0 * inv) * xi ** 2 * p6 * s ** 8 / 52920.0)
    warning = None
    if s > REFERENCE_SMALL_S_LIMIT:
        warning = f"{kind} truncation used at s={s!r} beyond {REFERENCE_SMALL_S_LIMIT}"
        logger.warning(warning)
    return ReferenceValue(value=value, warning=warning)


def _det_shape(form, s):
    if form.xi.is_full:
        return math.exp(-(math.pi * s) ** 2 / 8.0) / (math.pi * s) ** 0.25
    k = form.k
    return s ** (k * k / 2.0) * math.exp(-k * math.pi * s)


def reference_large_s(form, s):
    """
    Non-oscillatory large-s truncation named by form.  Transcendent forms
    take the transcendent's own argument; the determinant and spacing forms
    take s and carry A(xi) = 1.
    """
    if s <= 0.0:
        raise DomainError(f"large-s forms need s > 0, got {s!r}")
    kind = form.kind
    k = form.k
    xi = form.xi.xi
    if kind is AsymptoticKind.SS:
        value = -k * s + k * k / 2.0
    elif kind is AsymptoticKind.SS_SIG1:
        value = -k * k * s * s / 6.0
    elif kind is AsymptoticKind.SSA:
        value = -s * s / 4.0 - 0.25
    elif kind is AsymptoticKind.SSB:
        value = -s ** 4 / 48.0 + s * s / 48.0
    elif kind is AsymptoticKind.U0_LARGE:
        value = -k * s / 2.0 + k * k / 2.0 - 2.0
    elif kind is AsymptoticKind.U1_LARGE:
        value = s * s / 6.0
    elif kind is AsymptoticKind.U0_LARGE1:
        value = -s * s / 16.0 - 0.25
    elif kind is AsymptoticKind.U1_LARGE1:
        value = -s ** 4 / 768.0 + 43.0 * s * s / 192.0
    elif kind is AsymptoticKind.SDA:
        if form.xi.is_full:
            value = math.pi ** 3.75 / 16.0 * s ** 1.75 * math.exp(-(math.pi * s) ** 2 / 8.0)
        else:
            value = (k * math.pi) ** 2 / xi * s ** (k * k / 2.0) * math.exp(-k * math.pi * s)
    elif kind is AsymptoticKind.SDB:
        if form.xi.is_full:
            value = -math.pi ** 7.75 / 3072.0 * s ** 5.75 * math.exp(-(math.pi * s) ** 2 / 8.0)
        else:
            value = -(k * math.pi) ** 4 / (12.0 * xi) * s ** (k * k / 2.0 + 2.0) * math.exp(-k * math.pi * s)
    elif kind is AsymptoticKind.DET_LEADING:
        value = _det_shape(form, s)
    else:
        x = math.pi * s
        factor = -x ** 4 / 192.0 + x * x / 96.0 if form.xi.is_full else -k * k * x * x / 12.0
        value = _det_shape(form, s) * factor

    warnings = []
    if s < REFERENCE_LARGE_S_LIMIT:
        warnings.append(f"{kind.value} asymptotic form used at s={s!r} below {REFERENCE_LARGE_S_LIMIT}")
    if form.shape_only:
        warnings.append(f"{kind.value} carries the undetermined constant A(xi), set to 1")
    warning = "; ".join(warnings) or None
    if warning:
        logger.warning(warning)
    return ReferenceValue(value=value, warning=warning, shape_only=form.shape_only)


def solve_u0_family(h=DEFAULT_H_XI, opts=None):
    """u0 at xi = 1, 1 - h, 1 - 2h for differencing in xi"""
    if not 0.0 < h < 0.25:
        raise ArgumentError(f"xi step must lie in (0, 0.25), got {h!r}")
    return tuple(solve_u0(1.0 - j * h, opts) for j in range(3))


def second_neighbour_spacing(u0_family, s):
    """
    p(1; s) = -d/dxi [(1/xi) p(0; s; xi)] at xi = 1, by a second-order
    backward difference over the u0 family.
    """
    full, near, far = u0_family
    for solution in u0_family:
        _require(solution, TranscendentKind.U0)
    h = 1.0 - near.xi.xi
    if not full.xi.is_full or abs((1.0 - far.xi.xi) - 2.0 * h) > 1e-12:
        raise ArgumentError("u0 family must be solved at xi = 1, 1 - h, 1 - 2h")
    if s == 0.0:
        return 0.0
    values = [spacing_leading_u(u, u.xi, s) / u.xi.xi for u in u0_family]
    return -(3.0 * values[0] - 4.0 * values[1] + values[2]) / (2.0 * h)


def finite_n_two_point(N, s):
    """
    CUE two-point function at unit density: (exact, truncated at 1/N^2)
    """
    if N < 2:
        raise ArgumentError(f"N must be at least 2, got {N}")
    if s == 0.0:
        return 0.0, 0.0
    x = math.pi * s
    exact = 1.0 - (math.sin(x) / (N * math.sin(x / N))) ** 2
    truncated = 1.0 - (math.sin(x) / x) ** 2 - math.sin(x) ** 2 / (3.0 * N * N)
    return exact, truncated


def theory_nn_spacing(params, xi, s, leading_fn, correction_fn, rescaled=False):
    """
    Spacing density expected for thinned unfolded zeros at height params.E:
    leading(alpha s) + correction(alpha s) / N_eff^2.  With rescaled set,
    s is a gap in y = xi x and the density picks up the Jacobian 1/xi.
    """
    xi = ThinningParam.coerce(xi)
    x = s / xi.xi if rescaled else s
    argument = params.alpha * x
    value = leading_fn(argument) + correction_fn(argument) / params.N_eff ** 2
    return value / xi.xi if rescaled else value


def build_spacing_curve(provenance, xi, grid, sigma0=None, sigma1=None, u0=None, u1=None,
                        n_list=None, m=DEFAULT_NYSTROM_ORDER, workers=None):
    """Tabulate leading and correction values over grid from one provenance"""
    provenance = provenance if isinstance(provenance, Provenance) else Provenance(provenance)
    xi = ThinningParam.coerce(xi)
    grid = np.asarray(grid, dtype=float)
    if provenance is Provenance.SIGMA_PATH:
        if sigma0 is None or sigma1 is None:
            raise ArgumentError("sigma path needs sigma0 and sigma1")
        pairs = [spacing_from_gap(sigma0, sigma1, xi, s) for s in grid]
    elif provenance is Provenance.U_PATH:
        if u0 is None or u1 is None:
            raise ArgumentError("u path needs u0 and u1")
        pairs = [(spacing_leading_u(u0, xi, s), spacing_correction_u(u0, u1, xi, s)) for s in grid]
    else:
        if not n_list:
            raise ArgumentError("finite-N extrapolation needs a list of N values")
        pairs = [extrapolated_spacing(xi, s, n_list, m, workers) for s in grid]
    leading = np.array([p[0] for p in pairs])
    correction = np.array([p[1] for p in pairs])
    # rounding can leave tiny negative densities deep in the tail
    leading = np.where((leading < 0.0) & (leading > -1e-12), 0.0, leading)
    curve = SpacingCurve(xi=xi, grid=grid, leading=leading, correction=correction, provenance=provenance)
    logger.info(f"Tabulated {provenance.value} spacing curve for xi={xi.xi} on {grid.size} points")
    return curve


def solve_options_for(s_max_grid, opts, factor):
    """SolveOptions covering factor * s_max_grid with the other settings of opts"""
    opts = opts or SolveOptions()
    needed = factor * s_max_grid
    if needed <= opts.s_max:
        return opts
    return SolveOptions(**{**opts.to_dict(), 's_max': needed})
