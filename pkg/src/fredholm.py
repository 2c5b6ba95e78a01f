# fredholm.py
"""
Nystrom evaluation of Fredholm determinants of the sine kernel and of the
finite-N circular kernel, plus the quantities derived from them: the 1/N^2
resolvent trace, conditioned gap probabilities, finite-N spacing densities
and their extrapolation in N.

Nothing here touches the Painleve solvers, so every function can serve as
an independent check of them.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from src.constants import (
    DEFAULT_H_XI,
    DEFAULT_NYSTROM_ORDER,
    FD_STEP_MIN,
    FD_STEP_SCALE,
    MAX_CONDITION,
    MAX_CONDITIONED_COUNT,
    MIN_NYSTROM_ORDER,
)
from src.errors import ArgumentError, DomainError, InsufficientDataError, NumericalFailure
from src.models import DetResult, KernelFamily, KernelSpec, QuadratureRule, ThinningParam

logger = logging.getLogger(__name__)


def gauss_legendre_rule(s, m):
    """Order-m Gauss-Legendre rule on (0, s)"""
    if not s > 0.0:
        raise DomainError(f"quadrature interval length must be positive, got {s!r}")
    t, w = leggauss(m)
    half = 0.5 * s
    return QuadratureRule(nodes=half * (t + 1.0), weights=half * w, order=m)


def _separations(nodes):
    return nodes[:, None] - nodes[None, :]


def kernel_matrix(kernel, nodes):
    """K(x_i, x_j) for the kernel family, diagonal set to its limit 1"""
    z = _separations(nodes)
    if kernel.family is KernelFamily.SINE_LIMIT:
        return np.sinc(z)
    n = kernel.N
    denominator = n * np.sin(np.pi * z / n)
    values = np.ones_like(z)
    off = z != 0.0
    values[off] = np.sin(np.pi * z[off]) / denominator[off]
    return values


def correction_kernel_matrix(nodes):
    """(pi z / 6) sin(pi z), the 1/N^2 term of the finite-N kernel"""
    z = _separations(nodes)
    return (np.pi * z / 6.0) * np.sin(np.pi * z)


def _symmetrize(matrix, rule):
    root = np.sqrt(rule.weights)
    return root[:, None] * matrix * root[None, :]


def _operator(kernel, s, m):
    rule = gauss_legendre_rule(s, m)
    return _symmetrize(kernel_matrix(kernel, rule.nodes), rule)


def _det(kernel, s, m):
    matrix = np.eye(m) - kernel.xi.xi * _operator(kernel, s, m)
    value = float(linalg.det(matrix))
    if not math.isfinite(value):
        raise NumericalFailure(f"non-finite determinant at s={s!r}, m={m}")
    return value


def nystrom_det(kernel, s, m=DEFAULT_NYSTROM_ORDER):
    """
    det(I - xi W^1/2 K W^1/2) on an order-m Gauss-Legendre rule over (0, s);
    est_error compares against order m/2.
    """
    if m < MIN_NYSTROM_ORDER:
        raise ArgumentError(f"Nystrom order must be at least {MIN_NYSTROM_ORDER}, got {m}")
    if s < 0.0:
        raise DomainError(f"interval length must be non-negative, got {s!r}")
    if s == 0.0:
        return DetResult(value=1.0, order_used=m, est_error=0.0)
    value = _det(kernel, s, m)
    coarse = _det(kernel, s, m // 2)
    return DetResult(value=value, order_used=m, est_error=abs(value - coarse))


def finite_n_det(N, xi, s, m=DEFAULT_NYSTROM_ORDER):
    kernel = KernelSpec.finite(N, xi)
    if s >= kernel.N:
        raise DomainError(f"s={s!r} must be below N={kernel.N}", (0.0, float(kernel.N)))
    return nystrom_det(kernel, s, m)


def resolvent_trace_correction(xi, s, m=DEFAULT_NYSTROM_ORDER):
    """Tr((I - xi K_s)^-1 L_s) with L the 1/N^2 kernel correction"""
    xi = ThinningParam.coerce(xi)
    if s < 0.0:
        raise DomainError(f"interval length must be non-negative, got {s!r}")
    if s == 0.0:
        return 0.0
    rule = gauss_legendre_rule(s, m)
    system = np.eye(m) - xi.xi * _symmetrize(np.sinc(_separations(rule.nodes)), rule)
    condition = np.linalg.cond(system)
    if not condition <= MAX_CONDITION:
        raise NumericalFailure(f"resolvent system condition {condition:.3e} exceeds {MAX_CONDITION:.0e} at s={s!r}")
    columns = _symmetrize(correction_kernel_matrix(rule.nodes), rule)
    return float(np.trace(linalg.solve(system, columns, assume_a='pos')))


def _central_derivative(f, order, h):
    if order == 1:
        return (f(1.0 + h) - f(1.0 - h)) / (2.0 * h)
    if order == 2:
        return (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h)
    return (f(1.0 + 2.0 * h) - 2.0 * f(1.0 + h) + 2.0 * f(1.0 - h) - f(1.0 - 2.0 * h)) / (2.0 * h ** 3)


def conditioned_gap(m_count, s, m=DEFAULT_NYSTROM_ORDER, h_xi=DEFAULT_H_XI):
    """
    E(m_count; s), the probability of exactly m_count eigenvalues in (0, s)
    for the unthinned sine process.

    det(I - xi K) is a polynomial in xi on the Nystrom grid, so it is
    evaluated from the eigenvalues and differenced across xi = 1.
    """
    if not 0 <= m_count <= MAX_CONDITIONED_COUNT:
        raise ArgumentError(f"conditioned count must lie in 0..{MAX_CONDITIONED_COUNT}, got {m_count}")
    if m_count == 0:
        return nystrom_det(KernelSpec.sine(1.0), s, m).value
    if s == 0.0:
        return 0.0
    eigenvalues = linalg.eigvalsh(_operator(KernelSpec.sine(1.0), s, m))

    def det_at(x):
        return float(np.prod(1.0 - x * eigenvalues))

    # higher orders need wider steps to stay clear of rounding
    h = h_xi * 10.0 ** (m_count - 1)
    coarse = _central_derivative(det_at, m_count, h)
    fine = _central_derivative(det_at, m_count, 0.5 * h)
    derivative = (4.0 * fine - coarse) / 3.0
    return (-1.0) ** m_count * derivative / math.factorial(m_count)


def _second_derivative(f, s, h):
    if s >= 2.0 * h:
        def stencil(step):
            return (-f(s + 2 * step) + 16.0 * f(s + step) - 30.0 * f(s)
                    + 16.0 * f(s - step) - f(s - 2 * step)) / (12.0 * step * step)
        return (16.0 * stencil(0.5 * h) - stencil(h)) / 15.0
    # no determinant at negative lengths; one-sided, third order
    values = [f(s + j * h) for j in range(5)]
    return (35.0 * values[0] - 104.0 * values[1] + 114.0 * values[2]
            - 56.0 * values[3] + 11.0 * values[4]) / (12.0 * h * h)


def finite_n_spacing(N, xi, s, m=DEFAULT_NYSTROM_ORDER):
    """
    p^N(0; s; xi) = (1/xi) d^2/ds^2 det(I - xi K^N_s), with s in units of
    the mean spacing.
    """
    xi = ThinningParam.coerce(xi)
    if not 0.0 <= s < N:
        raise DomainError(f"s={s!r} outside [0, N) for N={N}", (0.0, float(N)))
    h = max(FD_STEP_MIN, s * FD_STEP_SCALE)
    if s + 4.0 * h >= N:
        raise DomainError(f"difference stencil at s={s!r} leaves [0, N) for N={N}", (0.0, float(N)))

    def det_at(t):
        return finite_n_det(N, xi, t, m).value if t > 0.0 else 1.0

    return _second_derivative(det_at, s, h) / xi.xi


def extrapolate_in_N(samples):
    """
    Least-squares fit value(N) = a + b/N^2 + c/N^4; returns (a, b).
    """
    samples = [(int(n), float(v)) for n, v in samples]
    ns = [n for n, _ in samples]
    if len(set(ns)) != len(ns):
        raise ArgumentError(f"duplicate N values make the fit rank-deficient: {sorted(ns)}")
    if len(ns) < 3:
        raise InsufficientDataError(f"extrapolation needs at least 3 distinct N values, got {len(ns)}")
    n_min = min(ns)
    x = np.array([(n_min / n) ** 2 for n in ns])
    design = np.column_stack([np.ones_like(x), x, x * x])
    values = np.array([v for _, v in samples])
    coeffs, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < 3:
        raise ArgumentError("extrapolation design matrix is rank-deficient")
    limit = float(coeffs[0])
    c2 = float(coeffs[1]) * n_min ** 2
    logger.debug(f"Extrapolated {len(ns)} samples over N in [{n_min}, {max(ns)}]: limit={limit!r}, c2={c2!r}")
    return limit, c2


def n_values(n_from, n_to, count):
    """count integers spread evenly over [n_from, n_to]"""
    if count < 3:
        raise InsufficientDataError(f"need at least 3 N values, got {count}")
    values = sorted(set(int(round(v)) for v in np.linspace(n_from, n_to, count)))
    if len(values) < count:
        raise ArgumentError(f"[{n_from}, {n_to}] holds fewer than {count} distinct integers")
    return values


def extrapolated_spacing(xi, s, n_list, m=DEFAULT_NYSTROM_ORDER, workers=None):
    """finite_n_spacing over n_list, extrapolated to (limit, c2)"""
    xi = ThinningParam.coerce(xi)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda n: finite_n_spacing(n, xi, s, m), n_list))
    else:
        values = [finite_n_spacing(n, xi, s, m) for n in n_list]
    return extrapolate_in_N(zip(n_list, values))
