# models.py
"""
Data models for the spacing toolkit
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from src.constants import (
    DEFAULT_DEGREE,
    DEFAULT_MIN_SECOND_DERIV,
    DEFAULT_ORIGIN_DEGREE,
    DEFAULT_S_MAX,
    DEFAULT_STEP_FACTOR,
    DENSITY_SLACK,
    JUNCTION_TOL,
    LAMBDA,
    MAX_BOUNDARY_DEGREE,
    Q_OVER_LAMBDA,
    RESIDUAL_TOL,
)
from src.errors import ArgumentError, DataError, DomainError, ValidationError
from src.series import PiecewiseAnalytic, PowerSeries
from src.utils import float_to_hex, hex_to_float


@dataclass(frozen=True)
class ThinningParam:
    """
    Probability xi that a point survives independent deletion
    """
    xi: float

    def __post_init__(self):
        xi = float(self.xi)
        if not 0.0 < xi <= 1.0:
            raise ArgumentError(f"thinning parameter must satisfy 0 < xi <= 1, got {xi!r}")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def coerce(cls, value):
        return value if isinstance(value, cls) else cls(value)

    @property
    def is_full(self):
        return self.xi == 1.0

    @property
    def k(self):
        """Decay rate -(1/pi) log(1 - xi), defined for xi < 1"""
        if self.is_full:
            raise DomainError("k = -(1/pi) log(1 - xi) is undefined at xi = 1")
        return -math.log1p(-self.xi) / math.pi

    def __repr__(self):
        return f"ThinningParam(xi={self.xi!r})"


class TranscendentKind(Enum):
    SIGMA0 = "sigma0"
    SIGMA1 = "sigma1"
    U0 = "u0"
    U1 = "u1"

    @property
    def is_linear(self):
        return self in (TranscendentKind.SIGMA1, TranscendentKind.U1)

    @property
    def base_kind(self):
        """The transcendent a linear correction is built from"""
        return {
            TranscendentKind.SIGMA1: TranscendentKind.SIGMA0,
            TranscendentKind.U1: TranscendentKind.U0,
        }.get(self)

    @classmethod
    def parse(cls, text):
        try:
            return cls(str(text).lower())
        except ValueError:
            raise ArgumentError(f"unknown transcendent kind {text!r}") from None


@dataclass(frozen=True)
class SolveOptions:
    s_max: float = DEFAULT_S_MAX
    degree: int = DEFAULT_DEGREE
    step_factor: float = DEFAULT_STEP_FACTOR
    min_second_deriv: float = DEFAULT_MIN_SECOND_DERIV
    origin_degree: int = DEFAULT_ORIGIN_DEGREE
    residual_tol: float = RESIDUAL_TOL

    def __post_init__(self):
        if not self.s_max > 0.0:
            raise ArgumentError(f"s_max must be positive, got {self.s_max!r}")
        if self.degree < 10:
            raise ArgumentError(f"Taylor degree must be at least 10, got {self.degree}")
        if not 0.0 < self.step_factor < 1.0:
            raise ArgumentError(f"step factor must lie in (0, 1), got {self.step_factor!r}")
        if not 10 <= self.origin_degree <= MAX_BOUNDARY_DEGREE:
            raise ArgumentError(
                f"origin degree must lie in [10, {MAX_BOUNDARY_DEGREE}], got {self.origin_degree}"
            )

    def to_dict(self):
        return {
            's_max': self.s_max,
            'degree': self.degree,
            'step_factor': self.step_factor,
            'min_second_deriv': self.min_second_deriv,
            'origin_degree': self.origin_degree,
            'residual_tol': self.residual_tol,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class TranscendentSolution:
    """
    One of sigma0, sigma1, u0, u1 as a piecewise-analytic function of X
    """
    kind: TranscendentKind
    xi: ThinningParam
    fn: PiecewiseAnalytic
    residual_sup: float

    @property
    def s_max(self):
        return self.fn.s_max

    def __repr__(self):
        return (f"TranscendentSolution(kind={self.kind.value}, xi={self.xi.xi!r}, "
                f"segments={len(self.fn.segments)}, s_max={self.s_max!r}, "
                f"residual_sup={self.residual_sup:.3e})")

    def to_dict(self):
        """Convert to dictionary for JSON serialization, floats as hex strings"""
        return {
            'kind': self.kind.value,
            'xi': float_to_hex(self.xi.xi),
            'residual_sup': float_to_hex(self.residual_sup),
            'junction_tol': float_to_hex(self.fn.junction_tol),
            'segments': [
                {
                    'center': float_to_hex(seg.center),
                    'interval': [float_to_hex(v) for v in seg.interval],
                    'coeffs': [float_to_hex(c) for c in seg.coeffs],
                }
                for seg in self.fn.segments
            ],
        }

    @classmethod
    def from_dict(cls, data):
        segments = tuple(
            PowerSeries(
                hex_to_float(entry['center']),
                tuple(hex_to_float(c) for c in entry['coeffs']),
                tuple(hex_to_float(v) for v in entry['interval']),
            )
            for entry in data['segments']
        )
        fn = PiecewiseAnalytic(segments, hex_to_float(data.get('junction_tol', float_to_hex(JUNCTION_TOL))))
        return cls(
            kind=TranscendentKind.parse(data['kind']),
            xi=ThinningParam(hex_to_float(data['xi'])),
            fn=fn,
            residual_sup=hex_to_float(data['residual_sup']),
        )


class KernelFamily(Enum):
    SINE_LIMIT = "sine"
    FINITE_N = "finite"


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    xi: ThinningParam
    N: int = None

    def __post_init__(self):
        object.__setattr__(self, "xi", ThinningParam.coerce(self.xi))
        if self.family is KernelFamily.FINITE_N:
            if self.N is None or int(self.N) < 2:
                raise ArgumentError(f"finite-N kernel needs N >= 2, got {self.N!r}")
            object.__setattr__(self, "N", int(self.N))

    @classmethod
    def sine(cls, xi):
        return cls(KernelFamily.SINE_LIMIT, xi)

    @classmethod
    def finite(cls, N, xi):
        return cls(KernelFamily.FINITE_N, xi, N)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0.0):
            raise ValidationError("quadrature nodes must be strictly increasing")
        if np.any(self.weights <= 0.0):
            raise ValidationError("quadrature weights must be positive")

    @property
    def length(self):
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class DetResult:
    value: float
    order_used: int
    est_error: float

    def to_dict(self):
        return {'value': self.value, 'order_used': self.order_used, 'est_error': self.est_error}


class Provenance(Enum):
    SIGMA_PATH = "sigma"
    U_PATH = "u"
    FINITE_N_EXTRAPOLATION = "finite-n"


@dataclass(frozen=True, eq=False)
class SpacingCurve:
    """
    Tabulated large-N limit and 1/N^2 coefficient on an s-grid
    """
    xi: ThinningParam
    grid: np.ndarray
    leading: np.ndarray
    correction: np.ndarray
    provenance: Provenance
    is_density: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        leading = np.asarray(self.leading, dtype=float)
        correction = np.asarray(self.correction, dtype=float)
        if not grid.shape == leading.shape == correction.shape:
            raise ArgumentError("grid, leading and correction must have equal lengths")
        if np.any(np.diff(grid) <= 0.0):
            raise ArgumentError("spacing grid must be increasing")
        if np.any(leading < -1e-12):
            raise ValidationError(f"negative leading value {leading.min()!r}")
        if self.is_density and grid.size > 1:
            mass = float(trapezoid(leading, grid))
            if mass > 1.0 + DENSITY_SLACK:
                raise ValidationError(f"density integrates to {mass!r} > 1 on the grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "leading", leading)
        object.__setattr__(self, "correction", correction)

    def __repr__(self):
        return (f"SpacingCurve(xi={self.xi.xi!r}, provenance={self.provenance.value}, "
                f"points={self.grid.size})")

    def rows(self):
        for s, lead, corr in zip(self.grid, self.leading, self.correction):
            yield float(s), float(lead), float(corr), self.provenance.value


class AsymptoticKind(Enum):
    SS = "SS"
    SS_SIG1 = "SSsig1"
    SSA = "SSa"
    SSB = "SSb"
    U0_LARGE = "U0Large"
    U1_LARGE = "U1Large"
    U0_LARGE1 = "U0Large1"
    U1_LARGE1 = "U1Large1"
    SDA = "SDa"
    SDB = "SDb"
    DET_LEADING = "DetLeading"
    DET_CORRECTION = "DetCorrection"


_FULL_ONLY = {AsymptoticKind.SSA, AsymptoticKind.SSB, AsymptoticKind.U0_LARGE1, AsymptoticKind.U1_LARGE1}
_PARTIAL_ONLY = {AsymptoticKind.SS, AsymptoticKind.SS_SIG1, AsymptoticKind.U0_LARGE, AsymptoticKind.U1_LARGE}
_SHAPE_ONLY = {AsymptoticKind.SDA, AsymptoticKind.SDB, AsymptoticKind.DET_LEADING, AsymptoticKind.DET_CORRECTION}


@dataclass(frozen=True)
class AsymptoticForm:
    kind: AsymptoticKind
    xi: ThinningParam

    def __post_init__(self):
        object.__setattr__(self, "xi", ThinningParam.coerce(self.xi))
        if self.kind in _FULL_ONLY and not self.xi.is_full:
            raise ArgumentError(f"{self.kind.value} applies only at xi = 1")
        if self.kind in _PARTIAL_ONLY and self.xi.is_full:
            raise ArgumentError(f"{self.kind.value} applies only for 0 < xi < 1")

    @property
    def k(self):
        return None if self.xi.is_full else self.xi.k

    @property
    def shape_only(self):
        """True when the form carries the undetermined constant A(xi), set to 1"""
        return self.kind in _SHAPE_ONLY


@dataclass(frozen=True, eq=False)
class ZerosDataset:
    """
    Heights base + offsets; base is an exact integer, offsets are binary64
    """
    base: int
    offsets: np.ndarray
    start_index: int = None

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        if offsets.size > 1 and not np.all(np.diff(offsets) > 0.0):
            raise DataError("zero heights must be strictly increasing")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "base", int(self.base))

    @property
    def count(self):
        return int(self.offsets.size)

    def height(self, i):
        return float(self.base) + float(self.offsets[i])

    def __repr__(self):
        return f"ZerosDataset(base={self.base}, count={self.count}, start_index={self.start_index})"


@dataclass(frozen=True, eq=False)
class UnfoldedSequence:
    points: np.ndarray
    rho_bar: float
    source_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    @property
    def xi_effective(self):
        return float(self.source_meta.get('xi', 1.0))

    @property
    def count(self):
        return int(self.points.size)

    def __repr__(self):
        return f"UnfoldedSequence(count={self.count}, rho_bar={self.rho_bar!r}, meta={self.source_meta!r})"


@dataclass(frozen=True, eq=False)
class EmpiricalCurve:
    bin_edges: np.ndarray
    counts: np.ndarray
    n_ref: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.size != edges.size - 1:
            raise ArgumentError("need one count per bin")
        if np.any(counts < 0):
            raise ValidationError("histogram counts must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def bin_widths(self):
        return np.diff(self.bin_edges)

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def values(self):
        if self.n_ref <= 0:
            return np.zeros(self.counts.size)
        return self.counts / (self.n_ref * self.bin_widths)

    @property
    def stderr(self):
        if self.n_ref <= 0:
            return np.zeros(self.counts.size)
        return np.sqrt(self.counts) / (self.n_ref * self.bin_widths)


@dataclass(frozen=True)
class TheoryParams:
    E: float
    Lambda: float = LAMBDA
    Q_over_Lambda: float = Q_OVER_LAMBDA

    def __post_init__(self):
        if not self.E > 2.0 * math.pi * math.e:
            raise DomainError(f"height {self.E!r} must exceed 2*pi*e")

    @property
    def log_height(self):
        return math.log(self.E / (2.0 * math.pi))

    @property
    def rho_bar(self):
        return (self.log_height - 1.0) / (2.0 * math.pi)

    @property
    def alpha(self):
        return 1.0 + self.Q_over_Lambda / self.log_height

    @property
    def N_eff(self):
        return self.log_height / math.sqrt(12.0 * self.Lambda)

    def to_dict(self):
        return {
            'E': self.E,
            'Lambda': self.Lambda,
            'Q_over_Lambda': self.Q_over_Lambda,
            'rho_bar': self.rho_bar,
            'alpha': self.alpha,
            'N_eff': self.N_eff,
        }


@dataclass(frozen=True, eq=False)
class ResidualReport:
    bin_centers: np.ndarray
    values: np.ndarray
    theory: np.ndarray
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def residual(self):
        return self.values - self.theory

    @property
    def max_scaled(self):
        """Largest |residual|/stderr over bins with a nonzero error"""
        mask = self.stderr > 0.0
        if not np.any(mask):
            return 0.0
        return float(np.max(np.abs(self.residual[mask]) / self.stderr[mask]))

    @property
    def rms(self):
        if self.residual.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.residual ** 2)))


@dataclass
class JobConfig:
    """
    Fully resolved settings of one CLI job
    """
    command: str
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def metadata_items(self):
        yield 'command', self.command
        for key in sorted(self.values):
            value = self.values[key]
            if value is None:
                continue
            if isinstance(value, (list, tuple)):
                value = ','.join(str(v) for v in value)
            yield key, value

    def to_dict(self):
        return {'command': self.command, **{k: v for k, v in self.metadata_items() if k != 'command'}}
