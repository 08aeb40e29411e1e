"""Fixed design, difference sequences, pseudo residuals and the design CDF."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import ContractError, InsufficientDataError, InvalidDensityError, InvalidSequenceError

CDF_TOLERANCE = 1e-10
QUADRATURE_TOLERANCE = 1e-12
SEQUENCE_TOLERANCE = 1e-12


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class DesignDensity:
    """Density f of the fixed design on [0, 1]."""

    name: str
    pdf: Callable[[float], float] | None = None

    @property
    def is_uniform(self) -> bool:
        return self.name == "uniform"


UNIFORM = DesignDensity("uniform", lambda t: 1.0)
LINEAR = DesignDensity("linear", lambda t: 2.0 * t)
UNSPECIFIED = DesignDensity("unspecified")

BUILTIN_DENSITIES: dict[str, DesignDensity] = {"uniform": UNIFORM, "linear": LINEAR}


def resolve_density(density: str | DesignDensity | Callable[[float], float]) -> DesignDensity:
    """Turn a name, descriptor or bare callable into a DesignDensity."""

    if isinstance(density, DesignDensity):
        return density
    if isinstance(density, str):
        try:
            return BUILTIN_DENSITIES[density]
        except KeyError as exc:
            raise InvalidDensityError(
                f"unknown density {density!r}; builtin: {', '.join(sorted(BUILTIN_DENSITIES))}"
            ) from exc
    if callable(density):
        return DesignDensity(getattr(density, "__name__", "custom"), density)
    raise InvalidDensityError("density must be a name, a DesignDensity or a callable")


@dataclass(frozen=True)
class DesignGrid:
    """Ordered fixed-design points t_1 < ... < t_n in [0, 1]."""

    points: np.ndarray
    density: DesignDensity = UNSPECIFIED

    def __post_init__(self) -> None:
        points = _frozen(self.points)
        if points.ndim != 1 or points.size == 0:
            raise ContractError("design points must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(points)) or points[0] < 0.0 or points[-1] > 1.0:
            raise ContractError("design points must lie in [0, 1]")
        if points.size > 1 and not np.all(np.diff(points) > 0.0):
            raise ContractError("design points must be strictly increasing")
        object.__setattr__(self, "points", points)

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "DesignGrid":
        return cls(np.asarray(points, dtype=float), UNSPECIFIED)

    @property
    def n(self) -> int:
        return int(self.points.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class Sample:
    """Responses Y_1..Y_n observed at the design points."""

    grid: DesignGrid
    responses: np.ndarray

    def __post_init__(self) -> None:
        responses = _frozen(self.responses)
        if responses.shape != (self.grid.n,):
            raise ContractError(
                f"responses length {responses.size} does not match design size {self.grid.n}"
            )
        if not np.all(np.isfinite(responses)):
            raise ContractError("responses must be finite")
        object.__setattr__(self, "responses", responses)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def shifted(self, offset: float) -> "Sample":
        return Sample(self.grid, self.responses + offset)

    def scaled(self, factor: float) -> "Sample":
        return Sample(self.grid, self.responses * factor)


@dataclass(frozen=True)
class DifferenceSequence:
    """Coefficients d_0..d_r with sum zero and unit sum of squares."""

    coefficients: tuple[float, ...]
    delta: float = field(init=False)

    def __post_init__(self) -> None:
        coefficients = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "delta", _delta(coefficients))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def correction(self) -> float:
        """Coefficient 4*delta_r - 1 of the cross term in beta_hat."""

        return 4.0 * self.delta - 1.0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)


def _delta(coefficients: Sequence[float]) -> float:
    r = len(coefficients) - 1
    total = 0.0
    for m in range(1, r + 1):
        lag = sum(coefficients[j] * coefficients[j + m] for j in range(r - m + 1))
        total += lag * lag
    return total


def build_design(density: str | DesignDensity | Callable[[float], float], n: int) -> DesignGrid:
    """Place t_i so that the design CDF equals i/(n+1)."""

    if int(n) != n or n < 1:
        raise ContractError(f"design size must be a positive integer, got {n!r}")
    n = int(n)
    density = resolve_density(density)
    levels = np.arange(1, n + 1) / (n + 1)

    if density.is_uniform:
        return DesignGrid(levels, density)
    if density.pdf is None:
        raise InvalidDensityError(f"density {density.name!r} has no evaluable pdf")

    def integrand(u: float) -> float:
        value = float(density.pdf(u))
        if not math.isfinite(value) or value <= 0.0:
            raise InvalidDensityError(f"density {density.name!r} is not positive at t={u:.6g} (value {value!r})")
        return value

    def mass(a: float, b: float) -> float:
        if b <= a:
            return 0.0
        value, _ = integrate.quad(integrand, a, b, epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE, limit=200)
        return value

    total = mass(0.0, 1.0)
    if abs(total - 1.0) > 1e-8:
        raise InvalidDensityError(f"density {density.name!r} integrates to {total:.12g}, not 1")

    points = np.empty(n)
    left, left_mass = 0.0, 0.0
    for i, level in enumerate(levels):
        target = level - left_mass
        point = optimize.brentq(lambda t: mass(left, t) - target, left, 1.0, xtol=1e-13, rtol=4 * np.finfo(float).eps)
        # re-integrate from 0 so quadrature error does not accumulate along the grid
        left_mass = mass(0.0, point)
        left = point
        if abs(left_mass - level) > CDF_TOLERANCE:
            raise InvalidDensityError(f"design CDF inversion missed i={i + 1} by {abs(left_mass - level):.3g}")
        points[i] = point
    return DesignGrid(points, density)


def difference_sequence(spec: int | Sequence[float]) -> DifferenceSequence:
    """Builtin order-1 sequence, or validated explicit coefficients."""

    if isinstance(spec, (int, np.integer)) and not isinstance(spec, bool):
        if spec != 1:
            raise InvalidSequenceError(f"only order r=1 is builtin; pass explicit coefficients for r={spec}")
        return DifferenceSequence((1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)))

    coefficients = [float(c) for c in spec]
    if len(coefficients) < 2:
        raise InvalidSequenceError("a difference sequence needs at least two coefficients (order r >= 1)")
    if not all(math.isfinite(c) for c in coefficients):
        raise InvalidSequenceError("difference coefficients must be finite")

    total = math.fsum(coefficients)
    if abs(total) > SEQUENCE_TOLERANCE:
        raise InvalidSequenceError(f"sum of coefficients must be 0 (got {total:.15g})")
    squares = math.fsum(c * c for c in coefficients)
    if abs(squares - 1.0) > SEQUENCE_TOLERANCE:
        raise InvalidSequenceError(f"sum of squared coefficients must be 1 (got {squares:.15g})")
    return DifferenceSequence(tuple(coefficients))


@dataclass(frozen=True)
class PseudoResiduals:
    """R_{r+1}..R_n for a difference sequence of order r."""

    values: np.ndarray
    order: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def squares(self) -> np.ndarray:
        return self.values**2


def pseudo_residuals(sample: Sample, seq: DifferenceSequence) -> PseudoResiduals:
    """R_j = sum_i d_i Y_{j-i} for j = r+1..n."""

    r = seq.order
    if sample.n <= r:
        raise InsufficientDataError(f"need n > r for pseudo residuals (n={sample.n}, r={r})")
    values = np.convolve(sample.responses, seq.as_array(), mode="valid")
    return PseudoResiduals(values, r)


def empirical_cdf(grid: DesignGrid, t: float | np.ndarray) -> float | np.ndarray:
    """F_n(t) = #{t_i <= t} / n."""

    counts = np.searchsorted(grid.points, t, side="right")
    if np.ndim(counts) == 0:
        return float(counts) / grid.n
    return counts / grid.n
