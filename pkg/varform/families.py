"""Registry of variance families for the null hypothesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, UsageError

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BasisFunction:
    name: str
    label: str
    fn: ArrayFn

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float), np.shape(t)).copy()


BASIS_FUNCTIONS: tuple[BasisFunction, ...] = (
    BasisFunction("const", "1", lambda t: np.ones_like(t)),
    BasisFunction("t", "t", lambda t: t),
    BasisFunction("t2", "t^2", lambda t: t**2),
    BasisFunction("sqrt_t", "sqrt(t)", np.sqrt),
    BasisFunction("exp2t", "exp(2t)", lambda t: np.exp(2.0 * t)),
    BasisFunction("sin2pit", "sin(2 pi t)", lambda t: np.sin(2.0 * np.pi * t)),
)

_BASIS_BY_NAME = {basis.name: basis for basis in BASIS_FUNCTIONS}


@dataclass(frozen=True)
class VarianceFamily:
    """Null family for sigma^2: offset plus linear span, or a nonlinear model.

    Affine kind: sigma^2(t) = b(t) + sum_j theta_j sigma_j^2(t).
    Nonlinear kind: sigma^2(t, theta) with its parameter gradient; the
    gradient at the fitted theta plays the role of the basis.
    """

    kind: str
    name: str
    basis: tuple[ArrayFn, ...] = ()
    offset: tuple[ArrayFn, ...] = ()
    model: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    gradient: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    start: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind == "affine":
            if not self.basis:
                raise ContractError("an affine family needs at least one basis function")
        elif self.kind == "nonlinear":
            if self.model is None or self.gradient is None or not self.start:
                raise ContractError("a nonlinear family needs a model, a gradient and a start value")
        else:
            raise ContractError(f"unknown family kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return len(self.basis) if self.kind == "affine" else len(self.start)

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    def design_matrix(self, t: np.ndarray) -> np.ndarray:
        """Basis values g(t_k) as an (n, d) array (affine kind)."""

        t = np.asarray(t, dtype=float)
        if not self.is_affine:
            raise ContractError("design_matrix is defined for affine families; use gradient_matrix")
        return np.column_stack([np.broadcast_to(fn(t), t.shape) for fn in self.basis]).astype(float)

    def offset_values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for fn in self.offset:
            total = total + np.broadcast_to(fn(t), t.shape)
        return total

    def model_values(self, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.is_affine:
            return self.offset_values(t) + self.design_matrix(t) @ np.asarray(theta, dtype=float)
        return np.asarray(self.model(t, np.asarray(theta, dtype=float)), dtype=float)

    def gradient_matrix(self, t: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
        """d sigma^2 / d theta at each t, shape (n, d)."""

        if self.is_affine:
            return self.design_matrix(t)
        if theta is None:
            raise ContractError("nonlinear gradient needs a parameter value")
        grad = np.asarray(self.gradient(np.asarray(t, dtype=float), np.asarray(theta, dtype=float)), dtype=float)
        return grad.reshape(np.size(t), self.dim)

    def reparameterized(self, matrix: np.ndarray) -> "VarianceFamily":
        """Affine family with basis B @ M (same span when M is nonsingular)."""

        if not self.is_affine:
            raise ContractError("only affine families can be reparameterized")
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (self.dim, self.dim):
            raise ContractError(f"reparameterization must be {self.dim}x{self.dim}")
        base = self

        def column(j: int) -> ArrayFn:
            return lambda t: base.design_matrix(t) @ matrix[:, j]

        return VarianceFamily(
            "affine",
            f"{self.name}*M",
            basis=tuple(column(j) for j in range(self.dim)),
            offset=self.offset,
        )


def affine_family(basis: Sequence[str], offset: Sequence[str] = ()) -> VarianceFamily:
    """Family spanned by named basis functions with an optional known offset."""

    unknown = [name for name in [*basis, *offset] if name not in _BASIS_BY_NAME]
    if unknown:
        raise UsageError(f"unknown basis function(s): {', '.join(unknown)}; known: {', '.join(_BASIS_BY_NAME)}")
    if not basis:
        raise UsageError("at least one basis function is required")
    label = "+".join(_BASIS_BY_NAME[name].label for name in offset)
    span = ",".join(basis)
    return VarianceFamily(
        "affine",
        f"{label}+span({span})" if offset else f"span({span})",
        basis=tuple(_BASIS_BY_NAME[name] for name in basis),
        offset=tuple(_BASIS_BY_NAME[name] for name in offset),
    )


def _exp_t_model(t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return np.exp(theta[0] * t)


def _exp_t_gradient(t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return (t * np.exp(theta[0] * t))[:, None]


NONLINEAR_FAMILIES: dict[str, VarianceFamily] = {
    "exp_t": VarianceFamily("nonlinear", "exp(theta t)", model=_exp_t_model, gradient=_exp_t_gradient, start=(0.0,)),
}


def resolve_family(spec: str | VarianceFamily) -> VarianceFamily:
    """Parse 'const,t2', 't2@const' (basis @ offset) or a nonlinear family name."""

    if isinstance(spec, VarianceFamily):
        return spec
    text = spec.strip()
    if text in NONLINEAR_FAMILIES:
        return NONLINEAR_FAMILIES[text]
    basis_text, _, offset_text = text.partition("@")
    basis = [name.strip() for name in basis_text.split(",") if name.strip()]
    offset = [name.strip() for name in offset_text.split(",") if name.strip()]
    return affine_family(basis, offset)
