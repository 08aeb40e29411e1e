"""Schemas for test configuration, reports, scenarios and rejection tables."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .config import DEFAULTS

MethodName = Literal["nw", "local_linear"]
ModelName = Literal["sin", "exp", "sqrt"]
ErrorLaw = Literal["normal", "uniform", "laplace"]
VariancePolicy = Literal["error", "fold"]
LawName = Literal["int_W2", "sup_W"]


def alpha_key(alpha: float) -> str:
    return f"{alpha:g}"


def _validate_alphas(values: list[float]) -> list[float]:
    if not values:
        raise ValueError("at least one alpha is required")
    for alpha in values:
        if not 0.0 < alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    return sorted(set(values))


class TestConfig(BaseModel):
    model_config = ConfigDict(frozen=True)
    __test__ = False

    order: int = Field(default=DEFAULTS.order, ge=1)
    coefficients: list[float] | None = None
    kernel: str = DEFAULTS.kernel
    method: MethodName = DEFAULTS.method
    bandwidth: float | Literal["auto"] = "auto"
    t0: float = Field(default=DEFAULTS.t0, gt=0.0, le=1.0)
    beta_method: MethodName = DEFAULTS.beta_method
    beta_bandwidth_factor: float = Field(default=DEFAULTS.beta_bandwidth_factor, gt=0.0)
    studentize: bool = DEFAULTS.studentize
    alphas: list[float] = Field(default_factory=lambda: list(DEFAULTS.alphas))
    critval_samples: int = Field(default=DEFAULTS.critval_samples, ge=100)
    critval_seed: int = Field(default=DEFAULTS.seed, ge=0)
    kl_terms: int = Field(default=DEFAULTS.kl_terms, ge=1)
    path_steps: int = Field(default=DEFAULTS.path_steps, ge=1)
    ks_test: bool = True
    workers: int = Field(default=1, ge=1)

    @field_validator("alphas")
    @classmethod
    def _alphas(cls, values: list[float]) -> list[float]:
        return _validate_alphas(values)

    @field_validator("bandwidth")
    @classmethod
    def _bandwidth(cls, value: float | str) -> float | str:
        if value != "auto" and not value > 0.0:
            raise ValueError("a fixed bandwidth must be positive")
        return value


class TestDiagnostics(BaseModel):
    __test__ = False

    n: int
    order: int
    family: str
    method: MethodName
    kernel: str
    h_cv: float
    h_beta: float
    beta_method: MethodName = DEFAULTS.beta_method
    studentized: bool = DEFAULTS.studentize
    t0: float
    f_n_t0: float
    max_condition: float
    gram_condition: float
    floor_count: int
    theta_hat: list[float]
    raw_g: float
    raw_k: float
    critval_samples: int
    critval_seed: int
    known_beta: bool = False


class TestReport(BaseModel):
    __test__ = False

    g_normalized: float = Field(ge=0.0)
    k_normalized: float = Field(ge=0.0)
    critical_values: dict[str, float]
    decisions: dict[str, bool]
    p_value: float = Field(ge=0.0, le=1.0)
    k_critical_values: dict[str, float] = Field(default_factory=dict)
    k_decisions: dict[str, bool] = Field(default_factory=dict)
    diagnostics: TestDiagnostics

    def rejects(self, alpha: float) -> bool:
        return self.decisions[alpha_key(alpha)]


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: ModelName
    c: float = Field(ge=0.0)
    n: int = Field(ge=2)
    seed: int = Field(default=DEFAULTS.seed, ge=0)
    error_law: ErrorLaw = "normal"
    negative_variance: VariancePolicy = "error"


class RejectionCell(BaseModel):
    model: ModelName
    c: float
    n: int
    alpha: float
    rejections: int = Field(ge=0)
    replications: int = Field(ge=0)
    failures: int = Field(ge=0)
    proportion: float = Field(ge=0.0, le=1.0)
    std_error: float = Field(ge=0.0)


class RejectionTable(BaseModel):
    cells: list[RejectionCell] = Field(default_factory=list)
    replications: int = Field(ge=1)
    seed: int
    family: str
    notes: list[str] = Field(default_factory=list)

    def lookup(self, model: str, c: float, n: int, alpha: float) -> RejectionCell:
        for cell in self.cells:
            if cell.model == model and cell.c == c and cell.n == n and cell.alpha == alpha:
                return cell
        raise KeyError((model, c, n, alpha))


class RunConfig(BaseModel):
    """Flag and config-file values for the command line."""

    family: str = "const,t2"
    order: int = Field(default=DEFAULTS.order, ge=1)
    coefficients: list[float] | None = None
    kernel: str = DEFAULTS.kernel
    method: MethodName = DEFAULTS.method
    bandwidth: float | Literal["auto"] = "auto"
    t0: float = Field(default=DEFAULTS.t0, gt=0.0, lt=1.0)
    beta_method: MethodName = DEFAULTS.beta_method
    beta_bandwidth_factor: float = Field(default=DEFAULTS.beta_bandwidth_factor, gt=0.0)
    studentize: bool = DEFAULTS.studentize
    alphas: list[float] = Field(default_factory=lambda: list(DEFAULTS.alphas))
    seed: int | None = Field(default=None, ge=0)
    reps: int = Field(default=1000, ge=1)
    models: list[ModelName] = Field(default_factory=lambda: ["sin", "exp", "sqrt"])
    c: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    n: list[int] = Field(default_factory=lambda: [50, 100, 200])
    law: LawName = "int_W2"
    samples: int = Field(default=DEFAULTS.critval_samples, ge=100)
    workers: int = Field(default=1, ge=1)
    negative_variance: VariancePolicy = "fold"
    out: str | None = None
    trajectory_out: str | None = None

    @field_validator("alphas")
    @classmethod
    def _alphas(cls, values: list[float]) -> list[float]:
        return _validate_alphas(values)

    @field_validator("c")
    @classmethod
    def _c_values(cls, values: list[float]) -> list[float]:
        if not values or any(c < 0 for c in values):
            raise ValueError("c values must be non-negative and non-empty")
        return values

    @field_validator("n")
    @classmethod
    def _n_values(cls, values: list[int]) -> list[int]:
        if not values or any(n < 10 for n in values):
            raise ValueError("sample sizes must be at least 10")
        return values

    def test_config(self, seed: int) -> TestConfig:
        return TestConfig(
            order=self.order,
            coefficients=self.coefficients,
            kernel=self.kernel,
            method=self.method,
            bandwidth=self.bandwidth,
            t0=self.t0,
            beta_method=self.beta_method,
            beta_bandwidth_factor=self.beta_bandwidth_factor,
            studentize=self.studentize,
            alphas=self.alphas,
            critval_samples=self.samples,
            critval_seed=seed,
            workers=self.workers,
        )
