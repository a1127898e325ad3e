"""Pydantic models for chlattice."""

from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from .config import TOL, Tolerances


def is_nonpositive_integer(x: complex) -> bool:
    """True when x is 0, -1, -2, ..."""
    x = complex(x)
    return x.imag == 0 and x.real <= 0 and float(x.real).is_integer()


def _frozen_array(value: Any, dtype: type) -> np.ndarray:
    arr = np.array(value, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite entries")
    arr.setflags(write=False)
    return arr


class Branch(str, Enum):
    """Evaluation route taken by the hypergeometric engine."""

    SERIES = "series"
    PFAFF = "pfaff"
    CONNECTION = "connection"
    ONE_MINUS_Z = "one_minus_z"


class HypParams(BaseModel):
    """Parameters (a, b, c) of the Gauss function F(a, b, c, z)."""

    model_config = ConfigDict(frozen=True)

    a: complex
    b: complex
    c: complex

    @model_validator(mode="after")
    def _c_not_a_pole(self) -> "HypParams":
        if is_nonpositive_integer(self.c):
            raise ValueError(f"c = {self.c} is zero or a negative integer")
        return self

    def swapped(self) -> "HypParams":
        return HypParams(a=self.b, b=self.a, c=self.c)


class EvalReport(BaseModel):
    """Value of a hypergeometric evaluation with its error estimate."""

    value: complex
    est_error: float = Field(ge=0)
    terms_used: int = Field(ge=0)
    branch: Branch

    @field_validator("est_error")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("error estimate must be finite")
        return v


class BallPoint(BaseModel):
    """Point of the unit ball model of CH^n."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coords: np.ndarray

    @field_validator("coords", mode="before")
    @classmethod
    def _as_complex_vector(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(np.atleast_1d(np.asarray(value, dtype=complex)), complex)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coords must be a non-empty vector")
        return arr

    @model_validator(mode="after")
    def _inside_ball(self) -> "BallPoint":
        norm2 = float(np.sum(np.abs(self.coords) ** 2))
        if not norm2 < 1.0:
            raise ValueError(f"|z|^2 = {norm2:.15g} is not inside the unit ball")
        return self

    @property
    def n(self) -> int:
        return int(self.coords.size)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.coords) ** 2))

    @classmethod
    def origin(cls, n: int) -> "BallPoint":
        return cls(coords=np.zeros(n, dtype=complex))

    @classmethod
    def of(cls, *coords: complex) -> "BallPoint":
        return cls(coords=list(coords))


class Isometry(BaseModel):
    """(n+1)x(n+1) complex matrix preserving the form diag(1, ..., 1, -1)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_square(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(np.asarray(value, dtype=complex), complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ValueError(f"expected a square matrix of size >= 2, got {arr.shape}")
        return arr

    @model_validator(mode="after")
    def _preserves_form(self) -> "Isometry":
        g = self.matrix
        j = form_matrix(g.shape[0] - 1)
        residual = float(np.max(np.abs(g.conj().T @ j @ g - j)))
        if residual > TOL.form_tol:
            raise ValueError(f"matrix does not preserve the form (residual {residual:.3e})")
        det = abs(complex(np.linalg.det(g)))
        if abs(det - 1.0) > TOL.form_tol:
            raise ValueError(f"|det g| = {det:.15g}, expected 1")
        return self

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0] - 1)

    @classmethod
    def identity(cls, n: int) -> "Isometry":
        return cls(matrix=np.eye(n + 1, dtype=complex))


def form_matrix(n: int) -> np.ndarray:
    """J = diag(1, ..., 1, -1) of size n+1."""
    j = np.eye(n + 1, dtype=complex)
    j[n, n] = -1.0
    return j


class PolarPoint(BaseModel):
    """Geodesic polar coordinates (r, omega), omega a unit vector in R^{2n}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    r: float = Field(ge=0)
    omega: np.ndarray

    @field_validator("omega", mode="before")
    @classmethod
    def _unit_vector(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(np.atleast_1d(np.asarray(value, dtype=float)), float)
        if arr.ndim != 1 or arr.size % 2:
            raise ValueError("omega must have even length 2n")
        if abs(float(np.linalg.norm(arr)) - 1.0) > TOL.point_tol:
            raise ValueError("omega is not a unit vector")
        return arr

    @property
    def n(self) -> int:
        return int(self.omega.size // 2)


class GroupSpec(BaseModel):
    """Generators of a discrete group and the enumeration limits."""

    n: int = Field(ge=1)
    generators: list[Isometry] = Field(default_factory=list)
    include_inverses: bool = True
    max_word_length: int = Field(default=12, ge=1)
    dedup_tol: float = Field(default=TOL.dedup_tol, gt=0)
    prune_margin: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _same_dimension(self) -> "GroupSpec":
        for k, g in enumerate(self.generators):
            if g.n != self.n:
                raise ValueError(f"generator {k} acts on CH^{g.n}, expected n={self.n}")
        return self


class CountResult(BaseModel):
    """Lattice point count N(T, z, z') and enumeration diagnostics."""

    count: int = Field(ge=0)
    words_expanded: int = Field(ge=0)
    pruned: int = Field(ge=0)
    truncated: bool = False
    stabilizer_order: int = Field(default=1, ge=1)
    group_count: int = Field(default=0, ge=0)

    @property
    def certified(self) -> bool:
        return not self.truncated


class OrbitPoint(BaseModel):
    """One orbit point and the length of the shortest word reaching it."""

    point: BallPoint
    word_length: int = Field(ge=0)


class BumpProfile(BaseModel):
    """Radial bump h(x) = c_alpha * h1(d(x, center) / alpha)."""

    center: BallPoint
    alpha: float = Field(gt=0, le=0.5)
    power: int = Field(default=3, ge=2)
    kappa: float = Field(gt=0)
    c_alpha: float = Field(gt=0)

    @property
    def n(self) -> int:
        return self.center.n

    def h1(self, t: Any) -> np.ndarray:
        """kappa * (1 - t^2)^power on [0, 1), zero beyond."""
        t = np.asarray(t, dtype=float)
        inside = np.clip(1.0 - t * t, 0.0, None)
        return self.kappa * inside**self.power


class WaveConfig(BaseModel):
    """Quadrature and differentiation settings for the wave route."""

    t_quad_points: int = Field(default=48, ge=4)
    max_t_quad_points: int = Field(default=384, ge=4)
    radial_quad_points: int = Field(default=48, ge=4)
    angular_quad_points: int = Field(default=32, ge=4)
    richardson_levels: int = Field(default=3, ge=1, le=6)
    tol: float = Field(default=1e-8, gt=1e-12, lt=1e-2)
    fd_step: float = Field(default=1e-2, gt=0)


class QuadResult(BaseModel):
    """Value of a quadrature with its error estimate."""

    value: float
    est_error: float = Field(ge=0)
    evaluations: int = Field(gt=0)
    flagged: bool = False

    @field_validator("est_error")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("error estimate must be finite")
        return v


class RouteResult(BaseModel):
    """Smoothed count I(T, z, z', alpha) from one route."""

    value: float
    est_error: float = Field(ge=0)
    truncated: bool = False
    translates: int = Field(default=0, ge=0)


class SpectralEntry(BaseModel):
    """Discrete eigenvalue with an evaluator for its eigenfunction."""

    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", lt=0)
    phi: Callable[[BallPoint], float]

    @property
    def mu(self) -> float:
        return float(np.sqrt(abs(self.lam)))


class SpectralData(BaseModel):
    """Finite discrete spectral data of L_Gamma.

    With `n` set, every eigenvalue must lie at or above the bottom -n^2.
    """

    entries: list[SpectralEntry] = Field(default_factory=list)
    covolume: Optional[float] = Field(default=None, gt=0)
    n: Optional[int] = Field(default=None, ge=1)

    @field_validator("entries")
    @classmethod
    def _ascending(cls, v: list[SpectralEntry]) -> list[SpectralEntry]:
        return sorted(v, key=lambda e: e.lam)

    @model_validator(mode="after")
    def _above_bottom(self) -> "SpectralData":
        if self.n is not None and self.entries and self.entries[0].lam < -self.n**2:
            raise ValueError(
                f"lambda = {self.entries[0].lam} is below -n^2 = {-self.n**2}"
            )
        return self


class CheckResult(BaseModel):
    """Outcome of one identity check."""

    name: str
    passed: bool
    max_residual: float
    tolerance: float
    detail: str = ""


class VerifyReport(BaseModel):
    """Outcome of the identity battery."""

    checks: list[CheckResult]
    passed: bool


class OutputFormat(str, Enum):
    """Data formats for command output."""

    CSV = "csv"
    JSON = "json"


class Command(str, Enum):
    """CLI subcommands."""

    COUNT = "count"
    AVERAGE = "average"
    MAINTERM = "mainterm"
    VERIFY = "verify"
    VOLUME = "volume"


class RunConfig(BaseModel):
    """Settings for one CLI run."""

    command: Command
    group_file: Optional[Path] = None
    spectral_file: Optional[Path] = None
    n: int = Field(default=1, ge=1)
    t_grid: list[float] = Field(default_factory=list)
    alpha: float = Field(default=0.05, gt=0, le=0.5)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    wave: WaveConfig = Field(default_factory=WaveConfig)
    output: Optional[Path] = None
    format: OutputFormat = OutputFormat.CSV
    workers: int = Field(default=1, ge=1)

    @field_validator("t_grid")
    @classmethod
    def _ascending(cls, v: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("T grid must be strictly ascending")
        if any(t <= 0 for t in v):
            raise ValueError("T values must be positive")
        return v
