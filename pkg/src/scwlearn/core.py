"""Domain types shared by every learner: examples, Gaussian state, hyperparameters."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional

import numpy as np


class SCWError(Exception):
    """Base class for errors raised by this package."""


class InputError(SCWError, ValueError):
    pass


class DegenerateInputError(InputError):
    """Raised for a zero feature vector where a positive quadratic form is needed."""


class DomainError(SCWError, ValueError):
    pass


class NumericError(SCWError, ArithmeticError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class ConfigError(SCWError, ValueError):
    pass


class LearnerKind(str, enum.Enum):
    PERCEPTRON = "perceptron"
    PA = "pa"
    PAI = "pa1"
    PAII = "pa2"
    CW = "cw"
    AROW = "arow"
    SCWI = "scw1"
    SCWII = "scw2"

    @property
    def second_order(self) -> bool:
        return self in (LearnerKind.CW, LearnerKind.AROW, LearnerKind.SCWI, LearnerKind.SCWII)

    @classmethod
    def parse(cls, name: str) -> "LearnerKind":
        key = name.strip().lower().replace("-", "").replace("_", "")
        aliases = {"pai": "pa1", "paii": "pa2", "scwi": "scw1", "scwii": "scw2"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise ConfigError(f"unknown algorithm {name!r} (known: {known})") from None


class CovarianceMode(str, enum.Enum):
    FULL = "full"
    DIAGONAL = "diag"

    @classmethod
    def default_for(cls, dim: int) -> "CovarianceMode":
        return cls.FULL if dim <= 1024 else cls.DIAGONAL


@dataclass(frozen=True)
class Example:
    """A sparse feature vector with a binary label.

    ``indices`` are 0-based, strictly increasing; ``values`` align with them.
    """

    indices: np.ndarray
    values: np.ndarray
    label: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        val = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != val.shape:
            raise InputError("indices and values must be 1-d arrays of equal length")
        if self.label not in (-1, 1):
            raise InputError(f"label must be -1 or +1, got {self.label!r}")
        if idx.size:
            if idx[0] < 0 or np.any(np.diff(idx) <= 0):
                raise InputError("feature indices must be non-negative and strictly increasing")
            if not np.all(np.isfinite(val)):
                raise InputError("feature values must be finite")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "_zero", not np.any(val))
        object.__setattr__(self, "_min_dim", int(idx[-1]) + 1 if idx.size else 0)

    @classmethod
    def from_dict(cls, features: Mapping[int, float], label: int) -> "Example":
        keys = sorted(features)
        return cls(np.array(keys, dtype=np.int64),
                   np.array([features[k] for k in keys], dtype=np.float64), label)

    @classmethod
    def from_dense(cls, x, label: int) -> "Example":
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(x)
        return cls(idx, x[idx], label)

    @property
    def features(self) -> dict:
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}

    @property
    def min_dim(self) -> int:
        return self._min_dim

    def is_zero(self) -> bool:
        return self._zero

    def squared_norm(self) -> float:
        return float(self.values @ self.values)

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return (self.label == other.label
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.label, self.indices.tobytes(), self.values.tobytes()))


@dataclass
class GaussianState:
    """Mean and covariance of the weight distribution.

    In ``DIAGONAL`` mode ``cov`` holds only the diagonal (length ``dim``).
    """

    mean: np.ndarray
    cov: np.ndarray
    mode: CovarianceMode = CovarianceMode.FULL

    @classmethod
    def initial(cls, dim: int, mode: CovarianceMode | str | None = None) -> "GaussianState":
        if dim < 1:
            raise InputError("dimension must be at least 1")
        mode = CovarianceMode(mode) if mode is not None else CovarianceMode.default_for(dim)
        cov = np.eye(dim) if mode is CovarianceMode.FULL else np.ones(dim)
        return cls(np.zeros(dim), cov, mode)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def copy(self) -> "GaussianState":
        return GaussianState(self.mean.copy(), self.cov.copy(), self.mode)

    def cov_matrix(self) -> np.ndarray:
        return self.cov if self.mode is CovarianceMode.FULL else np.diag(self.cov)

    def min_eigenvalue(self) -> float:
        if self.mode is CovarianceMode.DIAGONAL:
            return float(self.cov.min())
        return float(np.linalg.eigvalsh(self.cov)[0])

    def check(self) -> None:
        """Raise NumericError unless the mean is finite and the covariance SPD."""
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(self.cov)):
            raise NumericError("non-finite entries in Gaussian state")
        if self.mode is CovarianceMode.FULL and not np.array_equal(self.cov, self.cov.T):
            raise NumericError("covariance lost symmetry")
        if self.min_eigenvalue() <= 0:
            raise NumericError("covariance is not positive definite")


@dataclass(frozen=True)
class HyperParams:
    """Trade-off constant ``c``, confidence ``eta`` and AROW regulariser ``r``.

    ``phi``, ``psi`` and ``zeta`` are derived from ``eta``; the instance is frozen,
    so changing ``eta`` means building a new one (``dataclasses.replace``).
    """

    c: float = 1.0
    eta: float = 0.9
    r: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"C must be positive, got {self.c}")
        if not self.r > 0:
            raise ConfigError(f"r must be positive, got {self.r}")
        if not 0.5 < self.eta < 1.0:
            raise ConfigError(f"eta must lie in (0.5, 1), got {self.eta}")

    @cached_property
    def phi(self) -> float:
        from .numeric import inv_norm_cdf
        return inv_norm_cdf(self.eta)

    @cached_property
    def psi(self) -> float:
        return 1.0 + self.phi ** 2 / 2.0

    @cached_property
    def zeta(self) -> float:
        return 1.0 + self.phi ** 2


@dataclass(frozen=True)
class UpdateCoefficients:
    alpha: float
    beta: float
    v: float
    m: float
    u: float
    n: Optional[float] = None
    gamma: Optional[float] = None


@dataclass(frozen=True)
class StepOutcome:
    predicted: int
    mistake: bool
    updated: bool


def dot(mean: np.ndarray, x: Example) -> float:
    if x.indices.size == mean.size:
        return float(mean @ x.values)
    return float(mean[x.indices] @ x.values)


def predict(state: GaussianState, x: Example) -> int:
    """Sign of the mean margin, with sgn(0) taken as +1."""
    if x.min_dim > state.dim:
        raise InputError(f"feature index {x.min_dim - 1} exceeds dimension {state.dim}")
    score = dot(state.mean, x)
    if not math.isfinite(score):
        raise NumericError("non-finite prediction score")
    return 1 if score >= 0 else -1
