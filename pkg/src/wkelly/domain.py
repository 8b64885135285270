"""Validated value types shared across the package.

All containers are frozen dataclasses wrapping read-only numpy arrays, so a
constructed instance can be passed between threads without copying.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, NegativeWeight, SumMismatch, ValidationError

WEIGHT_NEG_TOL = 1e-12
WEIGHT_SUM_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class Unbounded(enum.Enum):
    """Explicit infinite value of an extended-real result.

    Kept as an enum so that accidental arithmetic with a float raises
    ``TypeError`` instead of silently propagating ``inf``/``nan``.
    """

    BELOW = "-inf"
    ABOVE = "+inf"

    def __float__(self) -> float:
        return -math.inf if self is Unbounded.BELOW else math.inf


ExtReal = Union[float, Unbounded]


def ext_to_float(x: ExtReal) -> float:
    return float(x)


def ext_from_float(x: float) -> ExtReal:
    if x == -math.inf:
        return Unbounded.BELOW
    if x == math.inf:
        return Unbounded.ABOVE
    return float(x)


class ReturnKind(enum.Enum):
    LOG = "log"
    SIMPLE = "simple"


class Norm(enum.Enum):
    """Ground norm on log-return space. The dual pairing is fixed."""

    L2 = "l2"
    L1 = "l1"
    LINF = "linf"

    @property
    def dual(self) -> "Norm":
        return _DUAL[self]

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self is Norm.L2:
            return float(np.sqrt(np.dot(x, x)))
        if self is Norm.L1:
            return float(np.abs(x).sum())
        return float(np.abs(x).max()) if x.size else 0.0

    def rowwise(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self is Norm.L2:
            return np.sqrt(np.einsum("ij,ij->i", x, x))
        if self is Norm.L1:
            return np.abs(x).sum(axis=1)
        return np.abs(x).max(axis=1)

    @classmethod
    def parse(cls, s: "str | Norm") -> "Norm":
        if isinstance(s, Norm):
            return s
        try:
            return cls(s.lower())
        except ValueError:
            raise ValidationError(f"unknown norm {s!r}; expected one of l2, l1, linf") from None


_DUAL = {Norm.L2: Norm.L2, Norm.L1: Norm.LINF, Norm.LINF: Norm.L1}


@dataclass(frozen=True)
class ReturnsMatrix:
    """N x n per-period returns; rows are the atoms of the empirical law."""

    values: np.ndarray
    kind: ReturnKind
    asset_labels: tuple = ()

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValidationError(f"returns must be a non-empty N x n matrix, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("returns contain non-finite entries")
        kind = ReturnKind(self.kind)
        if kind is ReturnKind.SIMPLE and np.any(vals <= -1.0):
            raise DomainError("simple returns must exceed -1")
        labels = tuple(self.asset_labels) if len(self.asset_labels) else tuple(
            f"A{i}" for i in range(vals.shape[1]))
        if len(labels) != vals.shape[1]:
            raise ValidationError(f"{len(labels)} labels for {vals.shape[1]} assets")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "asset_labels", labels)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_assets(self) -> int:
        return self.values.shape[1]

    def subset(self, rows=None, cols=None) -> "ReturnsMatrix":
        v = self.values
        labels = self.asset_labels
        if rows is not None:
            v = v[rows]
        if cols is not None:
            v = v[:, cols]
            labels = tuple(labels[c] for c in cols)
        return ReturnsMatrix(v, self.kind, labels)

    @classmethod
    def log(cls, values, labels: Sequence[str] = ()) -> "ReturnsMatrix":
        return cls(values, ReturnKind.LOG, tuple(labels))

    @classmethod
    def simple(cls, values, labels: Sequence[str] = ()) -> "ReturnsMatrix":
        return cls(values, ReturnKind.SIMPLE, tuple(labels))


@dataclass(frozen=True)
class SimplexWeights:
    """Long-only, fully invested portfolio fractions."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w))

    def __len__(self):
        return self.w.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.w if dtype is None else self.w.astype(dtype)

    def tolist(self) -> list:
        return self.w.tolist()


def make_weights(raw) -> SimplexWeights:
    """Validate a weight vector. Never renormalizes."""
    w = np.asarray(raw, dtype=float).ravel()
    if w.size < 1:
        raise ValidationError("weight vector must have length >= 1")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    i = int(np.argmin(w))
    if w[i] < -WEIGHT_NEG_TOL:
        raise NegativeWeight(f"weight {i} is {w[i]:.3g} < 0")
    total = float(w.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise SumMismatch(f"weights sum to {total:.12g}, not 1")
    return SimplexWeights(np.clip(w, 0.0, None))


def uniform_weights(n: int) -> SimplexWeights:
    return SimplexWeights(np.full(n, 1.0 / n))


def convert_returns(m: ReturnsMatrix, target_kind: ReturnKind | str) -> ReturnsMatrix:
    """Elementwise ``r = ln(1 + R)`` or ``R = exp(r) - 1``."""
    target = ReturnKind(target_kind)
    if target is m.kind:
        return m
    if target is ReturnKind.LOG:
        if np.any(m.values <= -1.0):
            raise DomainError("simple return <= -1 has no log-return")
        vals = np.log1p(m.values)
    else:
        vals = np.expm1(m.values)
    return ReturnsMatrix(vals, target, m.asset_labels)


@dataclass(frozen=True)
class BallSpec:
    """Wasserstein ball of order ``p`` and radius ``epsilon`` around the sample law."""

    p: float = 2.0
    epsilon: float = 0.0
    norm: Norm = Norm.L2

    def __post_init__(self):
        p = float(self.p)
        eps = float(self.epsilon)
        if not math.isfinite(p) or p < 1.0:
            from .errors import UnsupportedOrder
            raise UnsupportedOrder(f"Wasserstein order p={self.p} must be >= 1")
        if not math.isfinite(eps) or eps < 0.0:
            raise ValidationError(f"radius epsilon={self.epsilon} must be finite and >= 0")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "norm", Norm.parse(self.norm))

    @property
    def dual_norm(self) -> Norm:
        return self.norm.dual

    @property
    def q(self) -> float:
        """Hoelder conjugate exponent; infinite for p = 1."""
        if self.p == 1.0:
            return math.inf
        return self.p / (self.p - 1.0)

    @property
    def power_coefficient(self) -> float:
        """``(p-1) p^{-p/(p-1)}``, the coefficient of the perspective power term."""
        if self.p == 1.0:
            return 0.0
        return (self.p - 1.0) * self.p ** (-self.q)


class Status(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverSettings:
    tol_rel: float = 1e-7
    tol_feas: float = 1e-8
    max_iter: int = 10000
    floor_w: float = 1e-12

    def __post_init__(self):
        for name in ("tol_rel", "tol_feas", "floor_w"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be positive")
        if not self.tol_rel < 1:
            raise ValidationError("tol_rel must be < 1")


@dataclass(frozen=True)
class RobustSolution:
    weights: SimplexWeights
    lam: float
    v: np.ndarray
    objective: float
    status: Status
    duality_gap_estimate: float
    ball: BallSpec | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen(self.v))
