"""Informativeness scores for streamed observations.

Each criterion has a scalar form used by the stream loop and a vectorized
``*_many`` form used to score the historical pool when calibrating the
threshold. Both compute the same quantity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .regression import Committee, LinearModel

DEFAULT_COV_REG = 1e-6


class CriterionKind(enum.Enum):
    RANDOM = "rnd"
    HOTELLING_T2 = "hot"
    QBC_AMBIGUITY = "qbc"
    EXPECTED_MODEL_CHANGE = "emc"

    @classmethod
    def parse(cls, tag: "str | CriterionKind") -> "CriterionKind":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown criterion {tag!r}; expected one of {valid}") from None

    @property
    def needs_committee(self) -> bool:
        return self in (CriterionKind.QBC_AMBIGUITY, CriterionKind.EXPECTED_MODEL_CHANGE)


@dataclass(frozen=True)
class GaussianSummary:
    mean: np.ndarray
    covariance: np.ndarray
    inverse_covariance: np.ndarray
    regularization: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian_summary(X, reg: float = DEFAULT_COV_REG) -> GaussianSummary:
    """Sample mean and covariance (``ddof=1``) with ``reg`` added to the diagonal
    before inversion."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows for a covariance, got {n}")
    if reg < 0:
        raise ValueError("reg must be nonnegative")
    mean = X.mean(axis=0)
    C = X - mean
    S = C.T @ C / (n - 1)
    S = 0.5 * (S + S.T)
    try:
        L = np.linalg.cholesky(S + reg * np.eye(d))
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "covariance plus regularization is not positive definite"
        ) from None
    Linv = np.linalg.solve(L, np.eye(d))
    inv = Linv.T @ Linv
    return GaussianSummary(mean, S, 0.5 * (inv + inv.T), float(reg))


def _check_dim(x: np.ndarray, d: int) -> None:
    if x.shape[-1] != d:
        raise ValueError(f"expected {d} features, got {x.shape[-1]}")


def hotelling_t2(g: GaussianSummary, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dim(x, g.dim)
    c = x - g.mean
    return max(float(c @ g.inverse_covariance @ c), 0.0)


def hotelling_t2_many(g: GaussianSummary, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_dim(X, g.dim)
    C = X - g.mean
    return np.maximum(np.einsum("ij,jk,ik->i", C, g.inverse_covariance, C), 0.0)


def qbc_ambiguity(c: Committee, x) -> float:
    """Population variance (divisor K) of the member predictions at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(qbc_ambiguity_many(c, x[None, :])[0])


def qbc_ambiguity_many(c: Committee, X) -> np.ndarray:
    preds = c.predict(X)
    return preds.var(axis=0)


def emc_score(c: Committee, m: LinearModel, x) -> float:
    """Mean norm of the committee-implied loss gradients at ``x``.

    Each member ``f_i`` stands in for the unknown label, giving the gradient
    ``2 (f_i(x) - f(x)) x~`` with ``x~ = (1, x)``. The constant 2 does not
    change rankings or quantiles and is dropped.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(emc_score_many(c, m, x[None, :])[0])


def emc_score_many(c: Committee, m: LinearModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if c.feature_dim != m.feature_dim:
        raise ValueError("committee and model feature dimensions differ")
    diff = np.abs(c.predict(X) - m.predict(X)).mean(axis=0)
    norms = np.sqrt(1.0 + np.einsum("ij,ij->i", X, X))
    return norms * diff


@dataclass
class CriterionState:
    """Whatever the active criterion needs to score a point.

    Only the Random criterion mutates its state (the generator).
    """

    summary: Optional[GaussianSummary] = None
    committee: Optional[Committee] = None
    model: Optional[LinearModel] = None
    rng: Optional[np.random.Generator] = None


class MissingStateError(ValueError):
    pass


def _require(state: CriterionState, kind: CriterionKind, *names: str):
    missing = [n for n in names if getattr(state, n) is None]
    if missing:
        raise MissingStateError(f"criterion {kind.value!r} requires {', '.join(missing)}")
    return [getattr(state, n) for n in names]


def score(kind: CriterionKind, state: CriterionState, x) -> float:
    kind = CriterionKind.parse(kind)
    if kind is CriterionKind.RANDOM:
        (rng,) = _require(state, kind, "rng")
        return float(rng.random())
    if kind is CriterionKind.HOTELLING_T2:
        (g,) = _require(state, kind, "summary")
        return hotelling_t2(g, x)
    if kind is CriterionKind.QBC_AMBIGUITY:
        (c,) = _require(state, kind, "committee")
        return qbc_ambiguity(c, x)
    c, m = _require(state, kind, "committee", "model")
    return emc_score(c, m, x)


def score_many(kind: CriterionKind, state: CriterionState, X) -> np.ndarray:
    """Vectorized :func:`score`; Random draws one uniform per row, in row order."""
    kind = CriterionKind.parse(kind)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if kind is CriterionKind.RANDOM:
        (rng,) = _require(state, kind, "rng")
        return rng.random(X.shape[0])
    if kind is CriterionKind.HOTELLING_T2:
        (g,) = _require(state, kind, "summary")
        return hotelling_t2_many(g, X)
    if kind is CriterionKind.QBC_AMBIGUITY:
        (c,) = _require(state, kind, "committee")
        return qbc_ambiguity_many(c, X)
    c, m = _require(state, kind, "committee", "model")
    return emc_score_many(c, m, X)
