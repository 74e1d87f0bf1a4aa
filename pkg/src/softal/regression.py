"""Least-squares linear regression with intercept and bootstrap committees."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Ridge used to refit a bootstrap resample whose design is rank-deficient.
FALLBACK_RIDGE = 1e-6
DEFAULT_COMMITTEE_SIZE = 10


class RankDeficientError(np.linalg.LinAlgError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


def design(X: np.ndarray) -> np.ndarray:
    """Prepend the intercept column of ones."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([np.ones((X.shape[0], 1)), X])


@dataclass(frozen=True)
class LinearModel:
    """``f(x) = beta[0] + beta[1:] @ x``."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.array(self.beta, dtype=float).reshape(-1)
        if b.shape[0] < 2:
            raise ValueError("a linear model needs an intercept and at least one slope")
        if not np.all(np.isfinite(b)):
            raise ValueError("non-finite coefficients")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @property
    def feature_dim(self) -> int:
        return self.beta.shape[0] - 1

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Vectorized prediction for an ``(n, d)`` matrix."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.feature_dim:
            raise ValueError(f"expected {self.feature_dim} features, got {X.shape[1]}")
        return self.beta[0] + X @ self.beta[1:]

    def to_row(self) -> tuple[list[str], list[float]]:
        header = ["intercept"] + [f"b{j}" for j in range(1, self.feature_dim + 1)]
        return header, [float(v) for v in self.beta]


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in regression inputs")
    return X, y


def fit_ols(X, y, ridge: float = 0.0) -> LinearModel:
    """Least squares with an unpenalized intercept.

    Minimizes ``sum((y - X~ beta)**2) + ridge * ||beta[1:]||**2``. The ridge
    term is handled by augmenting the design with ``sqrt(ridge) * I`` rows so
    that a single SVD-based solve covers both cases.
    """
    X, y = _check_xy(X, y)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    n, d = X.shape
    A = design(X)
    if ridge > 0:
        pen = np.hstack([np.zeros((d, 1)), np.sqrt(ridge) * np.eye(d)])
        A = np.vstack([A, pen])
        y = np.concatenate([y, np.zeros(d)])
    elif n < d + 1:
        raise RankDeficientError(
            f"{n} observations cannot determine {d + 1} coefficients", np.inf
        )
    beta, _, rank, sv = np.linalg.lstsq(A, y, rcond=None)
    if rank < d + 1:
        cond = np.inf if sv[-1] == 0 else float(sv[0] / sv[-1])
        raise RankDeficientError(
            f"design has rank {rank} < {d + 1} (condition estimate {cond:.3g})", cond
        )
    return LinearModel(beta)


def predict(m: LinearModel, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != m.feature_dim:
        raise ValueError(f"expected {m.feature_dim} features, got {x.shape[0]}")
    return float(m.beta[0] + x @ m.beta[1:])


def loss(m: LinearModel, X, y) -> float:
    """Mean squared error over the dataset."""
    X, y = _check_xy(X, y)
    if y.shape[0] == 0:
        raise ValueError("loss of an empty dataset is undefined")
    r = y - m.predict(X)
    return float(r @ r / y.shape[0])


def rmse(m: LinearModel, X, y) -> float:
    return float(np.sqrt(loss(m, X, y)))


@dataclass(frozen=True)
class Committee:
    members: tuple[LinearModel, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 1:
            raise ValueError("empty committee")
        dims = {m.feature_dim for m in members}
        if len(dims) != 1:
            raise ValueError(f"members disagree on feature_dim: {sorted(dims)}")
        object.__setattr__(self, "members", members)
        betas = np.stack([m.beta for m in members])
        betas.setflags(write=False)
        object.__setattr__(self, "_betas", betas)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def feature_dim(self) -> int:
        return self.members[0].feature_dim

    @property
    def betas(self) -> np.ndarray:
        return self._betas

    def predict(self, X) -> np.ndarray:
        """Member predictions, shape ``(K, n)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.feature_dim:
            raise ValueError(f"expected {self.feature_dim} features, got {X.shape[1]}")
        return self._betas[:, :1] + self._betas[:, 1:] @ X.T


def bootstrap_committee(X, y, K: int = DEFAULT_COMMITTEE_SIZE, ridge: float = 0.0,
                        rng: np.random.Generator | None = None) -> Committee:
    """Fit ``K`` models on bootstrap resamples of ``(X, y)``.

    A resample that leaves the design rank-deficient is refit with
    :data:`FALLBACK_RIDGE` rather than redrawn, so the committee always has
    exactly ``K`` members and consumes a fixed amount of randomness.
    """
    X, y = _check_xy(X, y)
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"bootstrap needs n >= 2, got {n}")
    if K < 2:
        raise ValueError(f"committee size must be >= 2, got {K}")
    if rng is None:
        rng = np.random.default_rng()
    members = []
    for _ in range(K):
        idx = rng.integers(0, n, size=n)
        try:
            members.append(fit_ols(X[idx], y[idx], ridge))
        except RankDeficientError:
            members.append(fit_ols(X[idx], y[idx], max(ridge, FALLBACK_RIDGE)))
    return Committee(tuple(members))
