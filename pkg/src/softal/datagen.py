"""Synthetic correlated process data standing in for a plant simulator.

Four AR(1) latent drivers feed sixteen measured variables through a
saturating linear mixing plus quadratic and interaction terms, and a
nonlinear function of the latents gives the quality variable ``y``. Column
names follow the monitored XMEAS variables of the Tennessee Eastman benchmark
so that exported files are interchangeable with real simulator output.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .dataset import RawDataset

TEP_XMEAS_IDS = (1, 2, 3, 4, 5, 6, 9, 10, 11, 13, 14, 16, 18, 19, 21, 22)
TEP_FEATURE_NAMES = tuple(f"XMEAS_{i}" for i in TEP_XMEAS_IDS)
RESPONSE_NAME = "y"


def feature_names(p: int) -> tuple[str, ...]:
    if p == len(TEP_FEATURE_NAMES):
        return TEP_FEATURE_NAMES
    return tuple(f"x{j + 1}" for j in range(p))


@dataclass(frozen=True)
class ProcessSpec:
    latent_dim: int = 4
    observed_dim: int = 16
    ar_coefficient: float = 0.9
    saturation: float = 0.5
    quadratic_scale: float = 0.1
    interaction_scale: float = 0.1
    noise_std: float = 0.2
    response_noise_std: float = 1.0
    response_nonlinearity: float = 0.2
    structure_seed: int = 2024
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1 or self.observed_dim < 1:
            raise ValueError("dimensions must be positive")
        if not 0.0 <= self.ar_coefficient < 1.0:
            raise ValueError("ar_coefficient must lie in [0, 1) for a stationary process")
        if self.noise_std < 0 or self.response_noise_std < 0:
            raise ValueError("noise levels must be nonnegative")
        if self.saturation < 0 or self.quadratic_scale < 0 or self.interaction_scale < 0:
            raise ValueError("nonlinearity scales must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown process spec fields: {sorted(unknown)}")
        return cls(**d)

    def with_seed(self, seed: int) -> "ProcessSpec":
        return replace(self, seed=seed)

    def structure(self) -> "ProcessStructure":
        return ProcessStructure.from_spec(self)


@dataclass(frozen=True)
class ProcessStructure:
    """The fixed plant: mixing coefficients and the response map.

    Depends only on ``structure_seed`` and the dimensions, so different runs
    of the same plant share it.
    """

    mixing: np.ndarray          # (p, q)
    saturation: float
    quad_index: np.ndarray      # (p,) latent squared in each variable
    quad_coef: np.ndarray       # (p,)
    inter_index: np.ndarray     # (p, 2) latent pair multiplied in each variable
    inter_coef: np.ndarray      # (p,)
    response_weights: np.ndarray  # (q,)
    response_nonlinearity: float

    @classmethod
    def from_spec(cls, spec: ProcessSpec) -> "ProcessStructure":
        rng = np.random.default_rng(spec.structure_seed)
        p, q = spec.observed_dim, spec.latent_dim
        mixing = rng.normal(size=(p, q)) / np.sqrt(q)
        quad_index = rng.integers(0, q, size=p)
        signs = rng.choice([-1.0, 1.0], size=(2, p))
        quad_coef = spec.quadratic_scale * signs[0] * rng.uniform(0.5, 1.0, size=p)
        if q >= 2:
            inter_index = np.array([rng.choice(q, size=2, replace=False) for _ in range(p)])
        else:
            inter_index = np.zeros((p, 2), dtype=int)
        inter_coef = spec.interaction_scale * signs[1] * rng.uniform(0.5, 1.0, size=p)
        response_weights = rng.normal(size=q)
        response_weights /= np.linalg.norm(response_weights)
        return cls(mixing, spec.saturation, quad_index, quad_coef, inter_index, inter_coef,
                   response_weights, spec.response_nonlinearity)

    def observe(self, T: np.ndarray) -> np.ndarray:
        """Noise-free measured variables for latent rows ``T``."""
        X = T @ self.mixing.T
        if self.saturation > 0:
            # sensor/actuator saturation: slope 1 at the origin, bounded by 1/saturation
            X = np.tanh(self.saturation * X) / self.saturation
        X += self.quad_coef * (T[:, self.quad_index] ** 2 - 1.0)
        X += self.inter_coef * T[:, self.inter_index[:, 0]] * T[:, self.inter_index[:, 1]]
        return X

    def response(self, T: np.ndarray) -> np.ndarray:
        """Smooth nonlinear quality map of the latents."""
        s = T @ self.response_weights
        return s + self.response_nonlinearity * np.tanh(T[:, 0] * T[:, -1])


def latent_series(spec: ProcessSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance stationary AR(1) latents, started from the stationary law."""
    phi = spec.ar_coefficient
    eta = rng.standard_normal(size=(n, spec.latent_dim))
    T = np.empty_like(eta)
    T[0] = eta[0]
    scale = np.sqrt(1.0 - phi * phi)
    for j in range(1, n):
        T[j] = phi * T[j - 1] + scale * eta[j]
    return T


def generate(spec: ProcessSpec, n: int, return_latents: bool = False):
    """Draw ``n`` consecutive observations (one per sampling interval)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    structure = spec.structure()
    rng = np.random.default_rng(spec.seed)
    T = latent_series(spec, n, rng)
    X = structure.observe(T) + spec.noise_std * rng.standard_normal(size=(n, spec.observed_dim))
    y = structure.response(T) + spec.response_noise_std * rng.standard_normal(size=n)
    data = RawDataset(X, feature_names(spec.observed_dim), y)
    return (data, T) if return_latents else data


def split(data: RawDataset, fractions=(0.5, 0.4, 0.1), contiguous: bool = True,
          rng: Optional[np.random.Generator] = None):
    """Split into (historical, stream, test); the historical part loses its labels.

    Contiguous splits keep time order: history first, then the stream, then
    the test block. Otherwise rows are assigned at random and each part stays
    sorted by original index.
    """
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f <= 0 for f in fr) or sum(fr) > 1.0 + 1e-12:
        raise ValueError(f"need three positive fractions summing to <= 1, got {fractions}")
    n = data.n
    sizes = [int(round(f * n)) for f in fr]
    if sum(sizes) > n:
        sizes[-1] = n - sizes[0] - sizes[1]
    if min(sizes) < 1:
        raise ValueError(f"split sizes {sizes} leave an empty part for n = {n}")
    if contiguous:
        order = np.arange(n)
    else:
        order = (rng or np.random.default_rng()).permutation(n)
    bounds = np.cumsum([0] + sizes)
    parts = [np.sort(order[bounds[i]:bounds[i + 1]]) for i in range(3)]
    history = data.take(parts[0]).unlabeled()
    return history, data.take(parts[1]), data.take(parts[2])
