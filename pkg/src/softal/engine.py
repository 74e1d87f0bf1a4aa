"""The online active-learning loop.

Given a historical unlabeled pool, a (possibly empty) labeled set and a
stream, the engine fits a linear soft sensor on encoded features, calibrates
a control limit on the pool's criterion scores, then walks the stream and
buys the label of every point whose score reaches the limit, refitting the
model and recalibrating the limit after each purchase.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .criteria import (DEFAULT_COV_REG, CriterionKind, CriterionState,
                       fit_gaussian_summary, score, score_many)
from .dataset import RawDataset, Standardizer, StreamSource, fit_standardizer, write_table
from .oae import OAEModel
from .regression import (DEFAULT_COMMITTEE_SIZE, LinearModel, bootstrap_committee,
                         fit_ols, rmse)
from .threshold import DEFAULT_ALPHA, ControlLimit, solve_ucl

log = logging.getLogger(__name__)


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    criterion: CriterionKind = CriterionKind.RANDOM
    alpha: float = DEFAULT_ALPHA
    budget: int = 100
    committee_size: int = DEFAULT_COMMITTEE_SIZE
    ridge: float = 0.0
    cov_reg: float = DEFAULT_COV_REG
    initial_labels: Optional[int] = None   # None -> feature_dim + 2
    seed: int = 0
    use_oae: bool = True

    def __post_init__(self):
        object.__setattr__(self, "criterion", CriterionKind.parse(self.criterion))
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.committee_size < 2:
            raise ValueError("committee_size must be >= 2")

    def n_initial(self, feature_dim: int) -> int:
        n0 = feature_dim + 2 if self.initial_labels is None else self.initial_labels
        if n0 < feature_dim + 2:
            raise ValueError(
                f"initial_labels={n0} is below feature_dim + 2 = {feature_dim + 2}"
            )
        return n0


@dataclass(frozen=True)
class StepRecord:
    step: int
    index: int
    score: float
    ucl: float
    queried: bool


@dataclass
class RunTrace:
    steps: list[StepRecord] = field(default_factory=list)
    curve: list[tuple[int, float]] = field(default_factory=list)
    initial_model: Optional[LinearModel] = None
    initial_limit: Optional[ControlLimit] = None
    model: Optional[LinearModel] = None
    n_initial: int = 0
    budget: int = 0

    @property
    def n_queried(self) -> int:
        return sum(r.queried for r in self.steps)

    @property
    def queried_indices(self) -> list[int]:
        return [r.index for r in self.steps if r.queried]

    def rmse_by_acquisition(self, budget: Optional[int] = None) -> np.ndarray:
        """Test RMSE after 0..budget acquisitions, carrying the last value
        forward if the stream ran out first."""
        budget = self.budget if budget is None else budget
        out = np.empty(budget + 1)
        vals = dict(self.curve)
        last = vals[0]
        for c in range(budget + 1):
            last = vals.get(c, last)
            out[c] = last
        return out

    def write_trace(self, path) -> None:
        write_table(path, ["step", "index", "score", "ucl", "queried"],
                    ([r.step, r.index, r.score, r.ucl, int(r.queried)] for r in self.steps))

    def write_curve(self, path) -> None:
        write_table(path, ["n_labels", "test_rmse"], ([c, v] for c, v in self.curve))

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        self.write_trace(out_dir / "trace.csv")
        self.write_curve(out_dir / "curve.csv")


def seed_initial_labels(S: StreamSource, n0: int,
                        rng: Optional[np.random.Generator] = None) -> RawDataset:
    """Buy the labels of the next ``n0`` stream points unconditionally.

    ``rng`` is accepted for interface symmetry with other samplers; taking
    consecutive points needs no randomness.
    """
    if n0 < 1:
        raise ValueError("need at least one initial label")
    if S.remaining < n0:
        raise EngineError(f"stream has {S.remaining} points left, {n0} initial labels needed")
    X, y = [], []
    for _ in range(n0):
        i, x = S.next()
        X.append(x)
        y.append(S.query(i))
    p = len(X[0])
    return RawDataset(np.array(X), [f"x{j + 1}" for j in range(p)], np.array(y))


def make_encoder(standardizer: Standardizer,
                 oae: Optional[OAEModel]) -> Callable[[np.ndarray], np.ndarray]:
    if oae is None:
        return standardizer.transform
    return lambda X: oae.encode(standardizer.transform(X))


class _Learner:
    """Model, criterion state and control limit for the current labeled set."""

    def __init__(self, cfg: EngineConfig, Z_hist: np.ndarray, rng_boot, rng_score):
        self.cfg = cfg
        self.Z_hist = Z_hist
        self.rng_boot = rng_boot
        self.rng_score = rng_score
        self.model: Optional[LinearModel] = None
        self.state: Optional[CriterionState] = None
        self.limit: Optional[ControlLimit] = None

    def refit(self, ZL: np.ndarray, yL: np.ndarray) -> None:
        cfg = self.cfg
        kind = cfg.criterion
        self.model = fit_ols(ZL, yL, cfg.ridge)
        state = CriterionState(model=self.model)
        if kind is CriterionKind.RANDOM:
            state.rng = self.rng_score
        elif kind is CriterionKind.HOTELLING_T2:
            state.summary = fit_gaussian_summary(ZL, cfg.cov_reg)
        else:
            state.committee = bootstrap_committee(
                ZL, yL, cfg.committee_size, cfg.ridge, self.rng_boot
            )
        self.state = state
        hist_scores = score_many(kind, state, self.Z_hist)
        self.limit = solve_ucl(hist_scores, alpha=cfg.alpha, kind=kind)

    def score(self, z: np.ndarray) -> float:
        return score(self.cfg.criterion, self.state, z)


def run(H: RawDataset, L: Optional[RawDataset], S: StreamSource, test: RawDataset,
        oae: Optional[OAEModel], cfg: EngineConfig,
        standardizer: Optional[Standardizer] = None) -> RunTrace:
    """Run the online loop over the whole stream.

    Features are standardized with statistics of ``H`` (unless a
    ``standardizer`` is supplied) and, when ``cfg.use_oae``, passed through the
    frozen encoder. If ``L`` is missing or too small, the first stream points
    are labeled unconditionally until the initial set is large enough.

    Queries stop once ``cfg.budget`` labels are bought; the remaining stream
    points are still scored and recorded as discarded.
    """
    if cfg.use_oae != (oae is not None):
        raise ValueError("an OAE model must be given exactly when use_oae is set")
    if test.response is None:
        raise ValueError("test data must be labeled")
    p = H.p
    for name, d in (("stream", S.features.shape[1]), ("test", test.p)):
        if d != p:
            raise ValueError(f"{name} has {d} features, history has {p}")
    if L is not None and L.p != p:
        raise ValueError(f"labeled set has {L.p} features, history has {p}")

    standardizer = standardizer or fit_standardizer(H)
    encode = make_encoder(standardizer, oae)
    feature_dim = oae.architecture.code_dim if oae is not None else p
    n0 = cfg.n_initial(feature_dim)

    boot_seq, score_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    Z_hist = encode(H.features)
    learner = _Learner(cfg, Z_hist, np.random.default_rng(boot_seq),
                       np.random.default_rng(score_seq))

    if L is None or L.n < n0:
        have = 0 if L is None else L.n
        extra = seed_initial_labels(S, n0 - have)
        X0 = extra.features if L is None else np.vstack([L.features, extra.features])
        y0 = extra.response if L is None else np.concatenate([L.response, extra.response])
    else:
        X0, y0 = L.features, L.response
    ZL = [row for row in encode(X0)]
    yL = [float(v) for v in y0]

    Z_test = encode(test.features)
    try:
        learner.refit(np.array(ZL), np.array(yL))
    except np.linalg.LinAlgError as exc:
        raise EngineError(f"initial fit failed: {exc}") from exc

    trace = RunTrace(n_initial=len(yL), budget=cfg.budget, initial_model=learner.model,
                     initial_limit=learner.limit)
    trace.curve.append((0, rmse(learner.model, Z_test, test.response)))
    c = 0
    step = 0
    for i, x in S:
        z = encode(x)
        j = learner.score(z)
        ucl = learner.limit.ucl
        query = c < cfg.budget and j >= ucl
        trace.steps.append(StepRecord(step, i, j, ucl, query))
        step += 1
        if not query:
            continue
        ZL.append(z)
        yL.append(S.query(i))
        c += 1
        try:
            learner.refit(np.array(ZL), np.array(yL))
        except np.linalg.LinAlgError as exc:
            raise EngineError(f"refit failed after stream index {i}: {exc}") from exc
        trace.curve.append((c, rmse(learner.model, Z_test, test.response)))

    trace.model = learner.model
    log.debug("%s: %d labels bought over %d stream points", cfg.criterion.value, c, step)
    return trace
