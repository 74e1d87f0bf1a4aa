"""Multi-run benchmark comparing sampling criteria and feature spaces.

Each run ``r`` generates (or loads) one dataset, splits it into history,
stream and test blocks, trains one autoencoder on the history and then runs
every configured method on the same split with the same seed. Learning
curves are indexed by the number of labels bought and averaged over runs.
"""
from __future__ import annotations

import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .criteria import DEFAULT_COV_REG, CriterionKind
from .datagen import ProcessSpec, generate, split
from .dataset import StreamSource, fit_standardizer, load_csv, write_table
from .engine import EngineConfig, RunTrace, run
from .oae import DEFAULT_LAMBDA, DEFAULT_LAYERS, OAEArchitecture, TrainConfig, train
from .regression import DEFAULT_COMMITTEE_SIZE
from .threshold import DEFAULT_ALPHA

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)


class BenchmarkError(RuntimeError):
    pass


@dataclass(frozen=True)
class Method:
    criterion: CriterionKind
    use_oae: bool = True

    def __post_init__(self):
        object.__setattr__(self, "criterion", CriterionKind.parse(self.criterion))

    @property
    def label(self) -> str:
        return self.criterion.value if self.use_oae else f"{self.criterion.value}-raw"

    @classmethod
    def parse(cls, label: str) -> "Method":
        """``"qbc"`` uses encoded features, ``"qbc-raw"`` the standardized inputs."""
        label = label.strip().lower()
        if label.endswith("-raw"):
            return cls(CriterionKind.parse(label[:-4]), False)
        if label.endswith("-oae"):
            label = label[:-4]
        return cls(CriterionKind.parse(label), True)


DEFAULT_METHODS = tuple(Method.parse(m) for m in ("rnd-raw", "rnd", "hot", "qbc", "emc"))


@dataclass(frozen=True)
class DataFiles:
    history: str
    stream: str
    test: str
    response_column: str = "y"


@dataclass(frozen=True)
class BenchConfig:
    methods: tuple[Method, ...] = DEFAULT_METHODS
    n_runs: int = 50
    budget: int = 100
    alpha: float = DEFAULT_ALPHA
    base_seed: int = 0
    process: ProcessSpec = field(default_factory=ProcessSpec)
    n_samples: int = 6000
    fractions: tuple[float, float, float] = (0.35, 0.55, 0.10)
    data_files: Optional[DataFiles] = None
    committee_size: int = DEFAULT_COMMITTEE_SIZE
    ridge: float = 0.0
    cov_reg: float = DEFAULT_COV_REG
    layer_sizes: tuple[int, ...] = DEFAULT_LAYERS
    lam: float = DEFAULT_LAMBDA
    train: TrainConfig = field(default_factory=TrainConfig)
    workers: int = 1
    max_failure_rate: float = 0.20

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        object.__setattr__(self, "methods", tuple(
            m if isinstance(m, Method) else Method.parse(m) for m in self.methods
        ))

    @property
    def needs_oae(self) -> bool:
        return any(m.use_oae for m in self.methods)

    def engine_config(self, method: Method, seed: int) -> EngineConfig:
        return EngineConfig(
            criterion=method.criterion, alpha=self.alpha, budget=self.budget,
            committee_size=self.committee_size, ridge=self.ridge, cov_reg=self.cov_reg,
            seed=seed, use_oae=method.use_oae,
        )

    @classmethod
    def from_mapping(cls, cfg: dict) -> "BenchConfig":
        """Build from a parsed TOML/JSON document.

        Recognized tables: ``bench``, ``engine``, ``process``, ``oae`` and
        ``data`` (CSV inputs instead of the generator).
        """
        known = {"bench", "engine", "process", "oae", "data"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown config tables: {sorted(unknown)}")
        kw: dict = {}
        bench = dict(cfg.get("bench", {}))
        if "methods" in bench:
            kw["methods"] = tuple(Method.parse(m) for m in bench.pop("methods"))
        if "fractions" in bench:
            kw["fractions"] = tuple(float(f) for f in bench.pop("fractions"))
        engine = dict(cfg.get("engine", {}))
        kw.update(bench)
        kw.update(engine)
        if "process" in cfg:
            kw["process"] = ProcessSpec.from_dict(cfg["process"])
        oae = dict(cfg.get("oae", {}))
        if "layer_sizes" in oae:
            kw["layer_sizes"] = tuple(int(s) for s in oae.pop("layer_sizes"))
        if "lambda" in oae:
            kw["lam"] = float(oae.pop("lambda"))
        if oae:
            kw["train"] = TrainConfig(**oae)
        if "data" in cfg:
            kw["data_files"] = DataFiles(**cfg["data"])
        valid = {f.name for f in fields(cls)}
        bad = set(kw) - valid
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        doc = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
        return cls.from_mapping(doc)


@dataclass(frozen=True)
class LearningCurve:
    label: str
    n_labels: np.ndarray
    mean_rmse: np.ndarray
    std_rmse: np.ndarray
    n_runs: int


@dataclass
class RunResult:
    run: int
    curves: dict[str, np.ndarray] = field(default_factory=dict)
    traces: dict[str, RunTrace] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    oae_epochs: int = 0


@dataclass
class BenchResult:
    config: BenchConfig
    curves: dict[str, LearningCurve]
    runs: list[RunResult]

    @property
    def failures(self) -> list[tuple[int, str, str]]:
        return [(r.run, label, msg) for r in self.runs for label, msg in r.failures.items()]

    def per_run(self, label: str) -> np.ndarray:
        """``(runs, budget + 1)`` RMSE matrix of successful runs."""
        return np.array([r.curves[label] for r in self.runs if label in r.curves])

    def write_curves(self, path) -> None:
        rows = []
        for label, c in self.curves.items():
            for n, m, s in zip(c.n_labels, c.mean_rmse, c.std_rmse):
                rows.append([label, int(n), float(m), float(s)])
        write_table(path, ["method", "n_labels", "mean_rmse", "std_rmse"], rows)


def _load_split(cfg: BenchConfig, seed: int):
    if cfg.data_files is not None:
        f = cfg.data_files
        H = load_csv(f.history)
        if f.response_column in H.feature_names:
            H = load_csv(f.history, f.response_column).unlabeled()
        S = load_csv(f.stream, f.response_column)
        T = load_csv(f.test, f.response_column)
        return H, S, T
    data = generate(cfg.process.with_seed(seed), cfg.n_samples)
    return split(data, cfg.fractions)


def run_single(cfg: BenchConfig, r: int, out_dir: Optional[Path] = None,
               keep_traces: bool = False) -> RunResult:
    """One benchmark run: shared split and autoencoder, every method."""
    seed = cfg.base_seed + r
    result = RunResult(r)
    H, S, T = _load_split(cfg, seed)
    standardizer = fit_standardizer(H)
    oae = None
    oae_error = None
    if cfg.needs_oae:
        sizes = cfg.layer_sizes
        if sizes[0] != H.p:
            sizes = (H.p,) + tuple(sizes[1:])
        try:
            oae = train(standardizer.transform(H.features), OAEArchitecture(sizes),
                        replace(cfg.train, seed=seed), lam=cfg.lam)
            result.oae_epochs = len(oae.train_log)
        except Exception as exc:  # recorded per method below
            oae_error = f"OAE training failed: {exc}"
    for method in cfg.methods:
        label = method.label
        if method.use_oae and oae is None:
            result.failures[label] = oae_error or "OAE unavailable"
            continue
        try:
            trace = run(H, None, StreamSource.from_dataset(S), T,
                        oae if method.use_oae else None,
                        cfg.engine_config(method, seed), standardizer)
        except Exception as exc:
            result.failures[label] = f"{type(exc).__name__}: {exc}"
            log.warning("run %d, method %s failed: %s", r, label, exc)
            continue
        result.curves[label] = trace.rmse_by_acquisition(cfg.budget)
        if out_dir is not None:
            trace.write(Path(out_dir) / "runs" / f"run_{r:03d}" / label)
        if keep_traces:
            result.traces[label] = trace
    return result


def aggregate(cfg: BenchConfig, runs: list[RunResult]) -> dict[str, LearningCurve]:
    """Mean and population std (``ddof=0``) of RMSE at each label count."""
    curves = {}
    grid = np.arange(cfg.budget + 1)
    for method in cfg.methods:
        label = method.label
        if label in curves:
            continue
        ok = [r.curves[label] for r in runs if label in r.curves]
        failed = len(runs) - len(ok)
        if failed > cfg.max_failure_rate * len(runs):
            msgs = {r.run: r.failures.get(label) for r in runs if label in r.failures}
            raise BenchmarkError(
                f"method {label}: {failed} of {len(runs)} runs failed: {msgs}"
            )
        M = np.array(ok)
        curves[label] = LearningCurve(label, grid, M.mean(axis=0), M.std(axis=0), len(ok))
    return curves


def run_benchmark(cfg: BenchConfig, out_dir=None, keep_traces: bool = False) -> BenchResult:
    out = Path(out_dir) if out_dir is not None else None
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_single, cfg, r, out, keep_traces)
                       for r in range(cfg.n_runs)]
            runs = [f.result() for f in futures]
    else:
        runs = []
        for r in range(cfg.n_runs):
            runs.append(run_single(cfg, r, out, keep_traces))
            log.info("run %d/%d done", r + 1, cfg.n_runs)
    result = BenchResult(cfg, aggregate(cfg, runs), runs)
    if out is not None:
        result.write_curves(out / "curves.csv")
    return result


def read_curves(path) -> dict[str, LearningCurve]:
    """Inverse of :meth:`BenchResult.write_curves` (``n_runs`` is unknown, set to 0)."""
    cols: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cols.setdefault(row["method"], []).append(
                (int(row["n_labels"]), float(row["mean_rmse"]), float(row["std_rmse"]))
            )
    out = {}
    for label, rows in cols.items():
        rows.sort()
        a = np.array(rows, dtype=float)
        out[label] = LearningCurve(label, a[:, 0].astype(int), a[:, 1], a[:, 2], 0)
    return out
