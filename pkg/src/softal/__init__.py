"""Stream-based active learning for linear soft sensors on autoencoder features."""

__version__ = "0.1.0"

from .bench import BenchConfig, LearningCurve, Method, run_benchmark
from .criteria import CriterionKind, fit_gaussian_summary, hotelling_t2, emc_score, qbc_ambiguity
from .datagen import ProcessSpec, generate, split
from .dataset import RawDataset, StreamSource, fit_standardizer, load_csv
from .engine import EngineConfig, RunTrace, run
from .oae import OAEArchitecture, OAEModel, TrainConfig, train
from .regression import Committee, LinearModel, bootstrap_committee, fit_ols
from .threshold import ControlLimit, scott_bandwidth, solve_ucl

__all__ = [
    "BenchConfig", "LearningCurve", "Method", "run_benchmark",
    "CriterionKind", "fit_gaussian_summary", "hotelling_t2", "emc_score", "qbc_ambiguity",
    "ProcessSpec", "generate", "split",
    "RawDataset", "StreamSource", "fit_standardizer", "load_csv",
    "EngineConfig", "RunTrace", "run",
    "OAEArchitecture", "OAEModel", "TrainConfig", "train",
    "Committee", "LinearModel", "bootstrap_committee", "fit_ols",
    "ControlLimit", "scott_bandwidth", "solve_ucl",
]
