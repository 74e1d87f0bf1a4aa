"""Orthogonal autoencoder in plain numpy.

A fully connected encoder maps ``x`` (p values) to a bottleneck ``z`` (k
values) and a mirrored decoder maps ``z`` back to ``x_hat``. Training
minimizes

    recon + lam * ||Z^T Z / b - I_k||_F^2,

with ``recon = ||X - X_hat||_F^2 / b`` (squared error per observation,
summed over the p coordinates) over a batch of ``b`` rows and ``Z`` the
batch's bottleneck activations. Hidden layers use ``tanh``; the
bottleneck and the reconstruction layer are linear.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import RawDataset, format_float

log = logging.getLogger(__name__)

DEFAULT_LAYERS = (16, 160, 80, 40, 20, 10)
DEFAULT_LAMBDA = 0.10

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda a: 1.0 - a * a),
    "linear": (lambda v: v, lambda a: np.ones_like(a)),
}


class TrainingError(RuntimeError):
    pass


class NonFiniteActivation(FloatingPointError):
    pass


@dataclass(frozen=True)
class OAEArchitecture:
    layer_sizes: tuple[int, ...] = DEFAULT_LAYERS
    hidden_activation: str = "tanh"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"invalid layer sizes {sizes}")
        if self.hidden_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def code_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_encoder_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def shapes(self) -> list[tuple[int, int]]:
        """``(fan_in, fan_out)`` of every layer, encoder then decoder."""
        s = self.layer_sizes
        enc = list(zip(s[:-1], s[1:]))
        dec = [(b, a) for a, b in reversed(enc)]
        return enc + dec

    def activations(self) -> list[str]:
        """Activation name per layer; linear at the bottleneck and the output."""
        L = self.n_encoder_layers
        hidden = self.hidden_activation
        enc = [hidden] * (L - 1) + ["linear"]
        return enc + enc[:]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    max_epochs: int = 1000
    patience: int = 10
    validation_fraction: float = 0.20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")


@dataclass
class OAEModel:
    """Parameters are stored as ``[W0, b0, W1, b1, ...]``, encoder layers first.

    ``W`` has shape ``(fan_in, fan_out)`` so a layer computes ``act(h @ W + b)``.
    """

    architecture: OAEArchitecture
    params: list[np.ndarray]
    lam: float = DEFAULT_LAMBDA
    train_log: list[tuple[int, float, float]] = field(default_factory=list)

    def __post_init__(self):
        shapes = self.architecture.shapes()
        if len(self.params) != 2 * len(shapes):
            raise ValueError("parameter list does not match architecture")
        for l, (fi, fo) in enumerate(shapes):
            W, b = self.params[2 * l], self.params[2 * l + 1]
            if W.shape != (fi, fo) or b.shape != (fo,):
                raise ValueError(f"layer {l}: got {W.shape}/{b.shape}, expected {(fi, fo)}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")

    @classmethod
    def initialize(cls, architecture: OAEArchitecture, lam: float = DEFAULT_LAMBDA,
                   rng: np.random.Generator | int | None = 0) -> "OAEModel":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(rng)
        params = []
        for fi, fo in architecture.shapes():
            limit = np.sqrt(6.0 / (fi + fo))
            params.append(rng.uniform(-limit, limit, size=(fi, fo)))
            params.append(np.zeros(fo))
        return cls(architecture, params, lam)

    @classmethod
    def zeros(cls, architecture: OAEArchitecture, lam: float = DEFAULT_LAMBDA) -> "OAEModel":
        params = []
        for fi, fo in architecture.shapes():
            params += [np.zeros((fi, fo)), np.zeros(fo)]
        return cls(architecture, params, lam)

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def copy(self) -> "OAEModel":
        return replace(self, params=[p.copy() for p in self.params],
                       train_log=list(self.train_log))

    # -- forward ---------------------------------------------------------

    def _forward(self, X: np.ndarray, stop: int, check: bool = False) -> list[np.ndarray]:
        acts = [X]
        names = self.architecture.activations()
        h = X
        for l in range(stop):
            f, _ = _ACTIVATIONS[names[l]]
            h = f(h @ self.params[2 * l] + self.params[2 * l + 1])
            if check and not np.all(np.isfinite(h)):
                raise NonFiniteActivation(f"non-finite activation at layer {l}")
            acts.append(h)
        return acts

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        if isinstance(x, RawDataset):
            x = x.features
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.architecture.input_dim:
            raise ValueError(
                f"expected {self.architecture.input_dim} inputs, got {X.shape[1]}"
            )
        return X, single

    def encode(self, x) -> np.ndarray:
        X, single = self._as_batch(x)
        Z = self._forward(X, self.architecture.n_encoder_layers, check=True)[-1]
        return Z[0] if single else Z

    def reconstruct(self, x) -> np.ndarray:
        X, single = self._as_batch(x)
        Xh = self._forward(X, self.n_layers, check=True)[-1]
        return Xh[0] if single else Xh

    # -- loss and gradient -----------------------------------------------

    def ortho_loss(self, batch) -> tuple[float, float, float]:
        """``(total, recon, orth)`` on a batch of at least two rows."""
        X, _ = self._as_batch(batch)
        acts = self._forward(X, self.n_layers)
        return _loss_terms(X, acts[self.architecture.n_encoder_layers], acts[-1], self.lam)[:3]

    def backprop(self, batch) -> tuple[list[np.ndarray], float]:
        """Analytic gradient of the total loss w.r.t. every parameter, and the loss."""
        X, _ = self._as_batch(batch)
        acts = self._forward(X, self.n_layers)
        Le = self.architecture.n_encoder_layers
        total, _, _, G = _loss_terms(X, acts[Le], acts[-1], self.lam)
        b = X.shape[0]
        names = self.architecture.activations()
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]

        delta = 2.0 * (acts[-1] - X) / b
        for l in range(self.n_layers - 1, -1, -1):
            if l == Le - 1 and self.lam != 0.0:
                # d/dZ of lam * ||Z^T Z / b - I||_F^2 is lam * (4 / b) * Z G
                delta = delta + self.lam * (4.0 / b) * acts[Le] @ G
            _, dact = _ACTIVATIONS[names[l]]
            dpre = delta * dact(acts[l + 1])
            grads[2 * l] = acts[l].T @ dpre
            grads[2 * l + 1] = dpre.sum(axis=0)
            delta = dpre @ self.params[2 * l].T
        return grads, total

    # -- persistence -----------------------------------------------------

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arch = self.architecture
        lines = [
            "oae layers={} lambda={} hidden={} bottleneck=linear output=linear".format(
                ",".join(str(s) for s in arch.layer_sizes), format_float(self.lam),
                arch.hidden_activation,
            )
        ]
        for l in range(self.n_layers):
            W, b = self.params[2 * l], self.params[2 * l + 1]
            lines.append(f"W{l} {W.shape[0]}x{W.shape[1]} " + " ".join(map(format_float, W.ravel())))
            lines.append(f"b{l} {b.shape[0]} " + " ".join(map(format_float, b)))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "OAEModel":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        if not text or not text[0].startswith("oae "):
            raise ValueError(f"{path}: not an OAE model file")
        meta = dict(tok.split("=", 1) for tok in text[0].split()[1:])
        arch = OAEArchitecture(
            tuple(int(v) for v in meta["layers"].split(",")), meta["hidden"]
        )
        params = []
        for line in text[1:]:
            if not line.strip():
                continue
            name, shape, *vals = line.split(" ")
            dims = tuple(int(v) for v in shape.split("x"))
            arr = np.array([float(v) for v in vals], dtype=float)
            if arr.size != int(np.prod(dims)):
                raise ValueError(f"{path}: tensor {name} has {arr.size} values for shape {dims}")
            params.append(arr.reshape(dims))
        return cls(arch, params, float(meta["lambda"]))


def _loss_terms(X, Z, Xh, lam):
    b = X.shape[0]
    if b < 2:
        raise ValueError("ortho loss needs a batch of at least 2 rows")
    R = Xh - X
    recon = float(np.sum(R * R) / b)
    G = Z.T @ Z / b - np.eye(Z.shape[1])
    orth = float(np.sum(G * G))
    return recon + lam * orth, recon, orth, G


def train(data, arch: OAEArchitecture | None = None, cfg: TrainConfig | None = None,
          lam: float = DEFAULT_LAMBDA) -> OAEModel:
    """Adam on mini-batches with early stopping on a held-out tail.

    The last ``validation_fraction`` of the rows (in index order) is the
    validation set. Training stops after ``patience`` epochs without a new best
    validation loss, and the best-epoch parameters are returned.
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(data.features if isinstance(data, RawDataset) else data, dtype=float)
    if arch is None:
        arch = OAEArchitecture((X.shape[1],) + DEFAULT_LAYERS[1:])
    n = X.shape[0]
    n_val = int(round(cfg.validation_fraction * n))
    n_train = n - n_val
    if n_val < 2 or n_train < max(cfg.batch_size, 2):
        raise TrainingError(
            f"{n} rows leave {n_train} training / {n_val} validation rows; "
            f"need >= {cfg.batch_size} and >= 2"
        )
    Xtr, Xval = X[:n_train], X[n_train:]

    rng = np.random.default_rng(cfg.seed)
    model = OAEModel.initialize(arch, lam, rng)
    m1 = [np.zeros_like(p) for p in model.params]
    m2 = [np.zeros_like(p) for p in model.params]
    n_batches = max(1, n_train // cfg.batch_size)
    step = 0
    best_val, best_params, since_best = np.inf, None, 0
    history: list[tuple[int, float, float]] = []

    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(n_train)
        batch_losses = []
        for idx in np.array_split(perm, n_batches):
            grads, total = model.backprop(Xtr[idx])
            if not np.isfinite(total):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            batch_losses.append(total)
            step += 1
            c1 = 1.0 - cfg.beta1 ** step
            c2 = 1.0 - cfg.beta2 ** step
            for p, g, a, v in zip(model.params, grads, m1, m2):
                a *= cfg.beta1
                a += (1.0 - cfg.beta1) * g
                v *= cfg.beta2
                v += (1.0 - cfg.beta2) * g * g
                p -= cfg.learning_rate * (a / c1) / (np.sqrt(v / c2) + cfg.eps)
        val = model.ortho_loss(Xval)[0]
        if not np.isfinite(val):
            raise TrainingError(f"validation loss diverged at epoch {epoch}")
        history.append((epoch, float(np.mean(batch_losses)), val))
        if val < best_val:
            best_val, since_best = val, 0
            best_params = [p.copy() for p in model.params]
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    log.info("OAE stopped after %d epochs, best validation loss %.6g", len(history), best_val)
    return OAEModel(arch, best_params, lam, history)


def decorrelation(model: OAEModel, X, normalized: bool = False) -> float:
    """Mean absolute off-diagonal entry of ``Z^T Z / n`` on ``X``.

    The raw Gram entries scale with the code magnitude. ``normalized=True``
    divides by the diagonal first (cosine similarity between code
    dimensions), which measures decorrelation independently of scale.
    """
    Z = model.encode(np.atleast_2d(X))
    G = Z.T @ Z / Z.shape[0]
    k = G.shape[0]
    if k < 2:
        return 0.0
    if normalized:
        d = np.sqrt(np.diag(G))
        G = G / np.outer(d, d)
    return float(np.abs(G[~np.eye(k, dtype=bool)]).mean())
