"""Thrust surrogate: synthetic dataset and a small numpy MLP trained with Adam.

Inputs are the in-situ measurable quantities (r0, Pt4, X_CO, H); the target
is thrust. Features and target are min-max scaled to [0, 1] using the
training split, and the network is a single hidden layer with a sigmoid
output so predictions land in the scaled range.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .combustor import PlantConfig, static_outputs
from .inlet import R0_MAX, R0_MIN

FEATURES = ("r0_m", "Pt4_Pa", "X_CO", "H_m")
TARGET = "thrust_N"
CSV_HEADER = ("r0_m", "Pt4_Pa", "X_CO", "H_m", "thrust_N")
LOG_FEATURES = ("Pt4_Pa",)
ACTIVATIONS = ("sigmoid", "tanh", "relu", "leakyrelu")
LEAK = 0.01

H_RANGE = (10000.0, 40000.0)
R0_RANGE = (R0_MIN, R0_MAX)
R3_RANGE = (59.2e-3, 68.6e-3)


class TrainingError(RuntimeError):
    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


# ---------------------------------------------------------------- dataset

@dataclass
class Dataset:
    X: np.ndarray  # (n, 4) columns FEATURES
    y: np.ndarray  # (n,) thrust in N
    grid_shape: tuple[int, int, int] = (0, 0, 0)
    excluded: int = 0

    def __len__(self):
        return len(self.y)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row, t in zip(self.X, self.y):
                w.writerow([repr(float(v)) for v in (*row, t)])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = tuple(next(r))
            if header != CSV_HEADER:
                raise ValueError(f"unexpected dataset header {header}")
            rows = np.array([[float(v) for v in line] for line in r], dtype=float)
        rows = rows.reshape(-1, len(CSV_HEADER))
        return cls(X=rows[:, :4].copy(), y=rows[:, 4].copy())


def generate_dataset(points_per_axis: int = 20, config: PlantConfig | None = None,
                     progress=None) -> Dataset:
    """Static plant evaluations on a uniform (H, r0, r3) grid.

    Points where the plant raises are left out and counted in ``excluded``.
    """
    if points_per_axis < 2:
        raise ValueError("points_per_axis must be at least 2")
    cfg = config or PlantConfig()
    n = points_per_axis
    Hs = np.linspace(*H_RANGE, n)
    r0s = np.linspace(*R0_RANGE, n)
    r3s = np.linspace(R3_RANGE[0], R3_RANGE[1], n)
    # the top of the r3 range is burnout; evaluate just inside it
    r3s[-1] = np.nextafter(cfg.grain.r3_max, 0.0) if r3s[-1] >= cfg.grain.r3_max else r3s[-1]
    X, y, bad = [], [], 0
    for i, H in enumerate(Hs):
        for r0 in r0s:
            for r3 in r3s:
                try:
                    out = static_outputs(float(H), float(r0), float(r3), cfg)
                except (ValueError, RuntimeError):
                    bad += 1
                    continue
                if not math.isfinite(out.thrust):
                    bad += 1
                    continue
                X.append((r0, out.Pt4, out.X_CO, H))
                y.append(out.thrust)
        if progress:
            progress(i + 1, n)
    return Dataset(np.array(X, dtype=float).reshape(-1, 4), np.array(y, dtype=float),
                   (n, n, n), bad)


# ---------------------------------------------------------------- model

def _act(name, z):
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leakyrelu":
        return np.where(z > 0, z, LEAK * z)
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, z, a):
    """Derivative given pre-activation z and activation a."""
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0).astype(float)
    if name == "leakyrelu":
        return np.where(z > 0, 1.0, LEAK)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class MinMaxScaler:
    """Per-column map to [0, 1]; ``log`` columns are scaled in log space."""

    lo: np.ndarray
    hi: np.ndarray
    log: np.ndarray | None = None

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        self.log = (np.zeros(self.lo.shape, dtype=bool) if self.log is None
                    else np.atleast_1d(np.asarray(self.log, dtype=bool)))

    @classmethod
    def fit(cls, a, log=None) -> "MinMaxScaler":
        a = np.asarray(a, dtype=float)
        log = np.zeros(a.shape[1:] or (1,), dtype=bool) if log is None else np.atleast_1d(log)
        if np.any(log & np.any(np.atleast_2d(a.T).T <= 0, axis=0)):
            raise ValueError("log-scaled columns must be strictly positive")
        w = np.where(log, np.log(np.where(log, np.maximum(a, 1e-300), 1.0)), a)
        lo, hi = w.min(axis=0), w.max(axis=0)
        # constant columns would divide by zero
        hi = np.where(hi > lo, hi, lo + 1.0)
        return cls(lo, hi, log)

    def _warp(self, a):
        a = np.asarray(a, dtype=float)
        if not self.log.any():
            return a
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.log, np.log(a), a)

    def transform(self, a):
        return (self._warp(a) - self.lo) / (self.hi - self.lo)

    def inverse(self, s):
        w = np.asarray(s, dtype=float) * (self.hi - self.lo) + self.lo
        return np.where(self.log, np.exp(w), w) if self.log.any() else w


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # W[l] has shape (n_out, n_in)
    biases: list[np.ndarray]
    activation: str = "sigmoid"
    output_activation: str = "sigmoid"
    input_scaler: MinMaxScaler | None = None
    output_scaler: MinMaxScaler | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in (self.activation, self.output_activation):
            if name not in ACTIVATIONS:
                raise ValueError(f"unknown activation {name!r}")
        for W, b, W_next in zip(self.weights, self.biases, self.weights[1:] + [None]):
            if W.shape[0] != b.shape[0] or (W_next is not None and W_next.shape[1] != W.shape[0]):
                raise ValueError("inconsistent layer dimensions")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @classmethod
    def init(cls, layer_sizes=(4, 20, 1), activation="sigmoid", seed=0,
             output_activation="sigmoid") -> "MlpModel":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        Ws, bs = [], []
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            lim = math.sqrt(6.0 / (n_in + n_out))
            Ws.append(rng.uniform(-lim, lim, size=(n_out, n_in)))
            bs.append(np.zeros(n_out))
        return cls(Ws, bs, activation, output_activation)

    def copy(self) -> "MlpModel":
        return replace(self, weights=[W.copy() for W in self.weights],
                       biases=[b.copy() for b in self.biases], meta=dict(self.meta))

    def _layer_act(self, l):
        return self.output_activation if l == len(self.weights) - 1 else self.activation

    def forward_scaled(self, s: np.ndarray) -> np.ndarray:
        """Network on already-scaled inputs (n, 4) -> scaled outputs (n,)."""
        a = np.atleast_2d(s)
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            a = _act(self._layer_act(l), a @ W.T + b)
        return a[:, 0]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        s = self.input_scaler.transform(X) if self.input_scaler else X
        out = self.forward_scaled(s)
        return self.output_scaler.inverse(out) if self.output_scaler else out

    def loss_and_grads(self, s: np.ndarray, t: np.ndarray):
        """MSE on scaled data and its gradient by backpropagation."""
        acts, pre = [np.atleast_2d(s)], []
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ W.T + b
            pre.append(z)
            acts.append(_act(self._layer_act(l), z))
        out = acts[-1][:, 0]
        err = out - t
        n = len(t)
        loss = float(err @ err / n)
        delta = (2.0 / n) * err[:, None]
        gW, gb = [None] * len(self.weights), [None] * len(self.weights)
        for l in range(len(self.weights) - 1, -1, -1):
            delta = delta * _act_grad(self._layer_act(l), pre[l], acts[l + 1])
            gW[l] = delta.T @ acts[l]
            gb[l] = delta.sum(axis=0)
            if l:
                delta = delta @ self.weights[l]
        return loss, gW, gb

    # -- serialization

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "activation": self.activation,
            "output_activation": self.output_activation,
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "input_scaler": _scaler_dict(self.input_scaler),
            "output_scaler": _scaler_dict(self.output_scaler),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        def scaler(v):
            if v is None:
                return None
            return MinMaxScaler(np.array(v["min"]), np.array(v["max"]), np.array(v.get("log", False)))

        model = cls(
            weights=[np.array(W, dtype=float) for W in d["weights"]],
            biases=[np.array(b, dtype=float) for b in d["biases"]],
            activation=d["activation"],
            output_activation=d.get("output_activation", "sigmoid"),
            input_scaler=scaler(d["input_scaler"]),
            output_scaler=scaler(d["output_scaler"]),
            meta=d.get("meta", {}),
        )
        if model.layer_sizes != list(d["layer_sizes"]):
            raise ValueError("layer_sizes disagrees with weight shapes")
        return model

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _scaler_dict(sc):
    if sc is None:
        return None
    return {"min": sc.lo.tolist(), "max": sc.hi.tolist(), "log": sc.log.tolist()}


def forward(model: MlpModel, x) -> float:
    """Thrust in N for one raw input (r0, Pt4, X_CO, H)."""
    return float(model.predict(np.asarray(x, dtype=float)[None, :])[0])


def mse(y, yhat) -> float:
    y, yhat = np.asarray(y, dtype=float), np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size == 0:
        raise ValueError("mse needs equal-length nonempty vectors")
    d = y - yhat
    return float(d @ d / d.size)


# ---------------------------------------------------------------- training

@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 20
    activation: str = "sigmoid"
    batch_size: int = 100
    epochs: int = 100
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    split_fraction: float = 0.8
    seed: int = 0
    # scale Pt4 and thrust logarithmically; both span two decades over 10-40 km
    log_scale: bool = True

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must lie in (0, 1)")
        if self.batch_size < 1 or self.epochs < 0 or self.hidden < 1:
            raise ValueError("batch_size and hidden must be >= 1, epochs >= 0")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainResult:
    model: MlpModel
    train_loss: list[float]  # per epoch, index 0 is before training
    test_loss: list[float]
    train_idx: np.ndarray
    test_idx: np.ndarray


def split_indices(n: int, fraction: float, seed: int):
    perm = np.random.default_rng(seed).permutation(n)
    n_train = max(1, min(n - 1, int(round(fraction * n)))) if n > 1 else n
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def train(data: Dataset, cfg: TrainConfig = TrainConfig(), model: MlpModel | None = None) -> TrainResult:
    """Seeded split, scaler fit on the training rows, then mini-batch Adam."""
    if len(data) == 0:
        raise ValueError("dataset is empty")
    train_idx, test_idx = split_indices(len(data), cfg.split_fraction, cfg.seed)
    log_x = np.array([cfg.log_scale and name in LOG_FEATURES for name in FEATURES])
    x_sc = MinMaxScaler.fit(data.X[train_idx], log_x)
    y_sc = MinMaxScaler.fit(data.y[train_idx], np.array([cfg.log_scale]))
    S = x_sc.transform(data.X)
    T = y_sc.transform(data.y)
    S_tr, T_tr = S[train_idx], T[train_idx]
    S_te, T_te = S[test_idx], T[test_idx]

    if model is None:
        model = MlpModel.init((data.X.shape[1], cfg.hidden, 1), cfg.activation, cfg.seed)
    else:
        model = model.copy()
    model.input_scaler, model.output_scaler = x_sc, y_sc
    params = model.weights + model.biases
    opt = Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    rng = np.random.default_rng(cfg.seed + 1)

    def losses():
        tr = mse(T_tr, model.forward_scaled(S_tr))
        te = mse(T_te, model.forward_scaled(S_te)) if len(test_idx) else float("nan")
        return tr, te

    tr, te = losses()
    hist_tr, hist_te = [tr], [te]
    n = len(train_idx)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            b = order[start:start + cfg.batch_size]
            _, gW, gb = model.loss_and_grads(S_tr[b], T_tr[b])
            opt.step(params, gW + gb)
        tr, te = losses()
        if not math.isfinite(tr):
            raise TrainingError(f"training loss became {tr} at epoch {epoch}", epoch)
        hist_tr.append(tr)
        hist_te.append(te)
    model.meta = {"train_config": asdict(cfg), "features": list(FEATURES), "target": TARGET,
                  "final_train_mse": hist_tr[-1], "final_test_mse": hist_te[-1]}
    return TrainResult(model, hist_tr, hist_te, train_idx, test_idx)


# ---------------------------------------------------------------- sweep

SWEEP_GRID = {
    "hidden": (5, 10, 20, 40),
    "activation": ("sigmoid", "tanh", "relu", "leakyrelu"),
    "batch_size": (25, 50, 100, 200),
}
CASES = "ABCD"


@dataclass
class SweepRow:
    factor: str
    case: str
    value: object
    train_loss: float
    test_loss: float
    history: list[float] = field(default_factory=list)
    error: str = ""


def sensitivity_sweep(data: Dataset, base: TrainConfig = TrainConfig(), grid=None) -> list[SweepRow]:
    """One factor at a time around ``base``; cases A-D follow the grid order."""
    grid = SWEEP_GRID if grid is None else grid
    rows = []
    for factor, values in grid.items():
        for case, value in zip(CASES, values):
            try:
                res = train(data, replace(base, **{factor: value}))
                rows.append(SweepRow(factor, case, value, res.train_loss[-1], res.test_loss[-1],
                                     res.train_loss))
            except (TrainingError, ValueError, FloatingPointError) as exc:
                rows.append(SweepRow(factor, case, value, float("nan"), float("nan"), [], str(exc)))
    return rows
