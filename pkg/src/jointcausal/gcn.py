"""Small numpy graph convolutional classifier for per-frame skeleton graphs.

Each frame is one graph: joints are nodes and coordinates are node
features. Two propagation layers ``H' = ReLU(A_hat H W + b)`` feed a mean
pool over nodes and an affine head with two outputs. Gradients are written
out by hand and checked against finite differences.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, LengthMismatch, ShapeMismatch, SingleClassDataset
from .model import Dataset, SkeletonSpec, WeightedCausalDag

VARIANTS = ("anatomical-baseline", "causal-weighted")
CHECKPOINT_FORMAT = "jointcausal-gcn"
CHECKPOINT_VERSION = 1
METRIC_FIELDS = ("accuracy", "macro_precision", "macro_recall", "macro_f1")
N_CLASSES = 2


@dataclass(frozen=True)
class GcnConfig:
    hidden_dims: tuple[int, ...] = (32, 32)
    epochs: int = 50
    learning_rate: float = 0.01
    batch_size: int = 64
    seed: int = 0
    pooling: str = "mean"
    test_fraction: float = 0.2
    optimizer: str = "adam"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if not self.hidden_dims or min(self.hidden_dims) < 1:
            raise ConfigError("hidden_dims must be a nonempty list of positive sizes")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.pooling != "mean":
            raise ConfigError("only mean pooling is supported")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must be in (0, 1)")
        if self.optimizer != "adam":
            raise ConfigError("only the adam optimizer is supported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GcnConfig":
        known = set(cls.__dataclass_fields__)
        try:
            return cls(**{k: v for k, v in d.items() if k in known})
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class AdjacencyMode:
    variant: str
    matrix: np.ndarray

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatch("square matrix", m.shape)
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("adjacency entries must be finite and >= 0")
        if self.variant == "anatomical-baseline":
            if not np.array_equal(m, m.T) or not np.all(np.isin(m, (0.0, 1.0))):
                raise ValueError("baseline adjacency must be symmetric 0/1")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def baseline(cls, skeleton: SkeletonSpec) -> "AdjacencyMode":
        return cls("anatomical-baseline", skeleton.adjacency().astype(float))

    @classmethod
    def causal(cls, g: WeightedCausalDag) -> "AdjacencyMode":
        return cls("causal-weighted", g.weight_matrix())


def normalize_adjacency(a: AdjacencyMode) -> np.ndarray:
    """Add self-loops, then normalise symmetrically (baseline) or by row (causal)."""
    a_hat = a.matrix + np.eye(a.n)
    deg = a_hat.sum(axis=1)
    if a.variant == "anatomical-baseline":
        s = 1.0 / np.sqrt(deg)
        return s[:, None] * a_hat * s[None, :]
    return a_hat / deg[:, None]


# parameters -----------------------------------------------------------------

def param_names(n_layers: int) -> list[str]:
    names = []
    for l in range(n_layers):
        names += [f"W{l}", f"b{l}"]
    return names + ["W_out", "b_out"]


def init_params(n_features: int, hidden_dims, seed: int = 0) -> dict[str, np.ndarray]:
    """Glorot-uniform weights and zero biases."""
    rng = np.random.default_rng(seed)
    dims = [n_features, *hidden_dims, N_CLASSES]
    params = {}
    for l, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        key = "_out" if l == len(hidden_dims) else str(l)
        params[f"W{key}"] = rng.uniform(-lim, lim, size=(fan_in, fan_out))
        params[f"b{key}"] = np.zeros(fan_out)
    return params


def _n_layers(params: dict) -> int:
    return sum(1 for k in params if k.startswith("W") and k != "W_out")


def _check_shapes(x: np.ndarray, a_hat: np.ndarray, params: dict) -> None:
    if x.ndim != 3:
        raise ShapeMismatch("(batch, nodes, features)", x.shape)
    if a_hat.shape != (x.shape[1], x.shape[1]):
        raise ShapeMismatch((x.shape[1], x.shape[1]), a_hat.shape)
    width = x.shape[2]
    for l in range(_n_layers(params)):
        w = params[f"W{l}"]
        if w.shape[0] != width:
            raise ShapeMismatch(f"W{l} with {width} input rows", w.shape)
        width = w.shape[1]
    if params["W_out"].shape != (width, N_CLASSES):
        raise ShapeMismatch((width, N_CLASSES), params["W_out"].shape)


def _forward(x, a_hat, params):
    cache = []
    h = x
    for l in range(_n_layers(params)):
        ah = np.matmul(a_hat, h)
        z = ah @ params[f"W{l}"] + params[f"b{l}"]
        cache.append((ah, z))
        h = np.maximum(z, 0.0)
    pooled = h.mean(axis=1)
    scores = pooled @ params["W_out"] + params["b_out"]
    return scores, pooled, cache


def forward(x: np.ndarray, a_hat: np.ndarray, params: dict) -> np.ndarray:
    """Class scores, shape (batch, 2)."""
    x = np.asarray(x, dtype=float)
    _check_shapes(x, a_hat, params)
    return _forward(x, a_hat, params)[0]


def _softmax(s: np.ndarray) -> np.ndarray:
    e = np.exp(s - s.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss(x, y, a_hat, params) -> float:
    """Mean softmax cross-entropy."""
    s = forward(x, a_hat, params)
    s = s - s.max(axis=1, keepdims=True)
    logp = s - np.log(np.exp(s).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())


def loss_and_grads(x, y, a_hat, params) -> tuple[float, dict[str, np.ndarray]]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    _check_shapes(x, a_hat, params)
    scores, pooled, cache = _forward(x, a_hat, params)
    b, n = x.shape[0], x.shape[1]
    p = _softmax(scores)
    value = float(-np.log(np.maximum(p[np.arange(b), y], 1e-300)).mean())
    ds = p.copy()
    ds[np.arange(b), y] -= 1.0
    ds /= b
    grads = {"W_out": pooled.T @ ds, "b_out": ds.sum(axis=0)}
    dh = np.repeat((ds @ params["W_out"].T)[:, None, :] / n, n, axis=1)
    for l in reversed(range(len(cache))):
        ah, z = cache[l]
        dz = dh * (z > 0)
        grads[f"W{l}"] = ah.reshape(-1, ah.shape[2]).T @ dz.reshape(-1, dz.shape[2])
        grads[f"b{l}"] = dz.sum(axis=(0, 1))
        if l > 0:
            dh = np.matmul(a_hat.T, dz @ params[f"W{l}"].T)
    return value, grads


def gradient_check(params: dict, x, y, a_hat, h: float = 1e-5, grad_fn=None) -> float:
    """Largest |analytic - numeric| / max(|analytic| + |numeric|, 1e-8) over
    every parameter entry, with central differences of step ``h``.

    ``grad_fn(x, y, a_hat, params) -> (loss, grads)`` replaces the analytic
    gradient, which lets a test feed in a deliberately wrong one.
    """
    if sum(v.size for v in params.values()) == 0:
        return 0.0
    grad_fn = grad_fn or loss_and_grads
    _, analytic = grad_fn(x, y, a_hat, params)
    worst = 0.0
    work = {k: v.copy() for k, v in params.items()}
    for name, v in work.items():
        for idx in np.ndindex(v.shape):
            orig = v[idx]
            v[idx] = orig + h
            up = loss(x, y, a_hat, work)
            v[idx] = orig - h
            down = loss(x, y, a_hat, work)
            v[idx] = orig
            num = (up - down) / (2 * h)
            a = float(analytic[name][idx])
            worst = max(worst, abs(a - num) / max(abs(a) + abs(num), 1e-8))
    return worst


# metrics --------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    flags: tuple[str, ...] = ()

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_FIELDS}


def metrics(predictions, labels) -> Metrics:
    """Accuracy and unweighted two-class macro averages.

    A per-class ratio with a zero denominator counts as 0 and is flagged.
    """
    pred = np.asarray(predictions).astype(int).ravel()
    lab = np.asarray(labels).astype(int).ravel()
    if pred.shape != lab.shape:
        raise LengthMismatch(pred.size, lab.size)
    if pred.size == 0:
        raise ValueError("no predictions")
    for name, v in (("labels", lab), ("predictions", pred)):
        if not np.all(np.isin(v, (0, 1))):
            raise ValueError(f"{name} must be binary 0/1")
    flags = []
    prec, rec, f1 = [], [], []
    for c in range(N_CLASSES):
        tp = int(np.sum((pred == c) & (lab == c)))
        fp = int(np.sum((pred == c) & (lab != c)))
        fn = int(np.sum((pred != c) & (lab == c)))
        p = r = 0.0
        if tp + fp:
            p = tp / (tp + fp)
        else:
            flags.append(f"zero-division:precision:{c}")
        if tp + fn:
            r = tp / (tp + fn)
        else:
            flags.append(f"zero-division:recall:{c}")
        prec.append(p)
        rec.append(r)
        f1.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
    return Metrics(float(np.mean(pred == lab)), float(np.mean(prec)), float(np.mean(rec)),
                   float(np.mean(f1)), tuple(flags))


# training -------------------------------------------------------------------

@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    split: str
    metrics: Metrics
    loss: float


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[EpochRecord]
    config: GcnConfig
    variant: str
    train_index: np.ndarray
    test_index: np.ndarray
    a_hat: np.ndarray = field(repr=False, default=None)

    def final(self, split: str = "test") -> Metrics:
        return [r for r in self.history if r.split == split][-1].metrics


def stratified_split(labels, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffle; round(test_fraction * class size) of each class go to test."""
    lab = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(lab):
        idx = rng.permutation(np.flatnonzero(lab == c))
        k = int(round(test_fraction * idx.size))
        test.append(idx[:k])
        train.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def predict(x, a_hat, params) -> np.ndarray:
    return np.argmax(forward(x, a_hat, params), axis=1)


def _adam(params, grads, state, lr, t, b1=0.9, b2=0.999, eps=1e-8):
    for k in params:
        m, v = state[k]
        m[:] = b1 * m + (1 - b1) * grads[k]
        v[:] = b2 * v + (1 - b2) * grads[k] ** 2
        params[k] -= lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)


def train(data, adjacency: AdjacencyMode, cfg: GcnConfig = GcnConfig(), labels=None) -> TrainResult:
    """Fit on an 80/20 stratified split with Adam on mean cross-entropy.

    ``data`` is a Dataset (features per joint, behaviour labels) or an array
    of shape (frames, nodes, features) together with ``labels``.
    """
    if isinstance(data, Dataset):
        x = data.node_features()
        y = np.asarray(data.behavior_labels if labels is None else labels, dtype=int)
    else:
        x = np.asarray(data, dtype=float)
        if labels is None:
            raise ValueError("labels are required for array input")
        y = np.asarray(labels, dtype=int)
    if x.ndim != 3:
        raise ShapeMismatch("(frames, nodes, features)", x.shape)
    if len(y) != len(x):
        raise LengthMismatch(len(x), len(y))
    if x.shape[1] != adjacency.n:
        raise ShapeMismatch((adjacency.n,), (x.shape[1],))
    tr, te = stratified_split(y, cfg.test_fraction, cfg.seed)
    if np.unique(y[tr]).size < 2:
        raise SingleClassDataset("training labels contain a single class")
    a_hat = normalize_adjacency(adjacency)
    params = init_params(x.shape[2], cfg.hidden_dims, cfg.seed)
    state = {k: (np.zeros_like(v), np.zeros_like(v)) for k, v in params.items()}
    rng = np.random.default_rng(cfg.seed + 1)
    history, t = [], 0
    for epoch in range(1, cfg.epochs + 1):
        order = tr[rng.permutation(tr.size)]
        for start in range(0, order.size, cfg.batch_size):
            bi = order[start:start + cfg.batch_size]
            _, grads = loss_and_grads(x[bi], y[bi], a_hat, params)
            t += 1
            _adam(params, grads, state, cfg.learning_rate, t)
        for split, idx in (("train", tr), ("test", te)):
            if idx.size == 0:
                continue
            history.append(EpochRecord(epoch, split, metrics(predict(x[idx], a_hat, params), y[idx]),
                                       loss(x[idx], y[idx], a_hat, params)))
    return TrainResult(params, history, cfg, adjacency.variant, tr, te, a_hat)


def evaluate(result_params: dict, x, y, a_hat) -> Metrics:
    return metrics(predict(x, a_hat, result_params), y)


# persistence ----------------------------------------------------------------

def write_history_csv(path: str | Path, history: list[EpochRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "split", *METRIC_FIELDS))
        for r in history:
            w.writerow((r.epoch, r.split, *(repr(float(getattr(r.metrics, k))) for k in METRIC_FIELDS)))


def read_history_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{"epoch": int(r["epoch"]), "split": r["split"],
             **{k: float(r[k]) for k in METRIC_FIELDS}} for r in rows]


def checkpoint_dict(result: TrainResult) -> dict:
    """Versioned JSON-ready checkpoint: config, variant, normalised adjacency, parameters."""
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "variant": result.variant,
        "config": result.config.to_dict(),
        "a_hat": result.a_hat.tolist(),
        "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                   for k, v in result.params.items()},
    }


def save_checkpoint(path: str | Path, result: TrainResult) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(result), indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], np.ndarray, GcnConfig, str]:
    """Returns (params, a_hat, config, variant)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a GCN checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    params = {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in doc["params"].items()}
    return params, np.array(doc["a_hat"], dtype=float), GcnConfig.from_dict(doc["config"]), doc["variant"]
