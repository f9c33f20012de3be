"""From-scratch feed-forward regressor: He init, ReLU hidden layers,
linear output, exact backpropagation, Adam, early stopping.

The network maps the 12 kick-augmented probabilities to the 4 target
voltages (scaled to [0, 1] for training).  Parameters are a list of
(weight, bias) pairs, weights stored (out, in).  The training loss is
the batch mean of per-example RMSE over the K outputs:

    L = (1/B) * sum_k sqrt( (1/K) * sum_m (yhat_km - y_km)^2 )

which is what the validation monitor and the early stopping watch too.
"""

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, KickConfig, TargetScaling
from .errors import (
    CheckpointError,
    InvalidParameterError,
    TrainingDivergedError,
)
from .metrics import cosine_similarity, nrmse

__all__ = [
    "TrainConfig",
    "TrainReport",
    "AdamState",
    "layer_sizes",
    "init_he",
    "forward",
    "loss",
    "backward",
    "init_adam",
    "adam_step",
    "train",
    "predict",
    "save_checkpoint",
    "load_checkpoint",
    "Checkpoint",
]

DEFAULT_HIDDEN = (200, 200, 200)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 250
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    patience: int = 25
    seed: int = 0
    hidden: tuple = DEFAULT_HIDDEN

    def __post_init__(self):
        if self.max_epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise InvalidParameterError("epochs, batch size and patience must be >= 1")
        if self.patience > self.max_epochs:
            raise InvalidParameterError("patience cannot exceed max_epochs")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise InvalidParameterError("learning rate and epsilon must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidParameterError("adam betas must lie in [0, 1)")
        if any(h < 1 for h in self.hidden) or not self.hidden:
            raise InvalidParameterError("hidden layer sizes must be >= 1")


@dataclass
class TrainReport:
    """Per-epoch curves plus where the best validation loss occurred.

    `wall_clock` is informational only and is never written into result
    files (those must be reproducible byte for byte).
    """

    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_nrmse: list = field(default_factory=list)
    val_cosine: list = field(default_factory=list)
    best_epoch: int = -1
    wall_clock: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0


def layer_sizes(n_in: int, n_out: int, hidden=DEFAULT_HIDDEN):
    return [int(n_in), *map(int, hidden), int(n_out)]


def init_he(sizes, rng: np.random.Generator):
    """Weights ~ N(0, 2/n_in) layer by layer, biases zero."""
    if len(sizes) < 2:
        raise InvalidParameterError("need at least an input and an output layer")
    params = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        W = rng.standard_normal((n_out, n_in)) * np.sqrt(2.0 / n_in)
        params.append((W, np.zeros(n_out)))
    return params


def _forward_cached(params, X):
    """Returns (activations per layer incl. input, hidden preactivations)."""
    acts = [X]
    zs = []
    A = X
    for W, b in params[:-1]:
        z = A @ W.T + b
        zs.append(z)
        A = np.maximum(z, 0.0)
        acts.append(A)
    W, b = params[-1]
    acts.append(A @ W.T + b)
    return acts, zs


def forward(params, X):
    """Network output for a single feature vector or an (N, n_in) batch."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    out = _forward_cached(params, np.atleast_2d(X))[0][-1]
    return out[0] if single else out


def loss(params, X, Y) -> float:
    """Batch mean of per-example RMSE over the output coordinates."""
    out = forward(params, X)
    e = out - np.atleast_2d(Y)
    return float(np.sqrt((e**2).mean(axis=1)).mean())


def _grads_from_cache(params, acts, zs, Y):
    """Exact gradient of `loss`; ReLU subgradient at 0 is taken as 0."""
    e = acts[-1] - Y
    B, K = e.shape
    rmse = np.sqrt((e**2).mean(axis=1, keepdims=True))
    delta = e / (B * K * np.where(rmse > 0.0, rmse, 1.0))
    grads = [None] * len(params)
    d = delta
    for li in range(len(params) - 1, -1, -1):
        grads[li] = (d.T @ acts[li], d.sum(axis=0))
        if li > 0:
            d = (d @ params[li][0]) * (zs[li - 1] > 0.0)
    return grads, float(rmse.mean())


def backward(params, X, Y):
    """Gradient of `loss` w.r.t. every weight and bias."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    acts, zs = _forward_cached(params, X)
    return _grads_from_cache(params, acts, zs, Y)[0]


def init_adam(params) -> AdamState:
    zeros = lambda: [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    return AdamState(m=zeros(), v=zeros(), t=0)


def adam_step(params, grads, state: AdamState, config: TrainConfig):
    """One bias-corrected Adam update; mutates params and state in place."""
    b1, b2, eps, lr = config.beta1, config.beta2, config.epsilon, config.learning_rate
    state.t += 1
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for li, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
        mW, mb = state.m[li]
        vW, vb = state.v[li]
        mW *= b1
        mW += (1.0 - b1) * gW
        mb *= b1
        mb += (1.0 - b1) * gb
        vW *= b2
        vW += (1.0 - b2) * gW**2
        vb *= b2
        vb += (1.0 - b2) * gb**2
        W -= lr * (mW / c1) / (np.sqrt(vW / c2) + eps)
        b -= lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
    return params, state


def _copy_params(params):
    return [(W.copy(), b.copy()) for W, b in params]


def _copy_adam(state: AdamState) -> AdamState:
    return AdamState(
        m=[(a.copy(), b.copy()) for a, b in state.m],
        v=[(a.copy(), b.copy()) for a, b in state.v],
        t=state.t,
    )


def train(train_ds: Dataset, val_ds: Dataset, config: TrainConfig):
    """Mini-batch training with validation-loss early stopping.

    Both datasets must carry [0, 1]-normalized targets produced with the
    train split's scaling record (train_ds.normalization).  Stops after
    `patience` epochs without validation improvement or at `max_epochs`,
    whichever comes first, and returns the parameters and Adam state of
    the best validation epoch together with the per-epoch report.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise InvalidParameterError("training and validation sets must be nonempty")
    scaling = train_ds.normalization
    if scaling is None:
        raise InvalidParameterError("train dataset is not normalized; call normalize_targets")
    X, Y = train_ds.features, train_ds.targets
    Xv, Yv = val_ds.features, val_ds.targets
    y_val_volts = scaling.invert(Yv)
    span = scaling.pooled_span()

    rng = np.random.default_rng(config.seed)
    params = init_he(layer_sizes(X.shape[1], Y.shape[1], config.hidden), rng)
    state = init_adam(params)
    report = TrainReport()
    best_loss = np.inf
    best_params = _copy_params(params)
    best_state = _copy_adam(state)
    stale = 0
    t0 = time.perf_counter()

    n = X.shape[0]
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            acts, zs = _forward_cached(params, X[idx])
            grads, batch_loss = _grads_from_cache(params, acts, zs, Y[idx])
            adam_step(params, grads, state, config)
            loss_sum += batch_loss * idx.size
        train_loss = loss_sum / n

        vout = forward(params, Xv)
        val_loss = float(np.sqrt(((vout - Yv) ** 2).mean(axis=1)).mean())
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch}", epoch=epoch
            )
        yhat_volts = scaling.invert(vout)
        report.train_loss.append(train_loss)
        report.val_loss.append(val_loss)
        report.val_nrmse.append(nrmse(y_val_volts.ravel(), yhat_volts.ravel(), 0.0, span))
        report.val_cosine.append(cosine_similarity(y_val_volts.ravel(), yhat_volts.ravel()))

        if val_loss < best_loss:
            best_loss = val_loss
            best_params = _copy_params(params)
            best_state = _copy_adam(state)
            report.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    report.wall_clock = time.perf_counter() - t0
    return best_params, best_state, report


def predict(params, features, scaling: TargetScaling, kick: KickConfig):
    """Voltage estimate plus a self-consistency residual.

    The network predicts all four targets; the estimate is the first
    pair and the residual measures how far the predicted kicked pair is
    from sitting exactly one kick away, a cheap sanity signal at
    deployment time.  Vectorized over leading axes.
    """
    out = forward(params, features)
    volts = scaling.invert(out)
    v1, v2 = volts[..., 0], volts[..., 1]
    residual = np.maximum(
        np.abs(volts[..., 2] - v1 - kick.dv1),
        np.abs(volts[..., 3] - v2 - kick.dv2),
    )
    return v1, v2, residual


# ---------------------------------------------------------------------------
# checkpoint container: versioned self-describing text with a content checksum

_MAGIC = "tricalib-checkpoint"
_FORMAT = 1


@dataclass
class Checkpoint:
    params: list
    adam: AdamState
    sizes: list
    kick: KickConfig
    scaling: TargetScaling
    provenance: str


def _fmt_vec(vec) -> str:
    return " ".join(repr(float(x)) for x in vec)


def _tensor_lines(name, arr, out):
    arr = np.atleast_2d(arr)
    out.append(f"tensor {name} {arr.shape[0]} {arr.shape[1]}")
    for row in arr:
        out.append(_fmt_vec(row))


def save_checkpoint(path, params, adam: AdamState, kick: KickConfig,
                    scaling: TargetScaling, provenance: str = "unknown"):
    """Serialize parameters, Adam state, scaling and kick config.

    Decimal text at round-trip precision; the trailing line carries a
    SHA-256 of everything above it, so truncation or bit rot is caught
    at load time.
    """
    sizes = [params[0][0].shape[1]] + [W.shape[0] for W, _ in params]
    lines = [
        _MAGIC,
        f"format {_FORMAT}",
        "sizes " + " ".join(str(s) for s in sizes),
        f"kick {repr(float(kick.dv1))} {repr(float(kick.dv2))}",
        "scale_lo " + _fmt_vec(scaling.lo),
        "scale_hi " + _fmt_vec(scaling.hi),
        f"provenance {provenance}",
        f"adam_t {adam.t}",
    ]
    for li, (W, b) in enumerate(params):
        _tensor_lines(f"W{li}", W, lines)
        _tensor_lines(f"b{li}", b, lines)
    for label, moments in (("m", adam.m), ("v", adam.v)):
        for li, (mW, mb) in enumerate(moments):
            _tensor_lines(f"{label}W{li}", mW, lines)
            _tensor_lines(f"{label}b{li}", mb, lines)
    payload = "\n".join(lines) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)
        fh.write(f"checksum {digest}\n")


class _LineReader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.lines):
            raise CheckpointError(f"truncated checkpoint: expected {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line


def _read_tensor(reader: _LineReader, name, rows, cols):
    head = reader.next(f"tensor {name}")
    if head != f"tensor {name} {rows} {cols}":
        raise CheckpointError(f"malformed checkpoint: expected 'tensor {name} {rows} {cols}', got {head!r}")
    data = np.empty((rows, cols))
    for r in range(rows):
        parts = reader.next(f"row {r} of {name}").split()
        if len(parts) != cols:
            raise CheckpointError(f"malformed checkpoint: tensor {name} row {r} has {len(parts)} values")
        try:
            data[r] = [float(p) for p in parts]
        except ValueError as exc:
            raise CheckpointError(f"malformed checkpoint: bad number in tensor {name}") from exc
    return data


def load_checkpoint(path) -> Checkpoint:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0] != _MAGIC:
        raise CheckpointError("not a tricalib checkpoint (bad magic)")
    if not lines[-1].startswith("checksum "):
        raise CheckpointError("truncated checkpoint: missing checksum line")
    stated = lines[-1].split(" ", 1)[1].strip()
    payload = "\n".join(lines[:-1]) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    if digest != stated:
        raise CheckpointError("checksum mismatch: checkpoint corrupted or truncated")

    reader = _LineReader(lines[1:-1])
    fmt = reader.next("format line")
    if fmt != f"format {_FORMAT}":
        raise CheckpointError(f"unsupported checkpoint format: {fmt!r} (this build reads format {_FORMAT})")
    try:
        sizes = [int(s) for s in reader.next("sizes").split()[1:]]
        kick_parts = reader.next("kick").split()
        kick = KickConfig(dv1=float(kick_parts[1]), dv2=float(kick_parts[2]))
        lo = np.array([float(x) for x in reader.next("scale_lo").split()[1:]])
        hi = np.array([float(x) for x in reader.next("scale_hi").split()[1:]])
        provenance = reader.next("provenance").split(" ", 1)[1]
        adam_t = int(reader.next("adam_t").split()[1])
    except (IndexError, ValueError) as exc:
        raise CheckpointError("malformed checkpoint header") from exc
    scaling = TargetScaling(lo=lo, hi=hi)

    params = []
    for li, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        W = _read_tensor(reader, f"W{li}", n_out, n_in)
        b = _read_tensor(reader, f"b{li}", 1, n_out)[0]
        params.append((W, b))
    moments = {}
    for label in ("m", "v"):
        pairs = []
        for li, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            mW = _read_tensor(reader, f"{label}W{li}", n_out, n_in)
            mb = _read_tensor(reader, f"{label}b{li}", 1, n_out)[0]
            pairs.append((mW, mb))
        moments[label] = pairs
    adam = AdamState(m=moments["m"], v=moments["v"], t=adam_t)
    return Checkpoint(params=params, adam=adam, sizes=sizes, kick=kick,
                      scaling=scaling, provenance=provenance)
