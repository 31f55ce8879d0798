"""Feed-forward regression network: forward pass, backprop, Nadam, storage.

The network maps a flat window feature vector to 2s+1 waypoint fractions.
Hidden layers use the logistic sigmoid; the output layer uses the hard
sigmoid ``clamp(0.2 z + 0.5, 0, 1)`` so predictions always land in [0, 1].
Training minimizes the mean Huber loss over the outputs with the
Nesterov-momentum Adam (Nadam) update.

Everything is plain float64 numpy, deterministic under a fixed seed, and
serializable to a versioned decimal-text model file that round-trips
parameters bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFile,
    EmptyDataset,
    IncompatibleModel,
    ShapeMismatch,
    VersionMismatch,
)
from .windows import DEFAULT_L_REF, FEATURE_ORDER, Window

MODEL_FORMAT = "raceline-mlp/1"
DEFAULT_HIDDEN = (450, 200, 200)


@dataclass
class MlpModel:
    """Layer parameters plus the window metadata needed at inference time.

    ``weights[k]`` has shape (out, in); ``biases[k]`` shape (out,).  The
    metadata records the window configuration the model was built for so a
    saved model can only be applied to compatible inputs.
    """

    layer_sizes: tuple
    weights: list
    biases: list
    foresight: int
    sampling: int
    l_ref: float = DEFAULT_L_REF
    feature_order: str = FEATURE_ORDER
    hidden_activation: str = "sigmoid"
    output_activation: str = "hard_sigmoid"

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeMismatch("one weight matrix and bias vector per layer transition")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[k + 1], sizes[k]) or b.shape != (sizes[k + 1],):
                raise ShapeMismatch(
                    f"layer {k}: weights {w.shape} biases {b.shape} do not chain {sizes}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeMismatch(f"layer {k} contains non-finite parameters")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            foresight=self.foresight,
            sampling=self.sampling,
            l_ref=self.l_ref,
            feature_order=self.feature_order,
            hidden_activation=self.hidden_activation,
            output_activation=self.output_activation,
        )


@dataclass(frozen=True)
class TrainConfig:
    huber_delta: float = 1.0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 256
    epochs: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.huber_delta <= 0 or self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("huber_delta, learning_rate and epsilon must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be at least 1")


@dataclass
class NadamState:
    """First/second moment accumulators and the shared step counter."""

    m: list
    v: list
    t: int = 0

    @classmethod
    def for_params(cls, params: list) -> "NadamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def init_model(foresight: int, sampling: int, hidden=DEFAULT_HIDDEN,
               l_ref: float = DEFAULT_L_REF, seed: int = 0) -> MlpModel:
    """Glorot-uniform initialized model for a window configuration."""
    sizes = (3 * (2 * foresight + 1), *hidden, 2 * sampling + 1)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_sizes=sizes, weights=weights, biases=biases,
                    foresight=foresight, sampling=sampling, l_ref=l_ref)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign to stay overflow-free for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _hard_sigmoid(z: np.ndarray) -> np.ndarray:
    return np.clip(0.2 * z + 0.5, 0.0, 1.0)


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Network output for a single feature vector or a batch of them."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.ndim != 2 or a.shape[1] != model.n_inputs:
        raise ShapeMismatch(f"input shape {x.shape} incompatible with {model.n_inputs} inputs")
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        a = _sigmoid(a @ w.T + b)
    out = _hard_sigmoid(a @ model.weights[-1].T + model.biases[-1])
    return out[0] if single else out


def huber(residual, delta: float = 1.0):
    """Huber loss and its derivative w.r.t. the residual, elementwise.

    Quadratic ``r^2/2`` for |r| <= delta, linear ``delta (|r| - delta/2)``
    beyond; both value and gradient are continuous at the joint.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    r = np.asarray(residual, dtype=float)
    ar = np.abs(r)
    loss = np.where(ar <= delta, 0.5 * r * r, delta * (ar - 0.5 * delta))
    grad = np.clip(r, -delta, delta)
    if np.isscalar(residual) or r.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def backward(model: MlpModel, x: np.ndarray, target: np.ndarray,
             delta: float = 1.0):
    """Analytic gradients of the mean Huber loss over outputs (and batch).

    Returns ``(loss, weight_grads, bias_grads)``.  The hard-sigmoid output
    passes gradient 0.2 inside its linear region and zero where clamped.
    """
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    y = target[None, :] if single else target
    if a.shape[1] != model.n_inputs or y.shape != (a.shape[0], model.n_outputs):
        raise ShapeMismatch(
            f"batch {a.shape} with targets {target.shape} does not fit "
            f"{model.n_inputs}->{model.n_outputs}"
        )
    activations = [a]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        a = _sigmoid(a @ w.T + b)
        activations.append(a)
    z_out = activations[-1] @ model.weights[-1].T + model.biases[-1]
    pred = _hard_sigmoid(z_out)

    n_terms = pred.size
    losses, dres = huber(pred - y, delta)
    loss = float(np.sum(losses)) / n_terms
    # clamp derivative: 0.2 strictly inside the linear region, else zero
    lin = 0.2 * z_out + 0.5
    dz = (dres / n_terms) * np.where((lin > 0.0) & (lin < 1.0), 0.2, 0.0)

    weight_grads = [None] * len(model.weights)
    bias_grads = [None] * len(model.biases)
    for k in range(len(model.weights) - 1, -1, -1):
        weight_grads[k] = dz.T @ activations[k]
        bias_grads[k] = dz.sum(axis=0)
        if k > 0:
            da = dz @ model.weights[k]
            ak = activations[k]
            dz = da * ak * (1.0 - ak)
    return loss, weight_grads, bias_grads


def nadam_step(state: NadamState, params: list, grads: list,
               cfg: TrainConfig) -> tuple[list, NadamState]:
    """One Nesterov-momentum Adam update, in place on ``params``.

    With step count t (after increment), moments m and v and gradient g:

        m = b1 m + (1-b1) g
        v = b2 v + (1-b2) g^2
        m_hat = b1 m / (1 - b1^(t+1)) + (1-b1) g / (1 - b1^t)
        v_hat = v / (1 - b2^t)
        p    -= lr * m_hat / (sqrt(v_hat) + eps)
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("params, grads and optimizer state must align")
    state.t += 1
    t = state.t
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** (t + 1)
    c1_prev = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = b1 * m / c1 + (1.0 - b1) * g / c1_prev
        v_hat = v / c2
        p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return params, state


def _as_xy(dataset) -> tuple[np.ndarray, np.ndarray]:
    """Accept (X, Y) arrays or a list of target-bearing Windows."""
    if isinstance(dataset, tuple):
        x, y = dataset
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    rows = [w for w in dataset if isinstance(w, Window)]
    if len(rows) != len(dataset):
        raise ShapeMismatch("dataset must be (X, Y) arrays or a list of Windows")
    if any(w.targets is None for w in rows):
        raise EmptyDataset("training windows must carry targets")
    return (np.array([w.features for w in rows]),
            np.array([w.targets for w in rows]))


def train(model: MlpModel, dataset, cfg: TrainConfig = TrainConfig(),
          validation=None):
    """Minibatch Nadam training; returns (trained model, history).

    The input model is left untouched; training runs on a copy.  ``history``
    maps ``train_loss`` (and ``val_loss`` when a validation set is given) to
    per-epoch values.  Shuffling is driven by ``cfg.seed`` only, so repeated
    runs are bit-identical.
    """
    x, y = _as_xy(dataset)
    if x.shape[0] == 0:
        raise EmptyDataset("no training windows")
    if x.ndim != 2 or y.shape != (x.shape[0], model.n_outputs) or x.shape[1] != model.n_inputs:
        raise ShapeMismatch(
            f"dataset {x.shape}/{y.shape} does not fit model "
            f"{model.n_inputs}->{model.n_outputs}"
        )
    val = None if validation is None else _as_xy(validation)
    out = model.copy()
    params = out.weights + out.biases
    state = NadamState.for_params(params)
    rng = np.random.default_rng(cfg.seed)
    history: dict = {"train_loss": []}
    if val is not None:
        history["val_loss"] = []
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            sel = order[lo:lo + cfg.batch_size]
            loss, wg, bg = backward(out, x[sel], y[sel], cfg.huber_delta)
            nadam_step(state, params, wg + bg, cfg)
            total += loss * sel.shape[0]
        history["train_loss"].append(total / n)
        if val is not None:
            res = forward(out, val[0]) - val[1]
            history["val_loss"].append(float(np.mean(huber(res, cfg.huber_delta)[0])))
    return out, history


def evaluate_loss(model: MlpModel, dataset, delta: float = 1.0) -> float:
    """Mean Huber loss of the model over a dataset, without training."""
    x, y = _as_xy(dataset)
    return float(np.mean(huber(forward(model, x) - y, delta)[0]))


def _fmt_vec(vec: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in vec)


def save_model(model: MlpModel, path: str) -> None:
    """Write a model to a versioned decimal-text file (exact round-trip)."""
    lines = [f"format {MODEL_FORMAT}"]
    lines.append(f"foresight {model.foresight}")
    lines.append(f"sampling {model.sampling}")
    lines.append(f"l_ref {model.l_ref!r}")
    lines.append(f"feature_order {model.feature_order}")
    lines.append(f"hidden_activation {model.hidden_activation}")
    lines.append(f"output_activation {model.output_activation}")
    lines.append("layer_sizes " + " ".join(str(s) for s in model.layer_sizes))
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"weights {k} {w.shape[0]} {w.shape[1]}")
        lines.extend(_fmt_vec(row) for row in w)
        lines.append(f"biases {k} {b.shape[0]}")
        lines.append(_fmt_vec(b))
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> MlpModel:
    """Read a model file written by :func:`save_model`.

    Raises :class:`CorruptFile` on truncation or malformed content and
    :class:`VersionMismatch` on an unknown format version.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    it = iter(lines)

    def next_line() -> str:
        try:
            return next(it)
        except StopIteration:
            raise CorruptFile(f"{path}: unexpected end of file") from None

    header = next_line().split(maxsplit=1)
    if len(header) != 2 or header[0] != "format":
        raise CorruptFile(f"{path}: missing format header")
    if header[1] != MODEL_FORMAT:
        raise VersionMismatch(f"{path}: format {header[1]!r}, expected {MODEL_FORMAT!r}")
    meta = {}
    for _ in range(6):
        key, _, value = next_line().partition(" ")
        meta[key] = value
    sizes_line = next_line().split()
    if not sizes_line or sizes_line[0] != "layer_sizes":
        raise CorruptFile(f"{path}: missing layer_sizes")
    try:
        sizes = tuple(int(s) for s in sizes_line[1:])
        foresight = int(meta["foresight"])
        sampling = int(meta["sampling"])
        l_ref = float(meta["l_ref"])
    except (KeyError, ValueError) as exc:
        raise CorruptFile(f"{path}: bad metadata ({exc})") from None
    weights, biases = [], []
    try:
        for k in range(len(sizes) - 1):
            tag, idx, rows, cols = next_line().split()
            if tag != "weights" or int(idx) != k:
                raise CorruptFile(f"{path}: expected weights block {k}")
            w = np.array([[float(v) for v in next_line().split()] for _ in range(int(rows))])
            if w.shape != (int(rows), int(cols)):
                raise CorruptFile(f"{path}: weights block {k} has wrong shape")
            tag, idx, count = next_line().split()
            if tag != "biases" or int(idx) != k:
                raise CorruptFile(f"{path}: expected biases block {k}")
            b = np.array([float(v) for v in next_line().split()])
            if b.shape != (int(count),):
                raise CorruptFile(f"{path}: biases block {k} has wrong shape")
            weights.append(w)
            biases.append(b)
    except (ValueError, CorruptFile) as exc:
        if isinstance(exc, CorruptFile):
            raise
        raise CorruptFile(f"{path}: malformed parameter block ({exc})") from None
    if next_line() != "end":
        raise CorruptFile(f"{path}: missing end marker")
    try:
        return MlpModel(
            layer_sizes=sizes, weights=weights, biases=biases,
            foresight=foresight, sampling=sampling, l_ref=l_ref,
            feature_order=meta.get("feature_order", FEATURE_ORDER),
            hidden_activation=meta.get("hidden_activation", "sigmoid"),
            output_activation=meta.get("output_activation", "hard_sigmoid"),
        )
    except ShapeMismatch as exc:
        raise CorruptFile(f"{path}: {exc}") from None


def require_window_config(model: MlpModel, foresight: int, sampling: int,
                          l_ref: float = DEFAULT_L_REF) -> None:
    """Guard a loaded model against a different window configuration."""
    if (model.foresight, model.sampling) != (foresight, sampling) or model.l_ref != l_ref:
        raise VersionMismatch(
            f"model built for f={model.foresight}, s={model.sampling}, "
            f"l_ref={model.l_ref}; requested f={foresight}, s={sampling}, l_ref={l_ref}"
        )


def check_pipeline_compat(model: MlpModel) -> None:
    """Model metadata must agree with its own layer shapes."""
    expect_in = 3 * (2 * model.foresight + 1)
    expect_out = 2 * model.sampling + 1
    if model.n_inputs != expect_in or model.n_outputs != expect_out:
        raise IncompatibleModel(
            f"layer sizes {model.layer_sizes} inconsistent with "
            f"f={model.foresight} (wants {expect_in} inputs) and "
            f"s={model.sampling} (wants {expect_out} outputs)"
        )
