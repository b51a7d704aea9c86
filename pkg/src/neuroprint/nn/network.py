"""Network assembly, squared-hinge training and gradient verification.

The architecture follows the compact EEG-decoding pattern: a temporal
convolution whose kernel spans half the sampling rate, a depthwise spatial
convolution across channels, and an optional separable convolution stage
(the "spectral block"), closed by a dense layer producing one margin score
per subject.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..data import Dataset
from ..errors import ConfigError, DataError
from .layers import (
    AvgPool,
    BatchNorm,
    Dense,
    DepthwiseSpatialConv,
    Dropout,
    Elu,
    Flatten,
    Layer,
    SeparableConv,
    TemporalConv,
)

CHECKPOINT_FORMAT = "neuroprint-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description.

    ``temporal_kernel`` defaults to round(fs / 2) so the first layer spans
    frequencies down to ~2 Hz at any rate.  ``use_spectral_block=False``
    removes the separable-convolution stage entirely (the ablation lever).
    """

    fs: float
    n_channels: int
    n_timepoints: int
    n_classes: int
    f1: int = 8
    depth_mult: int = 2
    f2: int = 16
    temporal_kernel: int | None = None
    sep_kernel: int = 16
    dropout_p: float = 0.25
    use_spectral_block: bool = True

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.n_classes}")
        if min(self.n_channels, self.n_timepoints, self.f1, self.depth_mult,
               self.f2) < 1:
            raise ConfigError("channels, timepoints and filter counts must be >= 1")
        if self.temporal_kernel is not None and self.temporal_kernel < 1:
            raise ConfigError("temporal_kernel must be >= 1")

    @property
    def kernel(self) -> int:
        return self.temporal_kernel or int(round(self.fs / 2.0))

    @classmethod
    def for_dataset(cls, dataset: Dataset, **overrides) -> "NetworkSpec":
        """Spec whose geometry matches a dataset's classification tensor."""
        n_pre = int(round(dataset.epochs[0].pre_onset_ms * dataset.fs / 1000.0)) \
            if dataset.epochs else 0
        n_t = (dataset.epochs[0].n_samples - n_pre) if dataset.epochs else 0
        return cls(
            fs=dataset.fs,
            n_channels=dataset.n_channels,
            n_timepoints=n_t,
            n_classes=dataset.n_subjects,
            **overrides,
        )


@dataclass
class TrainConfig:
    """Optimization parameters (defaults follow the reference protocol;
    desk-scale runs should lower ``epochs``)."""

    epochs: int = 1000
    batch_size: int = 64
    lr: float = 1e-3

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr < 0:
            raise ConfigError(f"invalid training config {self}")


class Network:
    """Trainable state: layers, batch-norm statistics, Adam moments, seed."""

    def __init__(self, spec: NetworkSpec, seed: int, layers: list[Layer]):
        self.spec = spec
        self.seed = seed
        self.layers = layers
        self.step = 0
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        for key, p in self.parameters().items():
            self.adam_m[key] = np.zeros_like(p)
            self.adam_v[key] = np.zeros_like(p)
        self._rng = np.random.default_rng(seed)

    # -- parameter plumbing -------------------------------------------------

    def _named_layers(self):
        return [(f"{i}.{layer.name}", layer) for i, layer in enumerate(self.layers)]

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, layer in self._named_layers():
            for k in sorted(layer.params):
                out[f"{prefix}.{k}"] = layer.params[k]
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, layer in self._named_layers():
            for k in sorted(layer.params):
                out[f"{prefix}.{k}"] = layer.grads[k]
        return out

    def named_buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, layer in self._named_layers():
            for k in sorted(layer.buffers):
                out[f"{prefix}.{k}"] = layer.buffers[k]
        return out

    def set_array(self, key: str, value: np.ndarray) -> None:
        idx, lname, pname = key.split(".")
        layer = self.layers[int(idx)]
        store = layer.params if pname in layer.params else layer.buffers
        store[pname] = value.reshape(store[pname].shape)

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    # -- computation --------------------------------------------------------

    def forward(self, batch: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 3 or x.shape[1:] != (self.spec.n_channels,
                                          self.spec.n_timepoints):
            raise DataError(
                f"batch shape {x.shape} does not match spec "
                f"(N, {self.spec.n_channels}, {self.spec.n_timepoints})"
            )
        rng = rng or self._rng
        x = x[:, None, :, :]
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite network scores")
        return x

    def backward(self, dscores: np.ndarray) -> None:
        g = dscores
        for layer in reversed(self.layers):
            g = layer.backward(g)


def build_network(spec: NetworkSpec, seed: int) -> Network:
    """Initialize the layer stack with scaled-uniform fan-in weights."""
    rng = np.random.default_rng(seed)
    c, t = spec.n_channels, spec.n_timepoints
    layers: list[Layer] = [
        TemporalConv(spec.f1, spec.kernel, rng),
        BatchNorm(spec.f1),
        DepthwiseSpatialConv(spec.f1, c, spec.depth_mult, rng),
        BatchNorm(spec.f1 * spec.depth_mult),
        Elu(),
        AvgPool(4),
        Dropout(spec.dropout_p),
    ]
    t_out = t // 4
    maps = spec.f1 * spec.depth_mult
    if t_out < 1:
        raise ConfigError(
            f"temporal dimension underflow: T={t} collapses to zero after pooling"
        )
    if spec.use_spectral_block:
        layers += [
            SeparableConv(maps, spec.f2, spec.sep_kernel, rng),
            BatchNorm(spec.f2),
            Elu(),
            AvgPool(8),
            Dropout(spec.dropout_p),
        ]
        t_out //= 8
        maps = spec.f2
        if t_out < 1:
            raise ConfigError(
                f"temporal dimension underflow: T={t} collapses to zero after pooling"
            )
    layers += [Flatten(), Dense(maps * t_out, spec.n_classes, rng)]
    return Network(spec, seed, layers)


def forward(state: Network, batch: np.ndarray, train_mode: bool = False):
    """Score a batch; dropout and batch statistics are live only in train mode."""
    return state.forward(batch, train=train_mode)


def squared_hinge_loss(scores: np.ndarray, labels: np.ndarray):
    """One-vs-all squared hinge: mean over N*S of max(0, 1 - y * s)^2.

    Returns (loss, gradient w.r.t. scores).  Targets are +1 for the true
    class and -1 elsewhere, so the loss is exactly 1.0 for all-zero scores
    and 0 once every margin is met.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n, s = scores.shape
    if labels.shape != (n,):
        raise DataError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= s:
        raise DataError(
            f"label out of range [0, {s}): {labels.min()}..{labels.max()}"
        )
    y = -np.ones_like(scores)
    y[np.arange(n), labels] = 1.0
    margin = np.maximum(0.0, 1.0 - y * scores)
    loss = float(np.mean(margin**2))
    grad = (2.0 * margin * (-y)) / (n * s)
    return loss, grad


def adam_step(
    state: Network,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Network:
    """Bias-corrected Adam update, applied in place.  Returns the state."""
    state.step += 1
    t = state.step
    params = state.parameters()
    for key, p in params.items():
        g = grads[key]
        if not np.all(np.isfinite(g)):
            raise DataError(f"non-finite gradient in {key}")
        m = state.adam_m[key]
        v = state.adam_v[key]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


@dataclass
class EpochStats:
    loss: float
    accuracy: float


def train(
    state: Network,
    dataset: Dataset,
    cfg: TrainConfig,
    seed: int = 0,
) -> tuple[Network, list[EpochStats]]:
    """Mini-batch squared-hinge training with Adam.

    The input state is not mutated; shuffling and dropout draw from a
    generator seeded with ``seed``, so identical calls give identical
    histories.  History has one (loss, accuracy) entry per epoch.
    """
    if not dataset.epochs:
        raise DataError("empty dataset")
    x, labels = dataset.classification_tensor()
    net = state.copy()
    rng = np.random.default_rng(seed)
    net._rng = rng
    n = x.shape[0]
    history: list[EpochStats] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        n_correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            scores = net.forward(x[idx], train=True, rng=rng)
            loss, dscores = squared_hinge_loss(scores, labels[idx])
            net.backward(dscores)
            adam_step(net, net.gradients(), lr=cfg.lr)
            total_loss += loss * len(idx)
            n_correct += int(np.sum(scores.argmax(axis=1) == labels[idx]))
        history.append(EpochStats(loss=total_loss / n, accuracy=100.0 * n_correct / n))
    return net, history


def predict(state: Network, x: np.ndarray) -> np.ndarray:
    """Eval-mode class predictions for a batch."""
    return state.forward(x, train=False).argmax(axis=1)


def gradient_check(spec: NetworkSpec | None = None, seed: int = 0) -> float:
    """Compare backprop against central finite differences on every parameter.

    Dropout is forced off (the stochastic mask is not differentiable in any
    useful sense); batch-norm runs in train mode.  Returns the maximum
    relative error.
    """
    if spec is None:
        spec = NetworkSpec(
            fs=32.0, n_channels=2, n_timepoints=64, n_classes=3,
            f1=2, depth_mult=2, f2=4, dropout_p=0.0,
        )
    spec = replace(spec, dropout_p=0.0)
    net = build_network(spec, seed)
    rng = np.random.default_rng(seed + 1)
    x = rng.standard_normal((3, spec.n_channels, spec.n_timepoints))
    labels = rng.integers(0, spec.n_classes, size=3)

    scores = net.forward(x, train=True)
    _, dscores = squared_hinge_loss(scores, labels)
    net.backward(dscores)
    analytic = {k: g.copy() for k, g in net.gradients().items()}

    def loss_at() -> float:
        s = net.forward(x, train=True)
        return squared_hinge_loss(s, labels)[0]

    eps = 1e-5
    max_rel = 0.0
    for key, p in net.parameters().items():
        flat = p.reshape(-1)
        a_flat = analytic[key].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_at()
            flat[i] = orig - eps
            down = loss_at()
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            denom = max(abs(a_flat[i]), abs(numeric), 1e-6)
            max_rel = max(max_rel, abs(a_flat[i] - numeric) / denom)
    return max_rel


# ---------------------------------------------------------------------------
# Checkpoints: length-prefixed JSON manifest + float64-LE weight blob
# ---------------------------------------------------------------------------

def save_checkpoint(state: Network, path: str | Path) -> None:
    """Serialize spec, seed, step, weights, batch-norm stats and Adam moments."""
    arrays: list[tuple[str, np.ndarray]] = []
    for key, p in state.parameters().items():
        arrays.append((f"param:{key}", p))
        arrays.append((f"adam_m:{key}", state.adam_m[key]))
        arrays.append((f"adam_v:{key}", state.adam_v[key]))
    for key, b in state.named_buffers().items():
        arrays.append((f"buffer:{key}", b))
    spec_dict = {k: getattr(state.spec, k) for k in (
        "fs", "n_channels", "n_timepoints", "n_classes", "f1", "depth_mult",
        "f2", "temporal_kernel", "sep_kernel", "dropout_p", "use_spectral_block",
    )}
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "spec": spec_dict,
        "seed": state.seed,
        "step": state.step,
        "arrays": [{"key": k, "shape": list(a.shape)} for k, a in arrays],
    }
    head = json.dumps(manifest, sort_keys=True).encode()
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in arrays)
    with open(path, "wb") as f:
        f.write(len(head).to_bytes(8, "little"))
        f.write(head)
        f.write(blob)


def load_checkpoint(path: str | Path) -> Network:
    """Rebuild a Network from a checkpoint, bit-exact."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise DataError(f"truncated checkpoint {path}")
    head_len = int.from_bytes(raw[:8], "little")
    try:
        manifest = json.loads(raw[8 : 8 + head_len].decode())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"malformed checkpoint manifest: {exc}") from exc
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"not a checkpoint file: {path}")
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {manifest.get('version')}")
    spec = NetworkSpec(**manifest["spec"])
    net = build_network(spec, int(manifest["seed"]))
    net.step = int(manifest["step"])
    offset = 8 + head_len
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += count * 8
        kind, key = entry["key"].split(":", 1)
        if kind == "param" or kind == "buffer":
            net.set_array(key, arr.astype(np.float64))
        elif kind == "adam_m":
            net.adam_m[key] = arr.astype(np.float64)
        elif kind == "adam_v":
            net.adam_v[key] = arr.astype(np.float64)
        else:
            raise DataError(f"unknown checkpoint entry {entry['key']!r}")
    return net
