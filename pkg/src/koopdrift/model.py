"""Two-layer feedforward classifier with analytic gradients.

Architecture: 2 inputs -> 4 sigmoid hidden units -> head.  Binary tasks use
a single sigmoid output trained with BCE (17 parameters); 3-class tasks use
a linear-softmax head trained with CE (27 parameters).  The full training
loss adds a squared displacement penalty toward the previous timestep's
converged parameters and an L2 weight-decay term.

Parameters travel as a single flat vector in the canonical order
rows-of-W1, b1, rows-of-W2, b2, named l1w0..l1w7, l1b0..l1b3, l2w*, l2b*.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import LabeledBatch
from .errors import NumericalError

__all__ = [
    "NetConfig",
    "net_config_for",
    "param_names",
    "layer_slices",
    "init_params",
    "flatten",
    "unflatten",
    "forward",
    "loss_and_grad",
    "accuracy",
]

HIDDEN = 4
INPUT_DIM = 2


@dataclass(frozen=True)
class NetConfig:
    n_classes: int
    input_dim: int = INPUT_DIM
    hidden: int = HIDDEN

    def __post_init__(self) -> None:
        if self.n_classes not in (2, 3):
            raise ValueError(f"n_classes must be 2 or 3, got {self.n_classes}")

    @property
    def head(self) -> str:
        return "sigmoid_bce" if self.n_classes == 2 else "softmax_ce"

    @property
    def out_dim(self) -> int:
        return 1 if self.n_classes == 2 else self.n_classes

    @property
    def n_params(self) -> int:
        h, d, o = self.hidden, self.input_dim, self.out_dim
        return h * d + h + o * h + o


def net_config_for(n_classes: int) -> NetConfig:
    return NetConfig(n_classes=n_classes)


def param_names(cfg: NetConfig) -> list[str]:
    names = [f"l1w{i}" for i in range(cfg.hidden * cfg.input_dim)]
    names += [f"l1b{i}" for i in range(cfg.hidden)]
    names += [f"l2w{i}" for i in range(cfg.out_dim * cfg.hidden)]
    names += [f"l2b{i}" for i in range(cfg.out_dim)]
    return names


def layer_slices(cfg: NetConfig) -> dict[str, slice]:
    """Canonical index ranges of the four parameter groups and two layers."""
    h, d, o = cfg.hidden, cfg.input_dim, cfg.out_dim
    n1 = h * d
    return {
        "l1w": slice(0, n1),
        "l1b": slice(n1, n1 + h),
        "l2w": slice(n1 + h, n1 + h + o * h),
        "l2b": slice(n1 + h + o * h, n1 + h + o * h + o),
        "layer1": slice(0, n1 + h),
        "layer2": slice(n1 + h, cfg.n_params),
    }


def unflatten(cfg: NetConfig, theta: np.ndarray):
    """Split a flat parameter vector into (W1, b1, W2, b2) views."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (cfg.n_params,):
        raise ValueError(f"expected {cfg.n_params} parameters, got shape {theta.shape}")
    h, d, o = cfg.hidden, cfg.input_dim, cfg.out_dim
    i = 0
    w1 = theta[i:i + h * d].reshape(h, d); i += h * d
    b1 = theta[i:i + h]; i += h
    w2 = theta[i:i + o * h].reshape(o, h); i += o * h
    b2 = theta[i:i + o]
    return w1, b1, w2, b2


def flatten(w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray) -> np.ndarray:
    return np.concatenate([w1.ravel(), b1.ravel(), w2.ravel(), b2.ravel()])


def init_params(cfg: NetConfig, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    return rng.uniform(-scale, scale, size=cfg.n_params)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(cfg: NetConfig, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a single 2-vector or an (n, 2) batch.

    Binary head: P(class 1), scalar or (n,).  Softmax head: a probability
    simplex vector, (3,) or (n, 3).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != cfg.input_dim:
        raise ValueError(f"expected inputs with {cfg.input_dim} columns, got {X.shape}")
    w1, b1, w2, b2 = unflatten(cfg, theta)
    hid = _sigmoid(X @ w1.T + b1)
    z = hid @ w2.T + b2
    if cfg.head == "sigmoid_bce":
        p = _sigmoid(z[:, 0])
        return p[0] if single else p
    p = _softmax(z)
    return p[0] if single else p


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _loss_parts(
    cfg: NetConfig,
    theta: np.ndarray,
    batch: LabeledBatch,
    theta_prev: np.ndarray | None,
    lam_s: float,
    lam_wd: float,
) -> tuple[float, float, np.ndarray]:
    """(task_loss, total_loss, grad of total_loss)."""
    X, y = batch.inputs, batch.labels
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    w1, b1, w2, b2 = unflatten(cfg, theta)
    a1 = X @ w1.T + b1
    hid = _sigmoid(a1)
    z = hid @ w2.T + b2

    if cfg.head == "sigmoid_bce":
        zz = z[:, 0]
        yy = y.astype(float)
        task = float(np.mean(_softplus(zz) - yy * zz))
        dz = ((_sigmoid(zz) - yy) / n)[:, None]
    else:
        lse = np.log(np.sum(np.exp(z - z.max(axis=1, keepdims=True)), axis=1)) + z.max(axis=1)
        task = float(np.mean(lse - z[np.arange(n), y]))
        p = _softmax(z)
        p[np.arange(n), y] -= 1.0
        dz = p / n

    dw2 = dz.T @ hid
    db2 = dz.sum(axis=0)
    dhid = dz @ w2
    da1 = dhid * hid * (1.0 - hid)
    dw1 = da1.T @ X
    db1 = da1.sum(axis=0)
    grad = flatten(dw1, db1, dw2, db2)

    total = task
    if lam_wd:
        total += 0.5 * lam_wd * float(theta @ theta)
        grad += lam_wd * theta
    if lam_s and theta_prev is not None:
        diff = theta - theta_prev
        total += lam_s * float(diff @ diff)
        grad += 2.0 * lam_s * diff

    if not (np.isfinite(total) and np.all(np.isfinite(grad))):
        raise NumericalError("non-finite loss or gradient")
    return task, total, grad


def loss_and_grad(
    cfg: NetConfig,
    theta: np.ndarray,
    batch: LabeledBatch,
    theta_prev: np.ndarray | None = None,
    lam_s: float = 0.0,
    lam_wd: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Regularized loss and its exact analytic gradient.

    ``theta_prev`` is the converged parameter vector of the previous
    timestep, held constant (no gradient flows through it); pass None to
    omit the displacement penalty entirely.
    """
    theta = np.asarray(theta, dtype=float)
    _, total, grad = _loss_parts(cfg, theta, batch, theta_prev, lam_s, lam_wd)
    return total, grad


def accuracy(cfg: NetConfig, theta: np.ndarray, batch: LabeledBatch) -> float:
    """Fraction of correctly classified rows.

    Binary threshold is 0.5 with ties to class 0; multi-class argmax breaks
    ties toward the lowest class index.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    p = forward(cfg, theta, batch.inputs)
    if cfg.head == "sigmoid_bce":
        pred = (p > 0.5).astype(np.int64)
    else:
        pred = np.argmax(p, axis=1)
    return float(np.mean(pred == batch.labels))
