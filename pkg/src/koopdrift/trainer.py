"""Sequential warm-start training with full Adam state carry-over.

Each timestep draws a fresh full batch from the drifting stream and runs
full-batch Adam epochs until the task loss (regularizers excluded) stops
improving.  The converged parameter vector of every timestep is recorded as
one column of the weight trajectory.  Between timesteps the optimizer
triple (theta, m, v) and the bias-correction counter are carried over;
setting ``carry_moments=False`` resets m, v and the counter each timestep
(the cold-moment ablation) while still warm-starting the weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import model as nn
from .datasets import DriftSpec, LabeledBatch, sample_timestep, stream_seed
from .errors import NumericalError

__all__ = [
    "TrainerState",
    "TrainConfig",
    "WeightTrajectory",
    "train_config_for",
    "init_state",
    "adam_step",
    "train_timestep",
    "run_sequence",
    "continue_sequence",
    "linear_trend_slopes",
    "trend_fraction",
    "save_trajectory",
    "load_trajectory",
]


@dataclass(frozen=True)
class TrainerState:
    theta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step_count: int
    timestep: int

    def __post_init__(self) -> None:
        if not (self.theta.shape == self.m.shape == self.v.shape):
            raise ValueError("theta, m, v must share a shape")
        if np.any(self.v < 0):
            raise ValueError("second moment must be nonnegative")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    lam_s: float = 1e-4
    lam_wd: float = 0.0
    patience: int = 50
    tolerance: float = 1e-6
    max_epochs: int = 2000
    batch_size: int = 1600
    carry_moments: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


def train_config_for(n_classes: int, **overrides) -> TrainConfig:
    """Task defaults.  Weight decay 1e-3 for both heads: the softmax head
    needs it against logit-scale runaway, and the sigmoid head needs the
    same restoring force to keep the flat directions of a near-separable
    task from random-walking between drift cycles."""
    fields = {"lam_wd": 1e-3}
    fields.update(overrides)
    return TrainConfig(**fields)


@dataclass
class WeightTrajectory:
    matrix: np.ndarray       # (n_params, n_steps), column j = theta at t_start+j
    epochs: np.ndarray       # (n_steps,) int
    accuracies: np.ndarray   # (n_steps,) train accuracy at convergence
    t_start: int = 0

    @property
    def n_steps(self) -> int:
        return self.matrix.shape[1]

    @property
    def t_values(self) -> np.ndarray:
        return np.arange(self.t_start, self.t_start + self.n_steps)

    def column(self, t: int) -> np.ndarray:
        return self.matrix[:, t - self.t_start]


def init_state(cfg: nn.NetConfig, seed) -> TrainerState:
    """Fresh state: uniform weights in [-0.5, 0.5], zero moments."""
    rng = np.random.default_rng(seed)
    theta = nn.init_params(cfg, rng)
    zeros = np.zeros(cfg.n_params)
    return TrainerState(theta=theta, m=zeros.copy(), v=zeros.copy(),
                        step_count=0, timestep=0)


def adam_step(state: TrainerState, grad: np.ndarray, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> TrainerState:
    """One bias-corrected Adam update; returns a new state."""
    if grad.shape != state.theta.shape:
        raise ValueError("gradient shape mismatch")
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient passed to adam_step")
    t = state.step_count + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    theta = state.theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return replace(state, theta=theta, m=m, v=v, step_count=t)


def train_timestep(
    state: TrainerState,
    cfg: nn.NetConfig,
    tcfg: TrainConfig,
    batch: LabeledBatch,
    theta_prev: np.ndarray | None,
) -> tuple[TrainerState, int, float]:
    """Full-batch Adam epochs with early stopping on the task loss.

    Stops once the best-seen task loss has failed to improve by a
    fractional ``tolerance`` for ``patience`` consecutive epochs, or at
    ``max_epochs``.  Returns (converged state, epochs run, train accuracy).
    """
    if state.timestep != batch.timestep:
        raise ValueError(f"state at t={state.timestep} but batch at t={batch.timestep}")
    best = np.inf
    bad = 0
    epochs = 0
    for _ in range(tcfg.max_epochs):
        try:
            task, _, grad = nn._loss_parts(cfg, state.theta, batch, theta_prev,
                                           tcfg.lam_s, tcfg.lam_wd)
        except NumericalError as e:
            raise NumericalError(f"{e} (timestep {batch.timestep}, epoch {epochs})") from e
        state = adam_step(state, grad, tcfg.learning_rate,
                          tcfg.beta1, tcfg.beta2, tcfg.eps)
        epochs += 1
        if task < best * (1.0 - tcfg.tolerance):
            best = task
            bad = 0
        else:
            bad += 1
            if bad >= tcfg.patience:
                break
    acc = nn.accuracy(cfg, state.theta, batch)
    return state, epochs, acc


def _reset_moments(state: TrainerState) -> TrainerState:
    zeros = np.zeros_like(state.theta)
    return replace(state, m=zeros.copy(), v=zeros.copy(), step_count=0)


def _sequence_loop(
    spec: DriftSpec,
    cfg: nn.NetConfig,
    tcfg: TrainConfig,
    t_values,
    state: TrainerState,
    theta_prev: np.ndarray | None,
    seed: int,
) -> tuple[WeightTrajectory, TrainerState]:
    t_values = list(t_values)
    cols = np.empty((cfg.n_params, len(t_values)))
    epochs = np.empty(len(t_values), dtype=np.int64)
    accs = np.empty(len(t_values))
    for j, t in enumerate(t_values):
        batch = sample_timestep(spec, t, tcfg.batch_size,
                                stream_seed(spec, "train", t, seed))
        state = replace(state, timestep=t)
        if not tcfg.carry_moments:
            state = _reset_moments(state)
        state, ep, acc = train_timestep(state, cfg, tcfg, batch, theta_prev)
        theta_prev = state.theta
        cols[:, j] = state.theta
        epochs[j] = ep
        accs[j] = acc
    traj = WeightTrajectory(matrix=cols, epochs=epochs, accuracies=accs,
                            t_start=t_values[0])
    return traj, state


def run_sequence(
    spec: DriftSpec,
    cfg: nn.NetConfig,
    tcfg: TrainConfig,
    t_range,
    seed: int,
) -> tuple[WeightTrajectory, TrainerState]:
    """Train sequentially over ``t_range`` (contiguous from 0).

    theta_0 is drawn uniform [-0.5, 0.5] from the run's init stream; the
    displacement penalty is omitted at t=0.  Returns the trajectory and the
    final optimizer state (for continuing into a held-out window).
    """
    t_values = list(t_range)
    if not t_values or t_values[0] != 0 or t_values != list(range(len(t_values))):
        raise ValueError("t_range must be contiguous and start at 0")
    state = init_state(cfg, stream_seed(spec, "init", 0, seed))
    return _sequence_loop(spec, cfg, tcfg, t_values, state, None, seed)


def continue_sequence(
    spec: DriftSpec,
    cfg: nn.NetConfig,
    tcfg: TrainConfig,
    state: TrainerState,
    t_range,
    seed: int,
) -> tuple[WeightTrajectory, TrainerState]:
    """Extend a trained sequence over further contiguous timesteps."""
    t_values = list(t_range)
    if not t_values or t_values[0] != state.timestep + 1:
        raise ValueError(
            f"t_range must start at {state.timestep + 1}, got {t_values[:1]}")
    if t_values != list(range(t_values[0], t_values[0] + len(t_values))):
        raise ValueError("t_range must be contiguous")
    return _sequence_loop(spec, cfg, tcfg, t_values, state, state.theta, seed)


def linear_trend_slopes(matrix: np.ndarray, t_values: np.ndarray | None = None) -> np.ndarray:
    """Per-row OLS slope of each parameter series (units per step)."""
    n_cols = matrix.shape[1]
    t = np.arange(n_cols, dtype=float) if t_values is None else np.asarray(t_values, dtype=float)
    design = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(design, matrix.T, rcond=None)
    return coef[1]


def trend_fraction(matrix: np.ndarray, rows: slice, threshold: float = 0.01) -> float:
    """Fraction of the selected parameter rows with |OLS slope| >= threshold."""
    slopes = linear_trend_slopes(matrix[rows])
    return float(np.mean(np.abs(slopes) >= threshold))


def save_trajectory(traj: WeightTrajectory, names: list[str], csv_path, json_path,
                    meta: dict | None = None) -> None:
    """CSV: rows = named parameters, columns = timesteps.  JSON sidecar
    carries epochs, accuracies and any run metadata."""
    with open(csv_path, "w") as fh:
        fh.write("param," + ",".join(str(t) for t in traj.t_values) + "\n")
        for name, row in zip(names, traj.matrix):
            fh.write(name + "," + ",".join(repr(x) for x in row) + "\n")
    doc = {
        "schema_version": 1,
        "t_start": int(traj.t_start),
        "epochs": [int(e) for e in traj.epochs],
        "accuracies": [float(a) for a in traj.accuracies],
    }
    doc.update(meta or {})
    with open(json_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trajectory(csv_path, json_path) -> tuple[WeightTrajectory, dict]:
    with open(json_path) as fh:
        doc = json.load(fh)
    with open(csv_path) as fh:
        header = fh.readline().strip().split(",")
        t_values = [int(x) for x in header[1:]]
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            rows.append([float(x) for x in parts[1:]])
    matrix = np.array(rows)
    traj = WeightTrajectory(
        matrix=matrix,
        epochs=np.array(doc["epochs"], dtype=np.int64),
        accuracies=np.array(doc["accuracies"]),
        t_start=t_values[0],
    )
    return traj, doc
