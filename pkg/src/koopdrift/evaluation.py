"""Held-out evaluation of predicted weights against the two baselines.

Every timestep of the held-out window is scored on a fresh test batch drawn
from a seed stream disjoint from training.  Three weight sequences compete:
the autonomous predictions, the frozen final training column, and the
retrained upper bound that keeps training with labels through the window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import model as nn
from .coupling import CouplingReport
from .datasets import DriftSpec, sample_timestep, stream_seed
from .trainer import TrainConfig, TrainerState, WeightTrajectory, continue_sequence

__all__ = [
    "AccuracySeries",
    "RunReport",
    "evaluate_weights",
    "frozen_baseline",
    "retrained_baseline",
    "build_report",
    "report_to_json",
]

BELOW_THRESHOLD = 0.90


@dataclass(frozen=True)
class AccuracySeries:
    mode: str                 # koopman_auto | frozen | retrained
    t_start: int
    accuracies: np.ndarray
    mean: float
    min: float
    steps_below_90: int

    @classmethod
    def from_accuracies(cls, mode: str, t_start: int, accs: np.ndarray) -> "AccuracySeries":
        accs = np.asarray(accs, dtype=float)
        return cls(
            mode=mode,
            t_start=t_start,
            accuracies=accs,
            mean=float(accs.mean()),
            min=float(accs.min()),
            steps_below_90=int(np.sum(accs < BELOW_THRESHOLD)),
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "t_start": self.t_start,
            "accuracies": [float(a) for a in self.accuracies],
            "mean": self.mean,
            "min": self.min,
            "steps_below_90": self.steps_below_90,
        }


def evaluate_weights(
    spec: DriftSpec,
    cfg: nn.NetConfig,
    theta_seq: np.ndarray,
    t_range,
    test_seed: int,
    n_test: int = 400,
    mode: str = "koopman_auto",
) -> AccuracySeries:
    """Score one weight column per timestep on fresh test batches."""
    t_values = list(t_range)
    theta_seq = np.asarray(theta_seq, dtype=float)
    if theta_seq.shape[1] != len(t_values):
        raise ValueError(
            f"{theta_seq.shape[1]} weight columns for {len(t_values)} timesteps")
    accs = np.empty(len(t_values))
    for j, t in enumerate(t_values):
        batch = sample_timestep(spec, t, n_test, stream_seed(spec, "test", t, test_seed))
        accs[j] = nn.accuracy(cfg, theta_seq[:, j], batch)
    return AccuracySeries.from_accuracies(mode, t_values[0], accs)


def frozen_baseline(W: WeightTrajectory, horizon: int) -> np.ndarray:
    """The final training column repeated over the held-out horizon."""
    return np.repeat(W.matrix[:, -1:], horizon, axis=1)


def retrained_baseline(
    spec: DriftSpec,
    cfg: nn.NetConfig,
    tcfg: TrainConfig,
    state_at_end: TrainerState,
    t_range,
    seed: int,
) -> WeightTrajectory:
    """Continue the warm-start protocol with labels through the held-out
    window; the per-timestep upper bound."""
    traj, _ = continue_sequence(spec, cfg, tcfg, state_at_end, t_range, seed)
    return traj


@dataclass
class RunReport:
    dataset: str
    seed: int
    config_hash: str
    train_acc_mean: float
    train_acc_min: float
    epochs_mean_warm: float
    epochs_mean_cold: float
    strategy: str
    pca_components: int
    n_params: int
    spectral_radius_raw: float
    spectral_radius: float
    koopman_auto: AccuracySeries
    frozen: AccuracySeries
    retrained: AccuracySeries
    coupling: dict | None = None           # summary dict, or None when not reported
    coupling_not_reported_reason: str = ""
    extras: dict = field(default_factory=dict)


def build_report(
    *,
    dataset: str,
    seed: int,
    config_hash: str,
    train_accuracies: np.ndarray,
    epochs_warm: np.ndarray,
    epochs_cold: np.ndarray,
    strategy: str,
    pca_components: int,
    n_params: int,
    spectral_radius_raw: float,
    spectral_radius: float,
    koopman_auto: AccuracySeries,
    frozen: AccuracySeries,
    retrained: AccuracySeries,
    coupling: CouplingReport | dict | None,
    coupling_not_reported_reason: str = "",
    extras: dict | None = None,
) -> RunReport:
    """Assemble one result row; raises if a mandatory stage is absent."""
    for name, val in (("train_accuracies", train_accuracies),
                      ("epochs_warm", epochs_warm), ("epochs_cold", epochs_cold)):
        if val is None or len(val) == 0:
            raise ValueError(f"missing mandatory stage output: {name}")
    if coupling is None and not coupling_not_reported_reason:
        raise ValueError("coupling must be present or explicitly marked not-reported")
    summary = coupling.summary() if isinstance(coupling, CouplingReport) else coupling
    return RunReport(
        dataset=dataset,
        seed=seed,
        config_hash=config_hash,
        train_acc_mean=float(np.mean(train_accuracies)),
        train_acc_min=float(np.min(train_accuracies)),
        epochs_mean_warm=float(np.mean(epochs_warm)),
        epochs_mean_cold=float(np.mean(epochs_cold)),
        strategy=strategy,
        pca_components=pca_components,
        n_params=n_params,
        spectral_radius_raw=spectral_radius_raw,
        spectral_radius=spectral_radius,
        koopman_auto=koopman_auto,
        frozen=frozen,
        retrained=retrained,
        coupling=summary,
        coupling_not_reported_reason=coupling_not_reported_reason,
        extras=extras or {},
    )


def report_to_json(report: RunReport) -> str:
    doc = {
        "schema_version": 1,
        "dataset": report.dataset,
        "seed": report.seed,
        "config_hash": report.config_hash,
        "training": {
            "mean_train_acc": report.train_acc_mean,
            "min_train_acc": report.train_acc_min,
            "mean_epochs_warm": report.epochs_mean_warm,
            "mean_epochs_cold": report.epochs_mean_cold,
        },
        "koopman": {
            "strategy": report.strategy,
            "pca_components": report.pca_components,
            "n_params": report.n_params,
            "spectral_radius_raw": report.spectral_radius_raw,
            "spectral_radius": report.spectral_radius,
        },
        "series": {
            "koopman_auto": report.koopman_auto.to_dict(),
            "frozen": report.frozen.to_dict(),
            "retrained": report.retrained.to_dict(),
        },
        "gap_to_retrained": report.retrained.mean - report.koopman_auto.mean,
        "coupling": report.coupling if report.coupling is not None
        else {"not_reported": report.coupling_not_reported_reason},
        "extras": report.extras,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> dict:
    return json.loads(text)


def table_row_csv(report: RunReport) -> str:
    """One summary row mirroring the headline result table."""
    cols = [
        ("dataset", report.dataset),
        ("n_params", report.n_params),
        ("mean_train_acc", report.train_acc_mean),
        ("min_train_acc", report.train_acc_min),
        ("strategy", report.strategy),
        ("pcs", report.pca_components),
        ("spectral_radius", report.spectral_radius),
        ("auto_mean", report.koopman_auto.mean),
        ("auto_min", report.koopman_auto.min),
        ("auto_below90", report.koopman_auto.steps_below_90),
        ("retrained_mean", report.retrained.mean),
        ("frozen_mean", report.frozen.mean),
        ("frozen_below90", report.frozen.steps_below_90),
        ("dcor_mean", report.coupling.get("dcor_mean_offdiag", "NR") if report.coupling else "NR"),
        ("dcor_frac_above_half", report.coupling.get("dcor_frac_above_half", "NR") if report.coupling else "NR"),
        ("te_ratio_l1_l2", report.coupling.get("te_ratio_l1_l2", "NR") if report.coupling else "NR"),
    ]
    header = ",".join(k for k, _ in cols)
    values = ",".join(repr(v) if isinstance(v, float) else str(v) for _, v in cols)
    return header + "\n" + values + "\n"
