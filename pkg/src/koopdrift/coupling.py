"""Pairwise dependence diagnostics over the training-window trajectory.

Distance correlation catches linear and nonlinear co-variation between
parameter series; transfer entropy (plug-in estimate on quantile-binned
series, history length 1) measures directed information flow.  Layer-block
summaries condense both into the scalar diagnostics of a run report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import NetConfig, layer_slices
from .trainer import WeightTrajectory

__all__ = [
    "CouplingReport",
    "distance_correlation",
    "transfer_entropy",
    "conditional_entropy_rate",
    "coupling_report",
]

DEFAULT_BINS = 8


def _centered_distances(x: np.ndarray) -> np.ndarray:
    d = np.abs(x[:, None] - x[None, :])
    return d - d.mean(axis=0, keepdims=True) - d.mean(axis=1, keepdims=True) + d.mean()


def distance_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Sample distance correlation of two scalar series, in [0, 1].

    Computed from doubly-centered distance matrices; returns 0 when either
    series has zero distance variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series length mismatch")
    if x.ndim != 1 or x.size < 4:
        raise ValueError("need 1-D series of length >= 4")
    a = _centered_distances(x)
    b = _centered_distances(y)
    return _dcor_from_centered(a, b)


def _dcor_from_centered(a: np.ndarray, b: np.ndarray) -> float:
    n2 = a.size
    dcov2 = max((a * b).sum() / n2, 0.0)
    dvar_x = (a * a).sum() / n2
    dvar_y = (b * b).sum() / n2
    if dvar_x <= 0.0 or dvar_y <= 0.0:
        return 0.0
    return float(min(np.sqrt(dcov2 / np.sqrt(dvar_x * dvar_y)), 1.0))


def _quantile_codes(x: np.ndarray, bins: int) -> np.ndarray:
    # Equal-frequency edges; repeated quantiles (heavy ties) just merge bins.
    edges = np.quantile(x, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.digitize(x, edges)


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def _te_from_codes(cx: np.ndarray, cy: np.ndarray, bins: int) -> tuple[float, float]:
    """(TE x->y, H(Y_t | Y_{t-1})) in nats from pre-binned codes."""
    yt, yp, xp = cy[1:], cy[:-1], cx[:-1]
    joint3 = np.bincount((yt * bins + yp) * bins + xp, minlength=bins ** 3)
    joint_yp_xp = np.bincount(yp * bins + xp, minlength=bins ** 2)
    joint_yt_yp = np.bincount(yt * bins + yp, minlength=bins ** 2)
    marg_yp = np.bincount(yp, minlength=bins)
    h_y_given_past = _entropy(joint_yt_yp) - _entropy(marg_yp)
    h_y_given_both = _entropy(joint3) - _entropy(joint_yp_xp)
    return max(h_y_given_past - h_y_given_both, 0.0), h_y_given_past


def transfer_entropy(x: np.ndarray, y: np.ndarray, bins: int = DEFAULT_BINS) -> float:
    """Directed information flow x -> y, in nats, clipped at zero.

    Plug-in estimate H(Y_t | Y_{t-1}) - H(Y_t | Y_{t-1}, X_{t-1}) from a
    three-way histogram over equal-frequency bins.  Constant series carry
    no entropy and give 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series length mismatch")
    if x.ndim != 1 or x.size < 20:
        raise ValueError("need 1-D series of length >= 20")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    te, _ = _te_from_codes(_quantile_codes(x, bins), _quantile_codes(y, bins), bins)
    return te


def conditional_entropy_rate(y: np.ndarray, bins: int = DEFAULT_BINS) -> float:
    """H(Y_t | Y_{t-1}) in nats on quantile-binned codes (the TE normalizer)."""
    cy = _quantile_codes(np.asarray(y, dtype=float), bins)
    _, h = _te_from_codes(cy, cy, bins)
    return h


@dataclass(frozen=True)
class CouplingReport:
    dcor_matrix: np.ndarray       # symmetric, unit diagonal for non-constant rows
    te_matrix: np.ndarray         # raw TE(i -> j), zero diagonal
    te_norm_matrix: np.ndarray    # TE / H(Y_t | Y_{t-1}) per target column
    dcor_mean_offdiag: float
    dcor_frac_above_half: float
    te_ratio_l1_l2: float
    window: tuple[int, int]

    def summary(self) -> dict:
        return {
            "dcor_mean_offdiag": self.dcor_mean_offdiag,
            "dcor_frac_above_half": self.dcor_frac_above_half,
            "te_ratio_l1_l2": self.te_ratio_l1_l2,
            "window": list(self.window),
        }


def coupling_report(
    W: WeightTrajectory,
    cfg: NetConfig,
    bins: int = DEFAULT_BINS,
    jobs: int = 1,
) -> CouplingReport:
    """Full pairwise dCor and TE matrices plus layer-block summaries.

    The block ratio is the mean normalized TE over (layer-1 source,
    layer-2 target) pairs divided by the reverse block.
    """
    series = W.matrix
    n = series.shape[0]
    if n != cfg.n_params:
        raise ValueError(f"trajectory has {n} rows but config expects {cfg.n_params}")
    if series.shape[1] < 50:
        raise ValueError("coupling window must span at least 50 timesteps")

    centered = [_centered_distances(row) for row in series]
    dcor = np.empty((n, n))

    def _dcor_row(i: int) -> None:
        for j in range(i, n):
            dcor[i, j] = dcor[j, i] = _dcor_from_centered(centered[i], centered[j])

    codes = [_quantile_codes(row, bins) for row in series]
    te = np.zeros((n, n))
    te_norm = np.zeros((n, n))

    def _te_col(j: int) -> None:
        for i in range(n):
            if i == j:
                continue
            te_ij, h = _te_from_codes(codes[i], codes[j], bins)
            te[i, j] = te_ij
            te_norm[i, j] = te_ij / h if h > 0 else 0.0

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_dcor_row, range(n)))
            list(pool.map(_te_col, range(n)))
    else:
        for i in range(n):
            _dcor_row(i)
        for j in range(n):
            _te_col(j)

    off = ~np.eye(n, dtype=bool)
    sl = layer_slices(cfg)
    l1 = np.arange(n)[sl["layer1"]]
    l2 = np.arange(n)[sl["layer2"]]
    fwd = te_norm[np.ix_(l1, l2)].mean()
    rev = te_norm[np.ix_(l2, l1)].mean()
    t_vals = W.t_values
    return CouplingReport(
        dcor_matrix=dcor,
        te_matrix=te,
        te_norm_matrix=te_norm,
        dcor_mean_offdiag=float(dcor[off].mean()),
        dcor_frac_above_half=float((dcor[off] > 0.5).mean()),
        te_ratio_l1_l2=float(fwd / rev) if rev > 0 else float("inf"),
        window=(int(t_vals[0]), int(t_vals[-1])),
    )


def matrix_to_csv(matrix: np.ndarray, names: list[str], path) -> None:
    """Square matrix as CSV with canonical parameter-name headers."""
    with open(path, "w") as fh:
        fh.write("param," + ",".join(names) + "\n")
        for name, row in zip(names, matrix):
            fh.write(name + "," + ",".join(repr(x) for x in row) + "\n")


def matrix_from_csv(path) -> tuple[np.ndarray, list[str]]:
    with open(path) as fh:
        names = fh.readline().strip().split(",")[1:]
        rows = [[float(x) for x in line.strip().split(",")[1:]] for line in fh]
    return np.array(rows), names
