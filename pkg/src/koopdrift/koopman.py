"""Linear operator identification of weight trajectories and autonomous rollout.

Pipeline: (optional per-parameter linear detrend) -> per-parameter z-score
-> projection onto leading principal directions -> observable lift
[1, z, sin(k*w*t), cos(k*w*t)] -> least-squares operator fit from
consecutive snapshot pairs -> eigenvalue rescale so the spectral radius
stays at or below one.

Prediction propagates the lifted state by repeated multiplication with the
fitted operator, reads the latent coordinates back out each step, and
inverts the projection/scaling (re-adding the extrapolated linear trend
when one was removed) to recover usable weight vectors.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .trainer import WeightTrajectory

__all__ = [
    "Scaler",
    "TrendModel",
    "PcaBasis",
    "DictionarySpec",
    "KoopmanModel",
    "standardize",
    "inverse_standardize",
    "fit_pca",
    "detrend",
    "retrend",
    "lift",
    "lift_matrix",
    "edmd_fit",
    "spectral_radius",
    "enforce_spectral_radius",
    "fit_koopman",
    "rollout",
    "reconstruct_weights",
    "encode_column",
    "model_to_json",
    "model_from_json",
    "eigenvalues_to_csv",
]

STD_FLOOR = 1e-8
PINV_RCOND = 1e-10
EIG_COND_LIMIT = 1e12
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray            # floored; 1.0 on degenerate rows
    degenerate: np.ndarray     # rows with raw std below the floor


@dataclass(frozen=True)
class TrendModel:
    intercepts: np.ndarray
    slopes: np.ndarray


@dataclass(frozen=True)
class PcaBasis:
    components: np.ndarray          # (p, n_params), orthonormal rows
    explained_variance: np.ndarray  # (p,)
    explained_ratio: float          # cumulative ratio captured by the p rows
    threshold: float

    @property
    def p(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class DictionarySpec:
    p: int
    harmonics: int = 4
    period: int = 100

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def lifted_dim(self) -> int:
        return self.p + 2 * self.harmonics + 1


@dataclass(frozen=True)
class KoopmanModel:
    scaler: Scaler
    trend: TrendModel | None
    basis: PcaBasis
    dict_spec: DictionarySpec
    A: np.ndarray
    eigenvalues: np.ndarray
    spectral_radius: float        # after enforcement
    spectral_radius_raw: float    # of the unconstrained least-squares fit
    strategy: str                 # "fourier" or "detrend_fourier"
    t_last: int                   # timestep of the final training column
    config_hash: str = ""


def standardize(W) -> tuple[np.ndarray, Scaler]:
    """Z-score each parameter row over the training window.

    Rows whose standard deviation falls below the floor are mapped to zeros
    (their scaler std is set to 1 so the inverse returns the row mean).
    """
    matrix = W.matrix if isinstance(W, WeightTrajectory) else np.asarray(W, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] < 2:
        raise ValueError("need a matrix with at least 2 columns")
    mean = matrix.mean(axis=1)
    std = matrix.std(axis=1)
    degenerate = std < STD_FLOOR
    std_eff = np.where(degenerate, 1.0, std)
    z = (matrix - mean[:, None]) / std_eff[:, None]
    z[degenerate] = 0.0
    return z, Scaler(mean=mean, std=std_eff, degenerate=degenerate)


def inverse_standardize(z: np.ndarray, scaler: Scaler) -> np.ndarray:
    return z * scaler.std[:, None] + scaler.mean[:, None]


def fit_pca(zscored: np.ndarray, threshold: float = 0.995) -> PcaBasis:
    """Minimal set of leading principal directions reaching the variance
    threshold; p is capped at the numerical rank of the input."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    u, s, _ = np.linalg.svd(zscored, full_matrices=False)
    var = s ** 2
    total = var.sum()
    if total <= 0:
        raise ValueError("input has no variance")
    rank = int(np.sum(s > s[0] * 1e-12))
    cum = np.cumsum(var) / total
    p = int(np.searchsorted(cum, threshold - 1e-12) + 1)
    p = min(p, rank)
    n_cols = zscored.shape[1]
    return PcaBasis(
        components=u[:, :p].T.copy(),
        explained_variance=var[:p] / n_cols,
        explained_ratio=float(cum[p - 1]),
        threshold=threshold,
    )


def detrend(W) -> tuple[np.ndarray, TrendModel]:
    """Remove a per-parameter OLS line a + b*t fit over the window."""
    matrix = W.matrix if isinstance(W, WeightTrajectory) else np.asarray(W, dtype=float)
    t_start = W.t_start if isinstance(W, WeightTrajectory) else 0
    if matrix.ndim != 2 or matrix.shape[1] < 3:
        raise ValueError("need a matrix with at least 3 columns")
    t = np.arange(t_start, t_start + matrix.shape[1], dtype=float)
    design = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(design, matrix.T, rcond=None)
    trend = TrendModel(intercepts=coef[0], slopes=coef[1])
    residual = matrix - (design @ coef).T
    return residual, trend


def retrend(residual: np.ndarray, trend: TrendModel, t_values: np.ndarray) -> np.ndarray:
    t = np.asarray(t_values, dtype=float)
    return residual + trend.intercepts[:, None] + trend.slopes[:, None] * t[None, :]


def lift(z: np.ndarray, t: float, dict_spec: DictionarySpec) -> np.ndarray:
    """Observable vector [1, z_1..z_p, sin(wt), cos(wt), ..., sin(Kwt), cos(Kwt)]."""
    z = np.asarray(z, dtype=float)
    if z.shape != (dict_spec.p,):
        raise ValueError(f"expected latent dimension {dict_spec.p}, got {z.shape}")
    k = np.arange(1, dict_spec.harmonics + 1)
    angles = k * dict_spec.omega * t
    fourier = np.empty(2 * dict_spec.harmonics)
    fourier[0::2] = np.sin(angles)
    fourier[1::2] = np.cos(angles)
    return np.concatenate([[1.0], z, fourier])


def lift_matrix(scores: np.ndarray, t_values: np.ndarray, dict_spec: DictionarySpec) -> np.ndarray:
    """Columns of lifted observables for a (p, T) score matrix."""
    return np.column_stack([
        lift(scores[:, j], t, dict_spec) for j, t in enumerate(t_values)
    ])


def edmd_fit(lifted_minus: np.ndarray, lifted_plus: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares operator mapping each lifted snapshot to
    its successor, via SVD pseudoinverse with relative cutoff."""
    if lifted_minus.shape != lifted_plus.shape:
        raise ValueError("snapshot matrices must share a shape")
    n, m = lifted_minus.shape
    if m < n:
        warnings.warn(
            f"only {m} snapshot pairs for a {n}-dimensional operator; "
            "fit is underdetermined", stacklevel=2)
    try:
        pinv = np.linalg.pinv(lifted_minus, rcond=PINV_RCOND)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"pseudoinverse failed: {e}") from e
    A = lifted_plus @ pinv
    if not np.all(np.isfinite(A)):
        raise NumericalError("non-finite operator from least squares")
    return A


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def enforce_spectral_radius(A: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Rescale eigenvalues with modulus >= 1 to modulus 1-eps, preserving
    phase, and rebuild the operator in its eigenbasis.

    Returns A unchanged when the spectral radius is already below 1.  A
    near-defective eigenbasis (condition number above the limit) falls back
    to a uniform rescale of the whole matrix.
    """
    lam, vecs = np.linalg.eig(A)
    moduli = np.abs(lam)
    if moduli.max() < 1.0:
        return A
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > EIG_COND_LIMIT:
        warnings.warn(
            f"eigenbasis condition number {cond:.2e} above limit; "
            "applying uniform spectral rescale", stacklevel=2)
        return A * (1.0 - eps) / moduli.max()
    scale = np.where(moduli >= 1.0, (1.0 - eps) / moduli, 1.0)
    rebuilt = vecs @ np.diag(lam * scale) @ np.linalg.inv(vecs)
    return np.real(rebuilt)


def fit_koopman(
    W: WeightTrajectory,
    period: int = 100,
    strategy: str = "fourier",
    harmonics: int = 4,
    pca_threshold: float = 0.995,
    eps: float = DEFAULT_EPS,
    config_hash: str = "",
) -> KoopmanModel:
    """Fit the full model on a training-window trajectory.

    ``strategy`` is "fourier" or "detrend_fourier"; the latter removes a
    per-parameter OLS line first and re-adds its extrapolation at
    reconstruction time.  Snapshot columns keep their true timesteps so the
    harmonic observables are evaluated on the actual clock.
    """
    if strategy not in ("fourier", "detrend_fourier"):
        raise ValueError(f"unknown strategy {strategy!r}")
    t_values = W.t_values
    if strategy == "detrend_fourier":
        matrix, trend = detrend(W)
    else:
        matrix, trend = W.matrix, None
    z, scaler = standardize(matrix)
    basis = fit_pca(z, pca_threshold)
    scores = basis.components @ z
    dict_spec = DictionarySpec(p=basis.p, harmonics=harmonics, period=period)
    lifted = lift_matrix(scores, t_values, dict_spec)
    A_raw = edmd_fit(lifted[:, :-1], lifted[:, 1:])
    rho_raw = spectral_radius(A_raw)
    A = enforce_spectral_radius(A_raw, eps)
    eigs = np.linalg.eigvals(A)
    return KoopmanModel(
        scaler=scaler,
        trend=trend,
        basis=basis,
        dict_spec=dict_spec,
        A=A,
        eigenvalues=eigs,
        spectral_radius=float(np.max(np.abs(eigs))),
        spectral_radius_raw=rho_raw,
        strategy=strategy,
        t_last=int(t_values[-1]),
        config_hash=config_hash,
    )


def encode_column(model: KoopmanModel, w: np.ndarray, t: int) -> np.ndarray:
    """Project one raw weight vector into the latent coordinates."""
    w = np.asarray(w, dtype=float)
    if model.trend is not None:
        w = w - (model.trend.intercepts + model.trend.slopes * float(t))
    z = (w - model.scaler.mean) / model.scaler.std
    z[model.scaler.degenerate] = 0.0
    return model.basis.components @ z


def rollout(
    model: KoopmanModel,
    z_last: np.ndarray,
    t_start: int,
    horizon: int,
    mode: str = "autonomous",
) -> np.ndarray:
    """Predicted latent coordinates for timesteps t_start+1 .. t_start+horizon.

    autonomous: lift once at t_start and keep multiplying by the operator,
    letting the harmonic slots evolve under it.  reproject_time: after each
    step, rebuild the lifted vector from the predicted latent state and the
    true clock time, so the harmonic slots never drift.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if mode not in ("autonomous", "reproject_time"):
        raise ValueError(f"unknown rollout mode {mode!r}")
    p = model.dict_spec.p
    out = np.empty((p, horizon))
    if mode == "autonomous":
        psi = lift(z_last, t_start, model.dict_spec)
        for k in range(horizon):
            psi = model.A @ psi
            if not np.all(np.isfinite(psi)):
                raise NumericalError(f"rollout diverged at step {k + 1}")
            out[:, k] = psi[1:p + 1]
    else:
        z = np.asarray(z_last, dtype=float)
        for k in range(horizon):
            psi = model.A @ lift(z, t_start + k, model.dict_spec)
            if not np.all(np.isfinite(psi)):
                raise NumericalError(f"rollout diverged at step {k + 1}")
            z = psi[1:p + 1]
            out[:, k] = z
    return out


def reconstruct_weights(model: KoopmanModel, z_seq: np.ndarray, t_start: int) -> np.ndarray:
    """Invert projection and scaling for a (p, h) latent sequence whose
    first column sits at timestep t_start; returns (n_params, h)."""
    z_seq = np.atleast_2d(np.asarray(z_seq, dtype=float))
    if z_seq.shape[0] != model.dict_spec.p:
        raise ValueError(
            f"latent dimension {z_seq.shape[0]} != model p {model.dict_spec.p}")
    back = model.basis.components.T @ z_seq
    w = inverse_standardize(back, model.scaler)
    if model.trend is not None:
        t_values = np.arange(t_start, t_start + z_seq.shape[1])
        w = retrend(w, model.trend, t_values)
    return w


def model_to_json(model: KoopmanModel) -> dict:
    return {
        "schema_version": 1,
        "strategy": model.strategy,
        "period": model.dict_spec.period,
        "harmonics": model.dict_spec.harmonics,
        "p": model.dict_spec.p,
        "t_last": model.t_last,
        "config_hash": model.config_hash,
        "scaler_mean": model.scaler.mean.tolist(),
        "scaler_std": model.scaler.std.tolist(),
        "scaler_degenerate": model.scaler.degenerate.astype(int).tolist(),
        "trend_intercepts": None if model.trend is None else model.trend.intercepts.tolist(),
        "trend_slopes": None if model.trend is None else model.trend.slopes.tolist(),
        "pca_components": model.basis.components.tolist(),
        "pca_explained_variance": model.basis.explained_variance.tolist(),
        "pca_explained_ratio": model.basis.explained_ratio,
        "pca_threshold": model.basis.threshold,
        "A": model.A.tolist(),
        "eigenvalues": [[float(ev.real), float(ev.imag)] for ev in model.eigenvalues],
        "spectral_radius": model.spectral_radius,
        "spectral_radius_raw": model.spectral_radius_raw,
    }


def model_from_json(doc: dict) -> KoopmanModel:
    trend = None
    if doc["trend_intercepts"] is not None:
        trend = TrendModel(
            intercepts=np.array(doc["trend_intercepts"]),
            slopes=np.array(doc["trend_slopes"]),
        )
    basis = PcaBasis(
        components=np.array(doc["pca_components"]),
        explained_variance=np.array(doc["pca_explained_variance"]),
        explained_ratio=doc["pca_explained_ratio"],
        threshold=doc["pca_threshold"],
    )
    return KoopmanModel(
        scaler=Scaler(
            mean=np.array(doc["scaler_mean"]),
            std=np.array(doc["scaler_std"]),
            degenerate=np.array(doc["scaler_degenerate"], dtype=bool),
        ),
        trend=trend,
        basis=basis,
        dict_spec=DictionarySpec(p=doc["p"], harmonics=doc["harmonics"],
                                 period=doc["period"]),
        A=np.array(doc["A"]),
        eigenvalues=np.array([complex(re, im) for re, im in doc["eigenvalues"]]),
        spectral_radius=doc["spectral_radius"],
        spectral_radius_raw=doc["spectral_radius_raw"],
        strategy=doc["strategy"],
        t_last=doc["t_last"],
        config_hash=doc["config_hash"],
    )


def save_model(model: KoopmanModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> KoopmanModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def eigenvalues_to_csv(model: KoopmanModel, path) -> None:
    """Eigenvalue table sorted by modulus (descending): re,im,modulus,phase."""
    order = np.argsort(-np.abs(model.eigenvalues), kind="stable")
    with open(path, "w") as fh:
        fh.write("re,im,modulus,phase\n")
        for ev in model.eigenvalues[order]:
            fh.write(f"{ev.real!r},{ev.imag!r},{abs(ev)!r},{np.angle(ev)!r}\n")
