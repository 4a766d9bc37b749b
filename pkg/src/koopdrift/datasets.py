"""Seeded generators for six synthetic drifting 2-D classification streams.

Every stream runs over timesteps t = 0 .. total_steps-1 with drift period
``period`` (four full cycles by construction).  The six kinds:

* A  sign_flip   -- two Gaussians at antipodal points of a rotating circle;
                    the label assignment flips on each half period.
* B  osc_sep     -- two Gaussians on a fixed axis whose separation
                    oscillates between 0.4 and 1.6.
* C  lissajous   -- two Gaussians at fixed separation riding a Lissajous
                    orbit delta(t) = [ax*sin(wt), ay*cos(wt)].
* D  orbit_mog   -- three Gaussians at the vertices of a rotating
                    equilateral triangle with fixed circumradius.
* E  subcluster_mog -- like D but the circumradius oscillates and each
                    class is a two-component mixture offset tangentially.
* F  expanding   -- rotating equilateral triangle whose circumradius grows
                    linearly in t (the one non-periodic stream).

Generation is a pure function of (spec, t, seed): identical arguments give
bit-identical batches, so parallel callers need no coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "DriftKind",
    "DriftSpec",
    "LabeledBatch",
    "make_spec",
    "centroids",
    "sample_timestep",
    "gap",
    "stream_seed",
    "batch_to_csv",
]


class DriftKind(str, Enum):
    A_SIGN_FLIP = "A"
    B_OSC_SEP = "B"
    C_LISSAJOUS = "C"
    D_ORBIT_MOG = "D"
    E_SUBCLUSTER_MOG = "E"
    F_EXPANDING = "F"


# Bayes error Phi(-sep/(2*sigma)) = 0.05 at the minimum separation 0.4.
_B_NOISE = 0.2 / 1.6448536269514722

_NOISE_DEFAULTS = {
    DriftKind.A_SIGN_FLIP: 0.25,
    DriftKind.B_OSC_SEP: _B_NOISE,
    DriftKind.C_LISSAJOUS: 0.18,
    DriftKind.D_ORBIT_MOG: 0.25,
    DriftKind.E_SUBCLUSTER_MOG: 0.22,
    DriftKind.F_EXPANDING: 0.25,
}

# Disjoint sub-stream tags mixed into the seed material.
_STREAM_CODES = {"train": 0, "test": 1, "init": 2}


@dataclass(frozen=True)
class DriftSpec:
    """Declarative description of one drifting classification stream.

    Kind-specific scalars keep their defaults unless overridden; scalars
    irrelevant to a kind are simply unused.
    """

    kind: DriftKind
    period: int = 100
    total_steps: int = 400
    noise_std: float = 0.25
    radius: float = 1.0          # A: circle radius; D: fixed circumradius (1.8)
    sep_base: float = 1.0        # B: mean separation
    sep_amp: float = 0.6         # B: separation oscillation amplitude
    carrier_amp: float = 1.2     # B: pair-midpoint drift along the axis
    amp_x: float = 1.8           # C: Lissajous x amplitude
    amp_y: float = 1.0           # C: Lissajous y amplitude
    separation: float = 1.2      # C: fixed inter-class separation
    radius_base: float = 1.5     # E: mean circumradius
    radius_amp: float = 0.3      # E: circumradius oscillation amplitude
    subcluster_offset: float = 0.3  # E: tangential sub-cluster offset
    radius_start: float = 1.2    # F: circumradius at t = 0
    radius_slope: float = 0.004  # F: circumradius growth per step

    def __post_init__(self) -> None:
        if self.period < 2:
            raise ValueError(f"period must be >= 2, got {self.period}")
        if self.total_steps != 4 * self.period:
            raise ValueError(
                f"total_steps must equal 4*period, got {self.total_steps} != 4*{self.period}"
            )
        if not (self.noise_std > 0 and math.isfinite(self.noise_std)):
            raise ValueError(f"noise_std must be positive and finite, got {self.noise_std}")
        for name in (
            "radius", "sep_base", "sep_amp", "amp_x", "amp_y", "separation",
            "radius_base", "radius_amp", "subcluster_offset", "radius_start",
            "radius_slope",
        ):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def n_classes(self) -> int:
        return 2 if self.kind in (DriftKind.A_SIGN_FLIP, DriftKind.B_OSC_SEP,
                                  DriftKind.C_LISSAJOUS) else 3

    @property
    def input_dim(self) -> int:
        return 2

    @property
    def train_steps(self) -> int:
        """Length of the identification window (first three drift cycles)."""
        return 3 * self.period


def make_spec(kind: DriftKind | str, **overrides) -> DriftSpec:
    """Build a DriftSpec for ``kind`` with per-kind defaults applied."""
    kind = DriftKind(kind)
    fields = {"kind": kind, "noise_std": _NOISE_DEFAULTS[kind]}
    if kind is DriftKind.D_ORBIT_MOG:
        fields["radius"] = 1.8
    fields.update(overrides)
    return DriftSpec(**fields)


@dataclass(frozen=True)
class LabeledBatch:
    inputs: np.ndarray   # (n, 2) float64
    labels: np.ndarray   # (n,) int64, values in [0, n_classes)
    timestep: int

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.inputs.shape[1] != 2:
            raise ValueError(f"inputs must be (n, 2), got {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels must be a vector matching inputs rows")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs contain non-finite values")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _check_t(spec: DriftSpec, t: int) -> None:
    if not 0 <= t < spec.total_steps:
        raise ValueError(f"timestep {t} outside [0, {spec.total_steps})")


def _phase(spec: DriftSpec, t: int) -> float:
    # Reduce mod period before taking the angle so centroids at t and
    # t+period are bit-identical, not merely equal to rounding.
    return 2.0 * math.pi * (t % spec.period) / spec.period


def _triangle(spec: DriftSpec, t: int, circumradius: float) -> np.ndarray:
    ang = _phase(spec, t)
    out = np.empty((3, 2))
    for c in range(3):
        a = ang + 0.5 * math.pi + 2.0 * math.pi * c / 3.0
        out[c] = (circumradius * math.cos(a), circumradius * math.sin(a))
    return out


def _circumradius(spec: DriftSpec, t: int) -> float:
    if spec.kind is DriftKind.D_ORBIT_MOG:
        return spec.radius
    if spec.kind is DriftKind.E_SUBCLUSTER_MOG:
        return spec.radius_base + spec.radius_amp * math.cos(_phase(spec, t))
    if spec.kind is DriftKind.F_EXPANDING:
        return spec.radius_start + spec.radius_slope * t
    raise ValueError(f"kind {spec.kind.value} has no circumradius")


def centroids(spec: DriftSpec, t: int) -> np.ndarray:
    """Class-centroid positions at timestep t.

    Returns an (n_classes, 2) array, except for kind E where each class is
    a two-component mixture and the result is (3, 2, 2) indexed as
    [class, sub-cluster, coordinate].
    """
    _check_t(spec, t)
    k = spec.kind
    if k is DriftKind.A_SIGN_FLIP:
        # Antipodal pair rotating one full turn per period: after T/2 the
        # classes have swapped positions, so the required decision function
        # is the sign-flipped one -- no fixed boundary survives a half
        # period.
        ang = _phase(spec, t)
        base = np.array([spec.radius * math.cos(ang), spec.radius * math.sin(ang)])
        return np.array([base, -base])
    if k is DriftKind.B_OSC_SEP:
        # The pair rides a slow carrier along its fixed axis while the
        # separation oscillates, so the optimal boundary tracks the moving
        # midpoint and no single boundary survives the cycle.
        ang = _phase(spec, t)
        sep = spec.sep_base + spec.sep_amp * math.cos(ang)
        mid = spec.carrier_amp * math.sin(ang)
        half = 0.5 * sep
        return np.array([[mid - half, 0.0], [mid + half, 0.0]])
    if k is DriftKind.C_LISSAJOUS:
        ang = _phase(spec, t)
        delta = np.array([spec.amp_x * math.sin(ang), spec.amp_y * math.cos(ang)])
        half = 0.5 * spec.separation
        return np.array([delta - (half, 0.0), delta + (half, 0.0)])
    if k in (DriftKind.D_ORBIT_MOG, DriftKind.F_EXPANDING):
        return _triangle(spec, t, _circumradius(spec, t))
    # kind E: vertices plus/minus a tangential sub-cluster offset
    r = _circumradius(spec, t)
    verts = _triangle(spec, t, r)
    ang = _phase(spec, t)
    out = np.empty((3, 2, 2))
    for c in range(3):
        a = ang + 0.5 * math.pi + 2.0 * math.pi * c / 3.0
        tangent = np.array([-math.sin(a), math.cos(a)])
        out[c, 0] = verts[c] - spec.subcluster_offset * tangent
        out[c, 1] = verts[c] + spec.subcluster_offset * tangent
    return out


def gap(spec: DriftSpec, t: int) -> float:
    """Inter-class gap sqrt(3)*R(t) for the triangle kinds D-F."""
    _check_t(spec, t)
    return math.sqrt(3.0) * _circumradius(spec, t)


def sample_timestep(spec: DriftSpec, t: int, n: int, seed) -> LabeledBatch:
    """Draw n labeled points from the class mixture at timestep t.

    Classes are balanced up to rounding (the first n % n_classes classes
    get one extra point); rows are shuffled.  ``seed`` is anything
    ``np.random.default_rng`` accepts; a fixed seed gives a bit-identical
    batch.
    """
    _check_t(spec, t)
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    cents = centroids(spec, t)
    k = spec.n_classes
    counts = [n // k + (1 if c < n % k else 0) for c in range(k)]
    xs, ys = [], []
    for c in range(k):
        m = counts[c]
        if spec.kind is DriftKind.E_SUBCLUSTER_MOG:
            comp = rng.integers(0, 2, size=m)
            centers = cents[c][comp]
        else:
            centers = np.broadcast_to(cents[c], (m, 2))
        xs.append(centers + rng.normal(0.0, spec.noise_std, size=(m, 2)))
        ys.append(np.full(m, c, dtype=np.int64))
    inputs = np.concatenate(xs)
    labels = np.concatenate(ys)
    perm = rng.permutation(n)
    return LabeledBatch(inputs=inputs[perm], labels=labels[perm], timestep=t)


def stream_seed(spec: DriftSpec, role: str, t: int, base_seed: int) -> np.random.SeedSequence:
    """Namespaced seed for the (dataset, role, timestep) sub-stream.

    Distinct roles ("train", "test", "init") and timesteps give
    statistically independent streams from one base seed.
    """
    if role not in _STREAM_CODES:
        raise ValueError(f"unknown stream role {role!r}")
    kind_code = ord(spec.kind.value)
    return np.random.SeedSequence([int(base_seed), kind_code, _STREAM_CODES[role], int(t)])


def batch_to_csv(batch: LabeledBatch, path) -> None:
    """Write a batch as CSV with header x1,x2,label,t."""
    with open(path, "w") as fh:
        fh.write("x1,x2,label,t\n")
        for (x1, x2), lab in zip(batch.inputs, batch.labels):
            fh.write(f"{x1!r},{x2!r},{int(lab)},{batch.timestep}\n")


def with_overrides(spec: DriftSpec, **overrides) -> DriftSpec:
    """Copy of spec with the given fields replaced."""
    return replace(spec, **overrides)
