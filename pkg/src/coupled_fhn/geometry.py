"""Critical manifold ``y_i = phi(x_i)``, its fold lines and region labels."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .model import FOLD_X, phi, phi_prime

DEFAULT_TOL = 1e-9


class RegionLabel(str, enum.Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    R = "R"
    FOLD_LINE = "FoldLine"
    DOUBLE_FOLD = "DoubleFold"

    @property
    def attracting(self) -> bool:
        return self.value.startswith("A")

    @property
    def saddle(self) -> bool:
        return self.value.startswith("S")


class CriticalPoint(NamedTuple):
    x1: float
    x2: float
    y1: float
    y2: float


def lift(x1: float, x2: float) -> CriticalPoint:
    """The point of the critical manifold above ``(x1, x2)``."""
    return CriticalPoint(x1, x2, phi(x1), phi(x2))


# Position of |x| relative to the fold: -1 inside the band |x| < FOLD_X,
# +1 beyond it, sign carried separately.
_A_LABELS = {(1, 1): RegionLabel.A1, (-1, 1): RegionLabel.A2,
             (-1, -1): RegionLabel.A3, (1, -1): RegionLabel.A4}
# S regions: one coordinate in the band, the other beyond the fold on the given side.
_S_LABELS = {(2, 1): RegionLabel.S1, (1, -1): RegionLabel.S2,
             (2, -1): RegionLabel.S3, (1, 1): RegionLabel.S4}


def classify_region(x1: float, x2: float, tol: float = DEFAULT_TOL) -> RegionLabel:
    """Label of ``(x1, x2)`` among the nine open regions, fold lines and double folds.

    The ``A`` quadrants are A1 ``(+,+)``, A2 ``(-,+)``, A3 ``(-,-)``, A4 ``(+,-)``.
    ``S1``/``S3`` have x1 in the band and x2 beyond ``+``/``-`` fold; ``S4``/``S2``
    have x2 in the band and x1 beyond ``+``/``-`` fold.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    on1 = abs(abs(x1) - FOLD_X) <= tol
    on2 = abs(abs(x2) - FOLD_X) <= tol
    if on1 and on2:
        return RegionLabel.DOUBLE_FOLD
    if on1 or on2:
        return RegionLabel.FOLD_LINE
    out1 = abs(x1) > FOLD_X
    out2 = abs(x2) > FOLD_X
    if out1 and out2:
        return _A_LABELS[(1 if x1 > 0 else -1, 1 if x2 > 0 else -1)]
    if not out1 and not out2:
        return RegionLabel.R
    if out2:
        return _S_LABELS[(2, 1 if x2 > 0 else -1)]
    return _S_LABELS[(1, 1 if x1 > 0 else -1)]


def classify_regions(x1, x2, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised :func:`classify_region`; returns an object array of labels."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    out = np.empty(x1.shape, dtype=object)
    for idx in np.ndindex(x1.shape):
        out[idx] = classify_region(x1[idx], x2[idx], tol)
    return out


def fast_jacobian_eigenvalues(x1: float, x2: float) -> tuple[float, float]:
    """Eigenvalues of the layer-problem Jacobian, without the positive factor ``1/eps``."""
    return phi_prime(x1), phi_prime(x2)


def region_grid_csv(x1_values, x2_values, path: str | Path | None = None,
                    tol: float = DEFAULT_TOL) -> str:
    lines = ["x1,x2,label"]
    for a in x1_values:
        for b in x2_values:
            lines.append(f"{a:.17g},{b:.17g},{classify_region(a, b, tol).value}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, newline="\n")
    return text


def slow_manifold_residual(traj) -> np.ndarray:
    """Per-sample ``max(|y1 - phi(x1)|, |y2 - phi(x2)|)``."""
    s = np.asarray(traj.states if hasattr(traj, "states") else traj, dtype=float)
    return np.maximum(np.abs(s[:, 2] - phi(s[:, 0])), np.abs(s[:, 3] - phi(s[:, 1])))


@dataclass(frozen=True)
class ResidualSegment:
    t_start: float
    t_end: float
    max_residual: float


def attracting_segment_residuals(traj, margin: float = 0.15, jump_residual: float = 0.5,
                                 settle: float | None = None, epsilon: float | None = None,
                                 min_samples: int = 3) -> list[ResidualSegment]:
    """Maxima of the slow-manifold residual over dwell segments on attracting sheets.

    Samples count as attracting when both ``|x_i| >= 2/sqrt(3) + margin``.
    Segments are split wherever the residual exceeds ``jump_residual`` (a fast
    jump), and the first ``settle`` time units of each segment are dropped so the
    fast approach to the sheet is not counted (default ``10 * epsilon``).
    """
    s = traj.states
    t = traj.times
    res = slow_manifold_residual(traj)
    on_a = (np.abs(s[:, 0]) >= FOLD_X + margin) & (np.abs(s[:, 1]) >= FOLD_X + margin)
    on_a &= res <= jump_residual
    if settle is None:
        settle = 10.0 * epsilon if epsilon is not None else 0.0

    segments = []
    edges = np.diff(np.concatenate([[0], on_a.astype(np.int8), [0]]))
    starts, stops = np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]
    for a, b in zip(starts, stops):
        keep = t[a:b] >= t[a] + settle
        if np.count_nonzero(keep) < min_samples:
            continue
        segments.append(ResidualSegment(float(t[a]), float(t[b - 1]), float(res[a:b][keep].max())))
    return segments
