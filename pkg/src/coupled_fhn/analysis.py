"""Post-processing of trajectories: oscillation segmentation, mixed-mode signatures,
canard detection and relaxation-oscillation detection."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import slow_manifold_residual
from .integrator import STATE_NAMES, EventSpec, Trajectory, crossing_times
from .model import FOLD_X, Params
from .stability import synchrony_precision

LARGE_THRESHOLD = 2.0 * FOLD_X  # fold-to-fold span, 4/sqrt(3)


class TooShort(ValueError):
    """Not enough turning points to segment."""


class OscillationKind(str, enum.Enum):
    LARGE = "Large"
    SMALL = "Small"


@dataclass(frozen=True)
class OscillationEvent:
    t_peak: float
    variable: str
    amplitude: float
    kind: OscillationKind


def turning_points(traj: Trajectory, variable: str = "x1", t_start: float | None = None,
                   t_stop: float | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local extrema of one component located on the cubic Hermite dense output.

    Returns ``(times, values, is_max)``.
    """
    col = STATE_NAMES.index(variable)
    t = traj.times
    h = np.diff(t)
    y0, y1 = traj.states[:-1, col], traj.states[1:, col]
    f0, f1 = traj.derivs[:-1, col], traj.derivs[1:, col]
    # d/dt of the interpolant is A s^2 + B s + C on s in [0, 1].
    slope = (y1 - y0) / h
    qa = 3.0 * (f0 + f1) - 6.0 * slope
    qb = 6.0 * slope - 4.0 * f0 - 2.0 * f1
    qc = f0

    roots_i, roots_s = [], []
    with np.errstate(all="ignore"):
        disc = qb * qb - 4.0 * qa * qc
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(qa) > 1e-14 * (np.abs(qb) + np.abs(qc) + 1e-300)
        for sign in (-1.0, 1.0):
            s = np.where(quad, (-qb + sign * sq) / (2.0 * qa), -qc / qb)
            if sign > 0:
                s = np.where(quad, s, np.nan)  # the linear case has a single root
            ok = np.isfinite(s) & (s >= 0.0) & (s < 1.0)
            roots_i.append(np.nonzero(ok)[0])
            roots_s.append(s[ok])
    idx = np.concatenate(roots_i)
    s = np.concatenate(roots_s)
    curvature = 2.0 * qa[idx] * s + qb[idx]
    keep = curvature != 0.0
    idx, s, curvature = idx[keep], s[keep], curvature[keep]

    times = t[idx] + s * h[idx]
    order = np.argsort(times, kind="stable")
    times, curvature = times[order], curvature[order]
    values = traj(times)[:, col] if len(times) else np.empty(0)
    is_max = curvature < 0
    mask = np.ones(len(times), bool)
    if t_start is not None:
        mask &= times >= t_start
    if t_stop is not None:
        mask &= times <= t_stop
    return times[mask], values[mask], is_max[mask]


def _zigzag(times, values, is_max, min_swing: float):
    """Alternating extrema, dropping wiggles smaller than ``min_swing``."""
    kept: list[list] = []
    for t, v, m in zip(times, values, is_max):
        if not kept:
            kept.append([t, v, m])
            continue
        last = kept[-1]
        if m == last[2]:
            if (m and v > last[1]) or (not m and v < last[1]):
                last[0], last[1] = t, v
        elif abs(v - last[1]) >= min_swing:
            kept.append([t, v, m])
    return kept


def segment_oscillations(traj: Trajectory, variable: str = "x1",
                         large_threshold: float = LARGE_THRESHOLD, t_start: float | None = None,
                         t_stop: float | None = None, min_swing: float = 1e-6) -> list[OscillationEvent]:
    """One event per local maximum, with amplitude measured from the preceding trough.

    ``Large`` when the amplitude reaches ``large_threshold`` (by default the
    fold-to-fold distance, so the excursion spans both folds).

    Raises
    ------
    TooShort
        Fewer than three turning points in the window.
    """
    times, values, is_max = turning_points(traj, variable, t_start, t_stop)
    kept = _zigzag(times, values, is_max, min_swing)
    if len(kept) < 3:
        raise TooShort(f"only {len(kept)} turning points of {variable}")
    events = []
    for prev, cur in zip(kept[:-1], kept[1:]):
        if cur[2] and not prev[2]:
            amp = cur[1] - prev[1]
            kind = OscillationKind.LARGE if amp >= large_threshold else OscillationKind.SMALL
            events.append(OscillationEvent(float(cur[0]), variable, float(amp), kind))
    return events


def oscillations_csv(events: list[OscillationEvent]) -> str:
    lines = ["t_peak,variable,amplitude,kind"]
    lines += [f"{e.t_peak:.17g},{e.variable},{e.amplitude:.17g},{e.kind.value}" for e in events]
    return "\n".join(lines) + "\n"


# -- mixed-mode signatures ----------------------------------------------------------

@dataclass(frozen=True)
class MmoSignature:
    """``blocks[i] = (L, s)``: a run of ``L`` large oscillations followed by ``s`` small ones.

    A sequence that opens with small oscillations gets a leading ``(0, s)`` block.
    ``stationary`` compares interior blocks only, because the first and last may
    be cut by the window edges.
    """

    blocks: tuple[tuple[int, int], ...]
    window: tuple[float, float]
    stationary: bool

    @property
    def has_large(self) -> bool:
        return any(L > 0 for L, _ in self.blocks)

    @property
    def has_small(self) -> bool:
        return any(s > 0 for _, s in self.blocks)

    @property
    def mixed(self) -> bool:
        return self.has_large and self.has_small

    @property
    def interior(self) -> tuple[tuple[int, int], ...]:
        return self.blocks[1:-1]

    @property
    def repeating_block(self) -> tuple[int, int] | None:
        return self.interior[0] if self.stationary else None

    def to_dict(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks], "window": list(self.window),
                "stationary": self.stationary, "has_large": self.has_large,
                "has_small": self.has_small}


def blocks_from_kinds(kinds: list[OscillationKind]) -> list[tuple[int, int]]:
    blocks: list[list[int]] = []
    for kind in kinds:
        if kind is OscillationKind.LARGE:
            if not blocks or blocks[-1][1] > 0:
                blocks.append([0, 0])
            blocks[-1][0] += 1
        else:
            if not blocks:
                blocks.append([0, 0])
            blocks[-1][1] += 1
    return [tuple(b) for b in blocks]


def mmo_signature(traj: Trajectory, variable: str = "x1", t_start: float | None = None,
                  t_stop: float | None = None, large_threshold: float = LARGE_THRESHOLD,
                  min_interior: int = 2) -> MmoSignature:
    events = segment_oscillations(traj, variable, large_threshold, t_start, t_stop)
    blocks = tuple(blocks_from_kinds([e.kind for e in events]))
    interior = blocks[1:-1]
    stationary = len(interior) >= min_interior and all(b == interior[0] for b in interior)
    window = (float(traj.times[0] if t_start is None else t_start),
              float(traj.times[-1] if t_stop is None else t_stop))
    return MmoSignature(blocks, window, stationary)


def windowed_signatures(traj: Trajectory, variable: str, edges) -> list[MmoSignature | None]:
    """Signature in each ``[edges[i], edges[i+1]]``; None where a window is too short."""
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        try:
            out.append(mmo_signature(traj, variable, a, b, min_interior=1))
        except TooShort:
            out.append(None)
    return out


def signatures_stationary(signatures: list[MmoSignature | None]) -> bool:
    """True when every window is stationary with the same repeating block."""
    if any(s is None or not s.stationary for s in signatures):
        return False
    return len({s.repeating_block for s in signatures}) == 1


# -- canards --------------------------------------------------------------------------

@dataclass(frozen=True)
class CanardSegment:
    t_start: float
    t_end: float
    max_residual: float
    region_path: tuple[str, ...]
    dwell: float


@dataclass(frozen=True)
class CanardReport:
    segments: tuple[CanardSegment, ...]
    verdict: bool
    dwell: float
    dwell_min: float
    prox_factor: float

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "dwell": self.dwell, "dwell_min": self.dwell_min,
                "prox_factor": self.prox_factor,
                "segments": [asdict(s) | {"region_path": list(s.region_path)} for s in self.segments]}


def _coarse_region(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    out1, out2 = np.abs(x1) > FOLD_X, np.abs(x2) > FOLD_X
    label = np.full(x1.shape, "R", dtype=object)
    label[out1 ^ out2] = "S"
    label[out1 & out2] = "A"
    return label


def detect_canard(traj: Trajectory, p: Params, dwell_min: float = 1.0, prox_factor: float = 5.0,
                  t_start: float | None = None, t_stop: float | None = None,
                  dt: float | None = None) -> CanardReport:
    """Stretches that leave an attracting sheet and then follow the saddle or repelling
    parts of the critical manifold, within ``prox_factor * eps`` of it, for at least
    ``dwell_min`` time units.

    The trajectory is resampled uniformly (default step ``eps / 10``) so dwell
    times do not depend on the integrator's step sizes.
    """
    step = dt if dt is not None else p.epsilon / 10.0
    t, s = traj.resample(step, t_start, t_stop)
    res = slow_manifold_residual(s)
    close = res <= prox_factor * p.epsilon
    region = _coarse_region(s[:, 0], s[:, 1])

    segments = []
    n = len(t)
    i = 0
    while i < n - 1:
        # An attracting sample followed by a close, non-attracting run.
        if not (close[i] and region[i] == "A" and region[i + 1] != "A" and close[i + 1]):
            i += 1
            continue
        j = i + 1
        while j < n and close[j] and region[j] != "A":
            j += 1
        dwell = float(t[j - 1] - t[i])
        path = [str(region[i])]
        for r in region[i + 1:j]:
            if r != path[-1]:
                path.append(str(r))
        segments.append(CanardSegment(float(t[i]), float(t[j - 1]), float(res[i:j].max()),
                                      tuple(path), dwell))
        i = j
    qualifying = [seg for seg in segments if seg.dwell >= dwell_min]
    best = max((seg.dwell for seg in segments), default=0.0)
    return CanardReport(tuple(qualifying), bool(qualifying), best, dwell_min, prox_factor)


# -- relaxation oscillations ------------------------------------------------------------

@dataclass(frozen=True)
class RelaxationOscillation:
    period: float
    amplitude: float
    synchronous: bool
    delta_sync: float
    delta_anti: float
    t_start: float
    t_end: float

    def to_dict(self) -> dict:
        return asdict(self)


def default_transient(traj: Trajectory) -> float:
    t0, t1 = traj.t_span
    return t0 + max(0.1 * (t1 - t0), 50.0)


def detect_relaxation_oscillation(traj: Trajectory, transient: float | None = None,
                                  recurrence_tol: float = 1e-4,
                                  min_amplitude: float = LARGE_THRESHOLD,
                                  sync_tol: float = 1e-3) -> RelaxationOscillation | None:
    """Periodic large-amplitude motion found by recurrence on the section ``x1 = 0`` (upwards).

    The last section crossing is matched with the most recent earlier crossing
    whose state agrees within ``recurrence_tol``; the time between them is the
    period. Returns None when nothing recurs or the amplitude of ``x1`` over the
    period is below ``min_amplitude``.
    """
    t_min = default_transient(traj) if transient is None else transient
    section = EventSpec.plane("x1", 0.0, direction=1)
    times = crossing_times(traj, section, t_min)
    times = times[times >= t_min]
    if len(times) < 2:
        return None
    states = traj(times)
    last = states[-1]
    match = None
    for j in range(len(times) - 2, -1, -1):
        if np.max(np.abs(states[j] - last)) <= recurrence_tol:
            match = j
            break
    if match is None:
        return None
    a, b = float(times[match]), float(times[-1])
    grid = np.linspace(a, b, 2000)
    x1 = traj(grid)[:, 0]
    amplitude = float(x1.max() - x1.min())
    if amplitude < min_amplitude:
        return None
    window = traj.window(a, b)
    if len(window) < 2:
        return None
    d_sync, d_anti = synchrony_precision(window, a)
    return RelaxationOscillation(b - a, amplitude, d_sync <= sync_tol, d_sync, d_anti, a, b)


@dataclass
class AnalysisReport:
    """Bundle of the analyses the command-line front end writes out."""

    canard: CanardReport | None = None
    mmo: MmoSignature | None = None
    relaxation: RelaxationOscillation | None = None
    delta_sync: float | None = None
    delta_anti: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def conv(v):
            return v.to_dict() if hasattr(v, "to_dict") else v

        out = {
            "canard": conv(self.canard),
            "mmo_signature": conv(self.mmo),
            "relaxation_oscillation": conv(self.relaxation),
            "delta_sync": self.delta_sync,
            "delta_anti": self.delta_anti,
        }
        out.update(self.extra)
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in out.items()}
