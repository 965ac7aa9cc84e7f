"""Adaptive integration of the 4-D system with dense output and event location.

The production solver is a third-order L-stable Rosenbrock scheme (compiled in
:mod:`coupled_fhn._kernel`). ``method="explicit"`` swaps in scipy's DOP853 as an
independent cross-check; both share the same :class:`Trajectory` container.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernel
from .model import FOLD_X, CouplingMode, Params, State, as_state, rhs

STATE_NAMES = ("x1", "x2", "y1", "y2")
_MODE_CODES = {
    CouplingMode.SYMMETRIC: 0,
    CouplingMode.ASYMMETRIC: 1,
    CouplingMode.PERTURBED: 2,
}
EVENT_TIME_TOL = 1e-10


class IntegrationError(RuntimeError):
    """Base class; ``trajectory`` holds whatever was computed before the failure."""

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


@dataclass(frozen=True)
class EventSpec:
    """A scalar function of the state whose zeros are located along a trajectory.

    ``direction`` is +1 for increasing crossings only, -1 for decreasing, 0 for
    both. A ``terminal`` event stops the trajectory at its first occurrence.
    """

    id: str
    func: Callable[[np.ndarray], np.ndarray]
    direction: int = 0
    terminal: bool = False

    @classmethod
    def plane(cls, variable: str, value: float = 0.0, direction: int = 0,
              terminal: bool = False, id: str | None = None) -> "EventSpec":
        idx = STATE_NAMES.index(variable)
        name = id or f"{variable}={value:g}"
        return cls(name, lambda y: y[..., idx] - value, direction, terminal)

    @classmethod
    def fold(cls, variable: str, sign: int = 1, direction: int = 0,
             terminal: bool = False) -> "EventSpec":
        """Crossing of the fold line ``variable = sign * 2/sqrt(3)``."""
        if variable not in ("x1", "x2"):
            raise ValueError("fold events apply to x1 or x2")
        name = f"fold_{variable}_{'+' if sign > 0 else '-'}"
        return cls.plane(variable, sign * FOLD_X, direction, terminal, id=name)


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 2_000_000
    initial_step: float = 0.0
    max_step: float = math.inf
    events: tuple[EventSpec, ...] = ()
    t0: float = 0.0

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed the start time")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.initial_step < 0 or not self.max_step > 0:
            raise ValueError("step bounds must be positive (initial_step 0 means automatic)")
        object.__setattr__(self, "events", tuple(self.events))

    def with_tolerances(self, rtol: float, atol: float) -> "IntegratorConfig":
        return replace(self, rtol=rtol, atol=atol)


@dataclass(frozen=True)
class Event:
    time: float
    id: str
    state: State

    def to_dict(self) -> dict:
        return {"t": self.time, "id": self.id, "state": list(self.state)}


@dataclass
class Trajectory:
    """Accepted steps of one integration; ``derivs`` backs the cubic Hermite interpolant."""

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    events: list[Event] = field(default_factory=list)
    n_accepted: int = 0
    n_rejected: int = 0
    method: str = "rodas3"

    def __len__(self) -> int:
        return len(self.times)

    def __getattr__(self, name: str):
        if name in STATE_NAMES:
            return self.states[:, STATE_NAMES.index(name)]
        raise AttributeError(name)

    @property
    def t_span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def final_state(self) -> State:
        return State(*map(float, self.states[-1]))

    def __call__(self, t):
        """Dense output at scalar or array ``t`` (clipped to the integrated span)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        out = _hermite(self.times[i], self.times[i + 1], self.states[i], self.states[i + 1],
                       self.derivs[i], self.derivs[i + 1], t)
        return out[0] if scalar else out

    def resample(self, dt: float, t_start: float | None = None, t_stop: float | None = None):
        """Uniform grid ``(t, states)`` drawn from the dense output."""
        a = self.times[0] if t_start is None else max(t_start, self.times[0])
        b = self.times[-1] if t_stop is None else min(t_stop, self.times[-1])
        grid = np.arange(a, b + 0.5 * dt, dt)
        grid = grid[grid <= b]
        return grid, self(grid)

    def window(self, t_start: float, t_stop: float | None = None) -> "Trajectory":
        """Sub-trajectory restricted to stored steps in ``[t_start, t_stop]``."""
        t_stop = self.times[-1] if t_stop is None else t_stop
        mask = (self.times >= t_start) & (self.times <= t_stop)
        events = [e for e in self.events if t_start <= e.time <= t_stop]
        return Trajectory(self.times[mask], self.states[mask], self.derivs[mask], events,
                          self.n_accepted, self.n_rejected, self.method)

    def to_csv(self, path: str | Path | None = None) -> str:
        lines = ["t,x1,x2,y1,y2"]
        for t, row in zip(self.times, self.states):
            lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, newline="\n")
        return text

    def events_json(self, path: str | Path | None = None) -> str:
        text = json.dumps([e.to_dict() for e in self.events], indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, newline="\n")
        return text

    @classmethod
    def from_csv(cls, path: str | Path, p: Params) -> "Trajectory":
        """Reload a CSV written by :meth:`to_csv`; derivatives are recomputed from ``p``."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        states = data[:, 1:]
        return cls(data[:, 0], states, _field_rows(p, states), method="csv")


def _hermite(t0, t1, y0, y1, f0, f1, t):
    h = (t1 - t0)[:, None]
    s = ((t - t0) / (t1 - t0))[:, None]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _field_rows(p: Params, states: np.ndarray) -> np.ndarray:
    return np.asarray(rhs(p, states.T), dtype=float).T.reshape(states.shape)


def param_vector(p: Params) -> tuple[int, np.ndarray]:
    """Mode code and packed parameter array in the compiled kernel's layout."""
    b2, c2, k2 = p.second_cell()
    return _MODE_CODES[p.mode], np.array([p.b, p.c, p.k, p.epsilon, b2, c2, k2], dtype=float)


def integrate(p: Params, s0: Sequence[float], cfg: IntegratorConfig,
              method: str = "rodas3") -> Trajectory:
    """Integrate from ``s0`` over ``[cfg.t0, cfg.t_end]``.

    Raises
    ------
    StepSizeUnderflow, MaxStepsExceeded, NonFiniteState
        The partial trajectory is attached to the exception.
    """
    y0 = np.array(as_state(s0), dtype=float)
    if not np.all(np.isfinite(y0)):
        raise NonFiniteState("initial state is not finite")
    if method == "rodas3":
        traj, status = _run_rodas(p, y0, cfg)
    elif method == "explicit":
        traj, status = _run_explicit(p, y0, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")

    if cfg.events:
        _locate_events(traj, cfg.events)
    if status != _kernel.OK:
        exc = {
            _kernel.MAX_STEPS: MaxStepsExceeded,
            _kernel.UNDERFLOW: StepSizeUnderflow,
            _kernel.NONFINITE: NonFiniteState,
        }[status]
        t_stop = traj.times[min(traj.n_accepted, len(traj.times) - 1)]
        raise exc(f"integration stopped at t={t_stop:.6g}", traj)
    return traj


def integrate_two(p: Params, s0a: Sequence[float], s0b: Sequence[float],
                  cfg: IntegratorConfig, method: str = "rodas3") -> tuple[Trajectory, Trajectory]:
    return integrate(p, s0a, cfg, method), integrate(p, s0b, cfg, method)


def _run_rodas(p: Params, y0: np.ndarray, cfg: IntegratorConfig):
    mode, prm = param_vector(p)
    ts, ys, fs, n_acc, n_rej, status = _kernel.rodas3(
        mode, prm, float(cfg.t0), y0, float(cfg.t_end), float(cfg.rtol), float(cfg.atol),
        float(cfg.initial_step), float(min(cfg.max_step, cfg.t_end - cfg.t0)), int(cfg.max_steps),
    )
    if len(ts) == 1:
        # Failure on the very first step: keep the invariant of at least two samples.
        ts, ys, fs = np.repeat(ts, 2), np.repeat(ys, 2, axis=0), np.repeat(fs, 2, axis=0)
        ts[1] = np.nextafter(ts[0], np.inf)
    return Trajectory(ts, ys, fs, [], int(n_acc), int(n_rej), "rodas3"), int(status)


def _run_explicit(p: Params, y0: np.ndarray, cfg: IntegratorConfig):
    kwargs = {}
    if cfg.initial_step > 0:
        kwargs["first_step"] = cfg.initial_step
    sol = solve_ivp(lambda t, y: rhs(p, y), (cfg.t0, cfg.t_end), y0, method="DOP853",
                    rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.max_step, **kwargs)
    states = sol.y.T.copy()
    finite = np.all(np.isfinite(states), axis=1)
    status = _kernel.OK
    if not finite.all():
        cut = int(np.argmin(finite))
        sol.t, states = sol.t[:cut], states[:cut]
        status = _kernel.NONFINITE
    elif not sol.success:
        status = _kernel.UNDERFLOW
    traj = Trajectory(sol.t.copy(), states, _field_rows(p, states), [],
                      max(len(sol.t) - 1, 0), 0, "dop853")
    return traj, status


def crossing_times(traj: Trajectory, spec: EventSpec, t_min: float = -math.inf) -> np.ndarray:
    """Zeros of ``spec.func`` along ``traj``, bracketed between stored steps and bisected."""
    g = np.asarray(spec.func(traj.states), dtype=float)
    lo, hi = g[:-1], g[1:]
    up = (lo < 0) & (hi >= 0)
    down = (lo > 0) & (hi <= 0)
    mask = up if spec.direction > 0 else down if spec.direction < 0 else up | down
    mask &= traj.times[1:] >= t_min
    return np.array([_bisect(traj, spec, int(i)) for i in np.nonzero(mask)[0]])


def _locate_events(traj: Trajectory, specs: Sequence[EventSpec]) -> None:
    found: list[tuple[float, str, EventSpec]] = []
    for spec in specs:
        found.extend((float(t), spec.id, spec) for t in crossing_times(traj, spec))

    found.sort(key=lambda item: (item[0], item[1]))
    stop = next((t for t, _, spec in found if spec.terminal), None)
    events = [Event(t, name, State(*map(float, traj(t)))) for t, name, _ in found
              if stop is None or t <= stop]
    traj.events = events
    if stop is not None:
        keep = traj.times < stop
        y_stop, f_stop = traj(stop), _interp_deriv(traj, stop)
        traj.times = np.append(traj.times[keep], stop)
        traj.states = np.vstack([traj.states[keep], y_stop])
        traj.derivs = np.vstack([traj.derivs[keep], f_stop])


def _interp_deriv(traj: Trajectory, t: float) -> np.ndarray:
    # Derivative of the Hermite interpolant; good enough to keep dense output continuous.
    i = int(np.clip(np.searchsorted(traj.times, t, side="right") - 1, 0, len(traj.times) - 2))
    t0, t1 = traj.times[i], traj.times[i + 1]
    h = t1 - t0
    s = (t - t0) / h
    y0, y1, f0, f1 = traj.states[i], traj.states[i + 1], traj.derivs[i], traj.derivs[i + 1]
    d00 = 6 * s * s - 6 * s
    d10 = 3 * s * s - 4 * s + 1
    d01 = -d00
    d11 = 3 * s * s - 2 * s
    return (d00 * y0 + d01 * y1) / h + d10 * f0 + d11 * f1


def _bisect(traj: Trajectory, spec: EventSpec, i: int) -> float:
    a, b = float(traj.times[i]), float(traj.times[i + 1])
    ga = float(spec.func(traj.states[i]))
    if float(spec.func(traj.states[i + 1])) == 0.0:
        return b
    while b - a > EVENT_TIME_TOL:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        gm = float(spec.func(traj(m)))
        if gm == 0.0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)
