"""Stability of the synchrony and antisynchrony planes, and equilibria of the full system."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .model import CouplingMode, Params, State, jacobian, phi, phi_prime, rhs, slow_field
from .reduced import depressed_cubic_roots


@dataclass(frozen=True)
class TransverseReport:
    """Linearisation transverse to an invariant plane at a point ``(x, phi(x))`` of it."""

    matrix: np.ndarray = field(repr=False)
    det: float
    trace: float
    det_closed_form: float
    trace_closed_form: float
    attracting: bool
    normally_hyperbolic: bool


def _transverse(p: Params, x: float, damping: float) -> TransverseReport:
    e = p.epsilon
    d = phi_prime(x)
    mat = np.array([[d / e, -1.0 / e], [1.0, -damping]])
    det = float(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
    trace = float(mat[0, 0] + mat[1, 1])
    det_cf = -(damping * d - 1.0) / e
    trace_cf = d / e - damping
    # Zero real part happens for det = 0, or for a purely imaginary pair (trace = 0 < det).
    hyperbolic = det != 0.0 and not (trace == 0.0 and det > 0.0)
    return TransverseReport(mat, det, trace, det_cf, trace_cf,
                            attracting=det > 0.0 and trace < 0.0, normally_hyperbolic=hyperbolic)


def n_gamma(p: Params, x: float) -> TransverseReport:
    """Transverse stability of the synchrony plane (difference coordinates)."""
    return _transverse(p, x, p.b + 2.0 * p.k)


def n_delta(p: Params, x: float) -> TransverseReport:
    """Transverse stability of the antisynchrony plane."""
    return _transverse(p, x, p.b)


def synchrony_attracting(p: Params, strict: bool = True) -> bool:
    """Sufficient condition ``k > -b/2`` (``k >= -b/2`` when ``strict`` is False).

    The non-strict form is the boundary-inclusive normal hyperbolicity condition.
    Only the symmetric coupling leaves the synchrony plane invariant.
    """
    if p.mode is not CouplingMode.SYMMETRIC:
        return False
    return p.k > -p.b / 2.0 if strict else p.k >= -p.b / 2.0


class AntisyncRegime(str, enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"
    NONE = "none"


@dataclass(frozen=True)
class AntisyncVerdict:
    """``attracting`` holds when ``b > 0`` and ``c = 0`` (the plane is then invariant).

    With ``b > 0`` and small nonzero ``|c|`` the regime is ``approximate``:
    solutions stay within ``O(c)`` of the plane rather than on it.
    """

    attracting: bool
    regime: AntisyncRegime

    def __bool__(self) -> bool:
        return self.attracting


def antisynchrony_attracting(p: Params, strict: bool = True, small_c: float = 0.1) -> AntisyncVerdict:
    if p.mode is not CouplingMode.SYMMETRIC:
        return AntisyncVerdict(False, AntisyncRegime.NONE)
    transverse_ok = p.b > 0 if strict else p.b >= 0
    if not transverse_ok:
        return AntisyncVerdict(False, AntisyncRegime.NONE)
    if p.c == 0:
        return AntisyncVerdict(True, AntisyncRegime.EXACT)
    if abs(p.c) <= small_c:
        return AntisyncVerdict(False, AntisyncRegime.APPROXIMATE)
    return AntisyncVerdict(False, AntisyncRegime.NONE)


# -- equilibria -------------------------------------------------------------------

class EquilibriumKind(str, enum.Enum):
    SINK = "sink"
    SOURCE = "source"
    SADDLE = "saddle-like"
    NONHYPERBOLIC = "nonhyperbolic"


@dataclass(frozen=True)
class Equilibrium:
    state: State
    eigenvalues: np.ndarray = field(repr=False)
    kind: EquilibriumKind
    residual: float

    @property
    def synchronous(self) -> bool:
        return abs(self.state.x1 - self.state.x2) <= 1e-8

    def to_dict(self) -> dict:
        return {
            "state": list(self.state),
            "eigenvalues_real": [float(v) for v in self.eigenvalues.real],
            "eigenvalues_imag": [float(v) for v in self.eigenvalues.imag],
            "kind": self.kind.value,
            "residual": self.residual,
        }


def _reduced_residual(p: Params, x1, x2):
    return np.array(slow_field(p, x1, x2, phi(x1), phi(x2)))


def _reduced_jacobian(p: Params, x1, x2):
    d1, d2 = phi_prime(x1), phi_prime(x2)
    if p.mode is CouplingMode.ASYMMETRIC:
        return np.array([[1.0 - p.b * d1, p.k * d2], [np.zeros_like(d1), 1.0 - p.b * d2]])
    b2, _, k2 = p.second_cell()
    return np.array([[1.0 - (p.b + p.k) * d1, p.k * d2], [k2 * d1, 1.0 - (b2 + k2) * d2]])


def _newton(p: Params, x1, x2, iters: int = 60):
    x1 = np.array(x1, dtype=float)
    x2 = np.array(x2, dtype=float)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            g = _reduced_residual(p, x1, x2)
            j = _reduced_jacobian(p, x1, x2)
            det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
            dx1 = (j[1, 1] * g[0] - j[0, 1] * g[1]) / det
            dx2 = (j[0, 0] * g[1] - j[1, 0] * g[0]) / det
            x1 = x1 - dx1
            x2 = x2 - dx2
    return x1, x2


def classify_equilibrium(eigenvalues: np.ndarray, tol: float = 1e-9) -> EquilibriumKind:
    re = eigenvalues.real
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if np.any(np.abs(re) <= tol * scale):
        return EquilibriumKind.NONHYPERBOLIC
    if np.all(re < 0):
        return EquilibriumKind.SINK
    if np.all(re > 0):
        return EquilibriumKind.SOURCE
    return EquilibriumKind.SADDLE


def synchrony_plane_roots(p: Params) -> list[float]:
    """Real roots of ``x - b phi(x) - c = 0`` (equilibria on the synchrony plane)."""
    if p.b == 0:
        return [p.c]
    # b x^3 + (1 - 4b) x - c = 0
    roots = depressed_cubic_roots((1.0 - 4.0 * p.b) / p.b, -p.c / p.b)
    out = []
    for x in roots:
        for _ in range(3):
            d = 1.0 - p.b * phi_prime(x)
            if d == 0:
                break
            x -= (x - p.b * phi(x) - p.c) / d
        out.append(x)
    return out


def find_equilibria(p: Params, grid: int = 60, span: float = 3.0, dedupe: float = 1e-6,
                    max_residual: float = 1e-10) -> list[Equilibrium]:
    """All equilibria: Newton from every node of a ``grid x grid`` lattice on ``[-span, span]^2``.

    For symmetric coupling the roots on the synchrony plane are added from the
    scalar cubic as well, so a miss by the multistart cannot drop them.
    """
    g = np.linspace(-span, span, grid)
    a, b = np.meshgrid(g, g, indexing="ij")
    x1, x2 = _newton(p, a.ravel(), b.ravel())
    with np.errstate(all="ignore"):
        ok = np.isfinite(x1) & np.isfinite(x2)
        ok &= np.max(np.abs(_reduced_residual(p, x1, x2)), axis=0) <= max_residual
    # Most starts land on the same few roots; collapse them before the scalar pass.
    pts = np.unique(np.round(np.column_stack([x1[ok], x2[ok]]), 8), axis=0)
    candidates = [tuple(row) for row in pts]
    if p.mode is CouplingMode.SYMMETRIC:
        candidates += [(x, x) for x in synchrony_plane_roots(p)]

    found: list[Equilibrium] = []
    for u, v in candidates:
        u, v = _newton(p, u, v, iters=3)
        u, v = float(u), float(v)
        if not (np.isfinite(u) and np.isfinite(v)):
            continue
        state = State(u, v, phi(u), phi(v))
        residual = float(np.max(np.abs(rhs(p, state))))
        if residual > max_residual:
            continue
        if any(np.hypot(u - e.state.x1, v - e.state.x2) < dedupe for e in found):
            continue
        eig = np.linalg.eigvals(jacobian(p, state))
        found.append(Equilibrium(state, eig, classify_equilibrium(eig), residual))
    found.sort(key=lambda e: (e.state.x1, e.state.x2))
    return found


def synchrony_precision(traj, t0: float) -> tuple[float, float]:
    """``(delta_sync, delta_anti)``: sup over stored samples with ``t >= t0`` of the
    distance to the synchrony and antisynchrony planes (max-norm over x and y)."""
    mask = traj.times >= t0
    if not np.any(mask):
        raise ValueError(f"t0={t0} lies beyond the end of the trajectory")
    s = traj.states[mask]
    delta_sync = float(max(np.max(np.abs(s[:, 0] - s[:, 1])), np.max(np.abs(s[:, 2] - s[:, 3]))))
    delta_anti = float(max(np.max(np.abs(s[:, 0] + s[:, 1])), np.max(np.abs(s[:, 2] + s[:, 3]))))
    return delta_sync, delta_anti
