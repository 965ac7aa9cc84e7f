"""Slow flow on the critical manifold, its desingularisations and folded singularities.

On ``C0`` the slow equations become ``phi'(x_i) dx_i/dt = g_i(x1, x2)`` with
``g_i`` the slow right-hand side evaluated at ``y_i = phi(x_i)``. Two rescaled
systems remove the division by ``phi'``:

* ``H = (phi'(x2)/phi'(x1) g1, g2)``, regular across the fold of ``x2``;
* ``F = (phi'(x2) g1, phi'(x1) g2)``, regular everywhere, used at double folds.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import DEFAULT_TOL, RegionLabel
from .model import (
    FOLD_X,
    FOLD_Y,
    CouplingMode,
    Params,
    State,
    phi,
    phi_double_prime,
    phi_prime,
    slow_field,
)

DET_TOL = 1e-12
DISC_TOL = 1e-12
FOLD_SLOPE_TOL = 1e-12  # |phi'| below this counts as on a fold


class SingularProjection(ValueError):
    """The slow flow divides by ``phi'(x_i) = 0``."""


class ZeroCoupling(ValueError):
    pass


class NotAFoldPoint(ValueError):
    pass


class NoRowMatches(LookupError):
    """None of the tabulated sufficient conditions applies."""


class ReachedDoubleFold(RuntimeError):
    pass


class SlowEquilibriumReached(RuntimeError):
    pass


class StabilityClass(str, enum.Enum):
    SADDLE = "Saddle"
    UNSTABLE_NODE = "UnstableNode"
    UNSTABLE_FOCUS = "UnstableFocus"
    STABLE_NODE = "StableNode"
    STABLE_FOCUS = "StableFocus"
    SADDLE_NODE = "SaddleNode"
    CENTER = "Center"
    DEGENERATE = "Degenerate"


class CanardVerdict(str, enum.Enum):
    POSSIBLE = "CanardPossible"
    NONE = "NoCanard"
    INCONCLUSIVE = "Inconclusive"


def classify_trace_det(det: float, trace: float, tol: float = DET_TOL) -> StabilityClass:
    """Planar linear classification from the trace-determinant chart."""
    if abs(det) <= tol:
        return StabilityClass.DEGENERATE if abs(trace) <= tol else StabilityClass.SADDLE_NODE
    if det < 0:
        return StabilityClass.SADDLE
    if abs(trace) <= tol:
        return StabilityClass.CENTER
    if abs(det - trace * trace / 4.0) <= tol:
        return StabilityClass.DEGENERATE
    node = det < trace * trace / 4.0
    if trace > 0:
        return StabilityClass.UNSTABLE_NODE if node else StabilityClass.UNSTABLE_FOCUS
    return StabilityClass.STABLE_NODE if node else StabilityClass.STABLE_FOCUS


# -- slow flow and its desingularisations ------------------------------------

def _require_symmetric(p: Params) -> None:
    if p.mode is not CouplingMode.SYMMETRIC:
        raise ValueError("the reduced-flow analysis covers symmetric bidirectional coupling")


def slow_g(p: Params, x1, x2):
    """``(g1, g2)``: slow right-hand sides on the critical manifold."""
    return slow_field(p, x1, x2, phi(x1), phi(x2))


def slow_rhs_on_C0(p: Params, x1: float, x2: float) -> tuple[float, float]:
    d1, d2 = phi_prime(x1), phi_prime(x2)
    if abs(d1) <= FOLD_SLOPE_TOL or abs(d2) <= FOLD_SLOPE_TOL:
        raise SingularProjection(f"phi' vanishes at ({x1}, {x2})")
    g1, g2 = slow_g(p, x1, x2)
    return g1 / d1, g2 / d2


def H(p: Params, x1: float, x2: float) -> tuple[float, float]:
    """Slow flow rescaled by ``phi'(x2)``; regular across the fold of the second cell."""
    d1 = phi_prime(x1)
    if abs(d1) <= FOLD_SLOPE_TOL:
        raise SingularProjection(f"phi'(x1) vanishes at x1={x1}")
    g1, g2 = slow_g(p, x1, x2)
    return phi_prime(x2) / d1 * g1, g2


def F(p: Params, x1: float, x2: float) -> tuple[float, float]:
    """Slow flow rescaled by ``phi'(x1) phi'(x2)``."""
    g1, g2 = slow_g(p, x1, x2)
    return phi_prime(x2) * g1, phi_prime(x1) * g2


def time_orientation(x1: float, x2: float, system: str = "F") -> int:
    """Sign of the time rescaling used by ``H`` (``phi'(x2)``) or ``F`` (``phi'(x1) phi'(x2)``).

    ``+1`` keeps the direction of time, ``-1`` reverses it, ``0`` on a fold.
    """
    if system == "H":
        factor = phi_prime(x2)
    elif system == "F":
        factor = phi_prime(x1) * phi_prime(x2)
    else:
        raise ValueError("system must be 'H' or 'F'")
    if abs(factor) <= FOLD_SLOPE_TOL:
        return 0
    return 1 if factor > 0 else -1


# -- cubic roots --------------------------------------------------------------

def _bisect_root(f, a: float, b: float, tol: float = 1e-15) -> float:
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0 or b - a <= tol * max(1.0, abs(m)):
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def depressed_cubic_roots(p: float, q: float) -> list[float]:
    """Real roots of ``t**3 + p*t + q = 0`` in increasing order (repeated roots once).

    Closed form away from a repeated root; when the discriminant is zero up to
    a relative ``1e-12`` the simple root is bracketed and bisected and the double
    root follows from the vanishing sum of roots.
    """
    disc = -4.0 * p**3 - 27.0 * q * q
    scale = max(4.0 * abs(p) ** 3, 27.0 * q * q)
    if scale == 0.0:
        return [0.0]
    if abs(disc) <= DISC_TOL * scale:
        f = lambda t: t**3 + p * t + q  # noqa: E731
        # The simple root lies beyond the double one, on the side opposite to sign(q).
        bound = 1.0 + abs(p) + abs(q)
        edge = math.sqrt(max(-p / 3.0, 0.0))
        simple = _bisect_root(f, -bound, -edge) if q > 0 else _bisect_root(f, edge, bound)
        return sorted([simple, -simple / 2.0])
    if disc > 0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        return sorted(m * math.cos(theta - 2.0 * math.pi * j / 3.0) for j in range(3))
    s = math.sqrt(q * q / 4.0 + p**3 / 27.0)
    # Take the cube root without cancellation; the other follows from u v = -p/3.
    u = float(np.cbrt(-q / 2.0 - math.copysign(s, q)))
    return [u - p / (3.0 * u)]


def phi_inverse_roots(y: float) -> list[float]:
    """All real ``x`` with ``phi(x) = y``."""
    return [_polish(r, y) for r in depressed_cubic_roots(-4.0, y)]


def _polish(x: float, y: float) -> float:
    # Newton on phi(x) = y; skipped where phi' is too small to help.
    for _ in range(3):
        d = phi_prime(x)
        if abs(d) < 1e-6:
            break
        step = (phi(x) - y) / d
        x -= step
        if abs(step) < 1e-17:
            break
    return x


def attracting_branch(y: float, sign: int) -> float:
    """``x`` on the attracting sheet ``sign * x >= 2/sqrt(3)`` with ``phi(x) = y``."""
    if sign > 0 and y > FOLD_Y:
        raise NotAFoldPoint(f"no attracting x > 0 above the fold value, y={y}")
    if sign < 0 and y < -FOLD_Y:
        raise NotAFoldPoint(f"no attracting x < 0 below the fold value, y={y}")
    # Solve on the positive sheet and reflect, so the result is exactly odd in (y, sign).
    sign = 1 if sign > 0 else -1
    return sign * max(phi_inverse_roots(sign * y))


def jump_target(x_fold: float, tol: float = 1e-12) -> float:
    """Landing point of the fast jump from a fold: ``2 sigma/sqrt(3) -> -4 sigma/sqrt(3)``."""
    if abs(abs(x_fold) - FOLD_X) > tol:
        raise NotAFoldPoint(f"{x_fold} is not on a fold line")
    return -2.0 * math.copysign(FOLD_X, x_fold)


# -- folded equilibria ----------------------------------------------------------

@dataclass(frozen=True)
class FoldedEquilibrium:
    x1_star: float
    x2_star: float
    sigma: int
    folded_variable: str
    jacobian: np.ndarray = field(repr=False)
    det: float
    trace: float
    stability: StabilityClass
    in_attracting_boundary: bool
    residual: float

    @property
    def free_coordinate(self) -> float:
        return self.x1_star if self.folded_variable == "second" else self.x2_star

    @property
    def region(self) -> RegionLabel | None:
        """Which ``A_i`` this point bounds, or None when the free coordinate is not beyond a fold."""
        if not self.in_attracting_boundary:
            return None
        from .geometry import classify_region

        # Nudge the folded coordinate outwards to land inside the adjacent A quadrant.
        x1, x2 = self.x1_star, self.x2_star
        if self.folded_variable == "second":
            x2 = x2 * 1.5
        else:
            x1 = x1 * 1.5
        return classify_region(x1, x2)

    def det_closed_form(self, p: Params) -> float:
        """Determinant from the expanded formula, independent of the matrix entries."""
        u, v = self.x1_star, self.x2_star
        fold = v if self.folded_variable == "second" else u
        return -p.k * phi_double_prime(fold) * (u + v - p.b * (phi(u) + phi(v)) - 2.0 * p.c)

    def to_dict(self, table1_row: int | None = None, canard_verdict: str | None = None) -> dict:
        return {
            "x1_star": self.x1_star,
            "x2_star": self.x2_star,
            "sigma": self.sigma,
            "folded_variable": self.folded_variable,
            "det": self.det,
            "trace": self.trace,
            "class": self.stability.value,
            "in_attracting_boundary": self.in_attracting_boundary,
            "table1_row": table1_row,
            "canard_verdict": canard_verdict,
        }


def folded_equilibrium_rhs(p: Params, sigma: int) -> float:
    """``c + (b + k) phi(x_f) - x_f`` with ``x_f = 2 sigma/sqrt(3)``; roots solve ``k phi(x) = rhs``."""
    xf = sigma * FOLD_X
    return p.c + (p.b + p.k) * phi(xf) - xf


def jacobian_DH(p: Params, x_free: float, sigma: int, folded_variable: str = "second") -> np.ndarray:
    """Jacobian of the rescaled flow at a folded equilibrium, in ``(x1, x2)`` order."""
    xf = sigma * FOLD_X
    d_free = phi_prime(x_free)
    if folded_variable == "second":
        g1, _ = slow_g(p, x_free, xf)
        off = phi_double_prime(xf) / d_free * g1 if d_free != 0.0 else math.nan
        return np.array([[0.0, off], [p.k * d_free, 1.0]])
    _, g2 = slow_g(p, xf, x_free)
    off = phi_double_prime(xf) / d_free * g2 if d_free != 0.0 else math.nan
    return np.array([[1.0, p.k * d_free], [off, 0.0]])


def find_folded_equilibria(p: Params, sigma: int, folded_variable: str = "second",
                           tol: float = DEFAULT_TOL) -> list[FoldedEquilibrium]:
    """Folded equilibria with the given cell on the fold ``2 sigma/sqrt(3)``.

    Every real root of the cubic is returned; ``in_attracting_boundary`` marks
    those whose free coordinate lies beyond a fold (``|x| > 2/sqrt(3)``).
    """
    _require_symmetric(p)
    if p.k == 0:
        raise ZeroCoupling("folded equilibria need k != 0")
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if folded_variable not in ("first", "second"):
        raise ValueError("folded_variable must be 'first' or 'second'")
    xf = sigma * FOLD_X
    rhs = folded_equilibrium_rhs(p, sigma)
    out = []
    for root in phi_inverse_roots(rhs / p.k):
        jac = jacobian_DH(p, root, sigma, folded_variable)
        trace = float(np.trace(jac))
        x1, x2 = (root, xf) if folded_variable == "second" else (xf, root)
        fold = x2 if folded_variable == "second" else x1
        det_cf = -p.k * phi_double_prime(fold) * (x1 + x2 - p.b * (phi(x1) + phi(x2)) - 2.0 * p.c)
        if np.isfinite(jac).all():
            det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
            stability = classify_trace_det(det, trace)
        else:
            det, stability = det_cf, StabilityClass.DEGENERATE
        out.append(FoldedEquilibrium(
            x1_star=x1, x2_star=x2, sigma=sigma, folded_variable=folded_variable,
            jacobian=jac, det=det, trace=trace, stability=stability,
            in_attracting_boundary=abs(root) > FOLD_X + tol,
            residual=abs(p.k * phi(root) - rhs),
        ))
    return out


def all_folded_equilibria(p: Params) -> list[FoldedEquilibrium]:
    return [fe for var in ("second", "first") for s in (1, -1)
            for fe in find_folded_equilibria(p, s, var)]


# -- tabulated sufficient conditions (b = 0) -----------------------------------

@dataclass(frozen=True)
class FoldConditionRow:
    """Sufficient conditions for a folded equilibrium ``(x1*, 2 sigma/sqrt(3))`` when ``b = 0``.

    ``c_range`` bounds are either numbers, ``"x1"`` for ``x1*`` or ``"mid"`` for
    ``(x1* + x2*)/2``. ``phi_order`` is the sign of ``phi(x1*) - phi(x2*)`` or 0
    when unconstrained. ``printed_saddle`` is the class as originally listed;
    ``saddle`` is the class that follows from the sign of the determinant.
    """

    number: int
    region: RegionLabel
    sigma: int
    c_range: tuple
    phi_order: int
    k_sign: int
    printed_saddle: bool
    saddle: bool

    @property
    def erratum(self) -> bool:
        return self.printed_saddle != self.saddle

    def c_bounds(self, x1: float) -> tuple[float, float]:
        x2 = self.sigma * FOLD_X

        def value(v):
            if v == "x1":
                return x1
            if v == "mid":
                return (x1 + x2) / 2.0
            return v

        return value(self.c_range[0]), value(self.c_range[1])

    def hypotheses_hold(self, x1: float, c: float, k: float) -> bool:
        x2 = self.sigma * FOLD_X
        region_ok = (x1 > FOLD_X) if self.region in (RegionLabel.A1, RegionLabel.A4) else (x1 < -FOLD_X)
        lo, hi = self.c_bounds(x1)
        order = np.sign(phi(x1) - phi(x2))
        return (region_ok and lo < c < hi and np.sign(k) == self.k_sign
                and (self.phi_order == 0 or order == self.phi_order))


_INF = math.inf
_A1, _A2, _A3, _A4 = RegionLabel.A1, RegionLabel.A2, RegionLabel.A3, RegionLabel.A4
FOLD_CONDITIONS = (
    FoldConditionRow(1, _A1, 1, (-_INF, FOLD_X), 0, 1, False, False),
    FoldConditionRow(2, _A1, 1, (FOLD_X, "mid"), 0, -1, True, True),
    FoldConditionRow(3, _A1, 1, ("mid", _INF), 0, -1, False, False),
    FoldConditionRow(4, _A2, 1, (FOLD_X, _INF), 1, 1, True, True),
    FoldConditionRow(5, _A2, 1, (0.0, FOLD_X), 1, -1, False, False),
    FoldConditionRow(6, _A2, 1, (-_INF, "x1"), 1, -1, False, True),
    FoldConditionRow(7, _A2, 1, (FOLD_X, _INF), -1, -1, False, False),
    FoldConditionRow(8, _A2, 1, (0.0, FOLD_X), -1, 1, True, True),
    FoldConditionRow(9, _A2, 1, (-_INF, "x1"), -1, 1, True, False),
    FoldConditionRow(10, _A3, -1, (-FOLD_X, _INF), 0, 1, False, False),
    FoldConditionRow(11, _A3, -1, ("mid", -FOLD_X), 0, -1, True, True),
    FoldConditionRow(12, _A3, -1, (-_INF, "mid"), 0, -1, False, False),
    FoldConditionRow(13, _A4, -1, (-_INF, -FOLD_X), 1, -1, False, False),
    FoldConditionRow(14, _A4, -1, (-FOLD_X, 0.0), 1, 1, True, True),
    FoldConditionRow(15, _A4, -1, ("x1", _INF), 1, 1, False, False),
    FoldConditionRow(16, _A4, -1, (-_INF, -FOLD_X), -1, 1, True, True),
    FoldConditionRow(17, _A4, -1, (-FOLD_X, 0.0), -1, -1, False, False),
    FoldConditionRow(18, _A4, -1, ("x1", _INF), -1, -1, True, True),
)


@dataclass(frozen=True)
class FoldConditionMatch:
    region: RegionLabel
    row: FoldConditionRow | None
    stability: StabilityClass
    predicted_saddle: bool | None
    status: str  # "match", "mismatch" or "inconclusive"


_GAMMA_REGION = {_A1: _A1, _A2: _A4, _A3: _A3, _A4: _A2}


def match_fold_condition(p: Params, fe: FoldedEquilibrium) -> FoldConditionMatch:
    """Find the tabulated row whose hypotheses hold and compare its class with ``fe``'s.

    Equilibria with the first cell on the fold are mapped through the cell swap.
    For ``b != 0`` no row applies and the computed class is returned with
    status ``"inconclusive"``.
    """
    if not fe.in_attracting_boundary:
        raise NoRowMatches("the folded equilibrium is not on the boundary of an attracting region")
    x1 = fe.free_coordinate
    region = fe.region
    lookup_region = region if fe.folded_variable == "second" else _GAMMA_REGION[region]
    if p.b != 0:
        return FoldConditionMatch(region, None, fe.stability, None, "inconclusive")
    rows = [r for r in FOLD_CONDITIONS if r.region is lookup_region and r.hypotheses_hold(x1, p.c, p.k)]
    if not rows:
        raise NoRowMatches(f"no tabulated condition holds for x1*={x1}, c={p.c}, k={p.k}")
    row = rows[0]
    if fe.stability in (StabilityClass.SADDLE_NODE, StabilityClass.DEGENERATE):
        return FoldConditionMatch(region, row, fe.stability, row.saddle, "inconclusive")
    ok = (fe.stability is StabilityClass.SADDLE) == row.saddle
    return FoldConditionMatch(region, row, fe.stability, row.saddle, "match" if ok else "mismatch")


# -- double folds -------------------------------------------------------------------

@dataclass(frozen=True)
class DoubleFoldReport:
    point: tuple[float, float]
    matrix: np.ndarray = field(repr=False)
    det: float
    trace: float
    stability: StabilityClass
    verdict: CanardVerdict


def double_fold_point(same_sign: bool, sigma: int) -> tuple[float, float]:
    xs = sigma * FOLD_X
    return (xs, xs) if same_sign else (xs, -xs)


def double_fold_jacobian(p: Params, same_sign: bool, sigma: int,
                         tol: float = DET_TOL) -> DoubleFoldReport:
    """Jacobian of ``F`` at a double fold with its canard verdict.

    Same-sign folds ``(x*, x*)``: canards are possible iff ``sigma c < 2/sqrt(3) - b phi(2/sqrt(3))``.
    Opposite-sign folds ``(x*, -x*)``: with ``beta = 2/sqrt(3) - (b + 2k) phi(2/sqrt(3))``,
    possible when ``b + 2k < 3/8`` and ``|c| < beta``, excluded when ``b + 2k > 3/8``
    and ``|c| < -beta``; anything else (including the centre case) is inconclusive.
    """
    _require_symmetric(p)
    xs = sigma * FOLD_X
    curv = phi_double_prime(xs)
    if same_sign:
        lam = curv * (xs - p.b * phi(xs) - p.c)
        mat = np.array([[0.0, lam], [lam, 0.0]])
        threshold = FOLD_X - p.b * FOLD_Y
        if abs(sigma * p.c - threshold) <= tol:
            verdict = CanardVerdict.INCONCLUSIVE
        elif sigma * p.c < threshold:
            verdict = CanardVerdict.POSSIBLE
        else:
            verdict = CanardVerdict.NONE
    else:
        s = p.b + 2.0 * p.k
        mat = np.array([
            [0.0, -curv * (xs - s * phi(xs) - p.c)],
            [-curv * (xs - s * phi(xs) + p.c), 0.0],
        ])
        beta = FOLD_X - s * FOLD_Y
        if s < 3.0 / 8.0 and abs(p.c) < beta - tol:
            verdict = CanardVerdict.POSSIBLE
        elif s > 3.0 / 8.0 and abs(p.c) < -beta - tol:
            verdict = CanardVerdict.NONE
        else:
            verdict = CanardVerdict.INCONCLUSIVE
    det = float(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
    trace = float(mat[0, 0] + mat[1, 1])
    stability = classify_trace_det(det, trace, tol)
    return DoubleFoldReport(double_fold_point(same_sign, sigma), mat, det, trace, stability, verdict)


def same_sign_folded_node(p: Params, sigma: int) -> bool:
    """True when ``b = 0``, ``k > 0``, ``sigma c < 2/sqrt(3)`` and the folded equilibrium
    beyond the same-sign fold is a node (``0 < det < 1/4``)."""
    if p.b != 0:
        raise ValueError("this check is stated for b = 0")
    if not (p.k > 0 and sigma * p.c < FOLD_X):
        return False
    for fe in find_folded_equilibria(p, sigma):
        if sigma * fe.x1_star > FOLD_X and 0.0 < fe.det < 0.25:
            return True
    return False


# -- singular orbits ------------------------------------------------------------------

@dataclass
class SlowArc:
    times: np.ndarray
    states: np.ndarray  # rows (x1, x2, y1, y2), all on C0


@dataclass(frozen=True)
class Jump:
    time: float
    before: State
    after: State
    variables: tuple[int, ...]


@dataclass
class SingularOrbit:
    """Alternating slow arcs and instantaneous fast jumps.

    ``termination`` is ``"arcs"`` (requested number of arcs done),
    ``"equilibrium"`` (the slow flow settled), ``"double_fold"`` (both cells hit
    a fold together off the invariant planes) or ``"time_limit"``.
    """

    arcs: list[SlowArc]
    jumps: list[Jump]
    termination: str

    @property
    def final_state(self) -> State:
        if self.jumps and (not self.arcs or self.jumps[-1].time >= self.arcs[-1].times[-1]):
            return self.jumps[-1].after
        return State(*map(float, self.arcs[-1].states[-1]))

    def raise_for_termination(self) -> None:
        if self.termination == "double_fold":
            raise ReachedDoubleFold(f"double fold reached at {self.final_state}")
        if self.termination == "equilibrium":
            raise SlowEquilibriumReached(f"slow flow settled at {self.final_state}")

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        """All arc samples concatenated (jumps appear as repeated times)."""
        if not self.arcs:
            return np.empty(0), np.empty((0, 4))
        return (np.concatenate([a.times for a in self.arcs]),
                np.vstack([a.states for a in self.arcs]))

    def to_csv(self) -> str:
        lines = ["t,x1,x2,y1,y2,arc"]
        for n, arc in enumerate(self.arcs):
            for t, row in zip(arc.times, arc.states):
                lines.append(",".join(f"{v:.17g}" for v in (t, *row)) + f",{n}")
        return "\n".join(lines) + "\n"


def _arc_state(y: np.ndarray, signs: tuple[int, int]) -> np.ndarray:
    # Trial stages of the slow integrator may overshoot the fold; hold x at the fold there.
    xs = [attracting_branch(min(sg * v, FOLD_Y) * sg, sg) for v, sg in zip(y, signs)]
    return np.array([xs[0], xs[1], y[0], y[1]])


def singular_orbit(p: Params, x0: tuple[float, float], arcs: int = 4, t_arc: float = 200.0,
                   samples_per_arc: int = 200, eq_tol: float = 1e-9,
                   double_fold_tol: float = 1e-9) -> SingularOrbit:
    """Concatenate slow arcs on ``C0`` with fold jumps, starting from ``x0`` in an attracting region.

    Slow arcs are integrated in the slow variables with ``x_i`` recovered from the
    attracting branch, so the fold is the event ``sign_i * y_i = phi(2/sqrt(3))``.
    A jump replaces the folded ``x_i`` by its landing point and keeps ``y``.
    When both cells reach a fold together on the synchrony or antisynchrony
    plane they jump together; elsewhere this stops the orbit.
    """
    x1, x2 = map(float, x0)
    if not (abs(x1) > FOLD_X and abs(x2) > FOLD_X):
        raise ValueError("the initial point must lie in an attracting region")
    signs = (1 if x1 > 0 else -1, 1 if x2 > 0 else -1)
    y = np.array([phi(x1), phi(x2)])
    t = 0.0
    arc_list: list[SlowArc] = []
    jumps: list[Jump] = []

    def field_y(_t, yy):
        s = _arc_state(yy, signs)
        return np.array(slow_g(p, s[0], s[1]))

    if np.max(np.abs(field_y(0.0, y))) <= eq_tol:
        return SingularOrbit([], [], "equilibrium")

    termination = "arcs"
    for _ in range(arcs):
        events = []
        for i in (0, 1):
            def ev(_t, yy, i=i, sg=signs[i]):
                return FOLD_Y - sg * yy[i]
            ev.terminal = True
            ev.direction = -1
            events.append(ev)
        sol = solve_ivp(field_y, (t, t + t_arc), y, method="DOP853", events=events,
                        rtol=1e-12, atol=1e-14, dense_output=True)
        t_hits = sorted((sol.t_events[i][0], i) for i in (0, 1) if len(sol.t_events[i]))
        t_stop = t_hits[0][0] if t_hits else sol.t[-1]
        grid = np.linspace(t, t_stop, samples_per_arc)
        ys = sol.sol(grid).T
        if not t_hits:
            arc_list.append(SlowArc(grid, np.array([_arc_state(row, signs) for row in ys])))
            t, y = t_stop, ys[-1].copy()
            termination = "equilibrium" if np.max(np.abs(field_y(t, y))) <= eq_tol else "time_limit"
            break

        i = t_hits[0][1]
        j = 1 - i
        y = sol.y_events[i][0].copy()
        # Exact membership of the synchrony or antisynchrony plane survives integration bit for bit.
        mirror = 1.0 if y[j] == y[i] else -1.0 if y[j] == -y[i] else 0.0
        y[i] = signs[i] * FOLD_Y
        folded = [i]
        if mirror:
            y[j] = mirror * y[i]
            folded.append(j)
        ys[-1] = y
        arc_states = np.array([_arc_state(row, signs) for row in ys])
        for v in folded:
            arc_states[-1, v] = signs[v] * FOLD_X
        arc_list.append(SlowArc(grid, arc_states))
        t = t_stop

        before = State(*map(float, arc_states[-1]))
        if not mirror and abs(abs(before[j]) - FOLD_X) <= double_fold_tol:
            termination = "double_fold"
            break
        new_x = [before.x1, before.x2]
        for v in folded:
            new_x[v] = jump_target(before[v])
        after = State(new_x[0], new_x[1], before.y1, before.y2)
        jumps.append(Jump(t, before, after, tuple(sorted(folded))))
        signs = tuple(-signs[v] if v in folded else signs[v] for v in (0, 1))
    return SingularOrbit(arc_list, jumps, termination)


def iter_arc_endpoints(orbit: SingularOrbit) -> Iterable[tuple[State, State]]:
    for arc in orbit.arcs:
        yield State(*map(float, arc.states[0])), State(*map(float, arc.states[-1]))


# Names used by the public interface description.
classify_table1 = match_fold_condition
theorem59_node_check = same_sign_folded_node
