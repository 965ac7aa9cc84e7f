"""Vector field of two FitzHugh-Nagumo cells coupled through their slow equations.

Each cell has a fast variable ``x_i`` and a slow variable ``y_i``::

    eps * dx_i/dt = -y_i + phi(x_i)
          dy_i/dt = x_i - b*y_i - c - k*(y_i - y_j)

with the cubic ``phi(x) = 4x - x**3``. Two further couplings are supported:
one-directional forcing of cell 1 by cell 2, and a symmetric system whose
second slow equation uses its own ``(b2, c2, k2)``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np

FOLD_X = 2.0 / math.sqrt(3.0)
"""Fast-variable value of the fold lines, ``phi'(FOLD_X) = 0``."""

FOLD_Y = 16.0 / (3.0 * math.sqrt(3.0))
"""``phi(FOLD_X)``, the local maximum of the cubic."""


def phi(x):
    return 4.0 * x - x**3


def phi_prime(x):
    return 4.0 - 3.0 * x**2


def phi_double_prime(x):
    return -6.0 * x


class CouplingMode(str, enum.Enum):
    SYMMETRIC = "SymmetricBidirectional"
    ASYMMETRIC = "AsymmetricForcing"
    PERTURBED = "PerturbedSecondCell"


class State(NamedTuple):
    x1: float
    x2: float
    y1: float
    y2: float


class ZState(NamedTuple):
    """Sum/difference coordinates: ``z1=x1+x2, z2=y1+y2, z3=x1-x2, z4=y1-y2``."""

    z1: float
    z2: float
    z3: float
    z4: float


@dataclass(frozen=True)
class Params:
    b: float
    c: float
    k: float
    epsilon: float = 0.01
    mode: CouplingMode = CouplingMode.SYMMETRIC
    b2: float | None = None
    c2: float | None = None
    k2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", CouplingMode(self.mode))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        for name in ("b", "c", "k", "epsilon"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mode is CouplingMode.PERTURBED:
            if None in (self.b2, self.c2, self.k2):
                raise ValueError("PerturbedSecondCell needs b2, c2 and k2")
        elif (self.b2, self.c2, self.k2) != (None, None, None):
            raise ValueError(f"b2/c2/k2 only apply to {CouplingMode.PERTURBED.value}")

    @property
    def symmetric(self) -> bool:
        return self.mode is CouplingMode.SYMMETRIC

    def second_cell(self) -> tuple[float, float, float]:
        """``(b, c, k)`` used by the second slow equation."""
        if self.mode is CouplingMode.PERTURBED:
            return self.b2, self.c2, self.k2
        return self.b, self.c, self.k

    def replace(self, **changes) -> "Params":
        data = {f: getattr(self, f) for f in ("b", "c", "k", "epsilon", "mode", "b2", "c2", "k2")}
        data.update(changes)
        return Params(**data)

    def to_dict(self) -> dict[str, Any]:
        if self.mode is CouplingMode.PERTURBED:
            mode: Any = {"name": self.mode.value, "b2": self.b2, "c2": self.c2, "k2": self.k2}
        else:
            mode = self.mode.value
        return {"b": self.b, "c": self.c, "k": self.k, "epsilon": self.epsilon, "mode": mode}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Params":
        unknown = set(data) - {"b", "c", "k", "epsilon", "mode"}
        if unknown:
            raise ValueError(f"unknown Params fields: {sorted(unknown)}")
        mode = data.get("mode", CouplingMode.SYMMETRIC.value)
        extra: dict[str, float] = {}
        if isinstance(mode, dict):
            extra = {key: float(mode[key]) for key in ("b2", "c2", "k2")}
            mode = mode["name"]
        return cls(
            b=float(data["b"]),
            c=float(data["c"]),
            k=float(data["k"]),
            epsilon=float(data.get("epsilon", 0.01)),
            mode=CouplingMode(mode),
            **extra,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Params":
        return cls.from_dict(json.loads(text))


def as_state(s: Sequence[float]) -> State:
    if len(s) != 4:
        raise ValueError(f"a state has 4 components, got {len(s)}")
    return State(*(float(v) for v in s))


def slow_field(p: Params, x1, x2, y1, y2):
    """Right-hand sides of the two slow equations (vectorised over arrays)."""
    if p.mode is CouplingMode.ASYMMETRIC:
        return x1 - p.b * y1 - p.c + p.k * y2, x2 - p.b * y2 - p.c
    b2, c2, k2 = p.second_cell()
    return x1 - p.b * y1 - p.c - p.k * (y1 - y2), x2 - b2 * y2 - c2 - k2 * (y2 - y1)


def rhs(p: Params, s: Sequence[float]) -> np.ndarray:
    """Time derivative ``(dx1, dx2, dy1, dy2)``; fast components already divided by eps."""
    x1, x2, y1, y2 = s
    g1, g2 = slow_field(p, x1, x2, y1, y2)
    return np.array([(phi(x1) - y1) / p.epsilon, (phi(x2) - y2) / p.epsilon, g1, g2])


def jacobian(p: Params, s: Sequence[float]) -> np.ndarray:
    x1, x2, _, _ = s
    e = p.epsilon
    jac = np.zeros((4, 4))
    jac[0, 0] = phi_prime(x1) / e
    jac[0, 2] = -1.0 / e
    jac[1, 1] = phi_prime(x2) / e
    jac[1, 3] = -1.0 / e
    jac[2, 0] = 1.0
    jac[3, 1] = 1.0
    if p.mode is CouplingMode.ASYMMETRIC:
        jac[2, 2], jac[2, 3] = -p.b, p.k
        jac[3, 3] = -p.b
    else:
        b2, _, k2 = p.second_cell()
        jac[2, 2], jac[2, 3] = -p.b - p.k, p.k
        jac[3, 2], jac[3, 3] = k2, -b2 - k2
    return jac


def to_z(s: Sequence[float]) -> ZState:
    x1, x2, y1, y2 = s
    return ZState(x1 + x2, y1 + y2, x1 - x2, y1 - y2)


def from_z(z: Sequence[float]) -> State:
    z1, z2, z3, z4 = z
    return State((z1 + z3) / 2.0, (z1 - z3) / 2.0, (z2 + z4) / 2.0, (z2 - z4) / 2.0)


def rhs_z(p: Params, z: Sequence[float]) -> np.ndarray:
    """The symmetric vector field written in sum/difference coordinates."""
    if not p.symmetric:
        raise ValueError("rhs_z is only defined for symmetric bidirectional coupling")
    z1, z2, z3, z4 = z
    u, v = (z1 + z3) / 2.0, (z1 - z3) / 2.0
    e = p.epsilon
    return np.array(
        [
            (-z2 + phi(u) + phi(v)) / e,
            z1 - p.b * z2 - 2.0 * p.c,
            (-z4 + phi(u) - phi(v)) / e,
            z3 - p.b * z4 - 2.0 * p.k * z4,
        ]
    )


def gamma(s: Sequence[float]) -> State:
    """Swap the two cells."""
    x1, x2, y1, y2 = s
    return State(x2, x1, y2, y1)


def delta(s: Sequence[float]) -> State:
    """Swap the two cells and change sign; a symmetry only when ``c == 0``."""
    x1, x2, y1, y2 = s
    return State(-x2, -x1, -y2, -y1)


# Linear action of gamma and delta on tangent vectors.
GAMMA_MATRIX = np.array(
    [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float
)
DELTA_MATRIX = -GAMMA_MATRIX
