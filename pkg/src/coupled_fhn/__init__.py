"""Two FitzHugh-Nagumo cells coupled through the slow equations."""
from .model import (
    FOLD_X,
    FOLD_Y,
    CouplingMode,
    Params,
    State,
    ZState,
    delta,
    from_z,
    gamma,
    jacobian,
    phi,
    phi_double_prime,
    phi_prime,
    rhs,
    rhs_z,
    to_z,
)
from .integrator import EventSpec, IntegratorConfig, Trajectory, integrate, integrate_two

__version__ = "0.1.0"
