"""Independent reference computations shared by the unit and acceptance tests."""
import math

import numpy as np

from coupled_fhn.model import FOLD_X, Params, phi
from coupled_fhn.reduced import CanardVerdict, F, jacobian_DH


def sample_condition_row(row, rng, n, c_span=4.0, x_span=(FOLD_X + 1e-3, 3.5), max_tries=200_000):
    """Draw ``n`` parameter sets ``(x1*, c, k)`` with ``b = 0`` satisfying ``row``'s hypotheses.

    ``x1*`` and ``c`` are drawn first; ``k`` then follows from requiring
    ``(x1*, x2*)`` to be a folded equilibrium.
    """
    x2 = row.sigma * FOLD_X
    inside = row.region.value in ("A1", "A4")
    draws = []
    for _ in range(max_tries):
        x1 = rng.uniform(*x_span) * (1 if inside else -1)
        lo, hi = row.c_bounds(x1)
        lo = max(lo, -c_span) if math.isinf(lo) else lo
        hi = min(hi, c_span) if math.isinf(hi) else hi
        if not lo < hi:
            continue
        c = rng.uniform(lo, hi)
        denom = phi(x1) - phi(x2)
        if denom == 0:
            continue
        k = (c - x2) / denom
        if abs(k) < 1e-6 or not row.hypotheses_hold(x1, c, k):
            continue
        draws.append((x1, c, k))
        if len(draws) == n:
            return draws
    raise RuntimeError(f"could not sample row {row.number}")


def is_saddle_by_eigenvalues(matrix):
    lam = np.linalg.eigvals(matrix)
    return bool(np.all(np.abs(lam.imag) < 1e-12) and lam.real.min() < 0 < lam.real.max())


def fd_jacobian_F(p, x1, x2, h=1e-6):
    cols = []
    for dx in ((h, 0.0), (0.0, h)):
        plus = np.array(F(p, x1 + dx[0], x2 + dx[1]))
        minus = np.array(F(p, x1 - dx[0], x2 - dx[1]))
        cols.append((plus - minus) / (2 * h))
    return np.column_stack(cols)


def double_fold_verdict_by_eigenvectors(p, same_sign, sigma, gap=1e-7):
    """Canard verdict from the stable eigendirection of a finite-difference Jacobian.

    The adjacent attracting quadrant is entered along directions with
    ``v1 * v2 > 0`` at a same-sign fold and ``v1 * v2 < 0`` at an opposite-sign one.
    """
    xs = sigma * FOLD_X
    x1, x2 = (xs, xs) if same_sign else (xs, -xs)
    lam, vec = np.linalg.eig(fd_jacobian_F(p, x1, x2))
    if np.any(np.abs(lam.imag) > gap) or not lam.real.min() < -gap < gap < lam.real.max():
        return CanardVerdict.INCONCLUSIVE
    v = vec[:, int(np.argmin(lam.real))].real
    enters = v[0] * v[1] > 0 if same_sign else v[0] * v[1] < 0
    return CanardVerdict.POSSIBLE if enters else CanardVerdict.NONE


def row_classification(row, x1, c, k):
    p = Params(b=0.0, c=c, k=k)
    return is_saddle_by_eigenvalues(jacobian_DH(p, x1, row.sigma, "second"))
