"""Compiled inner loop: an L-stable Rosenbrock method (Rodas3) for the 4-D field.

The vector field is duplicated here from :mod:`coupled_fhn.model` so the whole
step loop compiles to machine code; tests check both copies agree.

Parameter vector layout: ``prm = [b, c, k, eps, b2, c2, k2]``.
Mode codes: 0 symmetric, 1 asymmetric forcing, 2 perturbed second cell.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

OK, MAX_STEPS, UNDERFLOW, NONFINITE = 0, 1, 2, 3

# Rodas3 in the increment form (1/(h*gamma) - J) K_i = f(y + sum A_ij K_j) + sum C_ij/h K_j.
_GAMMA = 0.5
_A = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 0.0, 1.0]])
_C = np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [1.0, -1.0, 0.0], [1.0, -1.0, -8.0 / 3.0]])
_M = np.array([2.0, 0.0, 1.0, 1.0])
_E = np.array([0.0, 0.0, 0.0, 1.0])
_NEW_F = np.array([True, False, True, True])
ORDER = 3


@njit(cache=True)
def field(mode, prm, y, out):
    b, c, k, eps = prm[0], prm[1], prm[2], prm[3]
    x1, x2, y1, y2 = y[0], y[1], y[2], y[3]
    out[0] = (4.0 * x1 - x1 * x1 * x1 - y1) / eps
    out[1] = (4.0 * x2 - x2 * x2 * x2 - y2) / eps
    if mode == 1:
        out[2] = x1 - b * y1 - c + k * y2
        out[3] = x2 - b * y2 - c
    else:
        if mode == 2:
            b2, c2, k2 = prm[4], prm[5], prm[6]
        else:
            b2, c2, k2 = b, c, k
        out[2] = x1 - b * y1 - c - k * (y1 - y2)
        out[3] = x2 - b2 * y2 - c2 - k2 * (y2 - y1)


@njit(cache=True)
def jacobian(mode, prm, y, jac):
    b, k, eps = prm[0], prm[2], prm[3]
    jac[:, :] = 0.0
    jac[0, 0] = (4.0 - 3.0 * y[0] * y[0]) / eps
    jac[0, 2] = -1.0 / eps
    jac[1, 1] = (4.0 - 3.0 * y[1] * y[1]) / eps
    jac[1, 3] = -1.0 / eps
    jac[2, 0] = 1.0
    jac[3, 1] = 1.0
    if mode == 1:
        jac[2, 2] = -b
        jac[2, 3] = k
        jac[3, 3] = -b
    else:
        if mode == 2:
            b2, k2 = prm[4], prm[6]
        else:
            b2, k2 = b, k
        jac[2, 2] = -b - k
        jac[2, 3] = k
        jac[3, 2] = k2
        jac[3, 3] = -b2 - k2


@njit(cache=True)
def _lu_factor(a, piv):
    n = a.shape[0]
    for col in range(n):
        best = col
        for row in range(col + 1, n):
            if abs(a[row, col]) > abs(a[best, col]):
                best = row
        piv[col] = best
        if best != col:
            for j in range(n):
                tmp = a[col, j]
                a[col, j] = a[best, j]
                a[best, j] = tmp
        if a[col, col] == 0.0:
            return False
        for row in range(col + 1, n):
            a[row, col] /= a[col, col]
            for j in range(col + 1, n):
                a[row, j] -= a[row, col] * a[col, j]
    return True


@njit(cache=True)
def _lu_solve(a, piv, rhs):
    n = a.shape[0]
    for i in range(n):
        p = piv[i]
        if p != i:
            tmp = rhs[i]
            rhs[i] = rhs[p]
            rhs[p] = tmp
    for i in range(n):
        for j in range(i):
            rhs[i] -= a[i, j] * rhs[j]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            rhs[i] -= a[i, j] * rhs[j]
        rhs[i] /= a[i, i]


@njit(cache=True)
def _grow(arr, size):
    out = np.empty((size, arr.shape[1]))
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True, nogil=True)
def rodas3(mode, prm, t0, y0, t_end, rtol, atol, h0, h_max, max_steps):
    """Integrate from ``t0`` to ``t_end``.

    Returns ``(times, states, derivs, n_accepted, n_rejected, status)`` where
    ``derivs`` holds the field at every stored point (for Hermite dense output).
    """
    n = 4
    cap = 1024
    ts = np.empty((cap, 1))
    ys = np.empty((cap, n))
    fs = np.empty((cap, n))

    y = y0.copy()
    f0 = np.empty(n)
    field(mode, prm, y, f0)
    ts[0, 0] = t0
    ys[0] = y
    fs[0] = f0
    count = 1

    jac = np.empty((n, n))
    mat = np.empty((n, n))
    piv = np.empty(n, dtype=np.int64)
    stages = np.empty((4, n))
    ytmp = np.empty(n)
    ftmp = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)

    t = t0
    span = t_end - t0
    for i in range(n):
        if not math.isfinite(f0[i]):
            return ts[:1, 0].copy(), ys[:1].copy(), fs[:1].copy(), 0, 0, NONFINITE
    if h0 > 0.0:
        h = h0
    else:
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 = max(d0, abs(y[i]) / sc)
            d1 = max(d1, abs(f0[i]) / sc)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h = min(h, h_max, span)

    n_acc = 0
    n_rej = 0
    status = OK
    reject_last = False
    while t < t_end:
        if n_acc + n_rej >= max_steps:
            status = MAX_STEPS
            break
        if t + h > t_end:
            h = t_end - t
        h_min = 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0)
        if h < h_min:
            status = UNDERFLOW
            break

        jacobian(mode, prm, y, jac)
        for i in range(n):
            for j in range(n):
                mat[i, j] = -jac[i, j]
            mat[i, i] += 1.0 / (h * _GAMMA)
        if not _lu_factor(mat, piv):
            h *= 0.5
            n_rej += 1
            continue

        for s in range(4):
            if s == 0:
                for i in range(n):
                    ftmp[i] = f0[i]
            elif _NEW_F[s]:
                for i in range(n):
                    acc = y[i]
                    for j in range(s):
                        acc += _A[s, j] * stages[j, i]
                    ytmp[i] = acc
                field(mode, prm, ytmp, ftmp)
            for i in range(n):
                acc = ftmp[i]
                for j in range(s):
                    acc += _C[s, j] / h * stages[j, i]
                stages[s, i] = acc
            _lu_solve(mat, piv, stages[s])

        finite = True
        errnorm = 0.0
        for i in range(n):
            acc = y[i]
            e = 0.0
            for s in range(4):
                acc += _M[s] * stages[s, i]
                e += _E[s] * stages[s, i]
            ynew[i] = acc
            err[i] = e
            if not (math.isfinite(acc) and math.isfinite(e)):
                finite = False
            sc = atol + rtol * max(abs(y[i]), abs(acc))
            errnorm = max(errnorm, abs(e) / sc)

        if not finite:
            # A blow-up inside a rejected trial step is recoverable; only give up at h_min.
            h *= 0.25
            n_rej += 1
            reject_last = True
            if h < h_min:
                status = NONFINITE
                break
            continue

        if errnorm <= 1.0:
            t = t + h
            for i in range(n):
                y[i] = ynew[i]
            field(mode, prm, y, f0)
            if count == ts.shape[0]:
                cap = 2 * cap
                ts = _grow(ts, cap)
                ys = _grow(ys, cap)
                fs = _grow(fs, cap)
            ts[count, 0] = t
            ys[count] = y
            fs[count] = f0
            count += 1
            n_acc += 1
            fac = 6.0 if errnorm == 0.0 else min(6.0, max(0.2, 0.9 * errnorm ** (-1.0 / ORDER)))
            if reject_last:
                fac = min(fac, 1.0)
            reject_last = False
            h = min(h * fac, h_max)
        else:
            n_rej += 1
            reject_last = True
            h *= max(0.2, 0.9 * errnorm ** (-1.0 / ORDER))

    return ts[:count, 0].copy(), ys[:count].copy(), fs[:count].copy(), n_acc, n_rej, status
