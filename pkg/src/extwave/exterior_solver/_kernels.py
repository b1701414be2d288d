"""Compiled stencil loops for the Cartesian leapfrog solver.

All loops visit only nodes in the disk |x| <= rho that contains every
nonzero value; arrays have shape (N, n, n) with rows indexed by y.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _row_range(j, x0, h, rho, n):
    y = x0 + j * h
    rem = rho * rho - y * y
    if rem < 0.0:
        return 1, 1
    half = math.sqrt(rem)
    i0 = max(1, int(math.floor((-half - x0) / h)))
    i1 = min(n - 1, int(math.ceil((half - x0) / h)) + 1)
    return i0, i1


@njit(cache=True)
def leapfrog(u_prev, u, mask, c2, x0, h, rho):
    """Overwrite ``u_prev`` with the next level; returns (max |u|, finite flag)."""
    N, n, _ = u.shape
    m = 0.0
    ok = True
    for c in range(N):
        for j in range(1, n - 1):
            i0, i1 = _row_range(j, x0, h, rho, n)
            for i in range(i0, i1):
                if mask[j, i]:
                    u_prev[c, j, i] = 0.0
                    continue
                lap = (u[c, j, i + 1] + u[c, j, i - 1] + u[c, j + 1, i] + u[c, j - 1, i]
                       - 4.0 * u[c, j, i])
                v = 2.0 * u[c, j, i] - u_prev[c, j, i] + c2 * lap
                u_prev[c, j, i] = v
                if not math.isfinite(v):
                    ok = False
                elif abs(v) > m:
                    m = abs(v)
    return m, ok


@njit(cache=True)
def add_box(u, F, j0, i0, coef, mask, x0, h, rho):
    """u[:, j0 + j, i0 + i] += coef * F[:, j, i] on unmasked nodes with |x| <= rho."""
    N, nj, ni = F.shape
    ok = True
    rho2 = rho * rho
    for c in range(N):
        for j in range(nj):
            y = x0 + (j0 + j) * h
            for i in range(ni):
                x = x0 + (i0 + i) * h
                if mask[j0 + j, i0 + i] or x * x + y * y > rho2:
                    continue
                v = u[c, j0 + j, i0 + i] + coef * F[c, j, i]
                u[c, j0 + j, i0 + i] = v
                if not math.isfinite(v):
                    ok = False
    return ok


@njit(cache=True, fastmath=True)
def energies(u0, u1, mask, x0, h, dt, b, rho):
    """Staggered energy between levels u0 = u^n and u1 = u^{n+1}.

    E = h^2/2 sum |(u1 - u0)/dt|^2 + 1/2 sum over grid edges of the
    products of the two levels' differences.  Returns (E, E restricted to
    nodes and edge midpoints with |x| < b).
    """
    N, n, _ = u0.shape
    E = 0.0
    Eb = 0.0
    b2 = b * b
    h2 = h * h
    for c in range(N):
        for j in range(1, n - 1):
            y = x0 + j * h
            i0, i1 = _row_range(j, x0, h, rho + 2 * h, n)
            for i in range(max(0, i0 - 1), i1):
                x = x0 + i * h
                v = (u1[c, j, i] - u0[c, j, i]) / dt
                e = 0.5 * h2 * v * v
                # edge to the right
                ex = 0.5 * (u0[c, j, i + 1] - u0[c, j, i]) * (u1[c, j, i + 1] - u1[c, j, i])
                # edge above
                ey = 0.5 * (u0[c, j + 1, i] - u0[c, j, i]) * (u1[c, j + 1, i] - u1[c, j, i])
                if mask[j, i]:
                    e = 0.0
                E += e + ex + ey
                if x * x + y * y < b2:
                    Eb += e
                xm = x + 0.5 * h
                if xm * xm + y * y < b2:
                    Eb += ex
                ym = y + 0.5 * h
                if x * x + ym * ym < b2:
                    Eb += ey
    return E, Eb


@njit(cache=True, fastmath=True)
def sup_derivatives(u0, u1, mask, x0, h, dt, t, rho):
    """sup |du| and sup |du| / w_{1/2}(t, x) at the half step between u0 and u1."""
    N, n, _ = u0.shape
    s = 0.0
    e = 0.0
    for j in range(1, n - 1):
        y = x0 + j * h
        i0, i1 = _row_range(j, x0, h, rho + 2 * h, n)
        for i in range(i0, i1):
            if mask[j, i]:
                continue
            q = 0.0
            for c in range(N):
                ut = (u1[c, j, i] - u0[c, j, i]) / dt
                ux = (u0[c, j, i + 1] - u0[c, j, i - 1] + u1[c, j, i + 1] - u1[c, j, i - 1]) / (4 * h)
                uy = (u0[c, j + 1, i] - u0[c, j - 1, i] + u1[c, j + 1, i] - u1[c, j - 1, i]) / (4 * h)
                q += ut * ut + ux * ux + uy * uy
            if q == 0.0:
                continue
            q = math.sqrt(q)
            if q > s:
                s = q
            x = x0 + i * h
            r2 = x * x + y * y
            r = math.sqrt(r2)
            tm = math.sqrt(1.0 + (t - r) * (t - r))
            w = 1.0 / math.sqrt(math.sqrt(1.0 + r2) * tm) + 1.0 / math.sqrt(math.sqrt(1.0 + (t + r) * (t + r)) * tm)
            if q / w > e:
                e = q / w
    return s, e


def warm_up():
    """Compile the kernels on a tiny grid."""
    u = np.zeros((1, 5, 5))
    m = np.zeros((5, 5), np.bool_)
    leapfrog(u.copy(), u, m, 0.25, -1.0, 0.5, 1.0)
    add_box(u, u[:, :2, :2].copy(), 1, 1, 1.0, m, -1.0, 0.5, 1.0)
    energies(u, u, m, -1.0, 0.5, 0.25, 1.0, 1.0)
    sup_derivatives(u, u, m, -1.0, 0.5, 0.25, 0.0, 1.0)
