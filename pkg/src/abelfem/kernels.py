"""Hot loops: separated panel-pair quadrature and cosine projection.

Each routine exists twice, a numba version and a numpy version with the same
signature. ``separated_local`` / ``cosine_project`` dispatch on
``_accel.USE_NUMBA``.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit


# ---------------------------------------------------------------- separated pairs


@njit
def _horner2(poly, x, y):
    kv = 0.0
    for a in range(poly.shape[0] - 1, -1, -1):
        row = 0.0
        for b in range(poly.shape[1] - 1, -1, -1):
            row = row * y + poly[a, b]
        kv = kv * x + row
    return kv


@njit
def _contract(G, phi, out, p, scale):
    m1, n = phi.shape
    T = np.empty((n, m1))
    for k in range(n):
        for j in range(m1):
            acc = 0.0
            for l in range(n):
                acc += G[k, l] * phi[j, l]
            T[k, j] = acc
    for i in range(m1):
        for j in range(m1):
            acc = 0.0
            for k in range(n):
                acc += phi[i, k] * T[k, j]
            out[p, i, j] = acc * scale


@njit
def _separated_poly_nb(xt, ht, xs, hs, r, w, phi, am1, poly, out):
    n = r.size
    G = np.empty((n, n))
    for p in range(xt.size):
        for k in range(n):
            x = xt[p] + ht[p] * r[k]
            for l in range(n):
                y = xs[p] + hs[p] * r[l]
                G[k, l] = w[k] * w[l] * math.exp(am1 * math.log(x - y)) * _horner2(poly, x, y)
        _contract(G, phi, out, p, ht[p] * hs[p])


@njit
def _separated_kvals_nb(xt, ht, xs, hs, r, w, phi, am1, kvals, out):
    n = r.size
    G = np.empty((n, n))
    for p in range(xt.size):
        for k in range(n):
            x = xt[p] + ht[p] * r[k]
            for l in range(n):
                y = xs[p] + hs[p] * r[l]
                G[k, l] = w[k] * w[l] * math.exp(am1 * math.log(x - y)) * kvals[p, k, l]
        _contract(G, phi, out, p, ht[p] * hs[p])


def _separated_numpy(xt, ht, xs, hs, r, w, phi, am1, kernel):
    X = xt[:, None] + ht[:, None] * r[None, :]
    Y = xs[:, None] + hs[:, None] * r[None, :]
    Xb, Yb = X[:, :, None], Y[:, None, :]
    G = (Xb - Yb) ** am1 * kernel(Xb, Yb) * (w[:, None] * w[None, :])
    L = phi @ (G @ phi.T)
    return L * (ht * hs)[:, None, None]


def separated_local(xt, ht, xs, hs, r, w, phi, alpha, kernel):
    """Tensor-Gauss local matrices for panel pairs, without the 1/Gamma(alpha) factor.

    ``xt, ht`` (``xs, hs``) are left ends and widths of the test (trial)
    panels, ``r, w`` a Legendre rule on [0, 1] and ``phi[j, k]`` the shape
    functions at ``r[k]``. Returns ``(P, m+1, m+1)``.
    """
    am1 = alpha - 1.0
    if not _accel.USE_NUMBA:
        return _separated_numpy(xt, ht, xs, hs, r, w, phi, am1, kernel)
    out = np.empty((xt.size, phi.shape[0], phi.shape[0]))
    args = (xt, ht, xs, hs, r, w, np.ascontiguousarray(phi), am1)
    if kernel.poly is not None:
        _separated_poly_nb(*args, np.ascontiguousarray(kernel.poly, dtype=float), out)
    else:
        X = xt[:, None] + ht[:, None] * r[None, :]
        Y = xs[:, None] + hs[:, None] * r[None, :]
        kv = np.ascontiguousarray(np.broadcast_to(kernel(X[:, :, None], Y[:, None, :]), (xt.size, r.size, r.size)), dtype=float)
        _separated_kvals_nb(*args, kv, out)
    return out


# ---------------------------------------------------------------- cosine projection


@njit
def _cosine_project_nb(c, scale, even, odd, mu, out):
    # out[n] += sum_cells scale * (cos(mu c) even[cell, n] - sin(mu c) odd[cell, n])
    for q in range(c.size):
        for n in range(mu.size):
            ph = mu[n] * c[q]
            out[n] += scale[q] * (math.cos(ph) * even[q, n] - math.sin(ph) * odd[q, n])


def _cosine_project_numpy(c, scale, even, odd, mu, out):
    ph = np.multiply.outer(c, mu)
    out += np.sum(scale[:, None] * (np.cos(ph) * even - np.sin(ph) * odd), axis=0)


def cosine_project(c, scale, even, odd, mu, out):
    """Accumulate per-cell modal contributions into ``out`` (in place)."""
    if _accel.USE_NUMBA:
        _cosine_project_nb(c, scale, np.ascontiguousarray(even), np.ascontiguousarray(odd), mu, out)
    else:
        _cosine_project_numpy(c, scale, even, odd, mu, out)
    return out
