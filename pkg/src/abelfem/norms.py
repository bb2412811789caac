"""Fractional norms through the cosine eigenbasis.

``phi_n(t) = sqrt(2) cos(mu_n t)`` with ``mu_n = (n - 1/2) pi`` is orthonormal
on (0, 1); the scale norm of order ``beta`` is
``sqrt(sum_n mu_n^(2 beta) |(v, phi_n)|^2)``. For ``beta = -alpha/2`` this is
the error norm used throughout.

Coefficients are computed without quadrature in the oscillatory factor: each
cell function is expanded in Legendre polynomials and
``int_{-1}^{1} P_k(z) exp(i w z) dz = 2 i^k j_k(w)`` is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as Leg
from numpy.polynomial import polynomial as P
from scipy.special import spherical_jn

from .kernels import cosine_project
from .mesh import FeSolution
from .operator import AbelProblem

DEFAULT_MODES = 4096
GRADED_LEVELS = 32
CELL_POINTS = 16
_CHUNK = 64


def frequencies(n_modes: int) -> np.ndarray:
    return (np.arange(1, n_modes + 1) - 0.5) * math.pi


def _ref_to_legendre(m: int) -> np.ndarray:
    """Matrix taking monomial coefficients in s in [0, 1] to Legendre coefficients in z = 2s - 1."""
    T = np.zeros((m + 1, m + 1))
    half = np.array([0.5, 0.5])  # s = (1 + z) / 2
    for k in range(m + 1):
        mono_z = np.array([1.0])
        for _ in range(k):
            mono_z = P.polymul(mono_z, half)
        T[k, : mono_z.size] = Leg.poly2leg(mono_z)
    return T


def _modal_sum(centers, halfwidths, leg, mu) -> np.ndarray:
    """``sum_cells int_cell q(t) sqrt(2) cos(mu t) dt`` for Legendre-expanded cell functions."""
    u = np.zeros(mu.size)
    K = leg.shape[1]
    sign = np.array([(-1.0) ** (k // 2) for k in range(K)])
    even, odd = np.arange(0, K, 2), np.arange(1, K, 2)
    # group cells of equal width so j_k(mu d) is shared
    key = np.round(halfwidths / halfwidths.max(), 12)
    for kval in np.unique(key):
        grp = np.flatnonzero(key == kval)
        d = float(halfwidths[grp[0]])
        J = spherical_jn(np.arange(K)[:, None], mu[None, :] * d) * sign[:, None]
        for lo in range(0, grp.size, _CHUNK):
            sel = grp[lo : lo + _CHUNK]
            E = leg[sel][:, even] @ J[even]
            O = leg[sel][:, odd] @ J[odd] if odd.size else np.zeros_like(E)
            scale = 2.0 * math.sqrt(2.0) * halfwidths[sel]
            cosine_project(centers[sel], scale, E, O, mu, u)
    return u


def integrate_poly_cos(coeffs, interval, mu) -> np.ndarray:
    """Exact ``int_a^b p(t) sqrt(2) cos(mu t) dt``.

    ``coeffs`` are monomial coefficients of ``p`` in the local coordinate
    ``s = (t - a)/(b - a)``.
    """
    a, b = map(float, interval)
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    leg = coeffs @ _ref_to_legendre(coeffs.size - 1)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    out = _modal_sum(np.array([0.5 * (a + b)]), np.array([0.5 * (b - a)]), leg[None, :], mu)
    return out if out.size > 1 else out[0]


def graded_mesh(base_points, levels: int = GRADED_LEVELS, ratio: float = 0.5) -> np.ndarray:
    """``base_points`` with the first cell split geometrically toward 0."""
    base = np.asarray(base_points, dtype=float)
    x1 = base[1]
    inner = x1 * ratio ** np.arange(levels, 0, -1)
    return np.concatenate([[0.0], inner, base[1:]])


def _fe_legendre(sol: FeSolution):
    mesh = sol.space.mesh
    mono = sol.local_coefficients() @ sol.space.shape_coeffs  # (N, m1) monomials in s
    leg = mono @ _ref_to_legendre(sol.space.degree)
    c = 0.5 * (mesh.points[:-1] + mesh.points[1:])
    return c, 0.5 * mesh.element_sizes, leg


def _sampled_legendre(f, points, q: int):
    z, w = Leg.leggauss(q)
    a, b = points[:-1], points[1:]
    c, d = 0.5 * (a + b), 0.5 * (b - a)
    vals = np.asarray(f(c[:, None] + d[:, None] * z[None, :]), dtype=float)
    Pk = Leg.legvander(z, q - 1)  # (q, K)
    leg = (vals * w[None, :]) @ Pk * ((2.0 * np.arange(q) + 1.0) / 2.0)[None, :]
    return c, d, leg


def cosine_coeffs(v, n_modes: int = DEFAULT_MODES, aux_points=None, cell_points: int = CELL_POINTS) -> np.ndarray:
    """``u_n = (v, phi_n)`` for ``n = 1..n_modes``.

    FE functions are handled exactly. Callables are expanded at
    ``cell_points`` Gauss nodes per cell of ``aux_points`` (default: 64
    uniform cells, first one graded toward 0).
    """
    if n_modes < 1:
        raise ValueError("need at least one mode")
    mu = frequencies(n_modes)
    if isinstance(v, FeSolution):
        return _modal_sum(*_fe_legendre(v), mu)
    if aux_points is None:
        aux_points = graded_mesh(np.linspace(0.0, 1.0, 65))
    return _modal_sum(*_sampled_legendre(v, np.asarray(aux_points, dtype=float), cell_points), mu)


def tail_estimate(coeffs: np.ndarray, beta: float) -> float:
    """Estimate of ``sum_{n > N} mu_n^(2 beta) |u_n|^2`` assuming ``|u_n|^2 ~ C / mu_n^2``."""
    N = coeffs.size
    mu = frequencies(N)
    q = max(N // 4, 1)
    C = float(np.mean(mu[-q:] ** 2 * coeffs[-q:] ** 2))
    if 2.0 * beta - 1.0 >= 0.0:
        raise ValueError("tail diverges for beta >= 1/2")
    return C / math.pi * (N * math.pi) ** (2.0 * beta - 1.0) / (1.0 - 2.0 * beta)


def x_norm_from_coeffs(coeffs, beta: float, tail: bool = False) -> float:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size < 1:
        raise ValueError("need at least one mode")
    mu = frequencies(coeffs.size)
    s = float(np.sum(mu ** (2.0 * beta) * coeffs**2))
    if tail:
        s += tail_estimate(coeffs, beta)
    return math.sqrt(s)


def x_norm(v, beta: float, n_modes: int = DEFAULT_MODES, tail: bool = False, **kw) -> float:
    if not -1.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (-1, 1), got {beta}")
    return x_norm_from_coeffs(cosine_coeffs(v, n_modes, **kw), beta, tail)


@dataclass
class SpectralNormEvaluator:
    """Error norms with cached exact-solution coefficients.

    With ``n_modes=None`` the truncation follows the mesh,
    ``max(min_modes, modes_per_element * N)``; ``tail`` adds
    :func:`tail_estimate` to every norm.
    """

    n_modes: int | None = None
    min_modes: int = DEFAULT_MODES
    modes_per_element: int = 16
    tail: bool = True
    cell_points: int = CELL_POINTS
    levels: int = GRADED_LEVELS
    _exact_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n_modes is not None and self.n_modes < 1:
            raise ValueError("need at least one mode")

    def modes_for(self, n_elements: int) -> int:
        if self.n_modes is not None:
            return self.n_modes
        return max(self.min_modes, self.modes_per_element * n_elements)

    def exact_coeffs(self, problem: AbelProblem, mesh_points, n_modes: int) -> np.ndarray:
        key = (problem.name, n_modes, hash(np.asarray(mesh_points).tobytes()))
        if key not in self._exact_cache:
            aux = graded_mesh(mesh_points, self.levels)
            self._exact_cache[key] = cosine_coeffs(problem.exact, n_modes, aux, self.cell_points)
        return self._exact_cache[key]

    def error(self, problem: AbelProblem, sol: FeSolution, beta: float | None = None) -> tuple[float, float]:
        """Absolute and relative scale-norm error of ``sol`` against ``problem.exact``."""
        if problem.exact is None:
            raise ValueError(f"problem {problem.name!r} has no exact solution")
        beta = -problem.alpha / 2.0 if beta is None else beta
        mesh = sol.space.mesh
        n_modes = self.modes_for(mesh.n_elements)
        ue = self.exact_coeffs(problem, mesh.points, n_modes)
        uh = cosine_coeffs(sol, n_modes)
        err = x_norm_from_coeffs(ue - uh, beta, self.tail)
        return err, err / x_norm_from_coeffs(ue, beta, self.tail)


def error_norm(problem: AbelProblem, sol: FeSolution, beta: float | None = None, n_modes: int | None = None, relative: bool = False) -> float:
    err, rel = SpectralNormEvaluator(n_modes).error(problem, sol, beta)
    return rel if relative else err
