"""Meshes of (0, 1) and piecewise polynomial Lagrange spaces on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P


@dataclass(frozen=True)
class Mesh:
    """Partition ``0 = x_0 < x_1 < ... < x_N = 1``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a mesh needs at least two points")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise ValueError("mesh must start at 0 and end at 1")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("mesh points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n_elements(self) -> int:
        return self.points.size - 1

    @cached_property
    def element_sizes(self) -> np.ndarray:
        h = np.diff(self.points)
        h.setflags(write=False)
        return h

    @property
    def h_max(self) -> float:
        return float(self.element_sizes.max())

    @property
    def C_T(self) -> float:
        """Largest size ratio between neighbouring elements."""
        h = self.element_sizes
        if h.size == 1:
            return 1.0
        r = h[1:] / h[:-1]
        return float(np.maximum(r, 1.0 / r).max())

    @property
    def C_qu(self) -> float:
        h = self.element_sizes
        return float(h.max() / h.min())

    def element(self, e: int) -> tuple[float, float]:
        return float(self.points[e]), float(self.points[e + 1])

    def locate(self, x) -> np.ndarray:
        """Element index containing ``x``; interior breakpoints go to the right element."""
        x = np.asarray(x, dtype=float)
        if np.any((x < 0.0) | (x > 1.0)):
            raise ValueError("coordinate outside [0, 1]")
        e = np.searchsorted(self.points, x, side="right") - 1
        return np.clip(e, 0, self.n_elements - 1)


def build_uniform_mesh(N: int) -> Mesh:
    if int(N) != N or N < 1:
        raise ValueError(f"need at least one element, got N={N}")
    N = int(N)
    pts = np.arange(N + 1, dtype=float) / N
    return Mesh(pts)


def _lagrange_coeffs(m: int) -> np.ndarray:
    """Monomial coefficients (in s in [0, 1]) of the equispaced Lagrange shape functions.

    Row ``j`` holds the coefficients of the shape function that is one at ``s = j/m``.
    """
    if m == 0:
        return np.ones((1, 1))
    nodes = np.arange(m + 1) / m
    coeffs = np.zeros((m + 1, m + 1))
    for j in range(m + 1):
        others = np.delete(nodes, j)
        c = P.polyfromroots(others)
        coeffs[j] = c / P.polyval(nodes[j], c)
    return coeffs


@dataclass(frozen=True)
class FeSpace:
    """The space S_T^m with its nodal Lagrange basis.

    For ``m >= 1`` the global dof of local shape function ``j`` on element ``e``
    is ``e*m + j``; for ``m = 0`` it is ``e``.
    """

    mesh: Mesh
    degree: int
    shape_coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValueError(f"degree must be a nonnegative integer, got {self.degree}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "shape_coeffs", _lagrange_coeffs(self.degree))

    @property
    def dim(self) -> int:
        N, m = self.mesh.n_elements, self.degree
        return N if m == 0 else N * m + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        x, m = self.mesh.points, self.degree
        if m == 0:
            return 0.5 * (x[:-1] + x[1:])
        h = np.diff(x)
        inner = x[:-1, None] + h[:, None] * (np.arange(m) / m)[None, :]
        return np.append(inner.ravel(), 1.0)

    @cached_property
    def dof_map(self) -> np.ndarray:
        """``(N, m+1)`` array of global dofs per element."""
        N, m = self.mesh.n_elements, self.degree
        if m == 0:
            return np.arange(N)[:, None]
        return np.arange(N)[:, None] * m + np.arange(m + 1)[None, :]

    def shape_values(self, s) -> np.ndarray:
        """Shape functions at reference coordinates ``s``; shape ``(m+1,) + s.shape``."""
        s = np.asarray(s, dtype=float)
        return P.polyval(s, self.shape_coeffs.T)

    def support(self, i: int) -> tuple[int, ...]:
        """Elements making up the support of basis function ``i``."""
        self._check_index(i)
        m, N = self.degree, self.mesh.n_elements
        if m == 0:
            return (i,)
        e, j = divmod(i, m)
        if j:
            return (e,)
        return tuple(k for k in (e - 1, e) if 0 <= k < N)

    def eval_basis(self, i: int, x) -> np.ndarray:
        self._check_index(i)
        x = np.asarray(x, dtype=float)
        e = self.mesh.locate(x)
        out = np.zeros_like(x)
        for k in self.support(i):
            local = np.flatnonzero(self.dof_map[k] == i)[0]
            a, b = self.mesh.element(k)
            inside = (x >= a) & (x <= b)
            if self.degree == 0:
                inside &= e == k
            s = (x[inside] - a) / (b - a)
            out[inside] = P.polyval(s, self.shape_coeffs[local])
        return out

    def _check_index(self, i):
        if not 0 <= i < self.dim:
            raise IndexError(f"basis index {i} out of range for dim {self.dim}")


def build_space(mesh: Mesh, m: int) -> FeSpace:
    return FeSpace(mesh, m)


@dataclass(frozen=True)
class FeSolution:
    space: FeSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def local_coefficients(self) -> np.ndarray:
        """``(N, m+1)`` coefficients per element."""
        return self.coefficients[self.space.dof_map]

    def __call__(self, x):
        return eval_fe(self, x)


def eval_fe(sol: FeSolution, x) -> np.ndarray:
    space = sol.space
    mesh = space.mesh
    x = np.asarray(x, dtype=float)
    e = mesh.locate(x)
    s = (x - mesh.points[e]) / mesh.element_sizes[e]
    phi = space.shape_values(s)  # (m+1, ...)
    loc = sol.local_coefficients()[e]  # (..., m+1)
    return np.einsum("j...,...j->...", phi, loc)


def interpolate(space: FeSpace, f) -> FeSolution:
    """Nodal interpolant of the callable ``f``."""
    return FeSolution(space, np.asarray(f(space.nodes), dtype=float))
