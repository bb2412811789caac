"""Galerkin matrix and load vector.

Panel pairs ``(tau, sigma)`` with ``tau`` the test element and ``sigma`` the
trial element are dispatched on their relative position:

* ``tau == sigma``: simplex coordinates, Gauss-Jacobi in both directions;
* ``sigma`` touches ``tau`` from the left: two Duffy maps onto the corner;
* ``sigma`` strictly left of ``tau``: tensor Gauss-Legendre of order ``n1``;
* ``sigma`` right of ``tau``: nothing to do, the Volterra integral vanishes.
"""
from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kernels import separated_local
from .mesh import FeSpace
from .operator import AbelProblem
from .quadrature import QuadPolicy, gauss_jacobi, gauss_legendre, select_order_rhs, select_orders_regular

_POINT_BUDGET = 1 << 20


@dataclass
class GalerkinSystem:
    A: np.ndarray
    r: np.ndarray
    zero_pattern: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.r.size

    def zero_pairs(self):
        """Structurally zero ``(i, j)`` index pairs."""
        return list(zip(*map(np.ndarray.tolist, np.nonzero(self.zero_pattern))))


class AssemblyError(RuntimeError):
    pass


# ---------------------------------------------------------------- local integrals
# All local routines return matrices indexed [test local i, trial local j]
# and already include 1/Gamma(alpha).


def identical_local(space: FeSpace, problem: AbelProblem, elems, n_xi: int, n_eta: int) -> np.ndarray:
    alpha = problem.alpha
    elems = np.atleast_1d(elems)
    a = space.mesh.points[elems]
    h = space.mesh.element_sizes[elems]
    rx = gauss_jacobi(n_xi, 0.0, alpha)  # weight xi^alpha
    ry = gauss_jacobi(n_eta, alpha - 1.0, 0.0)  # weight (1-eta)^(alpha-1)
    xi, eta = rx.nodes, ry.nodes
    s_y = xi[:, None] * eta[None, :]
    phi_x = space.shape_values(xi)  # (m1, k)
    phi_y = space.shape_values(s_y)  # (m1, k, l)
    X = a[:, None, None] + h[:, None, None] * xi[None, :, None]
    Y = a[:, None, None] + h[:, None, None] * s_y[None, :, :]
    G = np.broadcast_to(problem.kernel(X, Y), Y.shape) * (rx.weights[:, None] * ry.weights[None, :])
    L = np.einsum("ik,jkl,pkl->pij", phi_x, phi_y, G)
    return L * (h ** (alpha + 1.0) / math.gamma(alpha))[:, None, None]


def adjacent_local(space: FeSpace, problem: AbelProblem, elems, n_u: int, n_v: int) -> np.ndarray:
    """Test element ``t`` against its left neighbour ``t-1`` for each ``t`` in ``elems``.

    With ``x = c + h_t xi``, ``y = c - h_s eta`` the corner singularity sits
    at ``xi = eta = 0``; ``(xi, eta) = (u, uv)`` and ``(uv, u)`` turn the
    kernel into ``u^alpha`` times a smooth factor.
    """
    alpha = problem.alpha
    t = np.atleast_1d(elems)
    if np.any(t < 1):
        raise ValueError("element 0 has no left neighbour")
    c = space.mesh.points[t]
    ht = space.mesh.element_sizes[t][:, None, None]
    hs = space.mesh.element_sizes[t - 1][:, None, None]
    ru = gauss_jacobi(n_u, 0.0, alpha)
    rv = gauss_legendre(n_v)
    u, v = ru.nodes[:, None], rv.nodes[None, :]
    W = ru.weights[:, None] * rv.weights[None, :]
    cc = c[:, None, None]
    out = np.zeros((t.size, space.degree + 1, space.degree + 1))
    # triangle xi >= eta: xi = u, eta = u v
    for sx, sy, dist in (
        (np.broadcast_to(u, W.shape), u * v, ht + hs * v),
        (u * v, np.broadcast_to(u, W.shape), ht * v + hs),
    ):
        X = cc + ht * sx
        Y = cc - hs * sy
        G = dist ** (alpha - 1.0) * np.broadcast_to(problem.kernel(X, Y), X.shape) * W
        phi_x = space.shape_values(sx)
        phi_y = space.shape_values(1.0 - sy)
        out += np.einsum("ikl,jkl,pkl->pij", phi_x, phi_y, G)
    return out * ((ht * hs)[:, :, 0] / math.gamma(alpha))[:, :, None]


def _separated_pairs(N: int):
    t, s = np.tril_indices(N, k=-2)
    return t, s


def separated_block(space: FeSpace, problem: AbelProblem, t, s, n: int) -> np.ndarray:
    mesh = space.mesh
    rule = gauss_legendre(n)
    phi = space.shape_values(rule.nodes)
    L = separated_local(
        mesh.points[t], mesh.element_sizes[t], mesh.points[s], mesh.element_sizes[s],
        rule.nodes, rule.weights, phi, problem.alpha, problem.kernel,
    )
    return L / math.gamma(problem.alpha)


# ---------------------------------------------------------------- single-entry helpers


def _local_index(space: FeSpace, e: int, i: int) -> int:
    hit = np.flatnonzero(space.dof_map[e] == i)
    if hit.size == 0:
        raise ValueError(f"element {e} is not in the support of basis function {i}")
    return int(hit[0])


def integrate_identical(space, problem, tau: int, i: int, j: int, n_xi: int, n_eta: int | None = None) -> float:
    n_eta = n_xi if n_eta is None else n_eta
    li, lj = _local_index(space, tau, i), _local_index(space, tau, j)
    return float(identical_local(space, problem, tau, n_xi, n_eta)[0, li, lj])


def integrate_adjacent(space, problem, tau: int, sigma: int, i: int, j: int, n_u: int, n_v: int = 12) -> float:
    if sigma != tau - 1:
        raise ValueError(f"elements {sigma} and {tau} are not left/right neighbours")
    li, lj = _local_index(space, tau, i), _local_index(space, sigma, j)
    return float(adjacent_local(space, problem, tau, n_u, n_v)[0, li, lj])


def integrate_separated(space, problem, tau: int, sigma: int, i: int, j: int, n1: int) -> float:
    if sigma > tau - 2:
        raise ValueError(f"element {sigma} is not strictly left of element {tau} with positive distance")
    li, lj = _local_index(space, tau, i), _local_index(space, sigma, j)
    return float(separated_block(space, problem, np.array([tau]), np.array([sigma]), n1)[0, li, lj])


# ---------------------------------------------------------------- global assembly


def structural_zeros(space: FeSpace) -> np.ndarray:
    """``True`` where the trial support lies entirely right of the test support."""
    m, N = space.degree, space.mesh.n_elements
    idx = np.arange(space.dim)
    if m == 0:
        first = last = idx
    else:
        e, j = np.divmod(idx, m)
        first = np.where(j == 0, np.maximum(e - 1, 0), e)
        last = np.minimum(e, N - 1)
    return first[None, :] > last[:, None]


def check_consistency(space: FeSpace, problem: AbelProblem, policy: QuadPolicy):
    if policy.m != space.degree:
        raise ValueError(f"policy degree {policy.m} differs from space degree {space.degree}")
    if policy.alpha != problem.alpha:
        raise ValueError(f"policy alpha {policy.alpha} differs from problem alpha {problem.alpha}")
    if policy.lambda_K != problem.kernel.lambda_K:
        raise ValueError("policy Lambda_K differs from the kernel's")


def assemble_rhs(space: FeSpace, problem: AbelProblem, n2: int) -> np.ndarray:
    mesh = space.mesh
    rule = gauss_legendre(n2)
    X = mesh.points[:-1, None] + mesh.element_sizes[:, None] * rule.nodes[None, :]
    gw = problem.g(X) * rule.weights[None, :] * mesh.element_sizes[:, None]
    contrib = gw @ space.shape_values(rule.nodes).T  # (N, m1)
    r = np.zeros(space.dim)
    np.add.at(r, space.dof_map.ravel(), contrib.ravel())
    return r


def assemble(space: FeSpace, problem: AbelProblem, policy: QuadPolicy, threads: int = 1) -> GalerkinSystem:
    """Dense Galerkin system; the result does not depend on ``threads``."""
    check_consistency(space, problem, policy)
    mesh = space.mesh
    N, M = mesh.n_elements, space.dim
    dofs = space.dof_map
    A = np.zeros((M, M))
    stats = {"identical": N, "adjacent": max(N - 1, 0), "separated": 0, "points": 0, "orders": {}}

    def scatter(t, s, L):
        rows = np.repeat(dofs[t], dofs.shape[1], axis=1).reshape(-1)
        cols = np.tile(dofs[s], (1, dofs.shape[1])).reshape(-1)
        np.add.at(A, (rows, cols), L.reshape(-1))

    ns = policy.singular_order
    elems = np.arange(N)
    scatter(elems, elems, identical_local(space, problem, elems, ns, ns))
    stats["points"] += N * ns * ns
    if N > 1:
        t = np.arange(1, N)
        nv = max(policy.n_adjacent_v, ns)
        scatter(t, t - 1, adjacent_local(space, problem, t, ns, nv))
        stats["points"] += 2 * (N - 1) * ns * nv

    t, s = _separated_pairs(N)
    if t.size:
        h = mesh.element_sizes
        dist = mesh.points[t] - mesh.points[s + 1]
        orders = select_orders_regular(policy, dist, np.maximum(h[t], h[s]))
        jobs = []
        for n in np.unique(orders):
            sel = np.flatnonzero(orders == n)
            step = max(1, _POINT_BUDGET // (n * n))
            for k in range(0, sel.size, step):
                jobs.append((int(n), sel[k : k + step]))
            stats["orders"][int(n)] = int(sel.size)
            stats["points"] += int(sel.size) * int(n) ** 2
        stats["separated"] = int(t.size)

        def work(job):
            n, sel = job
            return separated_block(space, problem, t[sel], s[sel], n)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                blocks = list(pool.map(work, jobs))
        else:
            blocks = map(work, jobs)
        for (n, sel), L in zip(jobs, blocks):
            scatter(t[sel], s[sel], L)

    zero = structural_zeros(space)
    A[zero] = 0.0
    if not np.all(np.isfinite(A)):
        bad = np.argwhere(~np.isfinite(A))[0]
        raise AssemblyError(f"non-finite matrix entry at {tuple(int(k) for k in bad)}")
    r = assemble_rhs(space, problem, select_order_rhs(policy))
    if not np.all(np.isfinite(r)):
        raise AssemblyError("non-finite right-hand side entry")
    stats["rhs_order"] = select_order_rhs(policy)
    stats["singular_order"] = ns
    return GalerkinSystem(A, r, zero, stats)


# ---------------------------------------------------------------- debug dump


def _write_block(fh, arr):
    arr = np.atleast_2d(np.asarray(arr, dtype="<f8"))
    fh.write(struct.pack("<QQ", *arr.shape))
    fh.write(np.ascontiguousarray(arr).tobytes())


def dump_system(system: GalerkinSystem, path) -> None:
    """Write ``A`` then ``r`` (as an ``M x 1`` block); each block is two little-endian
    uint64 dims followed by row-major float64 data."""
    with open(path, "wb") as fh:
        _write_block(fh, system.A)
        _write_block(fh, system.r[:, None])


def load_system(path):
    with open(path, "rb") as fh:
        data = fh.read()
    blocks, pos = [], 0
    while pos < len(data):
        rows, cols = struct.unpack_from("<QQ", data, pos)
        pos += 16
        nbytes = 8 * rows * cols
        blocks.append(np.frombuffer(data, dtype="<f8", count=rows * cols, offset=pos).reshape(rows, cols).copy())
        pos += nbytes
    if len(blocks) != 2:
        raise ValueError(f"expected two blocks, found {len(blocks)}")
    return blocks[0], blocks[1][:, 0]
