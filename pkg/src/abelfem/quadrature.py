"""Gauss-Legendre / Gauss-Jacobi rules on [0, 1] and the quadrature order policy.

Rules are built from the three-term recurrence of the shifted Jacobi
polynomials (Golub-Welsch), then each node gets one Newton step on
``P_n^{(a,b)}`` and the weights are recomputed from the closed formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln, eval_jacobi, gammaln


@dataclass(frozen=True)
class QuadRule:
    """Nodes/weights for ``int_0^1 (1-x)^a x^b p(x) dx`` (``a = b = 0`` is Legendre)."""

    nodes: np.ndarray
    weights: np.ndarray
    a: float = 0.0
    b: float = 0.0

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def kind(self) -> str:
        return "legendre" if self.a == 0.0 and self.b == 0.0 else f"jacobi({self.a:g},{self.b:g})"

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def beta(a: float, b: float) -> float:
    return math.exp(betaln(a, b))


def _recurrence(n: int, a: float, b: float):
    """Diagonal/off-diagonal of the Jacobi matrix for weight (1-t)^a (1+t)^b on [-1, 1]."""
    ab = a + b
    k = np.arange(1, n, dtype=float)
    s = 2.0 * k + ab
    diag = np.empty(n)
    diag[0] = (b - a) / (ab + 2.0)
    diag[1:] = (b * b - a * a) / (s * (s + 2.0))
    beta2 = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
    if n > 1:
        # k = 1 written with (k + a + b) cancelled against (s - 1)
        beta2[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
    return diag, np.sqrt(beta2)


@lru_cache(maxsize=512)
def _jacobi_ref(n: int, a: float, b: float):
    diag, off = _recurrence(n, a, b)
    if n == 1:
        t = diag.copy()
    else:
        t = eigh_tridiagonal(diag, off, eigvals_only=True)
    # one Newton step on P_n^{(a,b)}
    p = eval_jacobi(n, a, b, t)
    dp = 0.5 * (n + a + b + 1.0) * eval_jacobi(n - 1, a + 1.0, b + 1.0, t)
    t = t - p / dp
    dp = 0.5 * (n + a + b + 1.0) * eval_jacobi(n - 1, a + 1.0, b + 1.0, t)
    logc = (
        gammaln(n + a + 1.0)
        + gammaln(n + b + 1.0)
        - gammaln(n + a + b + 1.0)
        - gammaln(n + 1.0)
        + (a + b + 1.0) * math.log(2.0)
    )
    w = np.exp(logc) / ((1.0 - t) * (1.0 + t) * dp * dp)
    return np.sort(t), w[np.argsort(t)]


def gauss_jacobi(n: int, a: float, b: float) -> QuadRule:
    """n-point rule for the weight ``(1-x)^a x^b`` on [0, 1]."""
    if int(n) != n or n < 1:
        raise ValueError(f"quadrature order must be >= 1, got {n}")
    if a <= -1.0 or b <= -1.0:
        raise ValueError(f"Jacobi exponents must exceed -1, got a={a}, b={b}")
    t, w = _jacobi_ref(int(n), float(a), float(b))
    nodes = 0.5 * (1.0 + t)
    weights = w * 2.0 ** (-(a + b + 1.0))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights, float(a), float(b))


def gauss_legendre(n: int) -> QuadRule:
    return gauss_jacobi(n, 0.0, 0.0)


def map_rule(rule: QuadRule, interval) -> QuadRule:
    """Affine image of a Legendre rule on ``[lo, hi]``."""
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if rule.kind != "legendre":
        raise ValueError("only Legendre rules are mapped; Jacobi rules stay in reference coordinates")
    L = hi - lo
    return QuadRule(lo + L * rule.nodes, L * rule.weights)


@dataclass(frozen=True)
class QuadPolicy:
    """Order selection for the panel-pair and right-hand-side integrals.

    ``prefactor_index`` picks ``s_i = m + i + alpha/4``; ``i = 2`` is the
    theoretical choice. ``fixed_order`` replaces the distance-based order
    for every separated pair.
    """

    m: int
    alpha: float
    h: float
    lambda_K: float = 2.0
    n_max: int = 25
    prefactor_index: int = 2
    fixed_order: int | None = None
    n_singular: int | None = None
    n_adjacent_v: int = 12

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.lambda_K < 2.0:
            raise ValueError("Lambda_K must be >= 2")
        if not 0.0 < self.h <= 1.0:
            raise ValueError(f"mesh width must lie in (0, 1], got {self.h}")
        if self.n_max < self.n_min:
            raise ValueError(f"n_max={self.n_max} below n_min={self.n_min}")
        if self.fixed_order is not None and self.fixed_order < 1:
            raise ValueError("fixed order must be >= 1")

    @property
    def n_min(self) -> int:
        return self.m // 2 + 1

    @property
    def prefactor(self) -> float:
        return self.m + self.prefactor_index + self.alpha / 4.0

    @property
    def singular_order(self) -> int:
        if self.n_singular is not None:
            return max(self.n_singular, self.n_min)
        return max(self.n_min, self.m + 3)

    def clamp(self, n: int) -> int:
        return int(min(max(n, self.n_min), self.n_max))


def _ceil(x: float) -> int:
    # ratios of logs land a few ulps off integers
    return math.ceil(x - 1e-12)


def select_order_regular(policy: QuadPolicy, dist: float, h_pair: float) -> int:
    if dist <= 0.0:
        raise ValueError("touching or overlapping panels need the singular/adjacent rules")
    if policy.fixed_order is not None:
        return max(int(policy.fixed_order), policy.n_min)
    ratio = 2.0 / policy.lambda_K * dist / h_pair
    # below dist = Lambda_K * h_pair the log would be < log 2 (or negative)
    denom = max(math.log(ratio), math.log(2.0))
    n = _ceil(policy.prefactor * math.log(1.0 / policy.h) / denom)
    return policy.clamp(n)


def select_orders_regular(policy: QuadPolicy, dist, h_pair) -> np.ndarray:
    """Vectorised :func:`select_order_regular`."""
    dist = np.asarray(dist, dtype=float)
    h_pair = np.asarray(h_pair, dtype=float)
    if np.any(dist <= 0.0):
        raise ValueError("touching or overlapping panels need the singular/adjacent rules")
    if policy.fixed_order is not None:
        return np.full(np.broadcast(dist, h_pair).shape, max(int(policy.fixed_order), policy.n_min))
    ratio = 2.0 / policy.lambda_K * dist / h_pair
    denom = np.maximum(np.log(ratio), math.log(2.0))
    n = np.ceil(policy.prefactor * math.log(1.0 / policy.h) / denom - 1e-12).astype(int)
    return np.clip(n, policy.n_min, policy.n_max)


def select_order_rhs(policy: QuadPolicy) -> int:
    return max(_ceil(policy.m + policy.alpha / 2.0 + 0.75), policy.n_min)


def moment_errors(rule: QuadRule, degree: int) -> np.ndarray:
    """Relative errors of ``int_0^1 (1-x)^a x^(b+k) dx = B(a+1, b+k+1)`` for ``k = 0..degree``."""
    k = np.arange(degree + 1)
    exact = np.exp(betaln(rule.a + 1.0, rule.b + k + 1.0))
    approx = rule.nodes[None, :] ** k[:, None] @ rule.weights
    return np.abs(approx - exact) / exact


def moment_table(n_max: int = 20, alphas=(0.1, 0.3, 0.5, 0.7, 0.9), n_max_jacobi: int = 15):
    """``(family, n, worst relative moment error up to degree 2n-1)`` rows."""
    rows = []
    for n in range(1, n_max + 1):
        rows.append(("legendre", n, float(moment_errors(gauss_legendre(n), 2 * n - 1).max())))
    for alpha in alphas:
        for a, b in ((0.0, alpha), (alpha - 1.0, 0.0)):
            fam = f"jacobi(a={a:g},b={b:g})"
            for n in range(1, n_max_jacobi + 1):
                rows.append((fam, n, float(moment_errors(gauss_jacobi(n, a, b), 2 * n - 1).max())))
    return rows
