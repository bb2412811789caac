"""Coercivity bookkeeping for separable kernels ``K = sum d_{n,k} psi_n(x) psi_k(y)``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


def gamma(alpha: float) -> float:
    """Ellipticity constant ``cos(pi alpha / 2)`` of the pure Abel kernel."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.cos(math.pi * alpha / 2.0)


@dataclass(frozen=True)
class AdmissibilityInput:
    """``d`` maps ``(n, k)`` to ``d_{n,k}``; ``c``/``C`` give the lower/upper
    multiplier constants per factor index (missing indices default to 1)."""

    alpha: float
    d: dict
    c: dict = field(default_factory=dict)
    C: dict = field(default_factory=dict)
    C_c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for n in self._indices():
            lo, hi = self.lower(n), self.upper(n)
            if not 0.0 < lo <= hi:
                raise ValueError(f"need 0 < c_{n} <= C_{n}, got c={lo}, C={hi}")
        if self.C_c <= 0.0:
            raise ValueError("continuity constant must be positive")

    def _indices(self):
        idx = set(self.c) | set(self.C)
        for n, k in self.d:
            idx.update((n, k))
        return sorted(idx)

    def lower(self, n) -> float:
        return float(self.c.get(n, 1.0))

    def upper(self, n) -> float:
        return float(self.C.get(n, 1.0))


@dataclass(frozen=True)
class AdmissibilityReport:
    gamma: float
    C_s2: float
    gamma_tilde: float

    @property
    def admissible(self) -> bool:
        return self.gamma_tilde > 0.0


def evaluate(inp: AdmissibilityInput) -> AdmissibilityReport:
    g = gamma(inp.alpha)
    C_s2 = sum(abs(d) * inp.upper(n) * inp.upper(k) for (n, k), d in inp.d.items())
    diag = sum(d * inp.lower(n) ** 2 for (n, k), d in inp.d.items() if n == k)
    off = sum(abs(d) * inp.upper(n) * inp.upper(k) for (n, k), d in inp.d.items() if n != k)
    return AdmissibilityReport(g, C_s2, g * diag - inp.C_c * off)


def experiment1_input(alpha: float = 0.5, C_c: float = 1.0) -> AdmissibilityInput:
    """Constants for ``K = 1 - (x + y)/10 - xy/10`` at ``s = -alpha/2``."""
    return AdmissibilityInput(
        alpha,
        d={(1, 1): 1.1, (2, 2): -0.1},
        c={2: 2.0**-0.5},
        C={2: 2.0 * math.sqrt(2.0)},
        C_c=C_c,
    )
