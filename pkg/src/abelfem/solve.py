"""Direct solution of the Galerkin system."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, solve_triangular

from .assembly import GalerkinSystem
from .mesh import FeSolution, FeSpace


class SingularSystemError(RuntimeError):
    def __init__(self, index: int, pivot: float):
        super().__init__(f"zero or near-zero pivot {pivot:.3e} at index {index}")
        self.index = index
        self.pivot = pivot


@dataclass(frozen=True)
class SolveReport:
    solution: FeSolution
    residual_inf: float
    pivot_min: float
    method: str


def _check_pivots(piv_diag: np.ndarray, scale: float, rtol: float):
    mags = np.abs(piv_diag)
    k = int(np.argmin(mags))
    if not mags[k] > rtol * scale:
        raise SingularSystemError(k, float(piv_diag[k]))
    return float(mags[k])


def forward_substitution(A: np.ndarray, r: np.ndarray, rtol: float = 1e-14):
    pivot_min = _check_pivots(np.diag(A), np.abs(A).max(), rtol)
    return solve_triangular(A, r, lower=True, check_finite=False), pivot_min


def lu_partial_pivot(A: np.ndarray, r: np.ndarray, rtol: float = 1e-14):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)  # pivots are checked below
        lu, piv = lu_factor(A, check_finite=False)
    pivot_min = _check_pivots(np.diag(lu), np.abs(A).max(), rtol)
    return lu_solve((lu, piv), r, check_finite=False), pivot_min


def solve(system: GalerkinSystem, space: FeSpace, method: str = "auto") -> SolveReport:
    """Solve ``A f = r``: forward substitution for triangular ``A``, LU otherwise."""
    A, r = system.A, system.r
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != r.size:
        raise ValueError(f"incompatible system shapes {A.shape} and {r.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(r))):
        raise ValueError("system contains non-finite values")
    if method == "auto":
        method = "forward" if not np.any(np.triu(A, 1)) else "lu"
    if method == "forward":
        f, pivot_min = forward_substitution(A, r)
    elif method == "lu":
        f, pivot_min = lu_partial_pivot(A, r)
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = float(np.max(np.abs(A @ f - r))) if r.size else 0.0
    return SolveReport(FeSolution(space, f), residual, pivot_min, method)
