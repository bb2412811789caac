import math

import numpy as np
import pytest

from abelfem.assembly import (
    AssemblyError,
    assemble,
    assemble_rhs,
    dump_system,
    integrate_adjacent,
    integrate_identical,
    integrate_separated,
    load_system,
    structural_zeros,
)
from abelfem.mesh import build_space, build_uniform_mesh
from abelfem.operator import EXP1_KERNEL, ONE, AbelProblem, experiment1
from abelfem.quadrature import QuadPolicy
from oracles import brute_force_matrix, entry_panel


def _setup(N, m, alpha, kernel=EXP1_KERNEL, **kw):
    space = build_space(build_uniform_mesh(N), m)
    prob = AbelProblem(alpha, kernel, g=lambda x: np.ones_like(x))
    return space, prob, QuadPolicy(m, alpha, 1.0 / N, **kw)


@pytest.mark.parametrize("m,alpha", [(0, 0.3), (1, 0.5), (2, 0.8)])
def test_matches_brute_force(m, alpha):
    space, prob, pol = _setup(4, m, alpha)
    A = assemble(space, prob, pol).A
    B = brute_force_matrix(space, alpha, EXP1_KERNEL.poly)
    assert np.max(np.abs(A - B)) < 1e-9


def test_m0_is_lower_triangular_toeplitz_for_k_one():
    space, prob, pol = _setup(6, 0, 0.4, ONE)
    A = assemble(space, prob, pol).A
    assert not np.any(np.triu(A, 1))
    for d in range(6):
        diag = np.diag(A, -d)
        np.testing.assert_allclose(diag, diag[0], rtol=1e-12)
    # diagonal entry has a closed form: h^(alpha+1) / Gamma(alpha+2)
    assert A[0, 0] == pytest.approx((1 / 6) ** 1.4 / math.gamma(2.4), rel=1e-13)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_zero_pattern(m):
    space, prob, pol = _setup(5, m, 0.5)
    sys_ = assemble(space, prob, pol)
    assert np.all(sys_.A[sys_.zero_pattern] == 0.0)
    Z = structural_zeros(space)
    for i in range(space.dim):
        for j in range(space.dim):
            left_of = min(space.support(j)) > max(space.support(i))
            assert Z[i, j] == left_of
    assert len(sys_.zero_pairs()) == int(Z.sum())


def test_single_entry_helpers():
    space, prob, _ = _setup(5, 1, 0.5)
    kp = EXP1_KERNEL.poly
    # basis 3 lives on elements 2, 3; local index 1 on element 2, 0 on element 3
    v = integrate_identical(space, prob, 3, 3, 3, 8)
    assert v == pytest.approx(entry_panel(space, 0.5, kp, 3, 3, 0, 0), abs=1e-12)
    v = integrate_adjacent(space, prob, 3, 2, 3, 2, 8)
    assert v == pytest.approx(entry_panel(space, 0.5, kp, 3, 2, 0, 0), abs=1e-12)
    v = integrate_separated(space, prob, 4, 1, 4, 1, 10)
    assert v == pytest.approx(entry_panel(space, 0.5, kp, 4, 1, 0, 0), abs=1e-12)
    with pytest.raises(ValueError):
        integrate_adjacent(space, prob, 3, 1, 3, 1, 8)
    with pytest.raises(ValueError):
        integrate_separated(space, prob, 3, 2, 3, 2, 8)
    with pytest.raises(ValueError):
        integrate_identical(space, prob, 0, 4, 4, 8)


def test_singular_rules_converge_fast():
    space, prob, _ = _setup(3, 2, 0.2)
    ref = entry_panel(space, 0.2, EXP1_KERNEL.poly, 1, 1, 2, 1)
    assert integrate_identical(space, prob, 1, 4, 3, 6) == pytest.approx(ref, abs=1e-13)
    ref = entry_panel(space, 0.2, EXP1_KERNEL.poly, 2, 1, 0, 2)
    assert integrate_adjacent(space, prob, 2, 1, 4, 4, 6, 14) == pytest.approx(ref, abs=1e-12)


def test_rhs_is_exact_for_polynomials():
    space = build_space(build_uniform_mesh(4), 1)
    prob = AbelProblem(0.5, ONE, g=lambda x: x**2)
    r = assemble_rhs(space, prob, 3)
    # int_0^1 x^2 phi_0 = int_0^{1/4} x^2 (1 - 4x) dx
    assert r[0] == pytest.approx(1 / 3 / 64 - 4 / 4 / 256, rel=1e-13)
    assert r.sum() == pytest.approx(1 / 3, rel=1e-14)


def test_consistency_checks():
    space, prob, _ = _setup(4, 1, 0.5)
    with pytest.raises(ValueError):
        assemble(space, prob, QuadPolicy(2, 0.5, 0.25))
    with pytest.raises(ValueError):
        assemble(space, prob, QuadPolicy(1, 0.4, 0.25))


def test_non_finite_rhs_raises():
    space = build_space(build_uniform_mesh(4), 0)
    prob = AbelProblem(0.5, ONE, g=lambda x: np.log(x - 0.5))
    with np.errstate(invalid="ignore"):
        with pytest.raises(AssemblyError):
            assemble(space, prob, QuadPolicy(0, 0.5, 0.25))


def test_thread_count_does_not_change_bits():
    space = build_space(build_uniform_mesh(96), 1)
    prob = experiment1()
    pol = QuadPolicy(1, 0.5, 1 / 96)
    A1 = assemble(space, prob, pol, threads=1).A
    A3 = assemble(space, prob, pol, threads=3).A
    assert np.array_equal(A1, A3)


def test_stats():
    space, prob, pol = _setup(16, 1, 0.5)
    st = assemble(space, prob, pol).stats
    assert st["identical"] == 16 and st["adjacent"] == 15
    assert st["separated"] == 15 * 14 // 2 == sum(st["orders"].values())


def test_dump_roundtrip(tmp_path):
    space, prob, pol = _setup(5, 2, 0.5)
    sys_ = assemble(space, prob, pol)
    path = tmp_path / "sys.bin"
    dump_system(sys_, path)
    raw = path.read_bytes()
    M = space.dim
    assert len(raw) == 16 + 8 * M * M + 16 + 8 * M
    assert np.frombuffer(raw[:16], "<u8").tolist() == [M, M]
    A, r = load_system(path)
    assert np.array_equal(A, sys_.A) and np.array_equal(r, sys_.r)
