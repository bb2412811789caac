import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from abelfem.mesh import FeSolution, build_space, build_uniform_mesh, interpolate
from abelfem.norms import (
    SpectralNormEvaluator,
    cosine_coeffs,
    frequencies,
    graded_mesh,
    integrate_poly_cos,
    tail_estimate,
    x_norm,
    x_norm_from_coeffs,
)
from abelfem.operator import experiment1


def test_integrate_poly_cos_against_quad():
    coeffs = [0.3, -1.0, 2.0, 0.5]
    a, b = 0.2, 0.45
    mu = frequencies(40)
    got = integrate_poly_cos(coeffs, (a, b), mu)
    p = lambda t: np.polynomial.polynomial.polyval((t - a) / (b - a), coeffs)
    for k in (0, 7, 39):
        want = quad(lambda t: p(t) * math.sqrt(2) * math.cos(mu[k] * t), a, b, epsabs=1e-14, limit=200)[0]
        assert got[k] == pytest.approx(want, abs=1e-13)


def test_fe_coefficients_exact():
    space = build_space(build_uniform_mesh(5), 2)
    sol = interpolate(space, lambda x: np.sin(3 * x))
    u = cosine_coeffs(sol, 30)
    mu = frequencies(30)
    for k in (0, 12, 29):
        want = quad(lambda t: sol(t) * math.sqrt(2) * math.cos(mu[k] * t), 0, 1, points=list(space.mesh.points[1:-1]), limit=200)[0]
        assert u[k] == pytest.approx(want, abs=1e-12)


def test_callable_coefficients_match_closed_form():
    # (1, phi_n) = sqrt(2) sin(mu_n) / mu_n
    mu = frequencies(200)
    u = cosine_coeffs(lambda t: np.ones_like(t), 200)
    np.testing.assert_allclose(u, math.sqrt(2) * np.sin(mu) / mu, atol=1e-13)


def test_parseval_l2():
    space = build_space(build_uniform_mesh(16), 1)
    sol = interpolate(space, lambda x: x * (1 - x) + 0.2)
    l2 = math.sqrt(quad(lambda t: sol(t) ** 2, 0, 1, points=list(space.mesh.points[1:-1]), limit=200)[0])
    assert x_norm(sol, 0.0, 8192, tail=True) == pytest.approx(l2, rel=1e-6)


def test_cosine_eigenfunction_norm():
    # v = phi_3 has X_beta norm mu_3^beta
    v = lambda t: math.sqrt(2) * np.cos(2.5 * math.pi * t)
    for beta in (-0.5, -0.25, 0.3):
        assert x_norm(v, beta, 64) == pytest.approx((2.5 * math.pi) ** beta, rel=1e-10)


def test_norm_axioms(rng):
    space = build_space(build_uniform_mesh(8), 1)
    a = FeSolution(space, rng.normal(size=space.dim))
    b = FeSolution(space, rng.normal(size=space.dim))
    ab = FeSolution(space, a.coefficients + b.coefficients)
    beta = -0.3
    na, nb, nab = (x_norm(v, beta, 1024) for v in (a, b, ab))
    assert nab <= na + nb + 1e-12
    assert x_norm(FeSolution(space, -2.5 * a.coefficients), beta, 1024) == pytest.approx(2.5 * na, rel=1e-12)


def test_truncation_monotone_and_saturating():
    prob = experiment1()
    space = build_space(build_uniform_mesh(64), 0)
    sol = interpolate(space, prob.exact)
    ev = [SpectralNormEvaluator(n, tail=False) for n in (256, 1024, 4096)]
    errs = [e.error(prob, sol)[0] for e in ev]
    assert errs[0] <= errs[1] <= errs[2]
    full = [SpectralNormEvaluator(n, tail=True).error(prob, sol)[0] for n in (2048, 4096)]
    assert abs(full[1] / full[0] - 1) < 0.005


def test_tail_estimate_for_known_decay():
    # u_n = 1/mu_n: tail of mu^(2 beta - 2) beyond N is about (N pi)^(2 beta - 1) / (pi (1 - 2 beta))
    big = 1 / frequencies(400000)
    beta = -0.25
    exact_tail = np.sum(frequencies(400000)[4000:] ** (2 * beta) * big[4000:] ** 2)
    est = tail_estimate(big[:4000], beta)
    assert est == pytest.approx(exact_tail, rel=2e-2)
    with pytest.raises(ValueError):
        tail_estimate(big[:10], 0.6)


def test_graded_mesh():
    g = graded_mesh(np.linspace(0, 1, 5), levels=3)
    np.testing.assert_allclose(g[:5], [0, 0.25 / 8, 0.25 / 4, 0.25 / 2, 0.25])
    assert g[-1] == 1.0


def test_evaluator_modes_and_errors():
    ev = SpectralNormEvaluator()
    assert ev.modes_for(64) == 4096 and ev.modes_for(1024) == 16384
    with pytest.raises(ValueError):
        SpectralNormEvaluator(0)
    with pytest.raises(ValueError):
        x_norm(lambda t: t, 1.0)
    with pytest.raises(ValueError):
        x_norm_from_coeffs([], -0.25)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.45, 0.0), st.floats(-0.45, 0.0))
def test_norm_monotone_in_beta(b1, b2):
    # mu_n > 1, so the norm grows with beta
    lo, hi = sorted((b1, b2))
    u = 1 / frequencies(500) ** 1.2
    assert x_norm_from_coeffs(u, lo) <= x_norm_from_coeffs(u, hi) + 1e-15
