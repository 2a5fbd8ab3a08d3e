import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln

from latticeym.errors import ResolutionTooLow
from latticeym.groups import GroupSpec
from latticeym.quadrature import (EnsembleConstants, QuadratureSpec,
                                  ensemble_constants, flat_vandermonde,
                                  i_beta, vandermonde_density, weyl_integrate)


def mehta_integral(n, beta):
    """Independent oracle: Gamma-product closed form of the ensemble integral."""
    log = (0.5 * n * np.log(2.0 * np.pi)
           + (-0.5 * n - 0.25 * beta * n * (n - 1)) * np.log(beta))
    for j in range(1, n + 1):
        log += gammaln(1.0 + 0.5 * beta * j) - gammaln(1.0 + 0.5 * beta)
    return float(np.exp(log))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_normalization(n, quad):
    value = weyl_integrate(lambda lam: np.ones(lam.shape[0]), GroupSpec(n), quad)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_ensemble_constants_small_rank_values():
    c1 = ensemble_constants(GroupSpec(1))
    assert c1.cue == pytest.approx(2.0 * np.pi, rel=1e-15)
    assert c1.gue == pytest.approx(np.sqrt(np.pi), rel=1e-15)
    assert c1.gse == pytest.approx(np.sqrt(2.0 * np.pi) / 2.0, rel=1e-15)
    c2 = ensemble_constants(GroupSpec(2))
    assert c2.cue == pytest.approx((2.0 * np.pi) ** 2 * 2.0, rel=1e-15)
    assert c2.gue == pytest.approx(np.pi, rel=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_ensemble_constants_match_gamma_oracle(n):
    c = ensemble_constants(GroupSpec(n))
    assert c.gue == pytest.approx(mehta_integral(n, 2), rel=1e-12)
    assert c.gse == pytest.approx(mehta_integral(n, 4), rel=1e-12)
    assert np.isfinite([c.cue, c.gue, c.gse]).all()
    assert min(c.cue, c.gue, c.gse) > 0.0


@pytest.mark.parametrize("n", [1, 2])
def test_improper_ensemble_integrals(n, quad):
    g = GroupSpec(n)
    c = ensemble_constants(g)
    assert i_beta(2, np.inf, g, quad) == pytest.approx(c.gue, rel=1e-10)
    assert i_beta(4, np.inf, g, quad) == pytest.approx(c.gse, rel=1e-10)


def test_i_beta_finite_u_monotone(quad):
    g = GroupSpec(2)
    values = [i_beta(2, u, g, quad) for u in (0.5, 1.0, 2.0, np.inf)]
    assert all(a < b for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        i_beta(3, 1.0, g, quad)
    with pytest.raises(ValueError):
        i_beta(2, 0.0, g, quad)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_vandermonde_sandwich(n, seed):
    lam = np.random.default_rng(seed).uniform(-np.pi / 2, np.pi / 2, size=(50, n))
    rho = vandermonde_density(lam)
    flat = flat_vandermonde(lam)
    pairs = n * (n - 1) // 2
    assert np.all(rho <= flat * (1 + 1e-12) + 1e-300)
    assert np.all(rho >= (4.0 / np.pi**2) ** pairs * flat * (1 - 1e-12))


def test_vandermonde_small_angle_limit():
    lam = 1e-4 * np.array([[0.3, -0.2, 0.15]])
    ratio = vandermonde_density(lam) / flat_vandermonde(lam)
    assert ratio == pytest.approx(1.0, abs=1e-7)


def test_cue_character_moments(quad):
    # First two moments of Tr U under Haar: 0 and 1 for every rank.
    for n in (1, 2, 3):
        g = GroupSpec(n)
        m1 = weyl_integrate(lambda lam: np.sum(np.exp(1j * lam), axis=-1), g, quad)
        m2 = weyl_integrate(lambda lam: np.abs(np.sum(np.exp(1j * lam), axis=-1)) ** 2,
                            g, quad)
        assert abs(m1) < 1e-12
        assert m2 == pytest.approx(1.0, abs=1e-10)


def test_monte_carlo_agrees_with_tensor(quad):
    g = GroupSpec(2)

    def f(lam):
        return np.cos(lam).sum(axis=-1) ** 2

    exact = weyl_integrate(f, g, quad)
    mc = QuadratureSpec(method="monte-carlo", samples=200_000, seed=5)
    value, se = weyl_integrate(f, g, mc, return_error=True)
    assert abs(value - exact) < 5 * se


def test_sobol_agrees_with_tensor(quad):
    g = GroupSpec(2)

    def f(lam):
        return np.exp(-np.sum(lam**2, axis=-1))

    exact = weyl_integrate(f, g, quad)
    qmc = QuadratureSpec(method="sobol", samples=60_000, seed=3)
    value, err = weyl_integrate(f, g, qmc, return_error=True)
    assert value == pytest.approx(exact, rel=5e-3)
    assert err < 5e-3


def test_resolution_check_fires():
    # A Gaussian of width ~0.15 is visible on the 16-point grid but not
    # converged against the 10-point companion.
    g = GroupSpec(1)
    spiky = QuadratureSpec(points=16, rtol=1e-10, atol=1e-30)
    with pytest.raises(ResolutionTooLow):
        weyl_integrate(lambda lam: np.exp(-50.0 * np.sum(lam**2, axis=-1)), g, spiky)


def test_tensor_rank_limit(quad):
    with pytest.raises(ValueError):
        weyl_integrate(lambda lam: np.ones(lam.shape[0]), GroupSpec(5), quad)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(method="cubature")
    with pytest.raises(ValueError):
        QuadratureSpec(points=2)
    with pytest.raises(ValueError):
        QuadratureSpec(samples=10)


def test_scaled_coordinates_match_plain(quad):
    # The same smooth integrand through scale=1 and a concentrated rewrite.
    g = GroupSpec(2)

    def f(lam):
        return np.exp(-40.0 * np.sum(np.sin(0.5 * lam) ** 2, axis=-1))

    plain = weyl_integrate(f, g, quad)
    scaled = weyl_integrate(f, g, quad, scale=np.sqrt(10.0), cutoff=10.0)
    assert scaled == pytest.approx(plain, rel=1e-12)
