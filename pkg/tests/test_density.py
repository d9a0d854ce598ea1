import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaln

import scpkb
from scpkb.density import (
    component_logpdf_matrix,
    log_density_difference,
    log_norm_const,
    logpdf,
    pdf,
    pkb_logpdf,
    sc_logpdf,
)
from scpkb.sphere import SphericalParams


def _point_at_cosine(m, u):
    """A unit vector whose inner product with m equals u."""
    q = m.size
    e = np.zeros(q)
    e[np.argmin(np.abs(m))] = 1.0
    perp = e - (e @ m) * m
    perp /= np.linalg.norm(perp)
    return u * m + math.sqrt(max(0.0, 1.0 - u * u)) * perp


def _sphere_mass(family, d, rho):
    """Numeric integral of the density over S^d, reduced to 1-D by
    rotational symmetry about m."""
    m = np.zeros(d + 1)
    m[-1] = 1.0
    params = SphericalParams.from_m_rho(family, m, rho)
    # surface area of the (d-1)-sphere of latitude
    log_ring = math.log(2.0) + (d / 2.0) * math.log(math.pi) - gammaln(d / 2.0)

    def integrand(u):
        y = _point_at_cosine(m, u)
        f = math.exp(logpdf(y, params))
        return f * math.exp(log_ring) * (1.0 - u * u) ** ((d - 2) / 2.0)

    val, err = quad(integrand, -1.0, 1.0, limit=200)
    return val


@pytest.mark.parametrize("family", ["sc", "pkb"])
@pytest.mark.parametrize("rho", [0.0, 0.3, 0.6, 0.9])
def test_normalization_d2(family, rho):
    assert _sphere_mass(family, 2, rho) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("family", ["sc", "pkb"])
def test_normalization_d5(family):
    assert _sphere_mass(family, 5, 0.7) == pytest.approx(1.0, abs=1e-4)


def test_sc_d1_matches_wrapped_cauchy():
    rho, phi0 = 0.55, 0.9
    m = np.array([math.cos(phi0), math.sin(phi0)])
    params = SphericalParams.from_m_rho("sc", m, rho)
    for theta in np.linspace(0.0, 2.0 * math.pi, 17):
        y = np.array([math.cos(theta), math.sin(theta)])
        wc = (1.0 - rho**2) / (
            2.0 * math.pi * (1.0 + rho**2 - 2.0 * rho * math.cos(theta - phi0))
        )
        assert pdf(y, params) == pytest.approx(wc, rel=1e-12)


def test_families_coincide_at_d1():
    m = np.array([0.6, 0.8])
    y = np.array([-0.8, 0.6])
    assert log_density_difference(y, m, 0.4) == pytest.approx(0.0, abs=1e-13)


def test_pkb_d2_is_poisson_kernel(gen):
    rho = 0.65
    m = scpkb.sample_uniform_sphere(2, 1, gen)[0]
    params = SphericalParams.from_m_rho("pkb", m, rho)
    Y = scpkb.sample_uniform_sphere(2, 50, gen)
    quad_form = 1.0 + rho**2 - 2.0 * rho * (Y @ m)
    expected = (1.0 - rho**2) / (4.0 * math.pi * quad_form**1.5)
    assert np.allclose(pdf(Y, params), expected, rtol=1e-12)


@pytest.mark.parametrize("family", ["sc", "pkb"])
def test_density_increasing_toward_mode(family):
    m = np.array([0.0, 0.0, 1.0])
    params = SphericalParams.from_m_rho(family, m, 0.5)
    us = np.linspace(-1.0, 1.0, 41)
    vals = [logpdf(_point_at_cosine(m, u), params) for u in us]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("family", ["sc", "pkb"])
def test_rotation_invariance(family, gen):
    m = scpkb.sample_uniform_sphere(4, 1, gen)[0]
    Y = scpkb.sample_uniform_sphere(4, 30, gen)
    R = scpkb.random_orthogonal(5, gen)
    a = logpdf(Y, SphericalParams.from_m_rho(family, m, 0.7))
    b = logpdf(Y @ R.T, SphericalParams.from_m_rho(family, R @ m, 0.7))
    assert np.allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("family", ["sc", "pkb"])
@pytest.mark.parametrize("d", [1, 2, 6])
def test_rho_zero_is_uniform(family, d, gen):
    Y = scpkb.sample_uniform_sphere(d, 20, gen)
    params = SphericalParams(family, np.zeros(d + 1))
    assert np.allclose(logpdf(Y, params), log_norm_const(d), atol=1e-14)


def test_log_density_difference_closed_form(gen):
    for d in (2, 4, 9):
        m = scpkb.sample_uniform_sphere(d, 1, gen)[0]
        rho = gen.uniform(0.05, 0.95)
        Y = scpkb.sample_uniform_sphere(d, 60, gen)
        quad_form = 1.0 + rho**2 - 2.0 * rho * (Y @ m)
        closed = (d - 1) * (np.log1p(-rho**2) - 0.5 * np.log(quad_form))
        assert np.allclose(log_density_difference(Y, m, rho), closed, atol=1e-11)


def test_log_density_difference_monotone_and_sign():
    d, rho = 3, 0.6
    m = np.zeros(d + 1)
    m[0] = 1.0
    us = np.linspace(-0.999, 0.999, 201)
    diffs = np.array([
        log_density_difference(_point_at_cosine(m, u), m, rho) for u in us
    ])
    assert np.all(np.diff(diffs) > 0)
    # crossing point: y.m = rho (3 - rho^2) / 2
    u_star = rho * (3.0 - rho**2) / 2.0
    at_star = log_density_difference(_point_at_cosine(m, u_star), m, rho)
    assert at_star == pytest.approx(0.0, abs=1e-12)
    assert np.all(diffs[us < u_star - 1e-9] < 0)
    assert np.all(diffs[us > u_star + 1e-9] > 0)


def test_scalar_and_batch_agree():
    params = SphericalParams.from_m_rho("sc", np.array([0.0, 1.0, 0.0]), 0.3)
    Y = np.eye(3)
    batch = logpdf(Y, params)
    assert batch.shape == (3,)
    for i in range(3):
        one = logpdf(Y[i], params)
        assert isinstance(one, float)
        assert one == pytest.approx(batch[i])


def test_pdf_is_exp_of_logpdf(gen):
    params = SphericalParams.from_m_rho("pkb", np.array([1.0, 0.0, 0.0]), 0.8)
    Y = scpkb.sample_uniform_sphere(2, 10, gen)
    assert np.allclose(pdf(Y, params), np.exp(logpdf(Y, params)))


def test_family_mismatch_and_bad_inputs():
    sc = SphericalParams.from_m_rho("sc", np.array([0.0, 0.0, 1.0]), 0.3)
    pkb = SphericalParams.from_m_rho("pkb", np.array([0.0, 0.0, 1.0]), 0.3)
    with pytest.raises(ValueError):
        sc_logpdf(np.array([0.0, 0.0, 1.0]), pkb)
    with pytest.raises(ValueError):
        pkb_logpdf(np.array([0.0, 0.0, 1.0]), sc)
    with pytest.raises(ValueError, match="off the unit sphere"):
        logpdf(np.array([0.0, 0.0, 2.0]), sc)
    with pytest.raises(ValueError, match="dimension mismatch"):
        logpdf(np.array([1.0, 0.0]), sc)


def test_log_norm_const_values():
    # 1/(2 pi) on the circle, 1/(4 pi) on the sphere
    assert math.exp(log_norm_const(1)) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    assert math.exp(log_norm_const(2)) == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        log_norm_const(0)


def test_component_logpdf_matrix(gen):
    comps = (
        SphericalParams.from_m_rho("sc", np.array([0.0, 0.0, 1.0]), 0.2),
        SphericalParams.from_m_rho("sc", np.array([1.0, 0.0, 0.0]), 0.7),
    )
    Y = scpkb.sample_uniform_sphere(2, 25, gen)
    M = component_logpdf_matrix(Y, comps)
    assert M.shape == (25, 2)
    for j, c in enumerate(comps):
        assert np.allclose(M[:, j], logpdf(Y, c))
