import numpy as np
import pytest

from scpkb import sphere
from scpkb.rng import RngStream


def test_rho_gamma_round_trip():
    rhos = np.array([0.0, 1e-12, 0.05, 0.3, 0.6, 0.9, 0.999, 1 - 1e-9])
    gammas = sphere.rho_to_gamma(rhos)
    back = sphere.gamma_to_rho(gammas)
    assert np.allclose(back, rhos, rtol=0, atol=1e-12)
    assert sphere.rho_to_gamma(0.0) == 0.0
    assert sphere.gamma_to_rho(0.0) == 0.0


def test_gamma_to_rho_small_gamma_no_cancellation():
    g = 1e-9
    # naive form (sqrt(g^2+1)-1)/g loses all digits here; stable form keeps g/2
    assert sphere.gamma_to_rho(g) == pytest.approx(g / 2, rel=1e-9)


def test_rho_bounds_enforced():
    with pytest.raises(ValueError):
        sphere.rho_to_gamma(1.0)
    with pytest.raises(ValueError):
        sphere.rho_to_gamma(-0.01)
    with pytest.raises(ValueError):
        sphere.gamma_to_rho(-1.0)


def test_normalize_splits_direction_and_norm():
    m, g = sphere.normalize([3.0, 0.0, 4.0])
    assert g == pytest.approx(5.0)
    assert np.allclose(m, [0.6, 0.0, 0.8])
    with pytest.raises(ValueError):
        sphere.normalize([0.0, 0.0, 1e-13])


def test_params_round_trip_and_views():
    m = np.array([0.0, 0.6, 0.8])
    p = sphere.SphericalParams.from_m_rho("sc", m, 0.45)
    assert p.d == 2
    assert p.rho == pytest.approx(0.45, abs=1e-14)
    assert np.allclose(p.m, m)
    assert p.gamma == pytest.approx(sphere.rho_to_gamma(0.45))


def test_params_validation():
    with pytest.raises(ValueError):
        sphere.SphericalParams("vmf", np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        sphere.SphericalParams("sc", np.array([1.0]))
    with pytest.raises(ValueError):
        sphere.SphericalParams("sc", np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        sphere.SphericalParams.from_m_rho("sc", np.array([0.5, 0.5]), 0.2)


def test_params_uniform_encoding():
    p = sphere.SphericalParams("pkb", np.zeros(4))
    assert p.gamma == 0.0
    assert p.rho == 0.0
    with pytest.raises(ValueError):
        p.m  # noqa: B018 - direction undefined at gamma = 0


def test_as_directional_accepts_and_rejects():
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    out = sphere.as_directional(Y)
    assert out.flags["C_CONTIGUOUS"]
    bad = np.array([[1.0, 0.0], [0.5, 0.5]])
    with pytest.raises(ValueError, match="row 1"):
        sphere.as_directional(bad)
    proj = sphere.as_directional(bad, project=True)
    assert np.allclose(np.linalg.norm(proj, axis=1), 1.0)
    with pytest.raises(ValueError, match="zero-norm row 0"):
        sphere.as_directional(np.array([[0.0, 0.0], [1.0, 0.0]]), project=True)
    with pytest.raises(ValueError):
        sphere.as_directional(np.array([[np.inf, 0.0]]))


def test_as_directional_promotes_vector():
    out = sphere.as_directional(np.array([0.0, 0.0, 1.0]))
    assert out.shape == (1, 3)


def test_sample_uniform_sphere_moments():
    Y = sphere.sample_uniform_sphere(3, 20000, RngStream(1))
    assert np.allclose(np.linalg.norm(Y, axis=1), 1.0, atol=1e-12)
    # mean of a uniform law is the origin; per-coordinate SE is ~ 1/sqrt(4 n)
    assert np.max(np.abs(Y.mean(axis=0))) < 5 / np.sqrt(4 * 20000)
    with pytest.raises(ValueError):
        sphere.sample_uniform_sphere(0, 5, RngStream(0))


def test_direction_at_angle():
    m = np.array([1.0, 0.0, 0.0])
    for theta in (0.0, np.pi / 6, np.pi / 2, 2.9):
        v = sphere.direction_at_angle(m, theta)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert float(v @ m) == pytest.approx(np.cos(theta), abs=1e-12)
    w = sphere.direction_at_angle(m, 0.3, axis=np.array([1.0, 1.0, 0.0]))
    assert float(w @ m) == pytest.approx(np.cos(0.3))
    with pytest.raises(ValueError):
        sphere.direction_at_angle(m, 0.3, axis=m)


def test_random_orthogonal():
    Q = sphere.random_orthogonal(5, RngStream(3))
    assert np.allclose(Q @ Q.T, np.eye(5), atol=1e-12)
    Q2 = sphere.random_orthogonal(5, RngStream(3))
    assert np.array_equal(Q, Q2)
