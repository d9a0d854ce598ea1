import math

import numpy as np
import pytest

import scpkb
from scpkb._errors import ComponentCollapseError, NumericalError
from scpkb.density import pdf
from scpkb.mixtures import (
    MixtureModel,
    e_step,
    em_fit,
    loglik_mixture,
    m_step,
    map_assignments,
    select_k,
)
from scpkb.rng import RngStream
from scpkb.sphere import SphericalParams


def _comp(family, direction, rho):
    return SphericalParams.from_m_rho(family, np.asarray(direction, float), rho)


def _blobs(family, K, d, n, stream, rho=0.8):
    """K orthogonal-direction clusters (needs K <= d+1) and true labels."""
    gen = stream.generator()
    assert K <= d + 1
    dirs = np.eye(d + 1)[:K]
    sizes = np.full(K, n // K)
    sizes[: n % K] += 1
    Y = np.vstack([
        scpkb.sample(_comp(family, dirs[j], rho), int(sizes[j]), stream.child(j))
        for j in range(K)
    ])
    labels = np.repeat(np.arange(1, K + 1), sizes)
    perm = gen.permutation(n)
    return Y[perm], labels[perm], dirs


def test_e_step_single_component_is_ones(gen):
    Y = scpkb.sample_uniform_sphere(2, 30, gen)
    W = e_step(Y, [1.0], (_comp("sc", [0.0, 0.0, 1.0], 0.5),))
    assert np.allclose(W, 1.0)


def test_e_step_identical_components_return_weights(gen):
    Y = scpkb.sample_uniform_sphere(3, 25, gen)
    c = _comp("pkb", [1.0, 0.0, 0.0, 0.0], 0.4)
    W = e_step(Y, [0.3, 0.7], (c, c))
    assert np.allclose(W[:, 0], 0.3)
    assert np.allclose(W[:, 1], 0.7)


def test_e_step_matches_naive_ratio(gen):
    Y = scpkb.sample_uniform_sphere(2, 40, gen)
    comps = (_comp("sc", [0.0, 0.0, 1.0], 0.6), _comp("sc", [1.0, 0.0, 0.0], 0.3))
    p = np.array([0.45, 0.55])
    W = e_step(Y, p, comps)
    dens = np.column_stack([pdf(Y, c) for c in comps]) * p[None, :]
    naive = dens / dens.sum(axis=1, keepdims=True)
    assert np.allclose(W, naive, atol=1e-12)
    assert np.allclose(W.sum(axis=1), 1.0, atol=1e-10)


def test_e_step_underflow_raises():
    # a concentration large enough that gamma^2 overflows makes every
    # component's log-density -inf, which the e-step must refuse
    far = np.array([0.0, 0.0, -1.0])
    comps = (
        SphericalParams("sc", np.array([0.0, 0.0, 1e200])),
        SphericalParams("sc", np.array([0.0, 1e200, 0.0])),
    )
    with np.errstate(over="ignore"), pytest.raises(
        NumericalError, match="underflow at row 0"
    ):
        e_step(far[None, :], [0.5, 0.5], comps)


def test_m_step_one_hot_equals_per_cluster_fits(gen):
    Y1 = scpkb.sample(_comp("sc", [0.0, 0.0, 1.0], 0.7), 60, RngStream(70))
    Y2 = scpkb.sample(_comp("sc", [1.0, 0.0, 0.0], 0.5), 40, RngStream(71))
    Y = np.vstack([Y1, Y2])
    W = np.zeros((100, 2))
    W[:60, 0] = 1.0
    W[60:, 1] = 1.0
    p, comps = m_step(Y, W, "sc")
    assert p == pytest.approx((0.6, 0.4))
    direct1 = scpkb.fit_nr(Y1, "sc").params
    direct2 = scpkb.fit_nr(Y2, "sc").params
    assert np.allclose(comps[0].mu, direct1.mu, atol=1e-6)
    assert np.allclose(comps[1].mu, direct2.mu, atol=1e-6)


def test_m_step_uniform_weights_equals_pooled_fit(gen):
    Y = scpkb.sample(_comp("pkb", [0.0, 1.0, 0.0], 0.6), 80, RngStream(72))
    W = np.full((80, 2), 0.5)
    p, comps = m_step(Y, W, "pkb")
    pooled = scpkb.fit_nr(Y, "pkb").params
    assert p == pytest.approx((0.5, 0.5))
    for c in comps:
        assert np.allclose(c.mu, pooled.mu, atol=1e-5)


def test_m_step_collapse_raises():
    Y = scpkb.sample_uniform_sphere(2, 50, np.random.default_rng(0))
    W = np.column_stack([np.ones(50), np.zeros(50)])
    with pytest.raises(ComponentCollapseError, match="component 2 collapsed"):
        m_step(Y, W, "sc")


def test_em_single_component_equals_direct_fit():
    Y = scpkb.sample(_comp("sc", [0.6, 0.0, 0.8], 0.65), 300, RngStream(73))
    model = em_fit(Y, 1, "sc", rng=np.random.default_rng(1), n_starts=2)
    direct = scpkb.fit_nr(Y, "sc")
    assert model.loglik == pytest.approx(direct.loglik, abs=1e-6)
    assert np.allclose(model.components[0].mu, direct.params.mu, atol=1e-4)
    assert model.p == (1.0,)
    # nu = (K-1) + K(d+1) = 3 here, so bic has the exact closed form
    assert model.bic == pytest.approx(-2.0 * model.loglik + 3.0 * math.log(300))
    assert model.icl == pytest.approx(model.bic)  # one component: zero entropy


@pytest.mark.parametrize("family", ["sc", "pkb"])
def test_em_recovers_separated_clusters(family):
    rho = 0.8
    Y, labels, dirs = _blobs(
        family, 3, 3, 450, RngStream(74, 1 if family == "sc" else 2), rho=rho
    )
    model = em_fit(Y, 3, family, rng=np.random.default_rng(7), n_starts=4)
    res = map_assignments(model)
    ari = scpkb.adjusted_rand_index(res.assignments, labels)
    # ceiling: accuracy of the posterior rule under the true parameters
    truth = tuple(_comp(family, dirs[j], rho) for j in range(3))
    bayes = np.argmax(e_step(Y, np.full(3, 1 / 3), truth), axis=1) + 1
    bayes_ari = scpkb.adjusted_rand_index(bayes, labels)
    assert ari > bayes_ari - 0.05
    assert model.converged
    # fitted directions match the true ones up to component order
    fitted = np.array([c.m for c in model.components])
    match = np.abs(fitted @ dirs.T).max(axis=1)
    assert np.all(match > 0.98)


def test_em_trace_monotone_and_rows_normalized():
    Y, _, _ = _blobs("sc", 2, 2, 200, RngStream(75))
    model = em_fit(Y, 2, "sc", rng=np.random.default_rng(3), n_starts=3)
    t = np.asarray(model.trace)
    assert np.all(np.diff(t) >= -1e-8 * np.maximum(1.0, np.abs(t[1:])))
    assert np.allclose(model.W.sum(axis=1), 1.0, atol=1e-10)
    assert model.loglik == pytest.approx(
        loglik_mixture(Y, model.p, model.components), abs=1e-9
    )
    assert sum(model.p) == pytest.approx(1.0, abs=1e-12)


def test_em_deterministic_under_seeded_rng():
    Y, _, _ = _blobs("sc", 2, 2, 150, RngStream(76))
    a = em_fit(Y, 2, "sc", rng=np.random.default_rng(11), n_starts=3)
    b = em_fit(Y, 2, "sc", rng=np.random.default_rng(11), n_starts=3)
    assert a.loglik == b.loglik
    assert a.p == b.p


def test_em_input_validation():
    Y = scpkb.sample_uniform_sphere(2, 10, np.random.default_rng(0))
    with pytest.raises(ValueError, match="K must be at least 1"):
        em_fit(Y, 0, "sc")
    with pytest.raises(ValueError, match="more observations"):
        em_fit(Y, 10, "sc")
    with pytest.raises(ValueError, match="n_starts"):
        em_fit(Y, 2, "sc", n_starts=0)


def test_map_assignments_tie_break():
    W = np.array([[0.5, 0.5], [0.2, 0.8]])
    model = MixtureModel(
        family="sc", K=2, p=(0.5, 0.5),
        components=(_comp("sc", [0, 0, 1.0], 0.1),) * 2,
        loglik=0.0, W=W, bic=0.0, icl=0.0,
        em_iterations=1, converged=True, trace=(0.0,),
    )
    res = map_assignments(model)
    assert list(res.assignments) == [1, 2]


def test_select_k_single_tight_cluster_prefers_one():
    Y = scpkb.sample(_comp("sc", [0.0, 0.0, 1.0], 0.85), 400, RngStream(77))
    sel = select_k(Y, "sc", K_max=3, rng=np.random.default_rng(5), n_starts=3)
    assert sel.chosen["bic"] == 1
    assert sel.chosen["icl"] == 1
    assert not sel.failures
    ks = [row["K"] for row in sel.rows]
    assert ks == [1, 2, 3]
    assert sel.model_for(1).K == 1
    with pytest.raises(KeyError):
        sel.model_for(9)


def test_select_k_finds_true_order():
    Y, _, _ = _blobs("sc", 3, 2, 600, RngStream(78))
    sel = select_k(Y, "sc", K_max=5, rng=np.random.default_rng(6), n_starts=4)
    # the entropy penalty makes icl recover the partition order exactly;
    # plain bic may split a heavy tail off a component (never underfits
    # here), so it is only bounded below
    assert sel.chosen["icl"] == 3
    assert sel.chosen["bic"] >= 3
    for row in sel.rows:
        nu = (row["K"] - 1) + row["K"] * 3
        assert row["bic"] == pytest.approx(
            -2.0 * row["loglik"] + nu * math.log(600), rel=1e-12
        )


def test_select_k_validation():
    Y = scpkb.sample_uniform_sphere(2, 30, np.random.default_rng(0))
    with pytest.raises(ValueError, match="K_max"):
        select_k(Y, "sc", K_max=0)
    with pytest.raises(ValueError, match="unknown criterion"):
        select_k(Y, "sc", K_max=2, criteria=("aic",))


def test_icl_equals_bic_plus_twice_entropy():
    Y, _, _ = _blobs("pkb", 2, 2, 200, RngStream(79))
    model = em_fit(Y, 2, "pkb", rng=np.random.default_rng(9), n_starts=2)
    from scipy.special import xlogy

    ent = float(-np.sum(xlogy(model.W, model.W)))
    assert model.icl == pytest.approx(model.bic + 2.0 * ent, rel=1e-12)
    nu = 1 + 2 * 3
    assert model.bic == pytest.approx(-2 * model.loglik + nu * math.log(200), rel=1e-12)
