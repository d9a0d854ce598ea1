"""Finite mixtures of spherical Cauchy / Poisson-kernel components via EM.

The E-step works in log space throughout; the M-step reuses the weighted
Newton location fit per component.  Model choice is by BIC or ICL with
nu = (K-1) + K*(d+1) free parameters (weights on the simplex plus one
unconstrained mean vector per component).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlogy

from . import density, mle, sphere
from ._errors import ComponentCollapseError, NumericalError
from .classify import adjusted_rand_index  # noqa: F401  (re-export)
from .rng import as_generator

__all__ = [
    "ClusteringResult",
    "KSelection",
    "MixtureModel",
    "adjusted_rand_index",
    "e_step",
    "em_fit",
    "loglik_mixture",
    "m_step",
    "map_assignments",
    "select_k",
]

_EMPTY_TOL = 1e-8
_MAX_RESTARTS = 3


@dataclass(frozen=True)
class MixtureModel:
    family: str
    K: int
    p: tuple[float, ...]
    components: tuple[sphere.SphericalParams, ...]
    loglik: float
    W: np.ndarray
    bic: float
    icl: float
    em_iterations: int
    converged: bool
    trace: tuple[float, ...]

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def n(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class ClusteringResult:
    assignments: np.ndarray
    model: MixtureModel


@dataclass(frozen=True)
class KSelection:
    family: str
    rows: tuple[dict, ...]
    chosen: dict
    failures: dict

    def model_for(self, K: int) -> MixtureModel:
        for row in self.rows:
            if row["K"] == K:
                return row["model"]
        raise KeyError(f"no fitted model for K={K}")


def _log_joint(Y: np.ndarray, p, components) -> np.ndarray:
    """(n, K) matrix of log p_j + log f(y_i; mu_j)."""
    p = np.asarray(p, dtype=float)
    cols = [density._logpdf_unchecked(Y, c) for c in components]
    return np.log(p)[None, :] + np.column_stack(cols)


def loglik_mixture(Y: np.ndarray, p, components) -> float:
    """Observed-data log-likelihood of the mixture."""
    return float(np.sum(logsumexp(_log_joint(Y, p, components), axis=1)))


def e_step(Y: np.ndarray, p, components) -> np.ndarray:
    """Responsibility matrix; row i is the posterior over components for y_i."""
    lj = _log_joint(Y, p, components)
    row_max = np.max(lj, axis=1)
    bad = ~np.isfinite(row_max)
    if np.any(bad):
        raise NumericalError(
            f"all mixture components underflow at row {int(np.flatnonzero(bad)[0])}"
        )
    W = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
    return W


def m_step(Y: np.ndarray, W: np.ndarray, family: str, warm=None):
    """Weight and component updates maximizing the expected complete loglik.

    warm, when given, supplies previous component parameters as Newton
    starting points; the location solver only accepts improving steps, so
    the expected complete log-likelihood cannot decrease from a warm start.

    Raises ComponentCollapseError when a component's responsibility mass is
    numerically zero, or (for K >= 2) falls below d + 2 points, the minimum
    for its d + 1 parameters to be estimable rather than a boundary spike.
    """
    W = np.asarray(W, dtype=float)
    n, K = W.shape
    col = W.sum(axis=0)
    small = col < _EMPTY_TOL * n
    if np.any(small):
        j = int(np.flatnonzero(small)[0])
        raise ComponentCollapseError(
            f"component {j + 1} collapsed (responsibility mass {col[j]:.3e})"
        )
    if K >= 2:
        # identifiability floor: a component carrying less mass than its
        # parameter count plus one is a likelihood spike (rho runs to the
        # boundary around a handful of points), not an estimable cluster
        d = Y.shape[1] - 1
        thin = col < d + 2
        if np.any(thin):
            j = int(np.flatnonzero(thin)[0])
            raise ComponentCollapseError(
                f"component {j + 1} degenerate (mass {col[j]:.2f} below the "
                f"{d + 2}-point floor for {d + 1} parameters)"
            )
    p = col / n
    components = []
    for j in range(K):
        mu0 = None if warm is None else warm[j].mu
        fit = mle.fit_nr(Y, family, weights=W[:, j], mu0=mu0)
        components.append(fit.params)
    return p, tuple(components)


def _spherical_kmeans(Y: np.ndarray, K: int, gen, n_iter: int = 25) -> np.ndarray:
    """Hard partition by cosine similarity; returns labels in 0..K-1."""
    n = Y.shape[0]
    centroids = Y[gen.choice(n, size=K, replace=False)].copy()
    labels = np.zeros(n, dtype=int)
    for _ in range(n_iter):
        sim = Y @ centroids.T
        new_labels = np.argmax(sim, axis=1)
        for j in range(K):
            rows = Y[new_labels == j]
            if rows.shape[0] == 0:
                centroids[j] = Y[gen.integers(n)]
                continue
            mean = rows.sum(axis=0)
            norm = np.linalg.norm(mean)
            if norm < 1e-12:
                centroids[j] = Y[gen.integers(n)]
            else:
                centroids[j] = mean / norm
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def _one_start(Y: np.ndarray, K: int, family: str, tol, max_iter, gen):
    n = Y.shape[0]
    labels = _spherical_kmeans(Y, K, gen)
    W = np.zeros((n, K))
    W[np.arange(n), labels] = 1.0
    # soften the hard partition a touch so no component starts empty
    W = 0.98 * W + 0.02 / K
    p, components = m_step(Y, W, family)
    ll = loglik_mixture(Y, p, components)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        W = e_step(Y, p, components)
        p, components = m_step(Y, W, family, warm=components)
        ll_new = loglik_mixture(Y, p, components)
        trace.append(ll_new)
        gain = ll_new - ll
        ll = ll_new
        if abs(gain) < tol * max(1.0, abs(ll_new)):
            converged = True
            break
    W = e_step(Y, p, components)
    return p, components, ll, W, it, converged, trace


def _entropy(W: np.ndarray) -> float:
    return float(-np.sum(xlogy(W, W)))


def em_fit(
    Y: np.ndarray,
    K: int,
    family: str,
    tol: float = 1e-6,
    max_iter: int = 500,
    n_starts: int = 10,
    rng=None,
) -> MixtureModel:
    """Best-of-n_starts EM fit with K components.

    Each start draws its own fresh k-means initialization; a start whose
    EM run collapses a component is re-initialized up to 3 times before
    being recorded as failed.  All starts failing raises with the
    per-start diagnostics.
    """
    Y = sphere.as_directional(Y)
    n, q = Y.shape
    if K < 1:
        raise ValueError("K must be at least 1")
    if n <= K:
        raise ValueError(f"need more observations ({n}) than components ({K})")
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    gen = as_generator(rng)
    seeds = gen.integers(np.iinfo(np.int64).max, size=n_starts)
    best = None
    diagnostics = []
    for s in range(n_starts):
        sgen = np.random.default_rng(int(seeds[s]))
        outcome = None
        for attempt in range(_MAX_RESTARTS + 1):
            try:
                outcome = _one_start(Y, K, family, tol, max_iter, sgen)
                break
            except NumericalError as exc:
                diagnostics.append(f"start {s + 1} attempt {attempt + 1}: {exc}")
        if outcome is None:
            continue
        if best is None or outcome[2] > best[2]:
            best = outcome
    if best is None:
        raise ComponentCollapseError(
            "every EM start failed: " + "; ".join(diagnostics)
        )
    p, components, ll, W, it, converged, trace = best
    d = q - 1
    nu = (K - 1) + K * (d + 1)
    bic = -2.0 * ll + nu * np.log(n)
    icl = bic + 2.0 * _entropy(W)
    return MixtureModel(
        family=family,
        K=K,
        p=tuple(float(v) for v in p),
        components=components,
        loglik=ll,
        W=W,
        bic=float(bic),
        icl=float(icl),
        em_iterations=it,
        converged=converged,
        trace=tuple(trace),
    )


def map_assignments(model: MixtureModel) -> ClusteringResult:
    """Hard clustering by the highest responsibility (ties to lowest index)."""
    assignments = np.argmax(model.W, axis=1) + 1
    return ClusteringResult(assignments=assignments, model=model)


def select_k(
    Y: np.ndarray,
    family: str,
    K_max: int,
    criteria=("bic", "icl"),
    rng=None,
    n_starts: int = 10,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> KSelection:
    """Fit K = 1..K_max and pick the K minimizing each requested criterion."""
    if K_max < 1:
        raise ValueError("K_max must be at least 1")
    criteria = tuple(c.lower() for c in criteria)
    for c in criteria:
        if c not in ("bic", "icl"):
            raise ValueError(f"unknown criterion {c!r}")
    gen = as_generator(rng)
    seeds = gen.integers(np.iinfo(np.int64).max, size=K_max)
    rows = []
    failures = {}
    for K in range(1, K_max + 1):
        try:
            model = em_fit(
                Y, K, family,
                tol=tol, max_iter=max_iter, n_starts=n_starts,
                rng=np.random.default_rng(int(seeds[K - 1])),
            )
        except (NumericalError, ValueError) as exc:
            failures[K] = str(exc)
            continue
        rows.append({
            "K": K,
            "loglik": model.loglik,
            "nu": (K - 1) + K * (model.d + 1),
            "bic": model.bic,
            "icl": model.icl,
            "converged": model.converged,
            "model": model,
        })
    if not rows:
        raise NumericalError(
            "no mixture order could be fitted: "
            + "; ".join(f"K={k}: {v}" for k, v in failures.items())
        )
    chosen = {}
    for c in criteria:
        chosen[c] = min(rows, key=lambda r: r[c])["K"]
    return KSelection(family=family, rows=tuple(rows), chosen=chosen, failures=failures)
