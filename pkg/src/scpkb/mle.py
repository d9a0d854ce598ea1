"""Maximum likelihood estimation for both families.

Two algorithms are provided. Newton-Raphson works on the unconstrained
location mu (score and Hessian assembled from one-pass weighted
sufficient statistics), with step halving and a single alternating-step
rescue when a step fails. The hybrid algorithm alternates a bounded Brent
search over rho at fixed direction m with a fixed-point update of m, and
also works when n < d.

Both families share the structure

    ll = n*log(C_d) + n*b(S) - a * sum_i w_i log t_i,
    t_i = S - y_i.mu,  S = sqrt(gamma^2 + 1),

with a = d, b = 0 for sc and a = (d+1)/2, b(S) = ((d-1)/2)*log((S+1)/2)
for pkb. The pkb b(S) form is an exact rewrite of the textbook constant
term (which is 0/0 at gamma = 0) and is smooth down to the uniform law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from ._errors import NumericalError
from .density import log_norm_const
from .sphere import SphericalParams, as_directional, rho_to_gamma

__all__ = [
    "FitResult",
    "loglik",
    "loglik_mrho",
    "score_and_hessian",
    "fit_nr",
    "fit_hybrid",
    "fit",
]

_RHO_MAX = 1.0 - 1e-9
_BRENT_XATOL = 1e-9
_MAX_HALVINGS = 20


@dataclass(frozen=True)
class FitResult:
    params: SphericalParams
    loglik: float
    iterations: int
    converged: bool
    trace: tuple
    algorithm: str


def _coefs(family, d):
    """(a, has_const): multiplier of sum log t and whether b(S) is nonzero."""
    if family == "sc":
        return float(d), False
    if family == "pkb":
        return 0.5 * (d + 1), True
    raise ValueError(f"unknown family {family!r}")


def _weights_vector(weights, n):
    if weights is None:
        return None, float(n)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError("weights must be a length-n vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    return w, float(w.sum())


def _loglik_mu(Y, w, nw, mu, family):
    d = Y.shape[1] - 1
    a, has_const = _coefs(family, d)
    slog = _kernels.sum_log_t(Y, w, mu)
    ll = nw * log_norm_const(d) - a * slog
    if has_const:
        S = math.sqrt(1.0 + float(mu @ mu))
        ll += nw * 0.5 * (d - 1) * math.log(0.5 * (S + 1.0))
    return ll


def loglik(Y, params: SphericalParams, weights=None):
    """Total (weighted) log-likelihood at params, normalizing constant
    included."""
    Y = as_directional(Y)
    if Y.shape[1] != params.mu.size:
        raise ValueError("dimension mismatch between data and parameters")
    w, nw = _weights_vector(weights, Y.shape[0])
    return _loglik_mu(Y, w, nw, params.mu, params.family)


def loglik_mrho(Y, family, m, rho, weights=None):
    """Log-likelihood in the (m, rho) parameterization (same value)."""
    Y = as_directional(Y)
    w, nw = _weights_vector(weights, Y.shape[0])
    c = Y @ np.asarray(m, dtype=np.float64)
    return _loglik_c(c, w, nw, family, Y.shape[1] - 1, float(rho))


def _loglik_c(c, w, nw, family, d, rho):
    """Log-likelihood from precomputed cosines c = Y @ m."""
    a, has_const = _coefs(family, d)
    k1 = float(d) if family == "sc" else 1.0
    quad_log = np.log1p(rho * rho - 2.0 * rho * c)
    squad = float(quad_log.sum()) if w is None else float(w @ quad_log)
    return nw * log_norm_const(d) + nw * k1 * math.log1p(-rho * rho) - a * squad


def _assemble(Y, w, nw, mu, family, want_hessian=True):
    """(ll, J, H) at mu from one pass of the stats kernel; H None if not
    wanted."""
    q = Y.shape[1]
    d = q - 1
    a, has_const = _coefs(family, d)
    slog, s1, s2, sy1, sy2, syy2 = _kernels.location_stats(Y, w, mu)
    S = math.sqrt(1.0 + float(mu @ mu))
    mS = mu / S
    ll = nw * log_norm_const(d) - a * slog
    J = -a * (mS * s1 - sy1)
    H = None
    if want_hessian:
        A = (np.eye(q) - np.outer(mS, mS)) / S
        Ggg = s2 * np.outer(mS, mS) - np.outer(mS, sy2) - np.outer(sy2, mS) + syy2
        H = -a * (A * s1 - Ggg)
    if has_const:
        cb = 0.5 * (d - 1) * nw
        ll += cb * math.log(0.5 * (S + 1.0))
        J = J + cb * mu / (S * (S + 1.0))
        if want_hessian:
            H = H + cb * (
                np.eye(q) / (S * (S + 1.0))
                - (2.0 * S + 1.0) / (S ** 3 * (S + 1.0) ** 2) * np.outer(mu, mu)
            )
    return ll, J, H


def score_and_hessian(Y, params: SphericalParams, weights=None):
    """Analytic score J and Hessian H of the log-likelihood at params.mu.

    For pkb the derivation assumes gamma > 0 (the textbook form has
    1/gamma^2 factors); evaluation below gamma = 1e-8 is refused even
    though the rewritten expressions happen to stay finite.
    """
    Y = as_directional(Y)
    if Y.shape[1] != params.mu.size:
        raise ValueError("dimension mismatch between data and parameters")
    if params.family == "pkb" and params.gamma < 1e-8:
        raise NumericalError("pkb score/Hessian near gamma = 0 is ill-conditioned")
    w, nw = _weights_vector(weights, Y.shape[0])
    _, J, H = _assemble(Y, w, nw, params.mu, params.family)
    return J, H


def _check_sample(Y, weights):
    Y = as_directional(Y)
    if Y.shape[0] < 2 and weights is None:
        raise ValueError("need at least 2 observations")
    if np.ptp(Y, axis=0).max() == 0.0:
        raise ValueError("all observations identical: the MLE diverges")
    return Y


def _brent_rho(c, w, nw, family, d):
    """Maximize the (m fixed) profile log-likelihood over rho in
    [0, 1-1e-9]."""

    def negll(rho):
        return -_loglik_c(c, w, nw, family, d, rho)

    res = minimize_scalar(
        negll, bounds=(0.0, _RHO_MAX), method="bounded", options={"xatol": _BRENT_XATOL}
    )
    if not res.success:
        raise NumericalError("rho search failed to converge")
    return float(res.x), -float(res.fun)


def _fixed_point_m(Y, w, c, rho):
    """One fixed-point update of the direction: the unit vector parallel
    to sum_i w_i y_i / (1 + rho^2 - 2 rho y_i.m). Each update is an ascent
    step for either family (the m-dependent terms share one coefficient)."""
    invquad = 1.0 / (1.0 + rho * rho - 2.0 * rho * c)
    u = Y.T @ (invquad if w is None else w * invquad)
    nu = np.linalg.norm(u)
    if nu < 1e-300:
        raise NumericalError("fixed-point direction update collapsed to zero")
    return u / nu


def fit_hybrid(Y, family, tol=1e-6, max_iter=100, weights=None, m0=None) -> FitResult:
    """Alternating Brent (rho) and fixed-point (m) maximization.

    Starts from the normalized (weighted) sample mean; the log-likelihood
    trace is non-decreasing by construction and the loop stops when one
    full sweep gains less than tol.
    """
    Y = _check_sample(Y, weights)
    w, nw = _weights_vector(weights, Y.shape[0])
    d = Y.shape[1] - 1
    if nw <= 0:
        raise ValueError("weights sum to zero")

    if m0 is None:
        r = Y.mean(axis=0) if w is None else (Y.T @ w) / nw
        nr = np.linalg.norm(r)
        if nr < 1e-12:
            raise ValueError(
                "zero resultant: the mean direction start is undefined"
            )
        m = r / nr
    else:
        m = np.asarray(m0, dtype=np.float64)
        m = m / np.linalg.norm(m)

    c = Y @ m
    rho, ll = _brent_rho(c, w, nw, family, d)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        m_new = _fixed_point_m(Y, w, c, rho)
        c_new = Y @ m_new
        ll_m = _loglik_c(c_new, w, nw, family, d, rho)
        if ll_m < ll:
            # ascent holds analytically; any decrease is roundoff noise
            m_new, c_new, ll_m = m, c, ll
        rho_new, ll_new = _brent_rho(c_new, w, nw, family, d)
        if ll_new < ll_m:
            rho_new, ll_new = rho, ll_m
        gain = ll_new - ll
        m, c, rho, ll = m_new, c_new, rho_new, ll_new
        trace.append(ll)
        if gain < tol:
            converged = True
            break

    params = SphericalParams(family, rho_to_gamma(rho) * m)
    return FitResult(params, ll, it, converged, tuple(trace), "hybrid")


def _hybrid_rescue(Y, w, nw, mu, family, d):
    """One (m, rho) alternating sweep, used when a Newton step stalls."""
    gamma = float(np.linalg.norm(mu))
    m = mu / gamma if gamma > 1e-12 else Y[0] / np.linalg.norm(Y[0])
    c = Y @ m
    rho, _ = _brent_rho(c, w, nw, family, d)
    m = _fixed_point_m(Y, w, c, rho)
    c = Y @ m
    rho, _ = _brent_rho(c, w, nw, family, d)
    return rho_to_gamma(rho) * m


def fit_nr(Y, family, tol=1e-6, max_iter=100, weights=None, mu0=None) -> FitResult:
    """Newton-Raphson on the unconstrained location.

    Starts at the (weighted) sample mean vector. A step that fails (the
    Hessian solve errors out, or the log-likelihood decreases even after
    20 halvings) is replaced by one hybrid sweep; if that cannot improve
    either, iteration stops. Every accepted step improves the
    log-likelihood, so the trace is non-decreasing.
    """
    Y = _check_sample(Y, weights)
    w, nw = _weights_vector(weights, Y.shape[0])
    if nw <= 0:
        raise ValueError("weights sum to zero")
    d = Y.shape[1] - 1

    if mu0 is None:
        mu = Y.mean(axis=0) if w is None else (Y.T @ w) / nw
        if np.linalg.norm(mu) < 1e-8:
            # degenerate resultant: break the symmetry deterministically
            mu = mu + 1e-6 * Y[0]
    else:
        mu = np.asarray(mu0, dtype=np.float64).copy()

    ll = _loglik_mu(Y, w, nw, mu, family)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        _, J, H = _assemble(Y, w, nw, mu, family)
        mu_new = None
        try:
            step = np.linalg.solve(H, J)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and np.all(np.isfinite(step)):
            scale = 1.0
            for _ in range(_MAX_HALVINGS + 1):
                cand = mu - scale * step
                cll = _loglik_mu(Y, w, nw, cand, family)
                if np.isfinite(cll) and cll >= ll:
                    mu_new, ll_new = cand, cll
                    break
                scale *= 0.5
        if mu_new is None:
            cand = _hybrid_rescue(Y, w, nw, mu, family, d)
            cll = _loglik_mu(Y, w, nw, cand, family)
            if np.isfinite(cll) and cll >= ll:
                mu_new, ll_new = cand, cll
            else:
                break  # no direction improves: treat as stalled at mu
        gain = ll_new - ll
        mu, ll = mu_new, ll_new
        trace.append(ll)
        if not np.isfinite(ll) or float(mu @ mu) > 1e24:
            raise NumericalError(
                "diverging concentration: the MLE is degenerate for these data"
            )
        if abs(gain) < tol:
            converged = True
            break

    params = SphericalParams(family, mu)
    return FitResult(params, ll, it, converged, tuple(trace), "nr")


def fit(Y, family, algorithm="nr", tol=1e-6, max_iter=100, weights=None) -> FitResult:
    """Dispatch on algorithm name ('nr' or 'hybrid')."""
    if algorithm == "nr":
        return fit_nr(Y, family, tol=tol, max_iter=max_iter, weights=weights)
    if algorithm == "hybrid":
        return fit_hybrid(Y, family, tol=tol, max_iter=max_iter, weights=weights)
    raise ValueError(f"unknown algorithm {algorithm!r}")
