"""Spherical regression with covariate-dependent location and
concentration.

The model links each response direction to its covariates through the
unconstrained location mu_i = B^T x_i, so both the predicted direction
m_i = mu_i/||mu_i|| and the concentration gamma_i = ||mu_i|| vary with
x_i (the errors are heteroscedastic by construction).

Coefficients are stacked column-major: beta = vec(B) lists B[:, 0] (the
coefficients of the first response coordinate) first. In that ordering
the Hessian has the Kronecker structure sum_i M_i (x) x_i x_i^T with M_i
the per-observation response-space Hessian, and the observed information
matrix is I = -(1/n) * Hessian at the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._errors import NumericalError
from .density import log_norm_const
from .sphere import as_directional

__all__ = [
    "RegressionModel",
    "PredictedDirections",
    "fit_regression",
    "fisher_information",
    "predict",
    "fit_metric",
]

_MAX_HALVINGS = 20


@dataclass(frozen=True)
class RegressionModel:
    family: str
    B: np.ndarray          # (p, d+1)
    beta: np.ndarray       # vec(B), column-major, length (d+1)*p
    loglik: float
    fisher: np.ndarray     # ((d+1)p, (d+1)p) observed information
    se: np.ndarray         # (p, d+1), same layout as B
    converged: bool
    iterations: int
    algorithm: str         # "nr" or "nelder-mead"
    n: int
    warnings: tuple = ()


@dataclass(frozen=True)
class PredictedDirections:
    m: np.ndarray       # (n, d+1) unit rows
    gamma: np.ndarray   # (n,)


def _check_design(X, n):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != n:
        raise ValueError("response and design row counts differ")
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix must be finite")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("design matrix is rank deficient")
    return X


def _pieces(Y, X, B, family):
    """Per-observation quantities shared by loglik/score/Hessian."""
    d = Y.shape[1] - 1
    mu = X @ B                                  # (n, q)
    S = np.sqrt(1.0 + np.einsum("ij,ij->i", mu, mu))
    t = S - np.einsum("ij,ij->i", Y, mu)
    ll = Y.shape[0] * log_norm_const(d)
    if family == "sc":
        ll += -d * float(np.log(t).sum())
    else:
        ll += 0.5 * (d - 1) * float(np.log(0.5 * (S + 1.0)).sum())
        ll += -0.5 * (d + 1) * float(np.log(t).sum())
    return mu, S, t, ll


def _loglik_beta(Y, X, beta, family):
    p, q = X.shape[1], Y.shape[1]
    B = beta.reshape((p, q), order="F")
    return _pieces(Y, X, B, family)[3]


def _score_hessian(Y, X, B, family):
    """(ll, gradient, Hessian) in the stacked-coefficient coordinates."""
    n, q = Y.shape
    d = q - 1
    p = X.shape[1]
    mu, S, t, ll = _pieces(Y, X, B, family)
    mS = mu / S[:, None]
    g = mS - Y                                   # (n, q)
    a = float(d) if family == "sc" else 0.5 * (d + 1)

    jstack = -a * g / t[:, None]
    # M_i = -a*(A_i/t_i - g_i g_i^T/t_i^2) with A_i = (I - mS mS^T)/S_i;
    # the identity part of A_i enters through eye_coef on the diagonal
    Mstack = np.einsum("i,ij,ik->ijk", 1.0 / (t * t), g, g)
    Mstack += np.einsum("i,ij,ik->ijk", 1.0 / (S * t), mS, mS)
    eye_coef = 1.0 / (S * t)
    Mstack *= a
    if family == "pkb":
        cb = 0.5 * (d - 1)
        jstack = jstack + cb * mu / (S * (S + 1.0))[:, None]
        Mstack -= np.einsum(
            "i,ij,ik->ijk", cb * (2.0 * S + 1.0) / (S ** 3 * (S + 1.0) ** 2), mu, mu
        )
        eye_coef = a * eye_coef - cb / (S * (S + 1.0))
    else:
        eye_coef = a * eye_coef
    Mstack[:, range(q), range(q)] -= eye_coef[:, None]

    grad = (X.T @ jstack).reshape(p * q, order="F")
    H = np.einsum("ikl,ia,ib->kalb", Mstack, X, X).reshape(p * q, p * q)
    return ll, grad, H


def fit_regression(Y, X, family, tol=1e-6, max_iter=100) -> RegressionModel:
    """Newton-Raphson fit from B = 0, with a derivative-free fallback.

    B = 0 is the uniform-response start (every t_i = 1) and is neutral to
    rotations of the response. If a Newton step cannot improve the
    log-likelihood even after halving, or the solve fails, optimization
    restarts from the current best point with Nelder-Mead; that path is
    reported in `algorithm` (the pkb Hessian is the usual culprit).
    """
    Y = as_directional(Y)
    n, q = Y.shape
    d = q - 1
    X = _check_design(X, n)
    p = X.shape[1]
    if n <= p:
        raise ValueError("need more observations than covariates")
    if family not in ("sc", "pkb"):
        raise ValueError(f"unknown family {family!r}")

    B = np.zeros((p, q))
    ll, grad, H = _score_hessian(Y, X, B, family)
    converged = False
    fell_back = False
    it = 0
    for it in range(1, max_iter + 1):
        B_new = None
        # tau = 0 is the plain Newton step; growing tau bends the damped
        # step toward gradient ascent when H is indefinite mid-path
        diag_scale = max(1e-8, float(np.abs(np.diag(H)).max()))
        for tau in (0.0, 1e-4, 1e-2, 1.0, 1e2, 1e4):
            Hd = H if tau == 0.0 else H - tau * diag_scale * np.eye(H.shape[0])
            try:
                step = np.linalg.solve(Hd, grad).reshape((p, q), order="F")
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(step)):
                continue
            scale = 1.0
            for _ in range(_MAX_HALVINGS + 1):
                cand = B - scale * step
                cll = _pieces(Y, X, cand, family)[3]
                if np.isfinite(cll) and cll >= ll:
                    B_new, ll_new = cand, cll
                    break
                scale *= 0.5
            if B_new is not None:
                break
        if B_new is None:
            fell_back = True
            break
        gain = ll_new - ll
        B = B_new
        ll, grad, H = _score_hessian(Y, X, B, family)
        if abs(gain) < tol:
            converged = True
            break

    algorithm = "nr"
    warnings = ()
    if fell_back:
        algorithm = "nelder-mead"
        beta0 = B.reshape(p * q, order="F")
        res = minimize(
            lambda b: -_loglik_beta(Y, X, b, family),
            beta0,
            method="Nelder-Mead",
            options={"maxfev": 50_000, "xatol": 1e-8, "fatol": 1e-10},
        )
        if -res.fun >= ll:
            B = res.x.reshape((p, q), order="F")
            ll = -res.fun
        converged = bool(res.success)
        it = max_iter
        ll, grad, H = _score_hessian(Y, X, B, family)
        warnings = ("newton step failed; finished with nelder-mead",)

    gamma = np.linalg.norm(X @ B, axis=1)
    if np.any(gamma < 1e-8):
        warnings = warnings + (
            "some fitted per-observation concentrations are numerically zero",
        )

    fisher = -H / n
    n_fisher = n * fisher
    try:
        cov = np.linalg.inv(n_fisher)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None)).reshape((p, q), order="F")
    except np.linalg.LinAlgError:
        se = np.full((p, q), np.nan)
        warnings = warnings + ("information matrix is singular; no standard errors",)

    return RegressionModel(
        family=family,
        B=B,
        beta=B.reshape(p * q, order="F"),
        loglik=ll,
        fisher=fisher,
        se=se,
        converged=converged,
        iterations=it,
        algorithm=algorithm,
        n=n,
        warnings=warnings,
    )


def fisher_information(model: RegressionModel, Y, X):
    """Observed information -(1/n) * Hessian, recomputed at the fitted
    coefficients; raises if it is materially non-PSD there."""
    Y = as_directional(Y)
    X = _check_design(X, Y.shape[0])
    _, _, H = _score_hessian(Y, X, model.B, model.family)
    info = -H / Y.shape[0]
    eigmin = float(np.linalg.eigvalsh(info).min())
    scale = max(1.0, float(np.abs(info).max()))
    if eigmin < -1e-8 * scale:
        raise NumericalError(
            f"information matrix has negative eigenvalue {eigmin:.3e}; "
            "the fit does not look like an interior maximum"
        )
    return info


def predict(model_or_B, X_new) -> PredictedDirections:
    """Predicted directions and per-row concentrations for new covariates."""
    B = model_or_B.B if isinstance(model_or_B, RegressionModel) else np.asarray(model_or_B)
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim == 1:
        X_new = X_new[:, None]
    if X_new.shape[1] != B.shape[0]:
        raise ValueError("X_new column count does not match the coefficient rows")
    mu = X_new @ B
    gamma = np.linalg.norm(mu, axis=1)
    bad = np.flatnonzero(gamma < 1e-10)
    if bad.size:
        raise ValueError(f"predicted location is numerically zero at row {bad[0]}")
    return PredictedDirections(mu / gamma[:, None], gamma)


def fit_metric(Y, predicted) -> float:
    """Mean inner product between observed and predicted directions.

    1 is a perfect fit, 0 is orthogonality; the report range is clamped
    to [-1, 1].
    """
    Y = as_directional(Y)
    m = predicted.m if isinstance(predicted, PredictedDirections) else np.asarray(predicted)
    if m.shape != Y.shape:
        raise ValueError("predicted directions must match the response shape")
    val = float(np.einsum("ij,ij->i", Y, m).mean())
    return min(1.0, max(-1.0, val))
