"""Pure NumPy implementations of the accumulation kernels.

These define the reference semantics. The compiled core in ``_core.pyx``
must agree with them to floating-point roundoff; the parity tests enforce
this. Both operate on the unconstrained location ``mu`` with

    t_i = sqrt(1 + mu.mu) - y_i.mu

which is strictly positive whenever the rows of Y have unit norm, because
sqrt(g^2 + 1) > g >= y.mu for ||y|| = 1.
"""

import math

import numpy as np

BACKEND_NAME = "python"


def sum_log_t(Y, w, mu):
    """Weighted sum of log t_i.

    Parameters
    ----------
    Y : (n, q) float array, rows on the unit sphere
    w : (n,) float array of non-negative weights, or None for all-ones
    mu : (q,) float array, unconstrained location

    Returns
    -------
    float
    """
    Y = np.asarray(Y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    s = math.sqrt(1.0 + float(mu @ mu))
    t = s - Y @ mu
    logs = np.log(t)
    if w is None:
        return float(logs.sum())
    return float(np.asarray(w, dtype=np.float64) @ logs)


def location_stats(Y, w, mu):
    """Sufficient statistics for one Newton step at location mu.

    Returns the tuple (slog, s1, s2, sy1, sy2, syy2) where, with weights
    w_i (ones when w is None),

        slog = sum_i w_i log t_i
        s1   = sum_i w_i / t_i
        s2   = sum_i w_i / t_i^2
        sy1  = sum_i w_i y_i / t_i          (length-q vector)
        sy2  = sum_i w_i y_i / t_i^2        (length-q vector)
        syy2 = sum_i w_i y_i y_i^T / t_i^2  (q x q matrix)

    These are everything the score and Hessian of either family's
    log-likelihood need beyond O(q^2) assembly.
    """
    Y = np.asarray(Y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    s = math.sqrt(1.0 + float(mu @ mu))
    t = s - Y @ mu
    inv_t = 1.0 / t
    if w is None:
        w1 = inv_t
        slog = float(np.log(t).sum())
    else:
        w = np.asarray(w, dtype=np.float64)
        w1 = w * inv_t
        slog = float(w @ np.log(t))
    w2 = w1 * inv_t
    s1 = float(w1.sum())
    s2 = float(w2.sum())
    sy1 = Y.T @ w1
    sy2 = Y.T @ w2
    syy2 = (Y * w2[:, None]).T @ Y
    return slog, s1, s2, sy1, sy2, syy2
