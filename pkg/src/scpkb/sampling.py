"""Random generation for both families.

The sc sampler is exact (one uniform draw per output, no rejection): it
pushes uniform sphere variates through a Mobius-type map toward m. The pkb
sampler is rejection sampling with an angular-central-Gaussian envelope
whose shape parameter beta* is found by minimizing the log-bound
omega_d(lambda, beta). That bound drops a beta-free constant, so beta* is
unaffected, but the realized acceptance rate carries it back in:
exp(-omega_d(lambda, beta*)) / (1 - rho^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._errors import NumericalError
from .rng import as_generator
from .sphere import SphericalParams, sample_uniform_sphere

__all__ = ["SamplerDiagnostics", "sample_sc", "sample_pkb", "sample"]


@dataclass(frozen=True)
class SamplerDiagnostics:
    proposals: int
    accepted: int

    def __post_init__(self):
        if self.accepted > self.proposals:
            raise ValueError("accepted cannot exceed proposals")

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 1.0


def sample_sc(params: SphericalParams, n: int, rng):
    """n draws from sc(m, rho) on S^d.

    Exactly n uniform variates are consumed; rho = 0 reduces the map to
    the identity on the uniform draws.
    """
    if params.family != "sc":
        raise ValueError("params.family must be 'sc'")
    if n < 1:
        raise ValueError("need n >= 1")
    rho = params.rho
    u = sample_uniform_sphere(params.d, n, rng)
    if rho == 0.0:
        return u
    rm = rho * params.m
    w = u + rm
    wnorm2 = np.einsum("ij,ij->i", w, w)
    y = (1.0 - rho * rho) / wnorm2[:, None] * w + rm
    # exact algebra gives unit rows; renormalize to kill roundoff drift
    return y / np.linalg.norm(y, axis=1)[:, None]


def _omega(beta, lam, d):
    """Log of the rejection bound for the ACG envelope with shape beta."""
    return 0.5 * (d + 1) * math.log(
        (1.0 + math.sqrt(1.0 - lam * lam)) / (1.0 + math.sqrt(1.0 - lam * lam / beta))
    ) - 0.5 * math.log1p(-beta)


def _envelope_setup(rho, d):
    """Minimize omega_d over beta and return (beta*, omega*, lambda).

    The search interval printed with the algorithm starts at
    lambda*(2*lambda - 1), but omega is complex below beta = lambda^2
    (the square root goes negative), so the interval is clipped there.
    """
    lam = 2.0 * rho / (1.0 + rho * rho)
    lo = max(lam * (2.0 * lam - 1.0), lam * lam) + 1e-9
    hi = 1.0 - 1e-9
    if not lo < hi:
        raise NumericalError(f"degenerate beta search interval for rho={rho}")
    res = minimize_scalar(
        _omega, bounds=(lo, hi), args=(lam, d), method="bounded",
        options={"xatol": 1e-8},
    )
    if not res.success or not np.isfinite(res.fun):
        raise NumericalError(f"beta* search failed for rho={rho}, d={d}")
    return float(res.x), float(res.fun), lam


def sample_pkb(params: SphericalParams, n: int, rng):
    """n draws from pkb(m, rho) plus rejection diagnostics.

    rho = 0 delegates to the uniform sampler with acceptance rate 1.
    """
    if params.family != "pkb":
        raise ValueError("params.family must be 'pkb'")
    if n < 1:
        raise ValueError("need n >= 1")
    rho = params.rho
    if rho == 0.0:
        return sample_uniform_sphere(params.d, n, rng), SamplerDiagnostics(n, n)

    d = params.d
    q = d + 1
    m = params.m
    beta, omega_star, lam = _envelope_setup(rho, d)
    beta1 = beta / (1.0 - beta)
    beta2 = -1.0 + 1.0 / math.sqrt(1.0 - beta)
    # log of the constant in the acceptance ratio
    log_bound = math.log(2.0 / (1.0 + math.sqrt(1.0 - lam * lam / beta)))
    acc_theory = math.exp(-omega_star) / (1.0 - rho * rho)

    gen = as_generator(rng)
    out = np.empty((n, q))
    filled = 0
    proposals = 0
    accepted = 0
    max_rounds = 10_000
    for _ in range(max_rounds):
        need = n - filled
        if need <= 0:
            break
        chunk = max(256, int(1.2 * need / acc_theory) + 16)
        z = gen.standard_normal((chunk, q))
        uni = gen.random(chunk)
        proposals += chunk
        mz = z @ m
        denom = np.sqrt(np.einsum("ij,ij->i", z, z) + beta1 * mz * mz)
        qcos = (1.0 + beta2) * mz / denom
        log_ratio = 0.5 * (d + 1) * (
            np.log1p(-beta * qcos * qcos) - np.log1p(-lam * qcos) - log_bound
        )
        keep = np.flatnonzero(np.log(uni) <= log_ratio)
        accepted += keep.size
        if keep.size:
            # surplus acceptances beyond n are generated but not returned;
            # diagnostics count them so the rate estimates exp(-omega*)
            take = keep[:need]
            x = (z[take] + beta2 * mz[take, None] * m[None, :]) / denom[take, None]
            out[filled: filled + take.size] = x
            filled += take.size
    else:
        raise NumericalError("pkb rejection sampler exceeded its round budget")

    out /= np.linalg.norm(out, axis=1)[:, None]
    return out, SamplerDiagnostics(proposals, accepted)


def sample(params: SphericalParams, n: int, rng):
    """Family-dispatched sampling; returns the sample only."""
    if params.family == "sc":
        return sample_sc(params, n, rng)
    return sample_pkb(params, n, rng)[0]
