"""Timing comparison between the compiled and pure-Python kernel backends.

Both backends are imported directly (bypassing the import-time selection)
so one process can measure them side by side.  Only wall-clock medians
are reported; correctness parity is covered by the test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import mle, sampling, sphere
from ._kernels import BACKEND, _fallback

try:
    from ._kernels import _core
except ImportError:
    _core = None

__all__ = ["BenchRow", "available_backends", "run_bench", "render"]


@dataclass(frozen=True)
class BenchRow:
    n: int
    d: int
    operation: str
    backend: str
    seconds: float


def available_backends():
    out = {"python": _fallback}
    if _core is not None:
        out["cython"] = _core
    return out


def _median_time(fn, runs: int) -> float:
    fn()
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_bench(ns=(1_000, 10_000, 100_000), ds=(2, 9, 19), runs=7, seed=0):
    """Time the hot kernel (location_stats) per backend on each shape."""
    rows = []
    backends = available_backends()
    gen = np.random.default_rng(seed)
    for n in ns:
        for d in ds:
            m = np.zeros(d + 1)
            m[0] = 1.0
            params = sphere.SphericalParams.from_m_rho("sc", m, 0.6)
            Y = sampling.sample_sc(params, n, gen)
            mu = params.mu
            for name, mod in backends.items():
                t = _median_time(lambda: mod.location_stats(Y, None, mu), runs)
                rows.append(BenchRow(n, d, "location_stats", name, t))
            # one end-to-end fit per backend-independent baseline
            t = _median_time(lambda: mle.fit_nr(Y, "sc"), runs)
            rows.append(BenchRow(n, d, f"fit_nr[{BACKEND}]", BACKEND, t))
    return tuple(rows)


def render(rows) -> str:
    lines = [f"active backend: {BACKEND}"]
    lines.append(f"{'n':>8} {'d':>4}  {'operation':<18} {'backend':<8} {'seconds':>12}")
    for r in rows:
        lines.append(f"{r.n:>8} {r.d:>4}  {r.operation:<18} {r.backend:<8} {r.seconds:>12.6f}")
    # speedup summary where both backends ran
    pairs = {}
    for r in rows:
        if r.operation == "location_stats":
            pairs.setdefault((r.n, r.d), {})[r.backend] = r.seconds
    for (n, d), times in pairs.items():
        if "python" in times and "cython" in times:
            lines.append(
                f"speedup n={n} d={d}: python/cython = {times['python'] / times['cython']:.2f}"
            )
    return "\n".join(lines)
