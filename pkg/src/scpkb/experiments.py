"""Deterministic simulation presets and report emission.

Each preset reproduces one of the reference simulation designs on a
configurable grid.  Every (cell, replicate) pair owns a private RNG
stream derived from the base seed, so results are bit-for-bit identical
regardless of worker count or execution order.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classify, lrt, mixtures, mle, regression, sampling, sphere
from ._errors import NumericalError
from ._kernels import BACKEND
from .rng import RngStream

__all__ = [
    "ExperimentSpec",
    "PRESETS",
    "ReportRow",
    "ReportTable",
    "parse_config",
    "run_experiment",
    "spec_from_config",
]

PRESETS = ("mle-speed", "type1-power", "regression-fit", "discrim", "mixture-recovery")

_DEFAULT_REPLICATES = {
    "mle-speed": 1,
    "type1-power": 1000,
    "regression-fit": 1000,
    "discrim": 1000,
    "mixture-recovery": 200,
}

_ALPHA = 0.05
_RHO_PAIR = (0.3, 0.8)   # two-sample concentrations in the testing design
_RHO_DISCRIM = 0.5
_RHO_SPEED = 0.5
_TIMING_RUNS = 7
_MIX_STARTS = 3          # EM restarts per K inside the harness


@dataclass(frozen=True)
class ExperimentSpec:
    preset: str
    replicates: int | None = None
    base_seed: int = 0
    workers: int | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")

    @property
    def n_replicates(self) -> int:
        if self.replicates is not None:
            return int(self.replicates)
        return _DEFAULT_REPLICATES[self.preset]

    @property
    def n_workers(self) -> int:
        if self.preset == "mle-speed":
            return 1  # timing must not share the machine with siblings
        if self.workers is not None:
            return max(1, int(self.workers))
        return max(1, int(os.environ.get("SCPKB_THREADS", "1")))


@dataclass(frozen=True)
class ReportRow:
    cell: str
    statistic: str
    value: float
    mc_stderr: float


@dataclass(frozen=True)
class ReportTable:
    preset: str
    rows: tuple[ReportRow, ...]
    metadata: dict

    def render(self) -> str:
        lines = [f"preset: {self.preset}"]
        for k in sorted(self.metadata):
            lines.append(f"# {k} = {self.metadata[k]}")
        cw = max([len(r.cell) for r in self.rows] + [4])
        sw = max([len(r.statistic) for r in self.rows] + [9])
        lines.append(f"{'cell':<{cw}}  {'statistic':<{sw}}  {'value':>12}  {'mc_stderr':>10}")
        for r in self.rows:
            se = "" if np.isnan(r.mc_stderr) else f"{r.mc_stderr:.4f}"
            lines.append(f"{r.cell:<{cw}}  {r.statistic:<{sw}}  {r.value:>12.6g}  {se:>10}")
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        from .dataio import format_float, write_csv
        write_csv(
            path,
            ["cell", "statistic", "value", "mc_stderr"],
            [
                [r.cell, r.statistic, format_float(r.value),
                 "" if np.isnan(r.mc_stderr) else format_float(r.mc_stderr)]
                for r in self.rows
            ],
        )

    def value(self, cell: str, statistic: str) -> float:
        for r in self.rows:
            if r.cell == cell and r.statistic == statistic:
                return r.value
        raise KeyError(f"no row ({cell!r}, {statistic!r})")


# ---------------------------------------------------------------------------
# grids

def _ov(overrides, key, default):
    v = overrides.get(key)
    return default if v is None else tuple(v)


def _grid(preset: str, overrides: dict) -> list[tuple]:
    """Fixed-order cell list; each cell is a flat tuple keyed per preset."""
    fams = _ov(overrides, "data_family", ("sc", "pkb"))
    if preset == "type1-power":
        sizes = _ov(overrides, "sizes", ((50, 30), (70, 50), (100, 70)))
        thetas = _ov(overrides, "theta", (0, 15, 30))
        cells = []
        for theta in thetas:
            default_d = (2, 4, 6, 9) if theta == 0 else (3, 5, 7, 10)
            for fam in fams:
                for (n1, n2) in sizes:
                    for d in _ov(overrides, "d", default_d):
                        cells.append((int(theta), int(n1), int(n2), int(d), fam))
        return cells
    if preset == "regression-fit":
        return [
            (int(n), int(d), fam)
            for fam in fams
            for n in _ov(overrides, "n", (50, 100, 200))
            for d in _ov(overrides, "d", (2, 4, 6, 9))
        ]
    if preset == "discrim":
        return [
            (int(theta), int(n), int(d), fam)
            for theta in _ov(overrides, "theta", (15, 30))
            for fam in fams
            for n in _ov(overrides, "n", (50, 100, 200))
            for d in _ov(overrides, "d", (2, 4, 6, 9))
        ]
    if preset == "mixture-recovery":
        return [
            (int(K), int(d), int(n), fam)
            for n in _ov(overrides, "n", (500, 1000))
            for fam in fams
            for K in _ov(overrides, "K", (2, 3, 4, 5))
            for d in _ov(overrides, "d", (2, 4, 6, 9))
        ]
    # mle-speed
    return [
        (int(n), int(d), fam)
        for fam in fams
        for n in _ov(overrides, "n", (100, 500, 1000, 2000, 5000, 10000, 20000))
        for d in _ov(overrides, "d", (2, 4, 6, 9, 19))
    ]


def _cell_label(preset: str, cell: tuple) -> str:
    if preset == "type1-power":
        theta, n1, n2, d, fam = cell
        return f"theta={theta} n1={n1} n2={n2} d={d} data={fam}"
    if preset == "regression-fit":
        n, d, fam = cell
        return f"n={n} d={d} data={fam}"
    if preset == "discrim":
        theta, n, d, fam = cell
        return f"theta={theta} n={n} d={d} data={fam}"
    if preset == "mixture-recovery":
        K, d, n, fam = cell
        return f"K={K} d={d} n={n} data={fam}"
    n, d, fam = cell
    return f"n={n} d={d} data={fam}"


def _stream(base_seed: int, preset: str, cell: tuple, rep: int) -> RngStream:
    return RngStream(base_seed).child(preset, *cell, "rep", rep)


# ---------------------------------------------------------------------------
# per-replicate workers (top level so they pickle into process pools)

def _two_locations(d: int, theta_deg: float):
    m1 = np.zeros(d + 1)
    m1[0] = 1.0
    th = np.radians(theta_deg)
    m2 = np.zeros(d + 1)
    m2[0] = np.cos(th)
    m2[1] = np.sin(th)
    return m1, m2


def _rep_type1_power(cell, stream) -> dict:
    theta, n1, n2, d, fam = cell
    gen = stream.generator()
    m1, m2 = _two_locations(d, theta)
    rho1, rho2 = _RHO_PAIR
    Y1 = sampling.sample(sphere.SphericalParams.from_m_rho(fam, m1, rho1), n1, gen)
    Y2 = sampling.sample(sphere.SphericalParams.from_m_rho(fam, m2, rho2), n2, gen)
    res = lrt.lrt_two_sample(Y1, Y2, "sc")
    return {"reject": 1.0 if res.p_asymptotic < _ALPHA else 0.0}


def _regression_responses(mu: np.ndarray, fam: str, gen) -> np.ndarray:
    norms = np.linalg.norm(mu, axis=1)
    if np.any(norms < 1e-12):
        raise NumericalError("zero-norm linear predictor row")
    M = mu / norms[:, None]
    rhos = sphere.gamma_to_rho(norms)
    n, q = mu.shape
    if fam == "sc":
        U = sphere.sample_uniform_sphere(q - 1, n, gen)
        shifted = U + rhos[:, None] * M
        y = (1.0 - rhos**2)[:, None] * shifted / np.sum(shifted**2, axis=1)[:, None]
        y += rhos[:, None] * M
        return y / np.linalg.norm(y, axis=1)[:, None]
    out = np.empty_like(mu)
    for i in range(n):
        params = sphere.SphericalParams.from_m_rho("pkb", M[i], float(rhos[i]))
        out[i] = sampling.sample_pkb(params, 1, gen)[0][0]
    return out


def _rep_regression(cell, stream, model_fams) -> dict:
    n, d, fam = cell
    gen = stream.generator()
    x = gen.normal(size=n)
    X = np.column_stack([np.ones(n), x])
    B = gen.normal(size=(2, d + 1))
    Y = _regression_responses(X @ B, fam, gen)
    out = {}
    for model_fam in model_fams:
        model = regression.fit_regression(Y, X, model_fam)
        pred = regression.predict(model, X)
        out[f"fit[{model_fam}]"] = regression.fit_metric(Y, pred.m)
    return out


def _rep_discrim(cell, stream, model_fams) -> dict:
    theta, n, d, fam = cell
    gen = stream.generator()
    m1, m2 = _two_locations(d, theta)
    Y1 = sampling.sample(sphere.SphericalParams.from_m_rho(fam, m1, _RHO_DISCRIM), n, gen)
    Y2 = sampling.sample(sphere.SphericalParams.from_m_rho(fam, m2, _RHO_DISCRIM), n, gen)
    Y = np.vstack([Y1, Y2])
    labels = np.r_[np.ones(n, dtype=int), 2 * np.ones(n, dtype=int)]
    out = {}
    for model_fam in model_fams:
        # identical folds for both models: same child stream reseeds the CV
        cv = classify.cross_validate(
            Y, labels, model_fam, folds=10, repeats=1, rng=stream.child("folds"),
        )
        out[f"accuracy[{model_fam}]"] = cv.mean_accuracy
    return out


def _rep_mixture(cell, stream, model_fams) -> dict:
    K, d, n, fam = cell
    gen = stream.generator()
    p = gen.dirichlet(np.full(K, 5.0))
    ms = sphere.sample_uniform_sphere(d, K, gen)
    rhos = gen.uniform(0.7, 0.9, size=K)
    z = gen.choice(K, size=n, p=p)
    Y = np.empty((n, d + 1))
    for j in range(K):
        idx = np.flatnonzero(z == j)
        if idx.size:
            params = sphere.SphericalParams.from_m_rho(fam, ms[j], float(rhos[j]))
            Y[idx] = sampling.sample(params, idx.size, gen)
    out = {}
    kmax = K + 3
    for model_fam in model_fams:
        sel = mixtures.select_k(
            Y, model_fam, kmax,
            criteria=("bic",), rng=stream.child("em", model_fam),
            n_starts=_MIX_STARTS,
        )
        khat = sel.chosen["bic"]
        out[f"abs_err[{model_fam}]"] = float(abs(khat - K))
        out[f"boundary_hit[{model_fam}]"] = 1.0 if khat == kmax else 0.0
        try:
            model = sel.model_for(K)
            ari = mixtures.adjusted_rand_index(
                mixtures.map_assignments(model).assignments, z + 1
            )
        except KeyError:
            ari = np.nan
        out[f"ari[{model_fam}]"] = float(ari)
    return out


_REPLICATE_FN = {
    "type1-power": lambda cell, stream, model_fams: _rep_type1_power(cell, stream),
    "regression-fit": _rep_regression,
    "discrim": _rep_discrim,
    "mixture-recovery": _rep_mixture,
}


def _run_task(args):
    preset, cell, base_seed, rep, model_fams = args
    stream = _stream(base_seed, preset, cell, rep)
    try:
        return cell, rep, _REPLICATE_FN[preset](cell, stream, model_fams), None
    except NumericalError as exc:
        return cell, rep, None, f"rep {rep}: {exc}"


# ---------------------------------------------------------------------------
# timing preset (sequential by construction)

def _median_time(fn, runs=_TIMING_RUNS):
    fn()  # warm call: JIT-free but primes caches and allocator
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _cell_mle_speed(cell, stream) -> dict:
    n, d, fam = cell
    gen = stream.generator()
    m = np.zeros(d + 1)
    m[0] = 1.0
    Y = sampling.sample(sphere.SphericalParams.from_m_rho(fam, m, _RHO_SPEED), n, gen)
    t_nr = _median_time(lambda: mle.fit_nr(Y, fam))
    t_hyb = _median_time(lambda: mle.fit_hybrid(Y, fam))
    t_sc = t_nr if fam == "sc" else _median_time(lambda: mle.fit_nr(Y, "sc"))
    t_pkb = t_nr if fam == "pkb" else _median_time(lambda: mle.fit_nr(Y, "pkb"))
    return {
        "hybrid_over_nr_time": t_hyb / t_nr,
        "pkb_over_sc_time": t_pkb / t_sc,
    }


# ---------------------------------------------------------------------------
# driver

def run_experiment(spec: ExperimentSpec) -> ReportTable:
    t_start = time.perf_counter()
    cells = _grid(spec.preset, spec.overrides)
    rows: list[ReportRow] = []
    if spec.preset == "mle-speed":
        for cell in cells:
            stats = _cell_mle_speed(cell, _stream(spec.base_seed, spec.preset, cell, 0))
            label = _cell_label(spec.preset, cell)
            for name in sorted(stats):
                rows.append(ReportRow(label, name, float(stats[name]), float("nan")))
        return _finish(spec, rows, t_start, len(cells))

    R = spec.n_replicates
    model_fams = tuple(spec.overrides.get("model_family") or ("sc", "pkb"))
    tasks = [
        (spec.preset, cell, spec.base_seed, rep, model_fams)
        for cell in cells for rep in range(R)
    ]
    results: dict[tuple, dict] = {}
    failures: dict[tuple, list] = {c: [] for c in cells}
    if spec.n_workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (spec.n_workers * 8))
        with ProcessPoolExecutor(max_workers=spec.n_workers) as pool:
            for cell, rep, stats, err in pool.map(_run_task, tasks, chunksize=chunk):
                if err is None:
                    results[(cell, rep)] = stats
                else:
                    failures[cell].append(err)
    else:
        for task in tasks:
            cell, rep, stats, err = _run_task(task)
            if err is None:
                results[(cell, rep)] = stats
            else:
                failures[cell].append(err)

    for cell in cells:
        label = _cell_label(spec.preset, cell)
        reps = [results[(cell, r)] for r in range(R) if (cell, r) in results]
        stat_names = sorted({k for s in reps for k in s})
        for name in stat_names:
            vals = np.array([s[name] for s in reps if np.isfinite(s.get(name, np.nan))])
            if vals.size == 0:
                rows.append(ReportRow(label, name, float("nan"), float("nan")))
                continue
            se = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
            rows.append(ReportRow(label, name, float(np.mean(vals)), se))
        if failures[cell]:
            rows.append(ReportRow(label, "failures", float(len(failures[cell])), float("nan")))
    return _finish(spec, rows, t_start, len(cells))


def _finish(spec, rows, t_start, n_cells) -> ReportTable:
    meta = {
        "base_seed": spec.base_seed,
        "replicates": spec.n_replicates,
        "cells": n_cells,
        "workers": spec.n_workers,
        "kernel_backend": BACKEND,
        "numpy": np.__version__,
        "wall_time_s": round(time.perf_counter() - t_start, 3),
    }
    return ReportTable(preset=spec.preset, rows=tuple(rows), metadata=meta)


# ---------------------------------------------------------------------------
# config files: plain key=value lines, '#' comments

def parse_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {line_no}: expected key=value, got {raw!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _parse_sizes(text: str):
    pairs = []
    for part in text.split(","):
        a, _, b = part.partition(":")
        pairs.append((int(a), int(b)))
    return tuple(pairs)


_CONFIG_KEYS = (
    "preset", "replicates", "seed", "workers",
    "theta", "d", "n", "K", "sizes", "data_family", "model_family",
)


def spec_from_config(config: dict, **cli_overrides) -> ExperimentSpec:
    """Merge a key=value config with CLI-level overrides (CLI wins).

    Unknown keys are rejected rather than ignored: a silently dropped
    typo (base_seed, famly, ...) would change what a run reproduces.
    """
    merged = dict(config)
    for k, v in cli_overrides.items():
        if v is not None:
            merged[k] = v
    unknown = sorted(set(merged) - set(_CONFIG_KEYS))
    if unknown:
        raise ValueError(
            f"unknown config key(s) {', '.join(map(repr, unknown))}; "
            f"valid keys: {', '.join(_CONFIG_KEYS)}"
        )
    if "preset" not in merged:
        raise ValueError("experiment needs a preset (config key or --preset)")
    overrides = {}
    for key in ("theta", "d", "n", "K"):
        if key in merged:
            val = merged[key]
            overrides[key] = tuple(
                int(x) for x in (val.split(",") if isinstance(val, str) else val)
            )
    if "sizes" in merged:
        v = merged["sizes"]
        overrides["sizes"] = _parse_sizes(v) if isinstance(v, str) else tuple(v)
    for key in ("data_family", "model_family"):
        if key in merged:
            v = merged[key]
            fams = tuple(v.split(",")) if isinstance(v, str) else tuple(v)
            for f in fams:
                if f not in sphere.FAMILIES:
                    raise ValueError(f"unknown family {f!r} in {key}")
            overrides[key] = fams
    return ExperimentSpec(
        preset=str(merged["preset"]),
        replicates=None if merged.get("replicates") is None else int(merged["replicates"]),
        base_seed=int(merged.get("seed", 0)),
        workers=None if merged.get("workers") is None else int(merged["workers"]),
        overrides=overrides,
    )
