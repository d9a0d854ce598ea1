"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import (
    bench,
    classify,
    dataio,
    experiments,
    lrt,
    mixtures,
    mle,
    regression,
    sampling,
    sphere,
)
from ._errors import NumericalError
from .rng import RngStream

__all__ = ["main", "cli_dispatch"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract here is 1
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_family(p, required=True):
    p.add_argument("--family", choices=sphere.FAMILIES, required=required,
                   help="distribution family")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")


def _load_sample(path, project):
    data = dataio.load_directional_csv(path, project_to_sphere=project)
    return data.Y


def _print_params(params, indent=""):
    m = ", ".join(f"{v: .6f}" for v in params.m)
    print(f"{indent}m    = ({m})")
    print(f"{indent}rho  = {params.rho:.6f}")
    print(f"{indent}gamma= {params.gamma:.6f}")


def _cmd_simulate(args):
    if args.m is not None:
        m = np.array([float(v) for v in args.m.split(",")])
        if args.rho is None:
            raise _UsageError("simulate: --rho is required with --m")
        params = sphere.SphericalParams.from_m_rho(args.family, m / np.linalg.norm(m), args.rho)
    elif args.mu is not None:
        mu = np.array([float(v) for v in args.mu.split(",")])
        params = sphere.SphericalParams(args.family, mu)
    else:
        raise _UsageError("simulate: give either --m with --rho, or --mu")
    Y = sampling.sample(params, args.n, RngStream(args.seed))
    header = [f"x{i + 1}" for i in range(Y.shape[1])]
    dataio.write_csv(args.output, header, [[dataio.format_float(v) for v in row] for row in Y])
    print(f"wrote {Y.shape[0]} draws on S^{Y.shape[1] - 1} to {args.output}")
    return 0


def _cmd_fit(args):
    Y = _load_sample(args.input, args.project)
    fit = mle.fit(Y, args.family, algorithm=args.algorithm)
    print(f"family     = {args.family}")
    print(f"n          = {Y.shape[0]}, d = {Y.shape[1] - 1}")
    _print_params(fit.params)
    print(f"loglik     = {fit.loglik:.6f}")
    print(f"iterations = {fit.iterations}")
    print(f"converged  = {fit.converged}")
    print(f"algorithm  = {fit.algorithm}")
    return 0


def _cmd_lrt(args):
    Y1 = _load_sample(args.sample1, args.project)
    Y2 = _load_sample(args.sample2, args.project)
    rng = RngStream(args.seed) if args.bootstrap else None
    res = lrt.lrt_two_sample(Y1, Y2, args.family, n_boot=args.bootstrap, rng=rng)
    print(f"family        = {args.family}")
    print(f"statistic     = {res.statistic:.6f}")
    print(f"df            = {res.df}")
    print(f"p_asymptotic  = {res.p_asymptotic:.6f}")
    if res.p_bootstrap is not None:
        print(f"p_bootstrap   = {res.p_bootstrap:.6f}  "
              f"({res.bootstrap_replicates} replicates, {res.bootstrap_dropped} dropped)")
        if res.bootstrap_unreliable:
            print("warning: more than 5% of bootstrap replicates were dropped")
    return 0


def _cmd_regress(args):
    Y = _load_sample(args.response, args.project)
    X, xnames = dataio.load_matrix_csv(args.design)
    model = regression.fit_regression(Y, X, args.family)
    print(f"family     = {args.family}")
    print(f"n          = {model.n}, predictors p = {X.shape[1]}, response dim q = {Y.shape[1]}")
    print(f"loglik     = {model.loglik:.6f}")
    print(f"iterations = {model.iterations}, converged = {model.converged}, "
          f"algorithm = {model.algorithm}")
    for w in model.warnings:
        print(f"warning: {w}")
    print("coefficients (rows = predictors, columns = response coordinates):")
    for i, name in enumerate(xnames):
        coefs = "  ".join(f"{v: .5f}" for v in model.B[i])
        ses = "  ".join(f"{v:.5f}" for v in model.se[i])
        print(f"  {name:<12} {coefs}")
        print(f"  {'(se)':<12} {ses}")
    if args.output:
        header = ["predictor"] + [f"b{j + 1}" for j in range(Y.shape[1])] \
            + [f"se{j + 1}" for j in range(Y.shape[1])]
        rows = [
            [xnames[i]] + [dataio.format_float(v) for v in model.B[i]]
            + [dataio.format_float(v) for v in model.se[i]]
            for i in range(X.shape[1])
        ]
        dataio.write_csv(args.output, header, rows)
        print(f"wrote coefficient table to {args.output}")
    return 0


def _cmd_classify(args):
    data = dataio.load_directional_csv(
        args.input, project_to_sphere=args.project, label_column=args.label_column
    )
    if data.labels is None:
        raise _UsageError("classify: --label-column is required")
    if args.predict:
        clf = classify.train(data.Y, data.labels, args.family)
        new = _load_sample(args.predict, args.project)
        pred = classify.predict_labels(clf, new)
        if args.output:
            dataio.write_csv(args.output, ["prediction"], [[int(v)] for v in pred])
            print(f"wrote {pred.size} predictions to {args.output}")
        else:
            for v in pred:
                print(int(v))
        return 0
    cv = classify.cross_validate(
        data.Y, data.labels, args.family,
        folds=args.folds, repeats=args.repeats, rng=RngStream(args.seed),
    )
    print(f"family          = {args.family}")
    print(f"groups          = {data.n_groups}, n = {data.n}")
    print(f"folds x repeats = {cv.folds} x {cv.repeats}")
    print(f"mean accuracy   = {cv.mean_accuracy:.4f}")
    print(f"median accuracy = {cv.median_accuracy:.4f}")
    if cv.skipped_folds:
        print(f"warning: {cv.skipped_folds} fold(s) skipped (untrainable group)")
    return 0


def _cmd_cluster(args):
    data = dataio.load_directional_csv(
        args.input, project_to_sphere=args.project, label_column=args.label_column
    )
    sel = mixtures.select_k(
        data.Y, args.family, args.kmax,
        rng=RngStream(args.seed), n_starts=args.starts,
    )
    print(f"family = {args.family}, n = {data.n}, K = 1..{args.kmax}")
    has_truth = data.labels is not None
    head = f"{'K':>3} {'loglik':>14} {'nu':>5} {'BIC':>14} {'ICL':>14}"
    if has_truth:
        head += f" {'ARI':>8}"
    print(head)
    for row in sel.rows:
        line = (f"{row['K']:>3} {row['loglik']:>14.3f} {row['nu']:>5} "
                f"{row['bic']:>14.3f} {row['icl']:>14.3f}")
        if has_truth:
            ari = mixtures.adjusted_rand_index(
                mixtures.map_assignments(row["model"]).assignments, data.labels
            )
            line += f" {ari:>8.4f}"
        print(line)
    for K, msg in sel.failures.items():
        print(f"K={K} failed: {msg}")
    crit = args.criterion
    K_star = sel.chosen[crit]
    print(f"chosen K ({crit.upper()}) = {K_star}"
          + (f"; BIC chooses {sel.chosen['bic']}" if crit != "bic" else
             f"; ICL chooses {sel.chosen['icl']}"))
    if args.output:
        result = mixtures.map_assignments(sel.model_for(K_star))
        dataio.write_csv(args.output, ["assignment"], [[int(v)] for v in result.assignments])
        print(f"wrote MAP assignments (K={K_star}) to {args.output}")
    return 0


def _cmd_experiment(args):
    config = experiments.parse_config(args.config) if args.config else {}
    spec = experiments.spec_from_config(
        config,
        preset=args.preset,
        replicates=args.replicates,
        seed=args.seed if args.seed_given else None,
        workers=args.workers,
        theta=args.theta,
        d=args.d,
        n=args.n,
        K=args.K,
        sizes=args.sizes,
        data_family=args.data_family,
        model_family=args.model_family,
    )
    table = experiments.run_experiment(spec)
    print(table.render())
    if args.output:
        table.to_csv(args.output)
        print(f"wrote report to {args.output}")
    return 0


def _cmd_bench(args):
    ns = tuple(int(v) for v in args.n.split(","))
    ds = tuple(int(v) for v in args.d.split(","))
    rows = bench.run_bench(ns=ns, ds=ds, runs=args.runs, seed=args.seed)
    print(bench.render(rows))
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="scpkb", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", help="draw a sample and write it as CSV")
    _add_family(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", help="comma-separated mean direction (with --rho)")
    p.add_argument("--rho", type=float)
    p.add_argument("--mu", help="comma-separated unconstrained location")
    _add_seed(p)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood location fit")
    _add_family(p)
    p.add_argument("--input", required=True)
    p.add_argument("--algorithm", choices=("nr", "hybrid"), default="nr")
    p.add_argument("--project", action="store_true", help="project rows onto the sphere")
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("lrt", help="two-sample location test")
    _add_family(p)
    p.add_argument("--sample1", required=True)
    p.add_argument("--sample2", required=True)
    p.add_argument("--bootstrap", type=int, default=None, metavar="B")
    p.add_argument("--project", action="store_true")
    _add_seed(p)
    p.set_defaults(fn=_cmd_lrt)

    p = sub.add_parser("regress", help="spherical response regression")
    _add_family(p)
    p.add_argument("--response", required=True, help="CSV of unit response rows")
    p.add_argument("--design", required=True, help="CSV design matrix (include a 1s column)")
    p.add_argument("--project", action="store_true")
    p.add_argument("--output")
    p.set_defaults(fn=_cmd_regress)

    p = sub.add_parser("classify", help="ML discriminant analysis")
    _add_family(p)
    p.add_argument("--input", required=True)
    p.add_argument("--label-column", required=True)
    p.add_argument("--project", action="store_true")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--predict", help="CSV of new points to allocate")
    p.add_argument("--output")
    _add_seed(p)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("cluster", help="mixture model selection and MAP clustering")
    _add_family(p)
    p.add_argument("--input", required=True)
    p.add_argument("--label-column", help="optional ground truth for ARI")
    p.add_argument("--project", action="store_true")
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--criterion", choices=("bic", "icl"), default="bic")
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--output", help="CSV for MAP assignments")
    _add_seed(p)
    p.set_defaults(fn=_cmd_cluster)

    p = sub.add_parser("experiment", help="run a simulation preset")
    p.add_argument("--preset", choices=experiments.PRESETS)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--theta")
    p.add_argument("--d")
    p.add_argument("--n")
    p.add_argument("--K")
    p.add_argument("--sizes", help="comma list of n1:n2 pairs")
    p.add_argument("--data-family", dest="data_family")
    p.add_argument("--model-family", dest="model_family")
    p.add_argument("--output")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--n", default="1000,10000,100000")
    p.add_argument("--d", default="2,9,19")
    p.add_argument("--runs", type=int, default=7)
    _add_seed(p)
    p.set_defaults(fn=_cmd_bench)

    return parser


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_help()
            return 1
        if args.fn is _cmd_experiment:
            args.seed_given = ("--seed" in argv) or any(
                a.startswith("--seed=") for a in argv
            )
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
