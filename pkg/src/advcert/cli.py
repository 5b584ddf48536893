"""Command-line surface: dataset generation, training, certification,
attacks, verification suites, and the SDP incomparability demo."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import core, verify
from .core import (
    BinaryLabels,
    ClassLabels,
    Dataset,
    LossSpec,
    PerturbationBall,
    RealLabels,
    load_dataset,
    save_dataset,
)
from .linear import (
    BoundReport,
    LinearModel,
    MulticlassLinearModel,
    certify_linear,
    certify_linear_regression,
    certify_multiclass_linear,
    convex_objective,
    regularized_objective,
    train_convex,
    train_regularized_grid,
)
from .network import Architecture, NeuralNet, certify_multiclass_nn, certify_nn, \
    certify_nn_regression, train_tree

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROPERTY = 2

_LOSS_NAMES = {
    "hinge": core.HINGE,
    "hinge_truncated": core.HINGE_TRUNCATED,
    "zero_one": core.ZERO_ONE,
    "hinge_indicator": core.HINGE_INDICATOR,
    "xe": core.CROSS_ENTROPY,
    "margin": core.MARGIN,
    "regression": core.REGRESSION_POWER,
}


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    kind = d.get("kind")
    if kind == "linear":
        return LinearModel.from_dict(d)
    if kind == "multiclass_linear":
        return MulticlassLinearModel.from_dict(d)
    if kind == "nn":
        return NeuralNet.from_dict(d)
    raise _CliError(f"unknown model kind {kind!r}")


def _parse_p(text: str) -> float:
    if text == "inf":
        return math.inf
    if text in ("1", "2"):
        return float(text)
    raise _CliError(f"--p must be 1, 2, or inf, got {text!r}")


def _make_loss(args) -> LossSpec:
    variant = _LOSS_NAMES.get(args.loss)
    if variant is None:
        raise _CliError(f"unknown loss {args.loss!r}")
    return LossSpec(variant, rho=args.rho, r=args.r, B=args.B)


def _build_parser() -> _Parser:
    parser = _Parser(prog="advcert",
                     description="Adversarial-risk certificates for linear and "
                                 "feed-forward predictors.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_ball(p):
        p.add_argument("--p", default="inf", help="norm exponent: 1, 2, or inf")
        p.add_argument("--epsilon", type=float, default=0.1, help="ball radius")

    def add_loss(p):
        p.add_argument("--loss", default="hinge", choices=sorted(_LOSS_NAMES))
        p.add_argument("--rho", type=float, default=1.0, help="margin width")
        p.add_argument("--r", type=float, default=2.0, help="regression power")
        p.add_argument("--B", type=float, default=1.0, help="regression truncation")

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    p.add_argument("--kind", default="gaussians", choices=("gaussians", "regression-line"))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--K", type=int, default=2, help="number of classes (gaussians)")
    p.add_argument("--gap", type=float, default=4.0, help="class mean separation")
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a predictor by bound minimization")
    p.add_argument("--alg", required=True, choices=("convex", "reg-grid", "tree"))
    p.add_argument("--data", required=True)
    add_ball(p)
    add_loss(p)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=None,
                   help="max grid points for reg-grid (default: full sweep)")
    p.add_argument("--widths", default=None,
                   help="comma-separated layer widths for tree, e.g. 2,8,1")
    p.add_argument("--act", default="relu", choices=("relu", "tanh"))
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--log", default=None, help="training-curve CSV path (tree)")

    p = sub.add_parser("certify", help="compute an adversarial-risk certificate")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    add_ball(p)
    add_loss(p)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--form", default=None,
                   help="eq1|eq2 for binary linear, generic|xe for binary nets")
    p.add_argument("--out", default=None, help="CSV report path")

    p = sub.add_parser("attack", help="projected-gradient attack on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    add_ball(p)
    add_loss(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="per-sample CSV path")

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", default="all", choices=("all", "linear", "tree", "sdp"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--out", default=None, help="CSV report path")

    p = sub.add_parser("demo", help="SDP-relaxation vs tree-transform loss demo")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=10.0)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--mode", default="max-over-k", choices=("max-over-k", "class-k"))
    p.add_argument("--k", type=int, default=2, help="0-based class for class-k mode")
    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.n < 1 or args.m < 1:
        raise _CliError("--n and --m must be at least 1")
    rng = np.random.default_rng(args.seed)
    if args.kind == "gaussians":
        if args.K < 2:
            raise _CliError("--K must be at least 2")
        classes = rng.integers(0, args.K, size=args.n)
        means = np.zeros((args.K, args.m))
        for k in range(args.K):
            means[k, k % args.m] = args.gap * (1 + k // args.m)
            if args.K == 2 and args.m >= 1:
                means[k, 0] = (args.gap / 2.0) * (1 if k == 0 else -1)
        X = means[classes] + args.noise * rng.standard_normal((args.n, args.m))
        if args.K == 2:
            labels = BinaryLabels(np.where(classes == 0, 1, -1))
        else:
            labels = ClassLabels(classes, num_classes=args.K)
    else:
        X = rng.standard_normal((args.n, args.m))
        w = np.ones(args.m) / math.sqrt(args.m)
        y = X @ w + args.noise * rng.standard_normal(args.n)
        labels = RealLabels(y)
    save_dataset(Dataset(X, labels), args.out)
    print(f"wrote {args.n}x{args.m} {args.kind} dataset to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    ball = PerturbationBall(p=_parse_p(args.p), epsilon=args.epsilon)
    if args.alg == "convex":
        model = train_convex(dataset, ball, iters=args.iters, step=args.step,
                             seed=args.seed)
        objective = convex_objective(model, dataset, ball)
    elif args.alg == "reg-grid":
        model = train_regularized_grid(dataset, ball, iters=args.iters,
                                       step=args.step, seed=args.seed, grid=args.grid)
        objective = regularized_objective(model, dataset, ball)
    else:
        if args.widths is None:
            raise _CliError("--alg tree requires --widths")
        widths = tuple(int(w) for w in args.widths.split(","))
        arch = Architecture(widths=widths, activations=(args.act,) * (len(widths) - 2))
        loss = _make_loss(args)
        result = train_tree(dataset, ball, arch, loss, iters=args.iters,
                            step=args.step, seed=args.seed)
        model, objective = result.model, result.best_objective
        if args.log:
            with open(args.log, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["iter", "objective", "grad_norm"])
                for it, obj, gn in result.log:
                    writer.writerow([it, repr(obj), repr(gn)])
    save_model(model, args.out)
    print(f"trained {args.alg} model, objective {objective:.6g}, saved to {args.out}")
    return EXIT_OK


def _dispatch_certificate(model, dataset, ball, args) -> BoundReport:
    labels = dataset.labels
    if isinstance(model, LinearModel):
        if isinstance(labels, BinaryLabels):
            form = args.form or "eq1"
            return certify_linear(model, dataset, ball, _make_loss(args),
                                  delta=args.delta, form=form)
        if isinstance(labels, RealLabels):
            return certify_linear_regression(model, dataset, ball, r=args.r, B=args.B,
                                             delta=args.delta)
        raise _CliError("a scalar linear model needs binary or real labels")
    if isinstance(model, MulticlassLinearModel):
        if not isinstance(labels, ClassLabels):
            raise _CliError("a multiclass model needs class labels")
        return certify_multiclass_linear(model, dataset, ball, rho=args.rho,
                                         delta=args.delta)
    if isinstance(model, NeuralNet):
        if isinstance(labels, BinaryLabels):
            form = args.form or "generic"
            loss = _make_loss(args)
            if form == "xe" and loss.variant != core.CROSS_ENTROPY:
                loss = LossSpec(core.CROSS_ENTROPY)
            if form == "generic" and loss.variant == core.HINGE:
                loss = LossSpec(core.HINGE_TRUNCATED)
            return certify_nn(model, dataset, ball, loss, delta=args.delta, form=form)
        if isinstance(labels, ClassLabels):
            return certify_multiclass_nn(model, dataset, ball, rho=args.rho,
                                         delta=args.delta)
        return certify_nn_regression(model, dataset, ball, r=args.r, B=args.B,
                                     delta=args.delta)
    raise _CliError(f"unsupported model type {type(model)!r}")


def _print_report(report: BoundReport) -> None:
    print(f"loss            {report.loss}")
    print(f"n               {report.n}")
    print(f"epsilon         {report.epsilon}")
    print(f"delta           {report.delta}")
    print(f"empirical_term  {report.empirical_term:.10g}")
    print(f"perturbation    {report.perturbation_term:.10g}")
    print(f"complexity      {report.complexity_term:.10g}")
    print(f"confidence      {report.confidence_term:.10g}")
    print(f"total           {report.total:.10g}")


def _write_report_csv(report: BoundReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["loss", "n", "epsilon", "delta", "empirical_term",
                         "perturbation_term", "complexity_term", "confidence_term",
                         "total"])
        writer.writerow([report.loss, report.n, repr(report.epsilon),
                         repr(report.delta), repr(report.empirical_term),
                         repr(report.perturbation_term), repr(report.complexity_term),
                         repr(report.confidence_term), repr(report.total)])


def cmd_certify(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    ball = PerturbationBall(p=_parse_p(args.p), epsilon=args.epsilon)
    report = _dispatch_certificate(model, dataset, ball, args)
    _print_report(report)
    if args.out:
        _write_report_csv(report, args.out)
    return EXIT_OK


def cmd_attack(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    ball = PerturbationBall(p=_parse_p(args.p), epsilon=args.epsilon)
    loss = _make_loss(args)
    labels = dataset.labels
    if isinstance(labels, BinaryLabels):
        ys = labels.values
    elif isinstance(labels, ClassLabels):
        ys = labels.indices
    else:
        raise _CliError("attack supports binary or class labels")
    rows = []
    for i in range(dataset.n):
        rep = verify.pgd_attack(model, ball, dataset.features[i], ys[i], loss,
                                steps=args.steps, restarts=args.restarts,
                                seed=args.seed + i)
        rows.append((i, rep.achieved_loss))
    mean_loss = float(np.mean([v for _, v in rows]))
    worst = max(rows, key=lambda r: r[1])
    print(f"attacked {dataset.n} samples: mean loss {mean_loss:.6g}, "
          f"worst sample {worst[0]} loss {worst[1]:.6g}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample", "achieved_loss"])
            for i, v in rows:
                writer.writerow([i, repr(v)])
    return EXIT_OK


def cmd_verify(args) -> int:
    results = []
    if args.suite in ("all", "linear"):
        results += verify.run_suite_linear(seed=args.seed, instances=args.instances)
    if args.suite in ("all", "tree"):
        results += verify.run_suite_tree(seed=args.seed, instances=args.instances)
    if args.suite in ("all", "sdp"):
        results += verify.run_suite_sdp()
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.check_name}: {r.instances} instances, "
              f"max violation {r.max_violation:.3g}")
    if args.out:
        verify.write_report(results, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


def cmd_demo(args) -> int:
    res = verify.incomparability_demo(a=args.a, b=args.b, c=args.c,
                                      epsilon=args.epsilon, rho=args.rho,
                                      sdp_mode=args.mode, k=args.k)
    print(f"mode               {res.mode}")
    print(f"sdp values         {tuple(round(v, 10) for v in res.sdp_values)}")
    print(f"sdp term           {res.sdp_term:.10g}")
    print(f"margin f           {res.margin_f:.10g}")
    print(f"margin tree        {res.margin_tree:.10g}")
    print(f"relaxation loss    {res.l_hat:.10g}")
    print(f"tree loss          {res.l_rho_tree:.10g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "gen": cmd_gen,
            "train": cmd_train,
            "certify": cmd_certify,
            "attack": cmd_attack,
            "verify": cmd_verify,
            "demo": cmd_demo,
        }[args.command]
        return handler(args)
    except (_CliError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
