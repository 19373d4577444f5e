"""Command-line entry point.

Exit codes: 0 verdict pass (or successful generation), 2 verdict fail,
1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import reports
from .experiments import agreement_rate, equivalence_experiment, falsification_search
from .experiments.falsify import INNER_SAMPLES, METHODS
from .experiments.output import render
from .generators import KINDS, CorpusSpec, TensorDescriptor
from .io import load_tensor, save_tensor
from .spectral import (
    DEFAULT_STEP,
    DEFAULT_TOLERANCE,
    BranchError,
    branch_derivative,
    duality_report,
    osserman_report,
    random_frame,
    sample_unit_sphere,
    spectral_profile,
)
from .tensor_core import jacobi_operator

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("curvlab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CURVLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CURVLAB_THREADS must be an integer, got {env!r}")
    return 1


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _add_input(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("tensor", nargs="?", help="tensor JSON file")
    src.add_argument("--spec", help='generator descriptor as JSON, e.g. \'{"kind": "constant", "n": 3}\'')
    p.add_argument("--project", action="store_true",
                   help="project the loaded components onto curvature tensors instead of rejecting violations")


def _add_common(p, samples_default, seed_default=0):
    p.add_argument("--samples", type=_positive_int, default=samples_default,
                   help="sphere samples K")
    p.add_argument("--seed", type=int, default=seed_default, help="sampling seed")
    p.add_argument("--cluster-tol", type=_nonneg_float, default=None,
                   help="eigenvalue merge threshold; unset means 1e-6 x spectral range")
    p.add_argument("-o", "--out", help="write the machine-readable report here")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="report format")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads; unset means $CURVLAB_THREADS or 1")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="curvlab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a tensor file", formatter_class=fmt)
    g.add_argument("--type", choices=KINDS, default=None, help="tensor family")
    g.add_argument("--n", type=int, help="dimension")
    g.add_argument("--lambda", dest="lam", type=float, default=1.0, help="constant curvature value")
    g.add_argument("--lambda0", type=float, default=1.0, help="coefficient of the unit sphere tensor")
    g.add_argument("--lambdas", type=_floats, default=None,
                   help="comma-separated coefficients of the complex structures")
    g.add_argument("--m", type=int, default=1, help="number of Clifford structures (1-3)")
    g.add_argument("--scale", type=float, default=1.0, help="Frobenius norm of random tensors")
    g.add_argument("--kappa", type=float, default=1.0, help="curvature of the single plane")
    g.add_argument("--epsilon", type=float, default=0.0, help="perturbation size")
    g.add_argument("--base", default="complex", choices=[k for k in KINDS if k != "perturbed"],
                   help="base family of a perturbed tensor")
    g.add_argument("--seed", type=int, default=None, help="generator seed")
    g.add_argument("--corpus", help="corpus JSON; writes one tensor file per entry into --out-dir")
    g.add_argument("--out-dir", help="output directory for --corpus")
    g.add_argument("-o", "--out", help="output tensor file")

    c = sub.add_parser("check", help="run a checker on one tensor")
    csub = c.add_subparsers(dest="check", required=True, parser_class=_Parser)
    o = csub.add_parser("osserman", help="spectrum constancy over the sphere", formatter_class=fmt)
    _add_input(o)
    _add_common(o, 200)
    o.add_argument("--tolerance", type=_nonneg_float, default=DEFAULT_TOLERANCE, help="pass threshold on the spread")

    d = csub.add_parser("duality", help="duality residuals over the sphere", formatter_class=fmt)
    _add_input(d)
    _add_common(d, 200)
    d.add_argument("--tolerance", type=_nonneg_float, default=DEFAULT_TOLERANCE, help="pass threshold on the residual")
    d.add_argument("--probes", type=int, default=4, help="random probes per eigenspace")

    r = csub.add_parser("derivative", help="finite-difference vs first-variation branch slopes",
                        formatter_class=fmt)
    _add_input(r)
    _add_common(r, 20)
    r.add_argument("--step", type=float, default=DEFAULT_STEP, help="finite-difference step h")

    e = sub.add_parser("experiment", help="corpus experiments comparing the two checks")
    esub = e.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    q = esub.add_parser("equivalence", help="agreement of both checkers over a corpus", formatter_class=fmt)
    q.add_argument("config", help="corpus / config JSON")
    _add_common(q, None, None)
    q.add_argument("--osserman-tolerance", type=_nonneg_float, default=None, help="config value or 1e-8")
    q.add_argument("--duality-tolerance", type=_nonneg_float, default=None, help="config value or 1e-8")
    q.add_argument("--probes", type=int, default=None, help="random probes per eigenspace (config or 4)")

    f = sub.add_parser("falsify", help="search for duality without the Osserman property", formatter_class=fmt)
    f.add_argument("--n", type=int, default=4, help="dimension (3-6)")
    f.add_argument("--delta", type=_nonneg_float, default=0.1, help="required Osserman spread")
    f.add_argument("--budget", type=_positive_int, default=10_000, help="checker evaluations")
    f.add_argument("--seed", type=int, default=0, help="master seed")
    f.add_argument("--method", choices=METHODS, default="random-restart", help="search method")
    f.add_argument("--samples", type=_positive_int, default=INNER_SAMPLES, help="inner-loop sphere samples")
    f.add_argument("--tolerance", type=_nonneg_float, default=1e-6,
                   help="a residual at or below this with spread >= delta counts as a counterexample")
    f.add_argument("-o", "--out", help="write the result here")
    f.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    return parser


def _load_input(args):
    if args.spec is not None:
        try:
            desc = TensorDescriptor.from_dict(json.loads(args.spec))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise UsageError(f"bad --spec: {exc}")
        return desc.build(), desc.ident
    return load_tensor(args.tensor, project=args.project), args.tensor


def _write(path, text):
    if path:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_gen(args) -> int:
    if args.corpus:
        if not args.out_dir:
            raise UsageError("--corpus needs --out-dir")
        spec = CorpusSpec.from_json_obj(json.loads(Path(args.corpus).read_text()))
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, desc in enumerate(spec.expanded()):
            path = out / f"tensor_{i:04d}.json"
            save_tensor(desc.build(), path)
            print(f"{path}: {desc.ident}")
        return EXIT_PASS
    if args.type is None or args.n is None or not args.out:
        raise UsageError("gen needs --type, --n and -o/--out (or --corpus)")
    params = {
        "constant": {"lambda": args.lam},
        "complex": {"lambda0": args.lambda0, "lambda1": (args.lambdas or [1.0])[0]},
        "clifford": {"m": args.m, "lambda0": args.lambda0, "lambdas": args.lambdas or [1.0] * args.m},
        "random": {"scale": args.scale},
        "single_plane": {"kappa": args.kappa},
    }
    if args.type == "perturbed":
        base = {"kind": args.base, "n": args.n, "params": params[args.base], "seed": args.seed}
        desc = TensorDescriptor("perturbed", args.n, {"base": base, "epsilon": args.epsilon}, args.seed)
    else:
        desc = TensorDescriptor(args.type, args.n, params[args.type], args.seed)
    t = desc.build()
    save_tensor(t, args.out)
    print(f"wrote {desc.ident} to {args.out} (Frobenius norm {t.norm:.6g})")
    return EXIT_PASS


def _cmd_check(args) -> int:
    t, source = _load_input(args)
    sample = sample_unit_sphere(t.n, args.samples, args.seed)
    if args.check == "osserman":
        rep = osserman_report(t, sample, args.cluster_tol, args.tolerance)
        print(f"osserman: spread {rep.profile_spread:.3e} (tolerance {args.tolerance:.1e}), "
              f"coefficient spread {rep.coeff_spread:.3e} over {rep.samples} samples -> "
              f"{'PASS' if rep.verdict else 'FAIL'}")
        if args.format == "json":
            _write(args.out, reports.dumps_json(reports.osserman_to_dict(rep, source)))
        else:
            _write(args.out, reports.osserman_csv(rep, sample.points))
        return EXIT_PASS if rep.verdict else EXIT_FAIL

    if args.check == "duality":
        rep = duality_report(t, sample, args.cluster_tol, args.tolerance, args.probes)
        print(f"duality: max residual {rep.max_residual:.3e} (tolerance {args.tolerance:.1e}) "
              f"over {len(rep)} eigenpairs at {rep.samples} samples -> {'PASS' if rep.verdict else 'FAIL'}")
        if args.format == "json":
            _write(args.out, reports.dumps_json(reports.duality_to_dict(rep, source)))
        else:
            _write(args.out, reports.duality_csv(rep))
        return EXIT_PASS if rep.verdict else EXIT_FAIL

    rng = np.random.default_rng(args.seed)
    branches, rejected = [], 0
    for _ in range(args.samples):
        X, Y = random_frame(t.n, rng)
        prof = spectral_profile(jacobi_operator(t, X), args.cluster_tol)
        for which, mult in enumerate(prof.multiplicities):
            if mult != 1:
                continue
            try:
                branches.append(branch_derivative(t, X, Y, which, args.step, args.cluster_tol))
            except BranchError as exc:
                log.info("branch rejected: %s", exc)
                rejected += 1
    doc = reports.derivative_to_dict(branches, source, args.seed, rejected)
    print(f"derivative: {len(branches)} simple branches, {rejected} rejected, "
          f"max |fd - analytic| {doc['max_error']:.3e} -> {'PASS' if doc['verdict'] else 'FAIL'}")
    if args.format == "json":
        _write(args.out, reports.dumps_json(doc))
    else:
        _write(args.out, reports.derivative_csv(branches))
    return EXIT_PASS if doc["verdict"] else EXIT_FAIL


def _cmd_experiment(args) -> int:
    obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    corpus = CorpusSpec.from_json_obj(obj)
    cfg = obj if isinstance(obj, dict) else {}

    def pick(flag, key, default):
        return flag if flag is not None else cfg.get(key, default)

    rows = equivalence_experiment(
        corpus, samples=pick(args.samples, "samples", 200), seed=pick(args.seed, "seed", 0),
        cluster_tol=pick(args.cluster_tol, "cluster_tol", None),
        osserman_tolerance=pick(args.osserman_tolerance, "osserman_tolerance", DEFAULT_TOLERANCE),
        duality_tolerance=pick(args.duality_tolerance, "duality_tolerance", DEFAULT_TOLERANCE),
        probes_per_eigenspace=pick(args.probes, "probes", 4),
        threads=_threads(args),
    )
    for r in rows:
        print(f"{r.tensor_id}: spread {r.osserman_spread:.3e} residual {r.duality_max_residual:.3e} "
              f"-> {'agree' if r.agree else 'DISAGREE'}" + (f" ({r.error})" if r.error else ""))
    rate = agreement_rate(rows)
    print(f"agreement {rate:.1%} over {len(rows)} tensors")
    _write(args.out, render(rows, args.format))
    if any(r.error for r in rows):
        return EXIT_ERROR
    return EXIT_PASS if rate == 1.0 else EXIT_FAIL


def _cmd_falsify(args) -> int:
    res = falsification_search(args.n, args.delta, args.budget, args.seed, args.method,
                               samples=args.samples, tolerance=args.tolerance)
    found = res.feasible and res.best_residual <= args.tolerance
    if found and res.verified is not None:
        found = res.verified["max_residual"] <= args.tolerance and res.verified["spread"] >= args.delta
    print(f"falsify: best residual {res.best_residual:.3e} at spread {res.best_spread:.3e} "
          f"after {res.evaluations} evaluations ({res.restarts} restarts) -> "
          f"{'COUNTEREXAMPLE CANDIDATE' if found else 'no counterexample'}")
    _write(args.out, render(res, args.format))
    return EXIT_FAIL if found else EXIT_PASS


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"gen": _cmd_gen, "check": _cmd_check, "experiment": _cmd_experiment, "falsify": _cmd_falsify}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
