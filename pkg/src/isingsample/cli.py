"""Command-line entry point."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import model as model_mod
from .errors import IsingSampleError
from .experiments import EXPERIMENTS, run_experiment, verify_suite
from .instances import InstanceSpec, generate_instance
from .lowerbound import probe_experiment
from .magnet import estimate_magnetization, exact_oracle, sampler_oracle
from .meanfield import MeanFieldConfig, variational_free_energy
from .model import IsingModel, free_energy_exact
from .model_io import load_model
from .regularity import fk_decompose, infty_to_one_norm
from .sampler import EstimatorConfig, estimate_free_energy


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--out", default=d(None), help="output file (CSV/JSON) or directory for experiments")
    p.add_argument("--threads", type=int, default=d(1))
    p.add_argument("--enum-guard", type=int, default=d(None), help="largest n for brute-force enumeration")


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--model", help="edge list or JSON model file")
    g.add_argument("--instance", help="JSON instance spec, e.g. '{\"kind\": \"curie-weiss\", \"n\": 400}'")


def _load(args):
    if args.model:
        return load_model(args.model)
    return generate_instance(InstanceSpec.from_dict(json.loads(args.instance)))


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=1, default=lambda v: v.tolist() if isinstance(v, np.ndarray) else str(v))
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def cmd_exact(args) -> int:
    m = _load(args)
    _emit(args, {"n": m.n, "free_energy": free_energy_exact(m, method=args.method)})
    return 0


def cmd_meanfield(args) -> int:
    m = _load(args)
    if not isinstance(m, IsingModel):
        raise SystemExit("meanfield needs an Ising model")
    res = variational_free_energy(m, MeanFieldConfig(restarts=args.restarts, tol=args.tol), seed=args.seed)
    _emit(
        args,
        {"value": res.value, "argmax": res.argmax, "converged": res.converged, "residual": res.residual},
    )
    return 0 if res.converged else 1


def cmd_decompose(args) -> int:
    m = _load(args)
    d = fk_decompose(m.J, args.epsilon, seed=args.seed)
    text = d.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(json.dumps({"width": d.width, "coefficient_length": d.coefficient_length, "exact_certificate": d.exact_certificate}))
    return 0


def cmd_cutnorm(args) -> int:
    m = _load(args)
    res = infty_to_one_norm(m.J, mode=args.mode, budget=args.budget, seed=args.seed)
    _emit(args, {"value": res.value, "x": res.x, "y": res.y, "lower_bound": res.lower_bound})
    return 0


def cmd_estimate(args) -> int:
    m = _load(args)
    cfg = EstimatorConfig(
        q=args.q,
        repeats=args.repeats,
        backend=args.backend,
        epsilon=args.epsilon,
        seed=args.seed,
        threads=args.threads,
        field_scaling=args.field_scaling,
    )
    est = estimate_free_energy(m, cfg)
    rows = [
        {
            "repeat": r.index,
            "q": cfg.q,
            "value": repr(r.value),
            "rescaled_value": repr(r.rescaled),
            "median_flag": int(r.ok and r.rescaled == est.estimate),
        }
        for r in est.per_repeat
    ]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            out.close()
    print(json.dumps({"estimate": est.estimate, "error_envelope": est.error_envelope}), file=sys.stderr)
    return 0


def cmd_magnetize(args) -> int:
    m = _load(args)
    if args.oracle == "exact":
        oracle = exact_oracle
    else:
        oracle = sampler_oracle(EstimatorConfig(q=args.q or m.n, repeats=args.repeats, seed=args.seed))
    est = estimate_magnetization(m, oracle, args.nu, args.epsilon)
    _emit(
        args,
        {"value": est.value, "bracket": list(est.bracket), "h_window": est.h_window, "oracle_calls": est.oracle_calls},
    )
    return 0 if est.oracle_calls == 3 else 1


def cmd_lowerbound(args) -> int:
    res = probe_experiment(args.n, args.epsilon, args.delta, args.M, args.k, args.trials, seed=args.seed)
    row = {
        "n": args.n,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "k": args.k,
        "trials": args.trials,
        "failure_rate": repr(res.failure_rate),
        "sigma": repr(res.sigma),
        "bound": repr(res.bound),
    }
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=list(row), lineterminator="\n")
        w.writeheader()
        w.writerow(row)
    finally:
        if args.out:
            out.close()
    applies = args.k <= 1.0 / (4 * args.epsilon * args.delta) if args.epsilon * args.delta > 0 else True
    return 0 if (not applies or res.failure_rate >= res.bound - 3 * res.sigma) else 1


def cmd_experiment(args) -> int:
    names = EXPERIMENTS if args.name == "all" else (args.name,)
    cfg = json.loads(args.config) if args.config else None
    ok = True
    for name in names:
        rep = run_experiment(name, cfg if len(names) == 1 else None, seed=args.seed, out_dir=args.out)
        status = "pass" if rep.passed else "FAIL"
        print(f"{name}: {status} ({len(rep.rows)} rows, {rep.wallclock:.1f}s)")
        for f in rep.failures:
            print(f"  error: {f}")
        ok &= rep.passed
    if args.verify:
        same = verify_suite(args.seed, {names[0]: cfg} if cfg and len(names) == 1 else None, names)
        for name, eq in same.items():
            print(f"{name}: rerun {'identical' if eq else 'DIFFERS'}")
        ok &= all(same.values())
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isingsample", description="Free energy of Ising models from vertex samples")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        _global_flags(sp, suppress=True)
        sp.set_defaults(func=fn)
        return sp

    sp = add("exact", cmd_exact, "exact log-partition function")
    _model_flags(sp)
    sp.add_argument("--method", choices=["auto", "enumerate", "structured"], default="auto")

    sp = add("meanfield", cmd_meanfield, "mean-field variational free energy")
    _model_flags(sp)
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = add("decompose", cmd_decompose, "weak-regularity cut decomposition (JSON)")
    _model_flags(sp)
    sp.add_argument("--epsilon", type=float, required=True)

    sp = add("cutnorm", cmd_cutnorm, "infinity-to-one norm of the interaction matrix")
    _model_flags(sp)
    sp.add_argument("--mode", choices=["auto", "exact", "heuristic"], default="auto")
    sp.add_argument("--budget", type=int, default=64)

    sp = add("estimate", cmd_estimate, "sample-based free-energy estimate (CSV)")
    _model_flags(sp)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--repeats", type=int, default=11)
    sp.add_argument("--backend", choices=["exact", "meanfield", "maxent-grid"], default="exact")
    sp.add_argument("--epsilon", type=float, default=0.5)
    sp.add_argument("--field-scaling", choices=["mrf", "linear"], default="mrf")

    sp = add("magnetize", cmd_magnetize, "magnetization from three free-energy queries")
    _model_flags(sp)
    sp.add_argument("--nu", type=float, required=True)
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--oracle", choices=["exact", "sampler"], default="exact")
    sp.add_argument("--q", type=int, default=None, help="sample size for the sampler oracle")
    sp.add_argument("--repeats", type=int, default=11)

    sp = add("lowerbound", cmd_lowerbound, "probe distinguishing experiment (CSV)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--trials", type=int, default=10_000)

    sp = add("experiment", cmd_experiment, "run a named experiment (CSV + JSON into --out)")
    sp.add_argument("name", choices=list(EXPERIMENTS) + ["all"])
    sp.add_argument("--config", help="JSON overrides for the experiment config")
    sp.add_argument("--verify", action="store_true", help="rerun and diff the CSV output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.enum_guard is not None:
        model_mod.set_enumeration_guard(args.enum_guard)
    try:
        return args.func(args)
    except IsingSampleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
