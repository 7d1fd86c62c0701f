"""Command-line entry point: ``metricreg <subcommand> ...``.

CSV formats
-----------
dataset (gen-data, estimate-gop input)
    ``x_1, ..., x_d, y``
run-fixed output
    ``t, y, prediction, loss, cum_loss, n_centers, rho_t, epsilon_t, new_center``
run-learned output
    the run-fixed columns plus ``phase``; ``t`` is the global round and
    ``n_centers`` counts centers of the current phase
compare output (``--out-dir``)
    ``summary.csv``: ``seed, mode, final_regret, slope, slope_residual,
    final_centers, rho_final, principal_angle_deg``; ``summary.json``: per-mode
    medians and the configuration; ``trace.csv`` with ``--traces``.

Matrices are JSON objects ``{"dim": d, "rows": [[...], ...]}``.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .gop import BandwidthSchedule, estimate_gop
from .harness import validators as val
from .harness.compare import CompareConfig, compare_modes
from .harness.generators import STREAM_VALIDATOR, GeneratorSpec, generate, substream
from .harness.io import dumps, read_dataset, read_json, write_csv, write_dataset, write_json
from .harness.regret import evaluate_regret
from .linalg import Metric, matrix_from_json, matrix_to_json, spectral_normalize
from .phased import RegularizationSchedule, run_phased
from .regressor import OUTCOME_COLUMNS, OnlineRegressor, outcome_rows, run_sequence


def _spec(args):
    spec = GeneratorSpec.parse(args.generator) if args.generator else GeneratorSpec()
    if getattr(args, "dim", None):
        spec = replace(spec, dim=args.dim)
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def _schedule(args):
    return BandwidthSchedule(c_eps=args.c_eps, tau0=args.tau0, c_tau=args.c_tau, c_lo=args.c_lo,
                             kernel=args.kernel)


def _add_schedule_flags(p):
    d = BandwidthSchedule()
    p.add_argument("--c-eps", type=float, default=d.c_eps, help="bandwidth scale")
    p.add_argument("--c-lo", type=float, default=d.c_lo, help="scale of the bandwidth floor")
    p.add_argument("--tau0", type=float, default=d.tau0, help="cap on the difference step")
    p.add_argument("--c-tau", type=float, default=d.c_tau, help="difference step scale")
    p.add_argument("--kernel", default=d.kernel, choices=["triangular", "epanechnikov"])


def _add_generator_flags(p):
    p.add_argument("--generator", help="JSON text, JSON file, or a kind name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rounds", type=int, default=1024)
    p.add_argument("--dim", type=int, default=None)


def _stream(args):
    if getattr(args, "data", None):
        return read_dataset(args.data), None
    return generate(_spec(args), args.rounds)


def cmd_gen_data(args):
    data, oracle = generate(_spec(args), args.rounds)
    write_dataset(args.out, data)
    if args.oracle:
        write_json(args.oracle, {"G": matrix_to_json(oracle.G), "G_method": oracle.G_method,
                                 "G_se": oracle.G_se, "projector": oracle.projector,
                                 "generator": oracle.spec.to_dict()})
    return 0


def cmd_run_fixed(args):
    data, oracle = _stream(args)
    if args.metric == "identity":
        metric = Metric.identity(data.dim)
    else:
        metric = spectral_normalize(matrix_from_json(read_json(args.metric)))
    reg = OnlineRegressor(metric)
    outcomes = run_sequence(metric, data, regressor=reg)
    write_csv(args.out, outcome_rows(outcomes), OUTCOME_COLUMNS)
    if args.diag:
        diag = {"packing": val.validate_packing_bound(reg).to_dict(),
                "metric_eigenvalues": metric.eigenvalues}
        if oracle is not None:
            diag["final_regret"] = evaluate_regret(outcomes, oracle, data, metric).final
        write_json(args.diag, diag)
    return 0


def cmd_run_learned(args):
    data, oracle = _stream(args)
    comp = oracle.f0(data.X) if oracle is not None else None
    outs, diags = run_phased(data, RegularizationSchedule(args.alpha), _schedule(args),
                             comparator=comp, clock=args.clock, history=args.history)
    rows = outcome_rows([p.outcome for p in outs],
                        extra={"t": [p.global_t for p in outs], "phase": [p.phase for p in outs]})
    write_csv(args.out, rows, OUTCOME_COLUMNS + ["phase"])
    if args.diag:
        write_json(args.diag, {"phases": [dg.to_dict() for dg in diags]})
    return 0


def cmd_estimate_gop(args):
    data = read_dataset(args.data)
    est = estimate_gop(data, _schedule(args))
    write_json(args.out, matrix_to_json(est.matrix))
    if args.diag:
        write_json(args.diag, {"n": est.n, "eps_n": est.eps, "tau_n": est.tau,
                               "mask_rate": est.mask_rate})
    return 0


CHECKS = {1: "volumetric packing", 2: "ellipsoid packing", 3: "metric Lipschitz",
          5: "monotone phase map"}


def run_validator(check, trials, seed):
    """Run validator ``check`` (a key of ``CHECKS``) ``trials`` times.

    Returns ``(all_passed, reports)``.
    """
    rng = substream(seed, STREAM_VALIDATOR, check)
    reports = []
    for k in range(trials):
        if check == 1:
            d = 1 + k % 3
            metric = val.random_metric(rng, d)
            eps = float(rng.choice([0.25, 0.5, 1.0]))
            rep = val.validate_volumetric_bound(metric, eps, rng, proposals=20000,
                                                mc_samples=200000)
        elif check == 2:
            d = 2 + k % 2
            metric = val.random_metric(rng, d)
            reg = OnlineRegressor(metric)
            X = generate(GeneratorSpec(dim=d, seed=seed * 1000 + k), 4096)[0].X
            for x in X:
                reg.step(x, 0.5)
            rep = val.validate_packing_bound(reg)
        elif check == 3:
            d = 2 + k % 4
            metric = val.random_metric(rng, d)
            fn = val.AffineFunction(rng.standard_normal(d)) if k % 2 == 0 else \
                val.QuadraticFunction(np.diag(rng.standard_normal(d)), rng.standard_normal(d))
            rep = val.validate_lipschitz(metric, fn, rng)
        elif check == 5:
            mu, a, d = val.random_monotone_triples(rng, 1)[0]
            rep = val.monotone_map_grid(mu, a, d)
        else:
            raise ValueError(f"no validator numbered {check}")
        reports.append(rep.to_dict())
    return all(r["passed"] for r in reports), reports


def cmd_validate(args):
    ok, reports = run_validator(args.lemma, args.trials, args.seed)
    payload = {"lemma": args.lemma, "check": CHECKS[args.lemma], "trials": args.trials,
               "passed": ok, "reports": reports}
    if args.out:
        write_json(args.out, payload)
    print(json.dumps({"lemma": args.lemma, "check": CHECKS[args.lemma], "trials": args.trials,
                      "passed": ok}))
    return 0 if ok else 1


def _parse_seeds(text):
    seeds = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def cmd_compare(args):
    spec = GeneratorSpec.parse(args.spec) if args.spec else GeneratorSpec()
    cfg = CompareConfig(alpha=args.alpha, schedule=_schedule(args), oracle_floor=args.oracle_floor,
                        clock=args.clock)
    _, summary = compare_modes(spec, args.rounds, _parse_seeds(args.seeds), cfg,
                               out_dir=args.out_dir, traces=args.traces, workers=args.workers)
    print(dumps({m: v for m, v in summary.items() if m != "config"}))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="metricreg", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic dataset CSV (x_1..x_d, y)")
    _add_generator_flags(g)
    g.add_argument("--out", required=True)
    g.add_argument("--oracle", help="also write the true G and projector as JSON")
    g.set_defaults(func=cmd_gen_data)

    f = sub.add_parser("run-fixed", help="run the regressor under a fixed metric")
    _add_generator_flags(f)
    f.add_argument("--data", help="dataset CSV instead of a generator")
    f.add_argument("--metric", default="identity", help="'identity' or a matrix JSON file")
    f.add_argument("--out", required=True)
    f.add_argument("--diag")
    f.set_defaults(func=cmd_run_fixed)

    r = sub.add_parser("run-learned", help="run the phased metric-learning regressor")
    _add_generator_flags(r)
    r.add_argument("--data", help="dataset CSV instead of a generator")
    r.add_argument("--alpha", type=float, default=0.5)
    r.add_argument("--clock", choices=["phase", "global"], default="phase")
    r.add_argument("--history", choices=["cumulative", "phase"], default="cumulative")
    _add_schedule_flags(r)
    r.add_argument("--out", required=True)
    r.add_argument("--diag")
    r.set_defaults(func=cmd_run_learned)

    e = sub.add_parser("estimate-gop", help="estimate the gradient outer product of a dataset")
    e.add_argument("--data", required=True)
    _add_schedule_flags(e)
    e.add_argument("--out", required=True)
    e.add_argument("--diag")
    e.set_defaults(func=cmd_estimate_gop)

    v = sub.add_parser("validate", help="run a numerical validator; exit 0 iff all trials pass")
    v.add_argument("--lemma", type=int, choices=sorted(CHECKS), required=True,
                   help=", ".join(f"{k}: {v}" for k, v in CHECKS.items()))
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("compare", help="identity vs oracle vs learned metric on shared streams")
    c.add_argument("--spec", help="generator JSON text or file")
    c.add_argument("--rounds", type=int, default=4096)
    c.add_argument("--seeds", default="0-2", help="e.g. '0-9' or '1,4,7'")
    c.add_argument("--alpha", type=float, default=0.5)
    c.add_argument("--clock", choices=["phase", "global"], default="phase")
    c.add_argument("--oracle-floor", type=float, default=1e-3)
    _add_schedule_flags(c)
    c.add_argument("--out-dir")
    c.add_argument("--traces", action="store_true")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
