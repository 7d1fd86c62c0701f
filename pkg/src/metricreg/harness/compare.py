"""Identity, oracle and learned metrics run side by side on identical streams."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..gop import BandwidthSchedule
from ..linalg import Metric, principal_angles, spectral_normalize
from ..phased import RegularizationSchedule, run_phased
from ..regressor import run_sequence
from .generators import GeneratorSpec, generate
from .io import write_csv, write_json
from .regret import evaluate_regret, loglog_slope

MODES = ("identity", "oracle", "learned")

SUMMARY_COLUMNS = ["seed", "mode", "final_regret", "slope", "slope_residual", "final_centers",
                   "rho_final", "principal_angle_deg"]


def oracle_metric(G, floor=1e-3):
    """``G / mu_1 + floor I`` scaled to unit spectral radius (identity if ``G = 0``)."""
    G = np.asarray(G, dtype=float)
    top = np.linalg.norm(G, 2)
    d = G.shape[0]
    if top == 0:
        return Metric.identity(d)
    return spectral_normalize(G / top + floor * np.eye(d))


@dataclass(frozen=True)
class CompareConfig:
    alpha: float = 0.5
    schedule: BandwidthSchedule = BandwidthSchedule()
    oracle_floor: float = 1e-3
    clock: str = "phase"
    history: str = "cumulative"


def _run_one(spec, T, seed, cfg):
    spec = replace(spec, seed=seed)
    data, oracle = generate(spec, T)
    f0 = oracle.f0(data.X)
    rows, traces = [], {}
    B = oracle.projector
    for mode in MODES:
        angle = float("nan")
        if mode == "learned":
            outs, diags = run_phased(data, RegularizationSchedule(cfg.alpha), cfg.schedule,
                                     comparator=f0, clock=cfg.clock, history=cfg.history)
            phases = [p.phase for p in outs]
            outcomes = [p.outcome for p in outs]
            metric = None
            fitted = [dg for dg in diags if dg.next_metric is not None]
            if fitted and spec.kind != "constant":
                top = fitted[-1].next_metric.eigenvectors[:, :1]
                angle = float(np.degrees(principal_angles(top, B.T)[0]))
        else:
            metric = Metric.identity(spec.dim) if mode == "identity" else \
                oracle_metric(oracle.G, cfg.oracle_floor)
            outcomes = run_sequence(metric, data)
            phases = [0] * T
        # for the learned mode this counts centers over all phases
        final_centers = int(sum(o.new_center_created for o in outcomes))
        trace = evaluate_regret(outcomes, oracle, data, metric=metric,
                                metadata={"mode": mode, "seed": seed})
        slope, resid = loglog_slope(trace.cum_regret)
        rows.append({
            "seed": seed, "mode": mode, "final_regret": trace.final, "slope": slope,
            "slope_residual": resid, "final_centers": final_centers,
            "rho_final": outcomes[-1].effective_rank_used, "principal_angle_deg": angle,
        })
        traces[mode] = (trace, outcomes, phases)
    return rows, traces, f0, data


def compare_modes(spec: GeneratorSpec, T, seeds, config=None, out_dir=None, traces=False,
                  workers=1):
    """Run every mode for every seed and summarize.

    Returns ``(rows, summary)``: one row per (seed, mode), and per-mode
    medians. With ``out_dir`` the rows go to ``summary.csv``, the medians
    and configuration to ``summary.json``, and with ``traces=True`` the
    per-round records to ``trace.csv``.
    """
    cfg = config or CompareConfig()
    seeds = sorted(int(s) for s in seeds)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, [spec] * len(seeds), [T] * len(seeds), seeds,
                                    [cfg] * len(seeds)))
    else:
        results = [_run_one(spec, T, s, cfg) for s in seeds]
    rows = [r for res in results for r in res[0]]
    summary = summarize(rows)
    summary["config"] = {
        "generator": spec.to_dict(), "rounds": T, "seeds": seeds, "alpha": cfg.alpha,
        "schedule": vars(cfg.schedule), "oracle_floor": cfg.oracle_floor, "clock": cfg.clock,
        "history": cfg.history,
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(os.path.join(out_dir, "summary.csv"), rows, SUMMARY_COLUMNS)
        write_json(os.path.join(out_dir, "summary.json"), summary)
        if traces:
            write_csv(os.path.join(out_dir, "trace.csv"), _trace_rows(seeds, results),
                      TRACE_COLUMNS)
    return rows, summary


def summarize(rows):
    out = {}
    for mode in MODES:
        sel = [r for r in rows if r["mode"] == mode]
        if not sel:
            continue
        med = lambda key: float(np.nanmedian([r[key] for r in sel])) \
            if not all(np.isnan(r[key]) for r in sel) else float("nan")  # noqa: E731
        out[mode] = {
            "median_final_regret": med("final_regret"),
            "median_slope": med("slope"),
            "median_final_centers": med("final_centers"),
            "median_principal_angle_deg": med("principal_angle_deg"),
            "runs": len(sel),
        }
    return out


TRACE_COLUMNS = ["seed", "mode", "t", "phase", "y", "f0", "prediction", "loss", "cum_regret",
                 "rho_t", "epsilon_t", "new_center"]


def _trace_rows(seeds, results):
    for seed, (_, traces, f0, data) in zip(seeds, results):
        for mode in MODES:
            trace, outcomes, phases = traces[mode]
            for k, o in enumerate(outcomes):
                yield {
                    "seed": seed, "mode": mode, "t": k + 1, "phase": phases[k], "y": o.y,
                    "f0": f0[k], "prediction": o.prediction, "loss": o.loss,
                    "cum_regret": trace.cum_regret[k], "rho_t": o.effective_rank_used,
                    "epsilon_t": o.radius_used, "new_center": int(o.new_center_created),
                }
