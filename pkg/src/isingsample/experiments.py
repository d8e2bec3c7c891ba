"""Experiment orchestration with deterministic CSV output.

Every experiment returns rows that depend only on its config and seed; the
wall-clock time goes into the JSON summary and never into the CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .instances import InstanceSpec, generate_instance
from .lowerbound import free_energy_separation, probe_experiment
from .magnet import estimate_magnetization, exact_magnetization, exact_oracle
from .model import IsingModel, free_energy_exact
from .regularity import fk_decompose
from .rng import substream
from .sampler import EstimatorConfig, estimate_free_energy, repeat_subset, variational_sample_gap

EXPERIMENTS = ("convergence", "concentration", "legs", "lowerbound", "magnetization")


@dataclass
class ExperimentReport:
    name: str
    config: dict
    rows: list[dict]
    summary: dict
    wallclock: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.summary.get("assertions", {}).values()) and not self.failures

    def csv_text(self) -> str:
        buf = io.StringIO()
        if self.rows:
            w = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            w.writeheader()
            for row in self.rows:
                w.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "config": self.config,
                "summary": self.summary,
                "failures": self.failures,
                "wallclock_seconds": self.wallclock,
            },
            indent=1,
            default=_jsonable,
        )

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / f"{self.name}.csv", out / f"{self.name}.json"
        csv_path.write_text(self.csv_text())
        json_path.write_text(self.json_text())
        return csv_path, json_path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _finite(v):
    # strict JSON has no NaN
    return v if math.isfinite(v) else None


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


DEFAULTS = {
    "convergence": {"n": 400, "beta": 0.5, "qs": [20, 40, 80, 160], "seeds": 10, "repeats": 11},
    "concentration": {
        "instance": {"kind": "erdos-renyi-uniform-weight", "n": 16, "m": 40, "beta": 1.0, "seed": 0},
        "q": 8,
        "seeds": 20,
        "repeats": 11,
        "backend": "exact",
    },
    "legs": {"n": 12, "q": 8, "epsilon": 0.5, "trials": 10, "scale": 4.0, "field": 0.5},
    "lowerbound": {
        "n": 200,
        "epsilon": 0.1,
        "delta": 0.1,
        "M": 1.0,
        "ks": [0, 5, 10, 25],
        "trials": 10_000,
        "separation_n": 8,
        "separation_epsilon": 0.2,
        "separation_delta": 0.125,
        "M_schedule": [0.0, 0.5, 1.0, 2.0, 5.0],
    },
    "magnetization": {"models": 20, "n_max": 8, "nu": 0.05},
}


def _convergence(cfg, seed):
    n, beta = cfg["n"], cfg["beta"]
    spec = InstanceSpec("curie-weiss", n=n, beta=beta, seed=seed)
    model = generate_instance(spec)
    F = free_energy_exact(model)
    rows = []
    medians = {}
    for q in cfg["qs"]:
        devs = []
        for s in range(cfg["seeds"]):
            est = estimate_free_energy(model, EstimatorConfig(q=q, repeats=cfg["repeats"], seed=seed * 1000 + s))
            dev = abs(est.estimate - F) / n
            devs.append(dev)
            rows.append({"q": q, "seed": seed * 1000 + s, "estimate": est.estimate, "exact": F, "abs_dev_per_n": dev})
        medians[q] = float(np.median(devs))
    meds = [medians[q] for q in cfg["qs"]]
    monotone = all(b <= a + 1e-12 for a, b in zip(meds, meds[1:]))
    return rows, {"median_dev_per_n": medians, "assertions": {"median_non_increasing": monotone}}


def _concentration(cfg, seed):
    spec = InstanceSpec.from_dict(cfg["instance"])
    model = generate_instance(spec)
    F = free_energy_exact(model)
    rows = []
    for s in range(cfg["seeds"]):
        est = estimate_free_energy(
            model, EstimatorConfig(q=cfg["q"], repeats=cfg["repeats"], backend=cfg["backend"], seed=seed * 1000 + s)
        )
        rows.append({"seed": seed * 1000 + s, "estimate": est.estimate, "exact": F, "deviation": est.estimate - F})
    devs = np.array([r["deviation"] for r in rows])
    return rows, {"mean_abs_dev": float(np.mean(np.abs(devs))), "max_abs_dev": float(np.max(np.abs(devs)))}


def _legs(cfg, seed):
    n, q, eps = cfg["n"], cfg["q"], cfg["epsilon"]
    rows = []
    ok = True
    for t in range(cfg["trials"]):
        rng = substream(seed, "legs", t)
        A = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)) * cfg["scale"] / n, 1)
        model = IsingModel(A + A.T, rng.uniform(-cfg["field"], cfg["field"], size=n))
        decomp = fk_decompose(model.J, eps, seed=seed)
        Q = repeat_subset(n, q, seed, t)
        legs = variational_sample_gap(model, decomp, Q, seed=seed)
        tri = legs.total <= legs.leg_sum + 1e-9
        ok &= tri
        rows.append(
            {
                "trial": t,
                "width": decomp.width,
                "decomposition_leg": legs.decomposition_leg,
                "sample_leg": legs.sample_leg,
                "cut_leg": legs.cut_leg,
                "total": legs.total,
                "triangle_ok": int(tri),
            }
        )
    means = {k: float(np.mean([r[k] for r in rows])) for k in ("decomposition_leg", "sample_leg", "cut_leg")}
    return rows, {"mean_legs": means, "dominant_leg": max(means, key=means.get), "assertions": {"triangle": bool(ok)}}


def _lowerbound(cfg, seed):
    rows = []
    ok = True
    kmax = 1.0 / (4 * cfg["epsilon"] * cfg["delta"])
    for k in cfg["ks"]:
        res = probe_experiment(cfg["n"], cfg["epsilon"], cfg["delta"], cfg["M"], k, cfg["trials"], seed=seed)
        holds = res.failure_rate >= res.bound - 3 * res.sigma
        if k <= kmax:
            ok &= holds
        rows.append(
            {"k": k, "failure_rate": res.failure_rate, "sigma": res.sigma, "bound": res.bound, "bound_holds": int(holds)}
        )
    rep = free_energy_separation(
        cfg["separation_n"], cfg["separation_epsilon"], cfg["separation_delta"], cfg["M_schedule"], seed=seed
    )
    last = rep.rows[-1]
    rel = abs(last.ratio_uniform - rep.limit_uniform) / rep.limit_uniform
    summary = {
        "separation": [
            {"M": r.M, "F": r.F, "F_uniform": r.F_uniform, "ratio": _finite(r.ratio), "ratio_uniform": _finite(r.ratio_uniform)}
            for r in rep.rows
        ],
        "limit": rep.limit,
        "limit_uniform": rep.limit_uniform,
        "first_separating_M": rep.first_separating_M,
        "uniform_ratio_rel_error_at_max_M": rel,
        "assertions": {"probe_bound": bool(ok), "uniform_ratio_within_2pct": bool(rel <= 0.02)},
    }
    return rows, summary


def _magnetization(cfg, seed):
    rows = []
    ok = True
    nu = cfg["nu"]
    for t in range(cfg["models"]):
        rng = substream(seed, "magnetization", t)
        n = int(rng.integers(2, cfg["n_max"] + 1))
        A = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)) / n, 1)
        model = IsingModel(A + A.T, rng.uniform(-0.5, 0.5, size=n))
        est = estimate_magnetization(model, exact_oracle, nu)
        grid = np.arange(-nu + 1e-4, nu, 1e-3)
        mags = np.array([exact_magnetization(model, h) for h in grid])
        lo, hi = est.bracket
        contains = bool(np.any((mags >= lo - 1e-9) & (mags <= hi + 1e-9)))
        ok &= contains and est.oracle_calls == 3
        rows.append(
            {
                "model": t,
                "n": n,
                "estimate": est.value,
                "left": lo,
                "right": hi,
                "exact_at_zero": exact_magnetization(model),
                "bracket_hit": int(contains),
            }
        )
    return rows, {"assertions": {"bracket_contains_window_value": bool(ok)}}


_RUNNERS = {
    "convergence": _convergence,
    "concentration": _concentration,
    "legs": _legs,
    "lowerbound": _lowerbound,
    "magnetization": _magnetization,
}


def run_experiment(name: str, config: dict | None = None, seed: int = 0, out_dir=None) -> ExperimentReport:
    """Run one named experiment; ``config`` entries override the defaults."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    cfg = dict(DEFAULTS[name])
    cfg.update(config or {})
    t0 = time.perf_counter()
    failures = []
    try:
        rows, summary = _RUNNERS[name](cfg, seed)
    except Exception as exc:  # report, do not crash the suite
        rows, summary = [], {"assertions": {}}
        failures.append(f"{type(exc).__name__}: {exc}")
    report = ExperimentReport(name, {"seed": seed, **cfg}, rows, summary, time.perf_counter() - t0, failures)
    if out_dir is not None:
        report.write(out_dir)
    return report


def run_suite(seed: int = 0, out_dir=None, overrides: dict | None = None, names=EXPERIMENTS) -> list[ExperimentReport]:
    overrides = overrides or {}
    return [run_experiment(name, overrides.get(name), seed, out_dir) for name in names]


def verify_suite(seed: int = 0, overrides: dict | None = None, names=EXPERIMENTS) -> dict[str, bool]:
    """Run every experiment twice and report whether the CSV bytes match."""
    first = run_suite(seed, None, overrides, names)
    second = run_suite(seed, None, overrides, names)
    return {a.name: a.csv_text() == b.csv_text() for a, b in zip(first, second)}
