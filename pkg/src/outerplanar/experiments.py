"""Reproducible experiments: per-(n, replica) rows, summaries and checks.

Every experiment turns an :class:`ExperimentConfig` into rows (one per size
and replica, ordered by (n, replica)), then derives its summary and pass/fail
checks from the rows alone, so ``summarize`` can be re-run on a saved
``rows.csv`` as an audit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .metrics import (
    boundary_looptree_correspondence,
    diameter,
    giant_statistics,
    graph_distortion,
    map_boundary_distortion,
    pair_distances,
    penalty,
)
from .oracle import enumerate_dissections, enumerate_maps
from .samplers import Rng, dissection_enriched_tree, sample_map
from .series import (
    SeriesError,
    cached_phase_parameters,
    model_from_dict,
    scaling_constants,
)
from .structures import assemble_dissection, looptree, map_to_leaf_tree

EXPERIMENTS = ("analyze", "sample", "scaling-diameter", "giant-face",
               "boundary-contraction", "circle-test", "looptree-compare", "enumerate")

DEFAULT_TOLERANCES = {
    "slope": 0.08,            # |fitted slope - predicted exponent|
    "giant_rel": 0.10,        # relative error of the median largest-face fraction
    "circle_diam_lo": 0.45,
    "circle_diam_hi": 0.55,
    "circle_ks": 0.05,
}
BOOTSTRAP_RESAMPLES = 200


class ExperimentError(ValueError):
    """Invalid configuration or a precondition that does not hold."""


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict
    sizes: list = field(default_factory=list)
    replicas: int = 1
    seed: int = 0
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ExperimentError(f"unknown experiment {self.experiment!r}")
        if any(int(n) < 1 for n in self.sizes):
            raise ExperimentError("sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ExperimentError("sizes must be strictly increasing")
        if self.replicas < 1:
            raise ExperimentError("replicas must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ExperimentError("seed must be an unsigned 64-bit integer")

    @property
    def tol(self) -> dict:
        return {**DEFAULT_TOLERANCES, **self.tolerances}

    def hash(self) -> str:
        """Hash of everything that determines the rows except the seed."""
        body = {k: v for k, v in asdict(self).items() if k not in ("out", "seed")}
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def load_config(path, experiment: str | None = None, seed: int | None = None,
                out: str | None = None) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    extra = set(raw) - known
    if extra:
        raise ExperimentError(f"unknown config keys: {sorted(extra)}")
    if experiment is not None:
        if raw.get("experiment", experiment) != experiment:
            raise ExperimentError(
                f"config is for {raw['experiment']!r}, not {experiment!r}")
        raw["experiment"] = experiment
    if "experiment" not in raw or "model" not in raw:
        raise ExperimentError("config needs 'experiment' and 'model'")
    cfg = ExperimentConfig(**raw)
    cfg.sizes = [int(n) for n in cfg.sizes]
    cfg.replicas = int(cfg.replicas)
    if seed is not None:
        cfg.seed = int(seed)
    if out is not None:
        cfg.out = out
    cfg.validate()
    return cfg


@dataclass
class ExperimentReport:
    experiment: str
    config_hash: str
    seed: int
    columns: list
    rows: list
    summary: dict
    checks: dict
    runtime: dict = field(default_factory=dict)
    plotdata: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "passed": self.passed,
            "checks": self.checks,
            "summary": self.summary,
            "runtime": self.runtime,
            **self.extra,
        }

    def write(self, out: str):
        os.makedirs(os.path.join(out, "plotdata"), exist_ok=True)
        with open(os.path.join(out, "report.json"), "w") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2, sort_keys=True)
        with open(os.path.join(out, "rows.csv"), "w", newline="") as fh:
            fh.write(self.rows_csv())
        for name, (header, xs, ys) in self.plotdata.items():
            with open(os.path.join(out, "plotdata", f"{name}.csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for x, y in zip(xs, ys):
                    w.writerow([_fmt(x), _fmt(y)])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return x


def read_rows(path) -> list:
    """Rows from a rows.csv, with numeric fields parsed."""
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            out.append({k: _parse(v) for k, v in row.items()})
    return out


def _parse(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def _by_size(rows, key):
    sizes = sorted({r["n"] for r in rows})
    return sizes, [np.array([r[key] for r in rows if r["n"] == n], float) for n in sizes]


def fit_slope(sizes, groups, rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES):
    """OLS slope of log median against log n, with a percentile bootstrap CI
    obtained by resampling replicas within each size."""
    x = np.log(np.asarray(sizes, float))
    med = np.array([np.median(g) for g in groups])
    if np.any(med <= 0):
        raise ExperimentError("medians must be positive for a log-log fit")
    slope = float(np.polyfit(x, np.log(med), 1)[0])
    boots = []
    for _ in range(resamples):
        m = np.array([np.median(g[rng.integers(0, g.size, g.size)]) for g in groups])
        if np.all(m > 0):
            boots.append(np.polyfit(x, np.log(m), 1)[0])
    lo, hi = np.percentile(boots, [2.5, 97.5]) if boots else (math.nan, math.nan)
    return slope, float(lo), float(hi)


def _check(passed, value, target, note=""):
    return {"passed": bool(passed), "value": value, "target": target,
            "note": note or "tolerance is an engineering choice"}


# ---------------------------------------------------------------------------
# replica workers (top-level so they pickle)
# ---------------------------------------------------------------------------

def _replica_scaling_diameter(model_cfg, options, seed, n, i):
    model = model_from_dict(model_cfg)
    rng = Rng(seed).derive(n, i)
    s = sample_map(model, n, rng)
    d = diameter(s.map, rng=rng.gen)
    b = diameter(s.map.boundary(), rng=rng.gen)
    return {"diameter": d.value, "diameter_mode": d.mode,
            "boundary_diameter": b.value, "boundary_mode": b.mode}


def _replica_giant_face(model_cfg, options, seed, n, i):
    model = model_from_dict(model_cfg)
    rng = Rng(seed).derive(n, i)
    et = dissection_enriched_tree(model, n, rng)
    g = giant_statistics(et.tree)
    big = max((max(c) + 2 for c in et.decoration if len(c)), default=0)
    return {"largest_face": big, "fraction": big / n, "max_outdegree": g.max_outdegree,
            "u_star": g.u_star, "pruned_size": g.pruned_size}


def _replica_boundary(model_cfg, options, seed, n, i):
    model = model_from_dict(model_cfg)
    params = cached_phase_parameters(model)
    rng = Rng(seed).derive(n, i)
    s = sample_map(model, n, rng)
    dis = map_boundary_distortion(s.map, 1 - params.nu_D, rng=rng.gen)
    worst = 0.0
    for blk in s.blocks:
        if blk.size >= 2:
            f = penalty(blk, params.nu_D, rng=rng.gen).value
            worst = max(worst, f / (2 * blk.size))
    return {"distortion": dis.value, "mode": dis.mode,
            "normalized": dis.value / n ** (1 / model.alpha),
            "max_penalty_ratio": worst}


def _replica_circle(model_cfg, options, seed, n, i):
    model = model_from_dict(model_cfg)
    rng = Rng(seed).derive(n, i)
    s = sample_map(model, n, rng)
    scale = (1 - model.r) / (n * model.r)
    d = diameter(s.map, rng=rng.gen)
    pairs = int(options.get("pairs", 10_000))
    us = rng.integers(0, n, size=pairs)
    vs = rng.integers(0, n, size=pairs)
    x = pair_distances(s.map, us, vs) * scale
    ks = stats.kstest(x, stats.uniform(0, 0.5).cdf).statistic
    return {"diameter": d.value, "diameter_mode": d.mode,
            "rescaled_diameter": d.value * scale, "ks": float(ks),
            "mean_rescaled_distance": float(x.mean())}


def _replica_looptree(model_cfg, options, seed, n, i):
    model = model_from_dict(model_cfg)
    params = cached_phase_parameters(model)
    consts = scaling_constants(params, model.alpha, model.c)
    rng = Rng(seed).derive(n, i)
    s = sample_map(model, n, rng)
    tree, _, vertex = map_to_leaf_tree(s.map)
    H = tree.height
    if n == 1:
        dis = 0.0
        mode = "exact"
    else:
        m = graph_distortion(boundary_looptree_correspondence(vertex), s.map.boundary(),
                             looptree(tree), rng=rng.gen)
        dis, mode = m.value, m.mode
    return {"height": H, "gh_bound": dis / 2, "mode": mode,
            "within_bound": int(dis / 2 <= 2 * H + 1),
            "height_over_bn": H / consts.b_n(n)}


WORKERS = {
    "scaling-diameter": _replica_scaling_diameter,
    "giant-face": _replica_giant_face,
    "boundary-contraction": _replica_boundary,
    "circle-test": _replica_circle,
    "looptree-compare": _replica_looptree,
}


def _run_one(task):
    name, model_cfg, options, seed, n, i = task
    t0 = time.perf_counter()
    row = WORKERS[name](model_cfg, options, seed, n, i)
    return {"n": n, "replica": i, "seed": f"{seed}:{n}:{i}", **row}, time.perf_counter() - t0


def _run_rows(cfg: ExperimentConfig, threads: int):
    tasks = [(cfg.experiment, cfg.model, cfg.options, int(cfg.seed), n, i)
             for n in cfg.sizes for i in range(cfg.replicas)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(_run_one, tasks))
    else:
        done = [_run_one(t) for t in tasks]
    rows = [r for r, _ in done]
    times = [t for _, t in done]
    return rows, times


# ---------------------------------------------------------------------------
# preconditions
# ---------------------------------------------------------------------------

def _model_and_params(cfg):
    try:
        model = model_from_dict(cfg.model)
        params = cached_phase_parameters(model)
    except SeriesError as exc:
        raise ExperimentError(str(exc)) from exc
    return model, params


def _need_regime(params, allowed, name):
    if params.regime not in allowed:
        raise ExperimentError(
            f"wrong regime for {name}: model is {params.regime}, need {' or '.join(allowed)}")


def _need_sizes(cfg, k=3):
    if len(cfg.sizes) < k:
        raise ExperimentError(f"need >= {k} sizes, got {len(cfg.sizes)}")


def preflight(cfg: ExperimentConfig):
    """Raise ExperimentError if the experiment cannot run on this config."""
    model, params = _model_and_params(cfg)
    name = cfg.experiment
    if name in WORKERS and not cfg.sizes:
        raise ExperimentError("empty size grid")
    if name == "scaling-diameter":
        _need_regime(params, ("LooptreeAlpha", "BrownianFinite"), name)
        _need_sizes(cfg)
    elif name == "giant-face":
        # diagnostic runs (options.assert = false) report on any model
        if cfg.options.get("assert", True) and not params.nu_D < 1:
            raise ExperimentError("wrong regime for giant-face: need nu_D < 1")
    elif name == "boundary-contraction":
        _need_regime(params, ("LooptreeAlpha",), name)
        _need_sizes(cfg)
    elif name == "circle-test":
        _need_regime(params, ("Circle",), name)
        if model.kind != "power_law":
            raise ExperimentError("circle-test rescales by the radius r; use a power_law model")
    elif name == "looptree-compare":
        _need_regime(params, ("LooptreeAlpha",), name)
        _need_sizes(cfg, 2)
    return model, params


# ---------------------------------------------------------------------------
# summaries (rows only)
# ---------------------------------------------------------------------------

def summarize(cfg: ExperimentConfig, rows: list):
    """Summary, checks and plotdata of an experiment, from its rows."""
    name = cfg.experiment
    model, params = _model_and_params(cfg)
    tol = cfg.tol
    brng = np.random.default_rng(Rng(cfg.seed).derive(0xB007).integers(0, 2 ** 63))
    summary, checks, plots = {}, {}, {}
    if name == "scaling-diameter":
        sizes, groups = _by_size(rows, "diameter")
        slope, lo, hi = fit_slope(sizes, groups, brng)
        target = 1 / model.alpha if params.regime == "LooptreeAlpha" else 0.5
        med = [float(np.median(g)) for g in groups]
        bsizes, bgroups = _by_size(rows, "boundary_diameter")
        bslope, blo, bhi = fit_slope(bsizes, bgroups, brng)
        summary = {"sizes": sizes, "median_diameter": med, "slope": slope, "slope_ci": [lo, hi],
                   "boundary_slope": bslope, "boundary_slope_ci": [blo, bhi],
                   "predicted_exponent": target, "regime": params.regime}
        checks["slope"] = _check(abs(slope - target) <= tol["slope"], slope,
                                 [target - tol["slope"], target + tol["slope"]])
        plots["log_median_diameter"] = (["log_n", "log_median_diameter"],
                                        np.log(sizes), np.log(med))
    elif name == "giant-face":
        sizes, groups = _by_size(rows, "fraction")
        med = [float(np.median(g)) for g in groups]
        target = 1 - params.nu_D if params.nu_D < 1 else None
        summary = {"sizes": sizes, "median_fraction": med, "predicted_fraction": target,
                   "nu_D": params.nu_D}
        fit = [(n, m) for n, m in zip(sizes, med) if n >= 3]
        if fit and target is not None and cfg.options.get("assert", True):
            n, m = fit[-1]
            rel = abs(m - target) / target
            checks["fraction"] = _check(rel <= tol["giant_rel"], m,
                                        [target * (1 - tol["giant_rel"]), target * (1 + tol["giant_rel"])],
                                        f"median at n={n}; sizes below 3 are excluded")
        plots["median_fraction"] = (["n", "median_fraction"], sizes, med)
    elif name == "boundary-contraction":
        sizes, groups = _by_size(rows, "normalized")
        med = [float(np.median(g)) for g in groups]
        dec = all(b < a for a, b in zip(med, med[1:]))
        worst = max(r["max_penalty_ratio"] for r in rows)
        summary = {"sizes": sizes, "median_normalized_distortion": med,
                   "max_penalty_ratio": worst, "scale": 1 - params.nu_D}
        checks["decreasing"] = _check(dec, med, "strictly decreasing medians")
        checks["penalty_bound"] = _check(worst <= 1.0, worst, "penalty <= 2 |D| for every block",
                                         "exact inequality")
        plots["median_normalized_distortion"] = (["n", "median_normalized_distortion"], sizes, med)
    elif name == "circle-test":
        sizes, groups = _by_size(rows, "rescaled_diameter")
        med = [float(np.median(g)) for g in groups]
        _, ks = _by_size(rows, "ks")
        ks_med = [float(np.median(g)) for g in ks]
        lo, hi = tol["circle_diam_lo"], tol["circle_diam_hi"]
        summary = {"sizes": sizes, "median_rescaled_diameter": med, "median_ks": ks_med,
                   "scale": "(1-r)/(n r)"}
        checks["diameter"] = _check(all(lo <= m <= hi for m in med), med, [lo, hi],
                                    "median at every size")
        checks["ks"] = _check(ks_med[-1] < tol["circle_ks"], ks_med[-1], tol["circle_ks"],
                              f"median KS at n={sizes[-1]}")
        plots["median_rescaled_diameter"] = (["n", "median_rescaled_diameter"], sizes, med)
        plots["median_ks"] = (["n", "median_ks"], sizes, ks_med)
    elif name == "looptree-compare":
        sizes, groups = _by_size(rows, "height_over_bn")
        med = [float(np.median(g)) for g in groups]
        ok = all(r["within_bound"] for r in rows)
        dec = all(b < a for a, b in zip(med, med[1:]))
        summary = {"sizes": sizes, "median_height_over_bn": med,
                   "violations": sum(1 - r["within_bound"] for r in rows)}
        checks["gh_bound"] = _check(ok, summary["violations"], "gh bound <= 2H+1 on every instance",
                                    "exact inequality")
        checks["decreasing"] = _check(dec, med, "strictly decreasing medians")
        plots["median_height_over_bn"] = (["n", "median_height_over_bn"], sizes, med)
    return summary, checks, plots


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    cfg.validate()
    t0 = time.perf_counter()
    if cfg.experiment == "analyze":
        return _analyze(cfg, t0)
    if cfg.experiment == "enumerate":
        return _enumerate(cfg, t0)
    if cfg.experiment == "sample":
        return _sample(cfg, t0)
    preflight(cfg)
    rows, times = _run_rows(cfg, threads)
    summary, checks, plots = summarize(cfg, rows)
    columns = list(rows[0].keys())
    runtime = {"total_seconds": time.perf_counter() - t0,
               "mean_replica_seconds": float(np.mean(times)),
               "per_row_seconds": times}
    return ExperimentReport(cfg.experiment, cfg.hash(), int(cfg.seed), columns, rows,
                            summary, checks, runtime, plots)


def _analyze(cfg, t0):
    model, params = _model_and_params(cfg)
    report = {"model": model.to_dict(), "phase": params.to_dict()}
    if params.regime == "LooptreeAlpha":
        sc = scaling_constants(params, model.alpha, model.c)
        report["scaling"] = {**asdict(sc), "L_n": model.c}
    rows = [{"quantity": k, "value": v} for k, v in params.to_dict().items()]
    return ExperimentReport("analyze", cfg.hash(), int(cfg.seed), ["quantity", "value"], rows,
                            {}, {}, {"total_seconds": time.perf_counter() - t0}, {},
                            extra={"analysis": report})


def _enumerate(cfg, t0):
    model, _ = _model_and_params(cfg)
    what = cfg.options.get("object", "dissections")
    censuses = {}
    for n in cfg.sizes:
        try:
            if what == "dissections":
                c = enumerate_dissections(model, n)
            elif what == "maps":
                c = enumerate_maps(model, n, cfg.options.get("generator", "vertex"))
            else:
                raise ExperimentError(f"unknown object {what!r}")
        except ValueError as exc:
            raise ExperimentError(str(exc)) from exc
        censuses[n] = c
    rows = [{"n": n, "object": json.dumps(e["object"]), "weight": e["weight"]}
            for n, c in censuses.items() for e in c.to_dict()["entries"]]
    summary = {"totals": {n: str(c.total) for n, c in censuses.items()},
               "counts": {n: len(c.entries) for n, c in censuses.items()}}
    rep = ExperimentReport("enumerate", cfg.hash(), int(cfg.seed), ["n", "object", "weight"],
                           rows, summary, {}, {"total_seconds": time.perf_counter() - t0}, {})
    rep.extra["censuses"] = {n: c.to_dict() for n, c in censuses.items()}
    return rep


def _sample(cfg, t0):
    model, _ = _model_and_params(cfg)
    what = cfg.options.get("object", "map")
    rows, samples = [], []
    for n in cfg.sizes:
        for i in range(cfg.replicas):
            rng = Rng(cfg.seed).derive(n, i)
            if what == "map":
                obj = sample_map(model, n, rng).map
                edges = obj.edges()
            elif what == "dissection":
                obj = assemble_dissection(dissection_enriched_tree(model, n, rng))
                edges = obj.edges()
            else:
                raise ExperimentError(f"unknown object {what!r}")
            rows.append({"n": n, "replica": i, "seed": f"{cfg.seed}:{n}:{i}",
                         "vertices": int(edges.max()) + 1 if edges.size else 1,
                         "edges": int(len(edges)),
                         "digest": hashlib.sha256(edges.tobytes()).hexdigest()[:16]})
            samples.append((n, i, obj, edges))
    rep = ExperimentReport("sample", cfg.hash(), int(cfg.seed), list(rows[0].keys()), rows, {}, {},
                           {"total_seconds": time.perf_counter() - t0}, {})
    rep.extra["_samples"] = samples
    return rep


def write_report(rep: ExperimentReport, out: str):
    samples = rep.extra.pop("_samples", None)
    rep.write(out)
    if samples:
        d = os.path.join(out, "samples")
        os.makedirs(d, exist_ok=True)
        for n, i, obj, edges in samples:
            base = os.path.join(d, f"n{n}_r{i}")
            np.savetxt(base + ".csv", edges, fmt="%d", delimiter=",", header="u,v", comments="")
            with open(base + ".json", "w") as fh:
                json.dump(_jsonable(obj.to_dict()), fh)
