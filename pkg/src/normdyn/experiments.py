"""Presets that regenerate each table and figure, run over many seeds."""

from __future__ import annotations

import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import metrics as M
from . import output as O
from . import parochial as P
from .agents import AgentKind
from .config import ExperimentConfig
from .dynamics import World, WorldParams, run_simulation
from .metrics import GradientCurve, GradientEstimate, gini

TABLE1_ORDER = (AgentKind.HUMAN, AgentKind.NASHEQ, AgentKind.SELFISH,
                AgentKind.HCONSCIOUS, AgentKind.UTILITARIAN)
TABLE2_ORDER = (AgentKind.NASHEQ, AgentKind.SELFISH, AgentKind.HCONSCIOUS,
                AgentKind.UTILITARIAN)


@dataclass
class PresetResult:
    name: str
    out_dir: Path
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


class _Outputs:
    """Tracks written files so a failed preset leaves nothing behind."""

    def __init__(self, out_dir: Path, prefix: str):
        self.dir = Path(out_dir)
        self.prefix = prefix
        self.files: list[Path] = []
        self._made_dir = not self.dir.exists()

    def path(self, name: str) -> Path:
        p = self.dir / f"{self.prefix}_{name}"
        self.files.append(p)
        return p

    def discard(self) -> None:
        for p in self.files:
            p.unlink(missing_ok=True)
        if self._made_dir:
            try:
                self.dir.rmdir()
            except OSError:
                pass


# -- workers (top level so they pickle) -----------------------------------------

def _sim_task(params: WorldParams, record_every):
    return run_simulation(params, record_every=record_every)


def _homogeneous_task(params: WorldParams, kind: AgentKind):
    p = params.replace(initial_composition={kind: params.n},
                       enabled_kinds=tuple(dict.fromkeys((AgentKind.HUMAN, kind))))
    f = World.from_params(p).population_fitness()
    return float(f.mean()), gini(f)


def _curve_task(kind, params: WorldParams, k_grid, samples, warmup):
    return list(M.gradient_curve(kind, params, k_grid, samples=samples, warmup=warmup))


def _static_task(params: WorldParams, kind, k, warmup):
    ss = np.random.SeedSequence(params.seed, spawn_key=(7, int(kind), int(k)))
    world = World.static(params, kind, k, np.random.default_rng(ss))
    M._focal_means(world, k, warmup, 0)
    f = world.population_fitness()
    human = world.kinds == int(AgentKind.HUMAN)
    return {
        "h": float(f[human].mean()) if human.any() else np.nan,
        "ai": float(f[~human].mean()) if (~human).any() else np.nan,
        "total": float(f.mean()),
        "gini": gini(f),
    }


def _map(fn, tasks, jobs, label=None, progress=False):
    tasks = list(tasks)
    out = []
    if jobs <= 1 or len(tasks) <= 1:
        for i, t in enumerate(tasks, 1):
            out.append(fn(*t))
            if progress:
                print(f"[{label}] {i}/{len(tasks)}", file=sys.stderr, flush=True)
        return out
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(fn, *t) for t in tasks]
        for i, fut in enumerate(futures, 1):
            out.append(fut.result())
            if progress:
                print(f"[{label}] {i}/{len(tasks)}", file=sys.stderr, flush=True)
    return out


# -- aggregation ------------------------------------------------------------------

def _nanstats(a, axis=0):
    a = np.asarray(a, dtype=np.float64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmean(a, axis=axis), np.nanstd(a, axis=axis)


def mean_curve(curves, ai_kind) -> GradientCurve:
    """Average per-seed gradient curves point by point and relocate crossings."""
    est = []
    for pts in zip(*curves):
        k = pts[0].k
        if any(p.k != k for p in pts):
            raise ValueError("curves use different k grids")
        m = {a: _nanstats([getattr(p, a) for p in pts])[0]
             for a in ("t_plus", "t_minus", "g", "f_h_mean", "f_ai_mean")}
        est.append(GradientEstimate(k, pts[0].n, AgentKind(ai_kind), float(m["t_plus"]),
                                    float(m["t_minus"]), float(m["g"]), float(m["f_h_mean"]),
                                    float(m["f_ai_mean"]), sum(p.samples for p in pts)))
    return GradientCurve(est, M.zero_crossings(est))


def tau_drop(curve: GradientCurve, price: float, window: int = 2):
    """First point where G collapses because humans can no longer pay ``price``.

    A collapse is G falling from at least half its interior maximum to at most
    a tenth of it within ``window`` grid steps, landing where the mean human
    fitness is below the price. Returns None if there is none.
    """
    interior = [e for e in curve if 0 < e.k < e.n]
    if not interior:
        return None
    gmax = max(e.g for e in interior)
    if gmax <= 0:
        return None
    for i, e in enumerate(interior):
        before = interior[max(0, i - window):i]
        if (e.g <= 0.1 * gmax and e.f_h_mean < price
                and any(p.g >= 0.5 * gmax for p in before)):
            top = max(p.g for p in before)
            return {"frac": e.frac_ai, "g_before": top, "g_after": e.g, "size": top - e.g}
    return None


def curve_summary(curve: GradientCurve, price: float) -> dict:
    interior = [e for e in curve if 0 < e.k < e.n]
    return {
        "crossings": [{"k_star": c.k_star, "frac": c.frac, "stable": c.stable}
                      for c in curve.crossings],
        "all_interior_negative": all(e.g < 0 for e in interior),
        "g_max": max(e.g for e in interior) if interior else None,
        "g_min": min(e.g for e in interior) if interior else None,
        "tau_drop": tau_drop(curve, price),
    }


def aggregate_traces(traces):
    """Mean and std over seeds of counts, fitness and Gini at each record."""
    its = traces[0].iterations
    if any(not np.array_equal(t.iterations, its) for t in traces):
        raise ValueError("traces are recorded at different iterations")
    stack = lambda attr: np.stack([np.asarray(getattr(t, attr), dtype=np.float64)
                                   for t in traces])
    out = {}
    for attr in ("counts", "fitness", "fit_total", "gini"):
        out[attr] = _nanstats(stack(attr))
    return its, out


class _MeanTrace:
    def __init__(self, its, counts, fitness, fit_total, g):
        self.iterations, self.counts, self.fitness = its, counts, fitness
        self.fit_total, self.gini = fit_total, g

    def __len__(self):
        return len(self.iterations)


# -- presets ----------------------------------------------------------------------

def _header(cfg: ExperimentConfig, name: str, extra=()):
    return [f"normdyn = {__version__}", f"preset = {name}", *cfg.lines(),
            f"seeds = {', '.join(map(str, cfg.seeds()))}", *extra]


def _seed_params(cfg: ExperimentConfig):
    return [cfg.world.replace(seed=s) for s in cfg.seeds()]


def _run_traces(cfg, name, out, progress):
    record = cfg.record_every or max(cfg.world.iterations // 20, 1)
    traces = _map(_sim_task, [(p, record) for p in _seed_params(cfg)], cfg.jobs,
                  name, progress)
    for t in traces:
        O.emit_trace(t, out.path(f"trace_seed{t.seed}.csv"),
                     _header(cfg, name, [f"seed = {t.seed}", f"params_hash = {t.params_hash}"]))
    its, agg = aggregate_traces(traces)
    (cm, cs), (fm, fs), (tm, ts), (gm, gs) = (agg[a] for a in
                                             ("counts", "fitness", "fit_total", "gini"))
    O.emit_trace(_MeanTrace(its, cm, fm, tm, gm), out.path("trace_mean.csv"),
                 _header(cfg, name, ["aggregate = mean over seeds"]))
    O.emit_trace(_MeanTrace(its, cs, fs, ts, gs), out.path("trace_std.csv"),
                 _header(cfg, name, ["aggregate = std over seeds"]))
    labels = [k.label for k in AgentKind]
    shares = np.stack([t.final_shares() for t in traces])
    sm, ss = _nanstats(shares)
    finals = {
        "share_mean": dict(zip(labels, sm)), "share_std": dict(zip(labels, ss)),
        "fitness_mean": dict(zip(labels, fm[-1])), "fitness_std": dict(zip(labels, fs[-1])),
        "fit_total_mean": tm[-1], "gini_mean": gm[-1], "gini_std": gs[-1],
        "gini_peak_mean": float(np.nanmax(gm)),
        "gini_peak_iteration": int(its[int(np.nanargmax(gm))]) if np.isfinite(gm).any() else None,
    }
    return {
        "final": finals,
        "late_change_runs": sum(t.late_change for t in traces),
        "runs": len(traces),
        "events": {k: sum(t.events[k] for t in traces) for k in traces[0].events},
        "per_seed": [{"seed": t.seed, "final_counts": dict(zip(labels, t.counts[-1])),
                      "late_change": t.late_change} for t in traces],
    }


def _run_table1(cfg, name, out, progress):
    tasks = [(p, kind) for kind in TABLE1_ORDER for p in _seed_params(cfg)]
    res = _map(_homogeneous_task, tasks, cfg.jobs, name, progress)
    rows, summary = [], {}
    for i, kind in enumerate(TABLE1_ORDER):
        chunk = np.array(res[i * cfg.runs:(i + 1) * cfg.runs])
        fm, fs = chunk[:, 0].mean(), chunk[:, 0].std()
        gm, gs = chunk[:, 1].mean(), chunk[:, 1].std()
        rows.append([kind.label, cfg.runs, fm, fs, gm, gs])
        summary[kind.label] = {"fitness_mean": fm, "fitness_std": fs,
                               "gini_mean": gm, "gini_std": gs}
    O.write_csv(out.path("table1.csv"),
                ["population", "runs", "fitness_mean", "fitness_std", "gini_mean", "gini_std"],
                rows, _header(cfg, name))
    return {"rows": summary}


def _curves(cfg, kinds, grid, name, progress):
    tasks = [(kind, p, grid, cfg.samples, cfg.warmup)
             for kind in kinds for p in _seed_params(cfg)]
    res = _map(_curve_task, tasks, cfg.jobs, name, progress)
    return {kind: mean_curve(res[i * cfg.runs:(i + 1) * cfg.runs], kind)
            for i, kind in enumerate(kinds)}


def _ai_kinds(cfg):
    if cfg.kinds:
        return tuple(cfg.kinds)
    return tuple(k for k in cfg.world.enabled_kinds if k.is_ai)


def _run_gradient(cfg, name, out, progress, kinds=None, points=21):
    kinds = kinds or _ai_kinds(cfg)
    grid = list(cfg.k_grid) if cfg.k_grid else M.default_k_grid(cfg.world.n, points)
    curves = _curves(cfg, kinds, grid, name, progress)
    summary = {}
    for kind, curve in curves.items():
        fname = f"{kind.label}.csv" if name == "gradient" else f"gradient_{kind.label}.csv"
        O.emit_gradient(curve, out.path(fname), _header(cfg, name, [f"ai_kind = {kind.label}"]))
        summary[kind.label] = curve_summary(curve, cfg.world.price)
    return {"curves": summary, "k_grid": grid}, curves


def fitness_crossover(selfish: GradientCurve, util: GradientCurve):
    """First share where Utilitarian A.I. fitness overtakes Selfish A.I. fitness."""
    pts = [(s.frac_ai, u.f_ai_mean - s.f_ai_mean) for s, u in zip(selfish, util)
           if s.k > 0 and np.isfinite(u.f_ai_mean - s.f_ai_mean)]
    for (x0, d0), (x1, d1) in zip(pts, pts[1:]):
        if d0 <= 0 < d1:
            return x0 + (x1 - x0) * (-d0) / (d1 - d0) if d1 != d0 else x0
    return None


def _strict_trend(values, sign):
    v = [x for x in values if np.isfinite(x)]
    return all(sign * (b - a) > 0 for a, b in zip(v, v[1:]))


def _run_fig3(cfg, name, out, progress):
    kinds = (AgentKind.SELFISH, AgentKind.UTILITARIAN)
    summary, curves = _run_gradient(cfg, name, out, progress, kinds)
    s, u = curves[AgentKind.SELFISH], curves[AgentKind.UTILITARIAN]
    summary.update({
        "selfish_decreasing": _strict_trend([e.f_ai_mean for e in s if e.k > 0], -1),
        "util_increasing": _strict_trend([e.f_ai_mean for e in u if e.k > 0], +1),
        "crossover_frac": fitness_crossover(s, u),
    })
    return summary


def equilibrium_k(curve: GradientCurve) -> tuple[int, str]:
    """Composition read off a gradient curve: first stable crossing, else a boundary."""
    stable = curve.stable_crossings()
    n = curve[0].n
    if stable:
        return int(round(stable[0].k_star)), "crossing"
    interior = [e for e in curve if 0 < e.k < n]
    if interior and all(e.g <= 0 for e in interior):
        return 0, "boundary"
    if interior and all(e.g > 0 for e in interior):
        return n, "boundary"
    return 0, "none"


def _run_table2(cfg, name, out, progress):
    kinds = cfg.kinds or TABLE2_ORDER
    grid = list(cfg.k_grid) if cfg.k_grid else M.default_k_grid(cfg.world.n, 41)
    curves = _curves(cfg, kinds, grid, name, progress)
    for kind, curve in curves.items():
        O.emit_gradient(curve, out.path(f"gradient_{kind.label}.csv"),
                        _header(cfg, name, [f"ai_kind = {kind.label}"]))
    picks = {kind: equilibrium_k(c) for kind, c in curves.items()}
    tasks = [(p, kind, picks[kind][0], cfg.warmup) for kind in kinds for p in _seed_params(cfg)]
    res = _map(_static_task, tasks, cfg.jobs, name, progress)
    rows, summary = [], {}
    for i, kind in enumerate(kinds):
        chunk = res[i * cfg.runs:(i + 1) * cfg.runs]
        k, how = picks[kind]
        stats = {a: _nanstats([r[a] for r in chunk]) for a in ("h", "ai", "total", "gini")}
        rows.append([kind.label, k, k / cfg.world.n, how,
                     *[stats[a][0] for a in ("h", "ai", "total", "gini")],
                     *[stats[a][1] for a in ("h", "ai", "total", "gini")]])
        summary[kind.label] = {"k": k, "frac_ai": k / cfg.world.n, "source": how,
                               **{f"{a}_mean": stats[a][0] for a in stats},
                               **{f"{a}_std": stats[a][1] for a in stats}}
    O.write_csv(out.path("table2.csv"),
                ["ai_kind", "k", "frac_ai", "source", "h_mean", "ai_mean", "total_mean",
                 "gini_mean", "h_std", "ai_std", "total_std", "gini_std"],
                rows, _header(cfg, name))
    return {"rows": summary, "curves": {k.label: curve_summary(c, cfg.world.price)
                                        for k, c in curves.items()}}


def _run_fig5(cfg, name, out, progress):
    par = cfg.parochial
    pd = np.array(par.pd, dtype=np.float64).reshape(2, 2)
    P.check_pd(pd)
    rows = P.fig5_curves(par.b_values, par.n, par.c_grid)
    O.emit_parochial(rows, out.path("curves.csv"), _header(cfg, name))
    rng = np.random.default_rng(cfg.seed_base)
    pts = rng.random((par.grid_points, 3)) * np.array([1.0, 0.5, 0.5])
    resid = max(P.difference_matrix_residual(b, n1, n2) for b, n1, n2 in pts)
    dd = all(P.is_dd_nash(b, n1, n2, pd).holds for b, n1, n2 in pts)
    ident = max(abs(a.delta_u1 - a.delta_u2 - a.difference)
                for a in (P.ai_advantage(b, n1, n2, c)
                          for (b, n1, n2), c in zip(pts, rng.random(par.grid_points))))
    return {"eq14_max_residual": resid, "dd_nash_all": dd,
            "advantage_identity_max_error": ident, "rows": len(rows)}


_RUNNERS = {
    "table1": _run_table1,
    "fig1": _run_traces,
    "fig4": _run_traces,
    "custom": _run_traces,
    "simulate": _run_traces,
    "fig2": _run_gradient,
    "gradient": _run_gradient,
    "fig3": _run_fig3,
    "table2": _run_table2,
    "fig5": _run_fig5,
    "parochial": _run_fig5,
}


def run_preset(cfg: ExperimentConfig, name: str | None = None, out_dir=None,
               progress: bool = False) -> PresetResult:
    """Run preset ``name`` (default ``cfg.experiment``) and write its outputs.

    Files go to ``out_dir`` (default ``cfg.output``) as ``<name>_*.csv`` plus
    ``<name>_summary.json``. On any error the files written so far are removed.
    """
    name = name or cfg.experiment
    if name not in _RUNNERS:
        raise ValueError(f"unknown preset {name!r}")
    out = _Outputs(Path(out_dir or cfg.output), name)
    try:
        result = _RUNNERS[name](cfg, name, out, progress)
        if isinstance(result, tuple):
            result = result[0]
        summary = {"preset": name, "config": cfg.lines(), "seeds": cfg.seeds(),
                   "results": result}
        O.write_json(out.path("summary.json"), summary)
    except BaseException:
        out.discard()
        raise
    return PresetResult(name, out.dir, list(out.files), summary)
