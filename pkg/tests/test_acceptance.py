"""Acceptance criteria, each checked at its stated tolerance.

Every criterion adds one PASS/FAIL line to the pytest terminal summary (and
prints it). Statistical criteria that miss their band are re-run with the
model-variant toggles listed in ``TOGGLES`` before the failure is reported.

The full module takes well over an hour on one core. Environment knobs:
``NORMDYN_ACCEPT_RUNS`` (seeds per criterion, default 20),
``NORMDYN_SENS_RUNS`` (seeds per sensitivity re-run, default 8),
``NORMDYN_ACCEPT_JOBS`` (worker processes, default 1).
"""

import math
import os

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from normdyn import parochial as P
from normdyn.agents import AgentKind
from normdyn.config import load_config
from normdyn.dynamics import WorldParams, play_interaction, run_simulation
from normdyn.experiments import run_preset
from normdyn.game_core import (GenerationParams, PayoffBimatrix, generate_payoff_matrix,
                               pure_nash_equilibria)
from normdyn.dynamics import fermi_probability
from normdyn.metrics import gini
from normdyn.output import read_csv
from oracles import brute_nash

RUNS = int(os.environ.get("NORMDYN_ACCEPT_RUNS", 20))
SENS_RUNS = int(os.environ.get("NORMDYN_SENS_RUNS", 8))
JOBS = int(os.environ.get("NORMDYN_ACCEPT_JOBS", 1))

# open-question decisions flipped during sensitivity re-runs
TOGGLES = {
    "opponents=n": {"world.opponents": "n"},
    "gate_mutation=true": {"world.gate_mutation": "true"},
}
# extra variants for criteria that involve HConscious agents
HC_TOGGLES = {
    "ledger_scope=focal": {"world.ledger_scope": "focal"},
    "simulated_human_q=0": {"world.simulated_human_q": "0"},
}

pytestmark = pytest.mark.slow


def record(num, title, ok, detail, sensitivity=()):
    line = f"CRITERION {num} {'PASS' if ok else 'FAIL'} {title}: {detail}"
    for s in sensitivity:
        line += f"\n    sensitivity {s}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def within(x, target, rel=None, abs_=None):
    if x is None or not np.isfinite(x):
        return False
    tol = abs(target) * rel if rel is not None else abs_
    return abs(x - target) <= tol


def preset(name, tmp_path_factory, runs=RUNS, extra=None, **kw):
    sets = [f"runs={runs}", f"jobs={JOBS}"]
    sets += [f"{k}={v}" for k, v in (extra or {}).items()]
    cfg = load_config(overrides=sets, preset=name)
    out = tmp_path_factory.mktemp(name)
    return run_preset(cfg, name, out, **kw)


def sensitivity(name, tmp_path_factory, check, toggles, static=False):
    """Re-run a preset under each toggle; ``check(result) -> (ok, detail)``."""
    lines = []
    for label, extra in toggles.items():
        if static and label.startswith("gate_mutation"):
            lines.append(f"{label}: not applicable (no mutation in static estimates)")
            continue
        ok, detail = check(preset(name, tmp_path_factory, SENS_RUNS, extra))
        lines.append(f"{label} ({SENS_RUNS} seeds): {'pass' if ok else 'fail'}; {detail}")
    return lines


# -- 1 -------------------------------------------------------------------------------

TABLE1 = {"human": (149, 0.17), "nasheq": (150, 0.14), "selfish": (150, 0.14),
          "hconscious": (149, 0.14), "util": (378, 0.08)}


def check_table1(res):
    rows = res.summary["results"]["rows"]
    ok, parts = True, []
    for kind, (fit, g) in TABLE1.items():
        r = rows[kind]
        good = within(r["fitness_mean"], fit, rel=0.05) and within(r["gini_mean"], g, abs_=0.03)
        ok &= good
        parts.append(f"{kind} {r['fitness_mean']:.1f}/{r['gini_mean']:.3f}"
                     f"{'' if good else '(x)'}")
    return ok, ", ".join(parts)


def test_criterion_1_table1(tmp_path_factory):
    ok, detail = check_table1(preset("table1", tmp_path_factory))
    sens = () if ok else sensitivity("table1", tmp_path_factory, check_table1, TOGGLES, True)
    record(1, "homogeneous fitness/Gini (target 149,150,150,149,378 / .17,.14,.14,.14,.08)",
           ok, detail, sens)
    assert ok, detail


# -- 2 -------------------------------------------------------------------------------

def check_fig1(res):
    f = res.summary["results"]["final"]
    sh, fit = f["share_mean"], f["fitness_mean"]
    checks = {
        "selfish share": within(sh["selfish"], 0.54, abs_=0.08),
        "human complement": within(sh["human"], 1 - sh["selfish"], abs_=0.02),
        "gini": within(f["gini_mean"], 0.88, abs_=0.06),
        "selfish fitness": within(fit["selfish"], 370, rel=0.15),
        "human fitness": within(fit["human"], -104, rel=0.15),
    }
    detail = (f"selfish {sh['selfish']:.3f}, human {sh['human']:.3f}, gini {f['gini_mean']:.3f}, "
              f"fit selfish {fit['selfish']}, fit human {fit['human']}, late changes "
              f"{res.summary['results']['late_change_runs']}/{res.summary['results']['runs']}"
              f"; missed: {[k for k, v in checks.items() if not v] or 'none'}")
    return all(checks.values()), detail


def test_criterion_2_fig1(tmp_path_factory):
    ok, detail = check_fig1(preset("fig1", tmp_path_factory))
    sens = () if ok else sensitivity("fig1", tmp_path_factory, check_fig1, TOGGLES)
    record(2, "Fig.1 end state (target 54% selfish, gini .88, fit 370/-104)", ok, detail, sens)
    assert ok, detail


# -- 3 -------------------------------------------------------------------------------

def check_fig2(res):
    c = res.summary["results"]["curves"]
    util_ok = c["util"]["all_interior_negative"]
    drops = {}
    for kind in ("selfish", "nasheq"):
        drops[kind] = c[kind]["tau_drop"] is not None
    stable = [x for x in c["hconscious"]["crossings"] if x["stable"]]
    hc_frac = stable[0]["frac"] if stable else None
    hc_ok = hc_frac is not None and abs(hc_frac - 0.40) <= 0.05
    detail = (f"util all negative {util_ok}, tau drop selfish {drops['selfish']} "
              f"at {(c['selfish']['tau_drop'] or {}).get('frac')}, nasheq {drops['nasheq']} "
              f"at {(c['nasheq']['tau_drop'] or {}).get('frac')}, hconscious stable crossing "
              f"{'none' if hc_frac is None else f'{hc_frac:.3f}'}")
    return util_ok and all(drops.values()) and hc_ok, detail


def test_criterion_3_fig2(tmp_path_factory):
    ok, detail = check_fig2(preset("fig2", tmp_path_factory))
    sens = () if ok else sensitivity("fig2", tmp_path_factory, check_fig2,
                                     {**TOGGLES, **HC_TOGGLES}, True)
    record(3, "gradient structure (util<0, tau drops, hconscious crossing 0.40)", ok, detail,
           sens)
    assert ok, detail


# -- 4 -------------------------------------------------------------------------------

TABLE2 = {"nasheq": (0.60, 38, 229, 152, 0.38), "selfish": (0.25, 31, 510, 151, 0.70),
          "hconscious": (0.40, 172, 168, 170, 0.15)}


def check_table2(res):
    rows = res.summary["results"]["rows"]
    ok, parts = True, []
    for kind, (frac, h, a, tot, g) in TABLE2.items():
        r = rows[kind]
        good = (within(r["h_mean"], h, rel=0.15) and within(r["ai_mean"], a, rel=0.15)
                and within(r["total_mean"], tot, rel=0.15) and within(r["gini_mean"], g, abs_=0.05))
        ok &= good
        fmt = lambda v: "nan" if v is None or not np.isfinite(v) else f"{v:.0f}"
        parts.append(f"{kind}@{r['frac_ai']:.2f}({r['source']}) H {fmt(r['h_mean'])} "
                     f"AI {fmt(r['ai_mean'])} tot {fmt(r['total_mean'])} "
                     f"gini {r['gini_mean']:.2f}{'' if good else ' (x)'}")
    return ok, "; ".join(parts)


def test_criterion_4_table2(tmp_path_factory):
    ok, detail = check_table2(preset("table2", tmp_path_factory))
    sens = () if ok else sensitivity("table2", tmp_path_factory, check_table2,
                                     {**TOGGLES, **HC_TOGGLES}, True)
    record(4, "equilibrium rows (target NashEQ 60%, Selfish 25%, HConscious 40%)", ok, detail,
           sens)
    assert ok, detail


# -- 5 -------------------------------------------------------------------------------

def check_fig3(res):
    r = res.summary["results"]
    x = r["crossover_frac"]
    ok = r["selfish_decreasing"] and r["util_increasing"] and x is not None and 0.70 <= x <= 0.85
    return ok, (f"selfish decreasing {r['selfish_decreasing']}, util increasing "
                f"{r['util_increasing']}, crossover {x if x is None else round(x, 3)}")


def test_criterion_5_fig3(tmp_path_factory):
    res = preset("fig3", tmp_path_factory)
    ok, detail = check_fig3(res)
    for kind in ("selfish", "util"):
        rows = read_csv(res.out_dir / f"fig3_gradient_{kind}.csv")[2]
        detail += f"; f_ai {kind} " + " ".join(r["f_ai"][:6] for r in rows[1::4])
    sens = () if ok else sensitivity("fig3", tmp_path_factory, check_fig3, TOGGLES, True)
    record(5, "A.I. fitness vs share (selfish down, util up, crossover 70-85%)", ok, detail,
           sens)
    assert ok, detail


# -- 6 -------------------------------------------------------------------------------

def check_fig4(res):
    f = res.summary["results"]["final"]
    sh = f["share_mean"]["selfish"]
    spike = f["gini_peak_mean"] - f["gini_mean"]
    checks = {"selfish share": within(sh, 0.89, abs_=0.08),
              "gini": within(f["gini_mean"], 0.14, abs_=0.04),
              "transient spike": spike > 0.05}
    detail = (f"selfish {sh:.3f}, gini {f['gini_mean']:.3f}, peak {f['gini_peak_mean']:.3f} "
              f"at {f['gini_peak_iteration']}, late changes "
              f"{res.summary['results']['late_change_runs']}/{res.summary['results']['runs']}"
              f"; missed: {[k for k, v in checks.items() if not v] or 'none'}")
    return all(checks.values()), detail


def test_criterion_6_fig4(tmp_path_factory):
    ok, detail = check_fig4(preset("fig4", tmp_path_factory))
    sens = () if ok else sensitivity("fig4", tmp_path_factory, check_fig4, TOGGLES)
    record(6, "no-cost regime (target 89% selfish, gini .14)", ok, detail, sens)
    assert ok, detail


# -- 7 -------------------------------------------------------------------------------

def test_criterion_7_parochial():
    rng = np.random.default_rng(2024)
    pts = rng.random((1000, 3)) * np.array([1.0, 0.999, 0.999])
    resid = max(P.difference_matrix_residual(b, n1, n2) for b, n1, n2 in pts)
    below = rng.random((1000, 3)) * np.array([1.0, 0.4999, 0.4999])
    dd = all(P.is_dd_nash(b, n1, n2).holds for b, n1, n2 in below)
    ident = 0.0
    for (b, n, _), c in zip(pts, rng.random(1000)):
        a = P.ai_advantage(b, n, n, c)
        ident = max(ident, abs(a.difference - (4 * b - 2) * n * c),
                    abs(a.delta_u1 - a.delta_u2 - (4 * b - 2) * n * c))
    half = max(abs(P.ai_advantage(0.5, n, n, c).difference) for (_, n, c) in pts)
    ok = resid <= 1e-12 and dd and ident <= 1e-12 and half <= 1e-12
    record(7, "parochial exactness", ok,
           f"max matrix residual {resid:.1e}, D-D Nash below 0.5 {dd}, "
           f"identity error {ident:.1e}, b=0.5 difference {half:.1e}")
    assert ok


# -- 8 -------------------------------------------------------------------------------

def test_criterion_8_properties():
    rng = np.random.default_rng(8)
    res = {}
    p = WorldParams(n=2, alpha=1.0)
    from normdyn.agents import Individual
    kinds = list(AgentKind)
    zs = True
    for _ in range(2000):
        a = Individual.new(kinds[rng.integers(5)], rng)
        b = Individual.new(kinds[rng.integers(5)], rng)
        u1, u2 = play_interaction(a, b, p, rng)
        g = generate_payoff_matrix(GenerationParams(alpha=1.0), rng)
        zs &= u1 + u2 == 0.0 and bool(np.all(g.u1 + g.u2 == 0.0))
    res["zero-sum at alpha=1"] = zs

    gok = True
    for _ in range(500):
        v = rng.random(int(rng.integers(1, 200))) * rng.choice([1e-3, 1.0, 1e4])
        g = gini(v)
        gok &= 0.0 <= g < 1.0 and math.isclose(gini(v * 7.5), g, abs_tol=1e-9) \
            and math.isclose(gini(rng.permutation(v)), g, abs_tol=1e-12)
    res["gini range/scale/permutation"] = gok

    nok = True
    for _ in range(10_000):
        m = int(rng.integers(2, 5))
        c = rng.integers(-3, 4, size=(m, m, 2)).astype(float)
        nok &= [tuple(e) for e in pure_nash_equilibria(PayoffBimatrix(c))] == brute_nash(c.tolist())
    res["nash vs brute force (1e4 games)"] = nok

    fx, fy = rng.normal(0, 200, 1000), rng.normal(0, 200, 1000)
    res["fermi antisymmetry"] = all(
        math.isclose(fermi_probability(a, b, 0.1) + fermi_probability(b, a, 0.1), 1.0)
        for a, b in zip(fx, fy))

    q = WorldParams(n=40, iterations=500, mu=0.01, seed=99)
    t1, t2 = run_simulation(q, 50), run_simulation(q, 50)
    res["seed determinism"] = all(np.array_equal(getattr(t1, a), getattr(t2, a), equal_nan=True)
                                  for a in ("counts", "fitness", "fit_total", "gini"))
    ok = all(res.values())
    record(8, "property suite", ok, ", ".join(f"{k} {v}" for k, v in res.items()))
    assert ok
