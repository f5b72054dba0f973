import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from normdyn import kernels as K
from normdyn.agents import AgentKind
from normdyn.dynamics import (FREE, StepEvent, World, WorldParams, advance, default_composition,
                              fermi_probability, round_robin_fitness, run_simulation, step)

H, SELF, HC = AgentKind.HUMAN, AgentKind.SELFISH, AgentKind.HCONSCIOUS

# frozen from a reference run; guards the random-draw order
GOLDEN_COUNTS = [[27, 1, 1, 1, 0], [28, 0, 1, 0, 1], [29, 0, 1, 0, 0], [28, 0, 2, 0, 0]]
GOLDEN_FIT_TOTAL = [7.052993390150581, 9.429147800568282, 8.475080153884642,
                    10.217572749359329]


class TestParams:
    def test_defaults(self):
        p = WorldParams()
        assert (p.n, p.m, p.alpha, p.beta, p.mu, p.price) == (500, 4, 1.2, 0.1, 0.0005, 37)

    def test_default_composition(self):
        c = default_composition(500, tuple(AgentKind))
        assert c[H] == 450 and sum(c.values()) == 500
        assert sorted(c[k] for k in AgentKind if k.is_ai) == [12, 12, 13, 13]
        c = default_composition(500, (H, SELF))
        assert c[SELF] == 50

    @pytest.mark.parametrize("kw, msg", [
        (dict(mu=1.5), "mu must lie in [0,1]"),
        (dict(beta=0), "beta"),
        (dict(n=1), "n must"),
        (dict(initial_composition={H: 10}), "sums to 10"),
        (dict(enabled_kinds=(SELF,)), "human"),
        (dict(q_h_max=11), "q range"),
        (dict(opponents="all"), "opponents"),
    ])
    def test_invalid(self, kw, msg):
        with pytest.raises(ValueError, match=msg.replace("[", r"\[").replace("]", r"\]")):
            WorldParams(**kw)

    def test_digest_tracks_changes(self):
        assert WorldParams().digest() == WorldParams().digest()
        assert WorldParams().digest() != WorldParams(alpha=1.0).digest()
        assert WorldParams(price=FREE).to_dict()["price"] == "free"


class TestFermi:
    def test_values(self):
        assert fermi_probability(3.0, 3.0, 0.1) == 0.5
        assert fermi_probability(0.0, 10.0, 0.1) == pytest.approx(1 / (1 + math.e ** -1), abs=1e-6)
        assert fermi_probability(0.0, 1e6, 0.1) == 1.0
        assert fermi_probability(1e6, 0.0, 0.1) == 0.0

    @given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(1e-3, 10))
    def test_antisymmetry(self, fx, fy, beta):
        assert fermi_probability(fx, fy, beta) + fermi_probability(fy, fx, beta) == pytest.approx(1.0)


class TestSimulation:
    def test_golden_trace(self):
        t = run_simulation(WorldParams(n=30, iterations=300, seed=7, mu=0.01), record_every=100)
        assert t.iterations.tolist() == [0, 100, 200, 300]
        assert t.counts.tolist() == GOLDEN_COUNTS
        assert t.fit_total.tolist() == GOLDEN_FIT_TOTAL

    def test_empty_run(self):
        p = WorldParams(n=40, iterations=0)
        t = run_simulation(p, record_every=10)
        assert len(t) == 1
        assert t.counts[0].tolist() == [p.composition()[k] for k in AgentKind]
        assert not t.late_change

    def test_seed_determinism(self):
        p = WorldParams(n=30, iterations=400, seed=3, mu=0.01)
        a, b = run_simulation(p, 50), run_simulation(p, 50)
        for attr in ("iterations", "counts", "fitness", "fit_total", "gini"):
            np.testing.assert_array_equal(getattr(a, attr), getattr(b, attr))
        assert a.events == b.events
        c = run_simulation(p.replace(seed=4), 50)
        assert not np.array_equal(a.fit_total, c.fit_total)

    def test_stride_does_not_change_trajectory(self):
        p = WorldParams(n=30, iterations=400, seed=3, mu=0.01)
        a, b = run_simulation(p, 400), run_simulation(p, 37)
        assert a.counts[-1].tolist() == b.counts[-1].tolist()
        assert a.events == b.events

    def test_forced_mutation_is_uniform(self):
        p = WorldParams(n=1000, mu=1.0, iterations=100_000, price=FREE, seed=1)
        t = run_simulation(p, measure=False)
        assert t.events["mutation"] == 100_000
        counts = t.counts[-1]
        expected = 1000 / 5
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 18.47  # 4 dof, p = 0.001

    def test_mutation_respects_enabled_kinds(self):
        p = WorldParams(n=200, mu=1.0, iterations=5000, enabled_kinds=(H, HC), seed=2)
        t = run_simulation(p, measure=False)
        c = t.counts[-1]
        assert c[H] + c[HC] == 200 and c[H] > 0 and c[HC] > 0

    def test_cost_gate_blocks_adoption(self):
        p = WorldParams(n=20, mu=0.0, price=1e9, iterations=400, seed=5,
                        initial_composition={H: 19, SELF: 1})
        t = run_simulation(p, record_every=1, measure=False)
        humans = t.counts[:, H]
        assert np.all(np.diff(humans) >= 0)
        assert t.events["imitation"] == 0 or humans[-1] >= 19

    def test_imitation_follows_fermi(self):
        # two agents of different kinds: agent 0 converts with prob 0.5 * p(f0, f1)
        p = WorldParams(n=2, mu=0.0, price=FREE, initial_composition={H: 1, SELF: 1})
        rng = np.random.default_rng(0)
        hits, expect, var = 0, 0.0, 0.0
        for _ in range(10_000):
            w = World(p, [int(H), int(SELF)], rng=rng, measure_rng=rng)
            ev = step(w)
            f0, f1 = w.fitness
            q = 0.5 * fermi_probability(f0, f1, p.beta)
            expect += q
            var += q * (1 - q)
            hits += ev is StepEvent.IMITATION and w.kinds[0] == int(SELF)
        assert abs(hits - expect) < 4 * math.sqrt(var)

    def test_advance_matches_step(self):
        p = WorldParams(n=30, mu=0.01, seed=9)
        a, b = World.from_params(p), World.from_params(p)
        advance(a, 200)
        for _ in range(200):
            step(b)
        np.testing.assert_array_equal(a.kinds, b.kinds)
        np.testing.assert_array_equal(a.fitness, b.fitness)
        assert a.events.tolist() == b.events.tolist()


class TestFitness:
    def test_opponent_count_scaling(self):
        p = WorldParams(n=25, seed=1)
        w1 = World.from_params(p)
        w2 = World.from_params(p.replace(opponents="n"))
        f1 = round_robin_fitness(w1, 3, np.random.default_rng(4))
        f2 = round_robin_fitness(w2, 3, np.random.default_rng(4))
        assert f2 == pytest.approx(f1 * 25 / 24)

    def test_population_fitness_keeps_ledgers(self):
        p = WorldParams(n=30, seed=2, initial_composition={H: 20, HC: 10})
        w = World.from_params(p)
        w.population_fitness()
        assert not w.led_u.any() and not w.led_e.any()

    @pytest.mark.parametrize("scope, moved", [("all", True), ("focal", False)])
    def test_ledger_scope(self, scope, moved):
        p = WorldParams(n=30, seed=2, initial_composition={H: 20, HC: 10}, ledger_scope=scope)
        w = World.from_params(p)
        human = int(np.flatnonzero(w.kinds == int(H))[0])
        round_robin_fitness(w, human)
        assert bool(w.led_u.any()) is moved
        hc = int(np.flatnonzero(w.kinds == int(HC))[0])
        round_robin_fitness(w, hc)
        assert w.led_u[hc] != 0.0

    def test_fitness_samples_average(self):
        p = WorldParams(n=20, seed=1, fitness_samples=3)
        w = World.from_params(p)
        f = round_robin_fitness(w, 0, np.random.default_rng(0))
        q = WorldParams(n=20, seed=1)
        w2 = World.from_params(q)
        rng = np.random.default_rng(0)
        fs = [round_robin_fitness(w2, 0, rng) for _ in range(3)]
        assert f == pytest.approx(np.mean(fs))

    def test_conversion_resets_state(self):
        p = WorldParams(n=10, seed=0)
        w = World.from_params(p)
        w.led_u[:] = 5.0
        K.convert(w.rng, w.kp, w.kinds, w.qs, w.led_u, w.led_e, 0, int(HC))
        assert w.led_u[0] == 0.0 and w.qs[0] == 10.0
        K.convert(w.rng, w.kp, w.kinds, w.qs, w.led_u, w.led_e, 0, int(H))
        assert 0.0 <= w.qs[0] <= 5.0
