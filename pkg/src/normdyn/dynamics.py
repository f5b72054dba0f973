"""Population process: pairing, mutation, round-robin fitness, Fermi imitation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum

import numpy as np

from . import kernels as K
from .agents import AI_KINDS, AgentKind, HConsciousLedger, Individual
from .game_core import GenerationParams, PayoffBimatrix
from .metrics import gini

FREE = -math.inf


class StepEvent(Enum):
    NOOP = K.EV_NOOP
    MUTATION = K.EV_MUTATION
    IMITATION = K.EV_IMITATION
    BLOCKED = K.EV_BLOCKED


@dataclass
class WorldParams:
    n: int = 500
    m: int = 4
    alpha: float = 1.2
    beta: float = 0.1
    mu: float = 0.0005
    # adoption cost; FREE (-inf) disables the gate
    price: float = 37.0
    q_h_min: float = 0.0
    q_h_max: float = 5.0
    noise_base: float = 10.0
    r_bound: float = 3.0
    z_bound: float = 2.0
    iterations: int = 20000
    enabled_kinds: tuple = tuple(AgentKind)
    # counts per kind; None -> 90% humans, 10% split over enabled A.I. kinds
    initial_composition: dict | None = None
    fitness_samples: int = 1
    seed: int = 0
    # model variants kept for sensitivity runs
    opponents: str = "n-1"            # "n-1" or "n" (sum rescaled by n/(n-1))
    gate_mutation: bool = False       # apply the cost gate to mutations too
    ledger_scope: str = "all"         # "all" or "focal"
    simulated_human_q: float | None = None
    counterfactual: str = "realized"  # or "resimulated"

    def __post_init__(self):
        self.enabled_kinds = tuple(AgentKind(k) for k in self.enabled_kinds)
        if self.initial_composition is not None:
            self.initial_composition = {AgentKind(k): int(v)
                                        for k, v in self.initial_composition.items()}
        self.validate()

    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        GenerationParams(self.m, self.alpha, self.r_bound, self.z_bound)
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0,1]")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.q_h_min <= self.q_h_max <= self.noise_base:
            raise ValueError("q range must satisfy q_h_min <= q_h_max <= noise_base")
        if self.q_h_min < 0:
            raise ValueError("q_h_min must be non-negative")
        if math.isnan(self.price) or self.price == math.inf:
            raise ValueError("price must be a real number or 'free'")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.fitness_samples < 1:
            raise ValueError("fitness_samples must be >= 1")
        if AgentKind.HUMAN not in self.enabled_kinds:
            raise ValueError("enabled_kinds must contain human")
        if len(set(self.enabled_kinds)) != len(self.enabled_kinds):
            raise ValueError("enabled_kinds has duplicates")
        if self.opponents not in ("n-1", "n"):
            raise ValueError("opponents must be 'n-1' or 'n'")
        if self.ledger_scope not in ("all", "focal"):
            raise ValueError("ledger_scope must be 'all' or 'focal'")
        if self.counterfactual not in ("realized", "resimulated"):
            raise ValueError("counterfactual must be 'realized' or 'resimulated'")
        if self.simulated_human_q is not None and not (
                0.0 <= self.simulated_human_q <= self.noise_base):
            raise ValueError("simulated_human_q must lie in [0, noise_base]")
        comp = self.initial_composition
        if comp is not None:
            if any(v < 0 for v in comp.values()):
                raise ValueError("initial_composition counts must be non-negative")
            if sum(comp.values()) != self.n:
                raise ValueError(f"initial_composition sums to {sum(comp.values())}, "
                                 f"expected n={self.n}")
            extra = [k for k, v in comp.items() if v and k not in self.enabled_kinds]
            if extra:
                raise ValueError(f"initial_composition uses disabled kinds {extra}")

    @property
    def generation(self) -> GenerationParams:
        return GenerationParams(self.m, self.alpha, self.r_bound, self.z_bound)

    def composition(self) -> dict:
        if self.initial_composition is not None:
            return {k: self.initial_composition.get(k, 0) for k in AgentKind}
        return default_composition(self.n, self.enabled_kinds)

    def kernel_params(self) -> K.KernelParams:
        return K.KernelParams(
            m=int(self.m), alpha=float(self.alpha), r_bound=float(self.r_bound),
            z_bound=float(self.z_bound), noise_base=float(self.noise_base),
            q_lo=float(self.q_h_min), q_hi=float(self.q_h_max),
            beta=float(self.beta), mu=float(self.mu), price=float(self.price),
            fitness_samples=int(self.fitness_samples),
            opp_scale=self.n / (self.n - 1) if self.opponents == "n" else 1.0,
            cf_q=-1.0 if self.simulated_human_q is None else float(self.simulated_human_q),
            cf_resimulate=self.counterfactual == "resimulated",
            gate_mutation=bool(self.gate_mutation),
            ledger_both=self.ledger_scope == "all",
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["enabled_kinds"] = [k.label for k in self.enabled_kinds]
        if self.initial_composition is not None:
            d["initial_composition"] = {k.label: v for k, v in self.initial_composition.items()}
        d["price"] = "free" if self.price == FREE else self.price
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "WorldParams":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return WorldParams(**d)


def default_composition(n: int, enabled_kinds) -> dict:
    """90% humans, the remaining 10% split as evenly as possible over A.I. kinds."""
    ais = [k for k in AI_KINDS if k in enabled_kinds]
    comp = {k: 0 for k in AgentKind}
    n_ai = int(round(0.1 * n)) if ais else 0
    for idx, k in enumerate(ais):
        comp[k] = n_ai // len(ais) + (1 if idx < n_ai % len(ais) else 0)
    comp[AgentKind.HUMAN] = n - n_ai
    return comp


def streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (dynamics, measurement) generators derived from ``seed``."""
    a, b = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


class World:
    """``n`` agents stored column-wise for the kernels."""

    def __init__(self, params: WorldParams, kinds, qs=None, rng=None, measure_rng=None):
        self.params = params
        self.kp = params.kernel_params()
        if rng is None or measure_rng is None:
            r, mr = streams(params.seed)
            rng = r if rng is None else rng
            measure_rng = mr if measure_rng is None else measure_rng
        self.rng = rng
        self.measure_rng = measure_rng
        self.kinds = np.asarray(kinds, dtype=np.int64).copy()
        if self.kinds.shape != (params.n,):
            raise ValueError(f"expected {params.n} agents, got {self.kinds.shape}")
        if qs is None:
            qs = np.full(params.n, float(params.noise_base))
            for i in np.flatnonzero(self.kinds == K.HUMAN):
                qs[i] = K.draw_human_q(rng, float(params.q_h_min), float(params.q_h_max))
        self.qs = np.asarray(qs, dtype=np.float64).copy()
        self.led_u = np.zeros(params.n)
        self.led_e = np.zeros(params.n)
        self.fitness = np.zeros(params.n)
        self.enabled = np.array([int(k) for k in params.enabled_kinds], dtype=np.int64)
        self.iteration = 0
        self.events = np.zeros(K.N_EVENTS, dtype=np.int64)
        self._buf = K.scratch_buffers(params.m)

    @classmethod
    def from_params(cls, params: WorldParams) -> "World":
        rng, mrng = streams(params.seed)
        comp = params.composition()
        kinds = np.concatenate([np.full(comp[k], int(k), dtype=np.int64) for k in AgentKind])
        return cls(params, kinds, rng=rng, measure_rng=mrng)

    @classmethod
    def static(cls, params: WorldParams, ai_kind: AgentKind, k: int, rng=None) -> "World":
        """``k`` agents of ``ai_kind`` followed by ``n - k`` humans."""
        kinds = np.full(params.n, K.HUMAN, dtype=np.int64)
        kinds[:k] = int(ai_kind)
        if rng is None:
            rng, mrng = streams(params.seed)
        else:
            mrng = rng
        return cls(params, kinds, rng=rng, measure_rng=mrng)

    @property
    def n(self) -> int:
        return self.params.n

    def counts(self) -> np.ndarray:
        return np.bincount(self.kinds, minlength=K.N_KINDS)

    def agent(self, i: int) -> Individual:
        """A snapshot of agent ``i`` as an :class:`Individual`."""
        return Individual(AgentKind(int(self.kinds[i])), float(self.qs[i]),
                          HConsciousLedger(float(self.led_u[i]), float(self.led_e[i])),
                          float(self.fitness[i]))

    @property
    def agents(self) -> list[Individual]:
        return [self.agent(i) for i in range(self.n)]

    def set_agent(self, i: int, ind: Individual) -> None:
        self.kinds[i] = int(ind.kind)
        self.qs[i] = ind.q
        self.led_u[i] = ind.ledger.u_total
        self.led_e[i] = ind.ledger.e_total
        self.fitness[i] = ind.fitness

    def population_fitness(self, rng=None) -> np.ndarray:
        """Fitness of every agent; ledgers are left untouched."""
        out = np.zeros(self.n)
        K.population_fitness(self.measure_rng if rng is None else rng, self.kp,
                             self.kinds, self.qs, self.led_u, self.led_e, out, *self._buf)
        return out


def play_interaction(i1: Individual, i2: Individual, params: WorldParams,
                     rng: np.random.Generator,
                     matrix: PayoffBimatrix | None = None) -> tuple[float, float]:
    """Play one game between ``i1`` (player 1) and ``i2`` (player 2).

    A fresh game is drawn unless ``matrix`` is supplied. Ledgers of
    HConscious agents facing a human are updated in place.
    """
    kp = params.kernel_params()
    m = params.m if matrix is None else matrix.m
    true, v1, v2, cf = K.scratch_buffers(m)
    if matrix is not None:
        true[:] = matrix.cells
    kinds = np.array([int(i1.kind), int(i2.kind)], dtype=np.int64)
    qs = np.array([i1.q, i2.q])
    lu = np.array([i1.ledger.u_total, i2.ledger.u_total])
    le = np.array([i1.ledger.e_total, i2.ledger.e_total])
    u1, u2 = K.interaction(rng, kp, kinds, qs, lu, le, 0, 1, True, True,
                           matrix is None, true, v1, v2, cf)
    i1.ledger.u_total, i2.ledger.u_total = float(lu[0]), float(lu[1])
    i1.ledger.e_total, i2.ledger.e_total = float(le[0]), float(le[1])
    return float(u1), float(u2)


def round_robin_fitness(world: World, index: int, rng=None) -> float:
    """Focal agent's payoff summed over one game against every other agent.

    Averaged over ``fitness_samples`` round-robins and cached on the world.
    """
    if not 0 <= index < world.n:
        raise IndexError(index)
    f = K.round_robin(world.rng if rng is None else rng, world.kp, world.kinds,
                      world.qs, world.led_u, world.led_e, int(index), *world._buf)
    world.fitness[index] = f
    return float(f)


def fermi_probability(f_x: float, f_y: float, beta: float) -> float:
    """Probability that ``x`` imitates ``y``: ``1 / (1 + exp(-beta (f_y - f_x)))``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return float(K.fermi(float(f_x), float(f_y), float(beta)))


def step(world: World) -> StepEvent:
    ev = K.step(world.rng, world.kp, world.enabled, world.kinds, world.qs,
                world.led_u, world.led_e, world.fitness, *world._buf)
    world.events[ev] += 1
    world.iteration += 1
    return StepEvent(ev)


def advance(world: World, nsteps: int) -> None:
    """Run ``nsteps`` iterations inside the compiled loop."""
    if nsteps <= 0:
        return
    K.run_steps(world.rng, world.kp, world.enabled, world.kinds, world.qs,
                world.led_u, world.led_e, world.fitness, int(nsteps), world.events,
                *world._buf)
    world.iteration += nsteps


@dataclass
class SimulationTrace:
    iterations: np.ndarray
    counts: np.ndarray          # (records, 5) int
    fitness: np.ndarray         # (records, 5) mean per kind, nan if absent
    fit_total: np.ndarray
    gini: np.ndarray
    seed: int
    params_hash: str
    events: dict = field(default_factory=dict)
    # composition differs between 90% and 100% of the run
    late_change: bool = False

    def final_shares(self) -> np.ndarray:
        c = self.counts[-1]
        return c / c.sum()

    def __len__(self):
        return len(self.iterations)


def _record(world: World, measure: bool):
    counts = world.counts()
    fit = np.full(K.N_KINDS, np.nan)
    if not measure:
        return counts, fit, np.nan, np.nan
    f = world.population_fitness()
    for k in range(K.N_KINDS):
        sel = world.kinds == k
        if sel.any():
            fit[k] = f[sel].mean()
    g = gini(f) if f.mean() != 0 else np.nan
    return counts, fit, float(f.mean()), g


def run_simulation(params: WorldParams, record_every: int | None = None,
                   measure: bool = True) -> SimulationTrace:
    """Run ``params.iterations`` steps from the initial composition.

    A record (counts, per-kind mean fitness, total mean fitness, Gini) is taken
    at iteration 0, every ``record_every`` iterations and at the end. Fitness
    snapshots use their own random stream so the recording stride does not
    change the trajectory.
    """
    world = World.from_params(params)
    N = params.iterations
    stride = record_every or max(N, 1)
    if stride < 1:
        raise ValueError("record_every must be >= 1")
    marks = sorted(set(range(0, N + 1, stride)) | {N})
    late = int(math.ceil(0.9 * N))
    checkpoints = sorted(set(marks) | {late})

    rows = []
    late_counts = None
    for it in checkpoints:
        advance(world, it - world.iteration)
        if it == late:
            late_counts = world.counts()
        if it in marks:
            rows.append((it, *_record(world, measure)))
    its, counts, fit, tot, g = zip(*rows)
    return SimulationTrace(
        iterations=np.array(its, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64),
        fitness=np.array(fit),
        fit_total=np.array(tot, dtype=np.float64),
        gini=np.array(g, dtype=np.float64),
        seed=params.seed,
        params_hash=params.digest(),
        events={ev.name.lower(): int(world.events[ev.value]) for ev in StepEvent},
        late_change=bool(late_counts is not None
                         and not np.array_equal(late_counts, world.counts())),
    )
