"""Inequality and selection-direction measurements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K


def gini(fitness, with_flag: bool = False):
    """Half the relative mean absolute difference of ``fitness``.

    Evaluated in O(n log n) via the sorted-rank identity. Negative entries are
    allowed and used as-is (the ratio can then exceed 1); pass
    ``with_flag=True`` to also get a bool telling whether any entry was
    negative.
    """
    f = np.asarray(fitness, dtype=np.float64).ravel()
    if f.size == 0:
        raise ValueError("gini of an empty vector")
    mean = f.mean()
    if mean == 0:
        raise ValueError("gini undefined for zero mean")
    n = f.size
    s = np.sort(f)
    ranks = np.arange(1, n + 1)
    pair_sum = 2.0 * np.dot(2 * ranks - n - 1, s)  # sum_i sum_j |f_i - f_j|
    g = 0.5 * (pair_sum / n**2) / mean
    if with_flag:
        return float(g), bool((f < 0).any())
    return float(g)


@dataclass
class GradientEstimate:
    k: int
    n: int
    ai_kind: object
    t_plus: float
    t_minus: float
    g: float
    f_h_mean: float
    f_ai_mean: float
    samples: int

    @property
    def frac_ai(self) -> float:
        return self.k / self.n


@dataclass
class Crossing:
    k_left: int
    k_right: int
    k_star: float
    frac: float
    # True for a + to - change (attracting), False for - to +
    stable: bool


class GradientCurve(list):
    """Estimates over a k grid plus the zero crossings found between them."""

    def __init__(self, estimates, crossings):
        super().__init__(estimates)
        self.crossings = list(crossings)

    def stable_crossings(self) -> list[Crossing]:
        return [c for c in self.crossings if c.stable]


def transition_terms(k: int, n: int, f_h: float, f_ai: float, beta: float,
                     price: float) -> tuple[float, float]:
    """``(T+, T-)`` for ``k`` adopters out of ``n``."""
    if k <= 0 or k >= n:
        return 0.0, 0.0
    w = (n - k) / n * (k / n)
    tau = 1.0 if f_h >= price else 0.0
    return (w * K.fermi(f_h, f_ai, beta) * tau, w * K.fermi(f_ai, f_h, beta))


def imitation_gradient(k: int, ai_kind, params, samples: int = 50, rng=None,
                       warmup: int = 10) -> GradientEstimate:
    """Estimate G(k) in a frozen population of ``k`` A.I. and ``n - k`` humans.

    Group fitnesses are means of ``samples`` round-robin evaluations of randomly
    picked members (human and A.I. focals interleaved) after ``warmup``
    unrecorded pairs that let HConscious ledgers settle.
    """
    from .agents import AgentKind
    from .dynamics import World

    ai_kind = AgentKind(ai_kind)
    if ai_kind is AgentKind.HUMAN:
        raise ValueError("ai_kind must be an A.I. kind")
    n = params.n
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}]")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(params.seed if rng is None else int(rng))
    world = World.static(params, ai_kind, k, rng)
    if 0 < k < n:
        h, a = _focal_means(world, k, warmup, samples)
    elif k == 0:
        h, a = _focal_means(world, 0, warmup, samples)[0], np.nan
    else:
        h, a = np.nan, _focal_means(world, n, warmup, samples)[1]
    tp, tm = transition_terms(k, n, h, a, params.beta, params.price)
    return GradientEstimate(k, n, ai_kind, tp, tm, tp - tm, h, a, samples)


def _focal_means(world, k, warmup, samples):
    n = world.n
    kp = world.kp
    args = (world.kinds, world.qs, world.led_u, world.led_e)
    rng = world.rng

    def rr(focal):
        return K.round_robin(rng, kp, *args, focal, *world._buf)

    def pick_h():
        return k + K.draw_index(rng, n - k)

    def pick_a():
        return K.draw_index(rng, k)

    for _ in range(warmup):
        if k < n:
            rr(pick_h())
        if k > 0:
            rr(pick_a())
    fh, fa = [], []
    for _ in range(samples):
        if k < n:
            fh.append(rr(pick_h()))
        if k > 0:
            fa.append(rr(pick_a()))
    return (float(np.mean(fh)) if fh else np.nan,
            float(np.mean(fa)) if fa else np.nan)


def zero_crossings(estimates) -> list[Crossing]:
    """Sign changes of G between adjacent interior grid points.

    ``G > 0`` counts as positive and anything else as non-positive; the root is
    placed by linear interpolation.
    """
    pts = [e for e in estimates if 0 < e.k < e.n]
    out = []
    for lo, hi in zip(pts, pts[1:]):
        pos_lo, pos_hi = lo.g > 0, hi.g > 0
        if pos_lo == pos_hi:
            continue
        if lo.g == hi.g:
            k_star = 0.5 * (lo.k + hi.k)
        else:
            k_star = lo.k + (hi.k - lo.k) * lo.g / (lo.g - hi.g)
        out.append(Crossing(lo.k, hi.k, float(k_star), float(k_star / lo.n), pos_lo))
    return out


def gradient_curve(ai_kind, params, k_grid, samples: int = 50, rng=None,
                   warmup: int = 10) -> GradientCurve:
    """Map :func:`imitation_gradient` over ``k_grid``.

    Each grid point gets its own generator derived from ``rng`` (an int seed;
    defaults to ``params.seed``) and the grid value, so points are independent
    of each other and of the grid's order.
    """
    from .agents import AgentKind

    ai_kind = AgentKind(ai_kind)
    grid = [int(k) for k in k_grid]
    if any(k < 0 or k > params.n for k in grid):
        raise ValueError("k_grid must lie within [0, n]")
    seed = params.seed if rng is None else int(rng)
    est = []
    for k in sorted(grid):
        ss = np.random.SeedSequence(seed, spawn_key=(int(ai_kind), k))
        est.append(imitation_gradient(k, ai_kind, params, samples,
                                      np.random.default_rng(ss), warmup))
    return GradientCurve(est, zero_crossings(est))


def default_k_grid(n: int, points: int = 21) -> list[int]:
    return sorted({int(round(x)) for x in np.linspace(0, n, points)})
