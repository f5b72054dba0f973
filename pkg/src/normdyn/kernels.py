"""Hot loops: game generation, observation noise, decision rules, dynamics.

Everything here operates on plain numpy arrays and scalars so it can be
compiled by numba or run as-is (see ``_accel``). Payoff bimatrices are float64
arrays of shape ``(m, m, 2)``; ``[i, j, 0]`` is the row player's payoff and
``[i, j, 1]`` the column player's. Seats are 0 (row) and 1 (column).

Random draws come from a ``numpy.random.Generator`` and only through
``rng.random()``. Draw order is part of the contract:

* true matrix: per cell in row-major order, ``R`` then ``z`` (row payoff)
  then ``z'`` (column payoff) -- 3 draws per cell;
* noisy view: per cell in row-major order, per seat (row first), two draws
  whose difference is the perturbation -- 4 draws per cell;
* interaction: true matrix, then the seat-0 human's view, then the seat-1
  human's view, then ledger counterfactuals (seat 0 first).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._accel import jit

HUMAN = 0
NASHEQ = 1
SELFISH = 2
UTILITARIAN = 3
HCONSCIOUS = 4
N_KINDS = 5

EV_NOOP = 0
EV_MUTATION = 1
EV_IMITATION = 2
EV_BLOCKED = 3
N_EVENTS = 4


class KernelParams(NamedTuple):
    m: int
    alpha: float
    r_bound: float
    z_bound: float
    noise_base: float
    q_lo: float
    q_hi: float
    beta: float
    mu: float
    price: float
    fitness_samples: int
    # multiplies each round-robin sum; 1 for n-1 opponents, n/(n-1) to
    # emulate a sum over all n individuals
    opp_scale: float
    # q of the simulated human in the ledger counterfactual; < 0 means draw it
    cf_q: float
    cf_resimulate: bool
    gate_mutation: bool
    # advance the opponent's ledger too during round-robin interactions
    ledger_both: bool


# -- game generation and observation ---------------------------------------


@jit
def draw_matrix(rng, m, alpha, r_bound, z_bound, out):
    infl = alpha - 1.0
    for i in range(m):
        for j in range(m):
            r = -r_bound + 2.0 * r_bound * rng.random()
            z1 = z_bound * rng.random()
            z2 = z_bound * rng.random()
            a = abs(r)
            out[i, j, 0] = r + z1 * a * infl
            out[i, j, 1] = -r + z2 * a * infl


@jit
def draw_noisy(rng, true, width, out):
    m = true.shape[0]
    for i in range(m):
        for j in range(m):
            for p in range(2):
                x = width * rng.random()
                y = width * rng.random()
                out[i, j, p] = true[i, j, p] + (x - y)


@jit
def draw_human_q(rng, q_lo, q_hi):
    return q_lo + (q_hi - q_lo) * rng.random()


@jit
def draw_index(rng, n):
    k = int(rng.random() * n)
    if k >= n:
        k = n - 1
    return k


# -- solving ----------------------------------------------------------------


@jit
def is_pure_nash(mat, i, j):
    m = mat.shape[0]
    u1 = mat[i, j, 0]
    u2 = mat[i, j, 1]
    for k in range(m):
        if mat[k, j, 0] > u1:
            return False
        if mat[i, k, 1] > u2:
            return False
    return True


@jit
def own_payoff(mat, seat, a, b):
    if seat == 0:
        return mat[a, b, 0]
    return mat[b, a, 1]


@jit
def opp_payoff(mat, seat, a, b):
    if seat == 0:
        return mat[a, b, 1]
    return mat[b, a, 0]


@jit
def nash_action(mat, seat):
    """Human decision ladder for ``seat`` on ``mat``."""
    m = mat.shape[0]
    own = seat
    opp = 1 - seat
    bi = -1
    bj = -1
    b_own = 0.0
    b_opp = 0.0
    for i in range(m):
        for j in range(m):
            if not is_pure_nash(mat, i, j):
                continue
            uo = mat[i, j, own]
            up = mat[i, j, opp]
            if bi < 0 or uo > b_own or (uo == b_own and up > b_opp):
                bi = i
                bj = j
                b_own = uo
                b_opp = up
    if bi >= 0:
        if seat == 0:
            return bi
        return bj
    # no pure equilibrium: best reply to a uniformly random opponent
    best = 0
    best_v = -np.inf
    for a in range(m):
        s = 0.0
        for b in range(m):
            s += own_payoff(mat, seat, a, b)
        if s > best_v:
            best_v = s
            best = a
    return best


@jit
def selfish_reply(mat, seat, b):
    m = mat.shape[0]
    best = 0
    best_v = -np.inf
    for a in range(m):
        v = own_payoff(mat, seat, a, b)
        if v > best_v:
            best_v = v
            best = a
    return best


@jit
def utilitarian_reply(mat, seat, b):
    m = mat.shape[0]
    best = 0
    best_v = -np.inf
    for a in range(m):
        v = own_payoff(mat, seat, a, b) + opp_payoff(mat, seat, a, b)
        if v > best_v:
            best_v = v
            best = a
    return best


@jit
def joint_utilitarian_action(mat, seat):
    m = mat.shape[0]
    bi = 0
    bj = 0
    best_v = -np.inf
    for i in range(m):
        for j in range(m):
            v = mat[i, j, 0] + mat[i, j, 1]
            if v > best_v:
                best_v = v
                bi = i
                bj = j
    if seat == 0:
        return bi
    return bj


@jit
def hconscious_reply(mat, seat, b, u_total, e_total):
    m = mat.shape[0]
    favour_self = u_total >= e_total
    best = -1
    best_v = -np.inf
    for a in range(m):
        if favour_self:
            ok = own_payoff(mat, seat, a, b) > 0.0
        else:
            ok = opp_payoff(mat, seat, a, b) > 0.0
        if not ok:
            continue
        v = own_payoff(mat, seat, a, b) + opp_payoff(mat, seat, a, b)
        if v > best_v:
            best_v = v
            best = a
    if best < 0:
        return utilitarian_reply(mat, seat, b)
    return best


@jit
def ai_action(kind, mat, seat, opp_human, b, u_total, e_total):
    """Action of an A.I. of ``kind``; ``b`` is the predicted human action."""
    if kind == NASHEQ:
        return nash_action(mat, seat)
    if not opp_human:
        if kind == UTILITARIAN:
            return joint_utilitarian_action(mat, seat)
        return nash_action(mat, seat)
    if kind == SELFISH:
        return selfish_reply(mat, seat, b)
    if kind == UTILITARIAN:
        return utilitarian_reply(mat, seat, b)
    return hconscious_reply(mat, seat, b, u_total, e_total)


# -- one interaction ----------------------------------------------------------


@jit
def counterfactual_payoff(rng, kp, true, seat, human_action, human_q, cf, scratch):
    """Payoff the human facing ``seat`` would get against a simulated human."""
    if kp.cf_q < 0.0:
        q = draw_human_q(rng, kp.q_lo, kp.q_hi)
    else:
        q = kp.cf_q
    draw_noisy(rng, true, kp.noise_base - q, cf)
    sim = nash_action(cf, seat)
    h = human_action
    if kp.cf_resimulate:
        draw_noisy(rng, true, kp.noise_base - human_q, scratch)
        h = nash_action(scratch, 1 - seat)
    if seat == 0:
        return true[sim, h, 1]
    return true[h, sim, 0]


@jit
def interaction(rng, kp, kinds, qs, led_u, led_e, a, b, upd_a, upd_b, fresh,
                true, v1, v2, cf):
    """Agent ``a`` in seat 0 plays agent ``b`` in seat 1; returns payoffs.

    With ``fresh`` false the game already in ``true`` is played. Ledgers of
    HConscious agents facing a human are advanced only where ``upd_*`` is set.
    """
    ka = kinds[a]
    kb = kinds[b]
    if fresh:
        draw_matrix(rng, kp.m, kp.alpha, kp.r_bound, kp.z_bound, true)
    ha = ka == HUMAN
    hb = kb == HUMAN
    act_a = -1
    act_b = -1
    if ha:
        draw_noisy(rng, true, kp.noise_base - qs[a], v1)
        act_a = nash_action(v1, 0)
    if hb:
        draw_noisy(rng, true, kp.noise_base - qs[b], v2)
        act_b = nash_action(v2, 1)
    if not ha:
        act_a = ai_action(ka, true, 0, hb, act_b, led_u[a], led_e[a])
    if not hb:
        act_b = ai_action(kb, true, 1, ha, act_a, led_u[b], led_e[b])
    u1 = true[act_a, act_b, 0]
    u2 = true[act_a, act_b, 1]
    if upd_a and ka == HCONSCIOUS and hb:
        led_u[a] += u2
        led_e[a] += counterfactual_payoff(rng, kp, true, 0, act_b, qs[b], cf, v2)
    if upd_b and kb == HCONSCIOUS and ha:
        led_u[b] += u1
        led_e[b] += counterfactual_payoff(rng, kp, true, 1, act_a, qs[a], cf, v1)
    return u1, u2


# -- fitness and dynamics -----------------------------------------------------


@jit
def round_robin(rng, kp, kinds, qs, led_u, led_e, focal, true, v1, v2, cf):
    n = kinds.shape[0]
    total = 0.0
    for _ in range(kp.fitness_samples):
        acc = 0.0
        for o in range(n):
            if o == focal:
                continue
            u1, _u2 = interaction(rng, kp, kinds, qs, led_u, led_e, focal, o,
                                  True, kp.ledger_both, True, true, v1, v2, cf)
            acc += u1
        total += acc * kp.opp_scale
    return total / kp.fitness_samples


@jit
def population_fitness(rng, kp, kinds, qs, led_u, led_e, out, true, v1, v2, cf):
    """Round-robin fitness of every agent without persisting ledger changes.

    The sweep runs on ledger copies. With focal-only updates each focal's copy
    is restored after its own evaluation; otherwise the copies evolve over the
    sweep as they would in a real pass.
    """
    n = kinds.shape[0]
    su = led_u.copy()
    se = led_e.copy()
    for f in range(n):
        out[f] = round_robin(rng, kp, kinds, qs, su, se, f, true, v1, v2, cf)
        if not kp.ledger_both:
            su[f] = led_u[f]
            se[f] = led_e[f]


@jit
def fermi(fx, fy, beta):
    x = beta * (fy - fx)
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@jit
def convert(rng, kp, kinds, qs, led_u, led_e, idx, new_kind):
    if kinds[idx] == new_kind:
        return
    kinds[idx] = new_kind
    led_u[idx] = 0.0
    led_e[idx] = 0.0
    if new_kind == HUMAN:
        qs[idx] = draw_human_q(rng, kp.q_lo, kp.q_hi)
    else:
        qs[idx] = kp.noise_base


@jit
def mutate(rng, kp, enabled, kinds, qs, led_u, led_e, fit, idx):
    new_kind = enabled[draw_index(rng, enabled.shape[0])]
    if (kp.gate_mutation and kinds[idx] == HUMAN and new_kind != HUMAN
            and fit[idx] < kp.price):
        return
    convert(rng, kp, kinds, qs, led_u, led_e, idx, new_kind)


@jit
def step(rng, kp, enabled, kinds, qs, led_u, led_e, fit, true, v1, v2, cf):
    """One iteration of the population process; returns an ``EV_*`` code."""
    n = kinds.shape[0]
    i = draw_index(rng, n)
    j = draw_index(rng, n - 1)
    if j >= i:
        j += 1
    mi = rng.random() < kp.mu
    mj = rng.random() < kp.mu
    if mi or mj:
        if mi:
            mutate(rng, kp, enabled, kinds, qs, led_u, led_e, fit, i)
        if mj:
            mutate(rng, kp, enabled, kinds, qs, led_u, led_e, fit, j)
        return EV_MUTATION
    fi = round_robin(rng, kp, kinds, qs, led_u, led_e, i, true, v1, v2, cf)
    fit[i] = fi
    fj = round_robin(rng, kp, kinds, qs, led_u, led_e, j, true, v1, v2, cf)
    fit[j] = fj
    if kinds[i] == kinds[j]:
        return EV_NOOP
    if rng.random() >= fermi(fi, fj, kp.beta):
        return EV_NOOP
    if kinds[i] == HUMAN and fi < kp.price:
        return EV_BLOCKED
    convert(rng, kp, kinds, qs, led_u, led_e, i, kinds[j])
    return EV_IMITATION


@jit
def run_steps(rng, kp, enabled, kinds, qs, led_u, led_e, fit, nsteps, events,
              true, v1, v2, cf):
    for _ in range(nsteps):
        ev = step(rng, kp, enabled, kinds, qs, led_u, led_e, fit, true, v1, v2, cf)
        events[ev] += 1


def scratch_buffers(m):
    """Four ``(m, m, 2)`` work arrays: true game, two views, counterfactual."""
    return tuple(np.zeros((m, m, 2)) for _ in range(4))
