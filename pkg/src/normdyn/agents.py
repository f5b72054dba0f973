"""Individuals and their decision norms.

Humans play the equilibrium ladder on a noisy view of the game. A.I. agents
see the true game and, against a human, know the action the human is about to
take (they observe the same noisy view the human acts on).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import kernels as K
from .game_core import PayoffBimatrix, _seat, observe_noisy, select_nash_action


class AgentKind(IntEnum):
    HUMAN = K.HUMAN
    NASHEQ = K.NASHEQ
    SELFISH = K.SELFISH
    UTILITARIAN = K.UTILITARIAN
    HCONSCIOUS = K.HCONSCIOUS

    @property
    def is_ai(self) -> bool:
        return self is not AgentKind.HUMAN

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "AgentKind":
        key = name.strip().lower().replace("_ai", "").replace("-", "").replace("_", "")
        try:
            return _ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown agent kind {name!r}") from None


_LABELS = {
    AgentKind.HUMAN: "human",
    AgentKind.NASHEQ: "nasheq",
    AgentKind.SELFISH: "selfish",
    AgentKind.UTILITARIAN: "util",
    AgentKind.HCONSCIOUS: "hconscious",
}
_ALIASES = {
    "human": AgentKind.HUMAN, "h": AgentKind.HUMAN,
    "nasheq": AgentKind.NASHEQ, "nash": AgentKind.NASHEQ,
    "selfish": AgentKind.SELFISH,
    "util": AgentKind.UTILITARIAN, "utilitarian": AgentKind.UTILITARIAN,
    "hconscious": AgentKind.HCONSCIOUS, "humanconscious": AgentKind.HCONSCIOUS,
}

AI_KINDS = tuple(k for k in AgentKind if k.is_ai)


@dataclass
class HConsciousLedger:
    """Running totals kept by an HConscious agent.

    ``u_total`` sums what its human opponents actually earned; ``e_total``
    sums what they would have earned against a simulated human.
    """

    u_total: float = 0.0
    e_total: float = 0.0

    @property
    def favours_self(self) -> bool:
        return self.u_total >= self.e_total


@dataclass
class Individual:
    kind: AgentKind
    q: float
    ledger: HConsciousLedger = field(default_factory=HConsciousLedger)
    fitness: float = 0.0

    @classmethod
    def new(cls, kind: AgentKind, rng: np.random.Generator | None = None,
            q_range: tuple[float, float] = (0.0, 5.0), noise_base: float = 10.0,
            q: float | None = None) -> "Individual":
        """Create an agent; humans draw ``q`` from ``q_range`` unless given."""
        kind = AgentKind(kind)
        if kind.is_ai:
            return cls(kind, float(noise_base))
        if q is None:
            if rng is None:
                raise ValueError("a human needs either q or an rng to draw it")
            q = float(K.draw_human_q(rng, float(q_range[0]), float(q_range[1])))
        return cls(kind, float(q))

    def convert(self, kind: AgentKind, rng: np.random.Generator,
                q_range: tuple[float, float] = (0.0, 5.0),
                noise_base: float = 10.0) -> None:
        """Switch kind in place; resets the ledger and resamples ``q`` for humans."""
        kind = AgentKind(kind)
        if kind == self.kind:
            return
        self.kind = kind
        self.ledger = HConsciousLedger()
        if kind.is_ai:
            self.q = float(noise_base)
        else:
            self.q = float(K.draw_human_q(rng, float(q_range[0]), float(q_range[1])))


def predict_human_action(true_matrix: PayoffBimatrix, human: Individual,
                         rng: np.random.Generator, player: int = 2,
                         noise_base: float = 10.0) -> tuple[int, PayoffBimatrix]:
    """Draw the human's view and return ``(action, view)``.

    The same view must be used when the human actually plays, so the
    prediction is exact.
    """
    if human.kind is not AgentKind.HUMAN:
        raise ValueError("only human actions can be predicted")
    view = observe_noisy(true_matrix, human.q, rng, noise_base)
    return select_nash_action(view, player), view


def act(agent: Individual, player: int, true_matrix: PayoffBimatrix,
        opponent: Individual, predicted: int | None = None,
        rng: np.random.Generator | None = None,
        observed: PayoffBimatrix | None = None, noise_base: float = 10.0) -> int:
    """Action of ``agent`` sitting as ``player`` (1 or 2) against ``opponent``.

    Humans act on ``observed`` if given (the view an A.I. already drew for its
    prediction), otherwise on a fresh view drawn from ``rng``. A.I. agents
    facing a human require ``predicted``.
    """
    seat = _seat(player)
    if agent.kind is AgentKind.HUMAN:
        if observed is None:
            if rng is None:
                raise ValueError("a human needs an rng or an observed view")
            observed = observe_noisy(true_matrix, agent.q, rng, noise_base)
        return select_nash_action(observed, player)
    opp_human = opponent.kind is AgentKind.HUMAN
    if opp_human and predicted is None:
        raise ValueError("an A.I. facing a human needs the predicted human action")
    if not opp_human:
        predicted = -1
    return int(K.ai_action(int(agent.kind), true_matrix.cells, seat, opp_human,
                           int(predicted), agent.ledger.u_total, agent.ledger.e_total))


def act_hconscious(agent: Individual, player: int, true_matrix: PayoffBimatrix,
                   predicted: int) -> int:
    if agent.kind is not AgentKind.HCONSCIOUS:
        raise ValueError("act_hconscious needs an HConscious agent")
    return int(K.hconscious_reply(true_matrix.cells, _seat(player), int(predicted),
                                  agent.ledger.u_total, agent.ledger.e_total))


def hconscious_ledger_update(agent: Individual, human_payoff_realized: float,
                             true_matrix: PayoffBimatrix, rng: np.random.Generator,
                             *, player: int, human_action: int,
                             q_range: tuple[float, float] = (0.0, 5.0),
                             noise_base: float = 10.0,
                             simulated_q: float | None = None,
                             resimulate: bool = False,
                             human_q: float | None = None) -> HConsciousLedger:
    """Add one human encounter to ``agent``'s ledger and return it.

    The counterfactual puts a simulated human (``q`` drawn from ``q_range``
    unless ``simulated_q`` is fixed) in the agent's seat of the same game and
    scores the real human's payoff. By default the real human keeps its
    realized action; ``resimulate`` makes it act again on a fresh view.
    """
    if resimulate and human_q is None:
        raise ValueError("resimulate needs the human's q")
    kp = _ledger_params(q_range, noise_base, simulated_q, resimulate)
    m = true_matrix.m
    cf = np.empty((m, m, 2))
    scratch = np.empty((m, m, 2))
    e = K.counterfactual_payoff(rng, kp, true_matrix.cells, _seat(player),
                                int(human_action),
                                float(noise_base if human_q is None else human_q),
                                cf, scratch)
    agent.ledger.u_total += float(human_payoff_realized)
    agent.ledger.e_total += float(e)
    return agent.ledger


def _ledger_params(q_range, noise_base, simulated_q, resimulate) -> K.KernelParams:
    return K.KernelParams(
        m=0, alpha=1.0, r_bound=1.0, z_bound=0.0, noise_base=float(noise_base),
        q_lo=float(q_range[0]), q_hi=float(q_range[1]), beta=1.0, mu=0.0,
        price=0.0, fitness_samples=1, opp_scale=1.0,
        cf_q=-1.0 if simulated_q is None else float(simulated_q),
        cf_resimulate=bool(resimulate), gate_mutation=False, ledger_both=True)
