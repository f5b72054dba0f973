"""Two parochial populations playing a noisy prisoner's dilemma, in closed form.

Population 1 is a fraction ``b`` of everyone; members cooperate inside their
own group and play a fixed action against the other group. Each population
executes the wrong action with its own error rate (``n1``, ``n2``). Payoffs are
expectations of the bilinear form ``p(a, n)^T pd p(a', n')`` with
``p(C, n) = (1 - n, n)`` and ``p(D, n) = (n, 1 - n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

C, D = 0, 1
# row-player payoffs [[R, S], [T, P]]
DEFAULT_PD = ((2.0, 0.0), (3.0, 1.0))

_DIR = {C: np.array([-1.0, 1.0]), D: np.array([1.0, -1.0])}


def _action(a) -> int:
    if isinstance(a, str):
        a = {"C": C, "D": D}[a.upper()]
    if a not in (C, D):
        raise ValueError(f"action must be C or D, got {a!r}")
    return a


def check_pd(pd) -> np.ndarray:
    pd = np.asarray(pd, dtype=np.float64)
    if pd.shape != (2, 2):
        raise ValueError("pd must be 2x2")
    (r, s), (t, p) = pd
    if not t > r > p > s:
        raise ValueError("pd must satisfy T > R > P > S")
    return pd


@dataclass(frozen=True)
class ParochialParams:
    b: float = 0.5
    n1: float = 0.0
    n2: float = 0.0
    c: float = 0.0
    pd: tuple = DEFAULT_PD

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0,1]")
        for name in ("n1", "n2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0,1)")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0,1]")
        check_pd(self.pd)


def mix(a, n: float) -> np.ndarray:
    """Distribution over (C, D) when intending ``a`` with error rate ``n``."""
    return np.array([1.0 - n, n]) if _action(a) == C else np.array([n, 1.0 - n])


def _pair(pd, a, na, b, nb, order):
    if order == "exact":
        return float(mix(a, na) @ pd @ mix(b, nb))
    if order == "first_order":
        # drops the na * nb term of the expansion around the intended actions
        return float(pd[a, b] + na * (_DIR[a] @ pd[:, b]) + nb * (pd[a, :] @ _DIR[b]))
    raise ValueError("order must be 'exact' or 'first_order'")


def expected_payoffs(params: ParochialParams, a1, a2,
                     order: str = "exact") -> tuple[float, float]:
    """``(U1, U2)`` when population 1 plays ``a1`` and population 2 plays ``a2``
    against each other."""
    a1, a2 = _action(a1), _action(a2)
    pd = check_pd(params.pd)
    b, n1, n2 = params.b, params.n1, params.n2
    u1 = b * _pair(pd, C, n1, C, n1, order) + (1 - b) * _pair(pd, a1, n1, a2, n2, order)
    u2 = (1 - b) * _pair(pd, C, n2, C, n2, order) + b * _pair(pd, a2, n2, a1, n1, order)
    return u1, u2


def payoff_difference_matrix(b: float, n1: float, n2: float) -> np.ndarray:
    """``U1 - U2`` for the four (a1, a2) profiles, rows a1 and columns a2."""
    return np.array([
        [n1 - n2, -2 * b * n2 + b + n1 + 3 * n2 - 2],
        [-2 * b * n1 + b - n1 - n2 + 1,
         -2 * b * n1 - 2 * b * n2 + 2 * b - n1 + 3 * n2 - 1],
    ])


def model_difference_matrix(b: float, n1: float, n2: float, pd=DEFAULT_PD,
                            order: str = "first_order") -> np.ndarray:
    p = ParochialParams(b, n1, n2, 0.0, pd)
    out = np.empty((2, 2))
    for a1 in (C, D):
        for a2 in (C, D):
            u1, u2 = expected_payoffs(p, a1, a2, order)
            out[a1, a2] = u1 - u2
    return out


def difference_matrix_residual(b: float, n1: float, n2: float) -> float:
    """Largest gap between the closed-form matrix and the first-order model."""
    return float(np.max(np.abs(payoff_difference_matrix(b, n1, n2)
                               - model_difference_matrix(b, n1, n2))))


class DDCertificate(NamedTuple):
    holds: bool
    margin_p1: float   # U1(D,D) - U1(C,D)
    margin_p2: float   # U2(D,D) - U2(D,C)


def is_dd_nash(b: float, n1: float, n2: float, pd=DEFAULT_PD,
               order: str = "first_order") -> DDCertificate:
    p = ParochialParams(b, n1, n2, 0.0, pd)
    dd = expected_payoffs(p, D, D, order)
    m1 = dd[0] - expected_payoffs(p, C, D, order)[0]
    m2 = dd[1] - expected_payoffs(p, D, C, order)[1]
    return DDCertificate(m1 >= 0 and m2 >= 0, m1, m2)


class Advantage(NamedTuple):
    p1_term: float      # c n1 (2b + 1)
    p2_term: float      # c n2 (3 - 2b)
    difference: float   # p1_term - p2_term
    delta_u1: float
    delta_u2: float


def ai_advantage(b: float, n1: float, n2: float, c: float) -> Advantage:
    """Gains at mutual defection when A.I. cuts both error rates by a factor ``c``.

    ``delta_u*`` are the first-order changes of each population's payoff;
    ``p*_term`` split their difference by the error source, so
    ``delta_u1 - delta_u2 == difference``.
    """
    before = ParochialParams(b, n1, n2, c)
    after = ParochialParams(b, (1 - c) * n1, (1 - c) * n2, c)
    u_before = expected_payoffs(before, D, D, "first_order")
    u_after = expected_payoffs(after, D, D, "first_order")
    t1 = c * n1 * (2 * b + 1)
    t2 = c * n2 * (3 - 2 * b)
    return Advantage(t1, t2, t1 - t2, u_after[0] - u_before[0], u_after[1] - u_before[1])


class Fig5Row(NamedTuple):
    b: float
    c: float
    gain_p1: float
    gain_p2: float
    difference: float


def fig5_curves(b_values, n: float, c_grid) -> list[Fig5Row]:
    """Per-population A.I. gains over a (b, c) grid with equal base error ``n``."""
    rows = []
    for b in b_values:
        for c in c_grid:
            adv = ai_advantage(float(b), n, n, float(c))
            rows.append(Fig5Row(float(b), float(c), adv.p1_term, adv.p2_term, adv.difference))
    return rows
