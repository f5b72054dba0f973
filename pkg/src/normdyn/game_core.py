"""Stochastic bimatrix games: generation, noisy observation and pure-Nash play."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels as K


class JointAction(NamedTuple):
    a1: int
    a2: int


@dataclass(frozen=True)
class GenerationParams:
    """Parameters of the payoff generator.

    Each cell draws ``R ~ U[-r_bound, r_bound]`` shared by both players and two
    independent multipliers ``z, z' ~ U[0, z_bound]``; ``alpha`` inflates
    (``> 1``) or deflates (``< 1``) the total payoff of a cell.
    """

    m: int = 4
    alpha: float = 1.2
    r_bound: float = 3.0
    z_bound: float = 2.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2 or self.m > 16:
            raise ValueError("m must be an integer in [2, 16]")
        if not self.r_bound > 0:
            raise ValueError("r_bound must be positive")
        if not self.z_bound >= 0:
            raise ValueError("z_bound must be non-negative")


class PayoffBimatrix:
    """An ``m x m`` grid of payoff pairs.

    ``cells[a1, a2]`` is ``(u1, u2)``: rows are player-1 actions, columns are
    player-2 actions.
    """

    __slots__ = ("cells",)

    def __init__(self, cells):
        cells = np.array(cells, dtype=np.float64)
        if cells.ndim != 3 or cells.shape[0] != cells.shape[1] or cells.shape[2] != 2:
            raise ValueError(f"expected an (m, m, 2) array, got shape {cells.shape}")
        if cells.shape[0] < 1:
            raise ValueError("empty bimatrix")
        if not np.all(np.isfinite(cells)):
            raise ValueError("payoffs must be finite")
        self.cells = cells

    @property
    def m(self) -> int:
        return self.cells.shape[0]

    @property
    def u1(self) -> np.ndarray:
        return self.cells[:, :, 0]

    @property
    def u2(self) -> np.ndarray:
        return self.cells[:, :, 1]

    def __getitem__(self, action) -> tuple[float, float]:
        a1, a2 = action
        return float(self.cells[a1, a2, 0]), float(self.cells[a1, a2, 1])

    def __eq__(self, other):
        if not isinstance(other, PayoffBimatrix):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __repr__(self):
        return f"PayoffBimatrix(m={self.m})"

    @classmethod
    def from_pairs(cls, rows) -> "PayoffBimatrix":
        """Build from nested ``[[(u1, u2), ...], ...]`` lists."""
        return cls(np.asarray(rows, dtype=np.float64))


def generate_payoff_matrix(params: GenerationParams, rng: np.random.Generator) -> PayoffBimatrix:
    """Draw a fresh true game; consumes exactly ``3 * m * m`` uniforms."""
    out = np.empty((params.m, params.m, 2))
    K.draw_matrix(rng, params.m, float(params.alpha), float(params.r_bound),
                  float(params.z_bound), out)
    return PayoffBimatrix(out)


def observe_noisy(true_matrix: PayoffBimatrix, q: float, rng: np.random.Generator,
                  noise_base: float = 10.0) -> PayoffBimatrix:
    """Return the view of an observer with intelligence ``q``.

    Every payoff is shifted by the difference of two independent
    ``U[0, noise_base - q]`` draws (a triangular perturbation). ``q ==
    noise_base`` gives an exact copy.
    """
    if not 0.0 <= q <= noise_base:
        raise ValueError(f"q must lie in [0, {noise_base}], got {q}")
    out = np.empty_like(true_matrix.cells)
    K.draw_noisy(rng, true_matrix.cells, float(noise_base - q), out)
    return PayoffBimatrix(out)


def pure_nash_equilibria(matrix: PayoffBimatrix) -> list[JointAction]:
    """All weak pure-strategy Nash equilibria, in row-major order."""
    c = matrix.cells
    m = matrix.m
    return [JointAction(i, j) for i in range(m) for j in range(m)
            if K.is_pure_nash(c, i, j)]


def _seat(player: int) -> int:
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player}")
    return player - 1


def select_nash_action(matrix: PayoffBimatrix, player: int) -> int:
    """Action of ``player`` under the human decision ladder.

    Among pure equilibria keep the ones best for ``player``, then the ones best
    for the opponent, then the first in row-major order. Without any pure
    equilibrium, best-respond to a uniformly random opponent.
    """
    return int(K.nash_action(matrix.cells, _seat(player)))
