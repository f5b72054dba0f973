"""Evolutionary simulation of A.I. adoption under different decision norms."""

from ._accel import BACKEND
from .agents import (AI_KINDS, AgentKind, HConsciousLedger, Individual, act,
                     act_hconscious, hconscious_ledger_update, predict_human_action)
from .dynamics import (FREE, SimulationTrace, StepEvent, World, WorldParams, advance,
                       fermi_probability, play_interaction, round_robin_fitness,
                       run_simulation, step)
from .game_core import (GenerationParams, JointAction, PayoffBimatrix,
                        generate_payoff_matrix, observe_noisy, pure_nash_equilibria,
                        select_nash_action)
from .metrics import (Crossing, GradientCurve, GradientEstimate, gini, gradient_curve,
                      imitation_gradient, zero_crossings)
from .parochial import (ParochialParams, ai_advantage, expected_payoffs, fig5_curves,
                        is_dd_nash, payoff_difference_matrix)

__version__ = "0.1.0"
