"""Grid measurement-attack and market-game simulator."""

from .attack import AttackVector, FlowSensitivity, compute_sensitivity, flow_change, synthesize_attack
from .estimation import (EstimationResult, Jacobian, MeasurementPlan, build_jacobian,
                         default_gamma, detect_bad_data, estimate_state,
                         estimated_line_flow, load_measurements)
from .game import GameSpec, MixedSolution, PayoffMatrix, build_payoff_matrix, find_pure_saddle, solve_mixed
from .grid import (GridNetwork, GsfMatrix, compute_gsf, dc_power_flow,
                   load_fixture, load_network)
from .lp import LpProblem, LpSolution, solve_lp
from .market import (MarketOutcome, congestion_price, solve_day_ahead,
                     solve_real_time, virtual_trade_profit)
from .scenario import Pipeline, ScenarioConfig, load_scenario, run_scenario, run_stage

__version__ = "0.1.0"
