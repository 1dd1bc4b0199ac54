"""Solver toolkit for imperfect-information games given by
indistinguishability relations, with rectangular-morphism abstractions."""

from .errors import (CapExceeded, GameError, MorphismError, RigError,
                     SchemaError, SolverError, StrategyError)
from .game import (ActMap, Game, MooreMachine, Objective,
                   SyncRelationAutomaton, color_of, game_from_json,
                   game_to_json, is_target_absorbing, load_game,
                   make_target_absorbing, save_game)
from .morphism import (Morphism, compute_approx, compute_targets, h_eval,
                       load_morphism, morphism_from_json, morphism_to_json,
                       save_morphism, validate_rectangularity,
                       validate_refinement)
from .probability import (ProductChain, SimulationResult, SplitMix64,
                          almost_sure_buchi, almost_sure_reach,
                          build_product_chain, cylinder_prob,
                          reach_prob_horizon, reach_prob_limit, simulate)
from .reif import ReifGame, load_reif, reif_to_game, save_reif, subset_morphism
from .solver import (Arena, FixpointResult, build_arena, closure, interior,
                     is_almost_sure_winning, pre, solve, solve_buchi,
                     solve_reach)
from .strategy import (FiniteMemoryStrategy, build_spoiler, check_rank_progress,
                       extract_strategy, load_strategy, save_strategy,
                       uniform_support_strategy, verify_almost_sure)
from .validation import ValidationReport, validate_game

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
