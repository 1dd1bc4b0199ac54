"""Shared fixtures: bundled instances, seeded families, solved arenas.

The "suite" used by the invariant and strategy tests is the union of the
hand-built bundles, the compiled Reif pennies game, twenty seeded
perfect-information instances, ten seeded Reif games, and the four ladder
sizes used for timing.  Everything is deterministic, so session scope is
safe and keeps the expensive arena builds to one per run.
"""

import pytest

from rig import instances
from rig.reif import reif_to_game, subset_morphism
from rig.solver import build_arena, solve_reach
from rig.strategy import extract_strategy

RPI_SEEDS = range(20)
REIF_SEEDS = range(10)
LADDER_SIZES = (10, 20, 40, 80)


@pytest.fixture(scope="session")
def pennies():
    return instances.matching_pennies()


@pytest.fixture(scope="session")
def pennies_arena(pennies):
    game, m = pennies
    return build_arena(game, m)


@pytest.fixture(scope="session")
def pennies_result(pennies_arena):
    return solve_reach(pennies_arena)


@pytest.fixture(scope="session")
def pennies_strategy(pennies_arena, pennies_result):
    return extract_strategy(pennies_arena, pennies_result)


@pytest.fixture(scope="session")
def env_loss():
    return instances.env_loss()


@pytest.fixture(scope="session")
def env_loss_arena(env_loss):
    game, m = env_loss
    return build_arena(game, m)


@pytest.fixture(scope="session")
def fig3_pair():
    return instances.fig3_game(), instances.fig3_morphism()


@pytest.fixture(scope="session")
def suite_instances():
    """List of (name, game, morphism) triples; see the module docstring."""
    out = [
        ("matching-pennies", *instances.matching_pennies()),
        ("env-loss", *instances.env_loss()),
    ]
    rg = instances.pennies_reif()
    out.append(("pennies-reif", reif_to_game(rg), subset_morphism(rg)))
    for s in RPI_SEEDS:
        game, m = instances.random_perfect_info(s)
        out.append((f"rpi-{s}", game, m))
    for s in REIF_SEEDS:
        rg = instances.random_reif(s)
        out.append((f"reif-{s}", reif_to_game(rg), subset_morphism(rg)))
    for n in LADDER_SIZES:
        game, m = instances.scaling_instance(n)
        out.append((f"scale-{n}", game, m))
    return out


@pytest.fixture(scope="session")
def suite_solved(suite_instances):
    """(name, game, arena, result) for every suite member, solved once."""
    out = []
    for name, game, m in suite_instances:
        arena = build_arena(game, m)
        out.append((name, game, arena, solve_reach(arena)))
    return out
