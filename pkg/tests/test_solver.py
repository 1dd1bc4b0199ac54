"""Arena construction and the nested fixpoint: exact small cases."""

import pytest

from rig.errors import CapExceeded, SolverError
from rig.game import (ActMap, Game, MooreMachine, Objective)
from rig.instances import (env_loss, fig3_game, fig3_morphism,
                           identity_relation, matching_pennies,
                           moore_identity_morphism, scaling_instance)
from rig.solver import (build_arena, closure, interior, is_almost_sure_winning,
                        pre, solve, solve_buchi, solve_reach)


def tiny_game(delta, output, moves=("c1", "c2"), initial="s0"):
    actmap = ActMap(("go",), moves, {c: "go" for c in moves})
    states = tuple(delta)
    moore = MooreMachine(states, initial, delta, output)
    game = Game(actmap=actmap, moore=moore,
                indist=identity_relation(actmap.moves))
    return game, moore_identity_morphism(game)


def test_pennies_full_universe_and_exact_ranks(pennies_arena, pennies_result):
    arena, result = pennies_arena, pennies_result
    assert result.y_star == frozenset(arena.universe())
    assert is_almost_sure_winning(arena, result)
    # ranks worked out by hand from the inner iteration: the winning sink
    # enters first, the guess pairs next, and the restart pairs last
    assert result.ranks == {
        "pw": 1,
        ("p1", "a"): 2, ("p2", "b"): 2, ("pw", "a"): 2, ("pw", "b"): 2,
        "p1": 3, "p2": 3,
        ("p0", "a"): 4, ("p0", "b"): 4,
        "p0": 5,
        ("p1", "b"): 6, ("p2", "a"): 6,
    }
    assert result.max_rank() == 6
    assert result.inner_iterations == 6
    assert result.outer_iterations == 0
    assert result.action_sets["p1"] == ("a", "b")
    assert result.action_sets["p2"] == ("a", "b")


def test_env_loss_initial_not_winning(env_loss_arena):
    result = solve_reach(env_loss_arena)
    assert result.y_star == frozenset({"win", ("win", "go")})
    assert not is_almost_sure_winning(env_loss_arena, result)
    assert result.outer_iterations == 1
    assert result.inner_iterations == 2


def test_fixpoint_invariants_on_pennies(pennies_arena, pennies_result):
    arena, result = pennies_arena, pennies_result
    y = result.y_star
    assert interior(arena, y) == y
    assert arena.targets <= y
    assert y <= pre(arena, y) | arena.targets
    # parity: targets rank 1, other states odd, pairs even
    for e, r in result.ranks.items():
        if isinstance(e, tuple):
            assert r % 2 == 0
        elif e in arena.targets:
            assert r == 1
        else:
            assert r % 2 == 1
    assert result.inner_iterations <= result.universe_size
    assert result.outer_iterations <= result.universe_size


def test_interior_closure_duality(pennies_arena):
    arena = pennies_arena
    universe = frozenset(arena.universe())
    for subset in [frozenset(), frozenset({"pw"}),
                   frozenset({"p1", ("p1", "a")}), universe]:
        inside = interior(arena, subset)
        assert inside == universe - closure(arena, universe - subset)
        assert inside <= subset
        assert closure(arena, subset) >= subset


def test_interior_drops_half_open_classes(pennies_arena):
    arena = pennies_arena
    # p1 and p2 share a class, so p1 alone has no interior
    assert interior(arena, frozenset({"p1"})) == frozenset()
    assert interior(arena, frozenset({"p1", "p2"})) == \
        frozenset({"p1", "p2"})
    assert closure(arena, frozenset({"p1"})) == frozenset({"p1", "p2"})
    assert closure(arena, frozenset({("p1", "a")})) == \
        frozenset({("p1", "a"), ("p2", "a")})


def test_universe_cap(pennies):
    game, m = pennies
    with pytest.raises(CapExceeded):
        build_arena(game, m, max_universe=5)
    build_arena(game, m, max_universe=12)


def test_non_binary_colors_rejected():
    with pytest.raises(SolverError):
        build_arena(fig3_game(), fig3_morphism())


def test_invalid_game_rejected(pennies):
    from rig.game import SyncRelationAutomaton
    game, m = pennies
    rel = game.indist
    # drop a diagonal edge: reflexivity fails, the arena must refuse
    delta = {s: {c1: dict(r2) for c1, r2 in row.items()}
             for s, row in rel.delta.items()}
    del delta[rel.initial]["a1"]["a1"]
    broken = Game(actmap=game.actmap, moore=game.moore,
                  indist=SyncRelationAutomaton(rel.states, rel.initial,
                                               delta, rel.accepting))
    with pytest.raises(SolverError, match="reflexive"):
        build_arena(broken, m)


def test_reach_requires_absorbing_targets():
    game, m = tiny_game(
        {"s0": {"c1": "s1", "c2": "s0"}, "s1": {"c1": "s0", "c2": "s1"}},
        {"s0": 0, "s1": 1},
    )
    arena = build_arena(game, m)
    assert not arena.targets_absorbing
    with pytest.raises(SolverError, match="absorbing"):
        solve_reach(arena)


def test_safety_and_cobuchi_refused(pennies_arena):
    with pytest.raises(SolverError, match="safety"):
        solve(pennies_arena, "safe")
    with pytest.raises(SolverError, match="co-Buchi|undecidable"):
        solve(pennies_arena, "cobuchi")
    with pytest.raises(SolverError, match="reach_prob_horizon"):
        solve(pennies_arena, Objective("reach", horizon=5))


def test_solve_dispatch(pennies_arena, pennies_result):
    assert solve(pennies_arena, "reach").y_star == pennies_result.y_star
    assert solve(pennies_arena, Objective("buchi")).objective == "buchi"


def test_buchi_on_absorbing_target_equals_reach(pennies_arena,
                                                pennies_result):
    result = solve_buchi(pennies_arena)
    assert result.y_star == pennies_result.y_star
    assert result.buchi_rounds == 0


def test_buchi_losing_when_env_can_starve():
    # the environment can hold the play at s0 forever with c2
    game, m = tiny_game(
        {"s0": {"c1": "s1", "c2": "s0"}, "s1": {"c1": "s0", "c2": "s1"}},
        {"s0": 0, "s1": 1},
    )
    arena = build_arena(game, m)
    result = solve_buchi(arena)
    assert arena.initial not in result.y_star


def test_buchi_winning_on_forced_cycle():
    game, m = tiny_game(
        {"s0": {"c1": "s1"}, "s1": {"c1": "s0"}},
        {"s0": 0, "s1": 1},
        moves=("c1",),
    )
    arena = build_arena(game, m)
    result = solve_buchi(arena)
    assert arena.initial in result.y_star
    # the same game is not target-absorbing, so reach solving refuses
    with pytest.raises(SolverError):
        solve_reach(arena)


def test_result_json_shape(pennies_arena, pennies_result):
    data = pennies_result.to_json(pennies_arena)
    assert data["objective"] == "reach"
    assert set(data["y_star"]["states"]) == {"p0", "p1", "p2", "pw"}
    assert len(data["y_star"]["pairs"]) == 8
    assert data["universe"] == 12
    assert data["iterations"] == {"outer": 0, "inner": 6}
    ranked = {tuple(e) if isinstance(e, list) else e for e, _ in data["ranks"]}
    assert len(ranked) == 12


def test_scaling_instance_rank_grows_linearly():
    for n in (4, 6, 8):
        game, m = scaling_instance(n)
        arena = build_arena(game, m)
        result = solve_reach(arena)
        assert is_almost_sure_winning(arena, result)
        assert result.max_rank() == n + 2
    with pytest.raises(ValueError):
        scaling_instance(5)


def test_env_loss_spoiled_by_design(env_loss_arena):
    # sanity: the sole abstract action pair at the start is not in Y*
    result = solve_reach(env_loss_arena)
    assert ("s0", "go") not in result.y_star
