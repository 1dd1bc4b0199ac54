"""Core game types: coloring, latching, serialization, schema errors."""

import json

import pytest

from rig.errors import GameError, SchemaError
from rig.game import (ActMap, Game, MooreMachine, Objective, color_of,
                      cumulative_coloring, game_from_json, game_to_json,
                      is_target_absorbing, load_game, make_target_absorbing,
                      save_game)
from rig.instances import identity_relation, matching_pennies


def single_action_game(win_loops=True):
    # two states, one action with two moves; c1 flips, c2 stays
    actmap = ActMap(("go",), ("c1", "c2"), {"c1": "go", "c2": "go"})
    back = "s0" if not win_loops else "s1"
    moore = MooreMachine(
        states=("s0", "s1"),
        initial="s0",
        delta={"s0": {"c1": "s1", "c2": "s0"},
               "s1": {"c1": back, "c2": "s1"}},
        output={"s0": 0, "s1": 1},
    )
    return Game(actmap=actmap, moore=moore,
                indist=identity_relation(actmap.moves))


def test_actmap_moves_of_and_surjectivity():
    am = ActMap(("a", "b"), ("a1", "a2", "b1"),
                {"a1": "a", "a2": "a", "b1": "b"})
    assert am.moves_of("a") == ("a1", "a2")
    assert am.moves_of("b") == ("b1",)
    with pytest.raises(GameError):
        ActMap(("a", "b"), ("a1",), {"a1": "a"})  # b has no move


def test_actmap_rejects_unknown_action_in_act():
    with pytest.raises(GameError):
        ActMap(("a",), ("a1",), {"a1": "zzz"})


def test_moore_totality_checked_on_game_construction():
    actmap = ActMap(("go",), ("c1", "c2"), {"c1": "go", "c2": "go"})
    moore = MooreMachine(("s0",), "s0", {"s0": {"c1": "s0"}}, {"s0": 0})
    with pytest.raises(GameError):
        Game(actmap=actmap, moore=moore,
             indist=identity_relation(actmap.moves))


def test_colors_along_pennies_history(pennies):
    game, _ = pennies
    # worked by hand on the four-state machine: correct guess wins,
    # wrong guess restarts
    assert color_of(game, ("a1", "a1")) == 1
    assert color_of(game, ("a1", "b1")) == 0
    assert cumulative_coloring(game, ("a1", "a1")) == (0, 1)
    assert cumulative_coloring(game, ("a1", "b1", "a2", "b2")) == (0, 0, 0, 1)
    with pytest.raises(GameError):
        color_of(game, ("nope",))


def test_relation_related_on_pennies(pennies):
    game, _ = pennies
    rel = game.indist
    assert rel.related((), ())
    assert rel.related(("a1",), ("a2",))  # same guess, both coins hidden
    assert not rel.related(("a1",), ("b1",))  # different actions are visible
    assert rel.related(("a1", "b1"), ("a1", "b2"))  # same restart, coin hidden
    assert not rel.related(("a1", "a1"), ("a2", "a1"))  # win vs restart
    assert not rel.related(("a1",), ("a1", "a1"))  # length mismatch


def test_target_absorbing_detection(pennies):
    game, _ = pennies
    assert is_target_absorbing(game)
    assert not is_target_absorbing(single_action_game(win_loops=False))


def test_make_target_absorbing_latches_and_preserves_prefixes():
    game = single_action_game(win_loops=False)
    latched = make_target_absorbing(game)
    assert is_target_absorbing(latched)
    # traces agree up to and including the first 1
    for hist in [("c1",), ("c2", "c1"), ("c1", "c2")]:
        assert cumulative_coloring(game, hist) == \
            cumulative_coloring(latched, hist)
    # beyond the first 1 the latched machine stays at 1
    assert cumulative_coloring(game, ("c1", "c1")) == (1, 0)
    assert cumulative_coloring(latched, ("c1", "c1")) == (1, 1)


def test_make_target_absorbing_idempotent_on_traces(pennies):
    game, _ = pennies
    again = make_target_absorbing(game)
    for hist in [("a1", "a1"), ("a1", "b1", "b2", "b1"), ("a2", "b2", "a1")]:
        assert cumulative_coloring(game, hist) == \
            cumulative_coloring(again, hist)


def test_make_target_absorbing_requires_binary_colors():
    from rig.instances import fig3_game
    with pytest.raises(GameError):
        make_target_absorbing(fig3_game())


def test_objective_validation():
    Objective("reach", horizon=5)
    with pytest.raises(GameError):
        Objective("buchi", horizon=3)
    with pytest.raises(GameError):
        Objective("parity")


def test_game_json_round_trip(pennies):
    game, _ = pennies
    data = game_to_json(game)
    back = game_from_json(json.loads(json.dumps(data)))
    assert game_to_json(back) == data


def test_game_json_schema_errors(pennies):
    game, _ = pennies
    data = game_to_json(game)
    bad = json.loads(json.dumps(data))
    del bad["moves"]
    with pytest.raises(SchemaError):
        game_from_json(bad)
    bad = json.loads(json.dumps(data))
    bad["format"] = "rig-game/9"
    with pytest.raises(SchemaError):
        game_from_json(bad)
    bad = json.loads(json.dumps(data))
    bad["moore"]["delta"]["p0"]["a1"] = "ghost"
    with pytest.raises(SchemaError):
        game_from_json(bad)
    bad = json.loads(json.dumps(data))
    bad["moore"]["output"]["p0"] = "zero"
    with pytest.raises(SchemaError):
        game_from_json(bad)


def test_game_file_round_trip(tmp_path):
    game, _ = matching_pennies()
    path = tmp_path / "g.json"
    save_game(path, game)
    back = load_game(path)
    assert game_to_json(back) == game_to_json(game)
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_game(path)


def test_moore_trim_drops_unreachable():
    actmap = ActMap(("go",), ("c1",), {"c1": "go"})
    moore = MooreMachine(
        states=("s0", "orphan"),
        initial="s0",
        delta={"s0": {"c1": "s0"}, "orphan": {"c1": "s0"}},
        output={"s0": 0, "orphan": 1},
    )
    trimmed = moore.trim()
    assert trimmed.states == ("s0",)
    assert actmap.moves == ("c1",)
