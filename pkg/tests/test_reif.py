"""Partial-observation games given by state observations, and their
compilation into relation games with the belief-subset morphism."""

import json

import pytest

from rig import oracles
from rig.errors import CapExceeded, SchemaError
from rig.game import ActMap
from rig.instances import matching_pennies, pennies_reif, random_reif
from rig.morphism import compute_approx
from rig.reif import (ReifGame, load_reif, reif_from_json, reif_to_game,
                      reif_to_json, save_reif, subset_morphism)
from rig.solver import build_arena, is_almost_sure_winning, solve_reach
from rig.validation import validate_game


def test_pennies_reif_compiles_to_winning_game():
    rg = pennies_reif()
    game = reif_to_game(rg)
    m = subset_morphism(rg)
    assert validate_game(game, depth=4).passed
    arena = build_arena(game, m)
    assert is_almost_sure_winning(arena)
    # same verdict as the hand-built pennies pair
    hg, hm = matching_pennies()
    assert is_almost_sure_winning(build_arena(hg, hm))


def test_subset_morphism_states_carry_beliefs():
    rg = pennies_reif()
    m = subset_morphism(rg)
    # names are location | belief-support; the two mid states share the
    # belief {l1, l2} because the coin is hidden
    assert set(m.abstract_states) == {
        "l0|l0", "l1|l1,l2", "l2|l1,l2", "__top__"}
    assert m.initial == "l0|l0"


def test_compiled_approx_matches_belief_structure():
    rg = pennies_reif()
    game = reif_to_game(rg)
    approx = compute_approx(game, subset_morphism(rg))
    classes = {frozenset(c) for c in approx.classes}
    assert frozenset({"l1|l1,l2", "l2|l1,l2"}) in classes
    assert frozenset({"l0|l0"}) in classes


def test_latch_replaces_winning_locations_with_sink():
    rg = pennies_reif()
    latched = reif_to_game(rg)
    assert "__top__" in latched.moore.states
    assert "lw" not in latched.moore.states
    plain = reif_to_game(rg, latch=False)
    assert "lw" in plain.moore.states
    assert "__top__" not in plain.moore.states


def test_latch_handles_non_absorbing_winning_set():
    actmap = ActMap(("a",), ("a1", "a2"), {"a1": "a", "a2": "a"})
    rg = ReifGame(
        locations=("l0", "l1"),
        initial="l0",
        actmap=actmap,
        delta={"l0": {"a1": "l1", "a2": "l0"},
               "l1": {"a1": "l0", "a2": "l0"}},  # winning exits again
        obs={"l0": "o0", "l1": "o1"},
        winning=frozenset(["l1"]),
    )
    game = reif_to_game(rg)
    from rig.game import is_target_absorbing
    assert is_target_absorbing(game)
    arena = build_arena(game, subset_morphism(rg))
    result = solve_reach(arena)
    # one action, env decides between win and stay: a2 keeps the play at l0
    assert not is_almost_sure_winning(arena, result)


def test_reif_oracle_on_bundles():
    assert oracles.reif_pattern_count(pennies_reif()) == 9
    assert oracles.reif_almost_sure(pennies_reif())
    assert not oracles.reif_almost_sure(random_reif(0))


def test_reif_oracle_pattern_cap():
    with pytest.raises(CapExceeded):
        oracles.reif_almost_sure(pennies_reif(), pattern_cap=1)


def test_solver_matches_oracle_on_a_few_seeds():
    for seed in range(6):
        rg = random_reif(seed)
        arena = build_arena(reif_to_game(rg), subset_morphism(rg))
        assert is_almost_sure_winning(arena) == \
            oracles.reif_almost_sure(rg), f"seed {seed}"


def test_reif_json_round_trip(tmp_path):
    rg = pennies_reif()
    data = reif_to_json(rg)
    back = reif_from_json(json.loads(json.dumps(data)))
    assert reif_to_json(back) == data
    path = tmp_path / "rg.json"
    save_reif(path, rg)
    assert reif_to_json(load_reif(path)) == data


def test_reif_json_schema_errors():
    data = reif_to_json(pennies_reif())
    bad = json.loads(json.dumps(data))
    bad["delta"]["l0"]["a1"] = "ghost"
    with pytest.raises(SchemaError):
        reif_from_json(bad)
    bad = json.loads(json.dumps(data))
    bad["winning"] = ["ghost"]
    with pytest.raises(SchemaError):
        reif_from_json(bad)
    bad = json.loads(json.dumps(data))
    del bad["obs"]
    with pytest.raises(SchemaError):
        reif_from_json(bad)


def test_random_reif_respects_pattern_cap():
    for seed in range(8):
        rg = random_reif(seed, pattern_cap=729)
        assert oracles.reif_pattern_count(rg) <= 729
