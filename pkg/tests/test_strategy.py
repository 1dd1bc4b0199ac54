"""Strategy extraction, verification, spoilers, rank progress."""

from fractions import Fraction

import pytest

from rig import oracles
from rig.errors import SchemaError, StrategyError
from rig.instances import env_loss, random_perfect_info
from rig.probability import (almost_sure_reach, build_product_chain,
                             reach_prob_limit)
from rig.solver import build_arena, solve_reach
from rig.strategy import (FiniteMemoryStrategy, abstract_chain, build_spoiler,
                          check_rank_progress, extract_strategy, load_strategy,
                          morphism_memory, save_strategy, strategy_from_json,
                          strategy_to_json, uniform_support_strategy,
                          verify_almost_sure)

HALF = Fraction(1, 2)


def test_extracted_pennies_strategy_is_uniform(pennies, pennies_arena):
    game, _ = pennies
    sigma = extract_strategy(pennies_arena)
    assert sigma.role == "player"
    assert sigma.initial == "p0"
    for mem in ("p0", "p1", "p2", "pw"):
        assert sigma.emission[mem] == {"a": HALF, "b": HALF}
    morphism_memory(sigma, pennies_arena.morphism)
    sigma.validate(game.actmap)


def test_extract_refuses_losing_start(env_loss_arena):
    with pytest.raises(StrategyError, match="not almost-sure winning"):
        extract_strategy(env_loss_arena)


def test_uniform_support_strategy_rejects_empty_support(pennies_arena):
    with pytest.raises(StrategyError, match="empty action support"):
        uniform_support_strategy(pennies_arena.morphism, {"p1": set()},
                                 pennies_arena.actions)


def test_morphism_memory_mismatch(pennies_arena):
    sigma = extract_strategy(pennies_arena)
    other = FiniteMemoryStrategy(
        "player", ("m0",), "m0",
        {"m0": {c: "m0" for c in ("a1", "a2", "b1", "b2")}},
        {"m0": {"a": HALF, "b": HALF}},
    )
    with pytest.raises(StrategyError):
        morphism_memory(other, pennies_arena.morphism)
    morphism_memory(sigma, pennies_arena.morphism)


def test_verify_methods_agree_on_pennies(pennies_arena):
    sigma = extract_strategy(pennies_arena)
    assert verify_almost_sure(pennies_arena, sigma, method="closure")
    assert verify_almost_sure(pennies_arena, sigma, method="enumerate")
    assert verify_almost_sure(pennies_arena, sigma, method="auto")
    assert verify_almost_sure(pennies_arena, sigma, objective="buchi")


def test_verify_rejects_pure_pennies_strategy(pennies_arena):
    # always guessing "a" loses: the environment answers with tails
    sigma = uniform_support_strategy(
        pennies_arena.morphism, {p: {"a"} for p in pennies_arena.states},
        pennies_arena.actions)
    assert not verify_almost_sure(pennies_arena, sigma, method="closure")
    assert not verify_almost_sure(pennies_arena, sigma, method="enumerate")
    beta = build_spoiler(pennies_arena, sigma)
    assert beta is not None
    # the spoiler commits the coin to tails and the play cycles p0/p2
    assert beta.emission["p0"]["a"] == {"a2": Fraction(1)}
    assert beta.spoil_prob == 0
    # from inside the target everything is trivially winning
    assert verify_almost_sure(pennies_arena, sigma, p_start="pw")


def test_no_spoiler_against_winning_strategy(pennies_arena):
    sigma = extract_strategy(pennies_arena)
    assert build_spoiler(pennies_arena, sigma) is None
    assert build_spoiler(pennies_arena, sigma, method="enumerate") is None


def test_env_loss_spoiler_is_exact(env_loss_arena, env_loss):
    game, m = env_loss
    sigma = uniform_support_strategy(m, {}, env_loss_arena.actions)
    beta = build_spoiler(env_loss_arena, sigma)
    assert beta is not None
    assert beta.role == "environment"
    # e1 leads to the losing sink; the play never reaches the target
    assert beta.emission["s0"]["go"] == {"e1": Fraction(1)}
    assert beta.spoil_prob == 0
    chain = build_product_chain(game, sigma, beta)
    assert reach_prob_limit(chain) == 0


def test_greedy_spoiler_matches_enumeration():
    # losing seeds with a handful of support patterns; the greedy
    # construction must return the lexicographically least spoiler, which
    # is exactly what literal enumeration finds first
    for seed in (9, 12, 16, 19):
        game, m = random_perfect_info(seed)
        arena = build_arena(game, m)
        result = solve_reach(arena)
        if arena.initial in result.y_star:
            continue
        sigma = uniform_support_strategy(m, {}, arena.actions)
        fast = build_spoiler(arena, sigma, method="greedy")
        slow = build_spoiler(arena, sigma, method="enumerate")
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert fast.emission == slow.emission
            assert fast.spoil_prob == slow.spoil_prob


def test_rank_progress_on_pennies(pennies_arena, pennies_result):
    report = check_rank_progress(pennies_arena, pennies_result)
    assert report.passed
    # two actions, so the guaranteed progress mass is one half
    assert report.min_probability == HALF
    assert all(e["probability"] >= HALF for e in report.entries)
    assert {e["state"] for e in report.entries} == {"p0", "p1", "p2"}


def test_rank_progress_with_explicit_strategy(pennies_arena, pennies_result):
    sigma = extract_strategy(pennies_arena, pennies_result)
    report = check_rank_progress(pennies_arena, pennies_result, sigma)
    assert report.passed
    assert report.min_probability >= Fraction(1, len(pennies_arena.actions))


def test_winning_strategy_beats_memory_two_adversaries(pennies,
                                                       pennies_arena):
    # beyond positional spoilers: every pure two-memory environment
    # strategy still loses to the extracted strategy
    game, _ = pennies
    sigma = extract_strategy(pennies_arena)
    count = 0
    for beta in oracles.small_adversaries(game.actmap, 2):
        chain = build_product_chain(game, sigma, beta)
        assert almost_sure_reach(chain)
        count += 1
    assert count == 4096  # (2^8 memory updates) x (2^4 move picks)


def test_abstract_chain_matches_concrete_chain(pennies, pennies_arena):
    game, _ = pennies
    sigma = uniform_support_strategy(
        pennies_arena.morphism, {p: {"a"} for p in pennies_arena.states},
        pennies_arena.actions)
    beta = build_spoiler(pennies_arena, sigma)
    choice = {(p, a): next(c for c, pr in beta.emission[p][a].items() if pr)
              for p in pennies_arena.states for a in pennies_arena.actions}
    abstract = abstract_chain(pennies_arena, sigma, choice,
                              pennies_arena.initial)
    concrete = build_product_chain(game, sigma, beta)
    assert reach_prob_limit(abstract) == reach_prob_limit(concrete) \
        == beta.spoil_prob


def test_strategy_json_round_trip(tmp_path, pennies_arena):
    sigma = extract_strategy(pennies_arena)
    data = strategy_to_json(sigma)
    back = strategy_from_json(data)
    assert strategy_to_json(back) == data
    path = tmp_path / "sigma.json"
    save_strategy(path, sigma)
    assert strategy_to_json(load_strategy(path)) == data


def test_strategy_json_schema_errors(pennies_arena):
    sigma = extract_strategy(pennies_arena)
    data = strategy_to_json(sigma)
    bad = dict(data)
    bad["role"] = "referee"
    with pytest.raises(SchemaError):
        strategy_from_json(bad)
    bad = strategy_to_json(sigma)
    bad["emit"] = {mem: dict(row) for mem, row in bad["emit"].items()}
    bad["emit"]["p0"] = dict(bad["emit"]["p0"])
    bad["emit"]["p0"]["a"] = "one half"
    with pytest.raises(SchemaError):
        strategy_from_json(bad)
    bad = strategy_to_json(sigma)
    bad["update"]["p0"] = dict(bad["update"]["p0"])
    bad["update"]["p0"]["a1"] = "ghost"
    with pytest.raises(SchemaError):
        strategy_from_json(bad)


def test_spoiler_probability_stays_below_one_on_losing_family():
    # a couple of losing instances with several patterns each
    for seed in (9, 12):
        game, m = random_perfect_info(seed)
        arena = build_arena(game, m)
        if arena.initial in solve_reach(arena).y_star:
            continue
        for support in ({"q0": {"act0"}}, {}):
            sigma = uniform_support_strategy(m, support, arena.actions)
            beta = build_spoiler(arena, sigma)
            assert beta is not None
            assert 0 <= beta.spoil_prob < 1
