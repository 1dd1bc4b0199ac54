"""Property-based checks over randomly generated inputs."""

from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from rig.instances import random_perfect_info, random_reif
from rig.morphism import validate_rectangularity, validate_refinement
from rig.probability import (build_product_chain, cylinder_prob, derive_seed,
                             reach_prob_horizon, reach_prob_limit)
from rig.refinement import (AffineExpr, fig3_tree_G, fig3_tree_H,
                            format_affine, leaf_distribution, parse_affine)
from rig.reif import reif_to_game, subset_morphism
from rig.solver import build_arena, closure, interior, pre, solve_reach
from rig.strategy import extract_strategy
from rig.validation import validate_game

F = Fraction

fractions01 = st.fractions(min_value=0, max_value=1, max_denominator=16)


# --------------------------------------------------------------------------
# generators produce well-formed objects
# --------------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_perfect_info_is_valid(seed):
    game, morphism = random_perfect_info(seed, max_states=5, max_actions=3,
                                        max_moves=5)
    assert validate_game(game).passed
    assert validate_refinement(game, morphism).passed
    assert validate_rectangularity(game, morphism).passed


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_reif_compiles_to_valid_pair(seed):
    rg = random_reif(seed, max_locations=3)
    game = reif_to_game(rg)
    morphism = subset_morphism(rg)
    assert validate_game(game).passed
    assert validate_refinement(game, morphism).passed
    assert validate_rectangularity(game, morphism).passed


# --------------------------------------------------------------------------
# operator laws on the pennies arena
# --------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.data())
def test_interior_closure_laws(pennies_arena, data):
    arena = pennies_arena
    universe = arena.universe()
    subset = frozenset(data.draw(st.sets(st.sampled_from(universe))))
    other = frozenset(data.draw(st.sets(st.sampled_from(universe))))

    assert interior(arena, subset) <= subset <= closure(arena, subset)
    # both operators are monotone
    if subset <= other:
        assert interior(arena, subset) <= interior(arena, other)
        assert closure(arena, subset) <= closure(arena, other)
    # duality through complement
    complement = frozenset(universe) - subset
    assert interior(arena, subset) == \
        frozenset(universe) - closure(arena, complement)
    # pre is monotone too
    if subset <= other:
        assert pre(arena, subset) <= pre(arena, other)


# --------------------------------------------------------------------------
# affine expressions
# --------------------------------------------------------------------------

@settings(max_examples=100)
@given(st.fractions(max_denominator=12),
       st.fractions(max_denominator=12),
       st.sampled_from(["t1", "x2", "y1", "z3"]))
def test_affine_format_parse_round_trip(constant, coeff, var):
    expr = AffineExpr(constant, ((var, coeff),) if coeff else ())
    assert parse_affine(format_affine(expr)) == expr


@settings(max_examples=30, deadline=None)
@given(fractions01, fractions01, fractions01,
       fractions01, fractions01, fractions01)
def test_leaf_masses_always_sum_to_one(x1, x2, x3, t1, t2, t3):
    dist = leaf_distribution(fig3_tree_G(), {
        "x1": x1, "x2": x2, "x3": x3, "t1": t1, "t2": t2, "t3": t3})
    assert sum(dist.values()) == 1
    assert all(0 <= v <= 1 for v in dist.values())


@settings(max_examples=30, deadline=None)
@given(fractions01, fractions01, fractions01, fractions01, fractions01)
def test_abstract_masses_always_sum_to_one(y1, y2, z1, z2, z3):
    dist = leaf_distribution(fig3_tree_H(), {
        "y1": y1, "y2": y2, "z1": z1, "z2": z2, "z3": z3})
    assert sum(dist.values()) == 1


# --------------------------------------------------------------------------
# probability laws
# --------------------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(st.lists(st.sampled_from(["a1", "a2"]), max_size=3))
def test_cylinder_additivity(pennies, pennies_strategy, rho):
    """P(rho) splits exactly into the four one-move extensions."""
    game, _ = pennies
    alpha = pennies_strategy
    rho = tuple(rho)
    total = cylinder_prob(game, alpha, None, rho)
    parts = sum(cylinder_prob(game, alpha, None, rho + (a,))
                for a in ("a1", "a2", "b1", "b2"))
    assert parts == total


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=40),
       st.integers(min_value=0, max_value=40))
def test_horizon_probabilities_are_monotone(pennies, pennies_strategy, j, k):
    chain = build_product_chain(pennies[0], pennies_strategy)
    pj = reach_prob_horizon(chain, j)
    pk = reach_prob_horizon(chain, k)
    if j <= k:
        assert pj <= pk
    assert pk <= reach_prob_limit(chain)


@settings(max_examples=100)
@given(st.integers(min_value=0, max_value=2**64 - 1),
       st.integers(min_value=0, max_value=1000),
       st.integers(min_value=0, max_value=1000))
def test_derive_seed_separates_indices(seed, i, j):
    if i != j:
        assert derive_seed(seed, i) != derive_seed(seed, j)
    assert 0 <= derive_seed(seed, i) < 2**64


# --------------------------------------------------------------------------
# solver on random instances: extracted strategies exist exactly when
# the initial class is in the winning set
# --------------------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=5000))
def test_extraction_matches_verdict(seed):
    game, morphism = random_perfect_info(seed, max_states=4, max_actions=2,
                                        max_moves=4)
    arena = build_arena(game, morphism)
    result = solve_reach(arena)
    if arena.initial in result.y_star:
        sigma = extract_strategy(arena, result)
        chain = build_product_chain(game, sigma)
        assert reach_prob_limit(chain) == 1
    else:
        from rig.errors import StrategyError
        import pytest
        with pytest.raises(StrategyError):
            extract_strategy(arena, result)
