#!/usr/bin/env python3
"""Cross-check the solver against independent oracles on random families.

Three sweeps, mirroring the heavier acceptance tests but tunable from the
command line:

  * identity-relation instances against a plain perfect-information
    attractor,
  * Reif games against exhaustive belief support-pattern analysis,
  * small Buchi instances against positional-adversary enumeration.

    python3 scripts/random_families.py [count]
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from rig import instances, oracles  # noqa: E402
from rig.reif import reif_to_game, subset_morphism  # noqa: E402
from rig.solver import build_arena, is_almost_sure_winning, \
    solve_buchi  # noqa: E402


def sweep_perfect_info(count):
    mismatches = 0
    for seed in range(count):
        game, morphism = instances.random_perfect_info(seed)
        arena = build_arena(game, morphism)
        got = is_almost_sure_winning(arena)
        states, _ = oracles.perfect_info_attractor(game)
        want = game.moore.initial in states
        mismatches += got != want
    return mismatches


def sweep_reif(count):
    mismatches = 0
    for seed in range(count):
        rg = instances.random_reif(seed)
        arena = build_arena(reif_to_game(rg), subset_morphism(rg))
        got = is_almost_sure_winning(arena)
        want = oracles.reif_almost_sure(rg)
        mismatches += got != want
    return mismatches


def sweep_buchi(count):
    mismatches = 0
    for seed in range(count):
        game, morphism = instances.random_perfect_info(
            seed, max_states=4, max_actions=2, max_moves=4, latch=False)
        arena = build_arena(game, morphism)
        result = solve_buchi(arena)
        got = arena.initial in result.y_star
        want = oracles.perfect_info_buchi(game)
        mismatches += got != want
    return mismatches


def main():
    count = int(sys.argv[1]) if len(sys.argv) > 1 else 50
    for label, sweep in (("perfect-info", sweep_perfect_info),
                         ("reif", sweep_reif),
                         ("buchi", sweep_buchi)):
        bad = sweep(count)
        print(f"{label}: {count - bad}/{count} agree"
              + ("" if not bad else f"  <-- {bad} MISMATCHES"))


if __name__ == "__main__":
    main()
