#!/usr/bin/env python3
"""Measure how fixpoint solving scales with the abstract state count.

Runs the pennies-ladder family at |P| in {10, 20, 40, 80} (plus any sizes
given on the command line), times solve_reach only (arena construction
and validation are one-time costs), and fits a log-log slope.  The
acceptance suite requires the fitted exponent to stay at or below 2.5.

    python3 scripts/scaling_experiment.py [sizes...]
"""

import math
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from rig.instances import scaling_instance  # noqa: E402
from rig.solver import build_arena, solve_reach  # noqa: E402


def time_solve(n, repeats=5):
    game, morphism = scaling_instance(n)
    arena = build_arena(game, morphism)
    best = None
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = solve_reach(arena)
        elapsed = time.perf_counter() - t0
        best = elapsed if best is None else min(best, elapsed)
    return best, result


def fitted_exponent(sizes, times):
    xs = [math.log(n) for n in sizes]
    ys = [math.log(t) for t in times]
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    num = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    den = sum((x - mean_x) ** 2 for x in xs)
    return num / den


def main():
    sizes = [int(a) for a in sys.argv[1:]] or [10, 20, 40, 80]
    times = []
    print(f"{'|P|':>5} {'solve (s)':>12} {'N*':>5} {'inner':>6}")
    for n in sizes:
        best, result = time_solve(n)
        times.append(best)
        print(f"{n:>5} {best:>12.6f} {result.max_rank():>5} "
              f"{result.inner_iterations:>6}")
    if len(sizes) >= 2:
        slope = fitted_exponent(sizes, times)
        print(f"fitted exponent: {slope:.2f}")


if __name__ == "__main__":
    main()
