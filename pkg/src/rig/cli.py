"""Command line entry point.

Machine output is JSON on standard output; human-readable summaries go to
standard error (set RIG_COLOR=never to strip color; the default "auto"
colors only when standard error is a terminal).  Every file the tool
writes embeds a run manifest, and a rerun with an identical manifest
produces identical bytes.

Exit codes: 0 success or true verdict, 1 clean false verdict (for
example: not almost-sure winning, no spoiler exists), 2 input error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction

from . import __version__, instances
from .errors import (CapExceeded, GameError, MorphismError, RefinementError,
                     SchemaError, SolverError, StrategyError)
from .game import GAME_FORMAT, load_game, save_game
from .jsonio import RunManifest, dump_json, frac_to_str, write_json_file
from .morphism import (MORPHISM_FORMAT, compute_approx, load_morphism,
                       save_morphism, validate_rectangularity,
                       validate_refinement)
from .probability import (build_product_chain, reach_prob_horizon,
                          reach_prob_limit, simulate)
from .refinement import (CERTIFICATE_FORMAT, certificate_to_text, check_psi,
                         check_psi_prime, check_h_is_abstract_g,
                         fig3_tree_G, fig3_tree_H, replay_certificate,
                         tree_to_json)
from .reif import REIF_FORMAT, load_reif, reif_to_game, save_reif, \
    subset_morphism
from .solver import build_arena, solve, solve_reach
from .strategy import (STRATEGY_FORMAT, build_spoiler, extract_strategy,
                       load_strategy, save_strategy, strategy_to_json,
                       uniform_support_strategy, verify_almost_sure)
from .validation import validate_game

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_INPUT = 2
EXIT_CAP = 3


def _color_enabled() -> bool:
    mode = os.environ.get("RIG_COLOR", "auto")
    if mode == "never":
        return False
    return bool(getattr(sys.stderr, "isatty", lambda: False)())


def note(message, good=None):
    if good is not None and _color_enabled():
        code = "32" if good else "31"
        message = f"\x1b[{code}m{message}\x1b[0m"
    print(message, file=sys.stderr)


def emit(data):
    sys.stdout.write(dump_json(data))


def _manifest(command, args, inputs=(), seed=None) -> RunManifest:
    options = {}
    for key in ("objective", "grid", "max_universe", "max_enum", "rounds",
                "samples", "horizon", "depth", "method", "check", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    manifest = RunManifest(command=command, seed=seed, options=options)
    for name, path, fmt in inputs:
        manifest.add_input(name, path, fmt)
    return manifest


def _load_pair(args):
    game = load_game(args.game)
    morphism = load_morphism(args.morphism, moves=game.actmap.moves)
    return game, morphism


def _arena(args):
    game, morphism = _load_pair(args)
    return game, morphism, build_arena(game, morphism,
                                       max_universe=args.max_universe)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    game = load_game(args.game)
    t0 = time.perf_counter()
    report = validate_game(game, depth=args.depth or 0)
    out = report.to_json()
    passed = report.passed
    if args.morphism:
        morphism = load_morphism(args.morphism, moves=game.actmap.moves)
        refinement = validate_refinement(game, morphism)
        rectangular = validate_rectangularity(game, morphism)
        out["refinement"] = refinement.to_json()
        out["rectangularity"] = rectangular.to_json()
        passed = passed and refinement.passed and rectangular.passed
    out["passed"] = passed
    out["manifest"] = _manifest("validate", args, _input_list(args)).to_json()
    emit(out)
    note(f"validate: {'pass' if passed else 'FAIL'} "
         f"({time.perf_counter() - t0:.3f}s)", good=passed)
    return EXIT_TRUE if passed else EXIT_FALSE


def _input_list(args):
    inputs = []
    if getattr(args, "game", None):
        inputs.append(("game", args.game, GAME_FORMAT))
    if getattr(args, "morphism", None):
        inputs.append(("morphism", args.morphism, MORPHISM_FORMAT))
    if getattr(args, "strategy", None):
        inputs.append(("strategy", args.strategy, STRATEGY_FORMAT))
    if getattr(args, "env_strategy", None):
        inputs.append(("env_strategy", args.env_strategy, STRATEGY_FORMAT))
    return inputs


def cmd_solve(args) -> int:
    _, _, arena = _arena(args)
    t0 = time.perf_counter()
    result = solve(arena, args.objective)
    elapsed = time.perf_counter() - t0
    winning = arena.initial in result.y_star
    out = {"winning": winning}
    out.update(result.to_json(arena))
    out["manifest"] = _manifest("solve", args, _input_list(args)).to_json()
    emit(out)
    note(f"solve[{args.objective}]: winning = {winning} "
         f"(|Y*| = {len(result.y_star)} of {result.universe_size}, "
         f"{elapsed:.3f}s)", good=winning)
    return EXIT_TRUE if winning else EXIT_FALSE


def cmd_strategy(args) -> int:
    _, _, arena = _arena(args)
    result = solve(arena, args.objective)
    try:
        sigma = extract_strategy(arena, result)
    except StrategyError as exc:
        emit({"winning": False, "detail": str(exc)})
        note(f"strategy: {exc}", good=False)
        return EXIT_FALSE
    manifest = _manifest("strategy", args, _input_list(args))
    data = strategy_to_json(sigma)
    data["manifest"] = manifest.to_json()
    if args.out:
        write_json_file(args.out, data)
        note(f"strategy: wrote {args.out}", good=True)
    emit(data)
    return EXIT_TRUE


def cmd_verify(args) -> int:
    _, _, arena = _arena(args)
    sigma = load_strategy(args.strategy)
    verdict = verify_almost_sure(arena, sigma, objective=args.objective,
                                 method=args.method, max_enum=args.max_enum)
    out = {
        "almost_sure": verdict,
        "objective": args.objective,
        "method": args.method,
        "manifest": _manifest("verify", args, _input_list(args)).to_json(),
    }
    emit(out)
    note(f"verify[{args.objective}]: almost_sure = {verdict}", good=verdict)
    return EXIT_TRUE if verdict else EXIT_FALSE


def cmd_refute(args) -> int:
    _, _, arena = _arena(args)
    sigma = load_strategy(args.strategy)
    spoiler = build_spoiler(arena, sigma, max_enum=args.max_enum,
                            method=args.method)
    manifest = _manifest("refute", args, _input_list(args))
    if spoiler is None:
        emit({"spoiler": None, "almost_sure": True,
              "manifest": manifest.to_json()})
        note("refute: no spoiler exists; the strategy wins almost surely",
             good=None)
        return EXIT_FALSE
    data = {
        "spoiler": strategy_to_json(spoiler),
        "almost_sure": False,
        "spoil_prob": frac_to_str(spoiler.spoil_prob),
        "manifest": manifest.to_json(),
    }
    if args.out:
        file_data = strategy_to_json(spoiler)
        file_data["spoil_prob"] = frac_to_str(spoiler.spoil_prob)
        file_data["manifest"] = manifest.to_json()
        write_json_file(args.out, file_data)
        note(f"refute: wrote spoiler to {args.out}")
    emit(data)
    note(f"refute: spoiler found, Pr(reach) = {spoiler.spoil_prob}",
         good=True)
    return EXIT_TRUE


def cmd_simulate(args) -> int:
    game = load_game(args.game)
    alpha = load_strategy(args.strategy)
    beta = load_strategy(args.env_strategy) if args.env_strategy else None
    if beta is not None and beta.role != "environment":
        raise SchemaError("--env-strategy file must have role \"environment\"",
                          "role")
    result = simulate(game, alpha, beta, rounds=args.rounds,
                      samples=args.samples, seed=args.seed,
                      transcripts=args.transcripts, threads=args.threads)
    out = result.to_json()
    out["manifest"] = _manifest("simulate", args, _input_list(args),
                                seed=args.seed).to_json()
    emit(out)
    note(f"simulate: {result.hits}/{result.samples} runs reached the target "
         f"within {args.rounds} moves (estimate {out['estimate']})")
    return EXIT_TRUE


def cmd_prob(args) -> int:
    game = load_game(args.game)
    alpha = load_strategy(args.strategy)
    beta = load_strategy(args.env_strategy) if args.env_strategy else None
    chain = build_product_chain(game, alpha, beta)
    if args.horizon is not None:
        value = reach_prob_horizon(chain, args.horizon)
    else:
        value = reach_prob_limit(chain)
    out = {
        "exact": frac_to_str(value),
        "decimal": f"{float(value):.6f}",
        "horizon": args.horizon,
        "chain_states": len(chain.labels),
        "manifest": _manifest("prob", args, _input_list(args)).to_json(),
    }
    emit(out)
    horizon = "limit" if args.horizon is None else f"{args.horizon} moves"
    note(f"prob[{horizon}]: {value} = {float(value):.6f}")
    return EXIT_TRUE


def cmd_reif(args) -> int:
    if args.reif_command != "compile":
        raise SchemaError(f"unknown reif subcommand {args.reif_command!r}")
    rg = load_reif(args.input)
    latch = not args.no_latch
    game = reif_to_game(rg, latch=latch)
    morphism = subset_morphism(rg, latch=latch)
    manifest = _manifest("reif compile", args,
                         [("reif", args.input, REIF_FORMAT)])
    save_game(args.out_game, game, manifest=manifest)
    save_morphism(args.out_morphism, morphism, manifest=manifest)
    out = {
        "game": args.out_game,
        "morphism": args.out_morphism,
        "latch": latch,
        "moore_states": len(game.moore.states),
        "abstract_states": len(morphism.abstract_states),
        "manifest": manifest.to_json(),
    }
    emit(out)
    note(f"reif compile: {len(rg.locations)} locations -> "
         f"{len(game.moore.states)} moore states, "
         f"{len(morphism.abstract_states)} belief states")
    return EXIT_TRUE


def cmd_counterexample(args) -> int:
    check = check_psi if args.check == "psi" else check_psi_prime
    t0 = time.perf_counter()
    verdict, certificate = check(args.grid)
    if verdict:
        replay_certificate(certificate)
    manifest = _manifest("counterexample", args)
    certificate["manifest"] = manifest.to_json()
    if args.certificate:
        write_json_file(args.certificate, certificate)
        note(f"counterexample: wrote certificate to {args.certificate}")
    emit(certificate)
    note(certificate_to_text(certificate).rstrip() +
         f" ({time.perf_counter() - t0:.3f}s)", good=verdict)
    return EXIT_TRUE if verdict else EXIT_FALSE


# ---------------------------------------------------------------------------
# Demos
# ---------------------------------------------------------------------------

def write_demo_files(name, out_dir, grid=8):
    """Write the bundled instance files for one demo into out_dir.

    Paths inside the manifests are file names only, so regeneration in any
    directory produces identical bytes.  Returns {label: path}.
    """

    os.makedirs(out_dir, exist_ok=True)
    files = {}

    def target(fname):
        files[fname] = os.path.join(out_dir, fname)
        return files[fname]

    manifest = RunManifest(command=f"demo {name}")
    if name == "matching-pennies":
        game, morphism = instances.matching_pennies()
        save_game(target("matching-pennies-game.json"), game,
                  manifest=manifest)
        save_morphism(target("matching-pennies-morphism.json"), morphism,
                      manifest=manifest)
    elif name == "env-loss":
        game, morphism = instances.env_loss()
        save_game(target("env-loss-game.json"), game, manifest=manifest)
        save_morphism(target("env-loss-morphism.json"), morphism,
                      manifest=manifest)
    elif name == "fig3":
        game = instances.fig3_game()
        morphism = instances.fig3_morphism()
        save_game(target("fig3-game.json"), game, manifest=manifest)
        save_morphism(target("fig3-morphism.json"), morphism,
                      manifest=manifest)
        for tree, fname in ((fig3_tree_G(), "fig3-G.json"),
                            (fig3_tree_H(), "fig3-H.json")):
            data = tree_to_json(tree)
            data["manifest"] = manifest.to_json()
            write_json_file(target(fname), data)
    else:
        raise SchemaError(f"unknown demo {name!r}")
    return files


def _demo_matching_pennies(args, files):
    game, morphism = instances.matching_pennies()
    report = validate_game(game)
    arena = build_arena(game, morphism)
    result = solve_reach(arena)
    winning = arena.initial in result.y_star
    sigma = extract_strategy(arena, result)
    manifest = RunManifest(command="demo matching-pennies", seed=args.seed)
    strategy_path = os.path.join(args.out_dir,
                                 "matching-pennies-strategy.json")
    save_strategy(strategy_path, sigma, manifest=manifest)
    files["matching-pennies-strategy.json"] = strategy_path
    verified = verify_almost_sure(arena, sigma)
    chain = build_product_chain(game, sigma)
    exact = reach_prob_horizon(chain, 2 * args.rounds)
    sim = simulate(game, sigma, rounds=2 * args.rounds,
                   samples=args.samples, seed=args.seed)
    ok = winning and verified and report.passed
    return ok, {
        "validation_passed": report.passed,
        "winning": winning,
        "y_star_size": len(result.y_star),
        "universe_size": result.universe_size,
        "action_sets": {p: list(a) for p, a in result.action_sets.items()},
        "verified_almost_sure": verified,
        "exact_reach_prob": frac_to_str(exact),
        "monte_carlo": sim.to_json(),
    }


def _demo_env_loss(args, files):
    game, morphism = instances.env_loss()
    report = validate_game(game)
    arena = build_arena(game, morphism)
    result = solve_reach(arena)
    winning = arena.initial in result.y_star
    sigma = uniform_support_strategy(morphism, {}, arena.actions)
    spoiler = build_spoiler(arena, sigma)
    summary = {
        "validation_passed": report.passed,
        "winning": winning,
        "spoiler_found": spoiler is not None,
    }
    if spoiler is not None:
        manifest = RunManifest(command="demo env-loss")
        path = os.path.join(args.out_dir, "env-loss-spoiler.json")
        save_strategy(path, spoiler, manifest=manifest)
        files["env-loss-spoiler.json"] = path
        summary["spoil_prob"] = frac_to_str(spoiler.spoil_prob)
    ok = report.passed and not winning and spoiler is not None
    return ok, summary


def _demo_fig3(args, files):
    game = instances.fig3_game()
    morphism = instances.fig3_morphism()
    report = validate_game(game)
    refinement = validate_refinement(game, morphism)
    rectangular = validate_rectangularity(game, morphism)
    approx = compute_approx(game, morphism)
    structural = check_h_is_abstract_g()
    ok_psi, cert_psi = check_psi(args.grid)
    ok_prime, cert_prime = check_psi_prime(args.grid)
    manifest = RunManifest(command="demo fig3", options={"grid": args.grid})
    for cert, fname in ((cert_psi, "fig3-psi-certificate.json"),
                        (cert_prime, "fig3-psi-prime-certificate.json")):
        replay_certificate(cert)
        cert["manifest"] = manifest.to_json()
        path = os.path.join(args.out_dir, fname)
        write_json_file(path, cert)
        files[fname] = path
    ok = (report.passed and refinement.passed and rectangular.passed
          and structural and ok_psi and ok_prime)
    return ok, {
        "validation_passed": report.passed,
        "refinement_passed": refinement.passed,
        "rectangularity_passed": rectangular.passed,
        "abstract_classes": sorted(sorted(c) for c in approx.classes),
        "h_matches_abstract_g": structural,
        "psi": ok_psi,
        "psi_prime": ok_prime,
    }


def cmd_demo(args) -> int:
    files = write_demo_files(args.name, args.out_dir, grid=args.grid)
    runner = {
        "matching-pennies": _demo_matching_pennies,
        "env-loss": _demo_env_loss,
        "fig3": _demo_fig3,
    }[args.name]
    ok, summary = runner(args, files)
    out = {"demo": args.name, "ok": ok, "files": files}
    out.update(summary)
    emit(out)
    note(f"demo {args.name}: {'ok' if ok else 'FAILED'}, "
         f"{len(files)} files in {args.out_dir}", good=ok)
    return EXIT_TRUE if ok else EXIT_FALSE


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_game_morphism(parser, morphism_required=True):
    parser.add_argument("--game", required=True, help="rig-game/1 file")
    parser.add_argument("--morphism", required=morphism_required,
                        help="rig-morphism/1 file")
    parser.add_argument("--max-universe", type=int, default=None,
                        help="cap on |P| + |P x A| (default: unlimited)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rig",
        description="Solver for two-player games with imperfect information "
                    "given by indistinguishability relations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check game axioms and morphism laws")
    p.add_argument("--game", required=True)
    p.add_argument("--morphism", default=None)
    p.add_argument("--depth", type=int, default=0,
                   help="also brute-force the axioms up to this history "
                        "length (0 disables)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="decide almost-sure winning")
    _add_game_morphism(p)
    p.add_argument("--objective", default="reach",
                   choices=["reach", "buchi", "safe", "cobuchi"])
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("strategy", help="extract the uniform winning strategy")
    _add_game_morphism(p)
    p.add_argument("--objective", default="reach",
                   choices=["reach", "buchi"])
    p.add_argument("--out", default=None, help="write rig-strategy/1 here")
    p.set_defaults(func=cmd_strategy)

    p = sub.add_parser("verify",
                       help="prove a strategy almost-sure winning exactly")
    _add_game_morphism(p)
    p.add_argument("--strategy", required=True)
    p.add_argument("--objective", default="reach", choices=["reach", "buchi"])
    p.add_argument("--method", default="auto",
                   choices=["auto", "closure", "enumerate"])
    p.add_argument("--max-enum", type=int, default=100_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("refute",
                       help="find a positional environment spoiler")
    _add_game_morphism(p)
    p.add_argument("--strategy", required=True)
    p.add_argument("--method", default="greedy",
                   choices=["greedy", "enumerate"])
    p.add_argument("--max-enum", type=int, default=100_000)
    p.add_argument("--out", default=None, help="write the spoiler here")
    p.set_defaults(func=cmd_refute)

    p = sub.add_parser("simulate", help="seeded Monte Carlo runs")
    p.add_argument("--game", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--env-strategy", default=None)
    p.add_argument("--rounds", type=int, default=30,
                   help="moves per sampled play")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--transcripts", type=int, default=0,
                   help="include this many move transcripts in the output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("prob", help="exact reach probability of a strategy "
                                    "pair")
    p.add_argument("--game", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--env-strategy", default=None)
    p.add_argument("--exact", action="store_true",
                   help="accepted for compatibility; computation is always "
                        "exact")
    p.add_argument("--horizon", type=int, default=None,
                   help="number of moves; omit for the limit probability")
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("reif", help="partial-observation game compilation")
    reif_sub = p.add_subparsers(dest="reif_command", required=True)
    pc = reif_sub.add_parser("compile",
                             help="compile rig-reif/1 to game + morphism")
    pc.add_argument("--in", dest="input", required=True)
    pc.add_argument("--out-game", required=True)
    pc.add_argument("--out-morphism", required=True)
    pc.add_argument("--no-latch", action="store_true",
                    help="keep raw win flags instead of latching into an "
                         "absorbing top state")
    pc.set_defaults(func=cmd_reif)

    p = sub.add_parser("counterexample",
                       help="verify the bundled refinement counterexample")
    p.add_argument("--check", required=True, choices=["psi", "psi-prime"])
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--certificate", default=None,
                   help="write the certificate to this file")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("demo", help="regenerate a bundled instance and run "
                                    "its pipeline")
    p.add_argument("name", choices=["matching-pennies", "env-loss", "fig3"])
    p.add_argument("--out-dir", default="rig-demo")
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=30,
                   help="guess rounds for the simulation half of the demo")
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        note(f"input error: {exc}", good=False)
        emit({"error": str(exc), "path": exc.path})
        return EXIT_INPUT
    except CapExceeded as exc:
        note(f"resource cap: {exc}", good=False)
        emit({"error": str(exc), "cap": True})
        return EXIT_CAP
    except (GameError, MorphismError, SolverError, StrategyError,
            RefinementError, ValueError) as exc:
        note(f"input error: {exc}", good=False)
        emit({"error": str(exc)})
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
