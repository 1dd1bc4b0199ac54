"""Finite-memory strategies: extraction, refutation, verification.

The extracted player strategy uses the morphism automaton as memory and
emits the uniform distribution over the supported actions A_p of the
current abstract state.  Because the winning set is closed under the
transported relation, equivalent states share A_p, which makes the
strategy information-consistent.

Refutation goes the other way: given a player strategy over morphism
memory, the environment faces a finite Markov decision problem, and pure
positional adversaries suffice.  A spoiler is a positional move choice
whose induced chain misses the targets with positive probability.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import jsonio
from .errors import CapExceeded, SchemaError, SolverError, StrategyError
from .probability import (ONE, ProductChain, ZERO, almost_sure_reach,
                          check_dist, reach_prob_limit, uniform_dist)

STRATEGY_FORMAT = "rig-strategy/1"
DEFAULT_ENUM_CAP = 100_000


@dataclass
class FiniteMemoryStrategy:
    """Strategy as a memory automaton with per-memory emissions.

    Memory is updated by every move played.  Players emit a distribution
    over actions; environments emit, per action, a distribution over the
    moves supporting that action.  All probabilities are exact Fractions.
    """

    role: str  # "player" or "environment"
    memory: tuple
    initial: str
    table: dict  # memory -> move -> memory
    emission: dict  # player: mem -> {action: prob}; env: mem -> {action: {move: prob}}

    def __post_init__(self):
        if self.role not in ("player", "environment"):
            raise StrategyError(f"unknown role {self.role!r}")
        self.memory = tuple(self.memory)
        if self.initial not in self.memory:
            raise StrategyError(f"initial memory {self.initial!r} unknown")

    def update(self, mem, move):
        try:
            return self.table[mem][move]
        except KeyError as exc:
            raise StrategyError(f"no memory update for ({mem!r}, {move!r})") from exc

    def emit_actions(self, mem) -> dict:
        if self.role != "player":
            raise StrategyError("environment strategies emit moves, not actions")
        return self.emission[mem]

    def emit_moves(self, mem, action) -> dict:
        if self.role != "environment":
            raise StrategyError("player strategies emit actions, not moves")
        try:
            return self.emission[mem][action]
        except KeyError as exc:
            raise StrategyError(
                f"no emission for memory {mem!r}, action {action!r}") from exc

    def support(self, mem, action=None) -> tuple:
        if self.role == "player":
            return tuple(a for a, p in sorted(self.emission[mem].items()) if p > 0)
        return tuple(c for c, p in sorted(self.emission[mem][action].items())
                     if p > 0)

    def validate(self, actmap):
        """Check totality of the update table and well-formed emissions."""
        for mem in self.memory:
            row = self.table.get(mem, {})
            for c in actmap.moves:
                if c not in row:
                    raise StrategyError(f"memory {mem!r} has no update on {c!r}")
                if row[c] not in self.memory:
                    raise StrategyError(
                        f"update ({mem!r}, {c!r}) leaves the memory set")
            if self.role == "player":
                dist = self.emission.get(mem)
                if dist is None:
                    raise StrategyError(f"memory {mem!r} has no emission")
                for a in dist:
                    if a not in actmap.actions:
                        raise StrategyError(
                            f"emission at {mem!r} mentions unknown action {a!r}")
                check_dist(dist, f"emission at {mem!r}")
            else:
                per_action = self.emission.get(mem, {})
                for a in actmap.actions:
                    dist = per_action.get(a)
                    if dist is None:
                        raise StrategyError(
                            f"memory {mem!r} has no emission for action {a!r}")
                    supporting = set(actmap.moves_of(a))
                    for c, p in dist.items():
                        if p > 0 and c not in supporting:
                            raise StrategyError(
                                f"emission at {mem!r}/{a!r} puts mass on {c!r}, "
                                f"which does not support {a!r}")
                    check_dist(dist, f"emission at {mem!r}/{a!r}")


def morphism_memory(sigma: FiniteMemoryStrategy, m) -> None:
    """Require that sigma's memory is exactly the morphism automaton."""
    if set(sigma.memory) != set(m.abstract_states) or sigma.initial != m.initial:
        raise StrategyError("strategy memory does not match the morphism states")
    for p in m.abstract_states:
        for c, nxt in m.delta_p[p].items():
            if sigma.table.get(p, {}).get(c) != nxt:
                raise StrategyError(
                    f"strategy memory update differs from the morphism at "
                    f"({p!r}, {c!r})")


def uniform_support_strategy(m, pattern, actions) -> FiniteMemoryStrategy:
    """Player strategy over morphism memory, uniform over pattern[p].

    `pattern` maps each abstract state to a nonempty set of actions; states
    missing from the pattern get the uniform distribution over all actions.
    """

    emission = {}
    for p in m.abstract_states:
        support = sorted(pattern.get(p, actions))
        if not support:
            raise StrategyError(f"empty action support at {p!r}")
        emission[p] = uniform_dist(support)
    return FiniteMemoryStrategy(
        role="player",
        memory=m.abstract_states,
        initial=m.initial,
        table={p: dict(m.delta_p[p]) for p in m.abstract_states},
        emission=emission,
    )


def extract_strategy(arena, result=None) -> FiniteMemoryStrategy:
    """Uniform strategy over the supported actions of the winning set.

    Memory is the morphism automaton, so the memory size is at most the
    number of abstract states.  States outside the winning set (never
    visited when starting inside it) fall back to uniform over all
    actions.  Raises StrategyError when the initial state is not winning.
    """

    from .solver import solve_reach

    if result is None:
        result = solve_reach(arena)
    if arena.initial not in result.y_star:
        raise StrategyError(
            f"initial abstract state {arena.initial!r} is not almost-sure "
            f"winning; no strategy to extract")
    pattern = {p: set(acts) for p, acts in result.action_sets.items() if acts}
    return uniform_support_strategy(arena.morphism, pattern, arena.actions)


@dataclass
class RankProgressReport:
    passed: bool
    entries: list
    min_probability: Fraction | None

    def to_json(self):
        return {
            "passed": self.passed,
            "min_probability": (jsonio.frac_to_str(self.min_probability)
                                if self.min_probability is not None else None),
            "entries": [
                {
                    "state": e["state"],
                    "rank": e["rank"],
                    "good_actions": list(e["good_actions"]),
                    "decrease_probability": jsonio.frac_to_str(e["probability"]),
                    "ok": e["ok"],
                }
                for e in self.entries
            ],
        }


def check_rank_progress(arena, result, sigma=None) -> RankProgressReport:
    """Verify the one-step progress argument behind the extracted strategy.

    For every winning non-target state p there must be a supported action
    whose pair outranks every successor, and the strategy must pick such an
    action with probability at least 1/|A|.  A failure here is an internal
    soundness bug, reported rather than raised so it can be inspected.
    """

    if sigma is None:
        sigma = extract_strategy(arena, result)
    bound = Fraction(1, len(arena.actions))
    entries = []
    min_prob = None
    passed = True
    for p in arena.states:
        if p not in result.y_star or p in arena.targets:
            continue
        good = []
        for a in result.action_sets.get(p, ()):
            pair_rank = result.ranks.get((p, a))
            if pair_rank is None or pair_rank >= result.ranks[p]:
                continue
            succ_ranks = [result.ranks.get(arena.morphism.step(p, c))
                          for c in arena.moves_of[a]]
            if all(r is not None and r < pair_rank for r in succ_ranks):
                good.append(a)
        dist = sigma.emit_actions(p)
        prob = sum((dist.get(a, ZERO) for a in good), ZERO)
        ok = bool(good) and prob >= bound
        passed = passed and ok
        if ok:
            min_prob = prob if min_prob is None else min(min_prob, prob)
        entries.append({"state": p, "rank": result.ranks[p],
                        "good_actions": good, "probability": prob, "ok": ok})
    return RankProgressReport(passed, entries, min_prob)


# ---------------------------------------------------------------------------
# Refutation: positional environment adversaries
# ---------------------------------------------------------------------------

def _support_map(arena, sigma):
    morphism_memory(sigma, arena.morphism)
    return {p: sigma.support(p) for p in arena.states}


def _reachable_states(arena, support, p_start, prune_at_targets):
    seen = {p_start}
    queue = [p_start]
    while queue:
        p = queue.pop()
        if prune_at_targets and p in arena.targets:
            continue
        for a in support[p]:
            for c in arena.moves_of[a]:
                q = arena.morphism.step(p, c)
                if q not in seen:
                    seen.add(q)
                    queue.append(q)
    return seen


def abstract_chain(arena, sigma, choice, p_start) -> ProductChain:
    """Chain on abstract states for sigma versus a positional move choice.

    `choice` maps (state, action) to the move the environment resolves the
    action to.  Both strategies read the same memory (the morphism), so
    abstract states are the whole chain state.
    """

    labels = [p_start]
    index = {p_start: 0}
    trans = []
    target = []
    queue = [p_start]
    while queue:
        p = queue.pop(0)
        row = {}
        dist = sigma.emit_actions(p)
        for a in sorted(dist):
            if dist[a] == 0:
                continue
            # Cells never constrained (absorbing targets, unreachable
            # states) default to the least supporting move.
            c = choice.get((p, a), arena.moves_of[a][0])
            q = arena.morphism.step(p, c)
            if q not in index:
                index[q] = len(labels)
                labels.append(q)
                queue.append(q)
            row[index[q]] = row.get(index[q], ZERO) + dist[a]
        trans.append(row)
        target.append(p in arena.targets)
    return ProductChain(tuple(labels), trans, target, 0)


def _sure_avoid(arena, support, constrained=None) -> set:
    """Greatest set of non-target states the environment can trap in.

    A state stays while every supported action has a move keeping the set;
    `constrained` optionally pins the environment's move on some (state,
    action) cells, restricting its freedom there.
    """

    constrained = constrained or {}
    avoid = {p for p in arena.states if p not in arena.targets}
    changed = True
    while changed:
        changed = False
        for p in sorted(avoid):
            for a in support[p]:
                if (p, a) in constrained:
                    moves = (constrained[(p, a)],)
                else:
                    moves = arena.moves_of[a]
                if not any(arena.morphism.step(p, c) in avoid for c in moves):
                    avoid.discard(p)
                    changed = True
                    break
    return avoid


def _can_reach_avoid(arena, support, p_start, avoid, constrained=None) -> bool:
    """Can the environment steer, with positive probability, into `avoid`?

    Positive probability needs only one supported-action path; the search
    never crosses a target (reaching one already settles the play).
    """

    constrained = constrained or {}
    if p_start in arena.targets:
        return False
    seen = {p_start}
    queue = [p_start]
    while queue:
        p = queue.pop()
        if p in avoid:
            return True
        for a in support[p]:
            if (p, a) in constrained:
                moves = (constrained[(p, a)],)
            else:
                moves = arena.moves_of[a]
            for c in moves:
                q = arena.morphism.step(p, c)
                if q not in seen and q not in arena.targets:
                    seen.add(q)
                    queue.append(q)
    return False


def _spoiler_cells(arena, support, p_start):
    reachable = _reachable_states(arena, support, p_start, prune_at_targets=True)
    return [(p, a) for p in sorted(reachable) if p not in arena.targets
            for a in support[p]]


def _finish_spoiler(arena, sigma, choice, p_start) -> FiniteMemoryStrategy:
    full = {}
    for p in arena.states:
        per_action = {}
        for a in arena.actions:
            c = choice.get((p, a), arena.moves_of[a][0])
            per_action[a] = {c: ONE}
        full[p] = per_action
    beta = FiniteMemoryStrategy(
        role="environment",
        memory=arena.morphism.abstract_states,
        initial=p_start,
        table={p: dict(arena.morphism.delta_p[p])
               for p in arena.morphism.abstract_states},
        emission=full,
    )
    chain = abstract_chain(arena, sigma, {k: v for k, v in choice.items()},
                           p_start)
    prob = reach_prob_limit(chain)
    if prob >= 1:
        raise SolverError("internal error: spoiler chain reaches almost surely")
    beta.spoil_prob = prob
    return beta


def build_spoiler(arena, sigma, p_start=None, max_enum=DEFAULT_ENUM_CAP,
                  method="greedy"):
    """Positional environment strategy defeating sigma, or None.

    Searches pure positional move choices in lexicographic (state, action,
    move) order and returns the first whose induced chain misses the
    targets with positive probability.  The default method fixes cells one
    at a time, testing completability exactly, which yields the same
    lexicographically least spoiler as literal enumeration (method
    "enumerate", capped by max_enum) without walking the whole product.
    The returned strategy carries its exact escape: `spoil_prob`, the
    chain's reach probability, is strictly below 1.
    """

    if not arena.targets_absorbing:
        raise SolverError("spoiler construction expects a target-absorbing game")
    if p_start is None:
        p_start = arena.initial
    support = _support_map(arena, sigma)
    cells = _spoiler_cells(arena, support, p_start)

    if method == "enumerate":
        count = 1
        for _, a in cells:
            count *= len(arena.moves_of[a])
            if count > max_enum:
                raise CapExceeded(
                    f"spoiler enumeration exceeds {max_enum} candidates")
        for picks in itertools.product(*(arena.moves_of[a] for _, a in cells)):
            choice = dict(zip(cells, picks))
            chain = abstract_chain(arena, sigma, choice, p_start)
            if not almost_sure_reach(chain):
                return _finish_spoiler(arena, sigma, choice, p_start)
        return None
    if method != "greedy":
        raise ValueError(f"unknown spoiler method {method!r}")

    def feasible(constrained):
        avoid = _sure_avoid(arena, support, constrained)
        return _can_reach_avoid(arena, support, p_start, avoid, constrained)

    if not feasible({}):
        return None
    choice = {}
    for cell in cells:
        _, a = cell
        for c in arena.moves_of[a]:
            choice[cell] = c
            if feasible(choice):
                break
        else:
            raise SolverError("internal error: no completable move at "
                              f"{cell!r} despite feasible prefix")
    return _finish_spoiler(arena, sigma, choice, p_start)


def verify_almost_sure(arena, sigma, p_start=None, objective="reach",
                       method="auto", max_enum=DEFAULT_ENUM_CAP) -> bool:
    """Exact check that sigma wins almost surely against every adversary.

    method "enumerate" walks all positional move choices on the reachable
    product and runs the chain test for each; method "closure" decides the
    same question by one greatest-fixpoint computation (the environment
    wins iff it can steer into a set of non-target states it can keep the
    play in forever).  "auto" enumerates when the candidate count fits
    under max_enum and falls back to the closure test otherwise; the two
    methods agree on every instance (covered by the test suite).
    """

    if objective not in ("reach", "buchi"):
        raise SolverError(f"unsupported objective {objective!r}")
    if objective == "reach" and not arena.targets_absorbing:
        raise SolverError("reach verification expects a target-absorbing game")
    if p_start is None:
        p_start = arena.initial
    support = _support_map(arena, sigma)
    prune = objective == "reach"
    reachable = _reachable_states(arena, support, p_start, prune_at_targets=prune)

    def by_closure():
        avoid = _sure_avoid(arena, support)
        return not (reachable & avoid)

    def by_enumeration():
        if prune:
            cells = [(p, a) for p in sorted(reachable)
                     if p not in arena.targets for a in support[p]]
        else:
            cells = [(p, a) for p in sorted(reachable) for a in support[p]]
        count = 1
        for _, a in cells:
            count *= len(arena.moves_of[a])
            if count > max_enum:
                raise CapExceeded(
                    f"adversary enumeration exceeds {max_enum} candidates")
        test = almost_sure_reach if objective == "reach" else _chain_buchi
        for picks in itertools.product(*(arena.moves_of[a] for _, a in cells)):
            choice = dict(zip(cells, picks))
            for p in arena.states:
                for a in arena.actions:
                    choice.setdefault((p, a), arena.moves_of[a][0])
            chain = abstract_chain(arena, sigma, choice, p_start)
            if not test(chain):
                return False
        return True

    if method == "closure":
        return by_closure()
    if method == "enumerate":
        return by_enumeration()
    if method != "auto":
        raise ValueError(f"unknown verification method {method!r}")
    try:
        return by_enumeration()
    except CapExceeded:
        return by_closure()


def _chain_buchi(chain) -> bool:
    from .probability import almost_sure_buchi

    return almost_sure_buchi(chain)


# ---------------------------------------------------------------------------
# Serialization (rig-strategy/1)
# ---------------------------------------------------------------------------

def strategy_to_json(sigma: FiniteMemoryStrategy) -> dict:
    if sigma.role == "player":
        emit = {mem: {a: jsonio.frac_to_str(p)
                      for a, p in sorted(sigma.emission[mem].items())}
                for mem in sigma.memory}
    else:
        emit = {mem: {a: {c: jsonio.frac_to_str(p)
                          for c, p in sorted(dist.items())}
                      for a, dist in sorted(sigma.emission[mem].items())}
                for mem in sigma.memory}
    return {
        "format": STRATEGY_FORMAT,
        "role": sigma.role,
        "memory": list(sigma.memory),
        "initial": sigma.initial,
        "update": {mem: dict(sorted(sigma.table[mem].items()))
                   for mem in sigma.memory},
        "emit": emit,
    }


def strategy_from_json(data) -> FiniteMemoryStrategy:
    jsonio.expect_format(data, STRATEGY_FORMAT)
    role = jsonio.expect_str(jsonio.get_field(data, "role"), "role")
    memory = [jsonio.expect_str(s, "memory[]") for s in
              jsonio.expect_list(jsonio.get_field(data, "memory"), "memory")]
    initial = jsonio.expect_str(jsonio.get_field(data, "initial"), "initial")
    update_raw = jsonio.expect_dict(jsonio.get_field(data, "update"), "update")
    table = {}
    for mem, row in update_raw.items():
        if mem not in memory:
            raise SchemaError(f"unknown memory state {mem!r}", "update")
        table[mem] = {}
        for c, nxt in jsonio.expect_dict(row, f"update.{mem}").items():
            if nxt not in memory:
                raise SchemaError(f"unknown memory state {nxt!r}",
                                  f"update.{mem}.{c}")
            table[mem][c] = nxt
    emit_raw = jsonio.expect_dict(jsonio.get_field(data, "emit"), "emit")
    emission = {}
    for mem, row in emit_raw.items():
        if mem not in memory:
            raise SchemaError(f"unknown memory state {mem!r}", "emit")
        row = jsonio.expect_dict(row, f"emit.{mem}")
        if role == "player":
            emission[mem] = {a: jsonio.frac_from_str(p, f"emit.{mem}.{a}")
                             for a, p in row.items()}
        else:
            emission[mem] = {
                a: {c: jsonio.frac_from_str(p, f"emit.{mem}.{a}.{c}")
                    for c, p in jsonio.expect_dict(dist, f"emit.{mem}.{a}").items()}
                for a, dist in row.items()}
    try:
        return FiniteMemoryStrategy(role, tuple(memory), initial, table, emission)
    except StrategyError as exc:
        raise SchemaError(str(exc)) from exc


def load_strategy(path) -> FiniteMemoryStrategy:
    return strategy_from_json(jsonio.load_json_file(path))


def save_strategy(path, sigma: FiniteMemoryStrategy, manifest=None):
    data = strategy_to_json(sigma)
    if manifest is not None:
        data["manifest"] = manifest.to_json()
    jsonio.write_json_file(path, data)
