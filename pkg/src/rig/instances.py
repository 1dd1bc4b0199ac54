"""Bundled instances and seeded generators for tests and demos.

The two hand-built bundles are the repeated matching pennies game (winning,
the uniform strategy's home turf) and a one-step game whose only choice
belongs to the environment (losing).  The tree-shaped refinement
counterexample also has a game-level encoding here so the morphism
validators can chew on it; its parametric tree form lives in
rig.refinement.

Indistinguishability is built one of two ways: the identity relation
(perfect information) or an observation product that relates histories
with equal action sequences and equal observation sequences, where the
observation is a per-state letter of the Moore machine.
"""

from __future__ import annotations

import random
from importlib import resources

from .game import (ActMap, Game, MooreMachine, SyncRelationAutomaton,
                   game_from_json, game_to_json)
from .morphism import Morphism
from .reif import ReifGame

BUNDLED_FILES = (
    "matching-pennies-game.json", "matching-pennies-morphism.json",
    "env-loss-game.json", "env-loss-morphism.json",
    "fig3-game.json", "fig3-morphism.json",
    "fig3-G.json", "fig3-H.json",
)


def bundled_path(name):
    """Filesystem path of a bundled data file shipped with the package."""
    if name not in BUNDLED_FILES:
        raise KeyError(f"not a bundled file: {name!r}")
    return resources.files("rig").joinpath("data", name)


def identity_relation(moves) -> SyncRelationAutomaton:
    """Only equal histories are related: single accepting state, diagonal
    letters."""
    return SyncRelationAutomaton(
        states=("s",),
        initial="s",
        delta={"s": {c: {c: "s"} for c in sorted(moves)}},
        accepting=frozenset(["s"]),
    )


def observation_relation(moore: MooreMachine, actmap: ActMap, obs) -> \
        SyncRelationAutomaton:
    """Histories are related iff their actions and observations agree.

    `obs` assigns an observation letter to every Moore state; the relation
    automaton is the product of the Moore machine with itself, restricted
    to action-equal letters whose successors carry equal observations.
    All product states are accepting, so the relation is prefix-closed by
    construction.
    """

    start = (moore.initial, moore.initial)
    names = {start: "r0"}
    order = [start]
    queue = [start]
    delta = {}
    moves = sorted(actmap.moves)
    while queue:
        pair = queue.pop(0)
        q1, q2 = pair
        row = {}
        for c1 in moves:
            for c2 in moves:
                if actmap.act[c1] != actmap.act[c2]:
                    continue
                n1 = moore.step(q1, c1)
                n2 = moore.step(q2, c2)
                if obs[n1] != obs[n2]:
                    continue
                nxt = (n1, n2)
                if nxt not in names:
                    names[nxt] = f"r{len(order)}"
                    order.append(nxt)
                    queue.append(nxt)
                row.setdefault(c1, {})[c2] = names[nxt]
        delta[names[pair]] = row
    return SyncRelationAutomaton(
        states=tuple(names[p] for p in order),
        initial="r0",
        delta=delta,
        accepting=frozenset(names[p] for p in order),
    )


def moore_identity_morphism(game: Game) -> Morphism:
    """The Moore machine itself as an abstraction (perfect recall of state)."""
    moore = game.moore.trim()
    return Morphism(
        abstract_states=moore.states,
        initial=moore.initial,
        delta_p={q: dict(moore.delta[q]) for q in moore.states},
    )


# ---------------------------------------------------------------------------
# Matching pennies, repeated until the guess lands
# ---------------------------------------------------------------------------

def matching_pennies():
    """Repeated matching pennies as a (game, morphism) pair.

    Each round takes two moves: from p0 the environment's hidden coin
    resolves to p1 or p2 (whatever the player does), then the player's
    guess either wins (into the absorbing pw) or starts over at p0.  The
    player observes only colors, so histories at p1 and p2 with the same
    action sequence are indistinguishable, and no pure strategy wins.
    """

    actmap = ActMap(
        actions=("a", "b"),
        moves=("a1", "a2", "b1", "b2"),
        act={"a1": "a", "a2": "a", "b1": "b", "b2": "b"},
    )
    delta = {
        "p0": {"a1": "p1", "a2": "p2", "b1": "p1", "b2": "p2"},
        "p1": {"a1": "pw", "a2": "pw", "b1": "p0", "b2": "p0"},
        "p2": {"a1": "p0", "a2": "p0", "b1": "pw", "b2": "pw"},
        "pw": {"a1": "pw", "a2": "pw", "b1": "pw", "b2": "pw"},
    }
    moore = MooreMachine(
        states=("p0", "p1", "p2", "pw"),
        initial="p0",
        delta=delta,
        output={"p0": 0, "p1": 0, "p2": 0, "pw": 1},
    )
    obs = {q: str(moore.output[q]) for q in moore.states}
    game = Game(actmap=actmap, moore=moore,
                indist=observation_relation(moore, actmap, obs))
    return game, moore_identity_morphism(game)


def env_loss():
    """One environment-owned choice decides everything; the player loses.

    A single action, two moves: one leads to an absorbing winning state,
    the other to an absorbing losing state.  Perfect information; the
    environment simply picks the losing move.
    """

    actmap = ActMap(actions=("go",), moves=("e1", "e2"),
                    act={"e1": "go", "e2": "go"})
    moore = MooreMachine(
        states=("s0", "lose", "win"),
        initial="s0",
        delta={
            "s0": {"e1": "lose", "e2": "win"},
            "lose": {"e1": "lose", "e2": "lose"},
            "win": {"e1": "win", "e2": "win"},
        },
        output={"s0": 0, "lose": 0, "win": 1},
    )
    game = Game(actmap=actmap, moore=moore,
                indist=identity_relation(actmap.moves))
    return game, moore_identity_morphism(game)


# ---------------------------------------------------------------------------
# Game-level encoding of the tree counterexample
# ---------------------------------------------------------------------------

def fig3_game():
    """Concrete-side tree game of the refinement counterexample.

    First moves resolve an environment branch; the two midpoints are
    indistinguishable.  The player then cashes out (colors 1/2) or plays
    on through a second environment branch into four bottom states grouped
    crosswise into two information classes, each choosing between two leaf
    colors.  Colors 1..6 mark the leaves; the solver rejects this game
    (non-binary colors), the validators accept it.
    """

    actmap = ActMap(
        actions=("a", "b"),
        moves=("a1", "a2", "b1", "b2"),
        act={"a1": "a", "a2": "a", "b1": "b", "b2": "b"},
    )
    first = {"a1": 0, "b1": 0, "a2": 1, "b2": 1}  # env-branch index per move

    def env_node(children):
        return {c: children[first[c]] for c in actmap.moves}

    def player_node(on_a, on_b):
        return {"a1": on_a, "a2": on_a, "b1": on_b, "b2": on_b}

    leaves = {f"leaf{k}": k for k in range(1, 7)}
    delta = {
        "q0": env_node(["q1", "q1x"]),
        "q1": player_node("leaf1", "q2"),
        "q1x": player_node("leaf2", "q2x"),
        "q2": env_node(["q3", "q4"]),
        "q2x": env_node(["q3x", "q4x"]),
        "q3": player_node("leaf3", "leaf4"),
        "q4": player_node("leaf5", "leaf6"),
        "q3x": player_node("leaf3", "leaf4"),
        "q4x": player_node("leaf5", "leaf6"),
    }
    for leaf in leaves:
        delta[leaf] = {c: leaf for c in actmap.moves}
    states = tuple(delta)
    output = {q: 0 for q in states}
    output.update(leaves)
    moore = MooreMachine(states, "q0", delta, output)
    obs = {
        "q0": "start",
        "q1": "x1", "q1x": "x1",
        "q2": "mid", "q2x": "mid",
        "q3": "x2", "q4x": "x2",
        "q4": "x3", "q3x": "x3",
    }
    obs.update({leaf: f"c{k}" for leaf, k in leaves.items()})
    game = Game(actmap=actmap, moore=moore,
                indist=observation_relation(moore, actmap, obs))
    return game


def fig3_morphism() -> Morphism:
    """Abstraction of fig3_game onto the smaller abstract-side tree.

    Both crosswise bottom pairs collapse: q3 and q3x share an image p3
    (leaf colors 3/4), q4 and q4x share p4 (5/6).  The image automaton is
    deterministic because matching branches of the two midpaths land in
    the same abstract state.
    """

    first = {"a1": 0, "b1": 0, "a2": 1, "b2": 1}
    moves = ("a1", "a2", "b1", "b2")

    def env_node(children):
        return {c: children[first[c]] for c in moves}

    def player_node(on_a, on_b):
        return {"a1": on_a, "a2": on_a, "b1": on_b, "b2": on_b}

    delta_p = {
        "p0": env_node(["p1", "p1x"]),
        "p1": player_node("h1", "p2"),
        "p1x": player_node("h2", "p2x"),
        "p2": env_node(["p3", "p4"]),
        "p2x": env_node(["p3", "p4"]),
        "p3": player_node("h3", "h4"),
        "p4": player_node("h5", "h6"),
    }
    for k in range(1, 7):
        delta_p[f"h{k}"] = {c: f"h{k}" for c in moves}
    return Morphism(tuple(delta_p), "p0", delta_p={p: dict(r)
                                                   for p, r in delta_p.items()})


def pennies_reif() -> ReifGame:
    """Matching pennies again, this time as a partial-observation game."""
    actmap = ActMap(
        actions=("a", "b"),
        moves=("a1", "a2", "b1", "b2"),
        act={"a1": "a", "a2": "a", "b1": "b", "b2": "b"},
    )
    delta = {
        "l0": {"a1": "l1", "a2": "l2", "b1": "l1", "b2": "l2"},
        "l1": {"a1": "lw", "a2": "lw", "b1": "l0", "b2": "l0"},
        "l2": {"a1": "l0", "a2": "l0", "b1": "lw", "b2": "lw"},
        "lw": {"a1": "lw", "a2": "lw", "b1": "lw", "b2": "lw"},
    }
    return ReifGame(
        locations=("l0", "l1", "l2", "lw"),
        initial="l0",
        actmap=actmap,
        delta=delta,
        obs={"l0": "start", "l1": "mid", "l2": "mid", "lw": "won"},
        winning=frozenset(["lw"]),
    )


# ---------------------------------------------------------------------------
# Seeded random families
# ---------------------------------------------------------------------------

def _random_actmap(rng, max_actions, max_moves):
    n_actions = rng.randint(1, max_actions)
    actions = tuple(f"act{i}" for i in range(n_actions))
    counts = [1] * n_actions
    while sum(counts) < max_moves and rng.random() < 0.6:
        counts[rng.randrange(n_actions)] += 1
    moves = []
    act = {}
    for i, a in enumerate(actions):
        for j in range(counts[i]):
            c = f"m{i}_{j}"
            moves.append(c)
            act[c] = a
    return ActMap(actions, tuple(moves), act)


def random_perfect_info(seed, max_states=8, max_actions=3, max_moves=6,
                        latch=True):
    """Random identity-relation instance as a (game, morphism) pair.

    With `latch` the color-1 states are made absorbing (the reachability
    setting); without it colors are left arbitrary (the Buchi setting).
    The morphism is the Moore machine itself.
    """

    rng = random.Random(seed)
    actmap = _random_actmap(rng, max_actions, max_moves)
    n = rng.randint(2, max_states)
    states = tuple(f"q{i}" for i in range(n))
    n_targets = rng.randint(1, max(1, n // 2))
    targets = set(rng.sample(states, n_targets))
    delta = {}
    for q in states:
        if latch and q in targets:
            delta[q] = {c: q for c in actmap.moves}
        else:
            delta[q] = {c: rng.choice(states) for c in actmap.moves}
    output = {q: (1 if q in targets else 0) for q in states}
    moore = MooreMachine(states, "q0", delta, output)
    game = Game(actmap=actmap, moore=moore,
                indist=identity_relation(actmap.moves))
    return game, moore_identity_morphism(game)


def random_reif(seed, max_locations=4, pattern_cap=729) -> ReifGame:
    """Random 2-action 2-observation Reif game, sized for the belief oracle.

    Retries derived seeds until the support-pattern count of the naive
    oracle fits under `pattern_cap`, so enumeration stays exhaustive.
    """

    from .oracles import reif_pattern_count

    for attempt in range(200):
        rng = random.Random((seed + 1) * 1000 + attempt)
        actmap = ActMap(
            actions=("a", "b"),
            moves=("a1", "a2", "b1", "b2"),
            act={"a1": "a", "a2": "a", "b1": "b", "b2": "b"},
        )
        n = rng.randint(2, max_locations)
        locations = tuple(f"l{i}" for i in range(n))
        delta = {l: {c: rng.choice(locations) for c in actmap.moves}
                 for l in locations}
        obs = {l: rng.choice(("o0", "o1")) for l in locations}
        winning = frozenset(rng.sample(locations, rng.randint(1, n)))
        rg = ReifGame(locations=locations, initial="l0", actmap=actmap,
                      delta=delta, obs=obs, winning=winning)
        if reif_pattern_count(rg) <= pattern_cap:
            return rg
    raise RuntimeError(f"no admissible Reif instance for seed {seed}")


def scaling_instance(n):
    """Pennies ladder with n = 2k abstract states; almost-surely winning.

    A start state flips a coin into level 1; at each level the player
    must name the coin (action a at u-states, b at v-states) to advance,
    and while resolving a correct guess the environment commits the next
    coin.  A wrong guess falls back to the start.  Levels share an
    observation, so each {u, v} pair is one information class and the
    uniform strategy advances with probability one half per guess.  Ranks
    grow linearly along the ladder, which makes the family useful for
    timing how solving scales with |P| at fixed |A|.
    """

    if n < 4 or n % 2:
        raise ValueError("need an even state count of at least 4")
    k = n // 2
    actmap = ActMap(
        actions=("a", "b"),
        moves=("a1", "a2", "b1", "b2"),
        act={"a1": "a", "a2": "a", "b1": "b", "b2": "b"},
    )

    def env_branch(one, two):
        return {"a1": one, "a2": two, "b1": one, "b2": two}

    delta = {"s0": env_branch("u1", "v1")}
    obs = {"s0": "start", "w": "win"}
    for i in range(1, k):
        up = ("w", "w") if i == k - 1 else (f"u{i + 1}", f"v{i + 1}")
        delta[f"u{i}"] = {"a1": up[0], "a2": up[1], "b1": "s0", "b2": "s0"}
        delta[f"v{i}"] = {"b1": up[0], "b2": up[1], "a1": "s0", "a2": "s0"}
        obs[f"u{i}"] = obs[f"v{i}"] = f"L{i}"
    delta["w"] = {c: "w" for c in actmap.moves}
    states = tuple(delta)
    output = {q: (1 if q == "w" else 0) for q in states}
    moore = MooreMachine(states, "s0", delta, output)
    game = Game(actmap=actmap, moore=moore,
                indist=observation_relation(moore, actmap, obs))
    return game, moore_identity_morphism(game)


# ---------------------------------------------------------------------------
# Mutants: deliberately broken variants for validator fidelity tests
# ---------------------------------------------------------------------------

MUTATION_KINDS = (
    "drop_relation_edge",
    "add_relation_edge",
    "redirect_relation_edge",
    "toggle_accepting",
    "recolor_state",
    "redirect_moore_edge",
    "redirect_morphism_edge",
)


def mutate_instance(game: Game, m: Morphism, seed):
    """One random structural mutation of a (game, morphism) pair.

    Returns (game', morphism', description).  Mutations preserve schema
    well-formedness but usually break an axiom; some happen to keep the
    instance valid, which is fine; the fidelity test compares verdicts,
    it does not assume brokenness.
    """

    rng = random.Random(seed)
    data = game_to_json(game)
    delta_p = {p: dict(m.delta_p[p]) for p in m.abstract_states}
    kind = rng.choice(MUTATION_KINDS)
    ind = data["indist"]
    desc = kind

    if kind == "drop_relation_edge":
        edges = [(s, c1, c2) for s, row in sorted(ind["delta"].items())
                 for c1, row2 in sorted(row.items()) for c2 in sorted(row2)]
        if edges:
            s, c1, c2 = rng.choice(edges)
            del ind["delta"][s][c1][c2]
            desc = f"drop relation edge {s}:{c1}/{c2}"
    elif kind == "add_relation_edge":
        moves = data["moves"]
        states = ind["states"]
        for _ in range(50):
            s = rng.choice(states)
            c1, c2 = rng.choice(moves), rng.choice(moves)
            t = rng.choice(states)
            if ind["delta"].setdefault(s, {}).setdefault(c1, {}).get(c2) is None:
                ind["delta"][s][c1][c2] = t
                desc = f"add relation edge {s}:{c1}/{c2}->{t}"
                break
    elif kind == "redirect_relation_edge":
        edges = [(s, c1, c2) for s, row in sorted(ind["delta"].items())
                 for c1, row2 in sorted(row.items()) for c2 in sorted(row2)]
        if edges:
            s, c1, c2 = rng.choice(edges)
            t = rng.choice(ind["states"])
            ind["delta"][s][c1][c2] = t
            desc = f"redirect relation edge {s}:{c1}/{c2}->{t}"
    elif kind == "toggle_accepting":
        s = rng.choice(ind["states"])
        acc = set(ind["accepting"])
        acc.symmetric_difference_update({s})
        ind["accepting"] = sorted(acc)
        desc = f"toggle accepting {s}"
    elif kind == "recolor_state":
        q = rng.choice(data["moore"]["states"])
        data["moore"]["output"][q] = 1 - (data["moore"]["output"][q] % 2)
        desc = f"recolor {q}"
    elif kind == "redirect_moore_edge":
        q = rng.choice(data["moore"]["states"])
        c = rng.choice(data["moves"])
        t = rng.choice(data["moore"]["states"])
        data["moore"]["delta"][q][c] = t
        desc = f"redirect moore {q}:{c}->{t}"
    elif kind == "redirect_morphism_edge":
        p = rng.choice(sorted(delta_p))
        c = rng.choice(data["moves"])
        t = rng.choice(m.abstract_states)
        delta_p[p][c] = t
        desc = f"redirect morphism {p}:{c}->{t}"

    mutated_game = game_from_json(data)
    mutated_m = Morphism(m.abstract_states, m.initial, delta_p)
    return mutated_game, mutated_m, desc
