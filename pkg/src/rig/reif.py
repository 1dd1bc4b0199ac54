"""Partial-observation games over locations, and their compilation.

A Reif-style game moves a token over locations; the player picks actions,
the environment resolves them to moves, and the player observes only a
per-location observation letter.  Compilation produces the equivalent
relation-based game: two histories are indistinguishable when their action
sequences agree positionwise and they induce the same observation
sequence.  Winning is latched by default: reaching a winning location
funnels the play into a single absorbing top state, which keeps the
target set a sink as the reachability solver expects.  With latch=False
the coloring reports winning locations directly (the Buchi setting); the
win flag then joins the observation so the relation stays consistent with
the coloring.

The natural morphism is the subset construction: abstract states pair the
current location with the belief, the set of locations reachable under
some indistinguishable history.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import jsonio
from .errors import GameError, SchemaError
from .game import ActMap, Game, MooreMachine, SyncRelationAutomaton
from .morphism import Morphism

REIF_FORMAT = "rig-reif/1"


@dataclass
class ReifGame:
    locations: tuple
    initial: str
    actmap: ActMap
    delta: dict  # location -> move -> location
    obs: dict  # location -> observation letter
    winning: frozenset

    def __post_init__(self):
        self.locations = tuple(self.locations)
        self.winning = frozenset(self.winning)
        if self.initial not in self.locations:
            raise GameError(f"initial location {self.initial!r} unknown")
        for w in self.winning:
            if w not in self.locations:
                raise GameError(f"winning location {w!r} unknown")
        for l in self.locations:
            if l not in self.obs:
                raise GameError(f"location {l!r} has no observation")
            row = self.delta.get(l, {})
            for c in self.actmap.moves:
                if c not in row:
                    raise GameError(f"missing transition delta[{l!r}][{c!r}]")
                if row[c] not in self.locations:
                    raise GameError(
                        f"transition delta[{l!r}][{c!r}] leaves the location set")

    def step(self, location, move):
        return self.delta[location][move]


def _fresh_name(base, taken):
    name = base
    while name in taken:
        name = name + "_"
    return name


def reif_to_game(rg: ReifGame, latch: bool = True) -> Game:
    """Compile to the relation-based model.

    With latching, statuses are the non-winning locations plus one top
    state entered as soon as a winning location is (or would be) visited;
    the relation requires equal actions and equal observations while
    unlatched, and relates any two latched continuations.  Without
    latching, statuses are locations and the relation requires equal
    actions, equal observations, and equal win flags.
    """

    top = _fresh_name("__top__", set(rg.locations))

    def status0():
        if latch and rg.initial in rg.winning:
            return top
        return rg.initial

    def status_step(u, c):
        if latch and u == top:
            return top
        nxt = rg.step(u, c)
        if latch and nxt in rg.winning:
            return top
        return nxt

    def compatible(u1, u2):
        if latch:
            if (u1 == top) != (u2 == top):
                return False
            if u1 == top:
                return True
            return rg.obs[u1] == rg.obs[u2]
        if (u1 in rg.winning) != (u2 in rg.winning):
            return False
        return rg.obs[u1] == rg.obs[u2]

    # Moore machine over statuses.
    if latch:
        mstates = [l for l in rg.locations if l not in rg.winning] + [top]
        output = {l: 0 for l in rg.locations if l not in rg.winning}
        output[top] = 1
        mdelta = {}
        for l in output:
            if l == top:
                mdelta[l] = {c: top for c in rg.actmap.moves}
            else:
                mdelta[l] = {c: status_step(l, c) for c in rg.actmap.moves}
        moore = MooreMachine(tuple(mstates), status0(), mdelta, output).trim()
    else:
        mdelta = {l: {c: rg.step(l, c) for c in rg.actmap.moves}
                  for l in rg.locations}
        output = {l: (1 if l in rg.winning else 0) for l in rg.locations}
        moore = MooreMachine(rg.locations, rg.initial, mdelta, output).trim()

    # Relation automaton over status pairs, breadth-first, all accepting.
    start = (status0(), status0())
    names = {start: "r0"}
    order = [start]
    queue = [start]
    delta = {}
    while queue:
        pair = queue.pop(0)
        u1, u2 = pair
        row = {}
        for c1 in sorted(rg.actmap.moves):
            for c2 in sorted(rg.actmap.moves):
                if rg.actmap.act[c1] != rg.actmap.act[c2]:
                    continue
                n1 = status_step(u1, c1)
                n2 = status_step(u2, c2)
                if not compatible(n1, n2):
                    continue
                nxt = (n1, n2)
                if nxt not in names:
                    names[nxt] = f"r{len(order)}"
                    order.append(nxt)
                    queue.append(nxt)
                row.setdefault(c1, {})[c2] = names[nxt]
        delta[names[pair]] = row
    indist = SyncRelationAutomaton(
        states=tuple(names[p] for p in order),
        initial="r0",
        delta=delta,
        accepting=frozenset(names[p] for p in order),
    )
    return Game(actmap=rg.actmap, moore=moore, indist=indist)


def subset_morphism(rg: ReifGame, latch: bool = True) -> Morphism:
    """Belief morphism: abstract states pair a status with its belief.

    The belief is the set of statuses reachable under histories the player
    cannot distinguish from the current one; it updates by the post-image
    filtered through the played action, the new observation, and the win
    flag.  State names render as "location|member,member"; the latched top
    status collapses to a single absorbing abstract state.
    """

    top = _fresh_name("__top__", set(rg.locations))

    def status0():
        if latch and rg.initial in rg.winning:
            return top
        return rg.initial

    def name_of(state):
        if state == top:
            return top
        l, belief = state
        return f"{l}|" + ",".join(sorted(belief))

    def update(state, c):
        if state == top:
            return top
        l, belief = state
        nxt = rg.step(l, c)
        if latch and nxt in rg.winning:
            return top
        a = rg.actmap.act[c]
        members = set()
        for l2 in belief:
            for c2 in rg.actmap.moves_of(a):
                n2 = rg.step(l2, c2)
                if latch and n2 in rg.winning:
                    continue
                if rg.obs[n2] != rg.obs[nxt]:
                    continue
                if not latch and (n2 in rg.winning) != (nxt in rg.winning):
                    continue
                members.add(n2)
        return (nxt, frozenset(members))

    initial = status0() if status0() == top else (rg.initial,
                                                  frozenset([rg.initial]))
    order = [initial]
    index = {initial}
    queue = [initial]
    delta_p = {}
    while queue:
        state = queue.pop(0)
        row = {}
        for c in sorted(rg.actmap.moves):
            nxt = update(state, c)
            if nxt not in index:
                index.add(nxt)
                order.append(nxt)
                queue.append(nxt)
            row[c] = name_of(nxt)
        delta_p[name_of(state)] = row
    names = [name_of(s) for s in order]
    if len(set(names)) != len(names):
        raise GameError("location names collide under belief naming; "
                        "rename locations to avoid '|' and ','")
    return Morphism(tuple(names), name_of(initial), delta_p)


# ---------------------------------------------------------------------------
# Serialization (rig-reif/1)
# ---------------------------------------------------------------------------

def reif_to_json(rg: ReifGame) -> dict:
    return {
        "format": REIF_FORMAT,
        "locations": list(rg.locations),
        "initial": rg.initial,
        "actions": list(rg.actmap.actions),
        "moves": list(rg.actmap.moves),
        "act": {c: rg.actmap.act[c] for c in rg.actmap.moves},
        "delta": {l: dict(rg.delta[l]) for l in rg.locations},
        "obs": {l: rg.obs[l] for l in rg.locations},
        "winning": sorted(rg.winning),
    }


def reif_from_json(data) -> ReifGame:
    jsonio.expect_format(data, REIF_FORMAT)
    locations = [jsonio.expect_str(l, "locations[]") for l in
                 jsonio.expect_list(jsonio.get_field(data, "locations"),
                                    "locations")]
    initial = jsonio.expect_str(jsonio.get_field(data, "initial"), "initial")
    actions = [jsonio.expect_str(a, "actions[]") for a in
               jsonio.expect_list(jsonio.get_field(data, "actions"), "actions")]
    moves = [jsonio.expect_str(c, "moves[]") for c in
             jsonio.expect_list(jsonio.get_field(data, "moves"), "moves")]
    act = jsonio.expect_dict(jsonio.get_field(data, "act"), "act")
    delta_raw = jsonio.expect_dict(jsonio.get_field(data, "delta"), "delta")
    delta = {}
    for l, row in delta_raw.items():
        if l not in locations:
            raise SchemaError(f"unknown location {l!r}", "delta")
        delta[l] = {}
        for c, nxt in jsonio.expect_dict(row, f"delta.{l}").items():
            if c not in moves:
                raise SchemaError(f"unknown move {c!r}", f"delta.{l}")
            if nxt not in locations:
                raise SchemaError(f"unknown target {nxt!r}", f"delta.{l}.{c}")
            delta[l][c] = nxt
    obs_raw = jsonio.expect_dict(jsonio.get_field(data, "obs"), "obs")
    obs = {}
    for l in locations:
        if l not in obs_raw:
            raise SchemaError("missing observation", f"obs.{l}")
        obs[l] = jsonio.expect_str(obs_raw[l], f"obs.{l}")
    winning = jsonio.expect_list(jsonio.get_field(data, "winning"), "winning")
    try:
        return ReifGame(
            locations=tuple(locations),
            initial=initial,
            actmap=ActMap(tuple(actions), tuple(moves), dict(act)),
            delta=delta,
            obs=obs,
            winning=frozenset(jsonio.expect_str(w, "winning[]") for w in winning),
        )
    except GameError as exc:
        raise SchemaError(str(exc)) from exc


def load_reif(path) -> ReifGame:
    return reif_from_json(jsonio.load_json_file(path))


def save_reif(path, rg: ReifGame, manifest=None):
    data = reif_to_json(rg)
    if manifest is not None:
        data["manifest"] = manifest.to_json()
    jsonio.write_json_file(path, data)
