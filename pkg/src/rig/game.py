"""Game model: moves, Moore colorings, and indistinguishability relations.

A game couples three ingredients:

  * an action map sending each move to the action it refines (surjective),
  * a Moore machine assigning a color to every finite history of moves,
  * a synchronous two-tape automaton over move pairs encoding which
    same-length histories the player cannot tell apart.

Histories are finite move sequences; the empty history is written [].  The
relation automaton accepts a word of move pairs exactly when the two projected
histories are related.  Well-formedness of the relation (equivalence,
prefix closure, action visibility) is not assumed here; `rig.validation`
decides it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GameError, SchemaError
from . import jsonio

GAME_FORMAT = "rig-game/1"


@dataclass
class ActMap:
    """Surjective assignment of moves to actions."""

    actions: tuple
    moves: tuple
    act: dict

    def __post_init__(self):
        self.actions = tuple(self.actions)
        self.moves = tuple(self.moves)
        if len(set(self.actions)) != len(self.actions):
            raise GameError("duplicate action names")
        if len(set(self.moves)) != len(self.moves):
            raise GameError("duplicate move names")
        for c in self.moves:
            if c not in self.act:
                raise GameError(f"move {c!r} has no action")
            if self.act[c] not in self.actions:
                raise GameError(f"move {c!r} maps to unknown action {self.act[c]!r}")
        missing = set(self.actions) - {self.act[c] for c in self.moves}
        if missing:
            raise GameError(f"actions without any move: {sorted(missing)}")

    def moves_of(self, action) -> tuple:
        """Moves refining `action`, in sorted order."""
        if action not in self.actions:
            raise GameError(f"unknown action {action!r}")
        return tuple(c for c in sorted(self.moves) if self.act[c] == action)


@dataclass
class MooreMachine:
    """Deterministic complete automaton with an output color per state.

    The color of a history is the output of the state reached by running it
    from the initial state.  Outputs are small non-negative integers; the
    solver additionally insists on {0, 1}.
    """

    states: tuple
    initial: str
    delta: dict  # state -> move -> state
    output: dict  # state -> int

    def __post_init__(self):
        self.states = tuple(self.states)
        if self.initial not in self.states:
            raise GameError(f"initial state {self.initial!r} not a state")
        for q in self.states:
            if q not in self.output:
                raise GameError(f"state {q!r} has no output")

    def check_total(self, moves):
        for q in self.states:
            row = self.delta.get(q, {})
            for c in moves:
                if c not in row:
                    raise GameError(f"missing transition delta[{q!r}][{c!r}]")
                if row[c] not in self.states:
                    raise GameError(f"transition delta[{q!r}][{c!r}] leaves the state set")

    def step(self, state, move):
        try:
            return self.delta[state][move]
        except KeyError as exc:
            raise GameError(f"unknown transition delta[{state!r}][{move!r}]") from exc

    def run(self, history):
        q = self.initial
        for c in history:
            q = self.step(q, c)
        return q

    def trim(self) -> "MooreMachine":
        """Restrict to states reachable from the initial state."""
        seen = {self.initial}
        queue = [self.initial]
        while queue:
            q = queue.pop()
            for c in sorted(self.delta.get(q, {})):
                nxt = self.delta[q][c]
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        states = tuple(q for q in self.states if q in seen)
        return MooreMachine(
            states=states,
            initial=self.initial,
            delta={q: dict(self.delta.get(q, {})) for q in states},
            output={q: self.output[q] for q in states},
        )


@dataclass
class SyncRelationAutomaton:
    """Partial DFA over pairs of moves; its language is the relation.

    `delta` is a nested map state -> first move -> second move -> state.
    A missing entry rejects.  The empty word (the pair of empty histories)
    is related exactly when the initial state is accepting.
    """

    states: tuple
    initial: str
    delta: dict
    accepting: frozenset

    def __post_init__(self):
        self.states = tuple(self.states)
        self.accepting = frozenset(self.accepting)
        if self.initial not in self.states:
            raise GameError(f"initial state {self.initial!r} not a state")
        for s in self.accepting:
            if s not in self.states:
                raise GameError(f"accepting state {s!r} not a state")

    def step(self, state, c1, c2):
        """Successor on the letter (c1, c2), or None if rejected."""
        return self.delta.get(state, {}).get(c1, {}).get(c2)

    def letters_from(self, state):
        """Defined letters from `state` in sorted order."""
        row = self.delta.get(state, {})
        out = []
        for c1 in sorted(row):
            for c2 in sorted(row[c1]):
                out.append((c1, c2))
        return out

    def related(self, hist1, hist2) -> bool:
        if len(hist1) != len(hist2):
            return False
        s = self.initial
        for c1, c2 in zip(hist1, hist2):
            s = self.step(s, c1, c2)
            if s is None:
                return False
        return s in self.accepting


@dataclass
class Game:
    """Full game: action map, Moore coloring, indistinguishability relation."""

    actmap: ActMap
    moore: MooreMachine
    indist: SyncRelationAutomaton

    def __post_init__(self):
        self.moore.check_total(self.actmap.moves)
        for s in self.indist.states:
            for c1, row in self.indist.delta.get(s, {}).items():
                if c1 not in self.actmap.moves:
                    raise GameError(f"relation uses unknown move {c1!r}")
                for c2 in row:
                    if c2 not in self.actmap.moves:
                        raise GameError(f"relation uses unknown move {c2!r}")

    @property
    def actions(self):
        return self.actmap.actions

    @property
    def moves(self):
        return self.actmap.moves

    def colors(self) -> frozenset:
        return frozenset(self.moore.output[q] for q in self.moore.states)


@dataclass
class Objective:
    """Winning condition over the color alphabet {0, 1}.

    kind is one of "reach", "safe", "buchi", "cobuchi".  Reach asks for a 1
    eventually, safe for never, Buchi for infinitely often, coBuchi for
    finitely often.  The solver handles reach and Buchi; the two others are
    representable but rejected with an explanation (see rig.solver.solve).
    """

    kind: str
    horizon: int | None = None  # bounded reach when set

    KINDS = ("reach", "safe", "buchi", "cobuchi")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise GameError(f"unknown objective kind {self.kind!r}")
        if self.horizon is not None and self.kind != "reach":
            raise GameError("horizon only makes sense for reach")


def color_of(game: Game, history) -> int:
    """Color of a single history (the Moore output after running it)."""
    for c in history:
        if c not in game.actmap.moves:
            raise GameError(f"unknown move {c!r}")
    return game.moore.output[game.moore.run(history)]


def cumulative_coloring(game: Game, history) -> tuple:
    """Sequence of colors along all nonempty prefixes of `history`."""
    q = game.moore.initial
    out = []
    for c in history:
        if c not in game.actmap.moves:
            raise GameError(f"unknown move {c!r}")
        q = game.moore.step(q, c)
        out.append(game.moore.output[q])
    return tuple(out)


def is_target_absorbing(game: Game) -> bool:
    """True when no reachable color-1 state can reach a color-0 state."""
    moore = game.moore.trim()
    for q in moore.states:
        if moore.output[q] == 1:
            for c in game.actmap.moves:
                if moore.output[moore.step(q, c)] != 1:
                    return False
    return True


def make_target_absorbing(game: Game) -> Game:
    """Latch the color: once a history sees 1, every extension sees 1.

    Colors must already be within {0, 1}.  The construction redirects every
    transition into a color-1 state to a single absorbing sink, so traces
    agree with the original machine up to and including the first 1.  The
    relation is left untouched.  Applying this to an already absorbing
    machine yields one with the same trace function.
    """

    if not game.colors() <= {0, 1}:
        raise GameError("latching requires colors within {0, 1}")
    moore = game.moore
    sink = "__won__"
    while sink in moore.states:
        sink = sink + "_"
    if moore.output[moore.initial] == 1:
        initial = sink
    else:
        initial = moore.initial
    states = tuple(moore.states) + (sink,)
    delta = {}
    for q in moore.states:
        delta[q] = {}
        for c in game.actmap.moves:
            nxt = moore.step(q, c)
            delta[q][c] = sink if moore.output[nxt] == 1 else nxt
    delta[sink] = {c: sink for c in game.actmap.moves}
    output = {q: moore.output[q] for q in moore.states}
    output[sink] = 1
    latched = MooreMachine(states, initial, delta, output).trim()
    return Game(actmap=game.actmap, moore=latched, indist=game.indist)


# ---------------------------------------------------------------------------
# Serialization (rig-game/1)
# ---------------------------------------------------------------------------

def game_to_json(game: Game) -> dict:
    return {
        "format": GAME_FORMAT,
        "actions": list(game.actmap.actions),
        "moves": list(game.actmap.moves),
        "act": {c: game.actmap.act[c] for c in game.actmap.moves},
        "moore": {
            "states": list(game.moore.states),
            "initial": game.moore.initial,
            "delta": {q: dict(game.moore.delta[q]) for q in game.moore.states},
            "output": {q: game.moore.output[q] for q in game.moore.states},
        },
        "indist": {
            "states": list(game.indist.states),
            "initial": game.indist.initial,
            "delta": {
                s: {c1: dict(row2) for c1, row2 in row.items()}
                for s, row in game.indist.delta.items()
            },
            "accepting": sorted(game.indist.accepting),
        },
    }


def game_from_json(data) -> Game:
    jsonio.expect_format(data, GAME_FORMAT)
    actions = [jsonio.expect_str(a, "actions[]") for a in
               jsonio.expect_list(jsonio.get_field(data, "actions"), "actions")]
    moves = [jsonio.expect_str(c, "moves[]") for c in
             jsonio.expect_list(jsonio.get_field(data, "moves"), "moves")]
    act = jsonio.expect_dict(jsonio.get_field(data, "act"), "act")
    for c, a in act.items():
        if c not in moves:
            raise SchemaError(f"unknown move {c!r}", "act")
        jsonio.expect_str(a, f"act.{c}")

    mo = jsonio.expect_dict(jsonio.get_field(data, "moore"), "moore")
    mstates = [jsonio.expect_str(q, "moore.states[]") for q in
               jsonio.expect_list(jsonio.get_field(mo, "states", "moore."), "moore.states")]
    minitial = jsonio.expect_str(jsonio.get_field(mo, "initial", "moore."), "moore.initial")
    mdelta_raw = jsonio.expect_dict(jsonio.get_field(mo, "delta", "moore."), "moore.delta")
    mdelta = {}
    for q, row in mdelta_raw.items():
        if q not in mstates:
            raise SchemaError(f"unknown state {q!r}", "moore.delta")
        mdelta[q] = {}
        for c, nxt in jsonio.expect_dict(row, f"moore.delta.{q}").items():
            if c not in moves:
                raise SchemaError(f"unknown move {c!r}", f"moore.delta.{q}")
            if nxt not in mstates:
                raise SchemaError(f"unknown target state {nxt!r}", f"moore.delta.{q}.{c}")
            mdelta[q][c] = nxt
    moutput_raw = jsonio.expect_dict(jsonio.get_field(mo, "output", "moore."), "moore.output")
    moutput = {}
    for q in mstates:
        if q not in moutput_raw:
            raise SchemaError("missing output", f"moore.output.{q}")
        v = moutput_raw[q]
        if not isinstance(v, int) or v < 0:
            raise SchemaError(f"output must be a non-negative integer, got {v!r}",
                              f"moore.output.{q}")
        moutput[q] = v

    ind = jsonio.expect_dict(jsonio.get_field(data, "indist"), "indist")
    istates = [jsonio.expect_str(s, "indist.states[]") for s in
               jsonio.expect_list(jsonio.get_field(ind, "states", "indist."), "indist.states")]
    iinitial = jsonio.expect_str(jsonio.get_field(ind, "initial", "indist."), "indist.initial")
    idelta_raw = jsonio.expect_dict(jsonio.get_field(ind, "delta", "indist."), "indist.delta")
    idelta = {}
    for s, row in idelta_raw.items():
        if s not in istates:
            raise SchemaError(f"unknown state {s!r}", "indist.delta")
        idelta[s] = {}
        for c1, row2 in jsonio.expect_dict(row, f"indist.delta.{s}").items():
            if c1 not in moves:
                raise SchemaError(f"unknown move {c1!r}", f"indist.delta.{s}")
            idelta[s][c1] = {}
            for c2, nxt in jsonio.expect_dict(row2, f"indist.delta.{s}.{c1}").items():
                if c2 not in moves:
                    raise SchemaError(f"unknown move {c2!r}", f"indist.delta.{s}.{c1}")
                if nxt not in istates:
                    raise SchemaError(f"unknown target state {nxt!r}",
                                      f"indist.delta.{s}.{c1}.{c2}")
                idelta[s][c1][c2] = nxt
    iacc = jsonio.expect_list(jsonio.get_field(ind, "accepting", "indist."), "indist.accepting")
    for s in iacc:
        if s not in istates:
            raise SchemaError(f"unknown accepting state {s!r}", "indist.accepting")

    try:
        return Game(
            actmap=ActMap(tuple(actions), tuple(moves), dict(act)),
            moore=MooreMachine(tuple(mstates), minitial, mdelta, moutput),
            indist=SyncRelationAutomaton(tuple(istates), iinitial, idelta, frozenset(iacc)),
        )
    except GameError as exc:
        raise SchemaError(str(exc)) from exc


def load_game(path) -> Game:
    return game_from_json(jsonio.load_json_file(path))


def save_game(path, game: Game, manifest=None):
    data = game_to_json(game)
    if manifest is not None:
        data["manifest"] = manifest.to_json()
    jsonio.write_json_file(path, data)
