"""Exact automaton machinery for synchronous two-tape relations.

Everything here works on partial deterministic (or, transiently,
nondeterministic) automata whose letters are pairs of move names.  Checks
return witness words; a witness is always a shortest one, lexicographically
least among the shortest, which the breadth-first searches below guarantee by
expanding letters in sorted order from a FIFO queue.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import CapExceeded

DETERMINIZE_CAP = 50_000


@dataclass
class PairWitness:
    """A pair of histories exhibiting an axiom violation."""

    hist1: tuple
    hist2: tuple
    position: int | None = None  # 1-based position of the offending letter

    def to_json(self):
        out = {"hist1": list(self.hist1), "hist2": list(self.hist2)}
        if self.position is not None:
            out["position"] = self.position
        return out


def split_word(word):
    """Project a word of letter pairs onto its two tapes."""
    return tuple(c1 for c1, _ in word), tuple(c2 for _, c2 in word)


def first_paths(initials, expand):
    """Lex-least shortest path (as a letter tuple) to every reachable node.

    `initials` is an iterable of start nodes, `expand(node)` yields
    (letter, successor) pairs in sorted letter order.  Nodes reached first
    through sorted-order FIFO expansion receive lex-least shortest paths.
    """

    paths = {}
    queue = deque()
    for node in initials:
        if node not in paths:
            paths[node] = ()
            queue.append(node)
    while queue:
        node = queue.popleft()
        base = paths[node]
        for letter, succ in expand(node):
            if succ not in paths:
                paths[succ] = base + (letter,)
                queue.append(succ)
    return paths


def rel_expand(rel):
    """Expansion function over a SyncRelationAutomaton's defined letters."""

    def expand(state):
        for c1, c2 in rel.letters_from(state):
            yield (c1, c2), rel.step(state, c1, c2)

    return expand


def reachable_states(rel):
    return first_paths([rel.initial], rel_expand(rel))


def coreachable_states(rel):
    """States from which some accepting state is reachable."""
    reverse = {}
    for s in rel.states:
        for c1, c2 in rel.letters_from(s):
            reverse.setdefault(rel.step(s, c1, c2), set()).add(s)
    seen = set(rel.accepting)
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        for pred in reverse.get(s, ()):
            if pred not in seen:
                seen.add(pred)
                queue.append(pred)
    return seen


def shortest_accepting_continuation(rel, start):
    """Lex-least shortest word from `start` to acceptance, or None."""
    if start in rel.accepting:
        return ()
    paths = first_paths([start], rel_expand(rel))
    best = None
    for s, word in paths.items():
        if s in rel.accepting:
            key = (len(word), word)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


# ---------------------------------------------------------------------------
# Composition, determinization, comparison
# ---------------------------------------------------------------------------

class ComposedRelation:
    """Nondeterministic synchronous composition of two relations.

    Accepts (tau, tau'') iff some middle history tau' is accepted on
    (tau, tau') by `left` and on (tau', tau'') by `right`.  States are pairs;
    successors on an outer letter (c1, c3) range over all middle moves.
    """

    def __init__(self, left, right, moves):
        self.left = left
        self.right = right
        self.moves = tuple(sorted(moves))
        self.initial = (left.initial, right.initial)

    def successors(self, state, c1, c3):
        sl, sr = state
        out = []
        for c2 in self.moves:
            nl = self.left.step(sl, c1, c2)
            if nl is None:
                continue
            nr = self.right.step(sr, c2, c3)
            if nr is None:
                continue
            out.append((nl, nr))
        return out

    def is_accepting(self, state):
        return state[0] in self.left.accepting and state[1] in self.right.accepting


class DeterminizedRelation:
    """Subset construction over a ComposedRelation, built lazily with a cap."""

    def __init__(self, composed, cap=DETERMINIZE_CAP):
        self.composed = composed
        self.cap = cap
        self.initial = frozenset([composed.initial])
        self._trans = {}
        self._seen = {self.initial}

    def letters(self):
        for c1 in self.composed.moves:
            for c3 in self.composed.moves:
                yield (c1, c3)

    def step(self, subset, c1, c3):
        key = (subset, c1, c3)
        if key in self._trans:
            return self._trans[key]
        nxt = set()
        for state in subset:
            nxt.update(self.composed.successors(state, c1, c3))
        result = frozenset(nxt) if nxt else None
        self._trans[key] = result
        if result is not None and result not in self._seen:
            self._seen.add(result)
            if len(self._seen) > self.cap:
                raise CapExceeded(
                    f"determinization exceeded {self.cap} subset states")
        return result

    def is_accepting(self, subset):
        return subset is not None and any(
            self.composed.is_accepting(s) for s in subset)


def determinized_equal(da, db):
    """Language equality of two DeterminizedRelation objects.

    Returns None on equality, otherwise the lex-least shortest word in the
    symmetric difference.  Both automata must share the same letter universe.
    """

    letters = list(da.letters())

    def expand(node):
        sa, sb = node
        for letter in letters:
            na = None if sa is None else da.step(sa, *letter)
            nb = None if sb is None else db.step(sb, *letter)
            if na is None and nb is None:
                continue
            yield letter, (na, nb)

    paths = first_paths([(da.initial, db.initial)], expand)
    best = None
    for (sa, sb), word in paths.items():
        if da.is_accepting(sa) != db.is_accepting(sb):
            key = (len(word), word)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]
