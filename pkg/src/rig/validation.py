"""Exact validation of the indistinguishability relation and the coloring.

Six axiom checks, each decided exactly on the automaton level:

  * reflexive / symmetric / transitive: the relation is an equivalence,
  * prefix_closed: related histories have related prefixes,
  * action_visible: related histories agree on their action sequences,
  * info_consistent: related histories have equal colors.

Every failing check carries a witness pair of histories, shortest and
lexicographically least among the shortest.  An optional bounded brute-force
enumeration cross-checks the verdicts (see `depth`); it never influences
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import oracles
from .relations import (PairWitness, coreachable_states, first_paths,
                        rel_expand, shortest_accepting_continuation)

AXIOMS = ("reflexive", "symmetric", "transitive", "prefix_closed",
          "action_visible", "info_consistent")


@dataclass
class AxiomVerdict:
    axiom: str
    passed: bool
    witness: PairWitness | None = None
    detail: str = ""

    def to_json(self):
        out = {"axiom": self.axiom, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class ValidationReport:
    axioms: dict
    crosscheck: dict | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.axioms.values())

    def failures(self):
        return [v for v in self.axioms.values() if not v.passed]

    def to_json(self):
        out = {
            "passed": self.passed,
            "axioms": [self.axioms[a].to_json() for a in AXIOMS],
        }
        if self.crosscheck is not None:
            out["crosscheck"] = self.crosscheck
        return out


def _check_reflexive(game):
    rel = game.indist
    moves = sorted(game.actmap.moves)
    if rel.initial not in rel.accepting:
        return AxiomVerdict("reflexive", False, PairWitness((), ()),
                            "the empty history is not related to itself")
    paths = {rel.initial: ()}
    queue = [rel.initial]
    while queue:
        nxt_queue = []
        for s in queue:
            base = paths[s]
            for c in moves:
                t = rel.step(s, c, c)
                word = base + ((c, c),)
                hist = tuple(c1 for c1, _ in word)
                if t is None or t not in rel.accepting:
                    return AxiomVerdict(
                        "reflexive", False, PairWitness(hist, hist),
                        "a history is not related to itself")
                if t not in paths:
                    paths[t] = word
                    nxt_queue.append(t)
        queue = nxt_queue
    return AxiomVerdict("reflexive", True)


def _check_symmetric(game):
    rel = game.indist

    def expand(node):
        s, t = node
        for c1, c2 in rel.letters_from(s):
            t2 = None if t is None else rel.step(t, c2, c1)
            yield (c1, c2), (rel.step(s, c1, c2), t2)

    paths = first_paths([(rel.initial, rel.initial)], expand)
    best = None
    for (s, t), word in paths.items():
        if s in rel.accepting and (t is None or t not in rel.accepting):
            key = (len(word), word)
            if best is None or key < best:
                best = key
    if best is None:
        return AxiomVerdict("symmetric", True)
    h1 = tuple(c1 for c1, _ in best[1])
    h2 = tuple(c2 for _, c2 in best[1])
    return AxiomVerdict("symmetric", False, PairWitness(h1, h2),
                        "pair is related but its mirror image is not")


def _check_transitive(game):
    rel = game.indist
    moves = sorted(game.actmap.moves)

    # Nodes track two chained runs plus a run on the outer pair; the path
    # stores the middle history so the witness can be replayed directly.
    def expand(node):
        sa, sb, sl = node
        for c1 in moves:
            for c3 in moves:
                for c2 in moves:
                    na = rel.step(sa, c1, c2)
                    if na is None:
                        continue
                    nb = rel.step(sb, c2, c3)
                    if nb is None:
                        continue
                    nl = None if sl is None else rel.step(sl, c1, c3)
                    yield ((c1, c2, c3)), (na, nb, nl)

    paths = first_paths([(rel.initial, rel.initial, rel.initial)], expand)
    best = None
    for (sa, sb, sl), word in paths.items():
        if (sa in rel.accepting and sb in rel.accepting
                and (sl is None or sl not in rel.accepting)):
            outer = tuple((c1, c3) for c1, _, c3 in word)
            key = (len(outer), outer, word)
            if best is None or key < best:
                best = key
    if best is None:
        return AxiomVerdict("transitive", True)
    word = best[2]
    h1 = tuple(c1 for c1, _, _ in word)
    mid = tuple(c2 for _, c2, _ in word)
    h3 = tuple(c3 for _, _, c3 in word)
    return AxiomVerdict(
        "transitive", False, PairWitness(h1, h3),
        f"related through intermediate history {list(mid)} but not directly")


def _check_prefix_closed(game):
    rel = game.indist
    paths = first_paths([rel.initial], rel_expand(rel))
    coreach = coreachable_states(rel)
    best = None
    for s, word in paths.items():
        if s in rel.accepting or s not in coreach:
            continue
        cont = shortest_accepting_continuation(rel, s)
        if cont is None:
            continue
        full = word + cont
        key = (len(full), full, len(word))
        if best is None or key < best:
            best = key
    if best is None:
        return AxiomVerdict("prefix_closed", True)
    full, plen = best[1], best[2]
    h1 = tuple(c1 for c1, _ in full)
    h2 = tuple(c2 for _, c2 in full)
    return AxiomVerdict(
        "prefix_closed", False, PairWitness(h1, h2, position=plen),
        f"pair is related but its length-{plen} prefix pair is not")


def _check_action_visible(game):
    rel = game.indist
    act = game.actmap.act
    paths = first_paths([rel.initial], rel_expand(rel))
    coreach = coreachable_states(rel)
    best = None
    for s, word in paths.items():
        for c1, c2 in rel.letters_from(s):
            if act[c1] == act[c2]:
                continue
            t = rel.step(s, c1, c2)
            if t not in coreach:
                continue
            cont = shortest_accepting_continuation(rel, t)
            full = word + ((c1, c2),) + cont
            key = (len(full), full, len(word) + 1)
            if best is None or key < best:
                best = key
    if best is None:
        return AxiomVerdict("action_visible", True)
    full, pos = best[1], best[2]
    h1 = tuple(c1 for c1, _ in full)
    h2 = tuple(c2 for _, c2 in full)
    return AxiomVerdict(
        "action_visible", False, PairWitness(h1, h2, position=pos),
        f"related pair plays different actions at position {pos}")


def _check_info_consistent(game):
    rel = game.indist
    moore = game.moore

    def expand(node):
        s, q1, q2 = node
        for c1, c2 in rel.letters_from(s):
            yield (c1, c2), (rel.step(s, c1, c2),
                             moore.step(q1, c1), moore.step(q2, c2))

    paths = first_paths([(rel.initial, moore.initial, moore.initial)], expand)
    best = None
    for (s, q1, q2), word in paths.items():
        if s in rel.accepting and moore.output[q1] != moore.output[q2]:
            key = (len(word), word)
            if best is None or key < best:
                best = key
    if best is None:
        return AxiomVerdict("info_consistent", True)
    h1 = tuple(c1 for c1, _ in best[1])
    h2 = tuple(c2 for _, c2 in best[1])
    return AxiomVerdict("info_consistent", False, PairWitness(h1, h2),
                        "related histories have different colors")


def replay_witness(game, verdict: AxiomVerdict) -> bool:
    """Confirm a failure witness by direct evaluation, independent of the
    automaton searches.  Returns True when the witness indeed violates the
    axiom it was reported for."""

    from .game import color_of  # local import to avoid cycle at module load

    rel = game.indist
    w = verdict.witness
    if w is None:
        return False
    h1, h2 = tuple(w.hist1), tuple(w.hist2)
    if verdict.axiom == "reflexive":
        return h1 == h2 and not rel.related(h1, h2)
    if verdict.axiom == "symmetric":
        return rel.related(h1, h2) and not rel.related(h2, h1)
    if verdict.axiom == "transitive":
        if rel.related(h1, h2):
            return False
        n = len(h1)
        moves = sorted(game.actmap.moves)

        def middle_exists(prefix, s1, s2):
            if len(prefix) == n:
                return s1 in rel.accepting and s2 in rel.accepting
            i = len(prefix)
            for c2 in moves:
                n1 = rel.step(s1, h1[i], c2)
                n2 = rel.step(s2, c2, h2[i])
                if n1 is not None and n2 is not None:
                    if middle_exists(prefix + (c2,), n1, n2):
                        return True
            return False

        return middle_exists((), rel.initial, rel.initial)
    if verdict.axiom == "prefix_closed":
        k = w.position
        return rel.related(h1, h2) and not rel.related(h1[:k], h2[:k])
    if verdict.axiom == "action_visible":
        act = game.actmap.act
        return (rel.related(h1, h2)
                and any(act[a] != act[b] for a, b in zip(h1, h2)))
    if verdict.axiom == "info_consistent":
        return rel.related(h1, h2) and color_of(game, h1) != color_of(game, h2)
    return False


def validate_game(game, depth: int = 0) -> ValidationReport:
    """Run all six axiom checks; optionally cross-check up to `depth`.

    The cross-check enumerates all related pairs of length at most `depth`
    and re-decides each axiom from first principles; automaton verdicts are
    authoritative, and `crosscheck["agreed"]` records whether the bounded
    enumeration is consistent with them (a False here means an internal bug,
    not an invalid game).
    """

    axioms = {
        "reflexive": _check_reflexive(game),
        "symmetric": _check_symmetric(game),
        "transitive": _check_transitive(game),
        "prefix_closed": _check_prefix_closed(game),
        "action_visible": _check_action_visible(game),
        "info_consistent": _check_info_consistent(game),
    }
    report = ValidationReport(axioms=axioms)
    if depth > 0:
        brute = oracles.brute_check_game_axioms(game, depth)
        agreed = True
        details = {}
        for name in AXIOMS:
            v = axioms[name]
            if v.passed:
                ok = brute[name] is None
                if not ok:
                    details[name] = ("automaton passed but enumeration found "
                                     f"{brute[name]}")
            else:
                ok = replay_witness(game, v)
                if not ok:
                    details[name] = "automaton witness failed to replay"
            agreed = agreed and ok
        report.crosscheck = {"depth": depth, "agreed": agreed,
                             "details": details}
    return report
