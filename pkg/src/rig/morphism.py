"""History abstractions: deterministic morphisms onto finite state spaces.

A morphism is given by a deterministic automaton over moves; the image of a
history is the state its run ends in.  Three properties make one usable by
the solver:

  * rectangularity: histories with equal image have classes with equal
    image sets (equivalently, the kernel of the morphism commutes with the
    indistinguishability relation),
  * refinement: histories with equal image have equal colors,
  * the transported relation on abstract states is an equivalence.

All three are decided exactly by the product constructions below.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import jsonio
from .errors import CapExceeded, MorphismError, SchemaError
from .relations import (ComposedRelation, DeterminizedRelation, PairWitness,
                        determinized_equal, first_paths)

MORPHISM_FORMAT = "rig-morphism/1"
IMAGE_TRACK_CAP = 50_000


@dataclass
class Morphism:
    """Deterministic complete automaton; h(history) = end state of its run."""

    abstract_states: tuple
    initial: str
    delta_p: dict  # state -> move -> state

    def __post_init__(self):
        self.abstract_states = tuple(self.abstract_states)
        if self.initial not in self.abstract_states:
            raise MorphismError(f"initial state {self.initial!r} not a state")

    def check_total(self, moves):
        for p in self.abstract_states:
            row = self.delta_p.get(p, {})
            for c in moves:
                if c not in row:
                    raise MorphismError(f"missing transition delta_p[{p!r}][{c!r}]")
                if row[c] not in self.abstract_states:
                    raise MorphismError(
                        f"transition delta_p[{p!r}][{c!r}] leaves the state set")

    def step(self, p, move):
        try:
            return self.delta_p[p][move]
        except KeyError as exc:
            raise MorphismError(f"unknown transition delta_p[{p!r}][{move!r}]") from exc

    def trim(self) -> "Morphism":
        """Drop unreachable abstract states; every kept state is some h(tau)."""
        seen = {self.initial}
        queue = [self.initial]
        while queue:
            p = queue.pop()
            for c in sorted(self.delta_p.get(p, {})):
                nxt = self.delta_p[p][c]
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        states = tuple(p for p in self.abstract_states if p in seen)
        return Morphism(states, self.initial,
                        {p: dict(self.delta_p.get(p, {})) for p in states})


def h_eval(m: Morphism, history) -> str:
    p = m.initial
    for c in history:
        p = m.step(p, c)
    return p


@dataclass
class MorphismVerdict:
    check: str
    passed: bool
    witness: PairWitness | None = None
    detail: str = ""

    def to_json(self):
        out = {"check": self.check, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


class ApproxRelation:
    """Equivalence on abstract states transported from the relation.

    Two abstract states are related when some pair of indistinguishable
    histories maps onto them.  Extended to state-action pairs implicitly:
    (p, a) is related to (p', a') iff p ~ p' and a = a'.
    """

    def __init__(self, carrier, pairs, witnesses=None):
        self.carrier = tuple(carrier)
        self.pairs = frozenset(pairs)
        self.witnesses = witnesses or {}
        parent = {p: p for p in self.carrier}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for p, q in sorted(self.pairs):
            rp, rq = find(p), find(q)
            if rp != rq:
                parent[rq] = rp
        self._root = {p: find(p) for p in self.carrier}
        by_root = {}
        for p in self.carrier:  # carrier order makes class order deterministic
            by_root.setdefault(self._root[p], []).append(p)
        self.classes = tuple(tuple(v) for v in by_root.values())

    def same(self, p, q) -> bool:
        return self._root[p] == self._root[q]

    def class_of(self, p) -> tuple:
        root = self._root[p]
        for cls in self.classes:
            if self._root[cls[0]] == root:
                return cls
        raise KeyError(p)


def compute_approx(game, m: Morphism) -> ApproxRelation:
    """Transport the relation through the morphism and verify it is an
    equivalence on the reachable abstract states.

    Raises MorphismError (with witnessing states and histories) when the
    transported relation fails reflexivity, symmetry, or transitivity; by
    the abstraction lemma this only happens for non-rectangular morphisms
    or invalid games.
    """

    rel = game.indist

    def expand(node):
        s, p1, p2 = node
        for c1, c2 in rel.letters_from(s):
            yield (c1, c2), (rel.step(s, c1, c2), m.step(p1, c1), m.step(p2, c2))

    paths = first_paths([(rel.initial, m.initial, m.initial)], expand)
    pairs = set()
    witnesses = {}
    for (s, p1, p2), word in paths.items():
        if s in rel.accepting:
            if (p1, p2) not in pairs:
                pairs.add((p1, p2))
                witnesses[(p1, p2)] = (tuple(c1 for c1, _ in word),
                                      tuple(c2 for _, c2 in word))

    carrier = m.trim().abstract_states
    for p in carrier:
        if (p, p) not in pairs:
            raise MorphismError(
                f"transported relation is not reflexive at {p!r}")
    for (p, q) in pairs:
        if (q, p) not in pairs:
            h1, h2 = witnesses[(p, q)]
            raise MorphismError(
                f"transported relation is not symmetric at ({p!r}, {q!r}); "
                f"witness histories {list(h1)} / {list(h2)}")
    partners = {}
    for (p, q) in pairs:
        partners.setdefault(p, set()).add(q)
    for p, qs in partners.items():
        for q in qs:
            if not partners.get(q, set()) <= qs:
                r = min(partners[q] - qs)
                raise MorphismError(
                    f"transported relation is not transitive: "
                    f"({p!r}, {q!r}) and ({q!r}, {r!r}) but not ({p!r}, {r!r})")
    return ApproxRelation(carrier, pairs, witnesses)


def _image_product_paths(game, m: Morphism):
    """Lex-least shortest history to every reachable (abstract, Moore) pair."""
    moore = game.moore
    moves = sorted(game.actmap.moves)

    def expand(node):
        p, q = node
        for c in moves:
            yield c, (m.step(p, c), moore.step(q, c))

    return first_paths([(m.initial, moore.initial)], expand)


def validate_refinement(game, m: Morphism) -> MorphismVerdict:
    """Exact check that equal images force equal colors.

    Explores the product of the morphism automaton with the Moore machine;
    a violation is two histories (possibly of different lengths) with the
    same image but different colors.
    """

    paths = _image_product_paths(game, m)
    seen = {}
    best = None
    for (p, q), word in sorted(paths.items(), key=lambda kv: (len(kv[1]), kv[1])):
        color = game.moore.output[q]
        if p not in seen:
            seen[p] = (color, word)
        elif seen[p][0] != color:
            other = seen[p][1]
            key = (len(word), word)
            if best is None or key < best[0]:
                best = (key, PairWitness(other, word),
                        f"image {p!r} carries colors {seen[p][0]} and {color}")
    if best is None:
        return MorphismVerdict("refinement", True)
    return MorphismVerdict("refinement", False, best[1], best[2])


class _KernelRelation:
    """Kernel of the morphism as a synchronous relation: pairs of same-length
    histories with equal image.  Total over all letter pairs."""

    class _Diagonal:
        def __contains__(self, state):
            return state[0] == state[1]

    def __init__(self, m):
        self.m = m
        self.initial = (m.initial, m.initial)
        self.accepting = self._Diagonal()

    def step(self, state, c1, c2):
        return (self.m.step(state[0], c1), self.m.step(state[1], c2))


def validate_rectangularity(game, m: Morphism, cap=IMAGE_TRACK_CAP) -> MorphismVerdict:
    """Exact rectangularity check, in two exact halves.

    First, image constancy: the set of images of a history's class must
    depend only on the history's own image.  Decided by a subset
    construction that tracks, along a single history, the runs of all its
    related partners.  This covers pairs of different lengths.

    Second, the kernel of the morphism must commute with the relation;
    both composites are built as nondeterministic synchronous relations,
    determinized, and compared, yielding a shortest separating pair if any.
    """

    rel = game.indist
    moves = sorted(game.actmap.moves)

    def expand(node):
        p, partner_set = node
        for c in moves:
            nxt = set()
            for s, pp in partner_set:
                row = rel.delta.get(s, {}).get(c, {})
                for c2, s2 in row.items():
                    nxt.add((s2, m.step(pp, c2)))
            yield c, (m.step(p, c), frozenset(nxt))

    initial = (m.initial, frozenset([(rel.initial, m.initial)]))
    paths = first_paths([initial], expand)
    if len(paths) > cap:
        raise CapExceeded(f"image tracking exceeded {cap} subset states")
    images = {}
    for (p, partner_set), word in sorted(paths.items(),
                                         key=lambda kv: (len(kv[1]), kv[1])):
        img = frozenset(pp for s, pp in partner_set if s in rel.accepting)
        if p not in images:
            images[p] = (img, word)
        elif images[p][0] != img:
            img0, word0 = images[p]
            diff = sorted(img0 ^ img)
            return MorphismVerdict(
                "rectangularity", False, PairWitness(word0, word),
                f"histories share image {p!r} but their classes map to "
                f"different sets (difference {diff})")

    kernel = _KernelRelation(m)
    left = DeterminizedRelation(ComposedRelation(kernel, rel, moves), cap)
    right = DeterminizedRelation(ComposedRelation(rel, kernel, moves), cap)
    sep = determinized_equal(left, right)
    if sep is not None:
        h1 = tuple(c1 for c1, _ in sep)
        h2 = tuple(c2 for _, c2 in sep)
        return MorphismVerdict(
            "rectangularity", False, PairWitness(h1, h2),
            "kernel composed with the relation differs from the relation "
            "composed with the kernel")
    return MorphismVerdict("rectangularity", True)


def compute_targets(game, m: Morphism, approx: ApproxRelation,
                    require_sink: bool = True) -> frozenset:
    """Abstract states carrying at least one color-1 history.

    With `require_sink` the target set must be absorbing under every move
    (the latched setting the reachability solver works in); it must always
    be closed under the transported relation.
    """

    paths = _image_product_paths(game, m)
    targets = set()
    for (p, q) in paths:
        if game.moore.output[q] == 1:
            targets.add(p)
    if require_sink:
        for p in sorted(targets):
            for c in sorted(game.actmap.moves):
                nxt = m.step(p, c)
                if nxt not in targets:
                    raise MorphismError(
                        f"target set is not a sink: delta_p[{p!r}][{c!r}] = "
                        f"{nxt!r} is not a target")
    for p in sorted(targets):
        for q in approx.class_of(p):
            if q not in targets:
                raise MorphismError(
                    f"target set is not closed under the transported "
                    f"relation: {p!r} is a target, its partner {q!r} is not")
    return frozenset(targets)


# ---------------------------------------------------------------------------
# Serialization (rig-morphism/1)
# ---------------------------------------------------------------------------

def morphism_to_json(m: Morphism) -> dict:
    return {
        "format": MORPHISM_FORMAT,
        "abstract_states": list(m.abstract_states),
        "initial": m.initial,
        "delta_p": {p: dict(m.delta_p[p]) for p in m.abstract_states},
    }


def morphism_from_json(data, moves=None) -> Morphism:
    jsonio.expect_format(data, MORPHISM_FORMAT)
    states = [jsonio.expect_str(p, "abstract_states[]") for p in
              jsonio.expect_list(jsonio.get_field(data, "abstract_states"),
                                 "abstract_states")]
    initial = jsonio.expect_str(jsonio.get_field(data, "initial"), "initial")
    raw = jsonio.expect_dict(jsonio.get_field(data, "delta_p"), "delta_p")
    delta_p = {}
    for p, row in raw.items():
        if p not in states:
            raise SchemaError(f"unknown state {p!r}", "delta_p")
        delta_p[p] = {}
        for c, nxt in jsonio.expect_dict(row, f"delta_p.{p}").items():
            if moves is not None and c not in moves:
                raise SchemaError(f"unknown move {c!r}", f"delta_p.{p}")
            if nxt not in states:
                raise SchemaError(f"unknown target {nxt!r}", f"delta_p.{p}.{c}")
            delta_p[p][c] = nxt
    try:
        morphism = Morphism(tuple(states), initial, delta_p)
    except MorphismError as exc:
        raise SchemaError(str(exc)) from exc
    # Unreachable abstract states are dropped so that every state is the
    # image of some history.
    return morphism.trim()


def load_morphism(path, moves=None) -> Morphism:
    return morphism_from_json(jsonio.load_json_file(path), moves)


def save_morphism(path, m: Morphism, manifest=None):
    data = morphism_to_json(m)
    if manifest is not None:
        data["manifest"] = manifest.to_json()
    jsonio.write_json_file(path, data)
