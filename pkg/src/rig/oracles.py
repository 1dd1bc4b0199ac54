"""Brute-force oracles, kept deliberately naive and separate.

Everything in this module re-decides questions answered elsewhere by
automaton products or fixpoints, using plain enumeration of histories,
patterns, and adversaries.  The test suite compares the two sides; the
validators may also consult the axiom oracle as an optional cross-check.
Nothing here is needed on any production code path, and nothing here
shares nontrivial machinery with the modules it audits.
"""

from __future__ import annotations

import itertools

from .errors import CapExceeded

DEFAULT_PAIR_CAP = 400_000


def enumerate_histories(moves, depth, cap=DEFAULT_PAIR_CAP):
    """Levels of all move sequences: levels[k] lists the length-k histories
    in lexicographic order."""
    moves = sorted(moves)
    levels = [[()]]
    total = 1
    for _ in range(depth):
        nxt = [h + (c,) for h in levels[-1] for c in moves]
        total += len(nxt)
        if total > cap:
            raise CapExceeded(f"history enumeration exceeded {cap}")
        levels.append(nxt)
    return levels


def _pair_levels(game, depth, cap):
    """levels[k]: every length-k history pair with a defined relation run,
    mapped to the run's end state.  Undefined runs never recover (the
    relation automaton is a partial DFA), so pruning them is lossless."""
    rel = game.indist
    levels = [{((), ()): rel.initial}]
    total = 1
    for _ in range(depth):
        nxt = {}
        for (h1, h2), s in levels[-1].items():
            for c1, row in rel.delta.get(s, {}).items():
                for c2, t in row.items():
                    nxt[(h1 + (c1,), h2 + (c2,))] = t
        total += len(nxt)
        if total > cap:
            raise CapExceeded(f"pair enumeration exceeded {cap}")
        levels.append(nxt)
    return levels


class _MooreCache:
    def __init__(self, moore):
        self.moore = moore
        self.states = {(): moore.initial}

    def state(self, h):
        cached = self.states.get(h)
        if cached is not None:
            return cached
        q = self.state(h[:-1])
        q = self.moore.step(q, h[-1])
        self.states[h] = q
        return q

    def color(self, h):
        return self.moore.output[self.state(h)]


def brute_check_game_axioms(game, depth, cap=DEFAULT_PAIR_CAP):
    """Re-decide the six relation axioms by bounded enumeration.

    Returns a dict mapping each axiom name to None (no violation of length
    at most `depth`) or a witness dict with the offending histories.  The
    enumeration is complete up to the depth: a None is a proof that the
    shortest violation, if any, is longer.
    """

    rel = game.indist
    act = game.actmap.act
    pair_levels = _pair_levels(game, depth, cap)
    related = [frozenset(p for p, s in lvl.items() if s in rel.accepting)
               for lvl in pair_levels]
    hist_levels = enumerate_histories(game.actmap.moves, depth, cap)
    colors = _MooreCache(game.moore)
    out = {}

    witness = None
    for lvl in hist_levels:
        for h in lvl:
            if (h, h) not in related[len(h)]:
                witness = {"histories": [list(h), list(h)], "length": len(h)}
                break
        if witness:
            break
    out["reflexive"] = witness

    witness = None
    for level in related:
        for h1, h2 in sorted(level):
            if (h2, h1) not in level:
                witness = {"histories": [list(h1), list(h2)],
                           "length": len(h1)}
                break
        if witness:
            break
    out["symmetric"] = witness

    witness = None
    for level in related:
        partners = {}
        for h1, h2 in level:
            partners.setdefault(h1, set()).add(h2)
        interned = {}
        key = {h: interned.setdefault(frozenset(s), len(interned))
               for h, s in partners.items()}
        for h1, h2 in sorted(level):
            if key.get(h1) == key.get(h2):
                continue
            for h3 in sorted(partners.get(h2, ())):
                if h3 not in partners.get(h1, ()):
                    witness = {"histories": [list(h1), list(h2), list(h3)],
                               "length": len(h1)}
                    break
            if witness:
                break
        if witness:
            break
    out["transitive"] = witness

    witness = None
    for length in range(1, len(related)):
        for h1, h2 in sorted(related[length]):
            bad = next((i for i in range(length)
                        if (h1[:i], h2[:i]) not in related[i]), None)
            if bad is not None:
                witness = {"histories": [list(h1), list(h2)],
                           "position": bad, "length": length}
                break
        if witness:
            break
    out["prefix_closed"] = witness

    witness = None
    for level in related:
        for h1, h2 in sorted(level):
            bad = next((i for i, (a, b) in enumerate(zip(h1, h2))
                        if act[a] != act[b]), None)
            if bad is not None:
                witness = {"histories": [list(h1), list(h2)],
                           "position": bad, "length": len(h1)}
                break
        if witness:
            break
    out["action_visible"] = witness

    witness = None
    for level in related:
        for h1, h2 in sorted(level):
            if colors.color(h1) != colors.color(h2):
                witness = {"histories": [list(h1), list(h2)],
                           "colors": [colors.color(h1), colors.color(h2)],
                           "length": len(h1)}
                break
        if witness:
            break
    out["info_consistent"] = witness
    return out


def brute_check_refinement(game, m, depth, cap=DEFAULT_PAIR_CAP):
    """Equal image must force equal color, over all histories up to depth."""
    from .morphism import h_eval

    colors = _MooreCache(game.moore)
    seen = {}
    for lvl in enumerate_histories(game.actmap.moves, depth, cap):
        for h in lvl:
            p = h_eval(m, h)
            col = colors.color(h)
            if p not in seen:
                seen[p] = (col, h)
            elif seen[p][0] != col:
                return {"histories": [list(seen[p][1]), list(h)],
                        "image": p, "colors": [seen[p][0], col]}
    return None


def brute_check_rectangularity(game, m, depth, cap=DEFAULT_PAIR_CAP):
    """Class images must depend only on the history's own image.

    For each history the class image is the set of images of its related
    partners; two histories (of any lengths up to depth) sharing an image
    must share class images.
    """

    from .morphism import h_eval

    rel = game.indist
    pair_levels = _pair_levels(game, depth, cap)
    hist_levels = enumerate_histories(game.actmap.moves, depth, cap)
    h_cache = {}

    def image(h):
        if h not in h_cache:
            h_cache[h] = h_eval(m, h)
        return h_cache[h]

    seen = {}
    for level, hists in zip(pair_levels, hist_levels):
        # every history gets a class, empty when the relation (perhaps
        # because an axiom is broken) relates it to nothing at all
        partners = {h: set() for h in hists}
        for (h1, h2), s in level.items():
            if s in rel.accepting:
                partners[h1].add(h2)
        for h in sorted(partners):
            img = frozenset(image(h2) for h2 in partners[h])
            p = image(h)
            if p not in seen:
                seen[p] = (img, h)
            elif seen[p][0] != img:
                diff = sorted(seen[p][0] ^ img)
                return {"histories": [list(seen[p][1]), list(h)],
                        "image": p, "difference": diff}
    return None


# ---------------------------------------------------------------------------
# Perfect-information oracle
# ---------------------------------------------------------------------------

def perfect_info_attractor(game):
    """Classical almost-sure reachability attractor on the Moore machine.

    No relation, no morphism, no bit tricks: a state enters when some
    action's pair is in, a pair enters when every supporting move leads
    in.  Returns (states, pairs) of the least fixpoint.
    """

    moore = game.moore.trim()
    actions = sorted(game.actmap.actions)
    moves_of = {a: game.actmap.moves_of(a) for a in actions}
    x_states = {q for q in moore.states if moore.output[q] == 1}
    x_pairs = set()
    changed = True
    while changed:
        changed = False
        for q in moore.states:
            for a in actions:
                if (q, a) not in x_pairs and \
                        all(moore.step(q, c) in x_states for c in moves_of[a]):
                    x_pairs.add((q, a))
                    changed = True
            if q not in x_states and any((q, a) in x_pairs for a in actions):
                x_states.add(q)
                changed = True
    return frozenset(x_states), frozenset(x_pairs)


# ---------------------------------------------------------------------------
# Reif oracle: belief-pattern enumeration
# ---------------------------------------------------------------------------

def reif_pattern_count(rg) -> int:
    """Number of belief-support patterns the Reif oracle would enumerate."""
    _, cells = _reif_nodes(rg)
    return (2 ** len(rg.actmap.actions) - 1) ** len(cells)


def _reif_nodes(rg):
    win = rg.winning
    actions = sorted(rg.actmap.actions)
    moves_of = {a: rg.actmap.moves_of(a) for a in actions}

    def belief_update(belief, a, o):
        nxt = set()
        for l in belief:
            for c in moves_of[a]:
                n = rg.step(l, c)
                if n not in win and rg.obs[n] == o:
                    nxt.add(n)
        return frozenset(nxt)

    start = (rg.initial, frozenset([rg.initial]))
    nodes = {start}
    queue = [start]
    while queue:
        l, belief = queue.pop()
        for a in actions:
            for c in moves_of[a]:
                n = rg.step(l, c)
                if n in win:
                    continue
                node = (n, belief_update(belief, a, rg.obs[n]))
                if node not in nodes:
                    nodes.add(node)
                    queue.append(node)
    cells = sorted({b for _, b in nodes}, key=sorted)
    return nodes, cells


def reif_almost_sure(rg, pattern_cap=3000) -> bool:
    """Naive qualitative decision over belief-based randomized strategies.

    Enumerates every assignment of a nonempty action support to each
    reachable belief (the support pattern of an information-consistent
    randomized strategy) and tests each directly on the (location, belief)
    graph: the pattern wins almost surely iff the environment cannot steer
    the play into a set of unwon nodes it can keep the play in forever.
    That per-pattern test is exact for any move-resolution adversary, so
    the answer is sound on its own terms; agreement with the fixpoint
    solver is what the acceptance suite checks.
    """

    win = rg.winning
    if rg.initial in win:
        return True
    actions = sorted(rg.actmap.actions)
    moves_of = {a: rg.actmap.moves_of(a) for a in actions}
    nodes, cells = _reif_nodes(rg)

    def belief_update(belief, a, o):
        return frozenset(
            rg.step(l, c) for l in belief for c in moves_of[a]
            if rg.step(l, c) not in win and rg.obs[rg.step(l, c)] == o)

    count = (2 ** len(actions) - 1) ** len(cells)
    if count > pattern_cap:
        raise CapExceeded(
            f"{count} support patterns exceed the cap {pattern_cap}")
    supports = []
    for size in range(1, len(actions) + 1):
        supports.extend(itertools.combinations(actions, size))
    start = (rg.initial, frozenset([rg.initial]))

    def succ(node, a):
        l, belief = node
        out = []
        for c in moves_of[a]:
            n = rg.step(l, c)
            if n in win:
                out.append(None)  # None marks a winning successor
            else:
                out.append((n, belief_update(belief, a, rg.obs[n])))
        return out

    for assignment in itertools.product(supports, repeat=len(cells)):
        pattern = dict(zip(cells, assignment))
        avoid = set(nodes)
        changed = True
        while changed:
            changed = False
            for node in sorted(avoid, key=lambda n: (n[0], sorted(n[1]))):
                _, belief = node
                stays = all(
                    any(s is not None and s in avoid for s in succ(node, a))
                    for a in pattern[belief])
                if not stays:
                    avoid.discard(node)
                    changed = True
        reach = {start}
        queue = [start]
        while queue:
            node = queue.pop()
            _, belief = node
            for a in pattern[belief]:
                for s in succ(node, a):
                    if s is not None and s not in reach:
                        reach.add(s)
                        queue.append(s)
        if not (reach & avoid):
            return True
    return False


# ---------------------------------------------------------------------------
# Perfect-information Buchi oracle: patterns versus positional adversaries
# ---------------------------------------------------------------------------

def perfect_info_buchi(game, pattern_cap=100_000, adversary_cap=100_000) -> bool:
    """Exhaustive decision of almost-sure Buchi for identity-relation games.

    Tries every support pattern over Moore states; a pattern wins when
    every positional adversary's induced chain keeps the color-1 states
    reachable from everywhere reachable (equivalent to every reachable
    bottom component containing a target).  True iff some pattern wins.
    """

    moore = game.moore.trim()
    actions = sorted(game.actmap.actions)
    moves_of = {a: game.actmap.moves_of(a) for a in actions}
    targets = {q for q in moore.states if moore.output[q] == 1}
    supports = []
    for size in range(1, len(actions) + 1):
        supports.extend(itertools.combinations(actions, size))
    if len(supports) ** len(moore.states) > pattern_cap:
        raise CapExceeded("support pattern family exceeds the cap")

    def pattern_wins(pattern):
        cells = [(q, a) for q in moore.states for a in pattern[q]]
        count = 1
        for _, a in cells:
            count *= len(moves_of[a])
            if count > adversary_cap:
                raise CapExceeded("adversary family exceeds the cap")
        for picks in itertools.product(*(moves_of[a] for _, a in cells)):
            beta = dict(zip(cells, picks))
            succ = {q: sorted({moore.step(q, beta[(q, a)])
                               for a in pattern[q]})
                    for q in moore.states}
            reach = {moore.initial}
            queue = [moore.initial]
            while queue:
                q = queue.pop()
                for t in succ[q]:
                    if t not in reach:
                        reach.add(t)
                        queue.append(t)
            can_hit = set(targets)
            grew = True
            while grew:
                grew = False
                for q in moore.states:
                    if q not in can_hit and any(t in can_hit for t in succ[q]):
                        can_hit.add(q)
                        grew = True
            if not reach <= can_hit:
                return False
        return True

    for assignment in itertools.product(supports, repeat=len(moore.states)):
        pattern = dict(zip(moore.states, assignment))
        if pattern_wins(pattern):
            return True
    return False


# ---------------------------------------------------------------------------
# Bounded-memory environment adversaries
# ---------------------------------------------------------------------------

def small_adversaries(actmap, memory_size):
    """Every pure environment strategy with `memory_size` memory states.

    Enumerates all update functions and all pure per-(memory, action) move
    picks; the count explodes quickly, so callers keep the alphabets tiny.
    Yields FiniteMemoryStrategy objects in a deterministic order.
    """

    from .strategy import FiniteMemoryStrategy
    from .probability import ONE

    mems = tuple(f"m{i}" for i in range(memory_size))
    moves = sorted(actmap.moves)
    actions = sorted(actmap.actions)
    slots = [(mem, c) for mem in mems for c in moves]
    emit_slots = [(mem, a) for mem in mems for a in actions]
    for upd in itertools.product(mems, repeat=len(slots)):
        table = {mem: {} for mem in mems}
        for (mem, c), nxt in zip(slots, upd):
            table[mem][c] = nxt
        for picks in itertools.product(
                *(actmap.moves_of(a) for _, a in emit_slots)):
            emission = {mem: {} for mem in mems}
            for (mem, a), c in zip(emit_slots, picks):
                emission[mem][a] = {c: ONE}
            yield FiniteMemoryStrategy("environment", mems, mems[0],
                                       table, emission)
