"""Almost-sure winning via a nested fixpoint on abstract states.

The arena's universe is the disjoint union of the abstract states P and the
state-action pairs P x A.  A controllable predecessor alternates the two
sorts: a state enters when some of its pairs is in, a pair enters when every
move supported by its action leads into the set.  The reachability winning
set is the greatest Y solving

    Y = least X . interior(Y) and (pre(X) or targets)

where the interior drops elements whose equivalence class (under the
transported relation) is not wholly inside.  Sets are bit vectors over a
frozen enumeration: states in morphism file order, then pairs ordered by
(state, action) with actions sorted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CapExceeded, SolverError
from .game import is_target_absorbing
from .morphism import (Morphism, compute_approx, compute_targets,
                       validate_rectangularity, validate_refinement)
from .validation import validate_game


@dataclass
class Arena:
    """Solver-ready view of a validated (game, morphism) pair."""

    states: tuple
    actions: tuple
    initial: str
    morphism: Morphism
    approx: object
    targets: frozenset
    targets_absorbing: bool
    moves_of: dict  # action -> tuple of moves
    # frozen enumeration internals
    n: int = field(init=False)
    a: int = field(init=False)
    state_index: dict = field(init=False)
    action_index: dict = field(init=False)
    full_mask: int = field(init=False)
    state_mask: int = field(init=False)
    target_bits: int = field(init=False)
    succ_mask: list = field(init=False)
    class_masks: list = field(init=False)

    def __post_init__(self):
        self.n = len(self.states)
        self.a = len(self.actions)
        self.state_index = {p: i for i, p in enumerate(self.states)}
        self.action_index = {x: j for j, x in enumerate(self.actions)}
        size = self.n + self.n * self.a
        self.full_mask = (1 << size) - 1
        self.state_mask = (1 << self.n) - 1
        self.target_bits = 0
        for p in self.targets:
            self.target_bits |= 1 << self.state_index[p]
        self.succ_mask = [0] * (self.n * self.a)
        for i, p in enumerate(self.states):
            for j, x in enumerate(self.actions):
                mask = 0
                for c in self.moves_of[x]:
                    mask |= 1 << self.state_index[self.morphism.step(p, c)]
                self.succ_mask[i * self.a + j] = mask
        self.class_masks = []
        for cls in self.approx.classes:
            smask = 0
            for p in cls:
                smask |= 1 << self.state_index[p]
            pmasks = []
            for j in range(self.a):
                pm = 0
                for p in cls:
                    pm |= 1 << self.pair_bit(p, self.actions[j])
                pmasks.append(pm)
            self.class_masks.append((smask, pmasks))

    @property
    def universe_size(self) -> int:
        return self.n + self.n * self.a

    def pair_bit(self, p, a) -> int:
        return self.n + self.state_index[p] * self.a + self.action_index[a]

    def universe(self):
        """All elements in the frozen enumeration order."""
        out = list(self.states)
        for p in self.states:
            for x in self.actions:
                out.append((p, x))
        return out

    def to_bits(self, elements) -> int:
        bits = 0
        for e in elements:
            if isinstance(e, tuple):
                p, x = e
                if p not in self.state_index or x not in self.action_index:
                    raise SolverError(f"unknown pair {e!r}")
                bits |= 1 << self.pair_bit(p, x)
            else:
                if e not in self.state_index:
                    raise SolverError(f"unknown state {e!r}")
                bits |= 1 << self.state_index[e]
        return bits

    def from_bits(self, bits) -> frozenset:
        out = set()
        for i, p in enumerate(self.states):
            if (bits >> i) & 1:
                out.add(p)
        for i, p in enumerate(self.states):
            for j, x in enumerate(self.actions):
                if (bits >> (self.n + i * self.a + j)) & 1:
                    out.add((p, x))
        return frozenset(out)

    # -- core set operators -------------------------------------------------

    def pre_bits(self, x) -> int:
        res = 0
        block = (1 << self.a) - 1
        for i in range(self.n):
            if (x >> (self.n + i * self.a)) & block:
                res |= 1 << i
        xs = x & self.state_mask
        for k in range(self.n * self.a):
            if self.succ_mask[k] & ~xs == 0:
                res |= 1 << (self.n + k)
        return res

    def interior_bits(self, y) -> int:
        for smask, pmasks in self.class_masks:
            if smask & ~y:
                y &= ~smask
            for pm in pmasks:
                if pm & ~y:
                    y &= ~pm
        return y

    def closure_bits(self, y) -> int:
        for smask, pmasks in self.class_masks:
            if smask & y:
                y |= smask
            for pm in pmasks:
                if pm & y:
                    y |= pm
        return y


def pre(arena: Arena, x) -> frozenset:
    """Controllable predecessor of a universe subset."""
    return arena.from_bits(arena.pre_bits(arena.to_bits(x)))


def interior(arena: Arena, y) -> frozenset:
    """Largest subset of y closed under the transported relation."""
    return arena.from_bits(arena.interior_bits(arena.to_bits(y)))


def closure(arena: Arena, y) -> frozenset:
    """Smallest superset of y closed under the transported relation."""
    return arena.from_bits(arena.closure_bits(arena.to_bits(y)))


def build_arena(game, m: Morphism, max_universe: int | None = None) -> Arena:
    """Validate everything and freeze the solver's view.

    Refuses (SolverError) when the game fails an axiom, the coloring is not
    over {0, 1}, or the morphism fails refinement or rectangularity.  The
    target set is computed along the way; whether it must be a sink depends
    on whether the game is already target-absorbing, which solve_reach
    requires and solve_buchi does not.
    """

    if not game.colors() <= {0, 1}:
        raise SolverError(
            f"solver requires colors within {{0, 1}}, got {sorted(game.colors())}")
    m.check_total(game.actmap.moves)
    m = m.trim()
    if max_universe is not None:
        size = len(m.abstract_states) * (1 + len(game.actions))
        if size > max_universe:
            raise CapExceeded(f"universe size {size} exceeds cap {max_universe}")
    report = validate_game(game)
    if not report.passed:
        names = ", ".join(v.axiom for v in report.failures())
        raise SolverError(f"game failed validation: {names}")
    try:
        approx = compute_approx(game, m)
    except Exception as exc:
        raise SolverError(f"transported relation rejected: {exc}") from exc
    refinement = validate_refinement(game, m)
    if not refinement.passed:
        raise SolverError(f"morphism fails refinement: {refinement.detail}")
    rect = validate_rectangularity(game, m)
    if not rect.passed:
        raise SolverError(f"morphism fails rectangularity: {rect.detail}")
    absorbing = is_target_absorbing(game)
    targets = compute_targets(game, m, approx, require_sink=absorbing)
    moves_of = {x: game.actmap.moves_of(x) for x in game.actions}
    return Arena(
        states=m.abstract_states,
        actions=tuple(sorted(game.actions)),
        initial=m.initial,
        morphism=m,
        approx=approx,
        targets=targets,
        targets_absorbing=absorbing,
        moves_of=moves_of,
    )


@dataclass
class FixpointResult:
    """Winning set with ranks and per-state supported actions.

    Ranks come from the final inner iteration: targets get rank 1, a pair
    gets an even rank one above its latest successor, a state one above its
    best pair.  `inner_iterations` is the largest number of strictly growing
    inner steps over all outer rounds; `outer_iterations` counts strict
    shrinks of Y.  Both are bounded by the universe size.
    """

    y_star: frozenset
    ranks: dict
    action_sets: dict
    outer_iterations: int
    inner_iterations: int
    universe_size: int
    objective: str = "reach"
    buchi_rounds: int | None = None

    def max_rank(self) -> int:
        return max(self.ranks.values(), default=0)

    def to_json(self, arena: Arena) -> dict:
        order = {e: i for i, e in enumerate(arena.universe())}

        def enc(e):
            return list(e) if isinstance(e, tuple) else e

        elems = sorted(self.y_star, key=order.get)
        return {
            "objective": self.objective,
            "y_star": {
                "states": [e for e in elems if not isinstance(e, tuple)],
                "pairs": [list(e) for e in elems if isinstance(e, tuple)],
            },
            "ranks": [[enc(e), self.ranks[e]] for e in elems],
            "action_sets": {p: list(v) for p, v in sorted(self.action_sets.items())},
            "iterations": {"outer": self.outer_iterations,
                           "inner": self.inner_iterations},
            "universe": self.universe_size,
            **({"buchi_rounds": self.buchi_rounds}
               if self.buchi_rounds is not None else {}),
        }


def _solve_core(arena: Arena, target_bits: int, objective: str) -> FixpointResult:
    outer = 0
    inner_max = 0
    y = arena.full_mask
    while True:
        int_y = arena.interior_bits(y)
        x = 0
        inner = 0
        while True:
            xn = int_y & (arena.pre_bits(x) | target_bits)
            if xn == x:
                break
            x = xn
            inner += 1
        inner_max = max(inner_max, inner)
        if x == y:
            break
        y = x
        outer += 1

    ranks = {}
    elements = arena.universe()
    x = 0
    i = 0
    while x != y:
        i += 1
        xn = y & (arena.pre_bits(x) | target_bits)
        newly = xn & ~x
        for k, e in enumerate(elements):
            if (newly >> k) & 1:
                ranks[e] = i
        x = xn

    y_star = arena.from_bits(y)
    action_sets = {}
    for p in arena.states:
        if p not in y_star:
            continue
        acts = tuple(a for a in arena.actions if (p, a) in y_star)
        action_sets[p] = acts
        if not acts and not (target_bits >> arena.state_index[p]) & 1:
            raise SolverError(f"internal error: no supported action at {p!r}")
    return FixpointResult(
        y_star=y_star,
        ranks=ranks,
        action_sets=action_sets,
        outer_iterations=outer,
        inner_iterations=inner_max,
        universe_size=arena.universe_size,
        objective=objective,
    )


def solve_reach(arena: Arena) -> FixpointResult:
    """Almost-sure reachability winning set (targets must be absorbing)."""
    if not arena.targets_absorbing:
        raise SolverError(
            "reachability solving requires a target-absorbing game; apply "
            "make_target_absorbing and supply a refining morphism")
    result = _solve_core(arena, arena.target_bits, "reach")
    for p in arena.targets:
        if p in result.y_star and not result.action_sets.get(p):
            raise SolverError(f"internal error: no supported action at {p!r}")
    return result


def is_almost_sure_winning(arena: Arena, result: FixpointResult | None = None) -> bool:
    if result is None:
        result = solve_reach(arena)
    return arena.initial in result.y_star


def solve_buchi(arena: Arena) -> FixpointResult:
    """Almost-sure Buchi winning set.

    Iterates on a shrinking candidate set Z of states: a target is good for
    Z when some action keeps, for every relation partner of the target and
    every supporting move, the successor inside Z; Z is replaced by the
    almost-sure reachability set of the good targets.  At the stable point
    the final reachability run doubles as the witness strategy's source:
    playing its supported actions forever revisits targets almost surely.
    """

    z = set(arena.states)
    rounds = 0
    while True:
        good = set()
        for p in sorted(arena.targets):
            for a in arena.actions:
                ok = True
                for q in arena.approx.class_of(p):
                    for c in arena.moves_of[a]:
                        if arena.morphism.step(q, c) not in z:
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    good.add(p)
                    break
        good_bits = 0
        for p in good:
            good_bits |= 1 << arena.state_index[p]
        result = _solve_core(arena, good_bits, "buchi")
        z_new = {p for p in arena.states if p in result.y_star}
        if z_new == z:
            break
        z = z_new
        rounds += 1
    for p, acts in result.action_sets.items():
        if not acts:
            raise SolverError(f"internal error: no supported action at {p!r}")
    result.buchi_rounds = rounds
    return result


def solve(arena: Arena, objective) -> FixpointResult:
    """Dispatch on the objective kind; reach and buchi are decidable here."""
    from .game import Objective

    if isinstance(objective, str):
        objective = Objective(objective)
    if objective.kind == "reach":
        if objective.horizon is not None:
            raise SolverError(
                "bounded reachability is a quantitative question; use "
                "rig.probability.reach_prob_horizon")
        return solve_reach(arena)
    if objective.kind == "buchi":
        return solve_buchi(arena)
    if objective.kind == "safe":
        raise SolverError(
            "almost-sure safety coincides with sure safety and is won by "
            "pure strategies; this solver only handles reach and buchi")
    raise SolverError(
        "almost-sure co-Buchi winning is undecidable in general for games "
        "with imperfect information; refusing")
