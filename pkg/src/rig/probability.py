"""Exact and sampled play probabilities for finite-memory strategy pairs.

A play unfolds one move per step: the player strategy emits a distribution
over actions, the environment strategy resolves the chosen action to a
supporting move.  For finite-memory strategies the induced process is a
finite Markov chain over (player memory, environment memory, Moore state)
triples, and hitting probabilities are computed in exact rational
arithmetic.  Monte Carlo estimation uses SplitMix64, a small named PRNG
with a portable stream, so transcripts are reproducible bit for bit across
platforms and thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import StrategyError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

ZERO = Fraction(0)
ONE = Fraction(1)


def uniform_dist(keys) -> dict:
    keys = sorted(keys)
    if not keys:
        raise StrategyError("cannot build a distribution over no outcomes")
    p = Fraction(1, len(keys))
    return {k: p for k in keys}


def check_dist(dist, what="distribution"):
    total = ZERO
    for k, p in dist.items():
        if not isinstance(p, Fraction):
            raise StrategyError(f"{what}: probability of {k!r} is not a Fraction")
        if p < 0 or p > 1:
            raise StrategyError(f"{what}: probability of {k!r} out of range: {p}")
        total += p
    if total != 1:
        raise StrategyError(f"{what}: probabilities sum to {total}, not 1")


# ---------------------------------------------------------------------------
# Strategy evaluation wrappers
# ---------------------------------------------------------------------------
#
# Exact computations require finite-memory strategies (objects with
# `initial`, `update(mem, move)`, and `emit_actions(mem)` for the player or
# `emit_moves(mem, action)` for the environment).  The sampler and the
# cylinder evaluator additionally accept plain callables on histories:
# alpha(history) -> dist over actions, beta(history, action) -> dist over
# moves.  An environment of None means uniform over supporting moves.


class _PlayerEval:
    def __init__(self, alpha):
        self.alpha = alpha
        self.finite = hasattr(alpha, "emit_actions")
        self.mem = alpha.initial if self.finite else None

    def dist(self, history):
        if self.finite:
            return self.alpha.emit_actions(self.mem)
        d = self.alpha(tuple(history))
        check_dist(d, "player callback")
        return d

    def advance(self, move):
        if self.finite:
            self.mem = self.alpha.update(self.mem, move)


class _EnvEval:
    def __init__(self, beta, actmap):
        self.beta = beta
        self.actmap = actmap
        self.finite = beta is not None and hasattr(beta, "emit_moves")
        self.mem = beta.initial if self.finite else None

    def dist(self, history, action):
        if self.beta is None:
            return uniform_dist(self.actmap.moves_of(action))
        if self.finite:
            return self.beta.emit_moves(self.mem, action)
        d = self.beta(tuple(history), action)
        check_dist(d, "environment callback")
        for c in d:
            if d[c] != 0 and self.actmap.act[c] != action:
                raise StrategyError(
                    f"environment callback puts mass on {c!r}, which does "
                    f"not support action {action!r}")
        return d

    def advance(self, move):
        if self.finite:
            self.mem = self.beta.update(self.mem, move)


# ---------------------------------------------------------------------------
# Cylinder measure
# ---------------------------------------------------------------------------

def cylinder_prob(game, alpha, beta, rho, tau=()) -> Fraction:
    """Measure of the cylinder at rho for the process started after tau.

    Three cases: 1 when rho is a prefix of tau, a product of action and
    move probabilities when rho extends tau, and 0 otherwise.
    """

    rho = tuple(rho)
    tau = tuple(tau)
    if rho == tau[: len(rho)]:
        return ONE
    if tau != rho[: len(tau)]:
        return ZERO
    player = _PlayerEval(alpha)
    env = _EnvEval(beta, game.actmap)
    history = []
    for c in tau:
        player.advance(c)
        env.advance(c)
        history.append(c)
    prob = ONE
    for c in rho[len(tau):]:
        a = game.actmap.act.get(c)
        if a is None:
            return ZERO
        prob *= player.dist(history).get(a, ZERO)
        prob *= env.dist(history, a).get(c, ZERO)
        if prob == 0:
            return ZERO
        player.advance(c)
        env.advance(c)
        history.append(c)
    return prob


# ---------------------------------------------------------------------------
# Product chains
# ---------------------------------------------------------------------------

@dataclass
class ProductChain:
    """Finite Markov chain with exact transition probabilities.

    `labels` names each state (for product chains a (player memory,
    environment memory, Moore state) triple), `trans[i]` maps successor
    indices to probabilities summing to 1, `target[i]` flags states whose
    Moore output is 1.
    """

    labels: tuple
    trans: list
    target: list
    initial: int = 0
    index: dict = field(init=False)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        for i, row in enumerate(self.trans):
            total = sum(row.values(), ZERO)
            if total != 1:
                raise StrategyError(
                    f"chain state {self.labels[i]!r}: outgoing mass {total}")

    def __len__(self):
        return len(self.labels)


def build_product_chain(game, alpha, beta=None) -> ProductChain:
    """Chain over (player memory, environment memory, Moore state).

    Requires finite-memory strategies; the environment defaults to uniform
    over supporting moves.  States are enumerated breadth-first with moves
    taken in sorted order, so the numbering is deterministic.
    """

    if not hasattr(alpha, "emit_actions"):
        raise StrategyError("exact chain construction needs a finite-memory "
                            "player strategy, not a callback")
    if beta is not None and not hasattr(beta, "emit_moves"):
        raise StrategyError("exact chain construction needs a finite-memory "
                            "environment strategy, not a callback")
    moore = game.moore
    start = (alpha.initial, beta.initial if beta is not None else None,
             moore.initial)
    labels = [start]
    index = {start: 0}
    trans = []
    target = []
    queue = [start]
    while queue:
        am, bm, q = queue.pop(0)
        row = {}
        adist = alpha.emit_actions(am)
        check_dist(adist, f"player emission at {am!r}")
        for a in sorted(adist):
            pa = adist[a]
            if pa == 0:
                continue
            if beta is None:
                mdist = uniform_dist(game.actmap.moves_of(a))
            else:
                mdist = beta.emit_moves(bm, a)
                check_dist(mdist, f"environment emission at {bm!r}/{a!r}")
            for c in sorted(mdist):
                pc = mdist[c]
                if pc == 0:
                    continue
                if game.actmap.act[c] != a:
                    raise StrategyError(
                        f"environment emits {c!r} which does not support {a!r}")
                nxt = (alpha.update(am, c),
                       beta.update(bm, c) if beta is not None else None,
                       moore.step(q, c))
                if nxt not in index:
                    index[nxt] = len(labels)
                    labels.append(nxt)
                    queue.append(nxt)
                row[index[nxt]] = row.get(index[nxt], ZERO) + pa * pc
        trans.append(row)
        target.append(moore.output[q] == 1)
    return ProductChain(tuple(labels), trans, target, 0)


# ---------------------------------------------------------------------------
# Exact reachability values
# ---------------------------------------------------------------------------

def reach_prob_horizon(chain: ProductChain, k: int) -> Fraction:
    """Probability of hitting a target state within k steps (moves)."""
    if k < 0:
        raise ValueError("horizon must be nonnegative")
    mass = {chain.initial: ONE}
    reached = ZERO
    for _ in range(k):
        nxt = {}
        for s, m in mass.items():
            if chain.target[s]:
                reached += m
                continue
            for t, p in chain.trans[s].items():
                nxt[t] = nxt.get(t, ZERO) + m * p
        mass = nxt
        if not mass:
            break
    for s, m in mass.items():
        if chain.target[s]:
            reached += m
    return reached


def reach_prob_limit(chain: ProductChain) -> Fraction:
    """Exact limit probability of ever hitting a target state.

    States with no path to a target have value 0; on the remaining
    non-target states the hitting values are the unique solution of the
    standard linear system, solved by Gaussian elimination over Fractions.
    """

    n = len(chain)
    can_reach = set(i for i in range(n) if chain.target[i])
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if s in can_reach or chain.target[s]:
                continue
            if any(t in can_reach for t in chain.trans[s]):
                can_reach.add(s)
                changed = True
    variables = sorted(s for s in can_reach if not chain.target[s])
    if not variables:
        return ONE if chain.target[chain.initial] else ZERO
    pos = {s: i for i, s in enumerate(variables)}
    m = len(variables)
    rows = []
    for s in variables:
        row = [ZERO] * (m + 1)
        row[pos[s]] = ONE
        for t, p in chain.trans[s].items():
            if chain.target[t]:
                row[m] += p
            elif t in pos:
                row[pos[t]] -= p
        rows.append(row)
    for col in range(m):
        pivot = next(r for r in range(col, m) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = ONE / rows[col][col]
        rows[col] = [v * inv for v in rows[col]]
        for r in range(m):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    values = {s: rows[pos[s]][m] for s in variables}
    if chain.target[chain.initial]:
        return ONE
    return values.get(chain.initial, ZERO)


# ---------------------------------------------------------------------------
# Chain structure: SCCs, bottom components, qualitative verdicts
# ---------------------------------------------------------------------------

def strongly_connected_components(adj) -> list:
    """Tarjan's algorithm, iterative.  adj: list of successor index lists."""
    n = len(adj)
    index = [None] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comps = []
    counter = 0
    for root in range(n):
        if index[root] is not None:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adj[v]):
                w = adj[v][pi]
                pi += 1
                if index[w] is None:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comps


def _reachable(chain: ProductChain, prune_at_targets: bool) -> set:
    seen = {chain.initial}
    queue = [chain.initial]
    while queue:
        s = queue.pop()
        if prune_at_targets and chain.target[s]:
            continue
        for t in chain.trans[s]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


def bottom_sccs(chain: ProductChain, restrict=None) -> list:
    nodes = sorted(restrict) if restrict is not None else list(range(len(chain)))
    pos = {s: i for i, s in enumerate(nodes)}
    adj = [[pos[t] for t in chain.trans[s] if t in pos] for s in nodes]
    bottoms = []
    for comp in strongly_connected_components(adj):
        members = set(comp)
        closed = all(w in members for v in comp for w in adj[v])
        if closed:
            bottoms.append(sorted(nodes[v] for v in comp))
    return bottoms


def almost_sure_reach(chain: ProductChain) -> bool:
    """True iff a target is hit with probability 1 from the initial state.

    Classic criterion: prune the chain at targets (hitting stops the play)
    and check that every bottom strongly connected component of what
    remains reachable contains a target.
    """

    reachable = _reachable(chain, prune_at_targets=True)
    pruned = {s for s in reachable if not chain.target[s]}
    # Pruned targets are absorbing by construction of the restriction:
    # only non-target states keep their outgoing edges.
    nodes = sorted(reachable)
    pos = {s: i for i, s in enumerate(nodes)}
    adj = []
    for s in nodes:
        if chain.target[s]:
            adj.append([pos[s]])
        else:
            adj.append([pos[t] for t in chain.trans[s] if t in pos])
    for comp in strongly_connected_components(adj):
        members = set(comp)
        if all(w in members for v in comp for w in adj[v]):
            if not any(chain.target[nodes[v]] for v in comp):
                return False
    return True


def almost_sure_buchi(chain: ProductChain) -> bool:
    """True iff targets are visited infinitely often with probability 1.

    Holds exactly when every reachable bottom strongly connected component
    contains a target state; no pruning, since plays continue past targets.
    """

    reachable = _reachable(chain, prune_at_targets=False)
    for comp in bottom_sccs(chain, restrict=reachable):
        if not any(chain.target[s] for s in comp):
            return False
    return True


# ---------------------------------------------------------------------------
# SplitMix64 sampling
# ---------------------------------------------------------------------------

class SplitMix64:
    """Steele, Lea and Flood's SplitMix64.

    64-bit state advanced by the golden-gamma increment, output through the
    variant-13 finalizer.  Chosen because the whole generator is ten lines,
    has a published reference stream, and behaves identically on every
    platform and Python build.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64


def _fmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(seed: int, index: int) -> int:
    """Seed for the index-th substream.

    Double application of the SplitMix64 finalizer around a golden-ratio
    offset; distinct indices give distinct, well-scrambled seeds.  Each
    Monte Carlo sample runs on its own substream, which makes transcripts
    independent of any worker partitioning.
    """

    return _fmix64((_fmix64(seed) + ((index + 1) * GOLDEN)) & MASK64)


def sample_from_dist(rng: SplitMix64, dist) -> object:
    """Inverse-CDF draw over the lexicographically sorted support.

    Thresholds are exact integers ceil(cdf * 2^64); outcomes whose
    probabilities have power-of-two denominators (including Dirac and
    uniform-over-2^k) are drawn with exactly their stated probability.
    """

    items = [(k, p) for k, p in sorted(dist.items()) if p != 0]
    if not items:
        raise StrategyError("cannot sample from an empty distribution")
    r = rng.next_u64()
    cum = ZERO
    for k, p in items[:-1]:
        cum += p
        threshold = -((-cum.numerator << 64) // cum.denominator)
        if r < threshold:
            return k
    return items[-1][0]


@dataclass
class SimulationResult:
    samples: int
    rounds: int
    hits: int
    transcripts: list

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.hits, self.samples)

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "rounds": self.rounds,
            "hits": self.hits,
            "estimate": f"{float(self.estimate):.6f}",
            "estimate_exact": f"{self.estimate.numerator}/{self.estimate.denominator}",
            "transcripts": self.transcripts,
        }


def simulate(game, alpha, beta=None, rounds=30, samples=1000, seed=0,
             transcripts=0, threads=1) -> SimulationResult:
    """Monte Carlo estimate of Pr(reach a color-1 state within `rounds` moves).

    Deterministic for a fixed seed: sample i draws from the substream
    derive_seed(seed, i), so the result does not depend on `threads` (the
    parameter is accepted for interface stability; execution is
    sequential).  Strategies may be finite-memory objects or callables on
    histories; the environment defaults to uniform over supporting moves.
    """

    if rounds <= 0 or samples <= 0:
        raise ValueError("rounds and samples must be positive")
    del threads  # sequential; per-sample substreams keep results identical
    moore = game.moore
    hits = 0
    logs = []
    for i in range(samples):
        rng = SplitMix64(derive_seed(seed, i))
        player = _PlayerEval(alpha)
        env = _EnvEval(beta, game.actmap)
        history = []
        q = moore.initial
        reached = moore.output[q] == 1
        step = 0
        while not reached and step < rounds:
            a = sample_from_dist(rng, player.dist(history))
            c = sample_from_dist(rng, env.dist(history, a))
            player.advance(c)
            env.advance(c)
            history.append(c)
            q = moore.step(q, c)
            reached = moore.output[q] == 1
            step += 1
        if reached:
            hits += 1
        if i < transcripts:
            logs.append({"sample": i, "moves": list(history), "reached": reached})
    return SimulationResult(samples, rounds, hits, logs)
