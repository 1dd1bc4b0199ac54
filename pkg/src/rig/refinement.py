"""Parametric tree games and the trace-refinement counterexample.

This module handles finite tree-shaped games whose edge probabilities are
affine expressions in named parameters: player parameters describe a
randomized player strategy (shared across indistinguishable positions,
which is what the `class` tag on player nodes records), environment
parameters a randomized environment strategy.  `leaf_distribution`
computes the exact color distribution for a full parameter assignment.

The bundled pair fig3-G (concrete) and fig3-H (abstract) demonstrates
that a rectangular, color-refining abstraction need not preserve
alternating probabilistic trace behavior.  `check_psi` verifies that some
concrete player strategy cannot be matched by any abstract one: there is
a fixed x such that for every abstract player strategy y some abstract
environment reply z leaves a color whose mass differs for every concrete
environment t.  `check_psi_prime` sharpens this to almost-sure
reachability: some target set of colors is reached almost surely on one
side only.  Both return a machine-checkable certificate; the universal
quantifier over t is discharged symbolically (multiaffine identities
checked on all 0/1 vertices, affine one-variable differences pinned by
two evaluations), while the grid over y instantiates the case split at
concrete rational points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import RefinementError, SchemaError
from .jsonio import (dump_json, expect_dict, expect_format, expect_list,
                     frac_from_str, frac_to_str, get_field, load_json_file,
                     write_json_file)

TREE_FORMAT = "rig-tree/1"
CERTIFICATE_FORMAT = "rig-certificate/1"

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# Affine expressions and multiaffine polynomials over the rationals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineExpr:
    """const + sum of coeff * var with rational coefficients."""

    const: Fraction = ZERO
    coeffs: tuple = ()  # sorted tuple of (var, Fraction)

    @classmethod
    def constant(cls, c) -> "AffineExpr":
        return cls(Fraction(c), ())

    @classmethod
    def variable(cls, name) -> "AffineExpr":
        return cls(ZERO, ((name, ONE),))

    @classmethod
    def one_minus(cls, name) -> "AffineExpr":
        return cls(ONE, ((name, -ONE),))

    def evaluate(self, assignment) -> Fraction:
        total = self.const
        for var, coeff in self.coeffs:
            if var not in assignment:
                raise RefinementError(f"unassigned parameter {var!r}")
            total += coeff * Fraction(assignment[var])
        return total

    @property
    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.coeffs)

    def __str__(self) -> str:
        return format_affine(self)


def format_affine(expr: AffineExpr) -> str:
    parts = []
    if expr.const or not expr.coeffs:
        parts.append(frac_to_str(expr.const))
    for var, coeff in expr.coeffs:
        if not parts:
            lead = "" if coeff == 1 else ("-" if coeff == -1
                                          else frac_to_str(coeff) + " ")
            parts.append(f"{lead}{var}")
            continue
        sign = "-" if coeff < 0 else "+"
        mag = abs(coeff)
        stem = var if mag == 1 else f"{frac_to_str(mag)} {var}"
        parts.append(f"{sign} {stem}")
    return " ".join(parts)


def parse_affine(text, path="") -> AffineExpr:
    """Parse "1/2", "t1", "1 - t1", "1/2 - 1/2 t1" and the like."""

    tokens = str(text).replace("+", " + ").replace("-", " - ").split()
    const = ZERO
    coeffs: dict = {}
    sign = ONE
    pending: Fraction | None = None

    def flush_pending():
        nonlocal const, pending
        if pending is not None:
            const += pending
            pending = None

    for tok in tokens:
        if tok == "+":
            flush_pending()
            sign = ONE
        elif tok == "-":
            flush_pending()
            sign = -ONE
        else:
            try:
                value = Fraction(tok)
            except ValueError:
                value = None
            if value is not None:
                flush_pending()
                pending = sign * value
                sign = ONE
            else:
                if not tok[0].isalpha():
                    raise SchemaError(f"bad affine term {tok!r}", path)
                coeff = sign if pending is None else pending
                pending = None
                coeffs[tok] = coeffs.get(tok, ZERO) + coeff
                sign = ONE
    flush_pending()
    coeffs = {v: c for v, c in coeffs.items() if c}
    return AffineExpr(const, tuple(sorted(coeffs.items())))


class MultiAffine:
    """Sparse polynomial with degree at most one in every variable.

    Terms map a frozenset of variables to a rational coefficient.  The
    products built here come from root-to-leaf paths of a validated tree,
    where no parameter labels two edges of one path, so multiplication
    never has to square a variable (it raises if asked to).
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def const(cls, c) -> "MultiAffine":
        return cls({frozenset(): Fraction(c)})

    @classmethod
    def from_affine(cls, expr: AffineExpr) -> "MultiAffine":
        terms = {frozenset(): expr.const}
        for var, coeff in expr.coeffs:
            terms[frozenset([var])] = coeff
        return cls(terms)

    def __add__(self, other: "MultiAffine") -> "MultiAffine":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, ZERO) + c
        return MultiAffine(terms)

    def __sub__(self, other: "MultiAffine") -> "MultiAffine":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, ZERO) - c
        return MultiAffine(terms)

    def __mul__(self, other: "MultiAffine") -> "MultiAffine":
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                if m1 & m2:
                    raise RefinementError(
                        f"product not multiaffine: {sorted(m1 & m2)} repeated")
                m = m1 | m2
                terms[m] = terms.get(m, ZERO) + c1 * c2
        return MultiAffine(terms)

    def substitute(self, assignment) -> "MultiAffine":
        terms: dict = {}
        for m, c in self.terms.items():
            coeff = c
            rest = []
            for var in m:
                if var in assignment:
                    coeff *= Fraction(assignment[var])
                else:
                    rest.append(var)
            key = frozenset(rest)
            terms[key] = terms.get(key, ZERO) + coeff
        return MultiAffine(terms)

    def evaluate(self, assignment) -> Fraction:
        out = self.substitute(assignment)
        if out.variables():
            raise RefinementError(
                f"unassigned parameters {sorted(out.variables())}")
        return out.terms.get(frozenset(), ZERO)

    def variables(self) -> frozenset:
        out: set = set()
        for m in self.terms:
            out |= m
        return frozenset(out)

    def is_zero(self) -> bool:
        return not self.terms

    def constant_value(self) -> Fraction | None:
        if self.variables():
            return None
        return self.terms.get(frozenset(), ZERO)


# ---------------------------------------------------------------------------
# Parametric tree games
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    kind: str                      # "player" | "env" | "leaf"
    edges: tuple = ()              # tuple of (AffineExpr, child name)
    color: int | None = None       # leaves only
    group: str | None = None       # player nodes: indistinguishability class
    label: str | None = None       # optional display label (abstract state)


@dataclass(frozen=True)
class ParamTreeGame:
    name: str
    initial: str
    nodes: dict
    player_params: tuple
    env_params: tuple

    def __post_init__(self):
        validate_tree(self)

    def node(self, name) -> TreeNode:
        return self.nodes[name]


def validate_tree(g: ParamTreeGame):
    player = set(g.player_params)
    env = set(g.env_params)
    if player & env:
        raise RefinementError(f"parameters on both sides: {player & env}")
    if g.initial not in g.nodes:
        raise RefinementError(f"unknown initial node {g.initial!r}")
    seen = {g.initial}
    group_shapes: dict = {}
    stack = [(g.initial, frozenset())]
    while stack:
        name, path_vars = stack.pop()
        node = g.nodes[name]
        if node.kind == "leaf":
            if node.edges:
                raise RefinementError(f"leaf {name!r} has edges")
            if not isinstance(node.color, int) or not 1 <= node.color <= 6:
                raise RefinementError(f"leaf {name!r} needs a color in 1..6")
            continue
        if node.kind not in ("player", "env"):
            raise RefinementError(f"node {name!r}: unknown kind {node.kind!r}")
        if not node.edges:
            raise RefinementError(f"node {name!r} has no edges")
        allowed = player if node.kind == "player" else env
        total = AffineExpr()
        used: set = set()
        for expr, child in node.edges:
            bad = expr.variables - allowed
            if bad:
                raise RefinementError(
                    f"node {name!r}: foreign parameters {sorted(bad)}")
            used |= expr.variables
            total = AffineExpr(
                total.const + expr.const,
                _merge_coeffs(total.coeffs, expr.coeffs))
            if child not in g.nodes:
                raise RefinementError(f"node {name!r}: unknown child {child!r}")
            if child in seen:
                raise RefinementError(
                    f"node {child!r} has two parents; positions form a tree")
            seen.add(child)
            overlap = path_vars & expr.variables
            if overlap:
                raise RefinementError(
                    f"parameter {sorted(overlap)} repeats along a path "
                    f"through {name!r}")
            stack.append((child, path_vars | expr.variables))
        if total.const != 1 or total.coeffs:
            raise RefinementError(
                f"node {name!r}: edge probabilities sum to "
                f"{format_affine(total)}, not 1")
        if node.kind == "player":
            shape = tuple(format_affine(e) for e, _ in node.edges)
            if node.group is not None:
                prev = group_shapes.setdefault(node.group, (name, shape))
                if prev[1] != shape:
                    raise RefinementError(
                        f"class {node.group!r}: {name!r} plays "
                        f"({', '.join(shape)}) but {prev[0]!r} plays "
                        f"({', '.join(prev[1])})")
    unreachable = set(g.nodes) - seen
    if unreachable:
        raise RefinementError(f"unreachable nodes {sorted(unreachable)}")


def _merge_coeffs(a, b):
    out = dict(a)
    for var, coeff in b:
        out[var] = out.get(var, ZERO) + coeff
    return tuple(sorted((v, c) for v, c in out.items() if c))


def all_params(g: ParamTreeGame) -> tuple:
    return tuple(g.player_params) + tuple(g.env_params)


def leaf_distribution(g: ParamTreeGame, assignment) -> dict:
    """Exact color distribution for a full parameter assignment in [0,1]."""

    assignment = {k: Fraction(v) for k, v in assignment.items()}
    for param in all_params(g):
        if param not in assignment:
            raise RefinementError(f"missing parameter {param!r}")
        if not 0 <= assignment[param] <= 1:
            raise RefinementError(
                f"parameter {param!r} = {assignment[param]} outside [0,1]")
    masses = {c: ZERO for c in range(1, 7)}
    stack = [(g.initial, ONE)]
    while stack:
        name, prob = stack.pop()
        node = g.nodes[name]
        if node.kind == "leaf":
            masses[node.color] += prob
            continue
        for expr, child in node.edges:
            p = expr.evaluate(assignment)
            if p < 0 or p > 1:
                raise RefinementError(
                    f"edge {name!r} -> {child!r} has probability {p}")
            if p:
                stack.append((child, prob * p))
    return masses


def symbolic_masses(g: ParamTreeGame, fixed=None) -> dict:
    """Color masses as multiaffine polynomials in the unfixed parameters."""

    fixed = {k: Fraction(v) for k, v in (fixed or {}).items()}
    masses = {c: MultiAffine() for c in range(1, 7)}
    stack = [(g.initial, MultiAffine.const(1))]
    while stack:
        name, poly = stack.pop()
        node = g.nodes[name]
        if node.kind == "leaf":
            masses[node.color] = masses[node.color] + poly
            continue
        for expr, child in node.edges:
            edge = MultiAffine.from_affine(expr).substitute(fixed)
            stack.append((child, poly * edge))
    return masses


# ---------------------------------------------------------------------------
# Serialization (rig-tree/1)
# ---------------------------------------------------------------------------

def tree_to_json(g: ParamTreeGame) -> dict:
    nodes = {}
    for name, node in sorted(g.nodes.items()):
        if node.kind == "leaf":
            entry = {"kind": "leaf", "color": node.color}
        else:
            entry = {"kind": node.kind,
                     "edges": [{"prob": format_affine(e), "to": child}
                               for e, child in node.edges]}
            if node.group is not None:
                entry["class"] = node.group
        if node.label is not None:
            entry["label"] = node.label
        nodes[name] = entry
    return {
        "format": TREE_FORMAT,
        "name": g.name,
        "initial": g.initial,
        "player_params": list(g.player_params),
        "env_params": list(g.env_params),
        "nodes": nodes,
    }


def tree_from_json(data) -> ParamTreeGame:
    expect_format(data, TREE_FORMAT)
    name = get_field(data, "name")
    initial = get_field(data, "initial")
    player = tuple(expect_list(get_field(data, "player_params"),
                               "player_params"))
    env = tuple(expect_list(get_field(data, "env_params"), "env_params"))
    nodes = {}
    raw_nodes = expect_dict(get_field(data, "nodes"), "nodes")
    for node_name, raw in raw_nodes.items():
        path = f"nodes.{node_name}"
        raw = expect_dict(raw, path)
        kind = get_field(raw, "kind", path + ".")
        label = raw.get("label")
        if kind == "leaf":
            nodes[node_name] = TreeNode("leaf", (), raw.get("color"),
                                        None, label)
            continue
        edges = []
        for i, edge in enumerate(expect_list(get_field(raw, "edges",
                                                       path + "."),
                                             path + ".edges")):
            edge = expect_dict(edge, f"{path}.edges[{i}]")
            expr = parse_affine(get_field(edge, "prob", f"{path}.edges[{i}]."),
                                f"{path}.edges[{i}].prob")
            edges.append((expr, get_field(edge, "to", f"{path}.edges[{i}].")))
        nodes[node_name] = TreeNode(kind, tuple(edges), None,
                                    raw.get("class"), label)
    try:
        return ParamTreeGame(name, initial, nodes, player, env)
    except RefinementError as exc:
        raise SchemaError(str(exc), "nodes") from exc


def load_tree(path) -> ParamTreeGame:
    return tree_from_json(load_json_file(path))


def save_tree(path, g: ParamTreeGame):
    write_json_file(path, tree_to_json(g))


# ---------------------------------------------------------------------------
# The bundled counterexample pair
# ---------------------------------------------------------------------------

def fig3_tree_G() -> ParamTreeGame:
    """Concrete side: player parameters x1, x2, x3; environment t1, t2, t3.

    The bottom information classes are crossed: x2 rules the pair with
    leaf colors 3/4 on the left but 5/6 on the right, x3 the other two.
    """

    v, w = AffineExpr.variable, AffineExpr.one_minus
    nodes = {
        "q0": TreeNode("env", ((v("t1"), "q1"), (w("t1"), "q1x"))),
        "q1": TreeNode("player", ((v("x1"), "l1"), (w("x1"), "q2")),
                       group="x1"),
        "q1x": TreeNode("player", ((v("x1"), "l2"), (w("x1"), "q2x")),
                        group="x1"),
        "q2": TreeNode("env", ((v("t2"), "q3"), (w("t2"), "q4"))),
        "q2x": TreeNode("env", ((v("t3"), "q3x"), (w("t3"), "q4x"))),
        "q3": TreeNode("player", ((v("x2"), "l3a"), (w("x2"), "l4a")),
                       group="x2"),
        "q4": TreeNode("player", ((v("x3"), "l5a"), (w("x3"), "l6a")),
                       group="x3"),
        "q3x": TreeNode("player", ((v("x3"), "l3b"), (w("x3"), "l4b")),
                        group="x3"),
        "q4x": TreeNode("player", ((v("x2"), "l5b"), (w("x2"), "l6b")),
                        group="x2"),
        "l1": TreeNode("leaf", color=1), "l2": TreeNode("leaf", color=2),
        "l3a": TreeNode("leaf", color=3), "l4a": TreeNode("leaf", color=4),
        "l5a": TreeNode("leaf", color=5), "l6a": TreeNode("leaf", color=6),
        "l3b": TreeNode("leaf", color=3), "l4b": TreeNode("leaf", color=4),
        "l5b": TreeNode("leaf", color=5), "l6b": TreeNode("leaf", color=6),
    }
    return ParamTreeGame("fig3-G", "q0", nodes,
                         ("x1", "x2", "x3"), ("t1", "t2", "t3"))


def fig3_tree_H() -> ParamTreeGame:
    """Abstract side: player parameters y1, y2; environment z1, z2, z3.

    Same shape as the concrete tree, but all four bottom player positions
    are one class (y2) and both environment midpoints feed the same two
    abstract states, so the node labeled p3 (and p4) occurs twice.
    """

    v, w = AffineExpr.variable, AffineExpr.one_minus
    nodes = {
        "p0": TreeNode("env", ((v("z1"), "p1"), (w("z1"), "p1x"))),
        "p1": TreeNode("player", ((v("y1"), "m1"), (w("y1"), "p2")),
                       group="y1"),
        "p1x": TreeNode("player", ((v("y1"), "m2"), (w("y1"), "p2x")),
                        group="y1"),
        "p2": TreeNode("env", ((v("z2"), "p3a"), (w("z2"), "p4a"))),
        "p2x": TreeNode("env", ((v("z3"), "p3b"), (w("z3"), "p4b"))),
        "p3a": TreeNode("player", ((v("y2"), "m3a"), (w("y2"), "m4a")),
                        group="y2", label="p3"),
        "p4a": TreeNode("player", ((v("y2"), "m5a"), (w("y2"), "m6a")),
                        group="y2", label="p4"),
        "p3b": TreeNode("player", ((v("y2"), "m3b"), (w("y2"), "m4b")),
                        group="y2", label="p3"),
        "p4b": TreeNode("player", ((v("y2"), "m5b"), (w("y2"), "m6b")),
                        group="y2", label="p4"),
        "m1": TreeNode("leaf", color=1, label="h1"),
        "m2": TreeNode("leaf", color=2, label="h2"),
        "m3a": TreeNode("leaf", color=3, label="h3"),
        "m4a": TreeNode("leaf", color=4, label="h4"),
        "m5a": TreeNode("leaf", color=5, label="h5"),
        "m6a": TreeNode("leaf", color=6, label="h6"),
        "m3b": TreeNode("leaf", color=3, label="h3"),
        "m4b": TreeNode("leaf", color=4, label="h4"),
        "m5b": TreeNode("leaf", color=5, label="h5"),
        "m6b": TreeNode("leaf", color=6, label="h6"),
    }
    return ParamTreeGame("fig3-H", "p0", nodes,
                         ("y1", "y2"), ("z1", "z2", "z3"))


def check_h_is_abstract_g() -> bool:
    """Structurally tie the two trees to the game-level morphism.

    Walks both trees edge-index by edge-index; each concrete tree
    position determines a move word in the game-level encoding (first or
    second environment branch, a or b for the player), and the morphism
    image of that word must equal the label of the abstract tree node at
    the same position.
    """

    from .instances import fig3_game, fig3_morphism

    tree_g = fig3_tree_G()
    tree_h = fig3_tree_H()
    game = fig3_game()
    morphism = fig3_morphism()
    env_reps = ("a1", "a2")
    player_reps = ("a1", "b1")

    stack = [(tree_g.initial, tree_h.initial, ())]
    while stack:
        gn, hn, word = stack.pop()
        node_g = tree_g.node(gn)
        node_h = tree_h.node(hn)
        if node_g.kind != node_h.kind:
            return False
        image = morphism.initial
        for move in word:
            image = morphism.delta_p[image][move]
        if (node_h.label or hn) != image:
            return False
        if node_g.kind == "leaf":
            if node_g.color != node_h.color:
                return False
            if game.moore.output[_run_moore(game, word)] != node_g.color:
                return False
            continue
        if len(node_g.edges) != len(node_h.edges):
            return False
        reps = env_reps if node_g.kind == "env" else player_reps
        for i, ((_, child_g), (_, child_h)) in enumerate(
                zip(node_g.edges, node_h.edges)):
            stack.append((child_g, child_h, word + (reps[i],)))
    return True


def _run_moore(game, word):
    q = game.moore.initial
    for move in word:
        q = game.moore.step(q, move)
    return q


# ---------------------------------------------------------------------------
# Certificates for the two counterexample formulas
# ---------------------------------------------------------------------------

WITNESS_X = {"x1": HALF, "x2": ONE, "x3": ZERO}

# Claims of the form: with `fixed` substituted, the summed mass of
# `colors` in `game` equals the affine expression `equals` in `vars`,
# identically.  Identities in several variables are multiaffine and are
# certified by their values on all 0/1 vertices; `equals` never uses more
# than the listed variables.
_IDENTITIES = {
    "concrete-mass-12": ("concrete", (1, 2), {}, "1/2", ("t1", "t2", "t3")),
    "concrete-mass-1": ("concrete", (1,), {}, "1/2 t1", ("t1", "t2", "t3")),
    "concrete-mass-2": ("concrete", (2,), {}, "1/2 - 1/2 t1",
                        ("t1", "t2", "t3")),
    "concrete-mass-3456": ("concrete", (3, 4, 5, 6), {}, "1/2",
                           ("t1", "t2", "t3")),
    "concrete-mass-4-t1=1": ("concrete", (4,), {"t1": ONE}, "0",
                             ("t2", "t3")),
    "concrete-mass-5-t1=1": ("concrete", (5,), {"t1": ONE}, "0",
                             ("t2", "t3")),
    "concrete-mass-45-t1=1": ("concrete", (4, 5), {"t1": ONE}, "0",
                              ("t2", "t3")),
    "abstract-mass-12": ("abstract", (1, 2), {}, "y1",
                         ("y1", "y2", "z1", "z2", "z3")),
    "abstract-mass-3456": ("abstract", (3, 4, 5, 6), {}, "1 - y1",
                           ("y1", "y2", "z1", "z2", "z3")),
}


def _vertices(names):
    out = [{}]
    for name in names:
        out = [dict(v, **{name: b}) for v in out for b in (ZERO, ONE)]
    return out


def _prove_identity(key):
    """Check one mass identity symbolically and emit its vertex table."""

    game_name, colors, extra_fixed, equals, variables = _IDENTITIES[key]
    tree = fig3_tree_G() if game_name == "concrete" else fig3_tree_H()
    fixed = dict(WITNESS_X) if game_name == "concrete" else {}
    fixed.update(extra_fixed)
    masses = symbolic_masses(tree, fixed)
    poly = MultiAffine()
    for c in colors:
        poly = poly + masses[c]
    target = MultiAffine.from_affine(parse_affine(equals))
    ok = (poly - target).is_zero()
    table = []
    for vertex in _vertices(variables):
        got = poly.evaluate(vertex)
        table.append({
            "point": {k: frac_to_str(v) for k, v in sorted(vertex.items())},
            "mass": frac_to_str(got),
        })
    entry = {
        "id": key,
        "game": game_name,
        "colors": list(colors),
        "fixed": {k: frac_to_str(v)
                  for k, v in sorted({**({} if game_name == "abstract"
                                         else WITNESS_X),
                                      **extra_fixed}.items())},
        "equals": equals,
        "vars": list(variables),
        "vertex_table": table,
        "holds": ok,
    }
    return ok, entry


def _grid_values(grid_n):
    vals = {Fraction(i, grid_n) for i in range(grid_n + 1)}
    vals |= {ZERO, ONE, HALF}
    return sorted(vals)


def _z_for(y2):
    return {"z1": ONE, "z2": ONE - y2, "z3": ZERO}


def _z2_pure(y2):
    if y2 == 0:
        return "1"
    if y2 == 1:
        return "0"
    return None


def _abstract_masses_at(y1, y2):
    assign = {"y1": y1, "y2": y2, **_z_for(y2)}
    return leaf_distribution(fig3_tree_H(), assign), assign


def check_psi(grid_n):
    """Certify that color distributions separate the two trees.

    With x fixed to (1/2, 1, 0): if y1 differs from 1/2 the mass on
    colors {1,2} already separates (1/2 against y1, whatever z and t
    are); otherwise the reply z = (1, 1-y2, 0) makes the mass of color 1
    differ unless t1 = 1, and at t1 = 1 color 4 (if y2 differs from 1)
    or color 5 (if y2 = 1) has positive abstract mass against concrete
    zero.  Returns (verdict, certificate).
    """

    if not isinstance(grid_n, int) or grid_n < 2:
        raise RefinementError("grid_n must be an integer >= 2")
    ok = True
    identities = []
    for key in ("concrete-mass-12", "abstract-mass-12", "concrete-mass-1",
                "concrete-mass-4-t1=1", "concrete-mass-5-t1=1"):
        holds, entry = _prove_identity(key)
        ok = ok and holds
        identities.append(entry)

    cases = []
    values = _grid_values(grid_n)
    for y1 in values:
        for y2 in values:
            case = {"y1": frac_to_str(y1), "y2": frac_to_str(y2)}
            if y1 != HALF:
                case["branch"] = "mass-split"
                case["colors"] = [1, 2]
                case["concrete"] = "1/2"
                case["abstract"] = frac_to_str(y1)
                case["quantifiers"] = "all z, all t"
                ok = ok and y1 != HALF
            else:
                masses, _ = _abstract_masses_at(y1, y2)
                phi = 4 if y2 != 1 else 5
                abstract_mass = masses[phi]
                sub_a = {
                    "when": "t1 != 1",
                    "phi": 1,
                    "concrete_poly": "1/2 t1",
                    "abstract": frac_to_str(masses[1]),
                    "difference_at": {"0": frac_to_str(HALF - ZERO),
                                      "1": frac_to_str(HALF - HALF)},
                    "note": "affine in t1 with slope -1/2; vanishes "
                            "only at t1 = 1",
                }
                sub_b = {
                    "when": "t1 = 1",
                    "phi": phi,
                    "concrete": "0",
                    "abstract": frac_to_str(abstract_mass),
                }
                case["branch"] = "z-witness"
                case["z"] = {k: frac_to_str(v)
                             for k, v in sorted(_z_for(y2).items())}
                case["z2_pure"] = _z2_pure(y2)
                case["subcases"] = [sub_a, sub_b]
                ok = ok and masses[1] == HALF and abstract_mass != 0
            cases.append(case)

    certificate = {
        "format": CERTIFICATE_FORMAT,
        "check": "psi",
        "grid_n": grid_n,
        "witness_x": {k: frac_to_str(v) for k, v in sorted(WITNESS_X.items())},
        "z_rule": {"z1": "1", "z2": "1 - y2", "z3": "0"},
        "notes": [
            "z3 is unconstrained in every case; it is fixed to 0 throughout "
            "and all claims hold for any value in [0,1]",
            "z2_pure records the pure abstract environment reply where the "
            "stated rule determines it (y2 = 0 gives z2 = 1, y2 = 1 gives "
            "z2 = 0); it is null otherwise",
            "case coverage: the two subcases at y1 = 1/2 rest on the "
            "tautology that y2 = 1 and y2 = 0 cannot both hold",
        ],
        "identities": identities,
        "cases": cases,
        "verdict": ok,
    }
    return ok, certificate


def check_psi_prime(grid_n):
    """Certify that almost-sure reachability separates the two trees.

    Same x and z as check_psi.  At y1 = 0 the colors {3,4,5,6} are hit
    almost surely on the abstract side but with probability 1/2 on the
    concrete side; at y1 = 1 the set {1,2} plays that role with the
    sides swapped; in between, {1,3,4,5,6} separates when t1 != 1 (color
    2 keeps positive concrete mass) and {1,2,3,6} separates when t1 = 1
    (colors 4 and 5 have positive abstract mass but concrete zero).
    """

    if not isinstance(grid_n, int) or grid_n < 2:
        raise RefinementError("grid_n must be an integer >= 2")
    ok = True
    identities = []
    for key in ("concrete-mass-12", "concrete-mass-3456", "abstract-mass-12",
                "abstract-mass-3456", "concrete-mass-2",
                "concrete-mass-45-t1=1"):
        holds, entry = _prove_identity(key)
        ok = ok and holds
        identities.append(entry)

    cases = []
    values = _grid_values(grid_n)
    for y1 in values:
        for y2 in values:
            case = {"y1": frac_to_str(y1), "y2": frac_to_str(y2)}
            if y1 == 0:
                case["branch"] = "i"
                case["T"] = [3, 4, 5, 6]
                case["concrete_prob"] = "1/2"
                case["abstract_prob"] = "1"
                case["quantifiers"] = "all z, all t"
            elif y1 == 1:
                case["branch"] = "ii"
                case["T"] = [1, 2]
                case["concrete_prob"] = "1/2"
                case["abstract_prob"] = "1"
                case["quantifiers"] = "all z, all t"
            else:
                masses, _ = _abstract_masses_at(y1, y2)
                mass45 = masses[4] + masses[5]
                sub_a = {
                    "when": "t1 != 1",
                    "T": [1, 3, 4, 5, 6],
                    "concrete_miss_poly": "1/2 - 1/2 t1",
                    "miss_at": {"0": "1/2", "1": "0"},
                    "abstract_prob": frac_to_str(ONE - masses[2]),
                    "note": "concrete mass of color 2 is affine in t1 with "
                            "slope -1/2, positive for all t1 < 1",
                }
                sub_b = {
                    "when": "t1 = 1",
                    "T": [1, 2, 3, 6],
                    "concrete_prob": "1",
                    "abstract_miss": frac_to_str(mass45),
                }
                case["branch"] = "iii"
                case["z"] = {k: frac_to_str(v)
                             for k, v in sorted(_z_for(y2).items())}
                case["z2_pure"] = _z2_pure(y2)
                case["subcases"] = [sub_a, sub_b]
                ok = ok and masses[2] == 0 and mass45 > 0
            cases.append(case)

    certificate = {
        "format": CERTIFICATE_FORMAT,
        "check": "psi-prime",
        "grid_n": grid_n,
        "witness_x": {k: frac_to_str(v) for k, v in sorted(WITNESS_X.items())},
        "z_rule": {"z1": "1", "z2": "1 - y2", "z3": "0"},
        "notes": [
            "reach probabilities are finite sums of leaf masses, so "
            "almost-sure tests are exact rational comparisons with 1",
            "z3 is unconstrained in every case; it is fixed to 0 throughout",
            "z2_pure records the pure abstract environment reply where the "
            "stated rule determines it; it is null otherwise",
        ],
        "identities": identities,
        "cases": cases,
        "verdict": ok,
    }
    return ok, certificate


# ---------------------------------------------------------------------------
# Certificate replay
# ---------------------------------------------------------------------------

def _replay_identity(entry):
    """Re-verify one identity row by direct evaluation, no polynomials."""

    game_name = entry["game"]
    tree = fig3_tree_G() if game_name == "concrete" else fig3_tree_H()
    colors = entry["colors"]
    fixed = {k: frac_from_str(v) for k, v in entry["fixed"].items()}
    equals = parse_affine(entry["equals"])
    variables = list(entry["vars"])
    if not entry.get("holds"):
        raise RefinementError(f"identity {entry['id']} marked failed")
    expected_points = {
        tuple(sorted((k, frac_to_str(v)) for k, v in vertex.items()))
        for vertex in _vertices(variables)}
    seen_points = set()
    for row in entry["vertex_table"]:
        point = {k: frac_from_str(v) for k, v in row["point"].items()}
        seen_points.add(tuple(sorted((k, frac_to_str(v))
                                     for k, v in point.items())))
        assignment = dict(fixed)
        assignment.update(point)
        for param in all_params(tree):
            assignment.setdefault(param, ZERO)
        masses = leaf_distribution(tree, assignment)
        got = sum((masses[c] for c in colors), ZERO)
        if got != frac_from_str(row["mass"]):
            raise RefinementError(
                f"identity {entry['id']}: recomputed mass {got} at "
                f"{row['point']} disagrees with certificate {row['mass']}")
        if got != equals.evaluate(point):
            raise RefinementError(
                f"identity {entry['id']}: mass {got} at {row['point']} "
                f"is not {entry['equals']}")
    if seen_points != expected_points:
        raise RefinementError(
            f"identity {entry['id']}: vertex table does not cover all "
            f"0/1 points of {variables}")


def _case_y(case):
    return frac_from_str(case["y1"]), frac_from_str(case["y2"])


def _replay_z(case, y2):
    z = {k: frac_from_str(v) for k, v in case["z"].items()}
    if z != _z_for(y2):
        raise RefinementError(f"case y2={y2}: z {case['z']} violates the rule")
    pure = _z2_pure(y2)
    if case.get("z2_pure") != pure:
        raise RefinementError(f"case y2={y2}: z2_pure should be {pure}")
    return z


def _replay_psi_case(case, identity_ids):
    y1, y2 = _case_y(case)
    if case["branch"] == "mass-split":
        if y1 == HALF:
            raise RefinementError(f"mass-split branch used at y1=1/2")
        if {"concrete-mass-12", "abstract-mass-12"} - identity_ids:
            raise RefinementError("mass-split lacks supporting identities")
        if frac_from_str(case["concrete"]) != HALF:
            raise RefinementError("mass-split concrete value is not 1/2")
        if frac_from_str(case["abstract"]) != y1:
            raise RefinementError("mass-split abstract value is not y1")
        return
    if case["branch"] != "z-witness":
        raise RefinementError(f"unknown branch {case['branch']!r}")
    if y1 != HALF:
        raise RefinementError("z-witness branch used off y1=1/2")
    _replay_z(case, y2)
    masses, _ = _abstract_masses_at(y1, y2)
    sub_a, sub_b = case["subcases"]
    if sub_a["phi"] != 1 or "concrete-mass-1" not in identity_ids:
        raise RefinementError("first subcase must rest on color 1")
    if frac_from_str(sub_a["abstract"]) != masses[1] or masses[1] != HALF:
        raise RefinementError("abstract mass of color 1 is not 1/2")
    d0 = frac_from_str(sub_a["difference_at"]["0"])
    d1 = frac_from_str(sub_a["difference_at"]["1"])
    poly = parse_affine(sub_a["concrete_poly"])
    if d0 != HALF - poly.evaluate({"t1": ZERO}):
        raise RefinementError("difference at t1=0 wrong")
    if d1 != HALF - poly.evaluate({"t1": ONE}):
        raise RefinementError("difference at t1=1 wrong")
    if d0 == d1:
        raise RefinementError("difference not affine with nonzero slope")
    if d1 != 0 or d0 == 0:
        raise RefinementError("difference must vanish exactly at t1=1")
    phi = sub_b["phi"]
    expected_phi = 4 if y2 != 1 else 5
    needed = f"concrete-mass-{phi}-t1=1"
    if phi != expected_phi or needed not in identity_ids:
        raise RefinementError(f"second subcase color {phi} unsupported")
    if frac_from_str(sub_b["concrete"]) != 0:
        raise RefinementError("concrete mass at t1=1 should be 0")
    if frac_from_str(sub_b["abstract"]) != masses[phi] or masses[phi] == 0:
        raise RefinementError(f"abstract mass of color {phi} not positive")


def _replay_psi_prime_case(case, identity_ids):
    y1, y2 = _case_y(case)
    if case["branch"] in ("i", "ii"):
        boundary = ZERO if case["branch"] == "i" else ONE
        target = [3, 4, 5, 6] if case["branch"] == "i" else [1, 2]
        if y1 != boundary or case["T"] != target:
            raise RefinementError(f"branch {case['branch']} misapplied")
        needed = {"concrete-mass-12", "concrete-mass-3456",
                  "abstract-mass-12", "abstract-mass-3456"}
        if needed - identity_ids:
            raise RefinementError("boundary branch lacks identities")
        if frac_from_str(case["concrete_prob"]) != HALF:
            raise RefinementError("concrete reach probability is not 1/2")
        if frac_from_str(case["abstract_prob"]) != ONE:
            raise RefinementError("abstract reach probability is not 1")
        return
    if case["branch"] != "iii":
        raise RefinementError(f"unknown branch {case['branch']!r}")
    if not 0 < y1 < 1:
        raise RefinementError("branch iii used outside 0 < y1 < 1")
    _replay_z(case, y2)
    masses, _ = _abstract_masses_at(y1, y2)
    sub_a, sub_b = case["subcases"]
    if sub_a["T"] != [1, 3, 4, 5, 6] or "concrete-mass-2" not in identity_ids:
        raise RefinementError("subcase t1 != 1 must drop color 2")
    poly = parse_affine(sub_a["concrete_miss_poly"])
    for point, claimed in sub_a["miss_at"].items():
        if poly.evaluate({"t1": frac_from_str(point)}) != \
                frac_from_str(claimed):
            raise RefinementError(f"miss value at t1={point} wrong")
    m0 = frac_from_str(sub_a["miss_at"]["0"])
    m1 = frac_from_str(sub_a["miss_at"]["1"])
    if m0 <= 0 or m1 != 0 or m0 == m1:
        raise RefinementError("concrete miss must be positive iff t1 < 1")
    if frac_from_str(sub_a["abstract_prob"]) != ONE - masses[2] or masses[2]:
        raise RefinementError("abstract side must reach T surely")
    if sub_b["T"] != [1, 2, 3, 6] or \
            "concrete-mass-45-t1=1" not in identity_ids:
        raise RefinementError("subcase t1 = 1 must drop colors 4 and 5")
    if frac_from_str(sub_b["concrete_prob"]) != ONE:
        raise RefinementError("concrete reach probability should be 1")
    mass45 = masses[4] + masses[5]
    if frac_from_str(sub_b["abstract_miss"]) != mass45 or mass45 <= 0:
        raise RefinementError("abstract miss of {4,5} must be positive")


def replay_certificate(cert) -> bool:
    """Re-verify a certificate from scratch; raises on any contradiction.

    Replay does not trust the recorded verdict: identities are re-checked
    by direct tree evaluation at every recorded vertex (and the vertex
    tables must cover all 0/1 points), and every grid case is re-derived
    from the y values it names.
    """

    expect_format(cert, CERTIFICATE_FORMAT)
    kind = cert.get("check")
    if kind not in ("psi", "psi-prime"):
        raise RefinementError(f"unknown check {kind!r}")
    if not cert.get("verdict"):
        raise RefinementError("certificate records a failed verdict")
    witness = {k: frac_from_str(v) for k, v in cert["witness_x"].items()}
    if witness != WITNESS_X:
        raise RefinementError(f"unexpected witness x {cert['witness_x']}")
    for entry in cert["identities"]:
        if {k: frac_from_str(v) for k, v in entry["fixed"].items()
                if k.startswith("x")} != WITNESS_X \
                and entry["game"] == "concrete":
            raise RefinementError(
                f"identity {entry['id']} does not fix the witness x")
        _replay_identity(entry)
    identity_ids = {entry["id"] for entry in cert["identities"]}

    values = _grid_values(cert["grid_n"])
    expected = [(frac_to_str(a), frac_to_str(b))
                for a in values for b in values]
    got = [(case["y1"], case["y2"]) for case in cert["cases"]]
    if got != expected:
        raise RefinementError("cases are not the full grid in grid order")
    for case in cert["cases"]:
        if kind == "psi":
            _replay_psi_case(case, identity_ids)
        else:
            _replay_psi_prime_case(case, identity_ids)
    return True


def save_certificate(path, cert, manifest=None):
    data = dict(cert)
    if manifest is not None:
        data["manifest"] = manifest.to_json()
    write_json_file(path, data)


def load_certificate(path) -> dict:
    data = load_json_file(path)
    expect_format(data, CERTIFICATE_FORMAT)
    return data


def certificate_to_text(cert) -> str:
    """One-paragraph human summary used by the CLI."""

    n_cases = len(cert.get("cases", ()))
    kind = cert.get("check")
    verdict = "holds" if cert.get("verdict") else "FAILED"
    return (f"{kind}: {verdict} over {n_cases} grid cases "
            f"(grid_n={cert.get('grid_n')}), "
            f"{len(cert.get('identities', ()))} symbolic identities\n")
