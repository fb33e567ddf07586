"""Ground expansion of quantified rule families and indexed symbols."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

from ..core import (
    COMPASS,
    HERE,
    Displacement,
    GeometryError,
    In,
    MembraneSpec,
    MembraneTree,
    Message,
    Multiset,
    Out,
    PairRule,
    Position,
    SingleRule,
    region_of,
    validate_tree,
)
from .ast import (
    BinOp,
    Compass,
    Disp,
    Here,
    InT,
    ModelAst,
    Name,
    Num,
    OutT,
    PairRuleNode,
    RuleStmt,
    SymDecl,
)
from .errors import DslError, DuplicateDeclaration, EmptyRange, UnboundParameter, UndeclaredSymbol

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def evaluate(e, env: Mapping[str, int]) -> int:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        if e.id not in env:
            raise UnboundParameter(f"unbound name {e.id!r}")
        return env[e.id]
    if isinstance(e, BinOp):
        a, b = evaluate(e.left, env), evaluate(e.right, env)
        return a + b if e.op == "+" else a - b
    raise TypeError(e)


def ground_name(base: str, index: int) -> str:
    return f"{base}_{index}"


@dataclass(frozen=True)
class GroundPlacement:
    label: int
    position: Position  # relative to the membrane's bottom-left corner
    contents: Multiset


@dataclass(eq=False)
class GroundModel:
    ordinary: tuple[str, ...]
    me: tuple[str, ...]
    params: dict[str, int]
    membranes: tuple[MembraneSpec, ...]
    placements: tuple[GroundPlacement, ...] = ()
    families: dict[str, tuple[int, int]] = field(default_factory=dict)

    @cached_property
    def tree(self) -> MembraneTree:
        return validate_tree(self.membranes)

    def system(self):
        return self._system

    @cached_property
    def _system(self):
        from ..engine.system import System

        return System(self.tree, self.ordinary, self.me)

    def rule_count(self) -> int:
        return sum(len(m.rules) for m in self.membranes)

    def rules_of(self, label: int) -> tuple:
        return next(m.rules for m in self.membranes if m.label == label)

    def global_cells(self) -> dict[Position, Multiset]:
        tree = self.tree
        cells: dict[Position, Multiset] = {}
        for pl in self.placements:
            fp = tree.footprints[pl.label]
            p = Position(fp.x + pl.position.x, fp.y + pl.position.y)
            if p not in region_of(tree, pl.label):
                raise GeometryError(
                    f"placement {tuple(pl.position)} is not in the region of membrane {pl.label}"
                )
            cells[p] = cells.get(p, Multiset()) + pl.contents
        return cells

    def initial_configuration(self, extra: Optional[Mapping] = None):
        cells = self.global_cells()
        for p, ms in (extra or {}).items():
            p = Position(*p)
            cells[p] = cells.get(p, Multiset()) + Multiset(ms)
        return self.system().configuration(cells)

    def __eq__(self, other):
        if not isinstance(other, GroundModel):
            return NotImplemented
        return (self.ordinary, self.me, self.membranes, self.placements) == (
            other.ordinary, other.me, other.membranes, other.placements)


class _Alphabet:
    def __init__(self, ast: ModelAst, env: Mapping[str, int]):
        self.ordinary: list[str] = []
        self.me: list[str] = []
        self.families: dict[str, tuple[int, int]] = {}
        seen: set[str] = set()
        for decls, bucket in ((ast.objects, self.ordinary), (ast.me_objects, self.me)):
            for d in decls:
                for name in self._names(d, env):
                    if name in seen:
                        raise DuplicateDeclaration(f"symbol {name!r} declared twice")
                    seen.add(name)
                    bucket.append(name)
        self.names = seen

    def _names(self, d: SymDecl, env):
        if not d.indexed:
            return [d.base]
        lo, hi = evaluate(d.lo, env), evaluate(d.hi, env)
        self.families[d.base] = (lo, hi)
        return [ground_name(d.base, i) for i in range(lo, hi + 1)]

    def resolve(self, ref, env) -> str:
        if ref.index is None:
            return ref.base
        i = evaluate(ref.index, env)
        lo, hi = self.families[ref.base]
        if not lo <= i <= hi:
            raise UndeclaredSymbol(
                f"{ref.base}_{{{i}}} is outside the declared range {lo}..{hi}", *ref.loc
            )
        return ground_name(ref.base, i)


def _multiset(atoms, alpha: _Alphabet, env) -> Multiset:
    counts: dict[str, int] = {}
    for a in atoms:
        n = evaluate(a.count, env)
        if n < 0:
            raise DslError(f"negative multiplicity {n} for {a.sym.base}", *a.sym.loc)
        if n:
            name = alpha.resolve(a.sym, env)
            counts[name] = counts.get(name, 0) + n
    return Multiset(counts)


def _target(t):
    if isinstance(t, Here):
        return HERE
    if isinstance(t, Disp):
        return Displacement(t.dx, t.dy)
    if isinstance(t, Compass):
        return COMPASS[t.direction]
    if isinstance(t, OutT):
        return Out()
    if isinstance(t, InT):
        return In(t.label)
    raise TypeError(t)


def _messages(msgs, alpha, env) -> tuple[Message, ...]:
    out = []
    for m in msgs:
        payload = _multiset(m.atoms, alpha, env)
        if payload:
            out.append(Message(payload, _target(m.target)))
    return tuple(out)


def _reactants(atoms, alpha, env) -> Multiset:
    ms = _multiset(atoms, alpha, env)
    if not ms:
        raise DslError("rule reactants are empty after expansion", *atoms[0].sym.loc)
    return ms


def _assignments(stmt: RuleStmt, env: Mapping[str, int]):
    """Every binder assignment satisfying the where-clauses, in lexicographic order."""

    def rec(i, cur):
        if i == len(stmt.binders):
            if all(_CMP[c.op](evaluate(c.left, cur), evaluate(c.right, cur)) for c in stmt.conds):
                yield dict(cur)
            return
        b = stmt.binders[i]
        lo, hi = evaluate(b.lo, cur), evaluate(b.hi, cur)
        if hi < lo:
            raise EmptyRange(f"range {lo}..{hi} of {b.var!r} is empty")
        for v in range(lo, hi + 1):
            cur[b.var] = v
            yield from rec(i + 1, cur)
        del cur[b.var]

    return rec(0, dict(env))


def ground_rules(stmt: RuleStmt, alpha: _Alphabet, env: Mapping[str, int]) -> list:
    rules = []
    for a in _assignments(stmt, env):
        r = stmt.rule
        if isinstance(r, PairRuleNode):
            rules.append(PairRule(
                _reactants(r.lhs1, alpha, a), _messages(r.rhs1, alpha, a),
                _reactants(r.lhs2, alpha, a), _messages(r.rhs2, alpha, a),
                tuple(r.orientations),
            ))
        else:
            rules.append(SingleRule(_reactants(r.lhs, alpha, a), _messages(r.rhs, alpha, a)))
    return rules


def expand_families(ast: ModelAst, params: Optional[Mapping[str, int]] = None) -> GroundModel:
    """Instantiate every family; ``params`` override the model's own bindings."""
    env = {p.name: p.value for p in ast.params}
    env.update(params or {})
    alpha = _Alphabet(ast, env)
    membranes = []
    for m in ast.membranes:
        rules = []
        for stmt in m.rules:
            rules.extend(ground_rules(stmt, alpha, env))
        origin = Position(*m.origin)
        membranes.append(MembraneSpec(m.label, m.parent, origin, m.width, m.height, tuple(rules)))
    placements = []
    for pl in ast.placements:
        ms = _multiset(pl.atoms, alpha, env)
        if ms:
            placements.append(GroundPlacement(pl.label, Position(pl.x, pl.y), ms))
    return GroundModel(tuple(alpha.ordinary), tuple(alpha.me), env, tuple(membranes),
                       tuple(placements), alpha.families)


def rule_count(ast: ModelAst, params: Optional[Mapping[str, int]] = None) -> int:
    return expand_families(ast, params).rule_count()
