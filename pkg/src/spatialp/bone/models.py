"""Builders for the tissue-scale (macro) and BMU-scale (micro) bone models.

Both builders return a syntax tree first, so the shipped ``.spm`` files can
be checked against them, and a ground model ready for the engine.
"""
from __future__ import annotations

from ..dsl.ast import (
    Atom,
    BinOp,
    Binder,
    Compass,
    Cond,
    Here,
    InT,
    MembraneNode,
    MessageNode,
    ModelAst,
    Name,
    Num,
    OutT,
    PairRuleNode,
    ParamNode,
    RuleStmt,
    SingleRuleNode,
    SymDecl,
    SymRef,
)
from ..dsl.expand import GroundModel, expand_families
from .params import BoneParams

MACRO_ORDINARY = ("c", "a", "b1", "b", "d1", "d", "f", "g", "h", "r")
MICRO_ORDINARY = ("s", "s'", "Pc", "Pb", "o")
MINERAL = ("Oy", "C")


# small constructors keep the rule listings readable

def _expr(v):
    if isinstance(v, int):
        return Num(v)
    if isinstance(v, str):
        return Name(v)
    return v


def _plus(a, b):
    return BinOp("+", _expr(a), _expr(b))


def _minus(a, b):
    return BinOp("-", _expr(a), _expr(b))


def sym(base, count=1, index=None) -> Atom:
    return Atom(SymRef(base, None if index is None else _expr(index)), _expr(count))


def here(*atoms) -> MessageNode:
    return MessageNode(tuple(atoms), Here())


def to(target, *atoms) -> MessageNode:
    return MessageNode(tuple(atoms), target)


def single(lhs, rhs=(), binders=(), conds=()) -> RuleStmt:
    return RuleStmt(SingleRuleNode(tuple(lhs), tuple(rhs)), tuple(binders), tuple(conds))


def pair(lhs1, lhs2, rhs1=(), rhs2=(), orientations=("N", "S", "E", "W"), binders=(), conds=()):
    node = PairRuleNode(tuple(lhs1), tuple(lhs2), tuple(rhs1), tuple(rhs2), tuple(orientations))
    return RuleStmt(node, tuple(binders), tuple(conds))


def forall(var, lo, hi) -> Binder:
    return Binder(var, _expr(lo), _expr(hi))


# macro model

def macro_ast(params: BoneParams = BoneParams()) -> ModelAst:
    low, band = "mineral_threshold", "surface_band"
    rules = (
        single([sym("c", low), sym("a")], [here(sym("b1")), here(sym("d1"))]),
        single([sym("c", band), sym("b1")], [here(sym("c", _plus(band, low))), here(sym("b"))]),
        single([sym("d1")], [here(sym("d"))]),
        single([sym("d"), sym("b")]),
        single([sym("d"), sym("b1")], [here(sym("c", low)), here(sym("f"))]),
        single([sym("f"), sym("g")], [here(sym("r"))]),
        single([sym("f"), sym("h")], [here(sym("r"))]),
    )
    return ModelAst(
        objects=tuple(SymDecl(s) for s in MACRO_ORDINARY),
        params=(ParamNode(low, params.mineral_threshold), ParamNode(band, params.surface_band)),
        membranes=(MembraneNode(1, params.macro_w, params.macro_h, rules=rules),),
    )


def build_macro(params: BoneParams = BoneParams()) -> GroundModel:
    return expand_families(macro_ast(params))


# micro model

def membrane2_geometry(params: BoneParams) -> tuple[tuple[int, int], tuple[int, int]]:
    """Origin and size of the marrow membrane: two columns hugging the right clearance."""
    return (params.micro_w - 3, 1), (2, params.micro_h - 2)


def mineral_columns(params: BoneParams) -> int:
    """Columns of membrane 1 left of membrane 2's clearance margin."""
    (ox, _), _ = membrane2_geometry(params)
    return ox - 1


def micro_ast(params: BoneParams = BoneParams()) -> ModelAst:
    fuse, budget = "oc_fusion", "oc_budget"
    n_oc, n_dc = params.oc_fusion, params.oc_budget
    has_aggregates = n_oc - 1 >= 4
    N, S, E, W = (Compass(d) for d in "NSEW")

    skin = [
        # the activation signal spreads East, enters membrane 2 or leaves the system
        single([sym("s")], [to(N, sym("s")), to(E, sym("s")), to(S, sym("s"))]),
        single([sym("s")], [to(E, sym("s"))]),
        single([sym("s")], [to(InT(2), sym("s"))]),
        single([sym("s")], [to(OutT(), sym("s"))]),
        # pre-osteoclast random walk
        single([sym("Pc")], [here(sym("Pc"))]),
        single([sym("Pc")], [to(N, sym("Pc"))]),
        single([sym("Pc")], [to(S, sym("Pc"))]),
        single([sym("Pc")], [to(W, sym("Pc"))]),
        single([sym("Pc")], [to(E, sym("Pc"))]),
    ]
    if has_aggregates:
        h = forall("h", 4, _minus(fuse, 1))
        skin += [
            single([sym("Pc", "h")], [here(sym("C", index="h"))], binders=[h]),
            pair([sym("Pc", "h1")], [sym("Pc", "h2")], [], [here(sym("C", index=_plus("h1", "h2")))],
                 binders=[forall("h1", 4, _minus(fuse, 1)), forall("h2", 4, _minus(fuse, 1))],
                 conds=[Cond("<", _plus("h1", "h2"), Name(fuse))]),
        ]
        if n_oc - 2 >= 4:
            grow = forall("h", 4, _minus(fuse, 2))
            skin += [
                pair([sym("C", index="h")], [sym("Pc")], [here(sym("C", index=_plus("h", 1)))], [],
                     binders=[grow]),
                single([sym("C", index="h"), sym("Pc")], [here(sym("C", index=_plus("h", 1)))],
                       binders=[grow]),
            ]
        last = _minus(fuse, 1)
        skin += [
            pair([sym("C", index=last)], [sym("Pc")], [here(sym("Oc", index=0))], []),
            single([sym("C", index=last), sym("Pc")], [here(sym("Oc", index=0))]),
        ]
    alive = forall("z", 0, _minus(budget, 1))
    skin.append(single([sym("Oc", index="z")], [to(W, sym("Oc", index="z"))], binders=[alive]))
    # resorption: the osteoclast is the East neighbour of the cell it destroys
    if n_dc >= 2:
        young = forall("z", 0, _minus(budget, 2))
        for mineral in MINERAL:
            skin.append(pair([sym(mineral)], [sym("Oc", index="z")],
                             [here(sym("Oc", index=_plus("z", 1)))], [], ("E",), binders=[young]))
    for mineral in MINERAL:
        skin.append(pair([sym(mineral)], [sym("Oc", index=_minus(budget, 1))], [], [here(sym("o"))],
                         ("E",)))
    if params.rebuild_enabled:
        skin += _rebuild_rules(budget, n_dc)

    marrow = [
        single([sym("s")], [here(sym("s'")), to(OutT(), sym("Pc", "pc_release")),
                            to(OutT(), sym("Pb", "pb_release"))]),
        single([sym("s'"), sym("s")], [here(sym("s'"))]),
        single([sym("s'")], [here(sym("s'")), to(N, sym("s'"))]),
        single([sym("s'")], [here(sym("s'")), to(S, sym("s'"))]),
    ]

    me = [SymDecl("Oy"), SymDecl("C"),
          SymDecl("C", Num(4), _minus(fuse, 1)),
          SymDecl("Oc", Num(0), _minus(budget, 1))]
    if params.rebuild_enabled:
        me.append(SymDecl("Ob", Num(0), _minus(budget, 1)))
    origin, (w2, h2) = membrane2_geometry(params)
    return ModelAst(
        objects=tuple(SymDecl(s) for s in MICRO_ORDINARY),
        me_objects=tuple(me),
        params=(ParamNode("pc_release", params.pc_release), ParamNode("pb_release", params.pb_release),
                ParamNode(fuse, n_oc), ParamNode(budget, n_dc)),
        membranes=(
            MembraneNode(1, params.micro_w, params.micro_h, rules=tuple(skin)),
            MembraneNode(2, w2, h2, parent=1, origin=origin, rules=tuple(marrow)),
        ),
    )


def _rebuild_rules(budget: str, n_dc: int) -> list[RuleStmt]:
    """Bone formation after resorption; not part of the published rule set."""
    N, S, E, W = (Compass(d) for d in "NSEW")
    rules = []
    for mover in ("o", "Pb"):
        rules.append(single([sym(mover)], [here(sym(mover))]))
        for d in (N, S, E, W):
            rules.append(single([sym(mover)], [to(d, sym(mover))]))
    rules.append(pair([sym("o")], [sym("Pb")], [here(sym("Ob", index=0))], []))
    if n_dc >= 2:
        rules.append(single([sym("Ob", index="j")],
                            [here(sym("C")), to(E, sym("Ob", index=_plus("j", 1)))],
                            binders=[forall("j", 0, _minus(budget, 2))]))
    rules.append(single([sym("Ob", index=_minus(budget, 1))], [here(sym("C"))]))
    return rules


def build_micro(params: BoneParams = BoneParams()) -> GroundModel:
    return expand_families(micro_ast(params))
