"""Syntax tree of ``.spm`` model files.

Nodes are frozen dataclasses so two trees compare structurally. Source
locations are carried for diagnostics but excluded from comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+" or "-"
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Name, BinOp]


@dataclass(frozen=True)
class SymRef:
    base: str
    index: Optional[Expr] = None
    loc: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Atom:
    sym: SymRef
    count: Expr = Num(1)


@dataclass(frozen=True)
class Here:
    pass


@dataclass(frozen=True)
class Disp:
    dx: int
    dy: int


@dataclass(frozen=True)
class Compass:
    direction: str


@dataclass(frozen=True)
class OutT:
    pass


@dataclass(frozen=True)
class InT:
    label: int


TargetNode = Union[Here, Disp, Compass, OutT, InT]


@dataclass(frozen=True)
class MessageNode:
    atoms: tuple[Atom, ...]
    target: TargetNode = Here()


@dataclass(frozen=True)
class SingleRuleNode:
    lhs: tuple[Atom, ...]
    rhs: tuple[MessageNode, ...]


@dataclass(frozen=True)
class PairRuleNode:
    lhs1: tuple[Atom, ...]
    lhs2: tuple[Atom, ...]
    rhs1: tuple[MessageNode, ...]
    rhs2: tuple[MessageNode, ...]
    orientations: tuple[str, ...] = ("N", "S", "E", "W")


@dataclass(frozen=True)
class Binder:
    var: str
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class Cond:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class RuleStmt:
    rule: Union[SingleRuleNode, PairRuleNode]
    binders: tuple[Binder, ...] = ()
    conds: tuple[Cond, ...] = ()


@dataclass(frozen=True)
class SymDecl:
    """A plain symbol, or an indexed family ``base_{lo..hi}``."""

    base: str
    lo: Optional[Expr] = None
    hi: Optional[Expr] = None

    @property
    def indexed(self) -> bool:
        return self.lo is not None


@dataclass(frozen=True)
class ParamNode:
    name: str
    value: int


@dataclass(frozen=True)
class MembraneNode:
    label: int
    width: int
    height: int
    parent: Optional[int] = None
    origin: tuple[int, int] = (0, 0)
    rules: tuple[RuleStmt, ...] = ()


@dataclass(frozen=True)
class PlaceNode:
    atoms: tuple[Atom, ...]
    label: int
    x: int
    y: int


@dataclass(frozen=True)
class ModelAst:
    objects: tuple[SymDecl, ...] = ()
    me_objects: tuple[SymDecl, ...] = ()
    params: tuple[ParamNode, ...] = ()
    membranes: tuple[MembraneNode, ...] = ()
    placements: tuple[PlaceNode, ...] = ()
