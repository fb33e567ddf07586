"""Recursive-descent parser for ``.spm`` model files."""
from __future__ import annotations

import re
from typing import NamedTuple

from .ast import (
    Atom,
    BinOp,
    Binder,
    Compass,
    Cond,
    Disp,
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
    PlaceNode,
    RuleStmt,
    SingleRuleNode,
    SymDecl,
    SymRef,
)
from .errors import DslSyntaxError, DuplicateDeclaration, UndeclaredSymbol

KEYWORDS = frozenset(
    {"objects", "me-objects", "param", "membrane", "in", "at", "size", "place", "rule", "pair",
     "forall", "where", "and"}
)
ORIENTATIONS = ("N", "S", "E", "W")
COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<dim>\d+x\d+)
  | (?P<int>\d+)
  | (?P<kw>me-objects\b)
  | (?P<idx>[A-Za-z][A-Za-z0-9_']*?_\{)
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
  | (?P<op>->|\.\.|<=|>=|==|!=|[-+<>=|^@(){},;:.])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "kw":
            tokens.append(Token("ident", m.group(), line, col))
        elif kind == "idx":
            tokens.append(Token("idx", m.group()[:-2], line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "ident")

    def fail(self, expected: str):
        t = self.tok
        raise DslSyntaxError(t.line, t.col, expected, t.text or "end of input")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def integer(self) -> int:
        if self.tok.kind != "int":
            self.fail("an integer")
        v = int(self.tok.text)
        self.i += 1
        return v

    def signed(self) -> int:
        neg = self.accept("-")
        v = self.integer()
        return -v if neg else v

    def name(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail("a name")
        self.i += 1
        return t.text

    # expressions

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Num(int(t.text))
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return Name(t.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail("an expression")

    # symbols and multisets

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind == "idx" or (t.kind == "ident" and t.text not in KEYWORDS)

    def symref(self) -> SymRef:
        t = self.tok
        if t.kind == "idx":
            self.i += 1
            e = self.expr()
            self.expect("}")
            return SymRef(t.text, e, loc=(t.line, t.col))
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return SymRef(t.text, None, loc=(t.line, t.col))
        self.fail("an object symbol")

    def atom(self) -> Atom:
        sym = self.symref()
        if not self.accept("^"):
            return Atom(sym)
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Atom(sym, Num(int(t.text)))
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return Atom(sym, Name(t.text))
        if self.accept("{"):
            e = self.expr()
            self.expect("}")
            return Atom(sym, e)
        self.fail("a multiplicity")

    def atoms(self) -> tuple[Atom, ...]:
        out = [self.atom()]
        while self.starts_atom():
            out.append(self.atom())
        return tuple(out)

    def target(self):
        if self.accept("here"):
            return Here()
        if self.accept("out"):
            return OutT()
        if self.accept("in"):
            return InT(self.integer())
        if self.accept("("):
            dx = self.signed()
            self.expect(",")
            dy = self.signed()
            self.expect(")")
            return Disp(dx, dy)
        t = self.tok
        if t.kind == "ident" and t.text in ORIENTATIONS:
            self.i += 1
            return Compass(t.text)
        self.fail("a target (here, (dx,dy), N, S, E, W, out, in <label>)")

    def products(self) -> tuple[MessageNode, ...]:
        if self.accept("."):
            return ()
        out = []
        while True:
            if self.starts_atom():
                out.append(MessageNode((self.atom(),), Here()))
            elif self.accept("("):
                inner = self.atoms()
                self.expect(")")
                self.expect("@")
                out.append(MessageNode(inner, self.target()))
            else:
                break
        if not out:
            self.fail("products or '.'")
        return tuple(out)

    # rules

    def rule_stmt(self) -> RuleStmt:
        binders, conds = [], []
        if self.accept("forall"):
            while True:
                var = self.name()
                self.expect("in")
                lo = self.expr()
                self.expect("..")
                hi = self.expr()
                binders.append(Binder(var, lo, hi))
                if not self.accept(","):
                    break
            if self.accept("where"):
                while True:
                    left = self.expr()
                    if self.tok.text not in COMPARISONS or self.tok.kind != "op":
                        self.fail("a comparison")
                    op = self.tok.text
                    self.i += 1
                    conds.append(Cond(op, left, self.expr()))
                    if not self.accept("and"):
                        break
            self.expect(":")
        if self.accept("rule"):
            lhs = self.atoms()
            self.expect("->")
            rhs = self.products()
            self.expect(";")
            rule = SingleRuleNode(lhs, rhs)
        elif self.accept("pair"):
            lhs1 = self.atoms()
            self.expect("|")
            lhs2 = self.atoms()
            self.expect("->")
            rhs1 = self.products()
            self.expect("|")
            rhs2 = self.products()
            orient = ORIENTATIONS
            if self.accept("@"):
                seen = []
                while self.tok.kind == "ident" and self.tok.text in ORIENTATIONS:
                    seen.append(self.tok.text)
                    self.i += 1
                if not seen:
                    self.fail("an orientation (N, S, E, W)")
                orient = tuple(o for o in ORIENTATIONS if o in seen)
            self.expect(";")
            rule = PairRuleNode(lhs1, lhs2, rhs1, rhs2, orient)
        else:
            self.fail("'rule', 'pair' or 'forall'")
        return RuleStmt(rule, tuple(binders), tuple(conds))

    # statements

    def decls(self) -> list[SymDecl]:
        out = []
        while self.tok.kind in ("ident", "idx") and not self.at(";"):
            t = self.tok
            if t.kind == "idx":
                self.i += 1
                lo = self.expr()
                self.expect("..")
                hi = self.expr()
                self.expect("}")
                out.append(SymDecl(t.text, lo, hi))
            else:
                out.append(SymDecl(self.name()))
        self.expect(";")
        return out

    def membrane(self) -> MembraneNode:
        label = self.integer()
        parent, origin = None, (0, 0)
        if self.accept("in"):
            parent = self.integer()
            self.expect("at")
            self.expect("(")
            ox = self.integer()
            self.expect(",")
            oy = self.integer()
            self.expect(")")
            origin = (ox, oy)
        self.expect("size")
        if self.tok.kind != "dim":
            self.fail("a size like 3x3")
        w, h = (int(v) for v in self.tok.text.split("x"))
        self.i += 1
        self.expect("{")
        rules = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("'}'")
            rules.append(self.rule_stmt())
        self.expect("}")
        return MembraneNode(label, w, h, parent, origin, tuple(rules))

    def model(self) -> ModelAst:
        objects, me_objects, params, membranes, places = [], [], [], [], []
        while self.tok.kind != "eof":
            if self.accept("objects"):
                objects.extend(self.decls())
            elif self.accept("me-objects"):
                me_objects.extend(self.decls())
            elif self.accept("param"):
                name = self.name()
                self.expect("=")
                params.append(ParamNode(name, self.integer()))
                self.expect(";")
            elif self.accept("membrane"):
                membranes.append(self.membrane())
            elif self.accept("place"):
                atoms = self.atoms()
                self.expect("at")
                label = self.integer()
                self.expect(":")
                self.expect("(")
                x = self.integer()
                self.expect(",")
                y = self.integer()
                self.expect(")")
                self.expect(";")
                places.append(PlaceNode(atoms, label, x, y))
            else:
                self.fail("a statement (objects, me-objects, param, membrane, place)")
        return ModelAst(tuple(objects), tuple(me_objects), tuple(params), tuple(membranes), tuple(places))


def _symrefs(ast: ModelAst):
    def from_atoms(atoms):
        for a in atoms:
            yield a.sym

    def from_msgs(msgs):
        for m in msgs:
            yield from from_atoms(m.atoms)

    for mem in ast.membranes:
        for stmt in mem.rules:
            r = stmt.rule
            if isinstance(r, SingleRuleNode):
                yield from from_atoms(r.lhs)
                yield from from_msgs(r.rhs)
            else:
                yield from from_atoms(r.lhs1)
                yield from from_atoms(r.lhs2)
                yield from from_msgs(r.rhs1)
                yield from from_msgs(r.rhs2)
    for pl in ast.placements:
        yield from from_atoms(pl.atoms)


def check_declarations(ast: ModelAst) -> None:
    plain: set[str] = set()
    families: set[str] = set()
    for decl in ast.objects + ast.me_objects:
        bucket = families if decl.indexed else plain
        if decl.base in bucket:
            raise DuplicateDeclaration(f"symbol {decl.base!r} declared twice")
        bucket.add(decl.base)
    names = [p.name for p in ast.params]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise DuplicateDeclaration(f"parameter {sorted(dup)[0]!r} declared twice")
    for ref in _symrefs(ast):
        ok = ref.base in (families if ref.index is not None else plain)
        if not ok:
            kind = "indexed family" if ref.index is not None else "symbol"
            raise UndeclaredSymbol(f"undeclared {kind} {ref.base!r}", *ref.loc)


def parse(text: str) -> ModelAst:
    ast = _Parser(text).model()
    check_declarations(ast)
    return ast
