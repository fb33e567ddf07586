"""Canonical text for a ModelAst; ``parse(render(ast)) == ast``."""
from __future__ import annotations

from .ast import (
    Atom,
    BinOp,
    Compass,
    Disp,
    Here,
    InT,
    MessageNode,
    ModelAst,
    Name,
    Num,
    OutT,
    PairRuleNode,
    RuleStmt,
    SymDecl,
)

ORIENTATIONS = ("N", "S", "E", "W")


def render_expr(e) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Name):
        return e.id
    right = render_expr(e.right)
    if isinstance(e.right, BinOp):
        right = f"({right})"
    return f"{render_expr(e.left)}{e.op}{right}"


def render_atom(a: Atom) -> str:
    sym = a.sym.base if a.sym.index is None else f"{a.sym.base}_{{{render_expr(a.sym.index)}}}"
    c = a.count
    if c == Num(1):
        return sym
    if isinstance(c, Num):
        return f"{sym}^{c.value}"
    if isinstance(c, Name):
        return f"{sym}^{c.id}"
    return f"{sym}^{{{render_expr(c)}}}"


def render_atoms(atoms) -> str:
    return " ".join(render_atom(a) for a in atoms)


def render_target(t) -> str:
    if isinstance(t, Here):
        return "here"
    if isinstance(t, OutT):
        return "out"
    if isinstance(t, InT):
        return f"in {t.label}"
    if isinstance(t, Compass):
        return t.direction
    if isinstance(t, Disp):
        return f"({t.dx},{t.dy})"
    raise TypeError(t)


def render_products(msgs: tuple[MessageNode, ...]) -> str:
    if not msgs:
        return "."
    parts = []
    for m in msgs:
        if isinstance(m.target, Here) and len(m.atoms) == 1:
            parts.append(render_atom(m.atoms[0]))
        else:
            parts.append(f"({render_atoms(m.atoms)})@{render_target(m.target)}")
    return " ".join(parts)


def render_rule(stmt: RuleStmt) -> str:
    head = ""
    if stmt.binders:
        head = "forall " + ", ".join(
            f"{b.var} in {render_expr(b.lo)}..{render_expr(b.hi)}" for b in stmt.binders
        )
        if stmt.conds:
            head += " where " + " and ".join(
                f"{render_expr(c.left)} {c.op} {render_expr(c.right)}" for c in stmt.conds
            )
        head += ": "
    r = stmt.rule
    if isinstance(r, PairRuleNode):
        orient = " ".join(o for o in ORIENTATIONS if o in r.orientations)
        body = (f"pair {render_atoms(r.lhs1)} | {render_atoms(r.lhs2)} -> "
                f"{render_products(r.rhs1)} | {render_products(r.rhs2)} @ {orient};")
    else:
        body = f"rule {render_atoms(r.lhs)} -> {render_products(r.rhs)};"
    return head + body


def _decl(d: SymDecl) -> str:
    if not d.indexed:
        return d.base
    return f"{d.base}_{{{render_expr(d.lo)}..{render_expr(d.hi)}}}"


def render(ast: ModelAst) -> str:
    lines = []
    if ast.objects:
        lines.append("objects " + " ".join(_decl(d) for d in ast.objects) + ";")
    if ast.me_objects:
        lines.append("me-objects " + " ".join(_decl(d) for d in ast.me_objects) + ";")
    for p in ast.params:
        lines.append(f"param {p.name} = {p.value};")
    for m in ast.membranes:
        lines.append("")
        where = "" if m.parent is None else f" in {m.parent} at ({m.origin[0]},{m.origin[1]})"
        lines.append(f"membrane {m.label}{where} size {m.width}x{m.height} {{")
        for stmt in m.rules:
            lines.append("  " + render_rule(stmt))
        lines.append("}")
    if ast.placements:
        lines.append("")
    for pl in ast.placements:
        lines.append(f"place {render_atoms(pl.atoms)} at {pl.label}:({pl.x},{pl.y});")
    return "\n".join(lines).lstrip("\n") + "\n"
