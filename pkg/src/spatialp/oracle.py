"""Exhaustive successor enumeration for small systems.

The oracle does not use the engine's compiled templates or kernels: it
re-derives rule instances from the membrane geometry and enumerates every
multiset of instances depth first. It is meant for desk-sized systems and
refuses anything larger than its limits.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    COMPASS,
    Displacement,
    In,
    NotAdjacentToChild,
    NotAdjacentToEdge,
    Out,
    Position,
    SingleRule,
    SpatialPError,
    region_of,
    route_in,
    route_out,
)
from .engine.system import Configuration


class TooLarge(SpatialPError):
    pass


@dataclass(frozen=True)
class Limits:
    max_instances: int = 24
    max_branches: int = 200_000
    prune: bool = True  # skip partial selections that provably cannot be maximal


@dataclass(frozen=True)
class OracleInstance:
    membrane: int
    rule_index: int
    anchor: Position
    second: Optional[Position]
    consume: tuple  # ((position, {name: n}), ...)
    produce: tuple  # ((position or None, {name: n}), ...)


@dataclass
class SuccessorSet:
    digests: frozenset
    configurations: dict = field(default_factory=dict)
    selections: int = 0
    instances: int = 0

    def __len__(self):
        return len(self.digests)

    def __contains__(self, config):
        return config.digest() in self.digests


def _landings(tree, label, region, p, msg) -> list[Optional[Position]]:
    t = msg.target
    if isinstance(t, Displacement):
        q = Position(p[0] + t.dx, p[1] + t.dy)
        return [q] if q in region else []
    if isinstance(t, Out):
        try:
            cands = route_out(tree, p, label)
        except NotAdjacentToEdge:
            return []
        return [q if tree.in_bounds(q) else None for q in cands]
    if isinstance(t, In):
        if t.label not in tree.children[label]:
            return []
        try:
            return [route_in(tree, p, t.label)]
        except NotAdjacentToChild:
            return []
    raise TypeError(t)


def _contains(cell: dict, ms) -> bool:
    return all(cell.get(k, 0) >= v for k, v in ms.items())


def oracle_instances(config: Configuration) -> list[OracleInstance]:
    tree = config.tree
    rules = config.system.rules
    cells = {}
    for p, c in config.cells.items():
        d = dict(c.ordinary)
        if c.me:
            d[c.me] = 1
        cells[p] = d
    out = []
    for label in tree.labels:
        region = region_of(tree, label)
        for ri, rule in enumerate(rules[label]):
            for p in sorted(region, key=lambda c: (c.y, c.x)):
                here = cells.get(p, {})
                if isinstance(rule, SingleRule):
                    if not _contains(here, rule.reactants):
                        continue
                    lands = [_landings(tree, label, region, p, m) for m in rule.products]
                    for combo in itertools.product(*lands):
                        prod = tuple((q, dict(m.payload)) for q, m in zip(combo, rule.products))
                        out.append(OracleInstance(label, ri, p, None, ((p, dict(rule.reactants)),), prod))
                    continue
                if not _contains(here, rule.reactants1):
                    continue
                for o in rule.orientations:
                    d = COMPASS[o]
                    q = Position(p.x + d.dx, p.y + d.dy)
                    if q not in region or not _contains(cells.get(q, {}), rule.reactants2):
                        continue
                    lands = [_landings(tree, label, region, p, m) for m in rule.products1]
                    lands += [_landings(tree, label, region, q, m) for m in rule.products2]
                    msgs = rule.products1 + rule.products2
                    for combo in itertools.product(*lands):
                        prod = tuple((dest, dict(m.payload)) for dest, m in zip(combo, msgs))
                        cons = ((p, dict(rule.reactants1)), (q, dict(rule.reactants2)))
                        out.append(OracleInstance(label, ri, p, q, cons, prod))
    return out


def successors(config: Configuration, limits: Limits = Limits()) -> SuccessorSet:
    system = config.system
    me = set(system.me)
    insts = oracle_instances(config)
    if len(insts) > limits.max_instances:
        raise TooLarge(f"{len(insts)} enabled instances exceed the limit of {limits.max_instances}")

    residual: dict[Position, dict[str, int]] = {}
    me_count: dict[Position, int] = {}
    for p, c in config.cells.items():
        residual[p] = dict(c.ordinary)
        if c.me:
            residual[p][c.me] = 1
            me_count[p] = 1

    def me_delta(inst):
        delta: dict[Position, int] = {}
        for pos, ms in inst.consume:
            for k, v in ms.items():
                if k in me:
                    delta[pos] = delta.get(pos, 0) - v
        for pos, ms in inst.produce:
            if pos is None:
                continue
            for k, v in ms.items():
                if k in me:
                    delta[pos] = delta.get(pos, 0) + v
        return delta

    deltas = [me_delta(i) for i in insts]

    # An instance with no ME effect whose reactants no later instance touches
    # stays addable unless it is taken to its limit, so only that branch can
    # end in a maximal selection.
    keys = [{(pos, name) for pos, ms in inst.consume for name in ms} for inst in insts]
    later: set = set()
    forced = [False] * len(insts)
    for i in range(len(insts) - 1, -1, -1):
        forced[i] = limits.prune and not deltas[i] and not (keys[i] & later)
        later |= keys[i]

    def copies(i):
        k = None
        for pos, ms in insts[i].consume:
            cell = residual.get(pos, {})
            for name, v in ms.items():
                c = cell.get(name, 0) // v
                k = c if k is None else min(k, c)
        return k or 0

    def shift(i, m):
        for pos, ms in insts[i].consume:
            cell = residual.setdefault(pos, {})
            for name, v in ms.items():
                cell[name] = cell.get(name, 0) - m * v
        for pos, d in deltas[i].items():
            me_count[pos] = me_count.get(pos, 0) + m * d

    def addable(i):
        if copies(i) < 1:
            return False
        return all(me_count.get(pos, 0) + d <= 1 for pos, d in deltas[i].items())

    result: dict[str, Configuration] = {}
    branches = 0
    n_selections = 0
    chosen = [0] * len(insts)

    def leaf():
        nonlocal n_selections
        if any(v > 1 for v in me_count.values()):
            return
        if any(addable(i) for i in range(len(insts))):
            return
        n_selections += 1
        cells: dict[Position, dict[str, int]] = {p: dict(c) for p, c in residual.items()}
        emitted = dict(config.emitted)
        for i, m in enumerate(chosen):
            if not m:
                continue
            for pos, ms in insts[i].produce:
                target = emitted if pos is None else cells.setdefault(pos, {})
                for name, v in ms.items():
                    target[name] = target.get(name, 0) + m * v
        succ = system.configuration(
            {p: {k: v for k, v in c.items() if v} for p, c in cells.items()},
            step=config.step + 1,
            emitted=emitted,
        )
        result.setdefault(succ.digest(), succ)

    def dfs(i):
        nonlocal branches
        branches += 1
        if branches > limits.max_branches:
            raise TooLarge(f"more than {limits.max_branches} branches")
        if i == len(insts):
            leaf()
            return
        top = copies(i)
        for m in range(top if forced[i] else 0, top + 1):
            chosen[i] = m
            if m:
                shift(i, m)
            dfs(i + 1)
            if m:
                shift(i, -m)
        chosen[i] = 0

    dfs(0)
    for succ in result.values():
        if succ.me_overfull():
            raise AssertionError("oracle produced an ME-invalid successor")
    return SuccessorSet(frozenset(result), result, n_selections, len(insts))


def assert_member(successor_set: SuccessorSet, candidate: Configuration) -> bool:
    return candidate.digest() in successor_set.digests
