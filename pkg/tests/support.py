"""Shared helpers: random small systems and micro-model invariant trackers."""
from __future__ import annotations

import random

import numpy as np
from dataclasses import dataclass, field

from spatialp.core import (
    COMPASS,
    HERE,
    Displacement,
    In,
    MembraneSpec,
    Message,
    Multiset,
    Out,
    PairRule,
    Position,
    SingleRule,
    validate_tree,
)
from spatialp.engine import System

ORDINARY = ("a", "b")
ME = ("X", "Y")


def _reactants(rnd: random.Random) -> Multiset:
    pool = ORDINARY * 3 + ME
    return Multiset(rnd.choice(pool) for _ in range(rnd.randint(1, 2)))


def _messages(rnd: random.Random, label: int, has_child: bool) -> tuple[Message, ...]:
    targets = [HERE, *COMPASS.values(), Displacement(rnd.randint(-2, 2), rnd.randint(-2, 2)), Out()]
    if label == 1 and has_child:
        targets.append(In(2))
    out = []
    for _ in range(rnd.randint(0, 2)):
        payload = Multiset(rnd.choice(ORDINARY * 2 + ME) for _ in range(rnd.randint(1, 2)))
        out.append(Message(payload, rnd.choice(targets)))
    return tuple(out)


def random_system(rnd: random.Random):
    """A system on a grid of at most 3x3 with at most 3 rules, one of them a pair
    rule mentioning an ME symbol, and at most 5 objects per cell."""
    w, h = rnd.randint(1, 3), rnd.randint(1, 3)
    has_child = w == 3 and h == 3 and rnd.random() < 0.5
    labels = [1, 2] if has_child else [1]
    n_rules = rnd.randint(1, 3)
    rules = {label: [] for label in labels}
    for i in range(n_rules):
        label = rnd.choice(labels)
        if i == 0:
            r1, r2 = _reactants(rnd), _reactants(rnd)
            p1, p2 = _messages(rnd, label, has_child), _messages(rnd, label, has_child)
            if not any(s in ME for ms in (r1, r2) for s in ms) and not any(
                    s in ME for m in p1 + p2 for s in m.payload):
                r2 = r2 + {rnd.choice(ME): 1}
            dirs = [d for d in "NSEW" if rnd.random() < 0.5] or [rnd.choice("NSEW")]
            rules[label].append(PairRule(r1, p1, r2, p2, tuple(dirs)))
        else:
            rules[label].append(SingleRule(_reactants(rnd), _messages(rnd, label, has_child)))
    specs = [MembraneSpec(1, None, Position(0, 0), w, h, tuple(rules[1]))]
    if has_child:
        specs.append(MembraneSpec(2, 1, Position(1, 1), 1, 1, tuple(rules[2])))
    system = System(validate_tree(specs), ORDINARY, ME)
    cells = {}
    for y in range(h):
        for x in range(w):
            ms = {}
            budget = rnd.randint(0, 5)
            if budget and rnd.random() < 0.4:
                ms[rnd.choice(ME)] = 1
                budget -= 1
            for _ in range(budget):
                s = rnd.choice(ORDINARY)
                ms[s] = ms.get(s, 0) + 1
            if ms:
                cells[(x, y)] = ms
    return system.configuration(cells)


# micro-model trackers


def pc_weight(config, params) -> int:
    """Pre-osteoclast mass: Pc counts 1, C_h counts h, Oc_z counts a full fusion."""
    system = config.system
    weights = []
    for name in system.species:
        if name == "Pc":
            weights.append(1)
        elif name.startswith("C_"):
            weights.append(int(name[2:]))
        elif name.startswith("Oc_"):
            weights.append(params.oc_fusion)
        else:
            weights.append(0)
    totals = config.counts.sum(axis=0)
    return sum(int(t) * w for t, w in zip(totals.tolist(), weights) if w)


def osteoclasts(config) -> dict:
    """Position -> removal count z of every Oc_z."""
    system = config.system
    out = {}
    for s, name in enumerate(system.species):
        if name.startswith("Oc_"):
            for c in np.flatnonzero(config.counts[:, s]):
                out[system.position(int(c))] = int(name[3:])
    return out


def is_release(rule) -> bool:
    return isinstance(rule, SingleRule) and set(rule.reactants) == {"s"} and any(
        "Pc" in m.payload for m in rule.products)


def is_death(rule) -> bool:
    return isinstance(rule, PairRule) and any("o" in m.payload for m in rule.products2)


def is_resorption(rule) -> bool:
    return (isinstance(rule, PairRule) and set(rule.reactants1) <= {"Oy", "C"}
            and any(n.startswith("Oc_") for n in rule.reactants2))


_KINDS: dict = {}


def rule_kind(rule) -> str:
    """Classify a micro-model rule: release, fusion, move, resorb, death or other."""
    key = id(rule)
    if key not in _KINDS:
        if is_release(rule):
            kind = "release"
        elif is_resorption(rule):
            kind = "death" if is_death(rule) else "resorb"
        elif isinstance(rule, SingleRule) and len(rule.reactants) == 1 and \
                next(iter(rule.reactants)).startswith("Oc_"):
            kind = "move"
        elif any(n.startswith("Oc_") for msg in (rule.products if isinstance(rule, SingleRule)
                                                 else rule.products1) for n in msg.payload):
            kind = "fusion"
        else:
            kind = "other"
        _KINDS[key] = (kind, rule)  # keep the rule alive so its id stays unique
    return _KINDS[key][0]


def step_counts(selection, system) -> dict:
    """Applications per rule kind in one step."""
    out: dict = {}
    for t, m in zip(selection.template_ids, selection.multiplicities):
        kind = rule_kind(system.templates[t].rule)
        out[kind] = out.get(kind, 0) + m
    return out


@dataclass
class Lineage:
    ident: int
    position: Position
    removed: int = 0
    dead: bool = False


@dataclass
class LineageTracker:
    """Follows every osteoclast from fusion to death through the applied instances."""

    params: object
    alive: dict = field(default_factory=dict)  # position -> Lineage
    finished: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    count: int = 0

    def observe(self, before, selection, after) -> None:
        system = before.system
        budget = self.params.oc_budget
        moves = {}
        for inst, m in selection.instances(system):
            kind = rule_kind(inst.rule)
            if kind == "move":
                moves[inst.anchor] = (inst.placements[0].dest, 0, False)
            elif kind in ("resorb", "death"):
                dead = kind == "death"
                moves[inst.second] = (None if dead else inst.anchor, 1, dead)
            elif kind == "fusion":
                if m != 1:
                    self.errors.append(f"step {before.step}: fusion applied {m} times in one cell")
                self.count += 1
                lin = Lineage(self.count, inst.anchor)
                moves[("new", self.count)] = (inst.anchor, 0, False, lin)
        placed = []
        for key, move in moves.items():
            if key[0] == "new":
                dest, _, _, lin = move
            else:
                lin = self.alive.pop(key, None)
                if lin is None:
                    self.errors.append(f"step {before.step}: osteoclast at {key} has no lineage")
                    continue
                dest, removed, dead = move
                lin.removed += removed
                if dead:
                    lin.dead = True
                    self.finished.append(lin)
                    if lin.removed != budget:
                        self.errors.append(f"lineage {lin.ident} died after {lin.removed} removals")
                    continue
            lin.position = dest
            placed.append(lin)
        for lin in placed:
            if lin.position in self.alive:
                self.errors.append(f"step {before.step}: two osteoclasts at {lin.position}")
            self.alive[lin.position] = lin
        # every Oc_z in the new configuration is an alive lineage with z removals
        seen = osteoclasts(after)
        expected = {p: lin.removed for p, lin in self.alive.items()}
        if seen != expected:
            self.errors.append(f"step {after.step}: osteoclasts {seen} but lineages {expected}")

    @property
    def completed(self) -> int:
        return len(self.finished)


def mineral_total(config) -> int:
    system = config.system
    return int(config.counts[:, [system.index["Oy"], system.index["C"]]].sum())
