"""Compiled Spatial P systems and their configurations.

A :class:`System` is built once per model. Every rule of every membrane
is tried at every anchor cell of the membrane's region (and every allowed
orientation for pair rules); whenever all messages are geometrically
legal from the anchor, one *template* per routing resolution is stored.
Whether a template is enabled in a given configuration then only depends
on reactant presence, which the step code checks in bulk.
"""
from __future__ import annotations

import hashlib
import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..core import (
    COMPASS,
    CellContents,
    Displacement,
    In,
    Kind,
    MembraneTree,
    NotAdjacentToChild,
    Message,
    Multiset,
    Out,
    PairRule,
    Position,
    SingleRule,
    SpatialPError,
    neighbours,
    region_of,
    route_in,
)


class ConfigurationError(SpatialPError):
    pass


class Placement(NamedTuple):
    """Where one product message lands; ``dest`` is None when emitted."""

    payload: Multiset
    target: object
    dest: Optional[Position]


@dataclass(frozen=True)
class RuleInstance:
    membrane: int
    rule_index: int
    rule: object
    anchor: Position
    second: Optional[Position]
    placements: tuple[Placement, ...]

    @property
    def reactants(self) -> dict[Position, Multiset]:
        if self.second is None:
            return {self.anchor: self.rule.reactants}
        return {self.anchor: self.rule.reactants1, self.second: self.rule.reactants2}


def placement_options(tree: MembraneTree, label: int, region, p: Position, msg: Message) -> list[Placement]:
    """All legal landings of ``msg`` sent from ``p`` inside membrane ``label``."""
    t = msg.target
    if isinstance(t, Displacement):
        q = Position(p.x + t.dx, p.y + t.dy)
        return [Placement(msg.payload, t, q)] if q in region else []
    if isinstance(t, Out):
        rect = tree.footprints[label]
        opts = []
        for q in sorted(neighbours(p), key=lambda c: (c.y, c.x)):
            if not rect.contains(q):
                opts.append(Placement(msg.payload, t, q if tree.in_bounds(q) else None))
        return opts
    if isinstance(t, In):
        if t.label not in tree.children.get(label, ()):
            return []
        try:
            return [Placement(msg.payload, t, route_in(tree, p, t.label))]
        except NotAdjacentToChild:
            return []
    raise TypeError(f"unknown target {t!r}")


def _csr(rows: list[list[tuple]], ncols: int, dtype=np.int64):
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(r) for r in rows])
    flat = [v for r in rows for v in r]
    cols = []
    for c in range(ncols):
        cols.append(np.array([v[c] for v in flat], dtype=dtype))
    return ptr, cols


class System:
    """A validated membrane tree, its alphabet and its compiled rules."""

    def __init__(self, tree: MembraneTree, ordinary: Iterable[str], me: Iterable[str]):
        self.tree = tree
        self.ordinary = tuple(ordinary)
        self.me = tuple(me)
        clash = set(self.ordinary) & set(self.me)
        if clash:
            raise ConfigurationError(f"symbols declared both ordinary and ME: {sorted(clash)}")
        self.species = self.ordinary + self.me
        if len(set(self.species)) != len(self.species):
            raise ConfigurationError("duplicate symbol in alphabet")
        self.index = {s: i for i, s in enumerate(self.species)}
        self.is_me = np.array([s in set(self.me) for s in self.species], dtype=bool)
        self.width, self.height = tree.width, tree.height
        self.n_cells = self.width * self.height
        self.n_species = len(self.species)
        self.rules = {label: tuple(tree.specs[label].rules) for label in tree.labels}
        for label, rules in self.rules.items():
            for r in rules:
                self._check_symbols(r, label)
        self._compile()

    def kind(self, name: str) -> Kind:
        return Kind.ME if name in self.me else Kind.ORDINARY

    def cell_index(self, p) -> int:
        return p[1] * self.width + p[0]

    def position(self, idx: int) -> Position:
        return Position(idx % self.width, idx // self.width)

    def _check_symbols(self, rule, label):
        sets = []
        if isinstance(rule, SingleRule):
            sets.append(rule.reactants)
            sets.extend(m.payload for m in rule.products)
        else:
            sets.extend([rule.reactants1, rule.reactants2])
            sets.extend(m.payload for m in rule.products1 + rule.products2)
        for ms in sets:
            for name in ms:
                if name not in self.index:
                    raise ConfigurationError(f"rule in membrane {label} uses unknown symbol {name!r}")

    def _compile(self):
        tree = self.tree
        instances: list[RuleInstance] = []
        for label in tree.labels:
            region = region_of(tree, label)
            cells = sorted(region, key=lambda c: (c.y, c.x))
            for ri, rule in enumerate(self.rules[label]):
                for p in cells:
                    if isinstance(rule, SingleRule):
                        opts = [placement_options(tree, label, region, p, m) for m in rule.products]
                        for combo in itertools.product(*opts):
                            instances.append(RuleInstance(label, ri, rule, p, None, combo))
                    else:
                        for o in rule.orientations:
                            d = COMPASS[o]
                            q = Position(p.x + d.dx, p.y + d.dy)
                            if q not in region:
                                continue
                            opts = [placement_options(tree, label, region, p, m) for m in rule.products1]
                            opts += [placement_options(tree, label, region, q, m) for m in rule.products2]
                            for combo in itertools.product(*opts):
                                instances.append(RuleInstance(label, ri, rule, p, q, combo))
        self.templates: tuple[RuleInstance, ...] = tuple(instances)

        ns = self.n_species
        demand_rows, me_rows, prod_rows = [], [], []
        by_anchor: dict[Position, list[int]] = {}
        for t, inst in enumerate(instances):
            by_anchor.setdefault(inst.anchor, []).append(t)
            dem: dict[tuple[int, int], int] = {}
            me_delta: dict[int, int] = {}
            for pos, ms in inst.reactants.items():
                c = self.cell_index(pos)
                for name, n in ms.items():
                    s = self.index[name]
                    dem[(c, s)] = dem.get((c, s), 0) + n
                    if self.is_me[s]:
                        me_delta[c] = me_delta.get(c, 0) - n
            prods: dict[tuple[int, int], int] = {}
            for pl in inst.placements:
                c = -1 if pl.dest is None else self.cell_index(pl.dest)
                for name, n in pl.payload.items():
                    s = self.index[name]
                    prods[(c, s)] = prods.get((c, s), 0) + n
                    if c >= 0 and self.is_me[s]:
                        me_delta[c] = me_delta.get(c, 0) + n
            demand_rows.append([(c * ns + s, n) for (c, s), n in sorted(dem.items())])
            me_rows.append([(c, v) for c, v in sorted(me_delta.items()) if v])
            prod_rows.append([(c, s, n) for (c, s), n in sorted(prods.items())])
        self.by_anchor = {k: tuple(v) for k, v in by_anchor.items()}

        self.d_ptr, (self.d_flat, self.d_count) = _csr(demand_rows, 2)
        self.e_ptr, (self.e_cell, self.e_delta) = _csr(me_rows, 2)
        self.p_ptr, (self.p_cell, self.p_species, self.p_count) = _csr(prod_rows, 3)
        self.d_first = self.d_ptr[:-1].copy()
        # list mirrors for the pure-Python and big-integer kernel paths
        self.tables_np = (self.d_ptr, self.d_flat, self.d_count, self.e_ptr, self.e_cell, self.e_delta)
        self.tables_list = tuple(a.tolist() for a in self.tables_np)
        inflow = np.zeros(self.n_cells + 1, dtype=object)
        if len(self.p_cell):
            np.add.at(inflow, self.p_cell, self.p_count.astype(object))
        self.max_inflow = int(max(inflow.max(), 0))
        self.i64_limit = (1 << 62) // (1 + self.max_inflow)

    # configurations

    def configuration(self, cells: Mapping = (), step: int = 0, emitted: Optional[Mapping] = None,
                      ) -> Configuration:
        """Build a configuration from ``{position: contents}`` in global coordinates.

        Contents may be a :class:`CellContents`, a mapping of counts or an
        iterable of names.
        """
        acc: dict[tuple[int, int], int] = {}
        items = cells.items() if isinstance(cells, Mapping) else cells
        for p, content in items:
            p = Position(*p)
            if not self.tree.in_bounds(p):
                raise ConfigurationError(f"object placed outside the skin at {tuple(p)}")
            if isinstance(content, CellContents):
                ms = content.ordinary + ({content.me: 1} if content.me else {})
            else:
                ms = Multiset(content)
            c = self.cell_index(p)
            for name, n in ms.items():
                if name not in self.index:
                    raise ConfigurationError(f"unknown symbol {name!r}")
                key = (c, self.index[name])
                acc[key] = acc.get(key, 0) + n
        big = bool(acc) and max(acc.values()) >= self.i64_limit
        counts = np.zeros((self.n_cells, self.n_species), dtype=object if big else np.int64)
        for (c, s), n in acc.items():
            counts[c, s] = n
        cfg = Configuration(self, counts, step, Multiset(emitted or {}))
        bad = cfg.me_overfull()
        if bad:
            raise ConfigurationError(f"more than one ME object at {[tuple(self.position(c)) for c in bad]}")
        return cfg

    def empty(self) -> Configuration:
        return self.configuration({})


class Configuration:
    """Immutable per-cell contents of a system at one step."""

    __slots__ = ("system", "counts", "step", "emitted", "_digest")

    def __init__(self, system: System, counts: np.ndarray, step: int = 0, emitted: Multiset = Multiset()):
        if counts.shape != (system.n_cells, system.n_species):
            raise ConfigurationError("count array does not match the system")
        counts.setflags(write=False)
        self.system = system
        self.counts = counts
        self.step = step
        self.emitted = emitted
        self._digest = None

    @property
    def tree(self) -> MembraneTree:
        return self.system.tree

    def me_overfull(self) -> list[int]:
        me = self.counts[:, self.system.is_me].sum(axis=1)
        return [int(c) for c in np.flatnonzero(me > 1)]

    def cell(self, p) -> CellContents:
        row = self.counts[self.system.cell_index(p)]
        return self._contents(row)

    def _contents(self, row) -> CellContents:
        sysm = self.system
        ordinary = {}
        me = None
        for s in np.flatnonzero(row):
            name = sysm.species[s]
            if sysm.is_me[s]:
                me = name
            else:
                ordinary[name] = int(row[s])
        return CellContents(Multiset(ordinary), me)

    @property
    def cells(self) -> dict[Position, CellContents]:
        nz = np.flatnonzero(self.counts.any(axis=1))
        return {self.system.position(int(c)): self._contents(self.counts[c]) for c in nz}

    def multiset_at(self, p) -> Multiset:
        row = self.counts[self.system.cell_index(p)]
        return Multiset({self.system.species[s]: int(row[s]) for s in np.flatnonzero(row)})

    def total(self) -> Multiset:
        tot = self.counts.sum(axis=0)
        return Multiset({self.system.species[s]: int(tot[s]) for s in np.flatnonzero(tot)})

    def canonical(self) -> tuple:
        sysm = self.system
        order = sorted(range(sysm.n_species), key=lambda s: sysm.species[s])
        cells = []
        for c in np.flatnonzero(self.counts.any(axis=1)):
            row = self.counts[c]
            p = sysm.position(int(c))
            cells.append(((p.y, p.x), tuple((sysm.species[s], int(row[s])) for s in order if row[s])))
        return (self.step, tuple(cells), self.emitted.items())

    def digest(self) -> str:
        if self._digest is None:
            self._digest = hashlib.sha256(repr(self.canonical()).encode()).hexdigest()
        return self._digest

    def with_step(self, step: int) -> Configuration:
        cfg = Configuration(self.system, self.counts, step, self.emitted)
        return cfg

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.tree == other.tree and self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.digest())

    def __repr__(self):
        return f"<Configuration step={self.step} cells={len(self.cells)} emitted={self.emitted}>"
