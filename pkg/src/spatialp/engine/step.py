"""One-step and multi-step evolution under maximal parallelism."""
from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import Multiset, Position, SpatialPError
from ..rng import SplitRng
from . import _kernels
from .system import Configuration, RuleInstance


class SelectionFailure(SpatialPError):
    pass


class Termination(enum.Enum):
    FIXED_STEPS = "fixed"
    QUIESCENCE = "quiescence"


@dataclass(frozen=True)
class EngineParams:
    seed: int = 0
    max_steps: int = 0
    selection_retries: int = 1
    termination: Termination = Termination.FIXED_STEPS

    def __post_init__(self):
        if self.selection_retries < 1:
            raise ValueError("selection_retries must be >= 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")


@dataclass(frozen=True)
class StepSelection:
    """Applied template ids with their multiplicities."""

    template_ids: tuple[int, ...] = ()
    multiplicities: tuple[int, ...] = ()

    def __len__(self):
        return len(self.template_ids)

    def instances(self, system) -> list[tuple[RuleInstance, int]]:
        return [(system.templates[t], m) for t, m in zip(self.template_ids, self.multiplicities)]


@dataclass
class Trace:
    configurations: list[Configuration] = field(default_factory=list)
    selections: list[StepSelection] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)

    @property
    def final(self) -> Configuration:
        return self.configurations[-1]

    def digests(self) -> list[str]:
        return [c.digest() for c in self.configurations]


def _enabled_ids(config: Configuration) -> np.ndarray:
    sysm = config.system
    if not len(sysm.templates):
        return np.zeros(0, dtype=np.int64)
    flat = config.counts.reshape(-1)
    have = np.asarray(flat[sysm.d_flat] >= sysm.d_count, dtype=bool)
    ok = np.logical_and.reduceat(have, sysm.d_first)
    return np.flatnonzero(ok).astype(np.int64)


def _present(config: Configuration, t: int) -> bool:
    sysm = config.system
    flat = config.counts.reshape(-1)
    lo, hi = sysm.d_ptr[t], sysm.d_ptr[t + 1]
    return all(flat[sysm.d_flat[a]] >= sysm.d_count[a] for a in range(lo, hi))


def enabled_instances(config: Configuration, p) -> list[RuleInstance]:
    """Instances anchored at ``p`` whose reactants are all present.

    One instance is returned per routing resolution of its ``out``
    messages; geometric p-enabledness is settled when the system is built.
    """
    sysm = config.system
    p = Position(*p)
    if not sysm.tree.in_bounds(p):
        return []
    return [sysm.templates[t] for t in sysm.by_anchor.get(p, ()) if _present(config, t)]


def is_quiescent(config: Configuration) -> bool:
    return len(_enabled_ids(config)) == 0


def _gather(ptr: np.ndarray, ids: np.ndarray):
    starts = ptr[ids]
    lens = ptr[ids + 1] - starts
    total = int(lens.sum())
    rep = np.repeat(np.arange(len(ids)), lens)
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return offsets + np.arange(total), rep


def _select(config: Configuration, seed: int, kernel, sweep: bool):
    sysm = config.system
    enabled = _enabled_ids(config)
    counts = config.counts
    me_final = counts[:, sysm.is_me].sum(axis=1)
    big = counts.dtype == object or (counts.size and int(counts.max()) >= sysm.i64_limit)
    if big:
        residual = [int(v) for v in counts.reshape(-1).tolist()]
        mef = [int(v) for v in me_final.tolist()]
        mult = kernel.select_obj(enabled.tolist(), sysm, residual, mef, seed, sweep)
        residual = np.array(residual, dtype=object)
        mult = np.array(mult, dtype=object)
    else:
        residual = counts.reshape(-1).astype(np.int64, copy=True)
        mef = np.ascontiguousarray(me_final, dtype=np.int64)
        mult = np.asarray(kernel.select_i64(enabled, sysm, residual, mef, seed, sweep))
    return enabled, mult, residual


def _apply(config: Configuration, enabled, mult, residual) -> tuple[Configuration, StepSelection]:
    sysm = config.system
    ns = sysm.n_species
    sel = np.flatnonzero(mult != 0)
    ids = enabled[sel]
    ms = mult[sel]
    new = residual
    emitted = config.emitted
    if len(ids):
        idx, rep = _gather(sysm.p_ptr, ids)
        amounts = sysm.p_count[idx] * ms[rep]
        cells = sysm.p_cell[idx]
        inside = cells >= 0
        np.add.at(new, cells[inside] * ns + sysm.p_species[idx][inside], amounts[inside])
        if not inside.all():
            out: dict[str, int] = {}
            for s, a in zip(sysm.p_species[idx][~inside].tolist(), amounts[~inside].tolist()):
                name = sysm.species[s]
                out[name] = out.get(name, 0) + int(a)
            emitted = emitted + out
    if new.dtype == object and (not new.size or int(new.max()) < sysm.i64_limit):
        new = new.astype(np.int64)
    counts = new.reshape(sysm.n_cells, ns)
    selection = StepSelection(tuple(int(t) for t in ids.tolist()), tuple(int(m) for m in ms.tolist()))
    return Configuration(sysm, counts, config.step + 1, emitted), selection


def step_seed(rng: SplitRng, step: int, attempt: int = 0) -> int:
    return rng.child(step, attempt).u64()


def advance(config: Configuration, rng: SplitRng, *, kernel=None, retries: int = 1,
            sweep: bool = True) -> tuple[Configuration, StepSelection, int]:
    """Apply one maximal valid selection; returns successor, selection and the seed used."""
    kernel = kernel or _kernels.default_kernel
    for attempt in range(retries):
        seed = step_seed(rng, config.step, attempt)
        enabled, mult, residual = _select(config, seed, kernel, sweep)
        succ, selection = _apply(config, enabled, mult, residual)
        if not succ.me_overfull():
            return succ, selection, seed
    raise SelectionFailure(f"no valid selection found at step {config.step} after {retries} attempt(s)")


def step(config: Configuration, rng: Optional[SplitRng] = None, *, kernel=None) -> Configuration:
    return advance(config, rng or SplitRng(0), kernel=kernel)[0]


def run(config: Configuration, params: EngineParams, rng: Optional[SplitRng] = None,
        observer: Optional[Callable] = None, *, kernel=None, record: bool = True) -> Trace:
    """Evolve ``config``; with ``record=False`` only the final configuration is kept.

    In quiescence mode ``max_steps`` caps the run when positive. A step
    that applies nothing is a fixed point, so later steps only advance the
    counter (and quiescence mode stops there).
    """
    rng = rng or SplitRng(params.seed)
    trace = Trace([config], [], [])
    cur = config
    quiescence = params.termination is Termination.QUIESCENCE
    done = 0
    frozen = False
    while True:
        if params.max_steps and done >= params.max_steps:
            break
        if not quiescence and done >= params.max_steps:
            break
        if quiescence and (frozen or is_quiescent(cur)):
            break
        if frozen:
            seed = step_seed(rng, cur.step) if record else 0
            nxt, selection = cur.with_step(cur.step + 1), StepSelection()
        else:
            nxt, selection, seed = advance(cur, rng, kernel=kernel, retries=params.selection_retries)
            frozen = len(selection) == 0
        if record:
            trace.configurations.append(nxt)
            trace.selections.append(selection)
            trace.seeds.append(seed)
        else:
            trace.configurations[-1:] = [nxt]
        if observer is not None:
            observer(nxt, selection)
        cur = nxt
        done += 1
    return trace


# post-hoc checks, independent of the kernels


@dataclass
class Audit:
    applicable: bool
    valid: bool
    addable: list[RuleInstance]

    @property
    def ok(self) -> bool:
        return self.applicable and self.valid and not self.addable


def _me_delta(inst: RuleInstance, system) -> dict[Position, int]:
    delta: dict[Position, int] = {}
    for pos, ms in inst.reactants.items():
        for name, n in ms.items():
            if name in system.me:
                delta[pos] = delta.get(pos, 0) - n
    for pl in inst.placements:
        if pl.dest is None:
            continue
        for name, n in pl.payload.items():
            if name in system.me:
                delta[pl.dest] = delta.get(pl.dest, 0) + n
    return delta


def _audit_tables(system):
    """Per-template demand and ME-delta entries, rebuilt from the rule instances.

    Returned as CSR pairs: ``(d_ptr, d_idx, d_cnt, e_ptr, e_cell, e_delta)``.
    """
    cached = getattr(system, "_audit", None)
    if cached is not None:
        return cached
    ns = system.n_species
    d_ptr, d_idx, d_cnt, e_ptr, e_cell, e_delta = [0], [], [], [0], [], []
    for inst in system.templates:
        for pos, ms in inst.reactants.items():
            for name, n in ms.items():
                d_idx.append(system.cell_index(pos) * ns + system.index[name])
                d_cnt.append(n)
        for pos, d in _me_delta(inst, system).items():
            if d:
                e_cell.append(system.cell_index(pos))
                e_delta.append(d)
        d_ptr.append(len(d_idx))
        e_ptr.append(len(e_cell))
    tables = tuple(np.array(a, dtype=np.int64) for a in (d_ptr, d_idx, d_cnt, e_ptr, e_cell, e_delta))
    system._audit = tables
    return tables


def _per_template(ptr, values, n_t):
    """Sum ``values`` (one per CSR entry) into one total per template."""
    rep = np.repeat(np.arange(n_t), np.diff(ptr))
    return np.bincount(rep, weights=values, minlength=n_t)


def audit_step(config: Configuration, selection: StepSelection) -> Audit:
    """Check applicability, ME validity and maximality of an applied selection.

    Works from the rule instances themselves, not from the selection
    kernel, so a kernel that stops early or over-commits is caught.
    """
    system = config.system
    d_ptr, d_idx, d_cnt, e_ptr, e_cell, e_delta = _audit_tables(system)
    residual = config.counts.reshape(-1).astype(object)
    me_final = config.counts[:, system.is_me].sum(axis=1).astype(object)
    if len(selection):
        ids = np.array(selection.template_ids, dtype=np.int64)
        mult = np.array([int(m) for m in selection.multiplicities], dtype=object)
        idx, rep = _gather(d_ptr, ids)
        np.subtract.at(residual, d_idx[idx], d_cnt[idx].astype(object) * mult[rep])
        idx, rep = _gather(e_ptr, ids)
        np.add.at(me_final, e_cell[idx], e_delta[idx].astype(object) * mult[rep])
    applicable = bool((residual >= 0).all())
    valid = bool((me_final <= 1).all())
    addable = []
    if applicable:
        n_t = len(system.templates)
        short = _per_template(d_ptr, (residual[d_idx] < d_cnt).astype(float), n_t)
        clash = _per_template(e_ptr, (me_final[e_cell] + e_delta > 1).astype(float), n_t)
        addable = [system.templates[t] for t in np.flatnonzero((short == 0) & (clash == 0))]
    return Audit(applicable, valid, addable)
