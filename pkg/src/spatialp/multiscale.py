"""Coupling of the tissue-scale model with one BMU-scale model per tissue cell.

Each cycle resets the tissue cells, places damage and activation stimuli,
runs the tissue phase, projects every cell down to a BMU configuration,
runs the BMU systems and lifts the result back for activated cells only.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Protocol, Union

import numpy as np

from .bone.models import build_macro, build_micro, membrane2_geometry, mineral_columns
from .bone.params import BoneParams
from .core import SpatialPError
from .engine import Configuration, EngineParams, Termination, run
from .engine.system import System
from .rng import SplitRng


class InvalidState(SpatialPError):
    pass


class GeometryMismatch(SpatialPError):
    pass


class ShapeMismatch(SpatialPError):
    pass


@dataclass(frozen=True)
class MacroCellState:
    c_count: int
    activated: bool = False

    def check(self, params: BoneParams) -> None:
        if not 0 <= self.c_count <= params.c_max:
            raise InvalidState(f"c count {self.c_count} outside 0..{params.c_max}")


class StressField(Protocol):
    def __call__(self, macro: Configuration, cell: int) -> float: ...


@dataclass(frozen=True)
class ConstantField:
    """Damage probability independent of place and state."""

    probability: float

    def __call__(self, macro: Configuration, cell: int) -> float:
        return self.probability


def _round_half_up(num: int, den: int) -> int:
    return (2 * num + den) // (2 * den)


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SplitRng):
        return rng.generator()
    return np.random.default_rng(rng)


# f_down / f_up


@lru_cache(maxsize=8)
def micro_system(params: BoneParams) -> System:
    return build_micro(params).system()


@lru_cache(maxsize=8)
def macro_system(params: BoneParams) -> System:
    return build_macro(params).system()


def mineralized_columns(c_count: int, params: BoneParams) -> int:
    return _round_half_up(mineral_columns(params) * c_count, params.c_max)


def f_down(state: MacroCellState, params: BoneParams, rng, system: Optional[System] = None) -> Configuration:
    """Initial BMU configuration for one tissue cell.

    The leftmost columns are mineralized in proportion to the c count,
    each cell holding an osteocyte with probability ``oy_fraction`` and
    plain mineral otherwise. Activated cells get one starter signal on
    the first free column, halfway up.
    """
    state.check(params)
    system = system or micro_system(params)
    gen = _generator(rng)
    cols = mineralized_columns(state.c_count, params)
    h = params.micro_h
    counts = np.zeros((system.n_cells, system.n_species), dtype=np.int64)
    if cols:
        draws = gen.random((h, cols))
        oy, mineral = system.index["Oy"], system.index["C"]
        ys, xs = np.mgrid[0:h, 0:cols]
        rows = (ys * system.width + xs).ravel()
        species = np.where(draws.ravel() < params.oy_fraction, oy, mineral)
        counts[rows, species] = 1
    if state.activated:
        counts[system.cell_index((cols, h // 2)), system.index["s"]] = 1
    return Configuration(system, counts)


def _check_micro_geometry(config: Configuration, params: BoneParams) -> None:
    tree = config.tree
    origin, size = membrane2_geometry(params)
    fp = tree.footprints.get(2)
    ok = (
        (tree.width, tree.height) == (params.micro_w, params.micro_h)
        and fp is not None
        and (fp.x, fp.y, fp.w, fp.h) == (*origin, *size)
        and {"Oy", "C"} <= set(config.system.index)
    )
    if not ok:
        raise GeometryMismatch("configuration is not on the BMU model geometry")


def mineral_count(config: Configuration) -> int:
    """ME objects Oy or C in membrane 1's region."""
    sysm = config.system
    owner = config.tree.owner_grid.reshape(-1)
    cols = [sysm.index["Oy"], sysm.index["C"]]
    return int(config.counts[owner == 1][:, cols].sum())


def f_up(final: Configuration, params: BoneParams) -> int:
    _check_micro_geometry(final, params)
    capacity = mineral_columns(params) * params.micro_h
    c = _round_half_up(params.c_max * mineral_count(final), capacity)
    return max(0, min(params.c_max, c))


# tissue phase


def macro_initial(density: np.ndarray, params: BoneParams, system: Optional[System] = None) -> Configuration:
    """Every cell reset to its c count plus one activator."""
    system = system or macro_system(params)
    counts = np.zeros((system.n_cells, system.n_species), dtype=np.int64)
    counts[:, system.index["c"]] = np.asarray(density, dtype=np.int64).reshape(-1)
    counts[:, system.index["a"]] = 1
    return Configuration(system, counts)


def place_stimuli(macro: Configuration, field: StressField, p_h: float, rng) -> Configuration:
    if not 0.0 <= p_h <= 1.0:
        raise ValueError("p_h must lie in [0, 1]")
    sysm = macro.system
    gen = _generator(rng)
    n = sysm.n_cells
    u_g = gen.random(n)
    u_h = gen.random(n)
    probs = np.array([field(macro, i) for i in range(n)], dtype=float)
    if ((probs < 0) | (probs > 1)).any():
        raise ValueError("stress field produced a probability outside [0, 1]")
    counts = macro.counts.copy()
    counts[:, sysm.index["g"]] += u_g < probs
    counts[:, sysm.index["h"]] += u_h < p_h
    return Configuration(sysm, counts, macro.step, macro.emitted)


def activated_cells(macro: Configuration) -> np.ndarray:
    return np.flatnonzero(macro.counts[:, macro.system.index["r"]] > 0)


def macro_density(macro: Configuration, params: BoneParams) -> np.ndarray:
    c = macro.counts[:, macro.system.index["c"]]
    return np.asarray(c, dtype=np.int64).reshape(params.macro_h, params.macro_w)


# coupled run


@dataclass
class CycleReport:
    cycle: int
    stimuli_seed: int
    macro_seed: int
    activated: list[list[int]]  # [x, y] pairs in cell order
    c_before: list[list[int]]  # rows indexed by y
    c_after: list[list[int]]
    micro_steps: dict[str, int] = field(default_factory=dict)  # "x,y" -> steps
    micro_seeds: dict[str, int] = field(default_factory=dict)
    stimulated: list[list[int]] = field(default_factory=list)  # cells that received g or h


@dataclass
class CouplingReport:
    seed: int
    params: dict
    cycles: list[CycleReport] = field(default_factory=list)

    @property
    def final_density(self) -> np.ndarray:
        return np.array(self.cycles[-1].c_after, dtype=np.int64) if self.cycles else None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


@dataclass(frozen=True)
class MicroResult:
    cell: int
    c_after: int
    steps: int


def run_micro(params: BoneParams, cell: int, c_count: int, seed: int,
              termination: Termination = Termination.FIXED_STEPS) -> MicroResult:
    """Project one activated cell down, evolve its BMU and lift the result."""
    rng = SplitRng(seed)
    init = f_down(MacroCellState(c_count, True), params, rng.child(0))
    engine = EngineParams(seed=seed, max_steps=params.max_sim_bmu, termination=termination)
    final = run(init, engine, rng.child(1), record=False).final
    return MicroResult(cell, f_up(final, params), final.step)


def _run_micro_task(args) -> MicroResult:
    return run_micro(*args)


def _check_density(density, params: BoneParams) -> np.ndarray:
    grid = np.asarray(density)
    if grid.shape != (params.macro_h, params.macro_w):
        raise ShapeMismatch(f"density grid is {grid.shape}, expected {(params.macro_h, params.macro_w)}")
    grid = grid.astype(np.int64)
    if (grid < 0).any() or (grid > params.c_max).any():
        raise InvalidState(f"densities must lie in 0..{params.c_max}")
    return grid


def run_coupled(params: BoneParams, init_density, field: Optional[StressField] = None,
                cycles: Optional[int] = None, rng: Union[SplitRng, int, None] = None, *,
                workers: int = 0, micro_termination: Termination = Termination.FIXED_STEPS,
                on_cycle: Optional[Callable[[CycleReport], None]] = None) -> CouplingReport:
    """Alternate tissue and BMU phases for ``cycles`` rounds.

    Seeds are derived from (master seed, cycle, cell), so the report does
    not depend on ``workers``.
    """
    cycles = params.max_sim if cycles is None else cycles
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if rng is None:
        rng = SplitRng(params.seed)
    elif isinstance(rng, int):
        rng = SplitRng(rng)
    field = field or ConstantField(params.damage_prob)
    density = _check_density(init_density, params)
    msys = macro_system(params)
    report = CouplingReport(rng.seed, asdict(params))
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for cycle in range(cycles):
            stimuli_seed = rng.child(cycle, 0).u64()
            macro_seed = rng.child(cycle, 1).u64()
            macro = macro_initial(density, params, msys)
            macro = place_stimuli(macro, field, params.activation_prob, SplitRng(stimuli_seed))
            gh = macro.counts[:, [msys.index["g"], msys.index["h"]]].sum(axis=1)
            stimulated = np.flatnonzero(gh > 0)
            phase = EngineParams(seed=macro_seed, max_steps=params.macro_phase_steps)
            macro = run(macro, phase, SplitRng(macro_seed), record=False).final
            active = activated_cells(macro)

            flat = density.reshape(-1)
            tasks = [(params, int(i), int(flat[i]), rng.child(cycle, 2, int(i)).u64(), micro_termination)
                     for i in active]
            if pool is not None:
                results = list(pool.map(_run_micro_task, tasks))
            else:
                results = [_run_micro_task(t) for t in tasks]

            after = density.copy()
            width = params.macro_w
            steps, seeds = {}, {}
            for task, res in zip(tasks, results):
                y, x = divmod(res.cell, width)
                after[y, x] = res.c_after
                steps[f"{x},{y}"] = res.steps
                seeds[f"{x},{y}"] = task[3]
            cyc = CycleReport(
                cycle=cycle,
                stimuli_seed=stimuli_seed,
                macro_seed=macro_seed,
                activated=[[int(i % width), int(i // width)] for i in active],
                c_before=density.tolist(),
                c_after=after.tolist(),
                micro_steps=steps,
                micro_seeds=seeds,
                stimulated=[[int(i % width), int(i // width)] for i in stimulated],
            )
            report.cycles.append(cyc)
            if on_cycle is not None:
                on_cycle(cyc)
            density = after
    finally:
        if pool is not None:
            pool.shutdown()
    return report
