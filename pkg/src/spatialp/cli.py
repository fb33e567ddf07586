"""Command-line front end.

Exit codes: 0 success, 1 syntax or model error, 2 geometry error, 3 I/O
error, 4 engine failure, 5 oracle violation, 6 oracle limit exceeded,
7 density shape mismatch.
"""
from __future__ import annotations

import argparse
import os
import statistics
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

from .bone.params import BoneParams, InvalidParams, parse_params
from .core import GeometryError, SpatialPError
from .dsl import DslError, expand_families, parse, render
from .engine import ConfigurationError, EngineParams, SelectionFailure, Termination, advance, run
from .multiscale import InvalidState, ShapeMismatch, run_coupled
from .oracle import Limits, TooLarge, successors
from .rng import SplitRng
from .serialize import dumps_state, model_digest, read_density, render_density, write_density

OK, SYNTAX, GEOMETRY, IO, ENGINE, VIOLATION, TOO_LARGE, SHAPE = range(8)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CliError(IO, f"cannot read {path}: {e.strerror or e}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise CliError(IO, f"cannot write {path}: {e.strerror or e}") from None


def _mkdir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise CliError(IO, f"cannot create {path}: {e.strerror or e}") from None


@dataclass
class LoadedModel:
    path: str
    text: str
    ground: object
    digest: str

    @property
    def system(self):
        return self.ground.system()

    def initial(self):
        return self.ground.initial_configuration()


def load_model(path: str) -> LoadedModel:
    """Parse, expand and validate a model file, mapping failures to exit codes."""
    text = _read(path)
    try:
        ast = parse(text)
        ground = expand_families(ast)
    except DslError as e:
        raise CliError(SYNTAX, f"{path}:{e}") from None
    try:
        ground.tree
    except GeometryError as e:
        raise CliError(GEOMETRY, f"{path}: {type(e).__name__}: {e}") from None
    try:
        ground.system()
        ground.initial_configuration()
    except GeometryError as e:
        raise CliError(GEOMETRY, f"{path}: {type(e).__name__}: {e}") from None
    except (ConfigurationError, ValueError) as e:
        raise CliError(SYNTAX, f"{path}: {type(e).__name__}: {e}") from None
    return LoadedModel(path, text, ground, model_digest(render(ast)))


# validate


def cmd_validate(args) -> int:
    model = load_model(args.model)
    sysm = model.system
    print(f"{args.model}: ok ({len(sysm.tree.labels)} membranes, {model.ground.rule_count()} ground rules, "
          f"{len(sysm.species)} symbols)")
    return OK


# run


def _emitted_summary(config) -> str:
    if not config.emitted:
        return "emitted: none"
    return "emitted: " + ", ".join(f"{k}={v}" for k, v in config.emitted.items())


def cmd_run(args) -> int:
    if args.steps is None and not args.quiescence:
        raise CliError(SYNTAX, "--steps is required unless --quiescence is given")
    if args.dump_every < 1:
        raise CliError(SYNTAX, "--dump-every must be >= 1")
    model = load_model(args.model)
    init = model.initial()
    if args.dump:
        _mkdir(args.dump)

    def dump(config):
        if args.dump:
            _write(os.path.join(args.dump, f"step_{config.step}.json"),
                   dumps_state(config, args.seed, model.digest))

    dump(init)

    def observer(config, selection):
        if config.step % args.dump_every == 0:
            dump(config)

    params = EngineParams(
        seed=args.seed,
        max_steps=args.steps or 0,
        termination=Termination.QUIESCENCE if args.quiescence else Termination.FIXED_STEPS,
    )
    try:
        final = run(init, params, SplitRng(args.seed), observer, record=False).final
    except (SelectionFailure, SpatialPError) as e:
        raise CliError(ENGINE, f"engine failure: {e}") from None
    if final.step % args.dump_every:
        dump(final)
    print(f"final step: {final.step}")
    print(f"seed: {args.seed}")
    print(_emitted_summary(final))
    return OK


# oracle-check


@dataclass
class OracleReport:
    checked: int = 0
    successor_counts: list = field(default_factory=list)
    violation: Optional[str] = None

    def summary(self) -> str:
        if not self.successor_counts:
            return "checked 0 steps"
        counts = self.successor_counts
        return (f"checked {self.checked} steps, all members: {self.violation is None}; distinct successors "
                f"per step: min {min(counts)}, mean {statistics.fmean(counts):.2f}, max {max(counts)}")


def oracle_check(model: LoadedModel, steps: int, samples: int, seed: int, limits: Limits,
                 step_fn: Callable = advance) -> OracleReport:
    """Step the engine ``samples`` times ``steps`` steps, checking each successor against the oracle.

    Sample ``j`` uses master seed ``seed + j``. ``step_fn`` has the
    signature of :func:`spatialp.engine.advance`.
    """
    report = OracleReport()
    init = model.initial()
    for j in range(samples):
        sample_seed = seed + j
        rng = SplitRng(sample_seed)
        cur = init
        for i in range(steps):
            options = successors(cur, limits)
            nxt = step_fn(cur, rng)[0]
            report.checked += 1
            report.successor_counts.append(len(options))
            if nxt not in options:
                report.violation = (f"violation: sample {j} (repro seed {sample_seed}) step {i}: "
                                    f"engine successor is not in the oracle set of {len(options)}")
                return report
            cur = nxt
    return report


def cmd_oracle_check(args, step_fn: Callable = advance) -> int:
    model = load_model(args.model)
    limits = Limits(max_instances=args.max_instances)
    try:
        report = oracle_check(model, args.steps, args.samples, args.seed, limits, step_fn)
    except TooLarge as e:
        raise CliError(TOO_LARGE, f"oracle limit exceeded: {e}") from None
    except SpatialPError as e:
        raise CliError(ENGINE, f"engine failure: {e}") from None
    print(report.summary())
    if report.violation:
        _err(report.violation)
        return VIOLATION
    return OK


# bone


def default_density(params: BoneParams):
    """A horizontal plate of full mineral with one surface row on each side, marrow elsewhere."""
    import numpy as np

    h = params.macro_h
    grid = np.zeros((h, params.macro_w), dtype=np.int64)
    mid, half = h // 2, max(h // 8, 1)
    grid[max(mid - half, 0): mid + half + 1] = params.c_max
    surface = params.mineral_threshold + params.surface_band // 2
    for y in (mid - half - 1, mid + half + 1):
        if 0 <= y < h:
            grid[y] = surface
    return grid


def cmd_bone(args) -> int:
    try:
        params = parse_params(_read(args.params)) if args.params else BoneParams()
        params = params.replace(seed=args.seed if args.seed is not None else params.seed,
                                rebuild_enabled=(args.rebuild == "on") if args.rebuild else params.rebuild_enabled)
    except InvalidParams as e:
        raise CliError(SYNTAX, f"invalid parameters: {e}") from None
    if args.density:
        try:
            density = read_density(_read(args.density))
        except ValueError as e:
            raise CliError(SYNTAX, f"{args.density}: {e}") from None
    else:
        density = default_density(params)
    cycles = args.cycles if args.cycles is not None else params.max_sim
    _mkdir(args.out)

    def write_cycle(n, grid):
        _write(os.path.join(args.out, f"cycle_{n}_density.csv"), write_density(grid))
        if args.render:
            _write(os.path.join(args.out, f"cycle_{n}_render.txt"), render_density(grid, params.c_max))

    try:
        if density.shape != (params.macro_h, params.macro_w):
            raise ShapeMismatch(f"density grid is {density.shape[0]}x{density.shape[1] if density.ndim > 1 else 0} "
                                f"(rows x columns), expected {params.macro_h}x{params.macro_w}")
        write_cycle(0, density)
        report = run_coupled(params, density, cycles=cycles, rng=SplitRng(params.seed),
                             on_cycle=lambda c: write_cycle(c.cycle + 1, c.c_after))
    except ShapeMismatch as e:
        raise CliError(SHAPE, str(e)) from None
    except InvalidState as e:
        raise CliError(SYNTAX, f"{args.density}: {e}") from None
    except ValueError as e:
        raise CliError(SYNTAX, str(e)) from None
    except SpatialPError as e:
        raise CliError(ENGINE, f"engine failure: {e}") from None
    _write(os.path.join(args.out, "report.json"), report.to_json())
    for c in report.cycles:
        print(f"cycle {c.cycle + 1}: {len(c.activated)} activated cells")
    print(f"seed: {params.seed}")
    return OK


# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spatialp", description="Spatial P system simulator")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and check a model file")
    v.add_argument("model")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="evolve a model and dump states")
    r.add_argument("model")
    r.add_argument("--steps", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--dump", metavar="DIR")
    r.add_argument("--dump-every", type=int, default=1, metavar="K")
    r.add_argument("--quiescence", action="store_true", help="stop when no rule is enabled")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle-check", help="compare engine steps with exhaustive enumeration")
    o.add_argument("model")
    o.add_argument("--steps", type=int, default=3)
    o.add_argument("--samples", type=int, default=100)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--max-instances", type=int, default=Limits().max_instances)
    o.set_defaults(func=cmd_oracle_check)

    b = sub.add_parser("bone", help="coupled tissue/BMU bone remodelling run")
    b.add_argument("--params", metavar="FILE")
    b.add_argument("--density", metavar="FILE")
    b.add_argument("--cycles", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", metavar="DIR", default="bone_out")
    b.add_argument("--rebuild", choices=("on", "off"))
    b.add_argument("--render", action="store_true")
    b.set_defaults(func=cmd_bone)
    return p


def main(argv: Optional[list[str]] = None, *, step_fn: Optional[Callable] = None) -> int:
    """Run the CLI; ``step_fn`` replaces the engine step in ``oracle-check``."""
    args = build_parser().parse_args(argv)
    try:
        if args.func is cmd_oracle_check and step_fn is not None:
            return cmd_oracle_check(args, step_fn)
        return args.func(args)
    except CliError as e:
        _err(str(e))
        return e.code


if __name__ == "__main__":
    sys.exit(main())
