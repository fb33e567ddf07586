"""State dumps (JSON), density grids (CSV) and ASCII renders."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from typing import Optional

import numpy as np

from .core import MembraneTree
from .engine.system import Configuration, System

DECILE_CHARS = " .:-=+*#%@"


def model_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def membranes_json(tree: MembraneTree) -> list[dict]:
    out = []
    for label in sorted(tree.specs):
        spec = tree.specs[label]
        out.append({
            "label": label,
            "parent": spec.parent,
            "origin": [spec.origin[0], spec.origin[1]],
            "size": [spec.width, spec.height],
        })
    return out


def state_dump(config: Configuration, seed: int = 0, digest: str = "") -> dict:
    cells = []
    for p, contents in sorted(config.cells.items(), key=lambda kv: (kv[0].y, kv[0].x)):
        cells.append({
            "x": p.x,
            "y": p.y,
            "ordinary": dict(contents.ordinary.items()),
            "me": contents.me,
        })
    return {
        "step": config.step,
        "membranes": membranes_json(config.tree),
        "cells": cells,
        "emitted": dict(config.emitted.items()),
        "seed": seed,
        "model_digest": digest,
    }


def dumps_state(config: Configuration, seed: int = 0, digest: str = "") -> str:
    return json.dumps(state_dump(config, seed, digest), sort_keys=True, indent=1) + "\n"


def load_state(data, system: System) -> Configuration:
    """Rebuild a configuration of ``system`` from a dump (dict or JSON text)."""
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    if data["membranes"] != membranes_json(system.tree):
        raise ValueError("dump was taken on a different membrane structure")
    cells = {}
    for cell in data["cells"]:
        ms = dict(cell["ordinary"])
        if cell["me"] is not None:
            ms[cell["me"]] = ms.get(cell["me"], 0) + 1
        cells[(cell["x"], cell["y"])] = ms
    return system.configuration(cells, step=data["step"], emitted=data["emitted"])


# density grids: row i of the CSV holds y = i


def read_density(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(v.strip() for v in r)]
    try:
        grid = [[int(v) for v in row] for row in rows]
    except ValueError as e:
        raise ValueError(f"density values must be natural numbers: {e}") from None
    widths = {len(r) for r in grid}
    if len(widths) > 1:
        raise ValueError("density rows have different lengths")
    return np.array(grid, dtype=np.int64).reshape(len(grid), widths.pop() if widths else 0)


def write_density(grid) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(grid).tolist():
        writer.writerow(row)
    return buf.getvalue()


def render_density(grid, c_max: int) -> str:
    """One character per cell by density decile; the top line is the highest y."""
    grid = np.asarray(grid)
    lines = []
    for row in grid[::-1].tolist():
        lines.append("".join(DECILE_CHARS[min(9, (10 * int(c)) // c_max)] for c in row))
    return "\n".join(lines) + "\n"


def render_grid(config: Configuration, symbols: Optional[dict] = None) -> str:
    """Glyph per cell: ME objects by initial letter, '*' for other objects, '.' for empty."""
    sysm = config.system
    symbols = symbols or {}
    owner = config.tree.owner_grid
    lines = []
    for y in range(sysm.height - 1, -1, -1):
        chars = []
        for x in range(sysm.width):
            c = config.cell((x, y))
            if c.me:
                chars.append(symbols.get(c.me, c.me[0]))
            elif c.ordinary:
                chars.append("*")
            else:
                chars.append("." if owner[y, x] == 1 else ":")
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"
