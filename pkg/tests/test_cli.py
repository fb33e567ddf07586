import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np

from spatialp import cli
from spatialp.bone import DATA
from spatialp.cli import main
from spatialp.dsl import load
from spatialp.engine import EngineParams, SelectionFailure, advance, run
from spatialp.rng import SplitRng
from spatialp.serialize import load_state, read_density, render_density, write_density

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "statedump.schema.json").read_text())
DEMO = str(DATA / "demo.spm")
MICRO = str(DATA / "micro.spm")


def write(path, text):
    path.write_text(text)
    return str(path)


def no_sweep(config, rng):
    return advance(config, rng, sweep=False)


# validate


def test_validate_bundled(capsys):
    for name in ("micro.spm", "macro.spm", "demo.spm"):
        assert main(["validate", str(DATA / name)]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_adjacent_siblings(tmp_path, capsys):
    path = write(tmp_path / "adj.spm", "objects a;\nmembrane 1 size 12x5 {}\n"
                 "membrane 2 in 1 at (1,1) size 3x3 {}\nmembrane 3 in 1 at (4,1) size 2x2 {}\n")
    assert main(["validate", path]) == 2
    assert "AdjacencyViolation" in capsys.readouterr().err


def test_validate_errors(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.spm")]) == 3
    path = write(tmp_path / "bad.spm", "objects a;\nmembrane 1 size 2x2 {\n  rule a -> (b)@here;\n}\n")
    assert main(["validate", path]) == 1
    assert ":3:" in capsys.readouterr().err
    path = write(tmp_path / "place.spm", "objects a;\nmembrane 1 size 2x2 {}\nplace a at 1:(5,5);\n")
    assert main(["validate", path]) == 2


# run


def test_run_dumps_validate_and_reload(tmp_path, capsys):
    out = tmp_path / "d"
    assert main(["run", DEMO, "--steps", "7", "--seed", "3", "--dump", str(out), "--dump-every", "3"]) == 0
    printed = capsys.readouterr().out
    assert "final step: 7" in printed and "seed: 3" in printed and "emitted:" in printed
    assert sorted(p.name for p in out.iterdir()) == ["step_0.json", "step_3.json", "step_6.json", "step_7.json"]
    ground = load(DEMO)
    trace = run(ground.initial_configuration(), EngineParams(seed=3, max_steps=7), SplitRng(3))
    for i in (0, 3, 6, 7):
        data = json.loads((out / f"step_{i}.json").read_text())
        jsonschema.validate(data, SCHEMA)
        assert data["seed"] == 3 and len(data["model_digest"]) == 64
        cfg = load_state(data, ground.system())
        assert cfg == trace.configurations[i]
        assert cfg.emitted == trace.configurations[i].emitted


def test_run_zero_steps_dumps_initial(tmp_path):
    out = tmp_path / "z"
    assert main(["run", DEMO, "--steps", "0", "--dump", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["step_0.json"]
    ground = load(DEMO)
    assert load_state((out / "step_0.json").read_text(), ground.system()) == ground.initial_configuration()


def test_run_quiescence_without_signal(capsys):
    assert main(["run", MICRO, "--quiescence"]) == 0
    assert "final step: 0" in capsys.readouterr().out


def test_run_needs_steps(capsys):
    assert main(["run", DEMO]) == 1


def test_run_engine_failure(monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise SelectionFailure("no valid selection")

    monkeypatch.setattr(cli, "run", broken)
    assert main(["run", DEMO, "--steps", "2"]) == 4
    assert "engine failure" in capsys.readouterr().err


def test_run_unwritable_dump(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", DEMO, "--steps", "1", "--dump", str(blocker / "sub")]) == 3


def test_run_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", MICRO, "--steps", "3", "--seed", "7", "--dump", str(tmp_path / name)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


# oracle-check


def test_oracle_check_demo(capsys):
    assert main(["oracle-check", DEMO, "--steps", "3", "--samples", "200"]) == 0
    out = capsys.readouterr().out
    assert "checked 600 steps" in out


def test_oracle_check_catches_no_sweep_stub(capsys):
    assert main(["oracle-check", DEMO, "--steps", "3", "--samples", "200"], step_fn=no_sweep) == 5
    assert "repro seed" in capsys.readouterr().err


def test_oracle_check_too_large(tmp_path, capsys):
    text = (DATA / "macro.spm").read_text()
    text += "".join(f"place c^6 a at 1:({x},{y});\n" for x in range(0, 25, 3) for y in range(0, 25, 3))
    assert main(["oracle-check", write(tmp_path / "big.spm", text), "--steps", "1", "--samples", "1"]) == 6


# bone


def bone(tmp_path, name, *args):
    out = tmp_path / name
    code = main(["bone", "--out", str(out), *args])
    return code, out


def test_bone_without_stimuli_keeps_density(tmp_path):
    params = write(tmp_path / "p.txt", "p_g = 0\np_h = 0\n")
    density = np.random.default_rng(2).integers(0, 101, (25, 25))
    dens = write(tmp_path / "d.csv", write_density(density))
    code, out = bone(tmp_path, "o", "--params", params, "--density", dens, "--cycles", "3", "--render")
    assert code == 0
    assert (out / "cycle_3_density.csv").read_text() == Path(dens).read_text()
    assert (out / "cycle_0_render.txt").read_text() == render_density(density, 100)
    report = json.loads((out / "report.json").read_text())
    assert [c["activated"] for c in report["cycles"]] == [[], [], []]


def test_bone_uniform_surface_activation(tmp_path):
    params = write(tmp_path / "p.txt", "MAX_SIM_BMU = 5\n")
    dens = write(tmp_path / "d.csv", write_density(np.full((25, 25), 6)))
    code, out = bone(tmp_path, "o", "--params", params, "--density", dens, "--cycles", "2", "--seed", "1")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 1
    for cyc in report["cycles"]:
        before = np.array(cyc["c_before"])
        surface = {(x, y) for x, y in cyc["stimulated"] if 5 <= before[y, x] < 8}
        assert {tuple(a) for a in cyc["activated"]} == surface
    assert report["cycles"][0]["activated"]


def test_bone_errors(tmp_path, capsys):
    dens = write(tmp_path / "d.csv", write_density(np.zeros((3, 4), dtype=int)))
    assert bone(tmp_path, "o", "--density", dens)[0] == 7
    bad = write(tmp_path / "bad.csv", "1,2\nx,3\n")
    assert bone(tmp_path, "o", "--density", bad)[0] == 1
    too_big = write(tmp_path / "big.csv", write_density(np.full((25, 25), 101)))
    assert bone(tmp_path, "o", "--density", too_big)[0] == 1
    params = write(tmp_path / "p.txt", "N_OC = 2\n")
    assert bone(tmp_path, "o", "--params", params)[0] == 1
    assert bone(tmp_path, "o", "--params", str(tmp_path / "nope.txt"))[0] == 3


def test_density_csv_round_trip():
    grid = np.arange(12).reshape(3, 4)
    assert np.array_equal(read_density(write_density(grid)), grid)
    assert render_density([[0, 100], [55, 9]], 100) == "+ \n @\n"


# entry points


def run_module(*args, cwd):
    return subprocess.run([sys.executable, "-m", "spatialp", *args], cwd=cwd, capture_output=True, text=True)


def test_module_entry_point_and_consecutive_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        proc = run_module("bone", "--cycles", "1", "--seed", "4", "--out", name, cwd=tmp_path)
        assert proc.returncode == 0, proc.stderr
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
